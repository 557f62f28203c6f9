#include "pbec/hierarchy.hpp"

#include <cmath>

#include "pbec/errors.hpp"

namespace pbec {

namespace {

// Orthogonalize candidates against previous levels, then extract an
// orthonormal basis of the residues with a rank-revealing (column-pivoted)
// Householder QR. Directions whose pivot falls below rank_tol times the
// largest residue are dropped.
Eigen::MatrixXd orthonormalize_level(const std::vector<Eigen::MatrixXd>& prev_levels,
                                     const Eigen::MatrixXd& candidates, double rank_tol) {
    const int nb = static_cast<int>(candidates.rows());
    const int nc = static_cast<int>(candidates.cols());

    double max_cand = 0.0;
    for (int c = 0; c < nc; ++c) max_cand = std::max(max_cand, candidates.col(c).norm());

    Eigen::MatrixXd resid = candidates;
    for (int pass = 0; pass < 2; ++pass)
        for (const auto& V : prev_levels)
            if (V.cols() > 0) resid -= V * (V.transpose() * resid);

    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(resid);
    const auto& R = qr.matrixR();
    const double pivot0 = std::abs(R(0, 0));
    // closure guard: once the span is exhausted, every residue is rounding
    // noise relative to the candidates themselves
    const double drop = std::max(rank_tol * pivot0, 100.0 * 2.3e-16 * max_cand);
    if (pivot0 == 0.0 || pivot0 <= drop * (1.0 - 1e-12)) return Eigen::MatrixXd(nb, 0);
    int r = 0;
    const int kmax = static_cast<int>(std::min(resid.rows(), resid.cols()));
    while (r < kmax && std::abs(R(r, r)) > drop) ++r;
    if (r == 0) return Eigen::MatrixXd(nb, 0);

    Eigen::MatrixXd Q = qr.householderQ() * Eigen::MatrixXd::Identity(nb, r);
    // polish residual overlap with the previous levels left by the first pass
    for (const auto& V : prev_levels)
        if (V.cols() > 0) Q -= V * (V.transpose() * Q);
    // re-orthonormalize the polished block (it is within rounding of
    // orthonormal, one thin-QR pass suffices)
    Eigen::HouseholderQR<Eigen::MatrixXd> qr2(Q);
    Q = qr2.householderQ() * Eigen::MatrixXd::Identity(nb, r);
    (void)nc;
    return Q;
}

} // namespace

HierarchyBasis build_hierarchy(const Scene& scene, int depth, double rank_tol) {
    if (depth < 0) throw ConfigError("hierarchy depth must be >= 0");
    const int nm = scene.n_modes();
    const int nb = scene.n_bins();

    HierarchyBasis b;
    b.depth = depth;

    // level 0: weight vectors w_i = gN row i
    Eigen::MatrixXd seeds = scene.gN.transpose();  // nb x nm
    Eigen::MatrixXd V0 = orthonormalize_level({}, seeds, rank_tol);
    if (V0.cols() == 0)
        throw SolverError("hierarchy level-0 rank collapse: degenerate grid");
    b.levels.push_back(V0);

    for (int k = 0; k < depth; ++k) {
        const Eigen::MatrixXd& Vk = b.levels.back();
        Eigen::MatrixXd cand(nb, nm * Vk.cols());
        for (int i = 0; i < nm; ++i)
            for (int c = 0; c < Vk.cols(); ++c)
                cand.col(i * Vk.cols() + c) =
                    scene.g.row(i).transpose().cwiseProduct(Vk.col(c));
        Eigen::MatrixXd Vnext = orthonormalize_level(b.levels, cand, rank_tol);
        b.levels.push_back(Vnext);
        if (Vnext.cols() == 0) break;  // Krylov closure reached early
    }
    while (static_cast<int>(b.levels.size()) <= depth)
        b.levels.emplace_back(nb, 0);

    b.total_rank = 0;
    for (const auto& V : b.levels) {
        b.offset.push_back(b.total_rank);
        b.rank.push_back(static_cast<int>(V.cols()));
        b.total_rank += static_cast<int>(V.cols());
    }

    b.W0 = scene.gN * b.levels[0];  // (nm x nb)(nb x r0)

    const int L = depth;
    b.H_diag.assign(nm, {});
    b.H_up.assign(nm, {});
    for (int i = 0; i < nm; ++i) {
        Eigen::VectorXd gi = scene.g.row(i).transpose();
        for (int k = 0; k <= L; ++k) {
            Eigen::MatrixXd GiVk =
                b.levels[k].array().colwise() * gi.array();  // G_i V_k
            b.H_diag[i].push_back(b.levels[k].transpose() * GiVk);
            if (k < L) b.H_up[i].push_back(GiVk.transpose() * b.levels[k + 1]);
        }
    }

    b.ones_proj.resize(b.total_rank);
    b.gsrc.resize(b.total_rank, nm);
    Eigen::VectorXd ones = Eigen::VectorXd::Ones(nb);
    for (int k = 0; k <= L; ++k) {
        if (b.rank[k] == 0) continue;
        b.ones_proj.segment(b.offset[k], b.rank[k]) = b.levels[k].transpose() * ones;
        for (int i = 0; i < nm; ++i)
            b.gsrc.block(b.offset[k], i, b.rank[k], 1) =
                b.levels[k].transpose() * scene.g.row(i).transpose();
    }
    return b;
}

Eigen::VectorXd HierarchyBasis::project(const Eigen::VectorXd& field) const {
    Eigen::VectorXd c(total_rank);
    for (size_t k = 0; k < levels.size(); ++k)
        if (rank[k] > 0)
            c.segment(offset[k], rank[k]) = levels[k].transpose() * field;
    return c;
}

Eigen::VectorXd HierarchyBasis::lift(const Eigen::VectorXd& coeffs) const {
    Eigen::VectorXd f = Eigen::VectorXd::Zero(levels[0].rows());
    for (size_t k = 0; k < levels.size(); ++k)
        if (rank[k] > 0)
            f += levels[k] * coeffs.segment(offset[k], rank[k]);
    return f;
}

Eigen::VectorXd HierarchyBasis::drive_from_coeffs(const Eigen::VectorXd& coeffs) const {
    return W0 * coeffs.head(rank[0]);
}

double HierarchyBasis::tridiagonality_defect(const Scene& scene) const {
    double worst = 0.0;
    for (int i = 0; i < scene.n_modes(); ++i) {
        Eigen::VectorXd gi = scene.g.row(i).transpose();
        for (size_t j = 0; j < levels.size(); ++j) {
            for (size_t k = j + 2; k < levels.size(); ++k) {
                if (rank[j] == 0 || rank[k] == 0) continue;
                Eigen::MatrixXd blk =
                    levels[j].transpose() * (levels[k].array().colwise() * gi.array()).matrix();
                worst = std::max(worst, blk.cwiseAbs().maxCoeff());
            }
        }
    }
    return worst;
}

double HierarchyBasis::orthonormality_defect() const {
    double worst = 0.0;
    for (size_t a = 0; a < levels.size(); ++a) {
        for (size_t bI = a; bI < levels.size(); ++bI) {
            if (rank[a] == 0 || rank[bI] == 0) continue;
            Eigen::MatrixXd G = levels[a].transpose() * levels[bI];
            if (a == bI) G -= Eigen::MatrixXd::Identity(rank[a], rank[a]);
            worst = std::max(worst, G.cwiseAbs().maxCoeff());
        }
    }
    return worst;
}

void rhs_hier(const Scene& scene, const HierarchyBasis& basis, const Eigen::VectorXd& n,
              const Eigen::VectorXd& coeffs, double P, Eigen::VectorXd& dn,
              Eigen::VectorXd& dcoeffs) {
    if (coeffs.size() != basis.total_rank)
        throw StateError("hierarchical state has " + std::to_string(coeffs.size()) +
                         " coefficients, basis expects " + std::to_string(basis.total_rank));
    const int nm = scene.n_modes();
    const auto& A = scene.modes.A;
    const auto& E = scene.modes.E;

    Eigen::VectorXd u = basis.drive_from_coeffs(coeffs);
    dn.resize(nm);
    for (int i = 0; i < nm; ++i)
        dn[i] = (n[i] * (E[i] + A[i]) + E[i]) * u[i] - scene.gamma[i] * n[i];

    Eigen::VectorXd beta = A.cwiseProduct(n) + (E.array() * (n.array() + 1.0)).matrix();

    dcoeffs = -(scene.params.Gamma_down + P) * coeffs;
    dcoeffs += P * basis.ones_proj + basis.gsrc * A.cwiseProduct(n);
    const int L = basis.depth;
    for (int i = 0; i < nm; ++i) {
        for (int k = 0; k <= L; ++k) {
            if (basis.rank[k] == 0) continue;
            auto ck = coeffs.segment(basis.offset[k], basis.rank[k]);
            auto dk = dcoeffs.segment(basis.offset[k], basis.rank[k]);
            dk -= beta[i] * (basis.H_diag[i][k] * ck);
            if (k < L && basis.rank[k + 1] > 0)
                dk -= beta[i] * (basis.H_up[i][k] *
                                 coeffs.segment(basis.offset[k + 1], basis.rank[k + 1]));
            if (k > 0 && basis.rank[k - 1] > 0)
                dk -= beta[i] * (basis.H_up[i][k - 1].transpose() *
                                 coeffs.segment(basis.offset[k - 1], basis.rank[k - 1]));
        }
    }
}

Derivative rhs_hier(const Scene& scene, const HierarchyBasis& basis,
                    const SystemState& state, double P) {
    if (state.rep != Representation::Hierarchical)
        throw StateError("rhs_hier requires a hierarchical state");
    Derivative d;
    rhs_hier(scene, basis, state.n, state.excitation, P, d.dn, d.dexcitation);
    return d;
}

Eigen::MatrixXd jacobian_hier_dense(const Scene& scene, const HierarchyBasis& basis,
                                    const Eigen::VectorXd& n, const Eigen::VectorXd& coeffs,
                                    double P) {
    const int nm = scene.n_modes();
    const int R = basis.total_rank;
    const auto& A = scene.modes.A;
    const auto& E = scene.modes.E;
    const int L = basis.depth;

    Eigen::MatrixXd J = Eigen::MatrixXd::Zero(nm + R, nm + R);
    Eigen::VectorXd u = basis.drive_from_coeffs(coeffs);
    Eigen::VectorXd beta = A.cwiseProduct(n) + (E.array() * (n.array() + 1.0)).matrix();

    for (int i = 0; i < nm; ++i) {
        J(i, i) = (E[i] + A[i]) * u[i] - scene.gamma[i];
        J.block(i, nm, 1, basis.rank[0]) =
            ((E[i] + A[i]) * n[i] + E[i]) * basis.W0.row(i);
    }

    // d(dc)/dn_i = -(A_i+E_i) H_i c + A_i gsrc_i
    for (int i = 0; i < nm; ++i) {
        Eigen::VectorXd Hc = Eigen::VectorXd::Zero(R);
        for (int k = 0; k <= L; ++k) {
            if (basis.rank[k] == 0) continue;
            auto ck = coeffs.segment(basis.offset[k], basis.rank[k]);
            Hc.segment(basis.offset[k], basis.rank[k]) += basis.H_diag[i][k] * ck;
            if (k < L && basis.rank[k + 1] > 0)
                Hc.segment(basis.offset[k], basis.rank[k]) +=
                    basis.H_up[i][k] * coeffs.segment(basis.offset[k + 1], basis.rank[k + 1]);
            if (k > 0 && basis.rank[k - 1] > 0)
                Hc.segment(basis.offset[k], basis.rank[k]) +=
                    basis.H_up[i][k - 1].transpose() *
                    coeffs.segment(basis.offset[k - 1], basis.rank[k - 1]);
        }
        J.block(nm, i, R, 1) = -(A[i] + E[i]) * Hc + A[i] * basis.gsrc.col(i);
    }

    // d(dc)/dc = -(Gamma_down+P) I - sum_i beta_i H_i (block tridiagonal)
    Eigen::MatrixXd M = Eigen::MatrixXd::Zero(R, R);
    for (int i = 0; i < nm; ++i) {
        for (int k = 0; k <= L; ++k) {
            if (basis.rank[k] == 0) continue;
            M.block(basis.offset[k], basis.offset[k], basis.rank[k], basis.rank[k]) +=
                beta[i] * basis.H_diag[i][k];
            if (k < L && basis.rank[k + 1] > 0) {
                M.block(basis.offset[k], basis.offset[k + 1], basis.rank[k],
                        basis.rank[k + 1]) += beta[i] * basis.H_up[i][k];
                M.block(basis.offset[k + 1], basis.offset[k], basis.rank[k + 1],
                        basis.rank[k]) += beta[i] * basis.H_up[i][k].transpose();
            }
        }
    }
    J.bottomRightCorner(R, R) = -M;
    J.bottomRightCorner(R, R).diagonal().array() -= scene.params.Gamma_down + P;
    return J;
}

} // namespace pbec
