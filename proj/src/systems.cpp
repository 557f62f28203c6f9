#include "pbec/systems.hpp"

#include <cmath>

namespace pbec {

namespace {
double box_slack(double rel_slack) { return std::max(1e-9, 100.0 * rel_slack); }
} // namespace

void FullFieldSystem::rhs(const Eigen::VectorXd& y, Eigen::VectorXd& dy) {
    const int nm = scene_.n_modes();
    const int nb = scene_.n_bins();
    Eigen::Map<const Eigen::VectorXd> n(y.data(), nm), f(y.data() + nm, nb);
    rhs_full(scene_, n, f, P_, dn_, df_);
    dy.resize(nm + nb);
    dy.head(nm) = dn_;
    dy.tail(nb) = df_;
}

void FullFieldSystem::prepare_jacobian(const Eigen::VectorXd& y) {
    const int nm = scene_.n_modes();
    const int nb = scene_.n_bins();
    Eigen::Map<const Eigen::VectorXd> n(y.data(), nm), f(y.data() + nm, nb);
    jacobian_full(scene_, n, f, P_, jac_);
}

void FullFieldSystem::factor_real(double s) {
    const int nm = scene_.n_modes();
    const auto& A = scene_.modes.A;
    const auto& AE = scene_.modes.A + scene_.modes.E;

    Df_ = (s - jac_.dff.array()).matrix();
    Eigen::ArrayXd invDf = Df_.array().inverse();
    Eigen::MatrixXd M1 =
        (scene_.gN.array().rowwise() * invDf.transpose()).matrix() * scene_.g.transpose();
    Eigen::MatrixXd M2 =
        (scene_.gN.array().rowwise() * (jac_.f.array() * invDf).transpose()).matrix() *
        scene_.g.transpose();

    Eigen::MatrixXd S = -(M1 * A.asDiagonal() - M2 * AE.asDiagonal());
    S.array().colwise() *= jac_.bfac.array();
    S.diagonal().array() += s - jac_.dnn.array();
    schur_.compute(S);
    (void)nm;
}

void FullFieldSystem::solve_real(Eigen::VectorXd& b) {
    const int nm = scene_.n_modes();
    const int nb = scene_.n_bins();
    const auto& A = scene_.modes.A;
    const auto& AE = scene_.modes.A + scene_.modes.E;

    // M = (s I - J) has blocks [[Dn, -B], [-C, Df]], so the reduced system is
    // S xn = bn + B Df^-1 bf and xf = Df^-1 (bf + C xn)
    Eigen::VectorXd bf_over = b.tail(nb).cwiseQuotient(Df_);
    Eigen::VectorXd rn =
        b.head(nm) + jac_.bfac.cwiseProduct(scene_.gN * bf_over);
    Eigen::VectorXd xn = schur_.solve(rn);

    Eigen::VectorXd cxn = scene_.g.transpose() * A.cwiseProduct(xn) -
                          jac_.f.cwiseProduct(scene_.g.transpose() * AE.cwiseProduct(xn));
    b.tail(nb) = (b.tail(nb) + cxn).cwiseQuotient(Df_);
    b.head(nm) = xn;
}

void FullFieldSystem::factor_complex(double sr, double si) {
    const auto& A = scene_.modes.A;
    const auto& AE = scene_.modes.A + scene_.modes.E;
    const std::complex<double> s(sr, si);

    Dfz_ = (s - jac_.dff.array().cast<std::complex<double>>()).matrix();
    Eigen::ArrayXcd invDf = Dfz_.array().inverse();
    Eigen::ArrayXd wr = invDf.real(), wi = invDf.imag();

    // complex Gram matrices via real GEMMs
    Eigen::MatrixXd M1r =
        (scene_.gN.array().rowwise() * wr.transpose()).matrix() * scene_.g.transpose();
    Eigen::MatrixXd M1i =
        (scene_.gN.array().rowwise() * wi.transpose()).matrix() * scene_.g.transpose();
    Eigen::MatrixXd M2r =
        (scene_.gN.array().rowwise() * (jac_.f.array() * wr).transpose()).matrix() *
        scene_.g.transpose();
    Eigen::MatrixXd M2i =
        (scene_.gN.array().rowwise() * (jac_.f.array() * wi).transpose()).matrix() *
        scene_.g.transpose();

    Eigen::MatrixXcd M1 = M1r.cast<std::complex<double>>() +
                          std::complex<double>(0, 1) * M1i.cast<std::complex<double>>();
    Eigen::MatrixXcd M2 = M2r.cast<std::complex<double>>() +
                          std::complex<double>(0, 1) * M2i.cast<std::complex<double>>();

    Eigen::MatrixXcd S = -(M1 * A.asDiagonal() - M2 * AE.asDiagonal());
    S.array().colwise() *= jac_.bfac.array().cast<std::complex<double>>();
    S.diagonal() += (s - jac_.dnn.array().cast<std::complex<double>>()).matrix();
    schur_z_.compute(S);
}

void FullFieldSystem::solve_complex(Eigen::VectorXd& br, Eigen::VectorXd& bi) {
    const int nm = scene_.n_modes();
    const int nb = scene_.n_bins();
    const auto& A = scene_.modes.A;
    const auto& AE = scene_.modes.A + scene_.modes.E;

    Eigen::VectorXcd bf = br.tail(nb).cast<std::complex<double>>() +
                          std::complex<double>(0, 1) * bi.tail(nb).cast<std::complex<double>>();
    Eigen::VectorXcd bf_over = bf.cwiseQuotient(Dfz_);
    // real GEMVs on the split real/imaginary parts
    Eigen::VectorXd gr = scene_.gN * bf_over.real().eval();
    Eigen::VectorXd gi = scene_.gN * bf_over.imag().eval();
    Eigen::VectorXcd rn(nm);
    for (int i = 0; i < nm; ++i)
        rn[i] = std::complex<double>(br[i] + jac_.bfac[i] * gr[i],
                                     bi[i] + jac_.bfac[i] * gi[i]);
    Eigen::VectorXcd xn = schur_z_.solve(rn);

    Eigen::VectorXd xr = xn.real(), xi = xn.imag();
    Eigen::VectorXd cr = scene_.g.transpose() * A.cwiseProduct(xr) -
                         jac_.f.cwiseProduct(scene_.g.transpose() * AE.cwiseProduct(xr));
    Eigen::VectorXd ci = scene_.g.transpose() * A.cwiseProduct(xi) -
                         jac_.f.cwiseProduct(scene_.g.transpose() * AE.cwiseProduct(xi));
    Eigen::VectorXcd cxn = cr.cast<std::complex<double>>() +
                           std::complex<double>(0, 1) * ci.cast<std::complex<double>>();
    Eigen::VectorXcd xf = (bf + cxn).cwiseQuotient(Dfz_);

    br.head(nm) = xn.real();
    bi.head(nm) = xn.imag();
    br.tail(nb) = xf.real();
    bi.tail(nb) = xf.imag();
}

bool FullFieldSystem::clamp_to_box(Eigen::VectorXd& y, double rel_slack) {
    const int nm = scene_.n_modes();
    const int nb = scene_.n_bins();
    const double slack = box_slack(rel_slack);
    for (int i = 0; i < nm; ++i) {
        if (y[i] < 0.0) {
            if (y[i] < -slack) return false;
            y[i] = 0.0;
        }
    }
    for (int j = 0; j < nb; ++j) {
        double& f = y[nm + j];
        if (f < 0.0) {
            if (f < -slack) return false;
            f = 0.0;
        } else if (f > 1.0) {
            if (f > 1.0 + slack) return false;
            f = 1.0;
        }
    }
    return true;
}

void HierarchicalSystem::rhs(const Eigen::VectorXd& y, Eigen::VectorXd& dy) {
    const int nm = scene_.n_modes();
    const int R = basis_.total_rank;
    Eigen::Map<const Eigen::VectorXd> n(y.data(), nm), c(y.data() + nm, R);
    rhs_hier(scene_, basis_, n, c, P_, dn_, dc_);
    dy.resize(nm + R);
    dy.head(nm) = dn_;
    dy.tail(R) = dc_;
}

void HierarchicalSystem::prepare_jacobian(const Eigen::VectorXd& y) {
    const int nm = scene_.n_modes();
    const int R = basis_.total_rank;
    Eigen::Map<const Eigen::VectorXd> n(y.data(), nm), c(y.data() + nm, R);
    J_ = jacobian_hier_dense(scene_, basis_, n, c, P_);
}

void HierarchicalSystem::factor_real(double s) {
    Eigen::MatrixXd M = -J_;
    M.diagonal().array() += s;
    lu_.compute(M);
}

void HierarchicalSystem::solve_real(Eigen::VectorXd& b) { b = lu_.solve(b); }

void HierarchicalSystem::factor_complex(double sr, double si) {
    Eigen::MatrixXcd M = (-J_).cast<std::complex<double>>();
    M.diagonal().array() += std::complex<double>(sr, si);
    lu_z_.compute(M);
}

void HierarchicalSystem::solve_complex(Eigen::VectorXd& br, Eigen::VectorXd& bi) {
    Eigen::VectorXcd b = br.cast<std::complex<double>>() +
                         std::complex<double>(0, 1) * bi.cast<std::complex<double>>();
    Eigen::VectorXcd x = lu_z_.solve(b);
    br = x.real();
    bi = x.imag();
}

bool HierarchicalSystem::clamp_to_box(Eigen::VectorXd& y, double rel_slack) {
    const int nm = scene_.n_modes();
    const double slack = box_slack(rel_slack);
    for (int i = 0; i < nm; ++i) {
        if (y[i] < 0.0) {
            if (y[i] < -slack) return false;
            y[i] = 0.0;
        }
    }
    return true;
}

} // namespace pbec
