#include "pbec/kernel.hpp"

#include <cmath>

#include "pbec/errors.hpp"
#include "pbec/hierarchy.hpp"

namespace pbec {

void rhs_full(const Scene& scene, const Eigen::VectorXd& n, const Eigen::VectorXd& f,
              double P, Eigen::VectorXd& dn, Eigen::VectorXd& df,
              bool enforce_box, double box_slack) {
    const int nm = scene.n_modes();
    const int nb = scene.n_bins();
    const auto& A = scene.modes.A;
    const auto& E = scene.modes.E;

    if (enforce_box) {
        for (int i = 0; i < nm; ++i)
            if (n[i] < -box_slack * (1.0 + std::abs(n[i])))
                throw StateError("photon occupation negative beyond tolerance: n" +
                                 scene.modes.modes[i].label() + " = " + std::to_string(n[i]));
        for (int j = 0; j < nb; ++j)
            if (f[j] < -box_slack || f[j] > 1.0 + box_slack)
                throw StateError("excitation outside [0,1] beyond tolerance: f[" +
                                 std::to_string(j) + "] = " + std::to_string(f[j]));
    }

    Eigen::VectorXd u(nm);
    scene.drive(f, u);

    dn.resize(nm);
    for (int i = 0; i < nm; ++i)
        dn[i] = (n[i] * (E[i] + A[i]) + E[i]) * u[i] - scene.gamma[i] * n[i];

    // absorb_j = sum_i g_ij A_i n_i ; drain_j = sum_i g_ij [A_i n_i + E_i (n_i+1)]
    Eigen::VectorXd wa = A.cwiseProduct(n);
    Eigen::VectorXd wd = wa + (E.array() * (n.array() + 1.0)).matrix();
    Eigen::VectorXd absorb, drain;
    scene.per_bin_mode_sum(wa, absorb);
    scene.per_bin_mode_sum(wd, drain);

    const double gd = scene.params.Gamma_down;
    df.resize(nb);
    for (int j = 0; j < nb; ++j)
        df[j] = (P + absorb[j]) - f[j] * (gd + P + drain[j]);
}

Derivative rhs_full(const Scene& scene, const SystemState& state, double P,
                    bool enforce_box, double box_slack) {
    if (state.rep != Representation::FullField)
        throw StateError("rhs_full requires a FullField state");
    Derivative d;
    rhs_full(scene, state.n, state.excitation, P, d.dn, d.dexcitation, enforce_box,
             box_slack);
    return d;
}

void jacobian_full(const Scene& scene, const Eigen::VectorXd& n, const Eigen::VectorXd& f,
                   double P, FullJacobian& jac) {
    const auto& A = scene.modes.A;
    const auto& E = scene.modes.E;

    Eigen::VectorXd u(scene.n_modes());
    scene.drive(f, u);

    jac.dnn = (E + A).cwiseProduct(u) - scene.gamma;
    jac.bfac = (E + A).cwiseProduct(n) + E;
    jac.f = f;

    Eigen::VectorXd wd = A.cwiseProduct(n) + (E.array() * (n.array() + 1.0)).matrix();
    Eigen::VectorXd drain;
    scene.per_bin_mode_sum(wd, drain);
    jac.dff = -(scene.params.Gamma_down + P) - drain.array();
}

Eigen::MatrixXd jacobian_full_dense(const Scene& scene, const Eigen::VectorXd& n,
                                    const Eigen::VectorXd& f, double P) {
    const int nm = scene.n_modes();
    const int nb = scene.n_bins();
    FullJacobian jac;
    jacobian_full(scene, n, f, P, jac);

    Eigen::MatrixXd J = Eigen::MatrixXd::Zero(nm + nb, nm + nb);
    J.topLeftCorner(nm, nm).diagonal() = jac.dnn;
    for (int i = 0; i < nm; ++i)
        for (int j = 0; j < nb; ++j)
            J(i, nm + j) = scene.gN(i, j) * jac.bfac[i];
    const auto& A = scene.modes.A;
    const auto& E = scene.modes.E;
    for (int j = 0; j < nb; ++j)
        for (int i = 0; i < nm; ++i)
            J(nm + j, i) = scene.g(i, j) * (A[i] - (A[i] + E[i]) * f[j]);
    J.bottomRightCorner(nb, nb).diagonal() = jac.dff;
    return J;
}

EffectiveModeView effective_view_from_u(const Scene& scene, const Eigen::VectorXd& u) {
    EffectiveModeView v;
    v.u = u;
    v.u_crit = scene.u_crit;
    v.eta = scene.gamma - (scene.modes.E + scene.modes.A).cwiseProduct(u);
    return v;
}

EffectiveModeView effective_view(const Scene& scene, const SystemState& state,
                                 const HierarchyBasis* basis) {
    Eigen::VectorXd u;
    if (state.rep == Representation::FullField) {
        scene.drive(state.excitation, u);
    } else {
        if (!basis)
            throw StateError("effective_view of a hierarchical state needs its basis");
        u = basis->drive_from_coeffs(state.excitation);
    }
    return effective_view_from_u(scene, u);
}

void photon_rhs_effective(const Scene& scene, const Eigen::VectorXd& n,
                          const Eigen::VectorXd& u, Eigen::VectorXd& dn) {
    const auto& A = scene.modes.A;
    const auto& E = scene.modes.E;
    dn.resize(scene.n_modes());
    for (int i = 0; i < scene.n_modes(); ++i) {
        const double eta = scene.gamma[i] - (E[i] + A[i]) * u[i];
        dn[i] = -eta * n[i] + E[i] * u[i];
    }
}

ExchangeBalance exchange_balance(const Scene& scene, const Eigen::VectorXd& n,
                                 const Eigen::VectorXd& f) {
    const auto& A = scene.modes.A;
    const auto& E = scene.modes.E;
    ExchangeBalance b;
    for (int i = 0; i < scene.n_modes(); ++i) {
        for (int j = 0; j < scene.n_bins(); ++j) {
            // photon gain from bin j; enters N_j df_j with opposite sign
            const double x = scene.gN(i, j) *
                             (E[i] * (n[i] + 1.0) * f[j] - A[i] * n[i] * (1.0 - f[j]));
            b.photon_sum += x;
            b.molecular_sum -= x;
            b.scale += std::abs(x);
        }
    }
    return b;
}

} // namespace pbec
