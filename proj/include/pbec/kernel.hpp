#pragma once

#include <Eigen/Dense>

#include "pbec/scene.hpp"
#include "pbec/state.hpp"

namespace pbec {

struct HierarchyBasis;  // hierarchy.hpp

// Coupled rate equations for photon occupations n_i and molecular excited
// fractions f_j:
//
//   dn_i = sum_j g_ij N_j [E_i (n_i+1) f_j - A_i n_i (1-f_j)] - kappa n_i
//        = [n_i (E_i+A_i) + E_i] u_i - gamma_i n_i
//   df_j = -Gamma_down f_j + P (1-f_j)
//        + sum_i g_ij [A_i n_i (1-f_j) - E_i (n_i+1) f_j]
//
// with u_i = sum_j g_ij N_j f_j and gamma_i = A_i sum_j g_ij N_j + kappa.
//
// In operator form df = -(Gamma_down+P) f - sum_i [A_i n_i + E_i (n_i+1)] G_i f
//                       + P 1 + sum_i A_i n_i g_i,   G_i = diag(g_i.).
// Mapped onto the printed operators of the source model this is
// A_hat_i = -(E_i+A_i) G_i and A_hat_0 = sum_i A_hat_i E_i/(E_i+A_i)
// + (Gamma_down+P) 1 with source x_j = P + sum_i g_ij A_i n_i; the source and
// the E_i G_i relaxation enter with the sign that keeps f in [0,1] forward
// invariant and gives positive excitation under pumping from vacuum.

/// Full-field right-hand side. With enforce_box, raises StateError when f
/// leaves [0,1] or n goes negative beyond `box_slack`.
void rhs_full(const Scene& scene, const Eigen::VectorXd& n, const Eigen::VectorXd& f,
              double P, Eigen::VectorXd& dn, Eigen::VectorXd& df,
              bool enforce_box = false, double box_slack = 1e-9);

Derivative rhs_full(const Scene& scene, const SystemState& state, double P,
                    bool enforce_box = true, double box_slack = 1e-9);

/// Analytic Jacobian blocks of rhs_full. The n-n and f-f blocks are diagonal;
/// the mixed blocks carry the sparsity of g and are returned in factored form
/// (dn_i/df_j = gN(i,j) * bfac_i, df_j/dn_i = g(i,j) * (A_i - (A_i+E_i) f_j)).
struct FullJacobian {
    Eigen::VectorXd dnn;   // d(dn_i)/dn_i
    Eigen::VectorXd dff;   // d(df_j)/df_j
    Eigen::VectorXd bfac;  // (E_i+A_i) n_i + E_i
    Eigen::VectorXd f;     // snapshot used by the f-n block
};

void jacobian_full(const Scene& scene, const Eigen::VectorXd& n, const Eigen::VectorXd& f,
                   double P, FullJacobian& jac);

/// Dense Jacobian assembled from the blocks; for tests and small problems.
Eigen::MatrixXd jacobian_full_dense(const Scene& scene, const Eigen::VectorXd& n,
                                    const Eigen::VectorXd& f, double P);

/// Reservoir drive view. Hierarchical states expose u through the level-0
/// block; dn computed as -eta_i n_i + E_i u_i agrees with rhs_full's dn to
/// rounding in the shared intermediates.
EffectiveModeView effective_view(const Scene& scene, const SystemState& state,
                                 const HierarchyBasis* basis = nullptr);
EffectiveModeView effective_view_from_u(const Scene& scene, const Eigen::VectorXd& u);

/// Photon derivative in the effective (Eq.-3) association, sharing u with
/// rhs_full: dn_i = -eta_i n_i + E_i u_i.
void photon_rhs_effective(const Scene& scene, const Eigen::VectorXd& n,
                          const Eigen::VectorXd& u, Eigen::VectorXd& dn);

/// Term-level balance diagnostic: the stimulated/absorption exchange summed
/// over the photon side and over the molecular side (weighted by N_j), from
/// shared per-(i,j) products; the two should cancel to rounding.
struct ExchangeBalance {
    double photon_sum = 0.0;
    double molecular_sum = 0.0;
    double scale = 0.0;  // sum of |term| magnitudes
};
ExchangeBalance exchange_balance(const Scene& scene, const Eigen::VectorXd& n,
                                 const Eigen::VectorXd& f);

} // namespace pbec
