#pragma once

#include <Eigen/Dense>
#include <vector>

#include "pbec/scene.hpp"
#include "pbec/state.hpp"

namespace pbec {

// Hierarchy of molecular-excitation components. Level 0 spans the coupling
// weight vectors w_i ([w_i]_j = g_ij N_j); level k+1 is the orthonormalized
// residue of the diagonal mode-profile operators G_i = diag(g_i.) applied to
// level k. Because the G_i are symmetric, the projected operators
// P_j G_i P_k vanish for |j-k| >= 2 and the reduced dynamics is
// block-tridiagonal in the level index. The photon equations read the
// excitation only through u = W0 c0, so level 0 alone closes the
// photon-facing part of the dynamics.
struct HierarchyBasis {
    int depth = 0;                         // L; levels 0..L are kept
    std::vector<Eigen::MatrixXd> levels;   // V_k, orthonormal columns over bins
    std::vector<int> rank;                 // columns per level
    std::vector<int> offset;               // coefficient offset per level
    int total_rank = 0;

    Eigen::MatrixXd W0;                    // u = W0 * c0  (n_modes x rank[0])

    // projected operators per mode: diag blocks V_k^T G_i V_k and upper
    // blocks V_k^T G_i V_{k+1}; the lower block is the transpose
    std::vector<std::vector<Eigen::MatrixXd>> H_diag;  // [mode][k]
    std::vector<std::vector<Eigen::MatrixXd>> H_up;    // [mode][k], k..k+1

    // source projections: ones_proj = V^T 1 (static part of the source),
    // gsrc(i) column = V^T g_i
    Eigen::VectorXd ones_proj;
    Eigen::MatrixXd gsrc;                  // total_rank x n_modes

    int coeff_dim() const { return total_rank; }

    Eigen::VectorXd project(const Eigen::VectorXd& field) const;
    Eigen::VectorXd lift(const Eigen::VectorXd& coeffs) const;
    Eigen::VectorXd drive_from_coeffs(const Eigen::VectorXd& coeffs) const;

    /// max |V_j^T G_i V_k| over |j-k| >= 2 (tridiagonality audit).
    double tridiagonality_defect(const Scene& scene) const;
    /// max |I - V^T V| over all level pairs.
    double orthonormality_defect() const;
};

/// Build the hierarchy to the given depth (levels 0..depth). Directions whose
/// residue norm falls below rank_tol times the largest residue of their level
/// are dropped.
HierarchyBasis build_hierarchy(const Scene& scene, int depth, double rank_tol = 1e-10);

/// Reduced right-hand side: photon part plus block-tridiagonal coefficient
/// dynamics. Coupling to level depth+1 is dropped (truncation closure).
void rhs_hier(const Scene& scene, const HierarchyBasis& basis, const Eigen::VectorXd& n,
              const Eigen::VectorXd& coeffs, double P, Eigen::VectorXd& dn,
              Eigen::VectorXd& dcoeffs);

Derivative rhs_hier(const Scene& scene, const HierarchyBasis& basis,
                    const SystemState& state, double P);

/// Dense Jacobian of the reduced system at (n, coeffs).
Eigen::MatrixXd jacobian_hier_dense(const Scene& scene, const HierarchyBasis& basis,
                                    const Eigen::VectorXd& n, const Eigen::VectorXd& coeffs,
                                    double P);

} // namespace pbec
