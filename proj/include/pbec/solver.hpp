#pragma once

#include <memory>
#include <optional>
#include <vector>

#include "pbec/hierarchy.hpp"
#include "pbec/pump.hpp"
#include "pbec/radau.hpp"
#include "pbec/scene.hpp"
#include "pbec/state.hpp"
#include "pbec/systems.hpp"

namespace pbec {

/// Builds the OdeSystem matching the state's representation.
std::unique_ptr<OdeSystem> make_system(const Scene& scene, const HierarchyBasis* basis,
                                       Representation rep, double P);

/// Integrate a state through a piecewise-constant pump schedule. Pump changes
/// are applied exactly at segment boundaries (the integrator restarts there).
/// The observer sees every accepted step of every segment.
IntegrationStats integrate(const Scene& scene, const HierarchyBasis* basis,
                           SystemState& state, const PumpSchedule& schedule, double t_end,
                           const IntegratorSettings& settings,
                           const StepObserver& observer = {});

struct SteadySettings {
    double newton_tol = 1e-12;    // weighted residual: rms of r_k / (kappa (1+|y_k|))
    int max_newton = 60;
    int max_halvings = 8;         // line-search step halvings
    int max_fallbacks = 6;         // reseed + relax-by-integration rounds
    double fallback_horizon = 200.0;
    IntegratorSettings integrator;
};

struct SteadyState {
    SystemState state;
    double P = 0.0;
    double residual_norm = 0.0;
    bool converged = false;
    int newton_iterations = 0;
    std::vector<double> residual_history;
};

/// Weighted residual norm used by the steady solver.
double steady_residual(const Scene& scene, const HierarchyBasis* basis,
                       const SystemState& state, double P);

/// Damped Newton on the full RHS with the analytic Jacobian; falls back to
/// relaxation by integration when Newton stalls.
SteadyState find_steady(const Scene& scene, double P, const SystemState& guess,
                        const SteadySettings& settings = {},
                        const HierarchyBasis* basis = nullptr);

/// Molecular excitation in exact balance with fixed photon occupations:
/// f_j = (P + sum_i g_ij A_i n_i) / (Gamma_down + P + sum_i g_ij [A_i n_i + E_i (n_i+1)]).
Eigen::VectorXd balanced_excitation(const Scene& scene, const Eigen::VectorXd& n, double P);

/// Steady-state seed: damped Newton on the photon-only system with the
/// molecular field eliminated through balanced_excitation (log-occupation
/// variables, finite-difference Jacobian).
SystemState steady_seed(const Scene& scene, double P,
                        const Eigen::VectorXd* n_guess = nullptr);

/// Vacuum state in the requested representation.
SystemState vacuum_state(const Scene& scene, const HierarchyBasis* basis,
                         Representation rep);

/// Convert between representations (hierarchical -> full uses lift()).
SystemState to_representation(const Scene& scene, const HierarchyBasis* basis,
                              const SystemState& s, Representation rep);

/// Continuation over an ordered pump grid; each solve seeded by the previous
/// steady state, the first from vacuum via integration. Failed points are
/// retried on a refined sub-grid and flagged if still unconverged.
std::vector<SteadyState> continuation_sweep(const Scene& scene,
                                            const std::vector<double>& P_grid,
                                            const SteadySettings& settings = {},
                                            const HierarchyBasis* basis = nullptr,
                                            Representation rep = Representation::FullField);

} // namespace pbec
