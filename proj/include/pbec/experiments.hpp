#pragma once

#include <string>
#include <vector>

#include "pbec/solver.hpp"

namespace pbec {

struct ExperimentSettings {
    double d = 1e-6;          // relative stationarity threshold
    double t_max = 1e6;       // integration budget per quench (1/kappa)
    double abs_floor = 0.0;   // optional denominator floor (off by default)
    double refine_rel = 1e-3; // relative accuracy of the crossing time
    int jobs = 1;
    Representation rep = Representation::Hierarchical;
    IntegratorSettings integrator;
    SteadySettings steady;
};

struct ModeRecord {
    double n_start = 0.0;
    double n_end = 0.0;
    double n_peak = 0.0;
    double t_peak = 0.0;
};

/// Summary of one quench: pump step, equilibration times (first and last
/// threshold crossing), per-mode extremes and a decay-time fit of the
/// approach to stationarity.
struct QuenchRecord {
    double P_start = 0.0;
    double P_end = 0.0;
    double d = 0.0;
    double t_eq = 0.0;       // first crossing that stays below at the next sample
    double t_eq_last = 0.0;  // last crossing before the final stay-below stretch
    bool converged = false;
    double delta_n = 0.0;    // initial relative deviation
    double t_decay = 0.0;    // exponential decay time fitted to the tail (NaN if unfit)
    double decay_r2 = 0.0;
    std::vector<ModeRecord> per_mode;
    std::vector<double> trace_t;
    Eigen::MatrixXd trace_n;  // n_modes x samples
    IntegrationStats stats;
};

/// Core quench runner: start from `start` (steady at the pre-quench pump),
/// integrate at P_end until the max relative deviation of the cavity modes
/// from `target` stays below d (or t_max), refining the crossing time on the
/// dense output.
QuenchRecord run_quench(const Scene& scene, const HierarchyBasis* basis,
                        const SystemState& start, const SteadyState& target, double P_end,
                        const ExperimentSettings& s,
                        const std::vector<double>& trace_times = {},
                        bool stop_at_threshold = true);

/// Steady at P_start, switch to P_end at t = 0, time the equilibration.
QuenchRecord equilibration_time(const Scene& scene, double P_start, double P_end,
                                const ExperimentSettings& s,
                                const HierarchyBasis* basis = nullptr);

struct SweepPoint {
    double P = 0.0;              // post-quench pump
    SteadyState steady;          // at the post-quench pump
    QuenchRecord record;
    std::string interval;        // filled by the transition labeler
};

/// Fig.-1 style 1% (quench_fraction) upward quenches over an ascending pump
/// grid; steady states reused via continuation. Failures are recorded per
/// point and the sweep continues.
std::vector<SweepPoint> sweep_1d(const Scene& scene, const std::vector<double>& P_grid,
                                 double quench_fraction, const ExperimentSettings& s,
                                 const HierarchyBasis* basis = nullptr);

struct QuenchMap {
    std::vector<double> P_start_grid;
    std::vector<double> P_end_grid;
    Eigen::MatrixXd t_eq;             // |starts| x |ends|
    Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> converged;
};

QuenchMap quench_map(const Scene& scene, const std::vector<double>& P_start_grid,
                     const std::vector<double>& P_end_grid, const ExperimentSettings& s,
                     const HierarchyBasis* basis = nullptr);

struct ScheduleRecord {
    QuenchRecord final_leg;     // measured from the last pump switch
    double total_time = 0.0;    // schedule start to equilibration
    std::vector<ModeRecord> per_mode_overall;
};

/// Multi-step pump schedule; equilibration is timed from the final switch
/// against the steady state of the final segment's pump.
ScheduleRecord run_schedule(const Scene& scene, const PumpSchedule& schedule,
                            const ExperimentSettings& s,
                            const HierarchyBasis* basis = nullptr);

/// Large quench with per-mode populations logged on the given time grid.
QuenchRecord big_quench_trace(const Scene& scene, double P_start, double P_end,
                              const std::vector<double>& sample_times,
                              const ExperimentSettings& s,
                              const HierarchyBasis* basis = nullptr);

std::vector<double> log_grid(double lo, double hi, int points);

} // namespace pbec
