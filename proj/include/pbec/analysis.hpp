#pragma once

#include <optional>
#include <string>
#include <vector>

#include "pbec/experiments.hpp"
#include "pbec/solver.hpp"

namespace pbec {

enum class TransitionKind { Condensation, Decondensation };

struct Transition {
    double P_crit = 0.0;
    ModeIndex mode;                   // representative (lowest) mode of the cluster
    TransitionKind kind = TransitionKind::Condensation;
    double slope = 0.0;               // |d log10 n / d log10 P| at detection
    double bracket_lo = 0.0, bracket_hi = 0.0;
    std::vector<ModeIndex> members;   // degenerate partners crossing together
};

struct TransitionSettings {
    double slope_threshold = 20.0;    // decades of n per decade of P
    double condensed_threshold = 1e6; // photons; the decondensed/condensed gap
    double bracket_rel = 1e-3;        // refine P_crit to 0.1%
    double cluster_rel = 5e-3;        // merge transitions of equal kind within 0.5%
    bool refine = true;               // bisection steady solves inside the bracket
    SteadySettings steady;
};

/// Locate condensation/decondensation events in a continuation sweep and
/// refine each critical pump by bisection steady solves between the
/// bracketing grid points. An empty result is valid (featureless sweep).
std::vector<Transition> detect_transitions(const Scene& scene,
                                           const std::vector<double>& P_grid,
                                           const Eigen::MatrixXd& n_steady,
                                           const TransitionSettings& ts = {},
                                           const HierarchyBasis* basis = nullptr);

/// Interval labels A, B, C, ... between sorted critical pumps.
std::string interval_label(double P, const std::vector<Transition>& transitions);

struct ExponentFit {
    double exponent = 0.0;   // equilibration-time exponent (target -1)
    double r = 0.0;          // signed correlation coefficient of (P-P_crit, rate)
    double window_lo = 0.0;  // |P-P_crit| range used
    double window_hi = 0.0;
    double P_crit = 0.0;
    int points = 0;
};

/// Fit the critical divergence t_eq ~ |P-P_crit|^exponent on one side of a
/// transition. Input: (P, t_eq) pairs, all on the same side, spanning at most
/// one decade of |P-P_crit|; needs at least 6 points.
ExponentFit fit_critical_exponent_side(const std::vector<double>& P,
                                       const std::vector<double>& t_eq, double P_crit);

struct TailFit {
    double algebraic_slope = 0.0;     // d log n / d log t over the fit window
    double window_lo = 0.0, window_hi = 0.0;
    double eta = 0.0;                 // effective rate used by the prediction
    double n_eq = 0.0;
    double t_anchor = 0.0, n_anchor = 0.0;
    double decades_matched = 0.0;     // decades of n over which the prediction holds
    double max_log_dev = 0.0;         // max log-deviation metric inside the window
    double max_slope_mismatch = 0.0;  // max relative mismatch of d ln n / dt
};

/// Tail analysis of one mode's trace: (a) algebraic (log-log) slope over
/// [window_lo, window_hi]; (b) the frozen-drive exponential prediction
/// n(t) = n_eq + (n(t0)-n_eq) exp(-eta (t-t0)) with eta from the effective
/// view at the post-quench steady state. The matched window is the longest
/// tail stretch where |log n_sim - log n_pred| <= log_dev_tol * max(1, |log n_sim|).
TailFit fit_tail(const Scene& scene, const std::vector<double>& trace_t,
                 const Eigen::VectorXd& trace_n_mode, const SteadyState& steady,
                 int mode_index, double window_lo, double window_hi,
                 double log_dev_tol = 0.01, const HierarchyBasis* basis = nullptr);

struct ClampingRow {
    double P = 0.0;
    Eigen::VectorXd u_ratio;  // u_i / u_crit_i
    Eigen::VectorXd eta;
};

std::vector<ClampingRow> clamping_diagnostics(const Scene& scene,
                                              const std::vector<SteadyState>& sweep,
                                              const HierarchyBasis* basis = nullptr);

struct TimeDefinitionPoint {
    double P = 0.0;
    double t_eq = 0.0;
    double t_decay = 0.0;
    double ratio = 0.0;       // t_eq / t_decay
    double expected = 0.0;    // ln(delta_n / d)
    bool clean_exponential = false;
};

struct TimeDefinitionComparison {
    std::vector<TimeDefinitionPoint> points;
    double ratio_mean = 0.0;        // over clean-exponential points
    double ratio_dispersion = 0.0;  // relative std deviation
};

/// Threshold-based equilibration time vs fitted exponential decay time per
/// sweep point. Points whose tail fails a single-exponential goodness test
/// (r^2 below min_r2) are flagged and excluded from the summary.
TimeDefinitionComparison compare_time_definitions(const std::vector<SweepPoint>& sweep,
                                                  double d, double min_r2 = 0.99);

/// Exponential fit of a decaying deviation history: ln dev vs t over the
/// final approach (dev between 10 d and 1e4 d after the last excursion).
/// Returns {tau, r^2}; {NaN, NaN} when fewer than 6 samples qualify.
std::pair<double, double> fit_exponential_decay(const std::vector<double>& t,
                                                const std::vector<double>& dev, double d);

// plain least-squares helpers
struct LinearFit {
    double slope = 0.0, intercept = 0.0, r = 0.0;
};
LinearFit linear_fit(const std::vector<double>& x, const std::vector<double>& y);
double pearson_r(const std::vector<double>& x, const std::vector<double>& y);

} // namespace pbec
