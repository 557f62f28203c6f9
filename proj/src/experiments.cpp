#include "pbec/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "pbec/analysis.hpp"
#include "pbec/errors.hpp"
#include "pbec/parallel.hpp"

namespace pbec {

namespace {

constexpr double NaN = std::numeric_limits<double>::quiet_NaN();

// Watches the max relative deviation of the cavity modes from the target
// steady populations along the trajectory: records threshold crossings
// (refined on the dense output), per-mode peaks, requested trace samples and
// the (t, deviation) history for the decay-time fit.
class EquilibrationMonitor {
public:
    EquilibrationMonitor(const Eigen::VectorXd& n_target, double d, double abs_floor,
                         double refine_rel, bool stop_at_threshold,
                         std::vector<double> trace_times)
        : n_target_(n_target), d_(d), floor_(abs_floor), refine_rel_(refine_rel),
          stop_(stop_at_threshold), trace_times_(std::move(trace_times)) {
        peaks_.assign(n_target.size(), ModeRecord{});
    }

    void sample_initial(const Eigen::VectorXd& n0) {
        for (int i = 0; i < n0.size(); ++i) {
            peaks_[i].n_start = n0[i];
            peaks_[i].n_peak = n0[i];
            peaks_[i].t_peak = 0.0;
        }
        prev_dev_ = deviation(n0);
        delta_n_ = prev_dev_;
        prev_t_ = 0.0;
        prev_below_ = prev_dev_ <= d_;
        if (prev_below_) {
            crossed_ = true;
            t_first_ = 0.0;
            t_last_ = 0.0;
        }
        history_t_.push_back(0.0);
        history_dev_.push_back(prev_dev_);
        if (!trace_times_.empty() && trace_times_.front() <= 0.0) {
            trace_out_t_.push_back(0.0);
            trace_out_n_.push_back(n0);
            trace_idx_ = 1;
        }
    }

    ObserverAction operator()(const DenseStep& step, int n_modes) {
        // interior samples plus the step end
        static constexpr double offsets[4] = {0.25, 0.5, 0.75, 1.0};
        Eigen::VectorXd y;
        for (double s : offsets) {
            const double tq = step.t_start + s * (step.t_end - step.t_start);
            const Eigen::VectorXd* nptr;
            if (s == 1.0) {
                nptr = step.y_end;
            } else {
                step.eval(tq, y);
                nptr = &y;
            }
            const auto n = nptr->head(n_modes);
            for (int i = 0; i < n_modes; ++i) {
                if (n[i] > peaks_[i].n_peak) {
                    peaks_[i].n_peak = n[i];
                    peaks_[i].t_peak = tq;
                }
            }
            const double dev = deviation(n);
            const bool below = dev <= d_;
            if (below && !prev_below_) {
                const double tc = refine_crossing(step, prev_t_, tq, n_modes);
                if (!crossed_) {
                    crossed_ = true;
                    t_first_ = tc;
                }
                t_last_ = tc;
            }
            prev_below_ = below;
            prev_t_ = tq;
            prev_dev_ = dev;
        }

        while (trace_idx_ < trace_times_.size() && trace_times_[trace_idx_] <= step.t_end) {
            const double tq = std::max(trace_times_[trace_idx_], step.t_start);
            step.eval(tq, y);
            trace_out_t_.push_back(trace_times_[trace_idx_]);
            trace_out_n_.push_back(y.head(n_modes));
            ++trace_idx_;
        }

        history_t_.push_back(step.t_end);
        history_dev_.push_back(prev_dev_);

        if (prev_below_) ++consecutive_below_;
        else consecutive_below_ = 0;
        const bool settled = crossed_ && consecutive_below_ >= 2;
        if (settled) settled_ = true;
        return (stop_ && settled) ? ObserverAction::Stop : ObserverAction::Continue;
    }

    double deviation(const Eigen::Ref<const Eigen::VectorXd>& n) const {
        double dev = 0.0;
        for (int i = 0; i < n_target_.size(); ++i) {
            const double denom = std::abs(n_target_[i]) + floor_;
            if (denom > 0)
                dev = std::max(dev, std::abs(n[i] - n_target_[i]) / denom);
        }
        return dev;
    }

    bool crossed() const { return crossed_; }
    bool settled() const { return settled_; }
    double t_first() const { return t_first_; }
    double t_last() const { return t_last_; }
    double delta_n() const { return delta_n_; }
    const std::vector<ModeRecord>& peaks() const { return peaks_; }
    const std::vector<double>& history_t() const { return history_t_; }
    const std::vector<double>& history_dev() const { return history_dev_; }
    const std::vector<double>& trace_t() const { return trace_out_t_; }
    const std::vector<Eigen::VectorXd>& trace_n() const { return trace_out_n_; }

private:
    double refine_crossing(const DenseStep& step, double ta, double tb, int n_modes) {
        // deviation is > d at ta, <= d at tb; bisect on the dense output
        Eigen::VectorXd y;
        while (tb - ta > refine_rel_ * std::max(tb, 1e-12)) {
            const double tm = 0.5 * (ta + tb);
            step.eval(tm, y);
            if (deviation(y.head(n_modes)) <= d_) tb = tm;
            else ta = tm;
        }
        return tb;
    }

    Eigen::VectorXd n_target_;
    double d_, floor_, refine_rel_;
    bool stop_;
    std::vector<double> trace_times_;
    size_t trace_idx_ = 0;

    std::vector<ModeRecord> peaks_;
    double prev_t_ = 0.0, prev_dev_ = 0.0, delta_n_ = 0.0;
    bool prev_below_ = false, crossed_ = false, settled_ = false;
    int consecutive_below_ = 0;
    double t_first_ = NaN, t_last_ = NaN;
    std::vector<double> history_t_, history_dev_;
    std::vector<double> trace_out_t_;
    std::vector<Eigen::VectorXd> trace_out_n_;
};

} // namespace

std::vector<double> log_grid(double lo, double hi, int points) {
    std::vector<double> g(points);
    if (points == 1) {
        g[0] = lo;
        return g;
    }
    const double llo = std::log10(lo), lhi = std::log10(hi);
    for (int k = 0; k < points; ++k)
        g[k] = std::pow(10.0, llo + (lhi - llo) * k / (points - 1));
    return g;
}

QuenchRecord run_quench(const Scene& scene, const HierarchyBasis* basis,
                        const SystemState& start, const SteadyState& target, double P_end,
                        const ExperimentSettings& s, const std::vector<double>& trace_times,
                        bool stop_at_threshold) {
    const int nm = scene.n_modes();
    QuenchRecord rec;
    rec.P_end = P_end;
    rec.d = s.d;
    rec.t_decay = NaN;
    rec.decay_r2 = NaN;

    EquilibrationMonitor mon(target.state.n, s.d, s.abs_floor, s.refine_rel,
                             stop_at_threshold, trace_times);
    mon.sample_initial(start.n);
    rec.delta_n = mon.delta_n();

    if (stop_at_threshold && trace_times.empty() && mon.deviation(start.n) <= s.d) {
        // already within threshold of the target
        rec.t_eq = 0.0;
        rec.t_eq_last = 0.0;
        rec.converged = true;
        rec.per_mode = mon.peaks();
        for (int i = 0; i < nm; ++i) rec.per_mode[i].n_end = target.state.n[i];
        return rec;
    }

    SystemState st = start;
    st.t = 0.0;
    const double t_end =
        trace_times.empty() ? s.t_max
                            : (stop_at_threshold ? s.t_max
                                                 : std::min(s.t_max, trace_times.back()));
    rec.stats = integrate(scene, basis, st, PumpSchedule::constant(P_end), t_end,
                          s.integrator, [&](const DenseStep& step) {
                              return mon(step, nm);
                          });

    rec.converged = mon.settled() || (mon.crossed() && !stop_at_threshold);
    rec.t_eq = mon.crossed() ? mon.t_first() : NaN;
    rec.t_eq_last = mon.crossed() ? mon.t_last() : NaN;
    rec.per_mode = mon.peaks();
    for (int i = 0; i < nm; ++i) rec.per_mode[i].n_end = target.state.n[i];

    auto [tau, r2] = fit_exponential_decay(mon.history_t(), mon.history_dev(), s.d);
    rec.t_decay = tau;
    rec.decay_r2 = r2;

    if (!mon.trace_t().empty()) {
        rec.trace_t = mon.trace_t();
        rec.trace_n.resize(nm, rec.trace_t.size());
        for (size_t k = 0; k < rec.trace_t.size(); ++k)
            rec.trace_n.col(k) = mon.trace_n()[k];
    }
    return rec;
}

QuenchRecord equilibration_time(const Scene& scene, double P_start, double P_end,
                                const ExperimentSettings& s, const HierarchyBasis* basis) {
    if (s.d <= 0 || s.d >= 1) throw ConfigError("threshold d must be in (0,1)");
    auto seed = steady_seed(scene, P_start);
    SteadyState ss_start = find_steady(
        scene, P_start, to_representation(scene, basis, seed, s.rep), s.steady, basis);
    if (!ss_start.converged)
        throw SolverError("no steady state at P_start = " + std::to_string(P_start));
    auto seed_end = ss_start.state;
    SteadyState ss_end = find_steady(scene, P_end, seed_end, s.steady, basis);
    if (!ss_end.converged) {
        SteadyState alt = find_steady(
            scene, P_end,
            to_representation(scene, basis, steady_seed(scene, P_end, &ss_start.state.n), s.rep),
            s.steady, basis);
        if (!alt.converged)
            throw SolverError("no steady state at P_end = " + std::to_string(P_end));
        ss_end = alt;
    }
    QuenchRecord rec = run_quench(scene, basis, ss_start.state, ss_end, P_end, s);
    rec.P_start = P_start;
    return rec;
}

std::vector<SweepPoint> sweep_1d(const Scene& scene, const std::vector<double>& P_grid,
                                 double quench_fraction, const ExperimentSettings& s,
                                 const HierarchyBasis* basis) {
    for (size_t k = 1; k < P_grid.size(); ++k)
        if (P_grid[k] <= P_grid[k - 1])
            throw ConfigError("sweep grid must be ascending");

    auto starts = continuation_sweep(scene, P_grid, s.steady, basis, s.rep);

    std::vector<SweepPoint> out(P_grid.size());
    parallel_for(s.jobs, static_cast<int>(P_grid.size()), [&](int k) {
        SweepPoint& pt = out[k];
        const double P1 = P_grid[k] * (1.0 + quench_fraction);
        pt.P = P1;
        if (!starts[k].converged) {
            pt.record.converged = false;
            pt.record.t_eq = NaN;
            pt.record.P_start = P_grid[k];
            pt.record.P_end = P1;
            return;
        }
        pt.steady = find_steady(scene, P1, starts[k].state, s.steady, basis);
        if (!pt.steady.converged) {
            pt.record.converged = false;
            pt.record.t_eq = NaN;
            pt.record.P_start = P_grid[k];
            pt.record.P_end = P1;
            return;
        }
        pt.record = run_quench(scene, basis, starts[k].state, pt.steady, P1, s);
        pt.record.P_start = P_grid[k];
    });
    return out;
}

QuenchMap quench_map(const Scene& scene, const std::vector<double>& P_start_grid,
                     const std::vector<double>& P_end_grid, const ExperimentSettings& s,
                     const HierarchyBasis* basis) {
    if (P_start_grid.empty() || P_end_grid.empty())
        throw ConfigError("map grids must be nonempty");

    auto starts = continuation_sweep(scene, P_start_grid, s.steady, basis, s.rep);
    auto ends = continuation_sweep(scene, P_end_grid, s.steady, basis, s.rep);

    QuenchMap map;
    map.P_start_grid = P_start_grid;
    map.P_end_grid = P_end_grid;
    const int nr = static_cast<int>(P_start_grid.size());
    const int nc = static_cast<int>(P_end_grid.size());
    map.t_eq.setConstant(nr, nc, NaN);
    map.converged.setConstant(nr, nc, false);

    parallel_for(s.jobs, nr * nc, [&](int cell) {
        const int r = cell / nc, c = cell % nc;
        if (!starts[r].converged || !ends[c].converged) return;
        QuenchRecord rec = run_quench(scene, basis, starts[r].state, ends[c],
                                      P_end_grid[c], s);
        map.t_eq(r, c) = rec.t_eq;
        map.converged(r, c) = rec.converged;
    });
    return map;
}

ScheduleRecord run_schedule(const Scene& scene, const PumpSchedule& schedule,
                            const ExperimentSettings& s, const HierarchyBasis* basis) {
    schedule.validate();
    const int nm = scene.n_modes();

    const double P0 = schedule.segments.front().P;
    const double Pf = schedule.segments.back().P;
    const double t_switch = schedule.last_switch_time();

    SteadyState ss0 = find_steady(
        scene, P0, to_representation(scene, basis, steady_seed(scene, P0), s.rep), s.steady,
        basis);
    if (!ss0.converged)
        throw SolverError("no steady state at the schedule's initial pump");
    SteadyState ssf = find_steady(scene, Pf, ss0.state, s.steady, basis);
    if (!ssf.converged) {
        ssf = find_steady(scene, Pf,
                          to_representation(scene, basis, steady_seed(scene, Pf), s.rep),
                          s.steady, basis);
        if (!ssf.converged)
            throw SolverError("no steady state at the schedule's final pump");
    }

    ScheduleRecord out;
    out.per_mode_overall.assign(nm, ModeRecord{});
    for (int i = 0; i < nm; ++i) {
        out.per_mode_overall[i].n_start = ss0.state.n[i];
        out.per_mode_overall[i].n_peak = ss0.state.n[i];
        out.per_mode_overall[i].n_end = ssf.state.n[i];
    }

    // integrate up to the final switch, tracking peaks only
    SystemState st = ss0.state;
    st.t = 0.0;
    if (t_switch > 0) {
        integrate(scene, basis, st, schedule, t_switch, s.integrator,
                  [&](const DenseStep& step) {
                      const auto n = step.y_end->head(nm);
                      for (int i = 0; i < nm; ++i) {
                          if (n[i] > out.per_mode_overall[i].n_peak) {
                              out.per_mode_overall[i].n_peak = n[i];
                              out.per_mode_overall[i].t_peak = step.t_end;
                          }
                      }
                      return ObserverAction::Continue;
                  });
    }

    // final leg, timed from the switch
    st.t = 0.0;
    out.final_leg = run_quench(scene, basis, st, ssf, Pf, s);
    out.final_leg.P_start = schedule.segments.size() > 1
                                ? schedule.segments[schedule.segments.size() - 2].P
                                : P0;
    out.total_time = t_switch + out.final_leg.t_eq;
    for (int i = 0; i < nm; ++i) {
        if (out.final_leg.per_mode[i].n_peak > out.per_mode_overall[i].n_peak) {
            out.per_mode_overall[i].n_peak = out.final_leg.per_mode[i].n_peak;
            out.per_mode_overall[i].t_peak = t_switch + out.final_leg.per_mode[i].t_peak;
        }
    }
    return out;
}

QuenchRecord big_quench_trace(const Scene& scene, double P_start, double P_end,
                              const std::vector<double>& sample_times,
                              const ExperimentSettings& s, const HierarchyBasis* basis) {
    if (sample_times.empty()) throw ConfigError("trace requires sample times");
    auto seed = steady_seed(scene, P_start);
    SteadyState ss_start = find_steady(
        scene, P_start, to_representation(scene, basis, seed, s.rep), s.steady, basis);
    SteadyState ss_end = find_steady(scene, P_end, ss_start.state, s.steady, basis);
    if (!ss_end.converged) {
        ss_end = find_steady(
            scene, P_end,
            to_representation(scene, basis, steady_seed(scene, P_end), s.rep), s.steady,
            basis);
        if (!ss_end.converged)
            throw SolverError("no steady state at P_end = " + std::to_string(P_end));
    }
    QuenchRecord rec = run_quench(scene, basis, ss_start.state, ss_end, P_end, s,
                                  sample_times, /*stop_at_threshold=*/false);
    rec.P_start = P_start;
    return rec;
}

} // namespace pbec
