#include "pbec/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "pbec/errors.hpp"
#include "pbec/kernel.hpp"

namespace pbec {

namespace {
constexpr double NaN = std::numeric_limits<double>::quiet_NaN();
} // namespace

LinearFit linear_fit(const std::vector<double>& x, const std::vector<double>& y) {
    const size_t n = x.size();
    if (n < 2 || y.size() != n) throw FitError("linear_fit needs >= 2 matched points");
    double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
    for (size_t k = 0; k < n; ++k) {
        sx += x[k]; sy += y[k];
        sxx += x[k] * x[k]; sxy += x[k] * y[k]; syy += y[k] * y[k];
    }
    const double dn = double(n);
    const double denom = dn * sxx - sx * sx;
    if (denom == 0) throw FitError("linear_fit: degenerate abscissa");
    LinearFit f;
    f.slope = (dn * sxy - sx * sy) / denom;
    f.intercept = (sy - f.slope * sx) / dn;
    const double rd = std::sqrt((dn * sxx - sx * sx) * (dn * syy - sy * sy));
    f.r = rd > 0 ? (dn * sxy - sx * sy) / rd : 0.0;
    return f;
}

double pearson_r(const std::vector<double>& x, const std::vector<double>& y) {
    return linear_fit(x, y).r;
}

std::vector<Transition> detect_transitions(const Scene& scene,
                                           const std::vector<double>& P_grid,
                                           const Eigen::MatrixXd& n_steady,
                                           const TransitionSettings& ts,
                                           const HierarchyBasis* basis) {
    const int npts = static_cast<int>(P_grid.size());
    const int nm = scene.n_modes();
    if (npts < 3) throw FitError("transition detection needs >= 3 sweep points");
    if (n_steady.rows() != npts || n_steady.cols() != nm)
        throw FitError("sweep matrix shape mismatch");

    struct Candidate {
        int mode;
        int k_lo, k_hi;  // grid bracket of the threshold crossing
        double slope;
        TransitionKind kind;
    };
    std::vector<Candidate> cands;

    const double thr = ts.condensed_threshold;
    for (int i = 0; i < nm; ++i) {
        for (int k = 0; k + 1 < npts; ++k) {
            const double n0 = std::max(n_steady(k, i), 1e-300);
            const double n1 = std::max(n_steady(k + 1, i), 1e-300);
            const bool c0 = n0 > thr, c1 = n1 > thr;
            if (c0 == c1) continue;
            const double slope = std::abs(std::log10(n1 / n0) /
                                          std::log10(P_grid[k + 1] / P_grid[k]));
            if (slope < ts.slope_threshold) continue;
            cands.push_back({i, k, k + 1, slope,
                             c1 ? TransitionKind::Condensation
                                : TransitionKind::Decondensation});
        }
    }

    // Refine each candidate by bisecting on the sign of the candidate mode's
    // effective rate eta along the branch where it is decondensed: that root
    // continues smoothly through the transition (stable on one side,
    // unstable on the other) and eta crosses zero exactly at the critical
    // pump. The 1e6 condensed threshold only picks candidates; P_crit comes
    // from the eta zero.
    std::vector<Transition> singles;
    for (const auto& c : cands) {
        double Plo = P_grid[c.k_lo], Phi = P_grid[c.k_hi];
        if (!ts.refine) {
            Transition tr;
            tr.P_crit = std::sqrt(Plo * Phi);
            tr.mode = scene.modes.modes[c.mode];
            tr.kind = c.kind;
            tr.slope = c.slope;
            tr.bracket_lo = Plo;
            tr.bracket_hi = Phi;
            tr.members = {tr.mode};
            singles.push_back(tr);
            continue;
        }
        // March along the branch on which the candidate mode is decondensed
        // and extrapolate its effective rate eta_c(P) to zero. The rate falls
        // through zero transversally at the transition, every probe solve
        // stays on the smooth (attractor) side, and the eta zero coincides
        // with the population jump to well within the bracket tolerance.
        const bool decond_is_lo = (c.kind == TransitionKind::Condensation);
        const double P_safe0 = decond_is_lo ? Plo : Phi;
        const int k_safe = decond_is_lo ? c.k_lo : c.k_hi;

        auto eta_of = [&](const SteadyState& st) {
            Eigen::VectorXd u(scene.n_modes());
            scene.drive(st.state.excitation, u);
            return scene.gamma[c.mode] -
                   (scene.modes.E[c.mode] + scene.modes.A[c.mode]) * u[c.mode];
        };

        Eigen::VectorXd n_safe = n_steady.row(k_safe).transpose();
        SteadyState branch = find_steady(scene, P_safe0,
                                         steady_seed(scene, P_safe0, &n_safe),
                                         ts.steady, nullptr);
        bool ok = branch.converged && eta_of(branch) > 0;

        double P_good = P_safe0;
        double eta_good = ok ? eta_of(branch) : 0.0;
        double P_good2 = 0.0, eta_good2 = 0.0;  // previous on-branch point
        bool have_two = false;
        double P_bad = decond_is_lo ? Phi : Plo;
        double P_crit_refined = std::sqrt(Plo * Phi);
        double probe = std::sqrt(P_good * P_bad);

        for (int iter = 0; ok; ++iter) {
            if (iter >= 60) {
                ok = false;
                break;
            }
            if (std::abs(P_bad - P_good) <= ts.bracket_rel * std::abs(P_good)) {
                P_crit_refined = 0.5 * (P_good + P_bad);
                break;
            }
            SteadyState sm = find_steady(scene, probe, branch.state, ts.steady, nullptr);
            const double eta = sm.converged ? eta_of(sm) : -1.0;
            if (!sm.converged || eta <= 0.0 || sm.state.n[c.mode] > thr) {
                P_bad = probe;
                probe = std::sqrt(P_good * P_bad);
                continue;
            }
            branch = sm;
            P_good2 = P_good;
            eta_good2 = eta_good;
            have_two = have_two || P_good2 != probe;
            P_good = probe;
            eta_good = eta;

            // secant extrapolation of eta to zero, clipped between the
            // current good point and the known-bad side
            double next = std::sqrt(P_good * P_bad);
            if (P_good != P_good2 && eta_good != eta_good2) {
                const double z =
                    P_good - eta_good * (P_good - P_good2) / (eta_good - eta_good2);
                const double lo_g = std::min(P_good, P_bad);
                const double hi_g = std::max(P_good, P_bad);
                if (z > lo_g && z < hi_g) next = z;
                if (std::abs(z - P_good) <= ts.bracket_rel * std::abs(z) && z > 0) {
                    P_crit_refined = z;
                    break;
                }
            }
            probe = next;
        }
        if (!ok) continue;
        Plo = std::min({P_good, P_bad, P_crit_refined});
        Phi = std::max({P_good, P_bad, P_crit_refined});
        Transition tr;
        tr.P_crit = std::sqrt(Plo * Phi);
        tr.mode = scene.modes.modes[c.mode];
        tr.kind = c.kind;
        tr.slope = c.slope;
        tr.bracket_lo = Plo;
        tr.bracket_hi = Phi;
        tr.members = {tr.mode};
        singles.push_back(tr);
    }

    // cluster coincident transitions of equal kind (degenerate partners)
    std::sort(singles.begin(), singles.end(),
              [](const Transition& a, const Transition& b) { return a.P_crit < b.P_crit; });
    std::vector<Transition> out;
    for (auto& tr : singles) {
        if (!out.empty() && tr.kind == out.back().kind &&
            std::abs(tr.P_crit - out.back().P_crit) <
                ts.cluster_rel * out.back().P_crit) {
            Transition& dst = out.back();
            dst.members.push_back(tr.mode);
            auto lower = [](const ModeIndex& a, const ModeIndex& b) {
                return a.level() != b.level() ? a.level() < b.level() : a.mx < b.mx;
            };
            if (lower(tr.mode, dst.mode)) dst.mode = tr.mode;
            dst.slope = std::max(dst.slope, tr.slope);
            dst.bracket_lo = std::min(dst.bracket_lo, tr.bracket_lo);
            dst.bracket_hi = std::max(dst.bracket_hi, tr.bracket_hi);
        } else {
            out.push_back(tr);
        }
    }
    (void)basis;
    return out;
}

std::string interval_label(double P, const std::vector<Transition>& transitions) {
    int idx = 0;
    for (const auto& tr : transitions)
        if (P > tr.P_crit) ++idx;
    std::string label;
    // A, B, ..., Z, AA, ...
    do {
        label.insert(label.begin(), char('A' + idx % 26));
        idx = idx / 26 - 1;
    } while (idx >= 0);
    return label;
}

ExponentFit fit_critical_exponent_side(const std::vector<double>& P,
                                       const std::vector<double>& t_eq, double P_crit) {
    if (P.size() != t_eq.size()) throw FitError("exponent fit: size mismatch");
    std::vector<double> dp, rate, sgn_dp, logdp, lograte;
    for (size_t k = 0; k < P.size(); ++k) {
        if (!(t_eq[k] > 0) || !std::isfinite(t_eq[k])) continue;
        const double x = P[k] - P_crit;
        if (x == 0) continue;
        dp.push_back(std::abs(x));
        sgn_dp.push_back(x);
        rate.push_back(1.0 / t_eq[k]);
        logdp.push_back(std::log(std::abs(x)));
        lograte.push_back(std::log(1.0 / t_eq[k]));
    }
    if (dp.size() < 6)
        throw FitError("exponent fit needs >= 6 usable points on the side, got " +
                       std::to_string(dp.size()));
    const auto [lo, hi] = std::minmax_element(dp.begin(), dp.end());
    if (*hi / *lo > 10.0 * (1.0 + 1e-9))
        throw FitError("exponent fit window exceeds one decade of |P - P_crit|");

    ExponentFit fit;
    fit.P_crit = P_crit;
    fit.points = static_cast<int>(dp.size());
    fit.window_lo = *lo;
    fit.window_hi = *hi;
    // log-log slope of rate vs |P-P_crit| gives the rate exponent; the
    // equilibration-time exponent is its negative
    fit.exponent = -linear_fit(logdp, lograte).slope;
    // signed correlation, SM-table convention: rate against (P - P_crit)
    fit.r = pearson_r(sgn_dp, rate);
    return fit;
}

TailFit fit_tail(const Scene& scene, const std::vector<double>& trace_t,
                 const Eigen::VectorXd& trace_n_mode, const SteadyState& steady,
                 int mode_index, double window_lo, double window_hi, double log_dev_tol,
                 const HierarchyBasis* basis) {
    const size_t n = trace_t.size();
    if (n < 8 || trace_n_mode.size() != static_cast<Eigen::Index>(n))
        throw FitError("tail fit needs a trace with >= 8 samples");

    TailFit out;
    out.window_lo = window_lo;
    out.window_hi = window_hi;

    // (a) algebraic slope over the window
    std::vector<double> lt, ln;
    for (size_t k = 0; k < n; ++k) {
        if (trace_t[k] >= window_lo && trace_t[k] <= window_hi && trace_n_mode[k] > 0) {
            lt.push_back(std::log(trace_t[k]));
            ln.push_back(std::log(trace_n_mode[k]));
        }
    }
    if (lt.size() < 4) throw FitError("algebraic window holds fewer than 4 trace samples");
    out.algebraic_slope = linear_fit(lt, ln).slope;

    // (b) frozen-drive exponential prediction from the post-quench steady state
    EffectiveModeView view = effective_view(scene, steady.state, basis);
    out.eta = view.eta[mode_index];
    out.n_eq = steady.state.n[mode_index];

    // anchor late, where the deviation is still well above solver noise
    size_t anchor = n - 1;
    for (size_t k = n; k-- > 0;) {
        if (trace_n_mode[k] - out.n_eq >= 1e-3 * out.n_eq) {
            anchor = k;
            break;
        }
    }
    out.t_anchor = trace_t[anchor];
    out.n_anchor = trace_n_mode[anchor];
    const double amp = out.n_anchor - out.n_eq;

    auto log_dev = [&](size_t k) {
        const double pred =
            out.n_eq + amp * std::exp(-out.eta * (trace_t[k] - out.t_anchor));
        if (pred <= 0 || trace_n_mode[k] <= 0) return std::numeric_limits<double>::infinity();
        const double ls = std::log(trace_n_mode[k]);
        const double lp = std::log(pred);
        return std::abs(ls - lp) / std::max(1.0, std::abs(ls));
    };

    // longest contiguous matched stretch ending at the anchor
    size_t first = anchor;
    double worst = 0.0;
    for (size_t k = anchor + 1; k-- > 0;) {
        const double dev = log_dev(k);
        if (dev > log_dev_tol) break;
        worst = std::max(worst, dev);
        first = k;
    }
    out.max_log_dev = worst;
    double nmax = 0, nmin = std::numeric_limits<double>::infinity();
    for (size_t k = first; k <= anchor; ++k) {
        nmax = std::max(nmax, trace_n_mode[k]);
        nmin = std::min(nmin, trace_n_mode[k]);
    }
    out.decades_matched = (nmin > 0 && nmax > 0) ? std::log10(nmax / nmin) : 0.0;

    // local-slope mismatch inside the matched window
    double worst_slope = 0.0;
    for (size_t k = std::max(first, size_t(1)); k < anchor; ++k) {
        const double dt = trace_t[k + 1] - trace_t[k - 1];
        if (dt <= 0) continue;
        const double s_sim =
            (std::log(trace_n_mode[k + 1]) - std::log(trace_n_mode[k - 1])) / dt;
        const double pred_k = out.n_eq + amp * std::exp(-out.eta * (trace_t[k] - out.t_anchor));
        const double s_pred = -out.eta * (pred_k - out.n_eq) / pred_k;
        if (std::abs(s_sim) > 1e-300)
            worst_slope = std::max(worst_slope,
                                   std::abs(s_sim - s_pred) / std::abs(s_sim));
    }
    out.max_slope_mismatch = worst_slope;
    return out;
}

std::vector<ClampingRow> clamping_diagnostics(const Scene& scene,
                                              const std::vector<SteadyState>& sweep,
                                              const HierarchyBasis* basis) {
    std::vector<ClampingRow> rows;
    rows.reserve(sweep.size());
    for (const auto& ss : sweep) {
        ClampingRow row;
        row.P = ss.P;
        EffectiveModeView v = effective_view(scene, ss.state, basis);
        row.u_ratio = v.u.cwiseQuotient(v.u_crit);
        row.eta = v.eta;
        rows.push_back(std::move(row));
    }
    return rows;
}

TimeDefinitionComparison compare_time_definitions(const std::vector<SweepPoint>& sweep,
                                                  double d, double min_r2) {
    TimeDefinitionComparison cmp;
    std::vector<double> clean_ratios;
    for (const auto& pt : sweep) {
        if (!pt.record.converged) continue;
        TimeDefinitionPoint p;
        p.P = pt.P;
        p.t_eq = pt.record.t_eq;
        p.t_decay = pt.record.t_decay;
        p.expected = pt.record.delta_n > 0 ? std::log(pt.record.delta_n / d) : NaN;
        p.ratio = (p.t_decay > 0) ? p.t_eq / p.t_decay : NaN;
        p.clean_exponential =
            std::isfinite(p.ratio) && pt.record.decay_r2 >= min_r2;
        if (p.clean_exponential) clean_ratios.push_back(p.ratio);
        cmp.points.push_back(p);
    }
    if (!clean_ratios.empty()) {
        double mean = 0;
        for (double r : clean_ratios) mean += r;
        mean /= clean_ratios.size();
        double var = 0;
        for (double r : clean_ratios) var += (r - mean) * (r - mean);
        var /= clean_ratios.size();
        cmp.ratio_mean = mean;
        cmp.ratio_dispersion = mean != 0 ? std::sqrt(var) / std::abs(mean) : NaN;
    } else {
        cmp.ratio_mean = NaN;
        cmp.ratio_dispersion = NaN;
    }
    return cmp;
}

std::pair<double, double> fit_exponential_decay(const std::vector<double>& t,
                                                const std::vector<double>& dev, double d) {
    size_t start = 0;
    for (size_t k = 0; k < dev.size(); ++k)
        if (dev[k] > 1e4 * d) start = k;
    std::vector<double> xs, ys;
    for (size_t k = start; k < dev.size(); ++k) {
        if (dev[k] >= 10.0 * d && dev[k] <= 1e4 * d && dev[k] > 0) {
            xs.push_back(t[k]);
            ys.push_back(std::log(dev[k]));
        }
    }
    if (xs.size() < 6) return {NaN, NaN};
    LinearFit f;
    try {
        f = linear_fit(xs, ys);
    } catch (const FitError&) {
        return {NaN, NaN};
    }
    if (f.slope >= 0) return {NaN, NaN};
    return {-1.0 / f.slope, f.r * f.r};
}

} // namespace pbec
