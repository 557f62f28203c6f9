#include "pbec/solver.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <limits>

#include "pbec/errors.hpp"
#include "pbec/kernel.hpp"

namespace pbec {

std::unique_ptr<OdeSystem> make_system(const Scene& scene, const HierarchyBasis* basis,
                                       Representation rep, double P) {
    if (rep == Representation::FullField)
        return std::make_unique<FullFieldSystem>(scene, P);
    if (!basis) throw StateError("hierarchical representation requires a basis");
    return std::make_unique<HierarchicalSystem>(scene, *basis, P);
}

IntegrationStats integrate(const Scene& scene, const HierarchyBasis* basis,
                           SystemState& state, const PumpSchedule& schedule, double t_end,
                           const IntegratorSettings& settings, const StepObserver& observer) {
    schedule.validate();
    auto sys = make_system(scene, basis, state.rep, schedule.segments.front().P);

    IntegrationStats total;
    Eigen::VectorXd y = state.pack();
    double t = state.t;
    for (size_t k = 0; k < schedule.segments.size(); ++k) {
        const double seg_start = schedule.segments[k].start;
        const double seg_end =
            k + 1 < schedule.segments.size() ? schedule.segments[k + 1].start : t_end;
        if (seg_end <= t) continue;
        const double from = std::max(t, seg_start);
        const double to = std::min(seg_end, t_end);
        if (to <= from) continue;
        sys->set_pump(schedule.segments[k].P);
        IntegrationStats s = radau5(*sys, y, from, to, settings, observer);
        total.n_steps += s.n_steps;
        total.n_accepted += s.n_accepted;
        total.n_rejected += s.n_rejected;
        total.n_rhs += s.n_rhs;
        total.n_jac += s.n_jac;
        total.n_factor += s.n_factor;
        total.t_final = s.t_final;
        t = s.t_final;
        if (s.stopped_by_observer) {
            total.stopped_by_observer = true;
            break;
        }
        if (to >= t_end) break;
    }
    state = SystemState::unpack(y, scene.n_modes(), state.rep, t);
    return total;
}

double steady_residual(const Scene& scene, const HierarchyBasis* basis,
                       const SystemState& state, double P) {
    Derivative d = state.rep == Representation::FullField
                       ? rhs_full(scene, state, P, false)
                       : rhs_hier(scene, *basis, state, P);
    double s = 0.0;
    long cnt = 0;
    for (int i = 0; i < state.n.size(); ++i) {
        const double q = d.dn[i] / (1.0 + std::abs(state.n[i]));
        s += q * q;
        ++cnt;
    }
    for (int j = 0; j < state.excitation.size(); ++j) {
        const double q = d.dexcitation[j] / (1.0 + std::abs(state.excitation[j]));
        s += q * q;
        ++cnt;
    }
    return std::sqrt(s / cnt);
}

Eigen::VectorXd balanced_excitation(const Scene& scene, const Eigen::VectorXd& n, double P) {
    const auto& A = scene.modes.A;
    const auto& E = scene.modes.E;
    Eigen::VectorXd wa = A.cwiseProduct(n);
    Eigen::VectorXd wd = wa + (E.array() * (n.array() + 1.0)).matrix();
    Eigen::VectorXd absorb, drain;
    scene.per_bin_mode_sum(wa, absorb);
    scene.per_bin_mode_sum(wd, drain);
    const double gd = scene.params.Gamma_down;
    return (P + absorb.array()) / (gd + P + drain.array());
}

namespace {

// photon residual with the molecular field in exact balance
Eigen::VectorXd reduced_residual(const Scene& scene, const Eigen::VectorXd& n, double P) {
    Eigen::VectorXd f = balanced_excitation(scene, n, P);
    Eigen::VectorXd u(scene.n_modes());
    scene.drive(f, u);
    const auto& A = scene.modes.A;
    const auto& E = scene.modes.E;
    Eigen::VectorXd r(scene.n_modes());
    for (int i = 0; i < scene.n_modes(); ++i)
        r[i] = (n[i] * (E[i] + A[i]) + E[i]) * u[i] - scene.gamma[i] * n[i];
    return r;
}

double reduced_norm(const Scene& scene, const Eigen::VectorXd& r, const Eigen::VectorXd& n) {
    double s = 0.0;
    for (int i = 0; i < r.size(); ++i) {
        const double q = r[i] / (scene.gamma[i] * (n[i] + 1.0));
        s += q * q;
    }
    return std::sqrt(s / r.size());
}

} // namespace

SystemState steady_seed(const Scene& scene, double P, const Eigen::VectorXd* n_guess) {
    const int nm = scene.n_modes();
    const auto& A = scene.modes.A;
    const auto& E = scene.modes.E;

    Eigen::VectorXd n;
    if (n_guess) {
        n = n_guess->cwiseMax(1e-30);
    } else {
        // below-threshold estimate from the photon-free balanced field
        Eigen::VectorXd f0 = balanced_excitation(scene, Eigen::VectorXd::Zero(nm), P);
        Eigen::VectorXd u0(nm);
        scene.drive(f0, u0);
        n.resize(nm);
        for (int i = 0; i < nm; ++i) {
            const double eta = scene.gamma[i] - (E[i] + A[i]) * u0[i];
            n[i] = eta > 0 ? std::max(E[i] * u0[i] / eta, 1e-30) : 1e10;
        }
    }

    // damped Newton in z = log n with a finite-difference Jacobian
    Eigen::VectorXd z = n.array().log();
    const int max_iter = 120;
    double best_norm = std::numeric_limits<double>::infinity();
    Eigen::VectorXd best_z = z;
    for (int it = 0; it < max_iter; ++it) {
        n = z.array().exp();
        Eigen::VectorXd r = reduced_residual(scene, n, P);
        const double rn = reduced_norm(scene, r, n);
        if (rn < best_norm) {
            best_norm = rn;
            best_z = z;
        }
        if (rn < 1e-13) break;

        Eigen::MatrixXd Jz(nm, nm);
        const double eps = 1e-7;
        for (int k = 0; k < nm; ++k) {
            Eigen::VectorXd z2 = z;
            z2[k] += eps;
            Jz.col(k) = (reduced_residual(scene, z2.array().exp(), P) - r) / eps;
        }
        Eigen::VectorXd dz = Jz.partialPivLu().solve(-r);
        if (!dz.allFinite()) break;
        for (int k = 0; k < nm; ++k) dz[k] = std::clamp(dz[k], -3.0, 3.0);

        double lam = 1.0;
        bool improved = false;
        for (int hv = 0; hv < 10; ++hv) {
            Eigen::VectorXd zt = z + lam * dz;
            Eigen::VectorXd nt = zt.array().exp();
            const double rt = reduced_norm(scene, reduced_residual(scene, nt, P), nt);
            if (rt < rn) {
                z = zt;
                improved = true;
                break;
            }
            lam *= 0.5;
        }
        if (!improved) {
            z = z + lam * dz;  // accept the smallest step and keep going
            if (it > max_iter / 2) break;
        }
    }
    n = best_z.array().exp();

    SystemState s;
    s.rep = Representation::FullField;
    s.n = n;
    s.excitation = balanced_excitation(scene, n, P);
    return s;
}

SystemState vacuum_state(const Scene& scene, const HierarchyBasis* basis,
                         Representation rep) {
    SystemState s;
    s.rep = rep;
    s.n = Eigen::VectorXd::Zero(scene.n_modes());
    s.excitation = rep == Representation::FullField
                       ? Eigen::VectorXd::Zero(scene.n_bins())
                       : Eigen::VectorXd::Zero(basis ? basis->total_rank : 0);
    return s;
}

SystemState to_representation(const Scene& scene, const HierarchyBasis* basis,
                              const SystemState& s, Representation rep) {
    if (s.rep == rep) return s;
    if (!basis) throw StateError("representation conversion requires a basis");
    SystemState out;
    out.rep = rep;
    out.n = s.n;
    out.t = s.t;
    out.excitation = rep == Representation::Hierarchical ? basis->project(s.excitation)
                                                         : basis->lift(s.excitation);
    return out;
}

SteadyState find_steady(const Scene& scene, double P, const SystemState& guess,
                        const SteadySettings& settings, const HierarchyBasis* basis) {
    SteadyState result;
    result.P = P;

    auto sys = make_system(scene, basis, guess.rep, P);
    const int n_dim = sys->dim();
    const int np = sys->n_photon();

    Eigen::VectorXd y = guess.pack();
    Eigen::VectorXd r(n_dim);

    auto weighted = [&](const Eigen::VectorXd& yy, const Eigen::VectorXd& rr) {
        double s = 0.0;
        for (int i = 0; i < n_dim; ++i) {
            const double q = rr[i] / (1.0 + std::abs(yy[i]));
            s += q * q;
        }
        return std::sqrt(s / n_dim);
    };

    int total_newton = 0;
    for (int round = 0; round <= settings.max_fallbacks; ++round) {
        bool stalled = true;  // iteration exhaustion also falls back
        for (int it = 0; it < settings.max_newton; ++it) {
            sys->rhs(y, r);
            const double rn = weighted(y, r);
            result.residual_history.push_back(rn);
            if (rn <= settings.newton_tol) {
                result.converged = true;
                stalled = false;
                break;
            }
            sys->prepare_jacobian(y);
            sys->factor_real(0.0);  // -J
            Eigen::VectorXd d = r;
            sys->solve_real(d);     // d = (-J)^-1 r  =  -J^-1 r
            if (!d.allFinite()) break;
            double lam = 1.0;
            bool improved = false;
            for (int hv = 0; hv <= settings.max_halvings; ++hv) {
                Eigen::VectorXd yt = y + lam * d;
                for (int i = 0; i < np; ++i) yt[i] = std::max(yt[i], 0.0);
                sys->rhs(yt, r);
                if (weighted(yt, r) < rn) {
                    y = yt;
                    improved = true;
                    break;
                }
                lam *= 0.5;
            }
            ++total_newton;
            if (!improved) break;
        }
        if (result.converged || !stalled || round == settings.max_fallbacks) break;

        if (round == 0 && guess.rep == Representation::FullField) {
            // re-seed through the photon-only reduced solve, which walks
            // steep branch segments in log-occupation space
            Eigen::VectorXd hint = y.head(np);
            y = steady_seed(scene, P, &hint).pack();
            continue;
        }

        // relax by integration and try Newton again
        for (int i = 0; i < np; ++i) y[i] = std::max(y[i], 0.0);
        if (guess.rep == Representation::FullField)
            for (int j = np; j < n_dim; ++j) y[j] = std::clamp(y[j], 0.0, 1.0);
        SystemState st = SystemState::unpack(y, np, guess.rep);
        IntegratorSettings is = settings.integrator;
        const double horizon = settings.fallback_horizon *
                               std::min(std::pow(10.0, round - 1), 100.0);
        integrate(scene, basis, st, PumpSchedule::constant(P), horizon, is);
        y = st.pack();
    }

    result.newton_iterations = total_newton;
    sys->rhs(y, r);
    result.residual_norm = weighted(y, r);
    result.converged = result.residual_norm <= settings.newton_tol;
    // tidy roundoff-level excursions
    for (int i = 0; i < np; ++i) y[i] = std::max(y[i], 0.0);
    if (guess.rep == Representation::FullField)
        for (int j = np; j < n_dim; ++j) y[j] = std::clamp(y[j], 0.0, 1.0);
    result.state = SystemState::unpack(y, np, guess.rep);
    return result;
}

std::vector<SteadyState> continuation_sweep(const Scene& scene,
                                            const std::vector<double>& P_grid,
                                            const SteadySettings& settings,
                                            const HierarchyBasis* basis,
                                            Representation rep) {
    std::vector<SteadyState> out;
    out.reserve(P_grid.size());
    if (P_grid.empty()) return out;

    auto seed_state = [&](double P, const Eigen::VectorXd* n_hint) {
        SystemState s = steady_seed(scene, P, n_hint);
        return rep == Representation::FullField ? s
                                                : to_representation(scene, basis, s, rep);
    };

    // first point: settle from vacuum, then polish with Newton
    {
        const double P0 = P_grid.front();
        SystemState st = vacuum_state(scene, basis, rep);
        if (P0 > 0) {
            IntegratorSettings is = settings.integrator;
            integrate(scene, basis, st, PumpSchedule::constant(P0), 2000.0, is);
        }
        SteadyState ss = find_steady(scene, P0, st, settings, basis);
        if (!ss.converged) ss = find_steady(scene, P0, seed_state(P0, nullptr), settings, basis);
        out.push_back(std::move(ss));
    }

    for (size_t k = 1; k < P_grid.size(); ++k) {
        const double P = P_grid[k];
        SteadyState ss = find_steady(scene, P, out.back().state, settings, basis);
        if (!ss.converged) {
            // walk a refined sub-grid from the previous pump value
            const double Pprev = P_grid[k - 1];
            SystemState g = out.back().state;
            const int substeps = 8;
            for (int m = 1; m <= substeps; ++m) {
                const double Pm = Pprev * std::pow(P / Pprev, double(m) / substeps);
                SteadyState sm = find_steady(scene, Pm, g, settings, basis);
                if (sm.converged) g = sm.state;
                if (m == substeps) ss = sm;
            }
            if (!ss.converged) {
                SteadyState alt =
                    find_steady(scene, P, seed_state(P, &out.back().state.n), settings, basis);
                if (alt.converged) ss = alt;
            }
        }
        out.push_back(std::move(ss));
    }
    return out;
}

} // namespace pbec
