#include "pbec/radau.hpp"

#include <algorithm>
#include <cmath>

#include "pbec/errors.hpp"

namespace pbec {

namespace {

constexpr double UROUND = 2.3e-16;

// Radau IIA, 3 stages. Collocation nodes and the eigen-decomposition of the
// inverse Butcher matrix (one real eigenvalue u1, one complex pair
// alpha +- i beta), with the stage transformation matrices T, T^-1.
struct Radau5Constants {
    double c1, c2, c1m1, c2m1, c1mc2;
    double dd1, dd2, dd3;
    double u1, alph, beta;
    double t11, t12, t13, t21, t22, t23, t31;
    double ti11, ti12, ti13, ti21, ti22, ti23, ti31, ti32, ti33;

    Radau5Constants() {
        const double sq6 = std::sqrt(6.0);
        c1 = (4.0 - sq6) / 10.0;
        c2 = (4.0 + sq6) / 10.0;
        c1m1 = c1 - 1.0;
        c2m1 = c2 - 1.0;
        c1mc2 = c1 - c2;
        dd1 = -(13.0 + 7.0 * sq6) / 3.0;
        dd2 = (-13.0 + 7.0 * sq6) / 3.0;
        dd3 = -1.0 / 3.0;
        const double cbrt9 = std::cbrt(9.0);
        const double cbrt81 = std::cbrt(81.0);
        u1 = 30.0 / (6.0 + cbrt81 - cbrt9);
        double al = (12.0 - cbrt81 + cbrt9) / 60.0;
        double be = (cbrt81 + cbrt9) * std::sqrt(3.0) / 60.0;
        const double cno = al * al + be * be;
        alph = al / cno;
        beta = be / cno;
        t11 = 9.1232394870892942792e-02;
        t12 = -0.14125529502095420843;
        t13 = -3.0029194105147424492e-02;
        t21 = 0.24171793270710701896;
        t22 = 0.20412935229379993199;
        t23 = 0.38294211275726193779;
        t31 = 0.96604818261509293619;
        ti11 = 4.3255798900631553510;
        ti12 = 0.33919925181580986954;
        ti13 = 0.54177053993587487119;
        ti21 = -4.1787185915519047273;
        ti22 = -0.32768282076106238708;
        ti23 = 0.47662355450055045196;
        ti31 = -0.50287263494578687595;
        ti32 = 2.5719269498556054292;
        ti33 = -0.59603920482822492497;
    }
};

const Radau5Constants RC;

} // namespace

IntegrationStats radau5(OdeSystem& sys, Eigen::VectorXd& y, double t0, double t1,
                        const IntegratorSettings& st, const StepObserver& observer) {
    const int n = sys.dim();
    const int np = sys.n_photon();
    IntegrationStats stats;
    stats.t_final = t0;
    if (t1 <= t0) return stats;

    const double rtol = st.rel_tol;
    const double fnewt = std::max(10.0 * UROUND / rtol, std::min(0.03, std::sqrt(rtol)));
    const int nit = 7;
    const double thet = 0.001;    // Jacobian refresh threshold
    const double quot1 = 1.0, quot2 = 1.2;
    const double facl = 5.0, facr = 0.125, safe = 0.9;

    auto weights = [&](const Eigen::VectorXd& yy, Eigen::VectorXd& w) {
        for (int i = 0; i < n; ++i) {
            const double atol = i < np ? st.abs_tol_n : st.abs_tol_f;
            w[i] = atol + rtol * std::abs(yy[i]);
        }
    };
    auto scaled_rms = [&](const Eigen::VectorXd& v, const Eigen::VectorXd& w) {
        double s = 0.0;
        for (int i = 0; i < n; ++i) {
            const double q = v[i] / w[i];
            s += q * q;
        }
        return std::sqrt(s / n);
    };

    double t = t0;
    double h = std::min({st.initial_step, st.max_step, t1 - t0});
    double hold = h;
    double hacc = 0.0, erracc = 0.0;
    double faccon = 1.0;
    double theta = 2.0 * thet;  // force a Jacobian on the first step
    bool first = true, reject = false, last = false;
    bool need_jac = true, need_factor = true;

    Eigen::VectorXd w(n), f0(n);
    Eigen::VectorXd z1(n), z2(n), z3(n), w1(n), w2(n), w3(n);
    Eigen::VectorXd g1(n), g2(n), g3(n), tmp(n), tmp2(n), f1(n), f2(n), f3(n);
    Eigen::VectorXd cont0(n), cont1(n), cont2(n), cont3(n);
    Eigen::VectorXd ynew(n);

    sys.rhs(y, f0);
    ++stats.n_rhs;
    weights(y, w);

    while (t < t1) {
        if (stats.n_steps++ > st.max_steps)
            throw SolverError("radau5: step budget exceeded at t = " + std::to_string(t));
        if (h < std::abs(t) * UROUND * 10.0 || h < 1e-300)
            throw SolverError("radau5: step size underflow at t = " + std::to_string(t) +
                              " (stiffness failure)");
        if (t + 1.0001 * h >= t1) {
            h = t1 - t;
            last = true;
        } else {
            last = false;
        }

        if (need_jac) {
            sys.prepare_jacobian(y);
            ++stats.n_jac;
            need_jac = false;
            need_factor = true;
        }
        if (need_factor) {
            sys.factor_real(RC.u1 / h);
            sys.factor_complex(RC.alph / h, RC.beta / h);
            ++stats.n_factor;
            need_factor = false;
        }

        // stage start values: zero before the first accepted step, otherwise
        // extrapolate the previous collocation polynomial
        if (first) {
            z1.setZero(); z2.setZero(); z3.setZero();
            w1.setZero(); w2.setZero(); w3.setZero();
        } else {
            const double c3q = h / hold;
            const double c1q = RC.c1 * c3q, c2q = RC.c2 * c3q;
            for (int i = 0; i < n; ++i) {
                const double ak1 = cont1[i], ak2 = cont2[i], ak3 = cont3[i];
                z1[i] = c1q * (ak1 + (c1q - RC.c2m1) * (ak2 + (c1q - RC.c1m1) * ak3));
                z2[i] = c2q * (ak1 + (c2q - RC.c2m1) * (ak2 + (c2q - RC.c1m1) * ak3));
                z3[i] = c3q * (ak1 + (c3q - RC.c2m1) * (ak2 + (c3q - RC.c1m1) * ak3));
            }
            for (int i = 0; i < n; ++i) {
                w1[i] = RC.ti11 * z1[i] + RC.ti12 * z2[i] + RC.ti13 * z3[i];
                w2[i] = RC.ti21 * z1[i] + RC.ti22 * z2[i] + RC.ti23 * z3[i];
                w3[i] = RC.ti31 * z1[i] + RC.ti32 * z2[i] + RC.ti33 * z3[i];
            }
        }

        // simplified Newton on the transformed stage equations
        faccon = std::pow(std::max(faccon, UROUND), 0.8);
        theta = std::abs(thet);
        double dyno = 0.0, dynold = 0.0, thqold = 0.0, dyth_at_break = 0.0;
        bool converged = false, diverged = false;
        int newt = 0;
        const double fac1 = RC.u1 / h;
        const double alphn = RC.alph / h, betan = RC.beta / h;
        for (; newt < nit; ++newt) {
            tmp = y + z1; sys.rhs(tmp, f1);
            tmp = y + z2; sys.rhs(tmp, f2);
            tmp = y + z3; sys.rhs(tmp, f3);
            stats.n_rhs += 3;
            for (int i = 0; i < n; ++i) {
                g1[i] = RC.ti11 * f1[i] + RC.ti12 * f2[i] + RC.ti13 * f3[i];
                g2[i] = RC.ti21 * f1[i] + RC.ti22 * f2[i] + RC.ti23 * f3[i];
                g3[i] = RC.ti31 * f1[i] + RC.ti32 * f2[i] + RC.ti33 * f3[i];
            }
            g1 -= fac1 * w1;
            tmp = g2 - (alphn * w2 - betan * w3);
            tmp2 = g3 - (alphn * w3 + betan * w2);
            sys.solve_real(g1);
            sys.solve_complex(tmp, tmp2);

            dyno = std::sqrt((scaled_rms(g1, w) * scaled_rms(g1, w) +
                              scaled_rms(tmp, w) * scaled_rms(tmp, w) +
                              scaled_rms(tmp2, w) * scaled_rms(tmp2, w)) / 3.0);
            w1 += g1; w2 += tmp; w3 += tmp2;
            for (int i = 0; i < n; ++i) {
                z1[i] = RC.t11 * w1[i] + RC.t12 * w2[i] + RC.t13 * w3[i];
                z2[i] = RC.t21 * w1[i] + RC.t22 * w2[i] + RC.t23 * w3[i];
                z3[i] = RC.t31 * w1[i] + w2[i];
            }

            if (newt > 0) {
                const double thq = dyno / std::max(dynold, 1e-300);
                theta = (newt == 1) ? thq : std::sqrt(thq * thqold);
                thqold = thq;
                if (theta < 0.99) {
                    faccon = theta / (1.0 - theta);
                    const double dyth = faccon * dyno *
                                        std::pow(theta, nit - 1 - newt) / fnewt;
                    if (dyth >= 1.0) {
                        dyth_at_break = dyth;
                        diverged = true;
                        break;
                    }
                } else {
                    diverged = true;
                    break;
                }
            }
            dynold = std::max(dyno, UROUND);
            if (faccon * dyno <= fnewt || dyno == 0.0) { converged = true; break; }
        }

        if (!converged) {
            // halve on divergence, scale down harder on predicted slow convergence
            double hhfac = 0.5;
            if (diverged && dyth_at_break >= 1.0) {
                const double qnewt = std::clamp(dyth_at_break, 1e-4, 20.0);
                hhfac = 0.8 * std::pow(qnewt, -1.0 / (4.0 + nit - 1 - newt));
            }
            h *= hhfac;
            reject = true;
            ++stats.n_rejected;
            need_factor = true;
            continue;
        }

        // error estimate: solve (u1/h I - J) est = f0 + sum dd_i z_i / h
        const double hee1 = RC.dd1 / h, hee2 = RC.dd2 / h, hee3 = RC.dd3 / h;
        for (int i = 0; i < n; ++i) f2[i] = hee1 * z1[i] + hee2 * z2[i] + hee3 * z3[i];
        tmp = f2 + f0;
        sys.solve_real(tmp);
        double err = std::max(scaled_rms(tmp, w), 1e-10);
        if (err >= 1.0 && (first || reject)) {
            tmp2 = y + tmp;
            sys.rhs(tmp2, f1);
            ++stats.n_rhs;
            tmp = f1 + f2;
            sys.solve_real(tmp);
            err = std::max(scaled_rms(tmp, w), 1e-10);
        }

        const int newt_used = std::min(newt + 1, nit);
        double fac = safe * (1.0 + 2.0 * nit) / (newt_used + 2.0 * nit);
        double quot = std::clamp(std::pow(err, 0.25) / fac, facr, facl);
        double hnew = h / quot;

        if (err >= 1.0) {
            if (first) { h *= 0.1; } else { h = hnew; }
            reject = true;
            ++stats.n_rejected;
            need_factor = true;
            continue;
        }

        // accepted
        ++stats.n_accepted;
        // predictive (Gustafsson) controller
        if (stats.n_accepted > 1) {
            double facgus = (hacc / h) * std::pow(err * err / erracc, 0.25) / safe;
            facgus = std::clamp(facgus, facr, facl);
            quot = std::max(quot, facgus);
            hnew = h / quot;
        }
        hacc = h;
        erracc = std::max(1e-2, err);

        ynew = y + z3;
        if (!sys.clamp_to_box(ynew, rtol))
            throw StateError("state left the physical box at t = " + std::to_string(t + h));

        // dense output coefficients (interpolation variable s = (t - t_end)/h)
        cont0 = ynew;
        for (int i = 0; i < n; ++i) {
            cont1[i] = (z2[i] - z3[i]) / RC.c2m1;
            const double ak = (z1[i] - z2[i]) / RC.c1mc2;
            double acont3 = z1[i] / RC.c1;
            acont3 = (ak - acont3) / RC.c2;
            cont2[i] = (ak - cont1[i]) / RC.c1m1;
            cont3[i] = cont2[i] - acont3;
        }

        const double t_old = t;
        t += h;
        hold = h;
        y = ynew;
        stats.t_final = t;
        weights(y, w);
        sys.rhs(y, f0);
        ++stats.n_rhs;

        if (observer) {
            DenseStep step;
            step.t_start = t_old;
            step.t_end = t;
            step.y_end = &y;
            const double hsol = hold, tsol = t;
            step.eval = [&, hsol, tsol](double tq, Eigen::VectorXd& out) {
                const double s = (tq - tsol) / hsol;
                out.resize(n);
                for (int i = 0; i < n; ++i)
                    out[i] = cont0[i] +
                             s * (cont1[i] + (s - RC.c2m1) * (cont2[i] + (s - RC.c1m1) * cont3[i]));
            };
            if (observer(step) == ObserverAction::Stop) {
                stats.stopped_by_observer = true;
                return stats;
            }
        }
        if (last) break;

        first = false;
        reject = false;
        hnew = std::min({hnew, st.max_step, t1 - t > 0 ? t1 - t + 1e-300 : hnew});

        const double qt = hnew / h;
        if (theta <= thet && qt >= quot1 && qt <= quot2) {
            // convergence was fast and the step barely changes: keep both the
            // Jacobian and the factorization
        } else {
            if (theta > thet) need_jac = true;
            if (std::abs(hnew - h) > 0.0) need_factor = true;
            h = hnew;
        }
    }
    return stats;
}

} // namespace pbec
