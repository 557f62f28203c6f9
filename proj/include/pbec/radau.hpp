#pragma once

#include <Eigen/Dense>
#include <functional>

namespace pbec {

/// Linear-algebra and RHS hooks the integrator needs. Implementations own the
/// Jacobian layout (structured Schur solve for the full field, dense LU for
/// the reduced hierarchy) and the pump value.
class OdeSystem {
public:
    virtual ~OdeSystem() = default;
    virtual int dim() const = 0;
    virtual int n_photon() const = 0;
    virtual void set_pump(double P) = 0;
    virtual double pump() const = 0;
    virtual void rhs(const Eigen::VectorXd& y, Eigen::VectorXd& dy) = 0;
    virtual void prepare_jacobian(const Eigen::VectorXd& y) = 0;
    /// Factor (s I - J) with the most recently prepared Jacobian.
    virtual void factor_real(double s) = 0;
    virtual void solve_real(Eigen::VectorXd& b) = 0;
    /// Factor ((sr + i si) I - J).
    virtual void factor_complex(double sr, double si) = 0;
    virtual void solve_complex(Eigen::VectorXd& br, Eigen::VectorXd& bi) = 0;
    /// Clamp y into the physical box; return false when it is outside by
    /// more than the integration tolerance allows.
    virtual bool clamp_to_box(Eigen::VectorXd& y, double rel_slack) = 0;
};

struct IntegratorSettings {
    double rel_tol = 1e-10;
    double abs_tol_n = 1e-20;   // photon occupations
    double abs_tol_f = 1e-18;   // excitation components
    double max_step = 1e30;     // 1/kappa
    double initial_step = 1e-4;
    long max_steps = 50000000;
    bool dense_output = true;   // keep the collocation polynomial per step
};

/// One accepted step; eval interpolates the collocation polynomial on
/// [t_start, t_end]. Both eval and y_end are only valid for the duration of
/// the observer callback.
struct DenseStep {
    double t_start = 0.0;
    double t_end = 0.0;
    const Eigen::VectorXd* y_end = nullptr;
    std::function<void(double t, Eigen::VectorXd&)> eval;
};

enum class ObserverAction { Continue, Stop };
using StepObserver = std::function<ObserverAction(const DenseStep&)>;

struct IntegrationStats {
    long n_steps = 0;
    long n_accepted = 0;
    long n_rejected = 0;
    long n_rhs = 0;
    long n_jac = 0;
    long n_factor = 0;
    bool stopped_by_observer = false;
    double t_final = 0.0;
};

/// Integrate y (in place) from t0 to t1 with the 3-stage Radau IIA method
/// (order 5), simplified Newton on the transformed stage system, analytic
/// Jacobian, adaptive steps and collocation dense output. Throws SolverError
/// on step-size underflow and StateError when the solution leaves the
/// physical box.
IntegrationStats radau5(OdeSystem& sys, Eigen::VectorXd& y, double t0, double t1,
                        const IntegratorSettings& settings,
                        const StepObserver& observer = {});

} // namespace pbec
