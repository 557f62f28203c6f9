#pragma once

#include <Eigen/Dense>

namespace pbec {

enum class Representation { FullField, Hierarchical };

/// Photon occupations plus molecular excitation. In FullField form the
/// excitation block holds f_j per bin (each in [0,1]); in Hierarchical form
/// it holds the stacked per-level coefficient blocks.
struct SystemState {
    Representation rep = Representation::FullField;
    Eigen::VectorXd n;           // per-mode photon occupations
    Eigen::VectorXd excitation;  // f field or hierarchy coefficients
    double t = 0.0;

    int dim() const { return static_cast<int>(n.size() + excitation.size()); }

    Eigen::VectorXd pack() const {
        Eigen::VectorXd y(dim());
        y.head(n.size()) = n;
        y.tail(excitation.size()) = excitation;
        return y;
    }
    static SystemState unpack(const Eigen::VectorXd& y, int n_modes,
                              Representation rep, double t = 0.0) {
        SystemState s;
        s.rep = rep;
        s.n = y.head(n_modes);
        s.excitation = y.tail(y.size() - n_modes);
        s.t = t;
        return s;
    }
};

/// Time derivative, shape-matched to its state.
struct Derivative {
    Eigen::VectorXd dn;
    Eigen::VectorXd dexcitation;
};

/// Per-mode reservoir-drive view: u_i = sum_j g_ij N_j f_j, its critical
/// value u_crit_i = gamma_i/(E_i+A_i), and the effective decay rate
/// eta_i = (E_i+A_i)(u_crit_i - u_i) = gamma_i - (E_i+A_i) u_i.
struct EffectiveModeView {
    Eigen::VectorXd u;
    Eigen::VectorXd u_crit;
    Eigen::VectorXd eta;
};

} // namespace pbec
