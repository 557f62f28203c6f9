#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

namespace pbec {

/// Cavity eigenmode label [mx, my] of the 2D harmonic oscillator.
struct ModeIndex {
    int mx = 0;
    int my = 0;

    int level() const { return mx + my; }
    ModeIndex mirrored() const { return {my, mx}; }
    bool operator==(const ModeIndex&) const = default;
    std::string label() const {
        return "[" + std::to_string(mx) + "," + std::to_string(my) + "]";
    }
    /// Column-name-safe form, e.g. n_0_1.
    std::string suffix() const {
        return std::to_string(mx) + "_" + std::to_string(my);
    }
};

/// Mode catalog with per-mode absorption/emission rates (units of kappa).
/// Modes of equal level share A and E by construction.
struct ModeSet {
    std::vector<ModeIndex> modes;
    Eigen::VectorXd A;
    Eigen::VectorXd E;
    double kappa = 1.0;

    int count() const { return static_cast<int>(modes.size()); }
    int find(ModeIndex m) const {
        for (int i = 0; i < count(); ++i)
            if (modes[i] == m) return i;
        return -1;
    }
};

/// All (mx,my) with mx+my < max_level, ordered by (level, mx).
/// Rate lists are per level and must have length max_level.
ModeSet build_mode_set(int max_level, const std::vector<double>& A_per_level,
                       const std::vector<double>& E_per_level, double kappa = 1.0);

/// Normalized 1D harmonic-oscillator eigenfunction psi_m(x), l_ho = 1.
double ho_eigenfunction(int m, double x);

/// |psi_mx(x)|^2 |psi_my(y)|^2. Integrates to 1 over the plane.
double mode_intensity(ModeIndex m, double x, double y);

} // namespace pbec
