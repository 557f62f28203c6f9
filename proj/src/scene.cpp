#include "pbec/scene.hpp"

#include <cmath>
#include <map>

#include "pbec/errors.hpp"

namespace pbec {

ModeSet build_mode_set(int max_level, const std::vector<double>& A_per_level,
                       const std::vector<double>& E_per_level, double kappa) {
    if (max_level < 1)
        throw ConfigError("max_level must be >= 1, got " + std::to_string(max_level));
    if (static_cast<int>(A_per_level.size()) != max_level)
        throw ConfigError("A_per_level has " + std::to_string(A_per_level.size()) +
                          " entries, expected max_level = " + std::to_string(max_level));
    if (static_cast<int>(E_per_level.size()) != max_level)
        throw ConfigError("E_per_level has " + std::to_string(E_per_level.size()) +
                          " entries, expected max_level = " + std::to_string(max_level));

    ModeSet ms;
    ms.kappa = kappa;
    for (int lev = 0; lev < max_level; ++lev) {
        if (A_per_level[lev] <= 0 || E_per_level[lev] <= 0)
            throw ConfigError("rates must be positive at level " + std::to_string(lev));
        for (int mx = 0; mx <= lev; ++mx)
            ms.modes.push_back({mx, lev - mx});
    }
    const int n = ms.count();
    ms.A.resize(n);
    ms.E.resize(n);
    for (int i = 0; i < n; ++i) {
        ms.A[i] = A_per_level[ms.modes[i].level()];
        ms.E[i] = E_per_level[ms.modes[i].level()];
    }
    return ms;
}

double ho_eigenfunction(int m, double x) {
    // three-term recurrence on normalized functions; stable for modest m
    const double h0 = std::pow(M_PI, -0.25) * std::exp(-0.5 * x * x);
    if (m == 0) return h0;
    double pm1 = h0;
    double p = std::sqrt(2.0) * x * h0;
    for (int k = 1; k < m; ++k) {
        const double next =
            std::sqrt(2.0 / (k + 1)) * x * p - std::sqrt(double(k) / (k + 1)) * pm1;
        pm1 = p;
        p = next;
    }
    return p;
}

double mode_intensity(ModeIndex m, double x, double y) {
    const double px = ho_eigenfunction(m.mx, x);
    const double py = ho_eigenfunction(m.my, y);
    // bracketed so mirror modes get bitwise-identical products on a
    // symmetric grid
    const double ix = px * px;
    const double iy = py * py;
    return ix * iy;
}

MoleculeGrid build_grid(double density, double N_per_bin, double extent) {
    if (density <= 0) throw ConfigError("density must be positive");
    if (N_per_bin <= 0) throw ConfigError("N_per_bin must be positive");
    if (extent <= 0) throw ConfigError("extent must be positive");

    const double h = std::sqrt(N_per_bin / density);
    int m = static_cast<int>(std::lround(2.0 * extent / h));
    if (m < 1) m = 1;

    MoleculeGrid grid;
    grid.cell_area = h * h;
    grid.extent = extent;
    grid.per_axis = m;
    grid.positions.resize(m * m, 2);
    grid.N = Eigen::VectorXd::Constant(m * m, N_per_bin);
    for (int a = 0; a < m; ++a) {
        const double x = (a + 0.5 - 0.5 * m) * h;
        for (int b = 0; b < m; ++b) {
            const double y = (b + 0.5 - 0.5 * m) * h;
            const int j = a * m + b;
            grid.positions(j, 0) = x;
            grid.positions(j, 1) = y;
        }
    }
    return grid;
}

SceneParams SceneParams::paper_defaults() {
    SceneParams p;
    p.max_level = 5;
    p.A_per_level = {3.8e-12, 9.2e-12, 23.0e-12, 55.4e-12, 124.9e-12};
    p.E_per_level = {5.6e-10, 6.8e-10, 8.2e-10, 9.3e-10, 10.0e-10};
    return p;
}

Scene build_scene(const SceneParams& p) {
    if (p.Gamma_down < 0) throw ConfigError("Gamma_down must be >= 0");
    if (p.coupling_area <= 0) throw ConfigError("coupling_area must be positive");
    if (p.kappa < 0) throw ConfigError("kappa must be >= 0");

    Scene sc;
    sc.params = p;
    sc.modes = build_mode_set(p.max_level, p.A_per_level, p.E_per_level, p.kappa);
    sc.grid = build_grid(p.density, p.N_per_bin, p.extent);

    const int nm = sc.n_modes();
    const int nb = sc.n_bins();
    sc.g.resize(nm, nb);
    for (int i = 0; i < nm; ++i)
        for (int j = 0; j < nb; ++j)
            sc.g(i, j) = mode_intensity(sc.modes.modes[i], sc.grid.positions(j, 0),
                                        sc.grid.positions(j, 1)) *
                         p.coupling_area;
    sc.gN = sc.g.array().rowwise() * sc.grid.N.transpose().array();

    // swap-partner bins: the grid is symmetric under (x,y) -> (y,x), so the
    // partner of bin (a,b) is bin (b,a)
    const int m = sc.grid.per_axis;
    for (int a = 0; a < m; ++a) {
        for (int b = 0; b < m; ++b) {
            const int j = a * m + b;
            if (a == b)
                sc.bin_diagonal.push_back(j);
            else if (a < b)
                sc.bin_pairs.emplace_back(j, b * m + a);
        }
    }
    for (int i = 0; i < nm; ++i) {
        const ModeIndex mi = sc.modes.modes[i];
        if (mi.mx == mi.my) {
            sc.mode_singles.push_back(i);
        } else if (mi.mx < mi.my) {
            sc.mode_pairs.emplace_back(i, sc.modes.find(mi.mirrored()));
        }
    }

    // S_i via the same paired reduction used for the drive, so that
    // degenerate partners get bitwise-identical gamma
    sc.S.resize(nm);
    Eigen::VectorXd ones = Eigen::VectorXd::Ones(nb);
    sc.drive(ones, sc.S);
    sc.gamma = sc.modes.A.cwiseProduct(sc.S).array() + p.kappa;
    sc.u_crit = sc.gamma.cwiseQuotient(sc.modes.E + sc.modes.A);
    return sc;
}

void Scene::drive(const Eigen::VectorXd& f, Eigen::VectorXd& u) const {
    const int nm = n_modes();
    u.resize(nm);
    for (int i = 0; i < nm; ++i) {
        double acc = 0.0;
        for (const auto& [j1, j2] : bin_pairs)
            acc += gN(i, j1) * f[j1] + gN(i, j2) * f[j2];
        for (int j : bin_diagonal)
            acc += gN(i, j) * f[j];
        u[i] = acc;
    }
}

void Scene::per_bin_mode_sum(const Eigen::VectorXd& weight, Eigen::VectorXd& out) const {
    const int nb = n_bins();
    out.resize(nb);
    for (int j = 0; j < nb; ++j) {
        double acc = 0.0;
        for (const auto& [a, b] : mode_pairs)
            acc += g(a, j) * weight[a] + g(b, j) * weight[b];
        for (int i : mode_singles)
            acc += g(i, j) * weight[i];
        out[j] = acc;
    }
}

} // namespace pbec
