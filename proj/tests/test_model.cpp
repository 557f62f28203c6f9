#include <doctest.h>

#include <cmath>

#include "pbec/errors.hpp"
#include "pbec/scene.hpp"

using namespace pbec;

namespace {

// independent quadrature oracle: midpoint rule on a fine wide grid
double intensity_quadrature(ModeIndex m, double half_width, double h) {
    double sum = 0.0;
    const int npts = static_cast<int>(2 * half_width / h);
    for (int a = 0; a < npts; ++a) {
        const double x = (a + 0.5 - 0.5 * npts) * h;
        for (int b = 0; b < npts; ++b) {
            const double y = (b + 0.5 - 0.5 * npts) * h;
            sum += mode_intensity(m, x, y) * h * h;
        }
    }
    return sum;
}

} // namespace

TEST_CASE("build_mode_set: paper scene has 15 modes with per-level rates") {
    SceneParams p = SceneParams::paper_defaults();
    ModeSet ms = build_mode_set(p.max_level, p.A_per_level, p.E_per_level);
    CHECK(ms.count() == 15);
    const int i00 = ms.find({0, 0});
    REQUIRE(i00 >= 0);
    CHECK(ms.A[i00] == doctest::Approx(3.8e-12).epsilon(1e-15));
    CHECK(ms.E[i00] == doctest::Approx(5.6e-10).epsilon(1e-15));
    // ordering by (level, mx)
    CHECK(ms.modes[0] == ModeIndex{0, 0});
    CHECK(ms.modes[1] == ModeIndex{0, 1});
    CHECK(ms.modes[2] == ModeIndex{1, 0});
    // modes sharing a level share rates exactly
    for (int i = 0; i < ms.count(); ++i)
        for (int j = 0; j < ms.count(); ++j)
            if (ms.modes[i].level() == ms.modes[j].level()) {
                CHECK(ms.A[i] == ms.A[j]);
                CHECK(ms.E[i] == ms.E[j]);
            }
}

TEST_CASE("build_mode_set: single level and 21-mode variants") {
    ModeSet one = build_mode_set(1, {1e-12}, {1e-10});
    CHECK(one.count() == 1);
    CHECK(one.modes[0] == ModeIndex{0, 0});

    std::vector<double> A6(6, 1e-12), E6(6, 1e-10);
    CHECK(build_mode_set(6, A6, E6).count() == 21);
}

TEST_CASE("build_mode_set: rate list length mismatch is a configuration error") {
    CHECK_THROWS_AS(build_mode_set(5, {1e-12}, {1e-10}), ConfigError);
    CHECK_THROWS_AS(build_mode_set(0, {}, {}), ConfigError);
}

TEST_CASE("mode_intensity: ground state value and odd-parity node") {
    CHECK(mode_intensity({0, 0}, 0, 0) == doctest::Approx(1.0 / M_PI).epsilon(1e-14));
    CHECK(mode_intensity({0, 1}, 0, 0) == 0.0);
    CHECK(mode_intensity({1, 0}, 0, 0.7) == 0.0);
    CHECK(mode_intensity({2, 1}, 0.3, 0) == 0.0);
}

TEST_CASE("mode_intensity: quadrature oracle gives unit normalization") {
    for (ModeIndex m : {ModeIndex{0, 0}, ModeIndex{0, 2}, ModeIndex{4, 0}, ModeIndex{2, 2}}) {
        CHECK(intensity_quadrature(m, 8.0, 0.02) == doctest::Approx(1.0).epsilon(1e-6));
    }
}

TEST_CASE("build_grid: paper numbers fully determine the grid") {
    MoleculeGrid g = build_grid(1e13, 1e12, 5.0);
    CHECK(g.cell_area == doctest::Approx(0.1).epsilon(1e-12));
    CHECK(std::sqrt(g.cell_area) == doctest::Approx(0.31623).epsilon(1e-4));
    CHECK(g.per_axis == 32);
    CHECK(g.count() == 1024);
    // symmetric about the origin
    double cx = 0, cy = 0;
    for (int j = 0; j < g.count(); ++j) {
        cx += g.positions(j, 0);
        cy += g.positions(j, 1);
    }
    CHECK(std::abs(cx) < 1e-9);
    CHECK(std::abs(cy) < 1e-9);

    MoleculeGrid unit = build_grid(7.0, 7.0, 3.0);
    CHECK(std::sqrt(unit.cell_area) == doctest::Approx(1.0));

    CHECK_THROWS_AS(build_grid(-1, 1, 1), ConfigError);
    CHECK_THROWS_AS(build_grid(1, 0, 1), ConfigError);
    CHECK_THROWS_AS(build_grid(1, 1, -2), ConfigError);
}

TEST_CASE("scene: coupling normalization and decay constants") {
    SceneParams p = SceneParams::paper_defaults();
    Scene sc = build_scene(p);

    // midpoint quadrature of each unit-normalized intensity is 1 within 1e-3
    // at extent 5, so S_i = density * coupling_area to the same accuracy
    const double rho_sigma = p.density * p.coupling_area;
    for (int i = 0; i < sc.n_modes(); ++i) {
        const double quad = sc.g.row(i).sum() / p.coupling_area * sc.grid.cell_area;
        CHECK(quad == doctest::Approx(1.0).epsilon(1e-3));
        CHECK(sc.S[i] == doctest::Approx(rho_sigma).epsilon(1e-3));
    }
    // gamma_i = A_i S_i + kappa exactly, u_crit consistent
    for (int i = 0; i < sc.n_modes(); ++i) {
        CHECK(sc.gamma[i] == sc.modes.A[i] * sc.S[i] + p.kappa);
        CHECK(sc.u_crit[i] ==
              doctest::Approx(sc.gamma[i] / (sc.modes.E[i] + sc.modes.A[i])));
    }
}

TEST_CASE("scene: node line of [0,1] vanishes on the x axis of an odd grid") {
    SceneParams p = SceneParams::paper_defaults();
    p.extent = 4.9;  // 31 bins per axis -> a row of bins with y = 0
    Scene sc = build_scene(p);
    CHECK(sc.grid.per_axis % 2 == 1);
    const int i01 = sc.modes.find({0, 1});
    int on_axis = 0;
    for (int j = 0; j < sc.n_bins(); ++j) {
        if (sc.grid.positions(j, 1) == 0.0) {
            ++on_axis;
            CHECK(sc.g(i01, j) == 0.0);
        }
    }
    CHECK(on_axis == sc.grid.per_axis);
}

TEST_CASE("scene: exact mirror symmetry of couplings and paired reductions") {
    Scene sc = build_scene(SceneParams::paper_defaults());
    const int m = sc.grid.per_axis;
    const int i01 = sc.modes.find({0, 1});
    const int i10 = sc.modes.find({1, 0});
    const int i12 = sc.modes.find({1, 2});
    const int i21 = sc.modes.find({2, 1});

    for (int a = 0; a < m; ++a) {
        for (int b = 0; b < m; ++b) {
            const int j = a * m + b, js = b * m + a;
            CHECK(sc.g(i01, j) == sc.g(i10, js));
            CHECK(sc.g(i12, j) == sc.g(i21, js));
        }
    }
    // degenerate partners get bitwise-identical sums and decay constants
    CHECK(sc.S[i01] == sc.S[i10]);
    CHECK(sc.gamma[i01] == sc.gamma[i10]);
    CHECK(sc.gamma[i12] == sc.gamma[i21]);

    // mirror-symmetric fields give bitwise-equal drives for mirror modes
    Eigen::VectorXd f(sc.n_bins());
    for (int a = 0; a < m; ++a)
        for (int b = 0; b < m; ++b)
            f[a * m + b] = 0.01 + 0.002 * std::sin(0.37 * (a * b)) +
                           0.001 * ((a + b) % 5);
    for (int a = 0; a < m; ++a)
        for (int b = 0; b < a; ++b)
            f[b * m + a] = f[a * m + b];  // symmetrize
    Eigen::VectorXd u;
    sc.drive(f, u);
    CHECK(u[i01] == u[i10]);
    CHECK(u[i12] == u[i21]);

    // same-level, non-mirror modes agree only to quadrature accuracy
    const int i02 = sc.modes.find({0, 2});
    const int i11 = sc.modes.find({1, 1});
    CHECK(sc.gamma[i02] == doctest::Approx(sc.gamma[i11]).epsilon(1e-6));
}

TEST_CASE("scene: normalization defect shrinks as the extent grows") {
    SceneParams p = SceneParams::paper_defaults();
    double prev = 1.0;
    for (double extent : {4.0, 4.5, 5.0, 5.5}) {
        p.extent = extent;
        Scene sc = build_scene(p);
        double worst = 0.0;
        for (int i = 0; i < sc.n_modes(); ++i) {
            const double quad = sc.g.row(i).sum() / p.coupling_area * sc.grid.cell_area;
            worst = std::max(worst, std::abs(quad - 1.0));
        }
        CHECK(worst <= prev * (1.0 + 1e-12));
        prev = worst;
    }
}
