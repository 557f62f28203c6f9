#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "pbec/experiments.hpp"
#include "pbec/scene.hpp"

namespace pbec {

/// Full run configuration: scene, solver, hierarchy and experiment
/// parameters. Parsed from a `key = value` file (comma-separated lists,
/// '#' comments); unknown keys are rejected, missing required keys reported
/// together.
struct RunConfig {
    // scene (required keys)
    int max_level = 0;
    std::vector<double> A_per_level;
    std::vector<double> E_per_level;
    double density = 0.0;
    double N_per_bin = 0.0;
    double extent = 0.0;
    double Gamma_down = -1.0;
    // scene (defaulted)
    double coupling_area = 0.05135;
    double kappa = 1.0;

    // solver
    double rel_tol = 1e-10;
    double abs_tol_n = 1e-20;
    double abs_tol_f = 1e-18;
    double max_step = 1e30;
    double initial_step = 1e-4;

    // hierarchy
    int hierarchy_depth = 2;
    bool full_field = false;
    double rank_tol = 1e-10;

    // experiments
    double threshold_d = 1e-6;
    double quench_fraction = 0.01;
    double t_max = 1e6;
    double abs_floor = 0.0;
    double sweep_p_min = 1e-3;
    double sweep_p_max = 1.0;
    int sweep_points = 200;
    double map_p_start_min = 1e-3, map_p_start_max = 1.0;
    int map_p_start_points = 16;
    double map_p_end_min = 1e-3, map_p_end_max = 1.0;
    int map_p_end_points = 16;
    double quench_p_start = 3.16e-4;
    double quench_p_end = 0.25;
    double trace_t_min = 1e-3;
    double trace_t_max = 3e5;
    int trace_points = 600;
    std::string schedule;  // "t0:P0, t1:P1, ..."
    double tail_window_lo = 10.0;
    double tail_window_hi = 1e3;
    double slope_threshold = 20.0;
    double condensed_threshold = 1e6;
    int exp_fit_points = 8;
    double exp_fit_rel_min = 0.005;
    double exp_fit_rel_max = 0.05;

    // output
    std::string format = "csv";
    int jobs = 0;  // 0 = hardware concurrency

    SceneParams scene_params() const;
    IntegratorSettings integrator_settings() const;
    SteadySettings steady_settings() const;
    ExperimentSettings experiment_settings() const;
    PumpSchedule parse_schedule() const;

    /// Canonical serialization (sorted keys, full precision); re-parses to an
    /// identical RunConfig.
    std::string serialize() const;
    uint64_t hash() const;
};

RunConfig parse_config_text(const std::string& text, const std::string& origin = "<text>");
RunConfig parse_config_file(const std::string& path);

/// Built-in presets (paper_fig1, paper_fig1_21modes, paper_fig3, paper_fig4,
/// paper_twostep, paper_plateau).
std::vector<std::string> preset_names();
RunConfig preset_config(const std::string& name);
std::string preset_text(const std::string& name);

/// Apply `key = value` overrides on top of an existing config.
RunConfig apply_overrides(const RunConfig& base, const std::string& overrides_text);

std::string format_double(double v);  // 17 significant digits, C locale

} // namespace pbec
