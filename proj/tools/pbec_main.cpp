#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <json.hpp>

#include "pbec/analysis.hpp"
#include "pbec/config.hpp"
#include "pbec/errors.hpp"
#include "pbec/io.hpp"
#include "pbec/parallel.hpp"
#include "pbec/version.hpp"

using json = nlohmann::json;
using namespace pbec;

namespace {

constexpr int EXIT_CONFIG = 2;
constexpr int EXIT_SOLVER = 3;
constexpr int EXIT_TIMEOUT = 4;

struct Cli {
    std::string config_path;
    std::string preset;
    std::string out_dir = ".";
    int jobs = 0;
    int hierarchy_depth = -1;
    bool full_field = false;
    std::string format;
    std::string sweep_csv;   // input for `fit`
    std::string depths = "1,2";
};

struct Context {
    RunConfig cfg;
    Scene scene;
    std::optional<HierarchyBasis> basis;
    ExperimentSettings es;
    std::map<std::string, std::string> metadata;

    const HierarchyBasis* basis_ptr() const { return basis ? &*basis : nullptr; }
};

RunConfig load_config(const Cli& cli) {
    RunConfig cfg;
    if (!cli.preset.empty() && !cli.config_path.empty()) {
        cfg = preset_config(cli.preset);
        std::ifstream in(cli.config_path);
        if (!in) throw ConfigError("cannot open config file " + cli.config_path);
        std::stringstream ss;
        ss << in.rdbuf();
        cfg = apply_overrides(cfg, ss.str());
    } else if (!cli.preset.empty()) {
        cfg = preset_config(cli.preset);
    } else if (!cli.config_path.empty()) {
        cfg = parse_config_file(cli.config_path);
    } else {
        throw ConfigError("either --preset or --config is required");
    }
    if (cli.jobs > 0) cfg.jobs = cli.jobs;
    if (cli.hierarchy_depth >= 0) cfg.hierarchy_depth = cli.hierarchy_depth;
    if (cli.full_field) cfg.full_field = true;
    if (!cli.format.empty()) {
        if (cli.format != "csv" && cli.format != "json")
            throw ConfigError("--format must be csv or json");
        cfg.format = cli.format;
    }
    return cfg;
}

Context make_context(const Cli& cli) {
    Context ctx{load_config(cli), Scene{}, std::nullopt, ExperimentSettings{}, {}};
    ctx.scene = build_scene(ctx.cfg.scene_params());
    if (!ctx.cfg.full_field)
        ctx.basis = build_hierarchy(ctx.scene, ctx.cfg.hierarchy_depth, ctx.cfg.rank_tol);
    ctx.es = ctx.cfg.experiment_settings();
    ctx.metadata = output_metadata(ctx.cfg, ctx.scene,
                                   ctx.basis ? ctx.basis->total_rank : 0);
    std::filesystem::create_directories(cli.out_dir);
    return ctx;
}

std::string out_path(const Cli& cli, const std::string& name) {
    return (std::filesystem::path(cli.out_dir) / name).string();
}

json meta_json(const Context& ctx) {
    json j;
    for (const auto& [k, v] : ctx.metadata) j[k] = v;
    return j;
}

std::vector<std::string> mode_columns(const Scene& sc, const std::string& prefix) {
    std::vector<std::string> cols;
    for (const auto& m : sc.modes.modes) cols.push_back(prefix + m.suffix());
    return cols;
}

// ---------------------------------------------------------------- steady
int cmd_steady(const Cli& cli) {
    Context ctx = make_context(cli);
    auto grid = log_grid(ctx.cfg.sweep_p_min, ctx.cfg.sweep_p_max, ctx.cfg.sweep_points);
    auto sweep = continuation_sweep(ctx.scene, grid, ctx.es.steady, ctx.basis_ptr(),
                                    ctx.es.rep);

    std::vector<std::string> cols = {"P", "converged", "residual"};
    for (const auto& c : mode_columns(ctx.scene, "n_")) cols.push_back(c);
    CsvWriter csv(out_path(cli, "steady.csv"), cols, ctx.metadata);
    for (size_t k = 0; k < sweep.size(); ++k) {
        std::vector<double> row = {grid[k], double(sweep[k].converged),
                                   sweep[k].residual_norm};
        Eigen::VectorXd n = sweep[k].state.n;
        for (int i = 0; i < n.size(); ++i) row.push_back(n[i]);
        csv.row(row);
    }
    csv.close();
    std::printf("wrote %s (%zu points)\n", out_path(cli, "steady.csv").c_str(),
                sweep.size());
    return 0;
}

// ----------------------------------------------------------------- sweep
int cmd_sweep(const Cli& cli) {
    Context ctx = make_context(cli);
    auto grid = log_grid(ctx.cfg.sweep_p_min, ctx.cfg.sweep_p_max, ctx.cfg.sweep_points);
    auto sweep = sweep_1d(ctx.scene, grid, ctx.cfg.quench_fraction, ctx.es,
                          ctx.basis_ptr());

    // interval labels from the transition detector on the sweep's own steadies
    Eigen::MatrixXd nmat(sweep.size(), ctx.scene.n_modes());
    for (size_t k = 0; k < sweep.size(); ++k)
        nmat.row(k) = sweep[k].steady.state.n.transpose();
    TransitionSettings ts;
    ts.slope_threshold = ctx.cfg.slope_threshold;
    ts.condensed_threshold = ctx.cfg.condensed_threshold;
    ts.steady = ctx.es.steady;
    std::vector<double> Pends(sweep.size());
    for (size_t k = 0; k < sweep.size(); ++k) Pends[k] = sweep[k].P;
    auto transitions = detect_transitions(ctx.scene, Pends, nmat, ts);
    for (auto& pt : sweep) pt.interval = interval_label(pt.P, transitions);

    std::vector<std::string> cols = {"P", "t_eq"};
    for (const auto& c : mode_columns(ctx.scene, "n_")) cols.push_back(c);
    cols.insert(cols.end(), {"interval", "converged", "t_eq_last", "delta_n",
                             "t_decay", "decay_r2"});
    CsvWriter csv(out_path(cli, "sweep.csv"), cols, ctx.metadata);
    int timeouts = 0;
    for (const auto& pt : sweep) {
        std::vector<std::string> row = {format_double(pt.P), format_double(pt.record.t_eq)};
        for (int i = 0; i < ctx.scene.n_modes(); ++i)
            row.push_back(format_double(pt.steady.state.n.size() ? pt.steady.state.n[i]
                                                                 : std::nan("")));
        row.push_back(pt.interval);
        row.push_back(pt.record.converged ? "1" : "0");
        row.push_back(format_double(pt.record.t_eq_last));
        row.push_back(format_double(pt.record.delta_n));
        row.push_back(format_double(pt.record.t_decay));
        row.push_back(format_double(pt.record.decay_r2));
        csv.row_mixed(row);
        if (!pt.record.converged) ++timeouts;
    }
    csv.close();
    std::printf("wrote %s (%zu points, %zu transitions, %d unconverged)\n",
                out_path(cli, "sweep.csv").c_str(), sweep.size(), transitions.size(),
                timeouts);
    return timeouts > static_cast<int>(sweep.size()) / 2 ? EXIT_TIMEOUT : 0;
}

// ---------------------------------------------------------------- quench
int cmd_quench(const Cli& cli) {
    Context ctx = make_context(cli);
    auto times = log_grid(ctx.cfg.trace_t_min, ctx.cfg.trace_t_max, ctx.cfg.trace_points);
    QuenchRecord rec = big_quench_trace(ctx.scene, ctx.cfg.quench_p_start,
                                        ctx.cfg.quench_p_end, times, ctx.es,
                                        ctx.basis_ptr());

    std::vector<std::string> cols = {"t"};
    for (const auto& c : mode_columns(ctx.scene, "n_")) cols.push_back(c);
    CsvWriter csv(out_path(cli, "quench_trace.csv"), cols, ctx.metadata);
    for (size_t k = 0; k < rec.trace_t.size(); ++k) {
        std::vector<double> row = {rec.trace_t[k]};
        for (int i = 0; i < ctx.scene.n_modes(); ++i) row.push_back(rec.trace_n(i, k));
        csv.row(row);
    }
    csv.close();

    json j;
    j["metadata"] = meta_json(ctx);
    j["P_start"] = rec.P_start;
    j["P_end"] = rec.P_end;
    j["t_eq"] = rec.t_eq;
    j["t_eq_last"] = rec.t_eq_last;
    j["converged"] = rec.converged;
    j["delta_n"] = rec.delta_n;
    json modes = json::array();
    for (int i = 0; i < ctx.scene.n_modes(); ++i) {
        json m;
        m["mode"] = ctx.scene.modes.modes[i].label();
        m["n_start"] = rec.per_mode[i].n_start;
        m["n_end"] = rec.per_mode[i].n_end;
        m["n_peak"] = rec.per_mode[i].n_peak;
        m["t_peak"] = rec.per_mode[i].t_peak;
        modes.push_back(m);
    }
    j["per_mode"] = modes;
    std::ofstream(out_path(cli, "quench_summary.json")) << j.dump(2) << "\n";
    std::printf("wrote %s and quench_summary.json (t_eq=%g)\n",
                out_path(cli, "quench_trace.csv").c_str(), rec.t_eq);
    return rec.converged ? 0 : EXIT_TIMEOUT;
}

// ----------------------------------------------------------------- map2d
int cmd_map2d(const Cli& cli) {
    Context ctx = make_context(cli);
    auto starts = log_grid(ctx.cfg.map_p_start_min, ctx.cfg.map_p_start_max,
                           ctx.cfg.map_p_start_points);
    auto ends = log_grid(ctx.cfg.map_p_end_min, ctx.cfg.map_p_end_max,
                         ctx.cfg.map_p_end_points);
    QuenchMap map = quench_map(ctx.scene, starts, ends, ctx.es, ctx.basis_ptr());

    CsvWriter csv(out_path(cli, "map2d.csv"), {"P_start", "P_end", "t_eq", "converged"},
                  ctx.metadata);
    int timeouts = 0;
    for (size_t r = 0; r < starts.size(); ++r) {
        for (size_t c = 0; c < ends.size(); ++c) {
            csv.row({starts[r], ends[c], map.t_eq(r, c), double(map.converged(r, c))});
            if (!map.converged(r, c)) ++timeouts;
        }
    }
    csv.close();
    std::printf("wrote %s (%zux%zu cells, %d unconverged)\n",
                out_path(cli, "map2d.csv").c_str(), starts.size(), ends.size(), timeouts);
    return timeouts > static_cast<int>(starts.size() * ends.size()) / 2 ? EXIT_TIMEOUT : 0;
}

// -------------------------------------------------------------- schedule
int cmd_schedule(const Cli& cli) {
    Context ctx = make_context(cli);
    if (ctx.cfg.schedule.empty())
        throw ConfigError("schedule subcommand requires the 'schedule' config key");
    PumpSchedule sched = ctx.cfg.parse_schedule();
    ScheduleRecord rec = run_schedule(ctx.scene, sched, ctx.es, ctx.basis_ptr());

    json j;
    j["metadata"] = meta_json(ctx);
    json segs = json::array();
    for (const auto& s : sched.segments) segs.push_back({{"t", s.start}, {"P", s.P}});
    j["schedule"] = segs;
    j["t_eq_from_last_switch"] = rec.final_leg.t_eq;
    j["total_time"] = rec.total_time;
    j["converged"] = rec.final_leg.converged;
    json modes = json::array();
    for (int i = 0; i < ctx.scene.n_modes(); ++i) {
        json m;
        m["mode"] = ctx.scene.modes.modes[i].label();
        m["n_peak_overall"] = rec.per_mode_overall[i].n_peak;
        m["n_peak_final_leg"] = rec.final_leg.per_mode[i].n_peak;
        m["n_end"] = rec.final_leg.per_mode[i].n_end;
        modes.push_back(m);
    }
    j["per_mode"] = modes;
    std::ofstream(out_path(cli, "schedule.json")) << j.dump(2) << "\n";
    std::printf("wrote %s (total_time=%g)\n", out_path(cli, "schedule.json").c_str(),
                rec.total_time);
    return rec.final_leg.converged ? 0 : EXIT_TIMEOUT;
}

// ------------------------------------------------------------------- fit
struct SweepCsv {
    std::vector<double> P, t_eq, t_decay, decay_r2, delta_n;
    Eigen::MatrixXd n;
    std::vector<bool> converged;
};

SweepCsv read_sweep_csv(const std::string& path, const Scene& scene) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open sweep file " + path);
    std::string line;
    std::vector<std::string> header;
    SweepCsv out;
    std::vector<std::vector<double>> nrows;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::stringstream ss(line);
        std::string cell;
        std::vector<std::string> cells;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        if (header.empty()) {
            header = cells;
            continue;
        }
        auto col = [&](const std::string& name) -> std::string {
            for (size_t c = 0; c < header.size(); ++c)
                if (header[c] == name) return cells.at(c);
            throw ConfigError("sweep file lacks column " + name);
        };
        out.P.push_back(std::stod(col("P")));
        out.t_eq.push_back(std::stod(col("t_eq")));
        out.t_decay.push_back(std::stod(col("t_decay")));
        out.decay_r2.push_back(std::stod(col("decay_r2")));
        out.delta_n.push_back(std::stod(col("delta_n")));
        out.converged.push_back(col("converged") == "1");
        std::vector<double> nrow;
        for (const auto& m : scene.modes.modes) nrow.push_back(std::stod(col("n_" + m.suffix())));
        nrows.push_back(nrow);
    }
    out.n.resize(nrows.size(), scene.n_modes());
    for (size_t r = 0; r < nrows.size(); ++r)
        for (int c = 0; c < scene.n_modes(); ++c) out.n(r, c) = nrows[r][c];
    return out;
}

int cmd_fit(const Cli& cli) {
    Context ctx = make_context(cli);
    if (cli.sweep_csv.empty())
        throw ConfigError("fit requires --sweep pointing at a sweep.csv produced by `sweep`");
    SweepCsv data = read_sweep_csv(cli.sweep_csv, ctx.scene);

    TransitionSettings ts;
    ts.slope_threshold = ctx.cfg.slope_threshold;
    ts.condensed_threshold = ctx.cfg.condensed_threshold;
    ts.steady = ctx.es.steady;
    auto transitions = detect_transitions(ctx.scene, data.P, data.n, ts);

    json j;
    j["metadata"] = meta_json(ctx);
    json jtr = json::array();
    for (const auto& t : transitions) {
        json e;
        e["P_crit"] = t.P_crit;
        e["mode"] = t.mode.label();
        e["kind"] = t.kind == TransitionKind::Condensation ? "condensation"
                                                           : "decondensation";
        e["slope"] = t.slope;
        e["bracket"] = {t.bracket_lo, t.bracket_hi};
        json mem = json::array();
        for (const auto& m : t.members) mem.push_back(m.label());
        e["members"] = mem;
        jtr.push_back(e);
    }
    j["transitions"] = jtr;

    // critical-exponent fits on fresh local quench grids on both sides
    json jfits = json::array();
    for (const auto& t : transitions) {
        json e;
        e["P_crit"] = t.P_crit;
        e["mode"] = t.mode.label();
        for (int side = 0; side < 2; ++side) {
            const double sgn = side == 0 ? -1.0 : 1.0;
            std::vector<double> Ps, Ts;
            auto rels = log_grid(ctx.cfg.exp_fit_rel_min, ctx.cfg.exp_fit_rel_max,
                                 ctx.cfg.exp_fit_points);
            std::vector<QuenchRecord> recs(rels.size());
            parallel_for(ctx.es.jobs, static_cast<int>(rels.size()), [&](int k) {
                const double P = t.P_crit * (1.0 + sgn * rels[k]);
                recs[k] = equilibration_time(ctx.scene, P / (1.0 + ctx.cfg.quench_fraction),
                                             P, ctx.es, ctx.basis_ptr());
            });
            for (size_t k = 0; k < rels.size(); ++k) {
                if (!recs[k].converged) continue;
                Ps.push_back(t.P_crit * (1.0 + sgn * rels[k]));
                Ts.push_back(recs[k].t_eq);
            }
            try {
                ExponentFit f = fit_critical_exponent_side(Ps, Ts, t.P_crit);
                json side_j;
                side_j["exponent"] = f.exponent;
                side_j["r"] = f.r;
                side_j["points"] = f.points;
                side_j["window"] = {f.window_lo, f.window_hi};
                e[side == 0 ? "below" : "above"] = side_j;
            } catch (const FitError& err) {
                e[side == 0 ? "below" : "above"] = {{"error", err.what()}};
            }
        }
        jfits.push_back(e);
    }
    j["exponent_fits"] = jfits;

    // threshold vs exponential-decay-time comparison over the sweep records
    {
        std::vector<SweepPoint> pts(data.P.size());
        for (size_t k = 0; k < data.P.size(); ++k) {
            pts[k].P = data.P[k];
            pts[k].record.t_eq = data.t_eq[k];
            pts[k].record.t_decay = data.t_decay[k];
            pts[k].record.decay_r2 = data.decay_r2[k];
            pts[k].record.delta_n = data.delta_n[k];
            pts[k].record.converged = data.converged[k];
        }
        TimeDefinitionComparison cmp =
            compare_time_definitions(pts, ctx.cfg.threshold_d);
        json cj;
        cj["ratio_mean"] = cmp.ratio_mean;
        cj["ratio_dispersion"] = cmp.ratio_dispersion;
        json cpts = json::array();
        for (const auto& p : cmp.points) {
            cpts.push_back({{"P", p.P},
                            {"t_eq", p.t_eq},
                            {"t_decay", p.t_decay},
                            {"ratio", p.ratio},
                            {"expected_log_ratio", p.expected},
                            {"clean_exponential", p.clean_exponential}});
        }
        cj["points"] = cpts;
        j["time_definitions"] = cj;
    }

    std::ofstream(out_path(cli, "fit_report.json")) << j.dump(2) << "\n";
    std::printf("wrote %s (%zu transitions)\n", out_path(cli, "fit_report.json").c_str(),
                transitions.size());
    return 0;
}

// ------------------------------------------------------- hierarchy-check
int cmd_hierarchy_check(const Cli& cli) {
    Context ctx = make_context(cli);
    std::vector<int> depths;
    {
        std::stringstream ss(cli.depths);
        std::string item;
        while (std::getline(ss, item, ',')) depths.push_back(std::stoi(item));
    }
    auto grid = log_grid(ctx.cfg.sweep_p_min, ctx.cfg.sweep_p_max,
                         std::min(ctx.cfg.sweep_points, 20));
    auto full = continuation_sweep(ctx.scene, grid, ctx.es.steady, nullptr,
                                   Representation::FullField);

    CsvWriter csv(out_path(cli, "hierarchy_check.csv"),
                  {"depth", "P", "max_rel_err_n", "rank_total", "converged"},
                  ctx.metadata);
    for (int depth : depths) {
        HierarchyBasis hb = build_hierarchy(ctx.scene, depth, ctx.cfg.rank_tol);
        auto red = continuation_sweep(ctx.scene, grid, ctx.es.steady, &hb,
                                      Representation::Hierarchical);
        for (size_t k = 0; k < grid.size(); ++k) {
            double err = std::nan("");
            if (full[k].converged && red[k].converged) {
                err = 0.0;
                for (int i = 0; i < ctx.scene.n_modes(); ++i) {
                    const double denom = std::max(std::abs(full[k].state.n[i]), 1e-300);
                    err = std::max(err,
                                   std::abs(red[k].state.n[i] - full[k].state.n[i]) / denom);
                }
            }
            csv.row({double(depth), grid[k], err, double(hb.total_rank),
                     double(full[k].converged && red[k].converged)});
        }
    }
    csv.close();
    std::printf("wrote %s\n", out_path(cli, "hierarchy_check.csv").c_str());
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Driven-dissipative kinetics of a multimode photon gas coupled to a "
                 "pumped dye reservoir"};
    app.set_version_flag("--version", PBEC_VERSION);
    app.require_subcommand(1);

    Cli cli;
    app.add_option("--config", cli.config_path, "configuration file (key = value)");
    app.add_option("--preset", cli.preset, "built-in preset name");
    app.add_option("--out", cli.out_dir, "output directory");
    app.add_option("--jobs", cli.jobs, "worker threads for sweep/map cells");
    app.add_option("--hierarchy-depth", cli.hierarchy_depth, "reservoir hierarchy depth");
    app.add_flag("--full-field", cli.full_field, "bypass the hierarchy entirely");
    app.add_option("--format", cli.format, "output format: csv|json");

    auto* steady = app.add_subcommand("steady", "steady states over a pump grid");
    auto* sweep = app.add_subcommand("sweep", "equilibration-time sweep (small quenches)");
    auto* quench = app.add_subcommand("quench", "single large quench with trace output");
    auto* map2d = app.add_subcommand("map2d", "equilibration-time map over start/end pumps");
    auto* schedule = app.add_subcommand("schedule", "multi-step pump schedule");
    auto* fit = app.add_subcommand("fit", "transition detection and power-law fits");
    fit->add_option("--sweep", cli.sweep_csv, "sweep.csv produced by the sweep subcommand");
    auto* hier = app.add_subcommand("hierarchy-check",
                                    "truncated vs full-field steady-state errors");
    hier->add_option("--depths", cli.depths, "comma-separated depths (default 1,2)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (steady->parsed()) return cmd_steady(cli);
        if (sweep->parsed()) return cmd_sweep(cli);
        if (quench->parsed()) return cmd_quench(cli);
        if (map2d->parsed()) return cmd_map2d(cli);
        if (schedule->parsed()) return cmd_schedule(cli);
        if (fit->parsed()) return cmd_fit(cli);
        if (hier->parsed()) return cmd_hierarchy_check(cli);
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return EXIT_CONFIG;
    } catch (const SolverError& e) {
        std::fprintf(stderr, "solver error: %s\n", e.what());
        return EXIT_SOLVER;
    } catch (const StateError& e) {
        std::fprintf(stderr, "state error: %s\n", e.what());
        return EXIT_SOLVER;
    } catch (const FitError& e) {
        std::fprintf(stderr, "fit error: %s\n", e.what());
        return EXIT_SOLVER;
    }
    return 0;
}
