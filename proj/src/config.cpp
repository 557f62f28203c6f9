#include "pbec/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>
#include <thread>

#include "pbec/errors.hpp"

namespace pbec {

std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

namespace {

std::string trim(const std::string& s) {
    size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    size_t b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

double to_double(const std::string& key, const std::string& v) {
    try {
        size_t pos = 0;
        double x = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return x;
    } catch (...) {
        throw ConfigError("config key '" + key + "': expected a number, got '" + v + "'");
    }
}

int to_int(const std::string& key, const std::string& v) {
    try {
        size_t pos = 0;
        int x = std::stoi(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return x;
    } catch (...) {
        throw ConfigError("config key '" + key + "': expected an integer, got '" + v + "'");
    }
}

bool to_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw ConfigError("config key '" + key + "': expected a boolean, got '" + v + "'");
}

std::vector<double> to_list(const std::string& key, const std::string& v) {
    std::vector<double> out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (item.empty()) continue;
        out.push_back(to_double(key, item));
    }
    if (out.empty()) throw ConfigError("config key '" + key + "': empty list");
    return out;
}

std::string list_str(const std::vector<double>& v) {
    std::string s;
    for (size_t k = 0; k < v.size(); ++k) {
        if (k) s += ", ";
        s += format_double(v[k]);
    }
    return s;
}

struct KeyTable {
    std::map<std::string, std::function<void(RunConfig&, const std::string&)>> setters;
    std::vector<std::string> required;

    KeyTable() {
        auto D = [this](const std::string& k, double RunConfig::* f, bool req = false) {
            setters[k] = [k, f](RunConfig& c, const std::string& v) { c.*f = to_double(k, v); };
            if (req) required.push_back(k);
        };
        auto I = [this](const std::string& k, int RunConfig::* f, bool req = false) {
            setters[k] = [k, f](RunConfig& c, const std::string& v) { c.*f = to_int(k, v); };
            if (req) required.push_back(k);
        };
        auto B = [this](const std::string& k, bool RunConfig::* f) {
            setters[k] = [k, f](RunConfig& c, const std::string& v) { c.*f = to_bool(k, v); };
        };
        auto L = [this](const std::string& k, std::vector<double> RunConfig::* f,
                        bool req = false) {
            setters[k] = [k, f](RunConfig& c, const std::string& v) { c.*f = to_list(k, v); };
            if (req) required.push_back(k);
        };
        auto S = [this](const std::string& k, std::string RunConfig::* f) {
            setters[k] = [f](RunConfig& c, const std::string& v) { c.*f = v; };
        };

        I("max_level", &RunConfig::max_level, true);
        L("A_per_level", &RunConfig::A_per_level, true);
        L("E_per_level", &RunConfig::E_per_level, true);
        D("density", &RunConfig::density, true);
        D("N_per_bin", &RunConfig::N_per_bin, true);
        D("extent", &RunConfig::extent, true);
        D("Gamma_down", &RunConfig::Gamma_down, true);
        D("coupling_area", &RunConfig::coupling_area);
        D("kappa", &RunConfig::kappa);
        D("rel_tol", &RunConfig::rel_tol);
        D("abs_tol_n", &RunConfig::abs_tol_n);
        D("abs_tol_f", &RunConfig::abs_tol_f);
        D("max_step", &RunConfig::max_step);
        D("initial_step", &RunConfig::initial_step);
        I("hierarchy_depth", &RunConfig::hierarchy_depth);
        B("full_field", &RunConfig::full_field);
        D("rank_tol", &RunConfig::rank_tol);
        D("threshold_d", &RunConfig::threshold_d);
        D("quench_fraction", &RunConfig::quench_fraction);
        D("t_max", &RunConfig::t_max);
        D("abs_floor", &RunConfig::abs_floor);
        D("sweep_p_min", &RunConfig::sweep_p_min);
        D("sweep_p_max", &RunConfig::sweep_p_max);
        I("sweep_points", &RunConfig::sweep_points);
        D("map_p_start_min", &RunConfig::map_p_start_min);
        D("map_p_start_max", &RunConfig::map_p_start_max);
        I("map_p_start_points", &RunConfig::map_p_start_points);
        D("map_p_end_min", &RunConfig::map_p_end_min);
        D("map_p_end_max", &RunConfig::map_p_end_max);
        I("map_p_end_points", &RunConfig::map_p_end_points);
        D("quench_p_start", &RunConfig::quench_p_start);
        D("quench_p_end", &RunConfig::quench_p_end);
        D("trace_t_min", &RunConfig::trace_t_min);
        D("trace_t_max", &RunConfig::trace_t_max);
        I("trace_points", &RunConfig::trace_points);
        S("schedule", &RunConfig::schedule);
        D("tail_window_lo", &RunConfig::tail_window_lo);
        D("tail_window_hi", &RunConfig::tail_window_hi);
        D("slope_threshold", &RunConfig::slope_threshold);
        D("condensed_threshold", &RunConfig::condensed_threshold);
        I("exp_fit_points", &RunConfig::exp_fit_points);
        D("exp_fit_rel_min", &RunConfig::exp_fit_rel_min);
        D("exp_fit_rel_max", &RunConfig::exp_fit_rel_max);
        S("format", &RunConfig::format);
        I("jobs", &RunConfig::jobs);
    }
};

const KeyTable& key_table() {
    static KeyTable t;
    return t;
}

void parse_into(RunConfig& cfg, const std::string& text, const std::string& origin,
                std::vector<std::string>* seen) {
    const auto& table = key_table();
    std::stringstream ss(text);
    std::string line;
    int lineno = 0;
    while (std::getline(ss, line)) {
        ++lineno;
        const size_t hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError(origin + ":" + std::to_string(lineno) +
                              ": expected 'key = value', got '" + line + "'");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        auto it = table.setters.find(key);
        if (it == table.setters.end())
            throw ConfigError(origin + ":" + std::to_string(lineno) + ": unknown key '" +
                              key + "'");
        it->second(cfg, value);
        if (seen) seen->push_back(key);
    }
}

} // namespace

RunConfig parse_config_text(const std::string& text, const std::string& origin) {
    RunConfig cfg;
    std::vector<std::string> seen;
    parse_into(cfg, text, origin, &seen);
    std::vector<std::string> missing;
    for (const auto& req : key_table().required)
        if (std::find(seen.begin(), seen.end(), req) == seen.end())
            missing.push_back(req);
    if (!missing.empty()) {
        std::string msg = origin + ": missing required keys:";
        for (const auto& k : missing) msg += " " + k;
        throw ConfigError(msg);
    }
    if (static_cast<int>(cfg.A_per_level.size()) != cfg.max_level ||
        static_cast<int>(cfg.E_per_level.size()) != cfg.max_level)
        throw ConfigError(origin + ": A_per_level/E_per_level must have max_level entries");
    if (cfg.format != "csv" && cfg.format != "json")
        throw ConfigError(origin + ": format must be csv or json");
    if (cfg.threshold_d <= 0 || cfg.threshold_d >= 1)
        throw ConfigError(origin + ": threshold_d must be in (0,1)");
    return cfg;
}

RunConfig parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config_text(ss.str(), path);
}

RunConfig apply_overrides(const RunConfig& base, const std::string& overrides_text) {
    RunConfig cfg = base;
    parse_into(cfg, overrides_text, "<override>", nullptr);
    return cfg;
}

SceneParams RunConfig::scene_params() const {
    SceneParams p;
    p.max_level = max_level;
    p.A_per_level = A_per_level;
    p.E_per_level = E_per_level;
    p.density = density;
    p.N_per_bin = N_per_bin;
    p.extent = extent;
    p.coupling_area = coupling_area;
    p.Gamma_down = Gamma_down;
    p.kappa = kappa;
    return p;
}

IntegratorSettings RunConfig::integrator_settings() const {
    IntegratorSettings s;
    s.rel_tol = rel_tol;
    s.abs_tol_n = abs_tol_n;
    s.abs_tol_f = abs_tol_f;
    s.max_step = max_step;
    s.initial_step = initial_step;
    return s;
}

SteadySettings RunConfig::steady_settings() const {
    SteadySettings s;
    s.integrator = integrator_settings();
    return s;
}

ExperimentSettings RunConfig::experiment_settings() const {
    ExperimentSettings s;
    s.d = threshold_d;
    s.t_max = t_max;
    s.abs_floor = abs_floor;
    s.jobs = jobs > 0 ? jobs : static_cast<int>(std::thread::hardware_concurrency());
    s.rep = full_field ? Representation::FullField : Representation::Hierarchical;
    s.integrator = integrator_settings();
    s.steady = steady_settings();
    return s;
}

PumpSchedule RunConfig::parse_schedule() const {
    PumpSchedule sched;
    std::stringstream ss(schedule);
    std::string seg;
    while (std::getline(ss, seg, ',')) {
        seg = trim(seg);
        if (seg.empty()) continue;
        const size_t colon = seg.find(':');
        if (colon == std::string::npos)
            throw ConfigError("schedule segment '" + seg + "' must be 't:P'");
        PumpSegment s;
        s.start = to_double("schedule", trim(seg.substr(0, colon)));
        s.P = to_double("schedule", trim(seg.substr(colon + 1)));
        sched.segments.push_back(s);
    }
    sched.validate();
    return sched;
}

std::string RunConfig::serialize() const {
    std::map<std::string, std::string> kv;
    kv["max_level"] = std::to_string(max_level);
    kv["A_per_level"] = list_str(A_per_level);
    kv["E_per_level"] = list_str(E_per_level);
    kv["density"] = format_double(density);
    kv["N_per_bin"] = format_double(N_per_bin);
    kv["extent"] = format_double(extent);
    kv["Gamma_down"] = format_double(Gamma_down);
    kv["coupling_area"] = format_double(coupling_area);
    kv["kappa"] = format_double(kappa);
    kv["rel_tol"] = format_double(rel_tol);
    kv["abs_tol_n"] = format_double(abs_tol_n);
    kv["abs_tol_f"] = format_double(abs_tol_f);
    kv["max_step"] = format_double(max_step);
    kv["initial_step"] = format_double(initial_step);
    kv["hierarchy_depth"] = std::to_string(hierarchy_depth);
    kv["full_field"] = full_field ? "true" : "false";
    kv["rank_tol"] = format_double(rank_tol);
    kv["threshold_d"] = format_double(threshold_d);
    kv["quench_fraction"] = format_double(quench_fraction);
    kv["t_max"] = format_double(t_max);
    kv["abs_floor"] = format_double(abs_floor);
    kv["sweep_p_min"] = format_double(sweep_p_min);
    kv["sweep_p_max"] = format_double(sweep_p_max);
    kv["sweep_points"] = std::to_string(sweep_points);
    kv["map_p_start_min"] = format_double(map_p_start_min);
    kv["map_p_start_max"] = format_double(map_p_start_max);
    kv["map_p_start_points"] = std::to_string(map_p_start_points);
    kv["map_p_end_min"] = format_double(map_p_end_min);
    kv["map_p_end_max"] = format_double(map_p_end_max);
    kv["map_p_end_points"] = std::to_string(map_p_end_points);
    kv["quench_p_start"] = format_double(quench_p_start);
    kv["quench_p_end"] = format_double(quench_p_end);
    kv["trace_t_min"] = format_double(trace_t_min);
    kv["trace_t_max"] = format_double(trace_t_max);
    kv["trace_points"] = std::to_string(trace_points);
    if (!schedule.empty()) kv["schedule"] = schedule;
    kv["tail_window_lo"] = format_double(tail_window_lo);
    kv["tail_window_hi"] = format_double(tail_window_hi);
    kv["slope_threshold"] = format_double(slope_threshold);
    kv["condensed_threshold"] = format_double(condensed_threshold);
    kv["exp_fit_points"] = std::to_string(exp_fit_points);
    kv["exp_fit_rel_min"] = format_double(exp_fit_rel_min);
    kv["exp_fit_rel_max"] = format_double(exp_fit_rel_max);
    kv["format"] = format;
    kv["jobs"] = std::to_string(jobs);

    std::string out;
    for (const auto& [k, v] : kv) out += k + " = " + v + "\n";
    return out;
}

uint64_t RunConfig::hash() const {
    // FNV-1a over the canonical serialization
    const std::string s = serialize();
    uint64_t h = 1469598103934665603ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

namespace {

const char* PAPER_SCENE = R"(
max_level = 5
A_per_level = 3.8e-12, 9.2e-12, 23.0e-12, 55.4e-12, 124.9e-12
E_per_level = 5.6e-10, 6.8e-10, 8.2e-10, 9.3e-10, 10.0e-10
density = 1e13
N_per_bin = 1e12
extent = 5
Gamma_down = 0.25
)";

} // namespace

std::vector<std::string> preset_names() {
    return {"paper_fig1", "paper_fig1_21modes", "paper_fig3",
            "paper_fig4", "paper_twostep", "paper_plateau"};
}

std::string preset_text(const std::string& name) {
    std::string scene = PAPER_SCENE;
    if (name == "paper_fig1") {
        return scene + R"(
sweep_p_min = 1e-3
sweep_p_max = 1.0
sweep_points = 200
)";
    }
    if (name == "paper_fig1_21modes") {
        // level-5 rates continue the spectral trend of the 5 tabulated levels
        std::string s = scene + R"(
max_level = 6
A_per_level = 3.8e-12, 9.2e-12, 23.0e-12, 55.4e-12, 124.9e-12, 281.0e-12
E_per_level = 5.6e-10, 6.8e-10, 8.2e-10, 9.3e-10, 10.0e-10, 10.5e-10
sweep_p_min = 1e-3
sweep_p_max = 1.0
sweep_points = 200
)";
        return s;
    }
    if (name == "paper_fig3") {
        return scene + R"(
quench_p_start = 3.16e-4
quench_p_end = 0.25
trace_t_min = 1e-3
trace_t_max = 3e5
trace_points = 600
tail_window_lo = 10
tail_window_hi = 1e3
)";
    }
    if (name == "paper_fig4") {
        return scene + R"(
map_p_start_min = 1e-3
map_p_start_max = 1.0
map_p_start_points = 16
map_p_end_min = 1e-3
map_p_end_max = 1.0
map_p_end_points = 16
)";
    }
    if (name == "paper_twostep") {
        return scene + R"(
schedule = 0:3.16e-4, 20:1e-2, 40:0.25
)";
    }
    if (name == "paper_plateau") {
        return scene + R"(
sweep_p_min = 0.3
sweep_p_max = 1e3
sweep_points = 24
)";
    }
    throw ConfigError("unknown preset '" + name + "'; available: paper_fig1, "
                      "paper_fig1_21modes, paper_fig3, paper_fig4, paper_twostep, "
                      "paper_plateau");
}

RunConfig preset_config(const std::string& name) {
    return parse_config_text(preset_text(name), "preset:" + name);
}

} // namespace pbec
