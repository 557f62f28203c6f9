#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>

#include "pbec/config.hpp"
#include "pbec/errors.hpp"
#include "pbec/io.hpp"
#include "pbec/version.hpp"

using namespace pbec;

TEST_CASE("config: presets resolve to the published scene") {
    RunConfig cfg = preset_config("paper_fig1");
    CHECK(cfg.max_level == 5);
    CHECK(cfg.Gamma_down == 0.25);
    CHECK(cfg.threshold_d == 1e-6);
    CHECK(cfg.A_per_level.size() == 5);
    CHECK(cfg.A_per_level[0] == 3.8e-12);
    CHECK(cfg.E_per_level[4] == 10.0e-10);
    Scene sc = build_scene(cfg.scene_params());
    CHECK(sc.n_modes() == 15);

    RunConfig big = preset_config("paper_fig1_21modes");
    CHECK(big.max_level == 6);
    CHECK(build_scene(big.scene_params()).n_modes() == 21);

    CHECK_THROWS_AS(preset_config("nope"), ConfigError);
}

TEST_CASE("config: round trip through the canonical serialization") {
    for (const auto& name : preset_names()) {
        RunConfig a = preset_config(name);
        RunConfig b = parse_config_text(a.serialize(), "roundtrip");
        CHECK(a.serialize() == b.serialize());
        CHECK(a.hash() == b.hash());
    }
}

TEST_CASE("config: empty file lists every missing required key") {
    try {
        parse_config_text("", "empty");
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        const std::string msg = e.what();
        for (const char* key : {"max_level", "A_per_level", "E_per_level", "density",
                                "N_per_bin", "extent", "Gamma_down"})
            CHECK(msg.find(key) != std::string::npos);
    }
}

TEST_CASE("config: unknown keys and type mismatches are rejected with context") {
    const std::string base = preset_text("paper_fig1");
    try {
        parse_config_text(base + "\nbogus_key = 1\n", "t");
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("bogus_key") != std::string::npos);
    }
    try {
        parse_config_text(base + "\nmax_level = banana\n", "t");
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("max_level") != std::string::npos);
    }
    CHECK_THROWS_AS(parse_config_text(base + "\nformat = xml\n", "t"), ConfigError);
    CHECK_THROWS_AS(parse_config_text(base + "\nthreshold_d = 2\n", "t"), ConfigError);
}

TEST_CASE("config: overrides apply on top of a preset") {
    RunConfig cfg = preset_config("paper_fig1");
    RunConfig mod = apply_overrides(cfg, "sweep_points = 7\nfull_field = true\n");
    CHECK(mod.sweep_points == 7);
    CHECK(mod.full_field);
    CHECK(mod.hash() != cfg.hash());
}

TEST_CASE("config: schedule strings parse into validated schedules") {
    RunConfig cfg = preset_config("paper_twostep");
    PumpSchedule s = cfg.parse_schedule();
    CHECK(s.segments.size() == 3);
    CHECK(s.segments[0].P == 3.16e-4);
    CHECK(s.last_switch_time() == 40.0);

    RunConfig bad = apply_overrides(cfg, "schedule = 5:0.1, 1:0.2\n");
    CHECK_THROWS_AS(bad.parse_schedule(), ConfigError);
}

TEST_CASE("format_double survives a parse round trip") {
    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> un(-1.0, 1.0);
    for (int k = 0; k < 200; ++k) {
        const double x = un(rng) * std::pow(10.0, int(40 * un(rng)));
        CHECK(std::stod(format_double(x)) == x);
    }
}

TEST_CASE("csv writer: metadata block, pinned header, full-precision rows") {
    const std::string path = "test_io_tmp.csv";
    RunConfig cfg = preset_config("paper_fig1");
    Scene sc = build_scene(cfg.scene_params());
    auto md = output_metadata(cfg, sc, 139);
    {
        CsvWriter csv(path, {"P", "t_eq"}, md);
        csv.row({0.1, 1.0 / 3.0});
        csv.close();
    }
    std::ifstream in(path);
    std::string line, header;
    bool saw_hash = false, saw_config = false;
    std::string data;
    while (std::getline(in, line)) {
        if (line.rfind("# config_hash", 0) == 0) saw_hash = true;
        if (line.rfind("# config.max_level = 5", 0) == 0) saw_config = true;
        if (!line.empty() && line[0] != '#') {
            if (header.empty()) header = line;
            else data = line;
        }
    }
    CHECK(saw_hash);
    CHECK(saw_config);
    CHECK(header == "P,t_eq");
    CHECK(data.find("0.33333333333333331") != std::string::npos);
    std::filesystem::remove(path);
}

TEST_CASE("csv escaping quotes fields containing separators") {
    CHECK(csv_escape("plain") == "plain");
    CHECK(csv_escape("a,b") == "\"a,b\"");
    CHECK(csv_escape("say \"hi\"") == "\"say \"\"hi\"\"\"");
}

TEST_CASE("metadata embeds the resolved configuration verbatim") {
    RunConfig cfg = preset_config("paper_fig3");
    Scene sc = build_scene(cfg.scene_params());
    auto md = output_metadata(cfg, sc, 0);
    // reconstruct the config from the metadata and compare hashes
    std::string text;
    for (const auto& [k, v] : md)
        if (k.rfind("config.", 0) == 0) text += k.substr(7) + " = " + v + "\n";
    RunConfig back = parse_config_text(text, "meta");
    CHECK(back.hash() == cfg.hash());
    CHECK(md.at("n_modes") == "15");
    CHECK(md.at("artifact_version") == std::string(PBEC_VERSION));
}
