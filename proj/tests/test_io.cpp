#include "superatom/io.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "json.hpp"
#include "superatom/errors.hpp"
#include "test_util.hpp"

using namespace superatom;
using testutil::thrown_kind;

namespace {

template <class Fn>
std::string thrown_message(Fn&& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.what();
    }
    throw std::logic_error("expected a superatom::Error");
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

struct TempDir {
    std::filesystem::path path;
    TempDir() {
        path = std::filesystem::temp_directory_path() /
               ("superatom_io_test_" + std::to_string(::getpid()));
        std::filesystem::create_directories(path);
    }
    ~TempDir() { std::filesystem::remove_all(path); }
    std::string file(const std::string& name) const {
        return (path / name).string();
    }
};

const char* kFullConfig = R"({
  "params": {"kappa": 0.322, "gamma": 0.069, "gamma_d": 1.326},
  "pulse": {"shape": "tukey", "rise_us": 0.8, "uptime_us": 5.0, "peak_rate": 12.4},
  "grid": {"t_start": 0.0, "t_end": 8.0, "n_points": 161},
  "correlate": {"n_grid": 32, "floor": 1e-10},
  "coupling": {
    "cloud": {"total_atoms": 25000.0, "sigma_z": 6.0, "sigma_r": 10.0},
    "beam": {"waist": 6.5, "wavelength": 0.78, "gamma_e": 38.11,
             "control_rabi": 1.0, "control_detuning": 10.0,
             "blockade_radius": 25.5}
  },
  "fit": {
    "traces": ["a.csv", "b.csv"],
    "free": {"kappa": [0.03, 3.3], "gamma_d": [0.13, 13.3]},
    "fixed": {"gamma": 0.069},
    "starts": 6
  },
  "oracle": {
    "modes": 256,
    "box_length": 20.0,
    "final_time": 8.0,
    "grid": [7.0, 7.2],
    "input": {"kind": "weak_coherent", "mean_photons": 0.01}
  },
  "phase_diagram": {
    "lambda": {"min": 0.25, "max": 64.0, "n": 9, "scale": "log"},
    "nph": {"min": 0.0, "max": 24.0, "n": 5}
  },
  "output": {"directory": "out/demo", "format": "csv"}
})";

}  // namespace

TEST_CASE("full configuration parses into every section") {
    const RunConfig cfg = parse_config(kFullConfig, "cfg");
    REQUIRE(cfg.params.has_value());
    CHECK(cfg.params->kappa == 0.322);
    CHECK(cfg.params->gamma_d == 1.326);
    REQUIRE(cfg.pulse.has_value());
    CHECK(*cfg.pulse == PulseSpec::tukey(0.8, 5.0, 12.4));
    REQUIRE(cfg.grid.has_value());
    CHECK(cfg.grid->n_points == 161);
    REQUIRE(cfg.correlate.has_value());
    CHECK(cfg.correlate->n_grid == 32);
    CHECK(cfg.correlate->floor == 1e-10);
    REQUIRE(cfg.coupling.has_value());
    CHECK(cfg.coupling->cloud.total_atoms() == doctest::Approx(25000.0));
    CHECK(cfg.coupling->beam.blockade_radius == 25.5);
    REQUIRE(cfg.fit.has_value());
    CHECK(cfg.fit->trace_files.size() == 2);
    CHECK(cfg.fit->starts == 6);
    CHECK(cfg.fit->free[0].has_value());
    CHECK(cfg.fit->free[0]->upper == 3.3);
    CHECK(cfg.fit->fixed[1].has_value());
    CHECK(!cfg.fit->free[1].has_value());
    REQUIRE(cfg.oracle.has_value());
    CHECK(cfg.oracle->config.mode_count == 256);
    CHECK(cfg.oracle->config.span_us == 20.0);
    CHECK(cfg.oracle->config.grid_times_us ==
          std::vector<double>{7.0, 7.2});
    CHECK(cfg.oracle->input.mean_photons == 0.01);
    REQUIRE(cfg.phase_diagram.has_value());
    CHECK(cfg.phase_diagram->lambda_grid.size() == 9);
    CHECK(cfg.phase_diagram->lambda_grid.front() == 0.25);
    CHECK(cfg.phase_diagram->lambda_grid.back() == 64.0);
    CHECK(cfg.phase_diagram->nph_grid.size() == 5);
    CHECK(cfg.phase_diagram->nph_grid[1] == doctest::Approx(6.0));
    CHECK(cfg.output.directory == "out/demo");
}

TEST_CASE("unknown and ill-typed keys are named by path") {
    CHECK(thrown_message([] {
              parse_config(R"({"params": {"kappa": 1, "gamma": 0,
                               "gamma_d": 0, "oops": 1}})",
                           "doc");
          }).find("params.oops") != std::string::npos);
    CHECK(thrown_message([] {
              parse_config(R"({"pulse": {"shape": "tukey", "rise_us": 0.1,
                               "uptime_us": 1, "peak_rate": 2, "rate": 3}})",
                           "doc");
          }).find("pulse.rate") != std::string::npos);
    CHECK(thrown_message([] {
              parse_config(R"({"grid": {"t_start": 0, "t_end": 1,
                               "n_points": 2.5}})",
                           "doc");
          }).find("grid.n_points") != std::string::npos);
    CHECK(thrown_message([] {
              parse_config(R"({"fit": {"traces": ["x"],
                               "free": {"beta": [1, 2]}}})",
                           "doc");
          }).find("fit.free.beta") != std::string::npos);
    CHECK(thrown_kind([] { parse_config("{]", "doc"); }) ==
          ErrorKind::config);
    CHECK(thrown_kind([] { parse_config("[1,2]", "doc"); }) ==
          ErrorKind::config);
    CHECK(thrown_kind([] {
              parse_config(R"({"params": {"kappa": 1, "gamma": 0}})", "doc");
          }) == ErrorKind::config);
    CHECK(thrown_kind([] {
              parse_config(R"({"output": {"format": "xml"}})", "doc");
          }) == ErrorKind::config);
    CHECK(thrown_kind([] {
              parse_config(R"({"oracle": {"box_length": 20, "final_time": 8,
                               "grid": [1], "input": {"kind": "single_photon",
                               "mean_photons": 0.1}}})",
                           "doc");
          }) == ErrorKind::config);
    CHECK(thrown_kind([] {
              parse_config(R"({"coupling": {"cloud": {"peak_density": 1,
                               "total_atoms": 2, "sigma_z": 6, "sigma_r": 10},
                               "beam": {"waist": 6.5, "wavelength": 0.78,
                               "gamma_e": 38, "control_rabi": 1,
                               "control_detuning": 10,
                               "blockade_radius": 25}}})",
                           "doc");
          }) == ErrorKind::config);
}

TEST_CASE("missing config file is an io error naming the path") {
    const std::string msg =
        thrown_message([] { load_config("/no/such/config.json"); });
    CHECK(thrown_kind([] { load_config("/no/such/config.json"); }) ==
          ErrorKind::io);
    CHECK(msg.find("/no/such/config.json") != std::string::npos);
}

TEST_CASE("uniform grids hit both endpoints exactly") {
    const GridSpec g{0.0, 8.0, 161};
    const auto t = g.times();
    CHECK(t.size() == 161);
    CHECK(t.front() == 0.0);
    CHECK(t.back() == 8.0);
    CHECK(t[1] == doctest::Approx(0.05).epsilon(1e-14));
    CHECK(thrown_kind([] { GridSpec{0.0, 0.0, 5}.validate(); }) ==
          ErrorKind::invalid_input);
    CHECK(thrown_kind([] { GridSpec{0.0, 1.0, 1}.validate(); }) ==
          ErrorKind::invalid_input);
}

TEST_CASE("pulse serialization round-trips every shape") {
    const PulseSpec shapes[] = {
        PulseSpec::tukey(0.8, 5.0, 12.4, 0.25),
        PulseSpec::square(6.0, 2.6, 1.5),
        PulseSpec::sampled({0.0, 0.5, 2.0}, {0.0, 3.25, 0.0}, 0.125),
    };
    for (const PulseSpec& p : shapes) {
        CHECK(pulse_from_json(pulse_to_json(p), "trip") == p);
    }
}

TEST_CASE("trace files round-trip byte for byte") {
    TempDir dir;
    TraceData t;
    t.kind = TraceKind::rydberg_population;
    t.times_us = {0.1, 0.30000000000000004, 1.7};
    t.values = {0.25, 1.0 / 3.0, 0.6252118731};
    t.sem = {0.01, 0.02, 0.012345678901234567};
    t.pulse = PulseSpec::tukey(0.8, 5.0, 12.4);

    const std::string f1 = dir.file("trace1.csv");
    const std::string f2 = dir.file("trace2.csv");
    write_trace_csv(f1, t);
    const TraceData back = read_trace_csv(f1);
    CHECK(back.kind == t.kind);
    CHECK(back.pulse == t.pulse);
    CHECK(back.times_us == t.times_us);
    CHECK(back.values == t.values);
    CHECK(back.sem == t.sem);
    write_trace_csv(f2, back);
    CHECK(slurp(f1) == slurp(f2));
}

TEST_CASE("trace files reject malformed and invalid content") {
    TempDir dir;
    const auto put = [&](const std::string& name, const std::string& text) {
        std::ofstream out(dir.file(name), std::ios::binary);
        out << text;
        return dir.file(name);
    };
    const std::string meta =
        "# kind=photon_rate\n# pulse={\"shape\":\"square\","
        "\"duration_us\":6.0,\"rate\":2.0,\"start_time_us\":0.0}\n";

    const std::string bad_row =
        put("bad_row.csv", meta + "time_us,value,sem\n0.1,hello,0.2\n");
    CHECK(thrown_kind([&] { read_trace_csv(bad_row); }) == ErrorKind::config);
    CHECK(thrown_message([&] { read_trace_csv(bad_row); }).find(":4:") !=
          std::string::npos);

    const std::string two_fields =
        put("two.csv", meta + "time_us,value,sem\n0.1,0.2\n");
    CHECK(thrown_kind([&] { read_trace_csv(two_fields); }) ==
          ErrorKind::config);

    const std::string zero_sem =
        put("sem.csv", meta + "time_us,value,sem\n0.1,0.2,0.0\n");
    CHECK(thrown_kind([&] { read_trace_csv(zero_sem); }) ==
          ErrorKind::invalid_input);

    const std::string backwards = put(
        "rev.csv", meta + "time_us,value,sem\n0.2,0.1,0.1\n0.1,0.1,0.1\n");
    CHECK(thrown_kind([&] { read_trace_csv(backwards); }) ==
          ErrorKind::invalid_input);

    const std::string no_kind = put(
        "nokind.csv",
        "# pulse={\"shape\":\"square\",\"duration_us\":6.0,\"rate\":2.0,"
        "\"start_time_us\":0.0}\ntime_us,value,sem\n0.1,0.2,0.3\n");
    CHECK(thrown_kind([&] { read_trace_csv(no_kind); }) == ErrorKind::config);

    const std::string wrong_header =
        put("hdr.csv", meta + "t,v,s\n0.1,0.2,0.3\n");
    CHECK(thrown_kind([&] { read_trace_csv(wrong_header); }) ==
          ErrorKind::config);

    CHECK(thrown_kind([&] { read_trace_csv(dir.file("absent.csv")); }) ==
          ErrorKind::io);
}

TEST_CASE("tables serialize to csv and json") {
    TempDir dir;
    Table t;
    t.comments = {"manifest=x_manifest.json"};
    t.columns = {"a", "b"};
    t.rows = {{1.0, 0.5}, {2.0, 0.25}};

    const std::string csv = dir.file("t.csv");
    write_table(csv, t, "csv");
    CHECK(slurp(csv) == "# manifest=x_manifest.json\na,b\n1,0.5\n2,0.25\n");

    const std::string jsn = dir.file("t.json");
    write_table(jsn, t, "json");
    const auto doc = nlohmann::json::parse(slurp(jsn));
    CHECK(doc["columns"] == nlohmann::json({"a", "b"}));
    CHECK(doc["rows"][1][1] == 0.25);

    Table ragged = t;
    ragged.rows.push_back({1.0});
    CHECK(thrown_kind([&] { write_table(csv, ragged, "csv"); }) ==
          ErrorKind::invalid_input);
    CHECK(thrown_kind([&] { write_table(csv, t, "yaml"); }) ==
          ErrorKind::invalid_input);
}

TEST_CASE("atomic writes leave no temp file behind") {
    TempDir dir;
    const std::string f = dir.file("out.txt");
    write_text_atomic(f, "first\n");
    write_text_atomic(f, "second\n");
    CHECK(slurp(f) == "second\n");
    CHECK(!std::filesystem::exists(f + ".tmp"));
}

TEST_CASE("manifest embeds a config that parses back identically") {
    const RunConfig cfg = parse_config(kFullConfig, "cfg");
    const std::string m = manifest_json("simulate", cfg, 42, 2, {"x.csv"});
    const auto doc = nlohmann::json::parse(m);
    CHECK(doc["tool"] == "superatom");
    CHECK(doc["version"] == kToolVersion);
    CHECK(doc["subcommand"] == "simulate");
    CHECK(doc["seed"] == 42);
    CHECK(doc["outputs"] == nlohmann::json({"x.csv"}));

    const RunConfig back =
        parse_config(doc["config"].dump(), "manifest.config");
    CHECK(back.params->kappa == cfg.params->kappa);
    CHECK(*back.pulse == *cfg.pulse);
    CHECK(back.grid->n_points == cfg.grid->n_points);
    CHECK(back.fit->trace_files == cfg.fit->trace_files);
    CHECK(back.fit->fixed[1] == cfg.fit->fixed[1]);
    CHECK(back.oracle->config.grid_times_us ==
          cfg.oracle->config.grid_times_us);
    CHECK(back.phase_diagram->lambda_grid == cfg.phase_diagram->lambda_grid);
    CHECK(back.output.directory == cfg.output.directory);

    // the embedded config manifests identically: a fixed point
    CHECK(manifest_json("simulate", back, 42, 2, {"x.csv"}) == m);
}

TEST_CASE("seventeen digits round-trip doubles exactly") {
    const double vals[] = {0.1, 1.0 / 3.0, 12.337251, 6.02e23, 1e-300, 0.0};
    for (double v : vals) {
        const std::string s = format_double(v);
        CHECK(std::stod(s) == v);
    }
}
