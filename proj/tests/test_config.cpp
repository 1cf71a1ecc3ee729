// test_config.cpp — spec parsing, validation, canonical form, runner output
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "dissq/runner.hpp"

using namespace dissq;
using namespace dissq::cli;

namespace {

std::string field_of(const std::string& text) {
    try {
        validate(parse_spec(text));
    } catch (const SpecError& e) {
        return e.field;
    }
    return "<accepted>";
}

const char* kSmallSweep = R"({
  "experiment": "time_sweep",
  "protocol": {"omega_bq_hz": 3430, "omega_ba_hz": 5500, "omega_c_hz": 1770, "t_rep_us": 69.5},
  "beams": {"detuning_ghz": -450},
  "numerics": {"n_max": 3, "n_theta": 8, "n_phi": 8, "t_final_ms": 0.5, "n_samples": 5}
})";

}  // namespace

TEST_CASE("minimal spec takes documented defaults") {
    const auto s = parse_spec(R"({"experiment": "phi_calibration"})");
    CHECK(s.experiment == Experiment::PhiCalibration);
    CHECK(s.protocol.eta == 0.257);
    CHECK(s.protocol.phi_rad == doctest::Approx(M_PI));
    CHECK(s.numerics.n_max == 12);
    CHECK(s.statistics.n_resamples == 10000);
    CHECK(s.output.dir == "out");
    validate(s);
    for (const auto& n : experiment_names()) CHECK(experiment_name(parse_experiment(n)) == n);
}

TEST_CASE("unknown keys and bad values are named") {
    CHECK(field_of(R"({"experiment": "phi_calibration", "protocol": {"etaa": 0.1}})") == "protocol.etaa");
    CHECK(field_of(R"({"experiment": "phi_calibration", "bogus": 1})") == "bogus");
    CHECK(field_of(R"({"experiment": "phi_calibration", "protocol": {"eta": 0.5}})") == "protocol.eta");
    CHECK(field_of(R"({"experiment": "phi_calibration", "protocol": {"eta": "x"}})") == "protocol.eta");
    CHECK(field_of(R"({"protocol": {}})") == "experiment");
    CHECK(field_of(R"({"experiment": "time_sweep"})") == "protocol.omega_ba_hz");
    CHECK(field_of(R"({"experiment": "optimize", "eta_sweep": {}})") == "eta_sweep");
    CHECK(field_of(R"({"experiment": "phi_calibration", "numerics": {"n_max": 0}})") == "numerics.n_max");
}

TEST_CASE("beam and rate-table sources are exclusive") {
    const std::string both = R"({"experiment": "time_sweep",
      "protocol": {"omega_bq_hz": 1, "omega_ba_hz": 1, "t_rep_us": 10},
      "beams": {}, "rate_table": {}})";
    try {
        validate(parse_spec(both));
        FAIL("accepted");
    } catch (const SpecError& e) {
        CHECK(std::string(e.what()).find("mutually exclusive") != std::string::npos);
    }
    CHECK(field_of(R"({"experiment": "time_sweep", "protocol": {"omega_ba_hz": 1, "t_rep_us": 10}, "beams": {}})") ==
          "protocol.omega_bq_hz");
    CHECK(field_of(R"({"experiment": "time_sweep",
      "protocol": {"omega_bq_hz": 1, "omega_ba_hz": 1, "t_rep_us": 10, "omega_res_hz": 5}, "beams": {}})") ==
          "protocol.omega_res_hz");
    CHECK(field_of(R"({"experiment": "cooling_interleave", "large_detuning": {}, "protocol": {"t_rep_us": 3}})") ==
          "protocol.t_rep_us");
}

TEST_CASE("non-unit emission mix is rejected by name") {
    const std::string s = R"({"experiment": "time_sweep",
      "protocol": {"omega_ba_hz": 1000, "t_rep_us": 10},
      "rate_table": {"rayleigh_rate_per_s": 10, "rayleigh_mix": [0.2, 0.2, 0.2]}})";
    try {
        validate(parse_spec(s));
        FAIL("accepted");
    } catch (const SpecError& e) {
        CHECK(e.field == "rate_table.rayleigh_mix");
        CHECK(std::string(e.what()).find("sum to 1") != std::string::npos);
    }
}

TEST_CASE("syntax errors carry line and column") {
    try {
        parse_spec("{\n  \"experiment\": \"time_sweep\",\n  \"protocol\": {,}\n}");
        FAIL("accepted");
    } catch (const SpecError& e) {
        CHECK(e.line == 3);
        CHECK(e.column == 16);
    }
}

TEST_CASE("canonical serialization round-trips and fixes the hash") {
    const auto s = parse_spec(kSmallSweep);
    const auto text = serialize(s);
    const auto back = parse_spec(text);
    CHECK(back == s);
    CHECK(serialize(back) == text);
    CHECK(spec_hash(back) == spec_hash(s));
    auto t = s;
    t.protocol.phi_rad = 3.0;
    CHECK(spec_hash(t) != spec_hash(s));
    // key order and whitespace do not matter
    const auto r = parse_spec(R"({"numerics": {"n_samples": 5, "t_final_ms": 0.5, "n_phi": 8, "n_theta": 8, "n_max": 3},
      "beams": {"detuning_ghz": -450}, "experiment": "time_sweep",
      "protocol": {"t_rep_us": 69.5, "omega_c_hz": 1770, "omega_ba_hz": 5500, "omega_bq_hz": 3430}})");
    CHECK(spec_hash(r) == spec_hash(s));
    CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("spec builders convert units") {
    const auto s = parse_spec(kSmallSweep);
    const auto p = protocol_params(s);
    CHECK(p.omega_ba == doctest::Approx(2 * M_PI * 5500));
    CHECK(p.t_rep == doctest::Approx(69.5e-6));
    const auto c = evolution_config(s);
    CHECK(c.sample_times.size() == 6);
    CHECK(c.t_final == doctest::Approx(0.5e-3));
}

TEST_CASE("csv quoting and number formatting") {
    CHECK(csv_field("plain") == "plain");
    CHECK(csv_field("a,b") == "\"a,b\"");
    CHECK(csv_field("say \"hi\"") == "\"say \"\"hi\"\"\"");
    CHECK(to_csv({{"x", "y"}, {{"1", "2"}}}) == "x,y\r\n1,2\r\n");
    for (double v : {0.1, 1.0 / 3, 6.02214076e23, -2.5e-300}) CHECK(std::stod(fmt(v)) == v);
    CHECK(fmt(0.5) == "0.5");
}

TEST_CASE("seed override from the environment") {
    auto s = parse_spec(R"({"experiment": "phi_calibration"})");
    ::setenv("DISSQ_SEED", "42", 1);
    apply_seed_override(s);
    CHECK(s.statistics.seed == 42);
    ::setenv("DISSQ_SEED", "4x", 1);
    CHECK_THROWS_AS(apply_seed_override(s), SpecError);
    ::unsetenv("DISSQ_SEED");
    apply_seed_override(s);
    CHECK(s.statistics.seed == 42);
}

TEST_CASE("runs are reproducible and tables follow the grid") {
    const auto s = parse_spec(kSmallSweep);
    const auto a = run_experiment(s);
    const auto b = run_experiment(s);
    CHECK(to_csv(a.table) == to_csv(b.table));
    CHECK(a.table.rows.size() == 6);
    CHECK(a.table.header.back() == "spec_sha256");
    CHECK(a.table.rows[0].back() == spec_hash(s));
    const auto j = nlohmann::json::parse(a.summary_json);
    CHECK(j["peak_singlet_population"].get<double>() > 0);

    auto ps = parse_spec(R"({"experiment": "phi_calibration", "phi_calibration": {"n_points": 7, "shots": 200}})");
    const auto pa = run_experiment(ps);
    CHECK(pa.table.rows.size() == 7);
    CHECK(to_csv(pa.table) == to_csv(run_experiment(ps).table));
    auto ps2 = ps;
    ps2.statistics.seed = 2;
    CHECK(to_csv(pa.table) != to_csv(run_experiment(ps2).table));

    namespace fs = std::filesystem;
    const auto dir = fs::temp_directory_path() / "dissq_test_out";
    fs::remove_all(dir);
    RunOptions ro;
    ro.out_dir = dir.string();
    const auto paths = write_results(pa, ps, ro);
    REQUIRE(paths.size() == 2);
    std::ifstream in(paths[0], std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    CHECK(ss.str() == to_csv(pa.table));
    std::ifstream js(paths[1]);
    const auto meta = nlohmann::json::parse(js);
    CHECK(meta["spec_sha256"] == spec_hash(ps));
    CHECK(parse_spec(meta["spec"].dump()) == ps);
    fs::remove_all(dir);
}

TEST_CASE("synthetic readout writes a count record") {
    auto s = parse_spec(R"({"experiment": "synthetic_readout",
      "protocol": {"omega_bq_hz": 3430, "omega_ba_hz": 5500, "omega_c_hz": 1770, "t_rep_us": 69.5},
      "beams": {"detuning_ghz": -450},
      "numerics": {"n_max": 3, "n_theta": 8, "n_phi": 8, "t_final_ms": 2, "n_samples": 4},
      "statistics": {"shots": 50, "n_resamples": 200, "plateau_start_ms": 1, "plateau_stop_ms": 2}})");
    const auto r = run_experiment(s);
    REQUIRE(r.counts);
    CHECK(r.counts->blocks.size() == 15);
    CHECK(r.counts->blocks[4].condition == readout::Condition::Pi);
    CHECK(r.counts->blocks[4].counts.size() == 50);
    CHECK(r.counts->blocks[5].counts.size() == 150);
    const auto j = nlohmann::json::parse(r.summary_json);
    CHECK(j["plateau"]["samples"] == 3);
    CHECK(j["plateau"]["ci_lo"].get<double>() <= j["plateau"]["x_est"].get<double>());
    CHECK(to_csv(r.table) == to_csv(run_experiment(s).table));

    namespace fs = std::filesystem;
    const auto dir = fs::temp_directory_path() / "dissq_test_counts";
    fs::remove_all(dir);
    s.output.write_counts = true;
    RunOptions ro;
    ro.out_dir = dir.string();
    const auto paths = write_results(r, s, ro);
    REQUIRE(paths.size() == 3);
    std::ifstream in(paths[2]);
    const auto back = readout::read_count_record(in);
    REQUIRE(back.blocks.size() == r.counts->blocks.size());
    CHECK(back.blocks[7].counts == r.counts->blocks[7].counts);
    fs::remove_all(dir);
}

TEST_CASE("verify passes the nominal model and catches a short series") {
    auto s = parse_spec(kSmallSweep);
    s.numerics.n_max = 8;
    for (const auto& v : verify(s)) CHECK_MESSAGE(v.pass, v.name << ": " << v.detail);
    s.numerics.series_order = 4;
    const auto items = verify(s);
    CHECK_FALSE(items.back().pass);
    CHECK(items.back().name.find("series") != std::string::npos);
}
