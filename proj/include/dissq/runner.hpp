// runner.hpp — experiment drivers, CSV/JSON emission, invariant verification
#pragma once

#include <optional>
#include <string>
#include <vector>

#include "dissq/config.hpp"

namespace dissq::cli {

struct RunOptions {
    int threads = 1;
    std::optional<std::string> out_dir;  // overrides output.dir
};

struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
};

struct ResultSet {
    std::string experiment;
    std::string spec_hash;
    Table table;
    std::string summary_json;  // without the wall-time field, which write_results adds
    double wall_time_s = 0;
    std::optional<readout::CountRecord> counts;
};

// DISSQ_SEED, when set, replaces statistics.seed; throws SpecError on a malformed value
void apply_seed_override(ExperimentSpec& s);

ResultSet run_experiment(const ExperimentSpec& s, const RunOptions& o = {});

// writes <dir>/<prefix>.csv, <prefix>.json and optionally <prefix>.counts; returns the paths
std::vector<std::string> write_results(const ResultSet& r, const ExperimentSpec& s, const RunOptions& o = {});

std::string csv_field(const std::string& v);
std::string to_csv(const Table& t);
// shortest round-trip decimal
std::string fmt(double v);

struct VerifyItem {
    std::string name;
    bool pass = false;
    std::string detail;
};
std::vector<VerifyItem> verify(const ExperimentSpec& s);

// model for time-resolved experiments: large-detuning point, calibrated beams, explicit table or none
opt::Model spec_model(const ExperimentSpec& s);

}  // namespace dissq::cli
