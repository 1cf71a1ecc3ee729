// config.hpp — JSON experiment specs: parsing, validation, canonical serialization, hashing
#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "dissq/optimizer.hpp"
#include "dissq/readout.hpp"

namespace dissq::cli {

// parse or validation failure; `field` is a dotted path, `line`/`column` are set for syntax errors
struct SpecError : std::runtime_error {
    std::string field;
    int line = 0;
    int column = 0;
    SpecError(std::string field_, const std::string& msg, int line_ = 0, int column_ = 0);
};

enum class Experiment { TimeSweep, EtaSweep, Optimize, ErrorBudget, CoolingInterleave, PhiCalibration, SyntheticReadout };
const std::vector<std::string>& experiment_names();
Experiment parse_experiment(const std::string& s);
std::string experiment_name(Experiment e);

// Rabi rates in Hz (cycles), times in microseconds, angles in radians.
// Rates left unset are derived (large-detuning mode) or default to zero.
struct ProtocolSpec {
    std::optional<double> omega_bq_hz, omega_ba_hz, omega_c_hz, omega_res_hz, t_rep_us;
    double phi_rad = M_PI;
    double global_phase_rad = 0;
    double eta = 0.257;
    double rabi_imbalance = 0;
    std::string imbalance_target = "qubit_sideband";
    std::array<std::array<double, 4>, 2> stark_hz{};
    bool operator==(const ProtocolSpec&) const = default;
};

// measured drives plus beam geometry; scattering is calibrated from the drives
struct BeamSpec {
    double detuning_ghz = -450;
    double b_pi = 0.62;
    double r_plus = 1.0;
    double red_to_blue_power = 0.4;
    bool scattering = true;
    // residual down-aux coupling: "off", "r_pi" (explicit component) or "calibrated" (from a reference drive)
    std::string residual = "calibrated";
    double r_pi = 0;
    double reference_omega_bq_hz = 6.56e3;
    double reference_omega_ba_hz = 10.03e3;
    double reference_detuning_ghz = -315;
    double reference_rate_hz = 100;
    bool operator==(const BeamSpec&) const = default;
};

struct RamanRateSpec {
    std::string from, to, pol;
    double rate_per_s = 0;
    bool operator==(const RamanRateSpec&) const = default;
};
struct RateTableSpec {
    std::vector<RamanRateSpec> raman;
    double rayleigh_rate_per_s = 0;
    std::array<double, 3> rayleigh_mix{0, 0, 1};  // sigma-, pi, sigma+
    bool operator==(const RateTableSpec&) const = default;
};

struct LargeDetuningSpec {
    opt::ControlPoint point;
    double p_blue_fraction = 0.5;
    bool operator==(const LargeDetuningSpec& o) const {
        return point.to_array() == o.point.to_array() && p_blue_fraction == o.p_blue_fraction;
    }
};

struct NumericsSpec {
    int n_max = 12;
    std::string dissipator = "quadrature";
    int series_order = 12;
    int n_theta = 24;
    int n_phi = 24;
    bool recoil = true;
    std::string integrator = "dopri5";
    double t_final_ms = 16;
    int n_samples = 64;
    double abs_tol = 1e-9;
    double rel_tol = 1e-7;
    double dt_max_us = 0;
    std::string objective = "steady";
    double steady_eps_per_s = 1e-2;
    bool operator==(const NumericsSpec&) const = default;
};

struct StatisticsSpec {
    int shots = 250;
    int n_resamples = 10000;
    double level = 0.95;
    std::uint64_t seed = 1;
    double c0 = 0.3;
    double c1 = 15;
    std::optional<double> c2;  // default 2 c1 - c0
    double plateau_start_ms = 6;
    double plateau_stop_ms = 16;
    bool operator==(const StatisticsSpec&) const = default;
};

struct EtaSweepSpec {
    std::vector<double> etas{0.024, 0.05, 0.1, 0.15, 0.2, 0.229, 0.25};
    std::string mode = "reoptimize";
    int budget_per_eta = 80;
    bool operator==(const EtaSweepSpec&) const = default;
};
struct OptimizeSpec {
    int starts = 8;
    int budget = 800;
    std::vector<std::string> free{"b_pi", "r_plus", "r_q", "omega_c_ratio", "t_rep_ratio"};
    double initial_step = 0.15;
    double size_tol = 1e-4;
    // 0: none; otherwise re-evaluate the best point at this truncation
    int polish_n_max = 0;
    bool operator==(const OptimizeSpec&) const = default;
};
struct ErrorBudgetSpec {
    std::vector<std::string> cases = opt::budget_cases();
    bool operator==(const ErrorBudgetSpec&) const = default;
};
struct CoolingSpec {
    std::optional<double> reset_period_us;  // default 2 pi / Omega_ba
    int samples_per_period = 32;
    bool operator==(const CoolingSpec&) const = default;
};
struct PhiCalSpec {
    double phi_start_rad = 0;
    double phi_stop_rad = 2 * M_PI;
    int n_points = 100;
    int shots = 0;
    bool operator==(const PhiCalSpec&) const = default;
};

struct OutputSpec {
    std::string dir = "out";
    std::string prefix;  // default: experiment name
    bool write_counts = false;
    bool operator==(const OutputSpec&) const = default;
};

struct ExperimentSpec {
    Experiment experiment = Experiment::TimeSweep;
    ProtocolSpec protocol;
    std::optional<BeamSpec> beams;
    std::optional<RateTableSpec> rate_table;
    std::optional<LargeDetuningSpec> large_detuning;
    NumericsSpec numerics;
    StatisticsSpec statistics;
    std::optional<EtaSweepSpec> eta_sweep;
    std::optional<OptimizeSpec> optimize;
    std::optional<ErrorBudgetSpec> error_budget;
    std::optional<CoolingSpec> cooling_interleave;
    std::optional<PhiCalSpec> phi_calibration;
    OutputSpec output;
    bool operator==(const ExperimentSpec&) const = default;
};

ExperimentSpec parse_spec(const std::string& text);
ExperimentSpec load_spec(const std::string& path);
// cross-field rules; throws SpecError naming the field
void validate(const ExperimentSpec& s);
// canonical JSON text (sorted keys, two-space indent)
std::string serialize(const ExperimentSpec& s);
std::string spec_hash(const ExperimentSpec& s);
std::string sha256_hex(const std::string& data);

// builders from a validated spec
protocol::ProtocolParams protocol_params(const ExperimentSpec& s);
opt::ModelOptions model_options(const ExperimentSpec& s);
engine::EvolutionConfig evolution_config(const ExperimentSpec& s);
readout::DetectionModel detection_model(const ExperimentSpec& s);
atomic::RateTable explicit_rate_table(const ExperimentSpec& s);
opt::OptSpace opt_space(const ExperimentSpec& s);
opt::ObjectiveOptions objective_options(const ExperimentSpec& s);

}  // namespace dissq::cli
