// optimizer.hpp — model assembly, steady-state objective, multi-start simplex and parameter studies
#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "dissq/atomic.hpp"
#include "dissq/engine.hpp"

namespace dissq::opt {

struct ModelOptions {
    int n_max = 12;
    dissipation::DissipatorForm form = dissipation::DissipatorForm::Quadrature;
    int series_order = 12;
    int n_theta = 24;
    int n_phi = 24;
    // false: every recoil map built at eta = 0
    bool recoil = true;
    dissipation::RepumpOptions repump;
};

struct Model {
    core::HilbertLayout layout;
    protocol::ProtocolParams params;
    dissipation::ChannelSet channels;
    core::OperatorMatrix hamiltonian;
    engine::Generator generator;
};

// repump always; Raman, Rayleigh and stimulated rates from the table when given
Model build_model(const protocol::ProtocolParams& p, const atomic::RateTable* rates, const ModelOptions& opt);

// Large-detuning control point. Polarization constraints are built into the parameterization.
struct ControlPoint {
    double b_pi = 0.59;
    double r_plus = 0.88;
    double r_q = 0.357;
    double oc_ratio = 0.27;    // Omega_c / Omega_ba
    double trep_ratio = 0.22;  // t_rep Omega_ba / pi

    static constexpr int kDim = 5;
    std::array<double, kDim> to_array() const { return {b_pi, r_plus, r_q, oc_ratio, trep_ratio}; }
    static ControlPoint from_array(const std::array<double, kDim>& a) { return {a[0], a[1], a[2], a[3], a[4]}; }
    static const char* name(int i);
};

struct OptSpace {
    std::array<double, ControlPoint::kDim> lo{0.0, 0.0, 1e-3, 1e-3, 1e-3};
    std::array<double, ControlPoint::kDim> hi{1.0, 1.0, 1 - 1e-3, 2.0, 5.0};
    std::array<bool, ControlPoint::kDim> free{true, true, true, true, true};
    double p_blue_fraction = 0.5;
    double omega_ba = 2 * M_PI * 5.5e3;

    void validate() const;
    bool contains(const ControlPoint& c) const;
};

// protocol parameters and rate table for a large-detuning control point
atomic::RateTable control_rates(const atomic::AtomModel& m, const ControlPoint& c, double eta, const OptSpace& space);
protocol::ProtocolParams control_params(const ControlPoint& c, double eta, const atomic::RateTable& rates);

enum class ObjectiveMode { Steady, Plateau, Horizon };
ObjectiveMode parse_objective_mode(const std::string& s);

struct ObjectiveOptions {
    ObjectiveMode mode = ObjectiveMode::Steady;
    ModelOptions model;
    double horizon = 16e-3;     // s, Horizon mode
    double plateau_cap = 0.2;   // s, Plateau mode gives up here
    double drift_tol = 1e-5;    // relative change per repump time, Plateau mode
    double steady_eps = 1e-2;   // 1/s
    double omega_c_override = -1;  // rad/s; >= 0 replaces oc_ratio * omega_ba
};

struct ObjectiveValue {
    double fidelity = 0;
    double mean_phonon = 0;
    double singlet_phonon = 0;  // mean phonon number conditioned on the internal singlet
    bool converged = true;
    core::StateChecks checks;
};

ObjectiveValue large_detuning_objective(const atomic::AtomModel& m, const ControlPoint& c, double eta,
                                        const OptSpace& space, const ObjectiveOptions& opt);
double singlet_mean_phonon(const core::DensityMatrix& rho, const core::HilbertLayout& l);

// fidelity of the stationary / plateau state for an assembled model
ObjectiveValue model_objective(const Model& model, const ObjectiveOptions& opt);

struct OptOptions {
    int starts = 8;
    int budget = 800;           // total objective evaluations over all starts
    double initial_step = 0.15; // fraction of each bound interval
    double size_tol = 1e-4;     // simplex size in transformed coordinates
    int threads = 1;
    bool include_initial = true;  // first start at the supplied point, the rest from a Sobol sequence
};

struct StartRecord {
    ControlPoint start;
    ControlPoint best;
    double best_fidelity = 0;
    int evaluations = 0;
    bool converged = false;
};

struct OptResult {
    ControlPoint best_params;
    double best_fidelity = 0;
    int evaluation_count = 0;
    std::vector<double> convergence_trace;  // best-so-far fidelity per evaluation
    bool converged = false;                  // false: budget exhausted before the simplex collapsed
    std::vector<StartRecord> starts;
};

OptResult optimize_large_detuning(const atomic::AtomModel& m, double eta, const ControlPoint& initial,
                                  const OptSpace& space, const ObjectiveOptions& obj, const OptOptions& opt);

// central-difference gradient over the free parameters, per unit parameter
std::array<double, ControlPoint::kDim> objective_gradient(const atomic::AtomModel& m, const ControlPoint& c, double eta,
                                                          const OptSpace& space, const ObjectiveOptions& obj,
                                                          double step = 1e-3);

// one parameter scaled by each factor, the rest fixed
std::vector<double> sensitivity_scan(const atomic::AtomModel& m, const ControlPoint& c, int param,
                                     const std::vector<double>& factors, double eta, const OptSpace& space,
                                     const ObjectiveOptions& obj, int threads = 1);

enum class EtaMode { Frozen, Reoptimize };
EtaMode parse_eta_mode(const std::string& s);

struct EtaPoint {
    double eta = 0;
    double error = 0;
    double oc_ratio = 0;
    double trep_ratio = 0;
    int evaluations = 0;
};
// Reoptimize adjusts Omega_c and t_rep per eta; polarizations and power split stay at the supplied point
std::vector<EtaPoint> eta_sweep(const atomic::AtomModel& m, const std::vector<double>& etas, const ControlPoint& c,
                                EtaMode mode, const OptSpace& space, const ObjectiveOptions& obj, int budget_per_eta = 80,
                                int threads = 1);
// least-squares slope of log(error) vs log(eta) over [lo, hi]
double log_log_slope(const std::vector<EtaPoint>& pts, double lo, double hi);

struct InterleaveResult {
    double baseline_fidelity = 0;   // stationary state without resets
    double baseline_phonon = 0;     // conditioned on the internal singlet
    double fidelity = 0;            // period average once the reset cycle is periodic
    double pre_reset_phonon = 0;    // unconditioned
    double post_reset_fidelity = 0;
    int periods = 0;
};
InterleaveResult cooling_interleave(const Model& model, double reset_period, const ObjectiveOptions& obj,
                                    int samples_per_period = 32, int max_periods = 400, double tol = 1e-8);

// Finite-detuning configuration: measured drives plus calibrated scattering and residual coupling.
struct FiniteConfig {
    std::string name;
    atomic::MeasuredDrive drive;
    double omega_c = 0;
    double t_rep = 34e-6;
    double phi = M_PI;
    double rabi_imbalance = 0;
    double eta = 0.257;
    bool scattering = true;
    bool residual = true;
    bool recoil = true;
    // residual coupling measured at the reference drive, rescaled to this drive through r_pi
    atomic::MeasuredDrive residual_reference;
    double residual_reference_rate = 2 * M_PI * 100;
};
FiniteConfig preset_315();
FiniteConfig preset_450();

Model build_finite_model(const atomic::AtomModel& m, const FiniteConfig& c, const ModelOptions& opt);

struct TimeSeries {
    std::vector<double> times;
    std::vector<double> fidelity;   // <S,0|rho|S,0>
    std::vector<double> mean_phonon;
    std::vector<engine::BasisPops> populations;
    engine::Diagnostics diag;

    double peak_singlet() const;                      // max P_S
    double plateau_singlet(double t_lo, double t_hi) const;  // mean P_S on [t_lo, t_hi]
};
TimeSeries time_sweep(const Model& model, const engine::EvolutionConfig& cfg);

struct BudgetRow {
    std::string name;
    double peak = 0;
    double plateau = 0;
};
std::vector<std::string> budget_cases();
// case configuration, or throws for an unknown name
FiniteConfig budget_case(const std::string& name);
// the toggled configuration with one error source removed, for contribution cases
std::vector<BudgetRow> error_budget(const atomic::AtomModel& m, const std::vector<std::string>& cases,
                                    const ModelOptions& model, const engine::EvolutionConfig& cfg, int threads = 1);

}  // namespace dissq::opt
