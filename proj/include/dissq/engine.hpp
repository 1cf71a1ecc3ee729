// engine.hpp — Lindblad generator, time integration, steady state
#pragma once

#include <array>
#include <functional>
#include <string>
#include <vector>

#include "dissq/channels.hpp"

namespace dissq::engine {

// Precomputed generator: H_eff = H - i/2 sum L^dag L, plus jump terms grouped by recoil map.
class Generator {
public:
    Generator(const core::HilbertLayout& layout, const core::OperatorMatrix& H,
              const dissipation::ChannelSet& channels);

    const core::HilbertLayout& layout() const { return layout_; }
    int dim() const { return layout_.total_dim; }

    void rhs(const Mat& rho, Mat& out) const;
    Mat rhs(const Mat& rho) const;

    // row-major vectorization: vec(rho)[i*d + j] = rho(i, j)
    Eigen::SparseMatrix<cplx> liouvillian() const;

    const SpMat& h_eff() const { return h_eff_; }

private:
    struct Transfer {
        int a, b, src;
        cplx coef;
    };
    struct Group {
        std::shared_ptr<const dissipation::RecoilMap> map;
        std::vector<std::pair<int, int>> sources;
        std::vector<Transfer> transfers;
    };

    core::HilbertLayout layout_;
    SpMat h_eff_;
    SpMat h_eff_adj_;
    std::vector<Group> groups_;
};

Mat lindblad_rhs(const Mat& rho, const core::OperatorMatrix& H, const dissipation::ChannelSet& channels,
                 const core::HilbertLayout& layout);

enum class Integrator { RK4, DOPRI5 };

struct EvolutionConfig {
    double t_final = 16e-3;
    double dt_max = 0;  // 0: derived from the generator
    double dt_init = 0;
    double abs_tol = 1e-9;
    double rel_tol = 1e-7;
    std::vector<double> sample_times;
    Integrator integrator = Integrator::DOPRI5;
    // minimum-eigenvalue check every k-th sample (0 disables)
    int positivity_every = 4;
    double positivity_abort = -1e-5;
    // motional reset at multiples of this period (0 disables)
    double reset_period = 0;
    // called with each recorded sample
    std::function<void(double, const core::DensityMatrix&)> observer;

    void validate() const;
};

// P_dd, P_uu, P_S, P_T, P_leak
using BasisPops = std::array<double, 5>;
BasisPops basis_populations(const core::DensityMatrix& rho, const core::HilbertLayout& layout);

struct Diagnostics {
    double max_trace_error = 0;
    double max_hermiticity = 0;
    double min_eigenvalue = 0;       // most negative eigenvalue seen, 0 if none
    double max_edge_population = 0;  // population with n >= n_max - 2
    double max_top_population = 0;   // population with n = n_max
    long steps = 0;
    long rejected = 0;
    long rhs_calls = 0;
    bool truncation_flag = false;
};

struct Trajectory {
    std::vector<double> times;
    std::vector<double> fidelities;
    std::vector<double> mean_phonons;
    std::vector<BasisPops> populations;
    core::DensityMatrix final_state;
    Diagnostics diag;
};

Trajectory evolve(const core::DensityMatrix& rho0, const Generator& gen, const EvolutionConfig& cfg,
                  const core::PureState& target);
Trajectory evolve(const core::DensityMatrix& rho0, const core::OperatorMatrix& H,
                  const dissipation::ChannelSet& channels, const core::HilbertLayout& layout,
                  const EvolutionConfig& cfg);

// uniform grid of n+1 points on [0, t_final]
std::vector<double> uniform_times(double t_final, int n);

core::DensityMatrix reset_motion(const core::DensityMatrix& rho, const core::HilbertLayout& layout);

double plateau_fidelity(const Trajectory& traj, double t_lo, double t_hi);
double peak_fidelity(const Trajectory& traj);

// Abel-regularized stationary state reached from rho0: eps (eps - L)^{-1} rho0
struct SteadyOptions {
    double eps = 1e-2;  // 1/s
};
core::DensityMatrix steady_state(const Generator& gen, const core::DensityMatrix& rho0, const SteadyOptions& opt = {});

// dense superoperator of the generator, for small systems only
Mat dense_superoperator(const Generator& gen);
// exp(L t) applied to vec(rho) for small systems
Mat superoperator_evolve(const Mat& L, const Mat& rho0, double t);

}  // namespace dissq::engine
