// readout.hpp — analysis rotations, Poisson count model, MLE, bootstrap intervals
#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "dissq/hilbert.hpp"

namespace dissq::readout {

enum class Condition { Identity = 0, Pi = 1, HalfPiRandom = 2 };
Condition parse_condition(const std::string& tag);
std::string condition_name(Condition c);

// probabilities of 0, 1, 2 bright (down) ions
using BrightPops = std::array<double, 3>;

// global rotation on the down/up subspace of both ions; aux and leak are spectators and read dark
BrightPops analysis_map(const core::DensityMatrix& rho, const core::HilbertLayout& layout, Condition c,
                        int n_phases = 32);
// same on a 16x16 internal-state density matrix
BrightPops analysis_map_internal(const Mat& rho16, Condition c, int n_phases = 32);

struct DerivedPops {
    double p_dd = 0;
    double p_uu = 0;
    double x = 0;
    double p_t = 0;
};
// indexed by Condition
DerivedPops basis_populations(const std::array<BrightPops, 3>& p);

struct DetectionModel {
    double c0 = 0.3;
    double c1 = 15.0;
    double c2 = 29.7;

    // two independent emitters on a shared background
    static DetectionModel from_single(double c0, double c1);
    double mean(int n_bright) const { return n_bright == 0 ? c0 : n_bright == 1 ? c1 : c2; }
    void validate() const;
};

std::vector<int> synthesize_counts(const BrightPops& p, const DetectionModel& model, int shots, std::uint64_t seed);

struct MleOptions {
    double tol = 1e-10;  // EM fixed-point residual, max norm
    int max_iter = 200000;
};
struct MleResult {
    BrightPops p{};
    int iterations = 0;
    bool converged = false;
    double log_likelihood = 0;
};
MleResult mle_populations(const std::vector<int>& counts, const DetectionModel& model, const MleOptions& opt = {});

// counts for the three analysis conditions at one interaction time, indexed by Condition
using ConditionCounts = std::array<std::vector<int>, 3>;
DerivedPops estimate_populations(const ConditionCounts& counts, const DetectionModel& model, const MleOptions& opt = {});

struct BootstrapOptions {
    int n_resamples = 10000;
    double level = 0.95;
    std::uint64_t seed = 1;
    int threads = 1;
};
struct BootstrapResult {
    double point = 0;
    double lo = 0;
    double hi = 0;
    double z0 = 0;
    bool degenerate = false;
    std::vector<double> replicas;
};
using Statistic = std::function<double(const std::vector<std::vector<int>>&)>;
// resamples every group with replacement; bias-corrected percentile interval with zero acceleration
BootstrapResult bootstrap_ci(const std::vector<std::vector<int>>& groups, const Statistic& stat,
                             const BootstrapOptions& opt);
// interval from precomputed replicas; ties with the point estimate count half
BootstrapResult bca_interval(double point, std::vector<double> replicas, double level);

// plateau singlet population X with bootstrap interval from per-condition counts
BootstrapResult bootstrap_x(const ConditionCounts& counts, const DetectionModel& model, const BootstrapOptions& opt);

struct PhiCalPoint {
    double phi = 0;
    double p_same = 0;  // P(dd) + P(uu)
    double p_diff = 0;  // P(du) + P(ud)
};
// microwave pi/2 with random phase, then carrier Raman pi/2 with random common phase.
// shots == 0: exact average over both phases; otherwise per-shot sampling.
PhiCalPoint phi_calibration(double phi, int shots = 0, std::uint64_t seed = 1, int n_phases = 16);
std::vector<PhiCalPoint> phi_calibration_curve(const std::vector<double>& phis, int shots = 0, std::uint64_t seed = 1);

// Count record text format:
//   # dissq count record v1
//   block <time_us> <condition> <shots>
//   <count>            (shots lines)
//   ...
struct CountBlock {
    double time_us = 0;
    Condition condition = Condition::Identity;
    std::vector<int> counts;
};
struct CountRecord {
    std::vector<CountBlock> blocks;
};
void write_count_record(std::ostream& os, const CountRecord& rec);
CountRecord read_count_record(std::istream& is);

}  // namespace dissq::readout
