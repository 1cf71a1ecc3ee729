// hilbert.hpp — two four-level ions tensored with a truncated Fock mode
#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <complex>
#include <string>

namespace dissq {

using cplx = std::complex<double>;
using Mat = Eigen::MatrixXcd;
using Vec = Eigen::VectorXcd;
using SpMat = Eigen::SparseMatrix<cplx, Eigen::RowMajor>;

namespace core {

// internal levels per ion; leak aggregates every ground level outside the other three
enum Level : int { Down = 0, Up = 1, Aux = 2, Leak = 3 };
enum class Site { Ion1, Ion2, Motion };

constexpr int kLevels = 4;
constexpr int kInternal = kLevels * kLevels;

const char* level_name(int level);

// Flat index: (s1, s2, n) -> (s1*4 + s2)*(n_max+1) + n. Ion 1 slowest, motion fastest.
struct HilbertLayout {
    int levels_per_ion = kLevels;
    int n_max = 1;
    int n_fock = 2;
    int total_dim = 32;

    int index(int s1, int s2, int n) const { return (s1 * kLevels + s2) * n_fock + n; }
    int internal(int flat) const { return flat / n_fock; }
    int fock(int flat) const { return flat % n_fock; }
    int ion1(int flat) const { return flat / n_fock / kLevels; }
    int ion2(int flat) const { return (flat / n_fock) % kLevels; }
    bool operator==(const HilbertLayout&) const = default;
};

HilbertLayout build_layout(int n_max);

// Operator on the full space. Sparse storage; semantics identical to the dense matrix.
struct OperatorMatrix {
    SpMat m;
    bool hermitian = false;

    int dim() const { return static_cast<int>(m.rows()); }
    Mat dense() const { return Mat(m); }
};

OperatorMatrix embed(const Mat& local_op, Site site, const HilbertLayout& layout);
Mat local_ladder(int n_fock);
OperatorMatrix ladder(const HilbertLayout& layout);
OperatorMatrix number_op(const HilbertLayout& layout);

// |to><from| on one ion
Mat transition(int to, int from);

struct PureState {
    Vec amplitudes;
    std::string label;
};

using DensityMatrix = Mat;

PureState basis_state(const HilbertLayout& layout, int s1, int s2, int n, std::string label = {});
PureState singlet(const HilbertLayout& layout, int n = 0);
PureState triplet0(const HilbertLayout& layout, int n = 0);
DensityMatrix projector(const PureState& psi);

double fidelity(const DensityMatrix& rho, const PureState& target);
double mean_phonon(const DensityMatrix& rho, const HilbertLayout& layout);

// population with Fock index n >= n_lo
double fock_tail(const DensityMatrix& rho, const HilbertLayout& layout, int n_lo);

// internal-state marginal (16x16), motion traced out
Mat internal_marginal(const DensityMatrix& rho, const HilbertLayout& layout);
Vec fock_distribution(const DensityMatrix& rho, const HilbertLayout& layout);

struct StateChecks {
    double trace_error = 0;
    double hermiticity = 0;
    double min_eigenvalue = 0;
};
StateChecks check_state(const DensityMatrix& rho, bool with_spectrum = true);

}  // namespace core
}  // namespace dissq
