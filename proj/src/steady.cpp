// steady.cpp — Abel-regularized stationary state by sparse LU
#include <Eigen/SparseLU>
#include <stdexcept>

#include "dissq/engine.hpp"

namespace dissq::engine {

core::DensityMatrix steady_state(const Generator& gen, const core::DensityMatrix& rho0, const SteadyOptions& opt) {
    if (!(opt.eps > 0)) throw std::invalid_argument("steady_state: eps must be > 0");
    const int d = gen.dim();
    const long D = long(d) * d;
    Eigen::SparseMatrix<cplx> A = -gen.liouvillian();
    for (long i = 0; i < D; ++i) A.coeffRef(i, i) += opt.eps;
    A.makeCompressed();
    Vec b(D);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) b(long(i) * d + j) = opt.eps * rho0(i, j);

    Eigen::SparseLU<Eigen::SparseMatrix<cplx>, Eigen::COLAMDOrdering<int>> lu;
    lu.analyzePattern(A);
    lu.factorize(A);
    if (lu.info() != Eigen::Success) throw std::runtime_error("steady_state: factorization failed: " + lu.lastErrorMessage());
    Vec x = lu.solve(b);
    if (lu.info() != Eigen::Success) throw std::runtime_error("steady_state: solve failed");
    core::DensityMatrix rho(d, d);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) rho(i, j) = x(long(i) * d + j);
    rho = 0.5 * (rho + rho.adjoint()).eval();
    return rho / rho.trace();
}

}  // namespace dissq::engine
