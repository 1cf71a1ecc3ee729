// hilbert.cpp — layout, embedding, basic observables
#include "dissq/hilbert.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

namespace dissq::core {

const char* level_name(int level) {
    switch (level) {
        case Down: return "down";
        case Up: return "up";
        case Aux: return "aux";
        case Leak: return "leak";
    }
    throw std::invalid_argument("unknown level index");
}

HilbertLayout build_layout(int n_max) {
    if (n_max < 1) throw std::invalid_argument("build_layout: n_max must be >= 1");
    HilbertLayout l;
    l.n_max = n_max;
    l.n_fock = n_max + 1;
    l.total_dim = kInternal * l.n_fock;
    return l;
}

static SpMat to_sparse(const Mat& a) {
    SpMat s = a.sparseView(1.0, 0.0);
    s.makeCompressed();
    return s;
}

static SpMat kron(const SpMat& a, const SpMat& b) {
    std::vector<Eigen::Triplet<cplx>> t;
    t.reserve(a.nonZeros() * b.nonZeros());
    for (int i = 0; i < a.outerSize(); ++i)
        for (SpMat::InnerIterator ia(a, i); ia; ++ia)
            for (int j = 0; j < b.outerSize(); ++j)
                for (SpMat::InnerIterator ib(b, j); ib; ++ib)
                    t.emplace_back(ia.row() * b.rows() + ib.row(), ia.col() * b.cols() + ib.col(),
                                   ia.value() * ib.value());
    SpMat out(a.rows() * b.rows(), a.cols() * b.cols());
    out.setFromTriplets(t.begin(), t.end());
    return out;
}

static SpMat eye(int n) {
    SpMat s(n, n);
    s.setIdentity();
    return s;
}

OperatorMatrix embed(const Mat& local_op, Site site, const HilbertLayout& layout) {
    int want = site == Site::Motion ? layout.n_fock : kLevels;
    if (local_op.rows() != want || local_op.cols() != want)
        throw std::invalid_argument("embed: local operator dimension mismatch");
    SpMat op = to_sparse(local_op);
    SpMat full;
    switch (site) {
        case Site::Ion1: full = kron(kron(op, eye(kLevels)), eye(layout.n_fock)); break;
        case Site::Ion2: full = kron(kron(eye(kLevels), op), eye(layout.n_fock)); break;
        case Site::Motion: full = kron(eye(kInternal), op); break;
    }
    OperatorMatrix out;
    out.m = std::move(full);
    out.m.makeCompressed();
    out.hermitian = (local_op - local_op.adjoint()).cwiseAbs().maxCoeff() < 1e-12;
    return out;
}

Mat local_ladder(int n_fock) {
    Mat a = Mat::Zero(n_fock, n_fock);
    for (int n = 1; n < n_fock; ++n) a(n - 1, n) = std::sqrt(double(n));
    return a;
}

OperatorMatrix ladder(const HilbertLayout& layout) {
    return embed(local_ladder(layout.n_fock), Site::Motion, layout);
}

OperatorMatrix number_op(const HilbertLayout& layout) {
    Mat a = local_ladder(layout.n_fock);
    return embed(a.adjoint() * a, Site::Motion, layout);
}

Mat transition(int to, int from) {
    Mat m = Mat::Zero(kLevels, kLevels);
    m(to, from) = 1.0;
    return m;
}

PureState basis_state(const HilbertLayout& layout, int s1, int s2, int n, std::string label) {
    if (n < 0 || n > layout.n_max) throw std::out_of_range("basis_state: Fock index outside truncation");
    PureState p;
    p.amplitudes = Vec::Zero(layout.total_dim);
    p.amplitudes(layout.index(s1, s2, n)) = 1.0;
    p.label = std::move(label);
    return p;
}

PureState singlet(const HilbertLayout& layout, int n) {
    PureState p;
    p.amplitudes = Vec::Zero(layout.total_dim);
    p.amplitudes(layout.index(Up, Down, n)) = M_SQRT1_2;
    p.amplitudes(layout.index(Down, Up, n)) = -M_SQRT1_2;
    p.label = "S," + std::to_string(n);
    return p;
}

PureState triplet0(const HilbertLayout& layout, int n) {
    PureState p;
    p.amplitudes = Vec::Zero(layout.total_dim);
    p.amplitudes(layout.index(Up, Down, n)) = M_SQRT1_2;
    p.amplitudes(layout.index(Down, Up, n)) = M_SQRT1_2;
    p.label = "T," + std::to_string(n);
    return p;
}

DensityMatrix projector(const PureState& psi) { return psi.amplitudes * psi.amplitudes.adjoint(); }

double fidelity(const DensityMatrix& rho, const PureState& target) {
    if (rho.rows() != target.amplitudes.size() || rho.cols() != rho.rows())
        throw std::invalid_argument("fidelity: dimension mismatch");
    cplx f = target.amplitudes.dot(rho * target.amplitudes);
    return f.real();
}

double mean_phonon(const DensityMatrix& rho, const HilbertLayout& layout) {
    double s = 0;
    for (int i = 0; i < layout.total_dim; ++i) s += layout.fock(i) * rho(i, i).real();
    return s;
}

double fock_tail(const DensityMatrix& rho, const HilbertLayout& layout, int n_lo) {
    double s = 0;
    for (int i = 0; i < layout.total_dim; ++i)
        if (layout.fock(i) >= n_lo) s += rho(i, i).real();
    return s;
}

Mat internal_marginal(const DensityMatrix& rho, const HilbertLayout& layout) {
    const int N = layout.n_fock;
    Mat out(kInternal, kInternal);
    for (int a = 0; a < kInternal; ++a)
        for (int b = 0; b < kInternal; ++b) out(a, b) = rho.block(a * N, b * N, N, N).trace();
    return out;
}

Vec fock_distribution(const DensityMatrix& rho, const HilbertLayout& layout) {
    Vec p = Vec::Zero(layout.n_fock);
    for (int i = 0; i < layout.total_dim; ++i) p(layout.fock(i)) += rho(i, i);
    return p;
}

StateChecks check_state(const DensityMatrix& rho, bool with_spectrum) {
    StateChecks c;
    c.trace_error = std::abs(rho.trace() - cplx(1.0));
    c.hermiticity = (rho - rho.adjoint()).cwiseAbs().maxCoeff();
    if (with_spectrum) {
        Mat h = 0.5 * (rho + rho.adjoint());
        Eigen::SelfAdjointEigenSolver<Mat> es(h, Eigen::EigenvaluesOnly);
        c.min_eigenvalue = es.eigenvalues().minCoeff();
    }
    return c;
}

}  // namespace dissq::core
