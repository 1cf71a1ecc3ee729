// engine.cpp — generator assembly, RHS, RK4 / Dormand-Prince integration
#include "dissq/engine.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>
#include <stdexcept>
#include <tuple>

namespace dissq::engine {

using core::kInternal;

namespace {

Mat embed16(const Mat& m, int ion) {
    Mat out = Mat::Zero(kInternal, kInternal);
    for (int a = 0; a < core::kLevels; ++a)
        for (int b = 0; b < core::kLevels; ++b) {
            const cplx v = m(a, b);
            if (v == cplx(0.0)) continue;
            for (int s = 0; s < core::kLevels; ++s) {
                if (ion == 0) out(a * 4 + s, b * 4 + s) += v;
                else out(s * 4 + a, s * 4 + b) += v;
            }
        }
    return out;
}

}  // namespace

Generator::Generator(const core::HilbertLayout& layout, const core::OperatorMatrix& H,
                     const dissipation::ChannelSet& channels)
    : layout_(layout) {
    const int d = layout.total_dim, N = layout.n_fock;
    if (H.dim() != d) throw std::invalid_argument("Generator: Hamiltonian dimension mismatch");

    Mat mm16 = Mat::Zero(kInternal, kInternal);
    // groups in order of first appearance so the summation order does not depend on heap addresses
    std::vector<std::pair<std::shared_ptr<const dissipation::RecoilMap>, std::map<std::tuple<int, int, int, int>, cplx>>> acc;
    std::map<const dissipation::RecoilMap*, size_t> slot;
    for (const auto& t : channels.terms) {
        if (!t.map || t.map->n_fock() != N) throw std::invalid_argument("Generator: recoil map size mismatch");
        const Mat M = embed16(t.m, t.ion);
        mm16 += M.adjoint() * M;
        auto [it, fresh] = slot.emplace(t.map.get(), acc.size());
        if (fresh) acc.push_back({t.map, {}});
        auto& tab = acc[it->second].second;
        for (int a = 0; a < kInternal; ++a)
            for (int c = 0; c < kInternal; ++c) {
                if (M(a, c) == cplx(0.0)) continue;
                for (int b = 0; b < kInternal; ++b)
                    for (int c2 = 0; c2 < kInternal; ++c2) {
                        if (M(b, c2) == cplx(0.0)) continue;
                        tab[{a, b, c, c2}] += M(a, c) * std::conj(M(b, c2));
                    }
            }
    }
    for (auto& [map, tab] : acc) {
        Group g;
        g.map = map;
        std::map<std::pair<int, int>, int> src_index;
        for (auto& [key, coef] : tab) {
            if (coef == cplx(0.0)) continue;
            auto [a, b, c, c2] = key;
            auto sk = std::make_pair(c, c2);
            auto it = src_index.find(sk);
            if (it == src_index.end()) {
                it = src_index.emplace(sk, int(g.sources.size())).first;
                g.sources.push_back(sk);
            }
            g.transfers.push_back({a, b, it->second, coef});
        }
        groups_.push_back(std::move(g));
    }

    std::vector<Eigen::Triplet<cplx>> trip;
    for (int a = 0; a < kInternal; ++a)
        for (int b = 0; b < kInternal; ++b) {
            if (mm16(a, b) == cplx(0.0)) continue;
            for (int n = 0; n < N; ++n) trip.emplace_back(a * N + n, b * N + n, cplx(0, -0.5) * mm16(a, b));
        }
    SpMat damp(d, d);
    damp.setFromTriplets(trip.begin(), trip.end());
    h_eff_ = H.m + damp;
    h_eff_.prune(cplx(0.0), 0.0);
    h_eff_.makeCompressed();
    h_eff_adj_ = SpMat(h_eff_.adjoint());
    h_eff_adj_.makeCompressed();
}

void Generator::rhs(const Mat& rho, Mat& out) const {
    const int N = layout_.n_fock;
    if (rho.rows() != layout_.total_dim || rho.cols() != layout_.total_dim)
        throw std::invalid_argument("lindblad_rhs: shape mismatch");
    out.noalias() = cplx(0, -1) * (h_eff_ * rho);
    out.noalias() += cplx(0, 1) * (rho * h_eff_adj_);
    Mat X, Y;
    for (const auto& g : groups_) {
        const int P = int(g.sources.size());
        for (int dd = -(N - 1); dd <= N - 1; ++dd) {
            const int len = N - std::abs(dd), r0 = std::max(dd, 0), c0 = std::max(-dd, 0);
            X.resize(len, P);
            for (int p = 0; p < P; ++p) {
                const int R = g.sources[p].first * N + r0, C = g.sources[p].second * N + c0;
                for (int t = 0; t < len; ++t) X(t, p) = rho(R + t, C + t);
            }
            Y.noalias() = g.map->block(dd) * X;
            for (const auto& tr : g.transfers) {
                const int R = tr.a * N + r0, C = tr.b * N + c0;
                for (int t = 0; t < len; ++t) out(R + t, C + t) += tr.coef * Y(t, tr.src);
            }
        }
    }
}

Mat Generator::rhs(const Mat& rho) const {
    Mat out(rho.rows(), rho.cols());
    rhs(rho, out);
    return out;
}

Eigen::SparseMatrix<cplx> Generator::liouvillian() const {
    const int d = layout_.total_dim, N = layout_.n_fock;
    const long D = long(d) * d;
    std::vector<Eigen::Triplet<cplx, long>> t;
    t.reserve(size_t(h_eff_.nonZeros()) * d * 2);
    for (int i = 0; i < h_eff_.outerSize(); ++i)
        for (SpMat::InnerIterator it(h_eff_, i); it; ++it) {
            const long r = it.row(), k = it.col();
            const cplx h = it.value();
            for (long j = 0; j < d; ++j) {
                t.emplace_back(r * d + j, k * d + j, cplx(0, -1) * h);
                // rho H^dag: row (j, r), col (j, k), value i conj(H(r, k))
                t.emplace_back(j * d + r, j * d + k, cplx(0, 1) * std::conj(h));
            }
        }
    for (const auto& g : groups_) {
        for (int dd = -(N - 1); dd <= N - 1; ++dd) {
            const int len = N - std::abs(dd), r0 = std::max(dd, 0), c0 = std::max(-dd, 0);
            const Mat& S = g.map->block(dd);
            for (const auto& tr : g.transfers) {
                const long A = tr.a * N + r0, B = tr.b * N + c0;
                const long C = g.sources[tr.src].first * N + r0, C2 = g.sources[tr.src].second * N + c0;
                for (int t2 = 0; t2 < len; ++t2)
                    for (int t1 = 0; t1 < len; ++t1) {
                        const cplx v = tr.coef * S(t2, t1);
                        if (v == cplx(0.0)) continue;
                        t.emplace_back((A + t2) * d + (B + t2), (C + t1) * d + (C2 + t1), v);
                    }
            }
        }
    }
    Eigen::SparseMatrix<cplx> L(D, D);
    L.setFromTriplets(t.begin(), t.end());
    L.makeCompressed();
    return L;
}

Mat lindblad_rhs(const Mat& rho, const core::OperatorMatrix& H, const dissipation::ChannelSet& channels,
                 const core::HilbertLayout& layout) {
    Generator g(layout, H, channels);
    return g.rhs(rho);
}

void EvolutionConfig::validate() const {
    if (!(t_final > 0)) throw std::invalid_argument("EvolutionConfig: t_final must be > 0");
    if (dt_max < 0 || dt_max > t_final) throw std::invalid_argument("EvolutionConfig: need 0 < dt_max <= t_final");
    if (integrator == Integrator::RK4 && !(dt_max > 0))
        throw std::invalid_argument("EvolutionConfig: fixed-step RK4 needs dt_max");
    if (!(abs_tol > 0 && abs_tol <= 1e-2) || !(rel_tol > 0 && rel_tol <= 1e-2))
        throw std::invalid_argument("EvolutionConfig: tolerances must lie in (0, 1e-2]");
    for (double s : sample_times)
        if (s < 0 || s > t_final * (1 + 1e-12)) throw std::invalid_argument("EvolutionConfig: sample time outside [0, t_final]");
}

BasisPops basis_populations(const core::DensityMatrix& rho, const core::HilbertLayout& l) {
    BasisPops p{0, 0, 0, 0, 0};
    for (int n = 0; n < l.n_fock; ++n) {
        const int dd = l.index(core::Down, core::Down, n), uu = l.index(core::Up, core::Up, n);
        const int ud = l.index(core::Up, core::Down, n), du = l.index(core::Down, core::Up, n);
        p[0] += rho(dd, dd).real();
        p[1] += rho(uu, uu).real();
        const double diag = (rho(ud, ud) + rho(du, du)).real();
        const double off = rho(ud, du).real();
        p[2] += 0.5 * diag - off;
        p[3] += 0.5 * diag + off;
    }
    for (int i = 0; i < l.total_dim; ++i)
        if (l.ion1(i) == core::Leak || l.ion2(i) == core::Leak) p[4] += rho(i, i).real();
    return p;
}

std::vector<double> uniform_times(double t_final, int n) {
    std::vector<double> t(n + 1);
    for (int i = 0; i <= n; ++i) t[i] = t_final * i / n;
    return t;
}

core::DensityMatrix reset_motion(const core::DensityMatrix& rho, const core::HilbertLayout& l) {
    const Mat m = core::internal_marginal(rho, l);
    core::DensityMatrix out = core::DensityMatrix::Zero(l.total_dim, l.total_dim);
    for (int a = 0; a < kInternal; ++a)
        for (int b = 0; b < kInternal; ++b) out(a * l.n_fock, b * l.n_fock) = m(a, b);
    return out;
}

namespace {

double rate_scale(const Generator& g) {
    // crude bound on the generator norm: max row sum of |H_eff| times 2 plus jump weights
    const SpMat& h = g.h_eff();
    double mx = 0;
    for (int i = 0; i < h.outerSize(); ++i) {
        double s = 0;
        for (SpMat::InnerIterator it(h, i); it; ++it) s += std::abs(it.value());
        mx = std::max(mx, s);
    }
    return 2 * mx + 1e-300;
}

struct Recorder {
    const Generator& gen;
    const EvolutionConfig& cfg;
    const core::PureState& target;
    Trajectory& tr;
    int count = 0;

    void record(double t, const Mat& rho) {
        const auto& l = gen.layout();
        tr.times.push_back(t);
        tr.fidelities.push_back(core::fidelity(rho, target));
        tr.mean_phonons.push_back(core::mean_phonon(rho, l));
        tr.populations.push_back(basis_populations(rho, l));
        const bool spec = cfg.positivity_every > 0 && count % cfg.positivity_every == 0;
        const auto c = core::check_state(rho, spec);
        auto& dg = tr.diag;
        dg.max_trace_error = std::max(dg.max_trace_error, c.trace_error);
        dg.max_hermiticity = std::max(dg.max_hermiticity, c.hermiticity);
        if (spec) {
            dg.min_eigenvalue = std::min(dg.min_eigenvalue, c.min_eigenvalue);
            if (c.min_eigenvalue < cfg.positivity_abort) {
                std::ostringstream os;
                os << "evolve: positivity violation, min eigenvalue " << c.min_eigenvalue << " at t=" << t
                   << " s, trace error " << c.trace_error;
                throw std::runtime_error(os.str());
            }
        }
        const double edge = core::fock_tail(rho, l, std::max(0, l.n_max - 2));
        const double top = core::fock_tail(rho, l, l.n_max);
        dg.max_edge_population = std::max(dg.max_edge_population, edge);
        dg.max_top_population = std::max(dg.max_top_population, top);
        if (edge >= 1e-4) dg.truncation_flag = true;
        if (cfg.observer) cfg.observer(t, rho);
        ++count;
    }
};

// Dormand-Prince 5(4) tableau
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                 a65 = -5103.0 / 18656;
constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784, b6 = 11.0 / 84;
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200, e6 = 22.0 / 525,
                 e7 = -1.0 / 40;

}  // namespace

Trajectory evolve(const core::DensityMatrix& rho0, const Generator& gen, const EvolutionConfig& cfg,
                  const core::PureState& target) {
    cfg.validate();
    const auto& l = gen.layout();
    const int d = l.total_dim;
    if (rho0.rows() != d || rho0.cols() != d) throw std::invalid_argument("evolve: rho0 dimension mismatch");

    std::vector<double> samples = cfg.sample_times;
    if (samples.empty()) samples = {cfg.t_final};
    std::sort(samples.begin(), samples.end());

    Trajectory tr;
    Recorder rec{gen, cfg, target, tr};
    Mat y = 0.5 * (rho0 + rho0.adjoint());
    double t = 0;
    size_t si = 0;
    double next_reset = cfg.reset_period > 0 ? cfg.reset_period : INFINITY;
    const double tiny = 1e-12 * cfg.t_final;

    auto record_due = [&] {
        while (si < samples.size() && samples[si] <= t + tiny) rec.record(samples[si++], y);
    };
    auto do_reset = [&] {
        if (t + tiny >= next_reset) {
            y = reset_motion(y, l);
            next_reset += cfg.reset_period;
            return true;
        }
        return false;
    };
    auto next_event = [&] {
        double e = cfg.t_final;
        if (si < samples.size()) e = std::min(e, samples[si]);
        return std::min(e, next_reset);
    };

    record_due();
    if (cfg.integrator == Integrator::RK4) {
        Mat k1(d, d), k2(d, d), k3(d, d), k4(d, d), tmp(d, d);
        while (t < cfg.t_final - tiny) {
            const double h = std::min(cfg.dt_max, next_event() - t);
            gen.rhs(y, k1);
            tmp = y + (0.5 * h) * k1;
            gen.rhs(tmp, k2);
            tmp = y + (0.5 * h) * k2;
            gen.rhs(tmp, k3);
            tmp = y + h * k3;
            gen.rhs(tmp, k4);
            y += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
            y = 0.5 * (y + y.adjoint()).eval();
            t += h;
            tr.diag.steps++;
            tr.diag.rhs_calls += 4;
            if (std::abs(next_event() - t) <= tiny) t = next_event();
            record_due();
            do_reset();
        }
    } else {
        Mat k1(d, d), k2(d, d), k3(d, d), k4(d, d), k5(d, d), k6(d, d), k7(d, d), tmp(d, d), ynew(d, d);
        double h = cfg.dt_init > 0 ? cfg.dt_init : 0.05 / rate_scale(gen);
        const double hmax = cfg.dt_max > 0 ? cfg.dt_max : cfg.t_final;
        gen.rhs(y, k1);
        tr.diag.rhs_calls++;
        while (t < cfg.t_final - tiny) {
            const double ev = next_event();
            bool hit = false;
            double hs = std::min(h, hmax);
            if (t + hs >= ev - tiny) hs = ev - t, hit = true;
            if (hs < 1e-14 * std::max(cfg.t_final, 1e-300))
                throw std::runtime_error("evolve: step-size underflow at t=" + std::to_string(t));

            tmp = y + (hs * a21) * k1;
            gen.rhs(tmp, k2);
            tmp = y + hs * (a31 * k1 + a32 * k2);
            gen.rhs(tmp, k3);
            tmp = y + hs * (a41 * k1 + a42 * k2 + a43 * k3);
            gen.rhs(tmp, k4);
            tmp = y + hs * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4);
            gen.rhs(tmp, k5);
            tmp = y + hs * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5);
            gen.rhs(tmp, k6);
            ynew = y + hs * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
            gen.rhs(ynew, k7);
            tr.diag.rhs_calls += 6;
            tmp = hs * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);

            double err = 0;
            for (Eigen::Index j = 0; j < d; ++j)
                for (Eigen::Index i = 0; i < d; ++i) {
                    const double sc = cfg.abs_tol + cfg.rel_tol * std::max(std::abs(y(i, j)), std::abs(ynew(i, j)));
                    err = std::max(err, std::abs(tmp(i, j)) / sc);
                }
            if (!std::isfinite(err)) throw std::runtime_error("evolve: non-finite error estimate");
            if (err <= 1.0) {
                t = hit ? ev : t + hs;
                y = 0.5 * (ynew + ynew.adjoint());
                k1 = 0.5 * (k7 + k7.adjoint());
                tr.diag.steps++;
                record_due();
                if (do_reset()) {
                    gen.rhs(y, k1);
                    tr.diag.rhs_calls++;
                }
                const double fac = err == 0 ? 5.0 : std::clamp(0.9 * std::pow(err, -0.2), 0.2, 5.0);
                if (!hit || hs >= h) h = hs * fac;
            } else {
                tr.diag.rejected++;
                h = hs * std::max(0.2, 0.9 * std::pow(err, -0.2));
            }
        }
    }
    record_due();
    tr.final_state = y;
    return tr;
}

Trajectory evolve(const core::DensityMatrix& rho0, const core::OperatorMatrix& H,
                  const dissipation::ChannelSet& channels, const core::HilbertLayout& layout,
                  const EvolutionConfig& cfg) {
    Generator gen(layout, H, channels);
    return evolve(rho0, gen, cfg, core::singlet(layout, 0));
}

double plateau_fidelity(const Trajectory& traj, double t_lo, double t_hi) {
    double s = 0;
    int n = 0;
    for (size_t i = 0; i < traj.times.size(); ++i)
        if (traj.times[i] >= t_lo - 1e-15 && traj.times[i] <= t_hi + 1e-15) s += traj.fidelities[i], ++n;
    if (n == 0) throw std::invalid_argument("plateau_fidelity: empty window");
    return s / n;
}

double peak_fidelity(const Trajectory& traj) {
    if (traj.fidelities.empty()) throw std::invalid_argument("peak_fidelity: empty trajectory");
    return *std::max_element(traj.fidelities.begin(), traj.fidelities.end());
}

Mat dense_superoperator(const Generator& gen) {
    const int d = gen.dim();
    if (d > 64) throw std::invalid_argument("dense_superoperator: only for dimension <= 64");
    return Mat(gen.liouvillian());
}

Mat superoperator_evolve(const Mat& L, const Mat& rho0, double t) {
    const Eigen::Index d = rho0.rows();
    Vec v(d * d);
    for (Eigen::Index i = 0; i < d; ++i)
        for (Eigen::Index j = 0; j < d; ++j) v(i * d + j) = rho0(i, j);
    double norm = 0;
    for (Eigen::Index j = 0; j < L.cols(); ++j) norm = std::max(norm, L.col(j).cwiseAbs().sum());
    const int steps = std::max(1, int(std::ceil(norm * std::abs(t) / 0.5)));
    const double h = t / steps;
    for (int s = 0; s < steps; ++s) {
        Vec term = v, sum = v;
        for (int k = 1; k < 60; ++k) {
            term = (h / k) * (L * term);
            sum += term;
            if (term.norm() < 1e-18 * sum.norm()) break;
        }
        v = sum;
    }
    Mat out(d, d);
    for (Eigen::Index i = 0; i < d; ++i)
        for (Eigen::Index j = 0; j < d; ++j) out(i, j) = v(i * d + j);
    return out;
}

}  // namespace dissq::engine
