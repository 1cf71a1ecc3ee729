// readout.cpp — analysis rotations, count synthesis, mixture MLE, phi calibration, count records
#include "dissq/readout.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <map>
#include <ostream>
#include <random>
#include <sstream>
#include <stdexcept>

namespace dissq::readout {

Condition parse_condition(const std::string& tag) {
    if (tag == "I" || tag == "identity") return Condition::Identity;
    if (tag == "pi") return Condition::Pi;
    if (tag == "pi/2-random" || tag == "half_pi_random") return Condition::HalfPiRandom;
    throw std::invalid_argument("unknown analysis condition '" + tag + "'");
}

std::string condition_name(Condition c) {
    switch (c) {
        case Condition::Identity: return "I";
        case Condition::Pi: return "pi";
        case Condition::HalfPiRandom: return "pi/2-random";
    }
    return "?";
}

namespace {

// single-ion rotation by theta about the equatorial axis at angle alpha; aux and leak untouched
Mat rotation4(double theta, double alpha) {
    Mat r = Mat::Identity(4, 4);
    const double c = std::cos(theta / 2), s = std::sin(theta / 2);
    r(core::Down, core::Down) = c;
    r(core::Up, core::Up) = c;
    r(core::Up, core::Down) = cplx(0, -s) * std::polar(1.0, alpha);
    r(core::Down, core::Up) = cplx(0, -s) * std::polar(1.0, -alpha);
    return r;
}

Mat kron(const Mat& a, const Mat& b) {
    Mat out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < a.cols(); ++j) out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    return out;
}

BrightPops bright_counts(const Mat& rho16) {
    BrightPops p{0, 0, 0};
    for (int s1 = 0; s1 < 4; ++s1)
        for (int s2 = 0; s2 < 4; ++s2) {
            const int n = (s1 == core::Down) + (s2 == core::Down);
            p[n] += rho16(s1 * 4 + s2, s1 * 4 + s2).real();
        }
    return p;
}

std::mt19937_64 seeded(std::uint64_t seed, std::uint64_t stream) {
    std::seed_seq sq{std::uint32_t(seed), std::uint32_t(seed >> 32), std::uint32_t(stream), std::uint32_t(stream >> 32)};
    return std::mt19937_64(sq);
}

double log_poisson(int k, double mean) {
    if (mean == 0) return k == 0 ? 0.0 : -INFINITY;
    return k * std::log(mean) - mean - std::lgamma(k + 1.0);
}

}  // namespace

BrightPops analysis_map_internal(const Mat& rho16, Condition c, int n_phases) {
    if (rho16.rows() != 16 || rho16.cols() != 16) throw std::invalid_argument("analysis_map: need a 16x16 internal state");
    switch (c) {
        case Condition::Identity: return bright_counts(rho16);
        case Condition::Pi: {
            const Mat U = kron(rotation4(M_PI, 0), rotation4(M_PI, 0));
            return bright_counts(U * rho16 * U.adjoint());
        }
        case Condition::HalfPiRandom: {
            if (n_phases < 5) throw std::invalid_argument("analysis_map: need at least 5 phases");
            BrightPops acc{0, 0, 0};
            for (int k = 0; k < n_phases; ++k) {
                const Mat r = rotation4(M_PI / 2, 2 * M_PI * k / n_phases);
                const Mat U = kron(r, r);
                const auto p = bright_counts(U * rho16 * U.adjoint());
                for (int n = 0; n < 3; ++n) acc[n] += p[n] / n_phases;
            }
            return acc;
        }
    }
    throw std::invalid_argument("analysis_map: unknown condition");
}

BrightPops analysis_map(const core::DensityMatrix& rho, const core::HilbertLayout& layout, Condition c, int n_phases) {
    return analysis_map_internal(core::internal_marginal(rho, layout), c, n_phases);
}

DerivedPops basis_populations(const std::array<BrightPops, 3>& p) {
    const auto& I = p[int(Condition::Identity)];
    const auto& P = p[int(Condition::Pi)];
    const auto& H = p[int(Condition::HalfPiRandom)];
    DerivedPops d;
    d.p_dd = I[2];
    d.p_uu = P[2];
    d.x = 1 - 2 * H[0] - (I[2] + P[2]) / 2;
    d.p_t = 2 * H[2] - (I[2] + P[2]) / 2;
    return d;
}

DetectionModel DetectionModel::from_single(double c0, double c1) {
    DetectionModel m{c0, c1, 2 * (c1 - c0) + c0};
    m.validate();
    return m;
}

void DetectionModel::validate() const {
    if (!(c0 >= 0)) throw std::invalid_argument("DetectionModel: c0 must be >= 0");
    if (!(c0 < c1 && c1 < c2)) throw std::invalid_argument("DetectionModel: need c0 < c1 < c2");
}

std::vector<int> synthesize_counts(const BrightPops& p, const DetectionModel& model, int shots, std::uint64_t seed) {
    model.validate();
    if (shots < 1) throw std::invalid_argument("synthesize_counts: shots must be >= 1");
    for (double v : p)
        if (!(v >= -1e-12)) throw std::invalid_argument("synthesize_counts: negative probability");
    if (std::abs(p[0] + p[1] + p[2] - 1) > 1e-9) throw std::invalid_argument("synthesize_counts: probabilities must sum to 1");
    auto rng = seeded(seed, 0);
    std::discrete_distribution<int> cat({std::max(p[0], 0.0), std::max(p[1], 0.0), std::max(p[2], 0.0)});
    std::array<std::poisson_distribution<int>, 3> pois{std::poisson_distribution<int>(std::max(model.c0, 1e-300)),
                                                        std::poisson_distribution<int>(model.c1),
                                                        std::poisson_distribution<int>(model.c2)};
    std::vector<int> out(shots);
    for (int i = 0; i < shots; ++i) {
        const int n = cat(rng);
        out[i] = (n == 0 && model.c0 == 0) ? 0 : pois[n](rng);
    }
    return out;
}

MleResult mle_populations(const std::vector<int>& counts, const DetectionModel& model, const MleOptions& opt) {
    model.validate();
    if (counts.empty()) throw std::invalid_argument("mle_populations: no counts");
    std::map<int, double> hist;
    for (int c : counts) {
        if (c < 0) throw std::invalid_argument("mle_populations: negative count");
        hist[c] += 1.0;
    }
    const double N = double(counts.size());
    // per distinct count: component likelihoods scaled by their maximum
    std::vector<std::array<double, 3>> L;
    std::vector<double> mult, shift;
    for (const auto& [k, m] : hist) {
        std::array<double, 3> lp;
        for (int n = 0; n < 3; ++n) lp[n] = log_poisson(k, model.mean(n));
        const double mx = *std::max_element(lp.begin(), lp.end());
        std::array<double, 3> l;
        for (int n = 0; n < 3; ++n) l[n] = std::exp(lp[n] - mx);
        L.push_back(l);
        mult.push_back(m);
        shift.push_back(mx);
    }
    const size_t K = L.size();

    std::array<double, 3> p{1.0 / 3, 1.0 / 3, 1.0 / 3};
    auto loglik = [&](const std::array<double, 3>& q) {
        double s = 0;
        for (size_t k = 0; k < K; ++k) s += mult[k] * (std::log(q[0] * L[k][0] + q[1] * L[k][1] + q[2] * L[k][2]) + shift[k]);
        return s;
    };

    MleResult res;
    // EM warm start
    for (int it = 0; it < 30; ++it) {
        std::array<double, 3> np{0, 0, 0};
        for (size_t k = 0; k < K; ++k) {
            const double S = p[0] * L[k][0] + p[1] * L[k][1] + p[2] * L[k][2];
            for (int n = 0; n < 3; ++n) np[n] += mult[k] * p[n] * L[k][n] / S;
        }
        double r = 0;
        for (int n = 0; n < 3; ++n) np[n] /= N, r = std::max(r, std::abs(np[n] - p[n]));
        p = np;
        ++res.iterations;
        if (r < opt.tol) {
            res.converged = true;
            break;
        }
    }

    // active-set Newton on the simplex; the log-likelihood is concave
    double ll = loglik(p);
    for (int it = 0; it < std::min(opt.max_iter, 500) && !res.converged; ++it) {
        std::array<double, 3> g{0, 0, 0};
        Eigen::Matrix3d H = Eigen::Matrix3d::Zero();
        for (size_t k = 0; k < K; ++k) {
            const double S = p[0] * L[k][0] + p[1] * L[k][1] + p[2] * L[k][2];
            for (int a = 0; a < 3; ++a) {
                g[a] += mult[k] * L[k][a] / S;
                for (int b = 0; b < 3; ++b) H(a, b) -= mult[k] * L[k][a] * L[k][b] / (S * S);
            }
        }
        // stationarity on the simplex: g = N on the support, g <= N on the boundary
        std::vector<int> fr;
        double kkt = 0;
        for (int n = 0; n < 3; ++n) {
            if (p[n] > 0 || g[n] > N) fr.push_back(n);
            if (p[n] > 0) kkt = std::max(kkt, std::abs(g[n] / N - 1));
            else kkt = std::max(kkt, std::max(0.0, g[n] / N - 1));
        }
        if (kkt < 1e-10) {
            res.converged = true;
            break;
        }
        std::array<double, 3> d{0, 0, 0};
        if (fr.size() == 1) {
            d[fr[0]] = 1 - p[fr[0]];
            for (int n = 0; n < 3; ++n)
                if (n != fr[0]) d[n] = -p[n];
        } else {
            const int f = int(fr.size());
            Eigen::MatrixXd A = Eigen::MatrixXd::Zero(f + 1, f + 1);
            Eigen::VectorXd rhs = Eigen::VectorXd::Zero(f + 1);
            for (int i = 0; i < f; ++i) {
                for (int j = 0; j < f; ++j) A(i, j) = H(fr[i], fr[j]);
                A(i, f) = A(f, i) = 1;
                rhs(i) = -g[fr[i]];
            }
            const Eigen::VectorXd sol = A.fullPivLu().solve(rhs);
            for (int i = 0; i < f; ++i) d[fr[i]] = sol(i);
        }
        // largest feasible step, then backtrack until the likelihood does not decrease
        double tmax = 1;
        for (int n = 0; n < 3; ++n)
            if (d[n] < 0) tmax = std::min(tmax, -p[n] / d[n]);
        double t = tmax;
        std::array<double, 3> q{};
        double llq = -INFINITY;
        for (int bt = 0; bt < 60; ++bt) {
            for (int n = 0; n < 3; ++n) {
                q[n] = p[n] + t * d[n];
                if (q[n] < 1e-15) q[n] = 0;
            }
            const double s = q[0] + q[1] + q[2];
            for (auto& v : q) v /= s;
            llq = loglik(q);
            if (llq >= ll - 1e-12 * std::abs(ll)) break;
            t *= 0.5;
        }
        double step = 0;
        for (int n = 0; n < 3; ++n) step = std::max(step, std::abs(q[n] - p[n]));
        p = q;
        ll = llq;
        ++res.iterations;
        if (step < opt.tol * 1e-3) {
            res.converged = true;
            break;
        }
    }
    res.p = p;
    res.log_likelihood = loglik(p);
    return res;
}

DerivedPops estimate_populations(const ConditionCounts& counts, const DetectionModel& model, const MleOptions& opt) {
    std::array<BrightPops, 3> p;
    for (int c = 0; c < 3; ++c) p[c] = mle_populations(counts[c], model, opt).p;
    return basis_populations(p);
}

PhiCalPoint phi_calibration(double phi, int shots, std::uint64_t seed, int n_phases) {
    if (n_phases < 5) throw std::invalid_argument("phi_calibration: need at least 5 phases");
    auto rot = [](double theta, double beta) {
        Eigen::Matrix2cd r;
        const double c = std::cos(theta / 2), s = std::sin(theta / 2);
        r << c, cplx(0, -s) * std::polar(1.0, -beta), cplx(0, -s) * std::polar(1.0, beta), c;
        return r;
    };
    // basis (down, up) per ion; returns P(same)
    auto same = [&](double alpha, double Phi) {
        const Eigen::Matrix2cd mw = rot(M_PI / 2, alpha);
        const Eigen::Vector2cd a = rot(M_PI / 2, Phi) * mw.col(0);
        const Eigen::Vector2cd b = rot(M_PI / 2, Phi + phi) * mw.col(0);
        return std::norm(a(0)) * std::norm(b(0)) + std::norm(a(1)) * std::norm(b(1));
    };
    PhiCalPoint out;
    out.phi = phi;
    if (shots == 0) {
        double s = 0;
        for (int i = 0; i < n_phases; ++i)
            for (int j = 0; j < n_phases; ++j) s += same(2 * M_PI * i / n_phases, 2 * M_PI * j / n_phases);
        out.p_same = s / (double(n_phases) * n_phases);
    } else {
        if (shots < 0) throw std::invalid_argument("phi_calibration: shots must be >= 0");
        auto rng = seeded(seed, 0);
        std::uniform_real_distribution<double> u(0, 1);
        long hits = 0;
        for (int k = 0; k < shots; ++k) {
            const double ps = same(2 * M_PI * u(rng), 2 * M_PI * u(rng));
            if (u(rng) < ps) ++hits;
        }
        out.p_same = double(hits) / shots;
    }
    out.p_diff = 1 - out.p_same;
    return out;
}

std::vector<PhiCalPoint> phi_calibration_curve(const std::vector<double>& phis, int shots, std::uint64_t seed) {
    std::vector<PhiCalPoint> out;
    out.reserve(phis.size());
    for (size_t i = 0; i < phis.size(); ++i) out.push_back(phi_calibration(phis[i], shots, seed + i));
    return out;
}

void write_count_record(std::ostream& os, const CountRecord& rec) {
    os << "# dissq count record v1\n";
    os.precision(17);
    for (const auto& b : rec.blocks) {
        os << "block " << b.time_us << ' ' << condition_name(b.condition) << ' ' << b.counts.size() << '\n';
        for (int c : b.counts) os << c << '\n';
    }
}

CountRecord read_count_record(std::istream& is) {
    CountRecord rec;
    std::string line;
    int lineno = 0;
    auto fail = [&](const std::string& what) {
        throw std::runtime_error("count record line " + std::to_string(lineno) + ": " + what);
    };
    if (!std::getline(is, line)) fail("empty input");
    ++lineno;
    if (line != "# dissq count record v1") fail("missing header");
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#') continue;
        std::istringstream ss(line);
        std::string kw, cond;
        CountBlock b;
        long shots = -1;
        if (!(ss >> kw >> b.time_us >> cond >> shots) || kw != "block" || shots < 0) fail("expected 'block <time_us> <condition> <shots>'");
        try {
            b.condition = parse_condition(cond);
        } catch (const std::invalid_argument& e) {
            fail(e.what());
        }
        b.counts.reserve(size_t(shots));
        for (long i = 0; i < shots; ++i) {
            if (!std::getline(is, line)) fail("truncated block");
            ++lineno;
            std::size_t pos = 0;
            int v = 0;
            try {
                v = std::stoi(line, &pos);
            } catch (const std::exception&) {
                fail("expected an integer count");
            }
            if (pos != line.size() || v < 0) fail("expected a non-negative integer count");
            b.counts.push_back(v);
        }
        rec.blocks.push_back(std::move(b));
    }
    return rec;
}

}  // namespace dissq::readout
