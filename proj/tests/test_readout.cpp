// test_readout.cpp — analysis map, population algebra, counts, MLE, bootstrap, phi calibration
#include <doctest.h>

#include <algorithm>
#include <random>
#include <sstream>

#include "dissq/readout.hpp"

using namespace dissq;
using namespace dissq::readout;
using core::Aux;
using core::Down;
using core::Leak;
using core::Up;

namespace {
Mat pure16(const Vec& v) { return v * v.adjoint(); }

Vec ket(int s1, int s2) {
    Vec v = Vec::Zero(16);
    v(s1 * 4 + s2) = 1;
    return v;
}
Vec singlet16() { return (ket(Up, Down) - ket(Down, Up)) / std::sqrt(2.0); }
Vec triplet16() { return (ket(Up, Down) + ket(Down, Up)) / std::sqrt(2.0); }

std::array<BrightPops, 3> all_conditions(const Mat& r) {
    return {analysis_map_internal(r, Condition::Identity), analysis_map_internal(r, Condition::Pi),
            analysis_map_internal(r, Condition::HalfPiRandom)};
}

const DetectionModel kModel{0.3, 15.0, 30.0};

// log-likelihood maximized by brute force on a simplex grid
BrightPops grid_mle(const std::vector<int>& counts, const DetectionModel& m, int n) {
    auto ll = [&](double a, double b) {
        const double c = 1 - a - b;
        double s = 0;
        for (int k : counts) {
            double v = 0;
            const double q[3] = {a, b, c};
            for (int j = 0; j < 3; ++j) v += q[j] * std::exp(k * std::log(m.mean(j)) - m.mean(j) - std::lgamma(k + 1.0));
            s += std::log(v);
        }
        return s;
    };
    double best = -INFINITY, ba = 0, bb = 0;
    for (int i = 0; i <= n; ++i)
        for (int j = 0; i + j <= n; ++j) {
            const double v = ll(double(i) / n, double(j) / n);
            if (v > best) best = v, ba = double(i) / n, bb = double(j) / n;
        }
    return {ba, bb, 1 - ba - bb};
}
}  // namespace

TEST_CASE("analysis map") {
    const auto dd = all_conditions(pure16(ket(Down, Down)));
    CHECK(dd[0][2] == doctest::Approx(1.0));
    for (const auto& p : all_conditions(pure16(singlet16()))) {
        CHECK(p[1] == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(std::abs(p[0]) < 1e-12);
    }
    // |d^1_{1,0}(pi/2)|^2 = 1/2
    CHECK(analysis_map_internal(pure16(triplet16()), Condition::HalfPiRandom)[2] == doctest::Approx(0.5).epsilon(1e-12));
    CHECK_THROWS_AS(parse_condition("x"), std::invalid_argument);
    CHECK(parse_condition(condition_name(Condition::HalfPiRandom)) == Condition::HalfPiRandom);

    // probability conservation and phase-count convergence on random states
    std::mt19937_64 rng(2);
    std::normal_distribution<double> g;
    for (int t = 0; t < 10; ++t) {
        Mat a(16, 16);
        for (int i = 0; i < 16; ++i)
            for (int j = 0; j < 16; ++j) a(i, j) = cplx(g(rng), g(rng));
        Mat r = a * a.adjoint();
        r /= r.trace().real();
        for (auto c : {Condition::Identity, Condition::Pi, Condition::HalfPiRandom}) {
            const auto p = analysis_map_internal(r, c);
            CHECK(std::abs(p[0] + p[1] + p[2] - 1) < 1e-10);
        }
        const auto p32 = analysis_map_internal(r, Condition::HalfPiRandom, 32);
        const auto p64 = analysis_map_internal(r, Condition::HalfPiRandom, 64);
        for (int n = 0; n < 3; ++n) CHECK(std::abs(p32[n] - p64[n]) < 1e-10);
    }
    // full-space wrapper
    const auto l = core::build_layout(2);
    CHECK(analysis_map(core::projector(core::singlet(l, 1)), l, Condition::Pi)[1] == doctest::Approx(1.0));
}

TEST_CASE("population algebra") {
    const std::array<BrightPops, 3> s{{{0, 1, 0}, {0, 1, 0}, {0, 1, 0}}};
    auto d = basis_populations(s);
    CHECK(d.x == 1.0);
    CHECK(d.p_t == 0.0);
    d = basis_populations({{{0, 1, 0}, {0, 1, 0}, {0.5, 0, 0.5}}});
    CHECK(d.p_t == doctest::Approx(1.0));
    CHECK(d.x == doctest::Approx(0.0));
    d = basis_populations({{{0, 0, 1}, {1, 0, 0}, {0.25, 0.5, 0.25}}});
    CHECK(d.p_dd == 1.0);
    CHECK(d.x == doctest::Approx(0.0));
    // through the rotation oracle
    d = basis_populations(all_conditions(pure16(triplet16())));
    CHECK(d.p_t == doctest::Approx(1.0).epsilon(1e-12));
    d = basis_populations(all_conditions(pure16(ket(Down, Down))));
    CHECK(d.p_dd == doctest::Approx(1.0));
    CHECK(std::abs(d.x) < 1e-12);
}

TEST_CASE("X plus the leaked population equals P_S") {
    // leak on both ions reads dark in every condition
    for (double p : {0.01, 0.05, 0.2}) {
        const Mat r = (1 - p) * pure16(singlet16()) + p * pure16(ket(Leak, Leak));
        const auto d = basis_populations(all_conditions(r));
        CHECK(d.x + p == doctest::Approx(1 - p).epsilon(1e-12));
    }
    // aux on both ions behaves the same way
    for (double p : {0.02, 0.1}) {
        const Mat r = (1 - p) * pure16(singlet16()) + p * pure16(ket(Aux, Aux));
        const auto d = basis_populations(all_conditions(r));
        CHECK(d.x + p == doctest::Approx(1 - p).epsilon(1e-12));
    }
}

TEST_CASE("count synthesis") {
    auto c = synthesize_counts({1, 0, 0}, DetectionModel{0.0, 15, 30}, 1000, 3);
    CHECK(std::all_of(c.begin(), c.end(), [](int v) { return v == 0; }));
    c = synthesize_counts({0, 0, 1}, DetectionModel{0.3, 15, 30}, 100000, 4);
    double mean = 0;
    for (int v : c) mean += v;
    mean /= c.size();
    CHECK(std::abs(mean - 30) < 0.1);
    CHECK(synthesize_counts({0.2, 0.5, 0.3}, kModel, 500, 9) == synthesize_counts({0.2, 0.5, 0.3}, kModel, 500, 9));
    CHECK(synthesize_counts({0.2, 0.5, 0.3}, kModel, 500, 9) != synthesize_counts({0.2, 0.5, 0.3}, kModel, 500, 10));
    CHECK_THROWS_AS(synthesize_counts({0.5, 0.6, 0}, kModel, 10, 1), std::invalid_argument);
    CHECK(DetectionModel::from_single(0.3, 15).c2 == doctest::Approx(29.7));
    CHECK_THROWS_AS(DetectionModel::from_single(1, 1), std::invalid_argument);
}

TEST_CASE("maximum-likelihood populations") {
    const auto c = synthesize_counts({0.2, 0.5, 0.3}, kModel, 100000, 11);
    const auto r = mle_populations(c, kModel);
    CHECK(r.converged);
    for (int n = 0; n < 3; ++n) CHECK(std::abs(r.p[n] - std::array<double, 3>{0.2, 0.5, 0.3}[n]) < 0.01);
    CHECK(r.p[0] + r.p[1] + r.p[2] == doctest::Approx(1.0).epsilon(1e-12));

    const auto small = synthesize_counts({0.3, 0.4, 0.3}, kModel, 400, 12);
    const auto g = grid_mle(small, kModel, 400);
    const auto m = mle_populations(small, kModel);
    for (int n = 0; n < 3; ++n) CHECK(std::abs(m.p[n] - g[n]) < 1.5 / 400);

    auto perm = small;
    std::shuffle(perm.begin(), perm.end(), std::mt19937_64(1));
    const auto mp = mle_populations(perm, kModel);
    for (int n = 0; n < 3; ++n) CHECK(mp.p[n] == m.p[n]);

    const auto one = mle_populations(synthesize_counts({1, 0, 0}, DetectionModel{0.3, 15, 30}, 20000, 13), DetectionModel{0.3, 15, 30});
    CHECK(one.p[0] > 0.999);

    // perfectly distinguishable components: MLE is the empirical frequency
    const DetectionModel sep{0.0, 1000, 2000};
    const auto cs = synthesize_counts({0.25, 0.35, 0.4}, sep, 2000, 14);
    double f[3] = {0, 0, 0};
    for (int v : cs) f[v == 0 ? 0 : v < 1500 ? 1 : 2] += 1.0 / cs.size();
    const auto ms = mle_populations(cs, sep);
    for (int n = 0; n < 3; ++n) CHECK(ms.p[n] == doctest::Approx(f[n]).epsilon(1e-12));

    CHECK_THROWS_AS(mle_populations({}, kModel), std::invalid_argument);
    CHECK_THROWS_AS(mle_populations({1, 2}, DetectionModel{1, 1, 2}), std::invalid_argument);
}

TEST_CASE("bias-corrected interval") {
    const auto r = bootstrap_ci({{4, 4, 4, 4}}, [](const std::vector<std::vector<int>>& g) { return double(g[0][0]); },
                                {200, 0.95, 1, 1});
    CHECK(r.degenerate);
    CHECK(r.lo == 4.0);
    CHECK(r.hi == 4.0);
    // symmetric replicas centred on the point: plain percentile interval
    std::vector<double> reps;
    for (int i = -500; i <= 500; ++i) reps.push_back(i * 0.01);
    const auto b = bca_interval(0.0, reps, 0.9);
    CHECK(b.z0 == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(b.lo == doctest::Approx(-4.5).epsilon(1e-9));
    CHECK(b.hi == doctest::Approx(4.5).epsilon(1e-9));
    // a shifted point estimate moves the interval
    const auto s = bca_interval(1.0, reps, 0.9);
    CHECK(s.z0 > 0);
    CHECK(s.lo > b.lo);
    CHECK_THROWS_AS(bca_interval(0, reps, 1.5), std::invalid_argument);
}

TEST_CASE("bootstrap is reproducible and thread-count independent") {
    ConditionCounts cc;
    for (int c = 0; c < 3; ++c) cc[c] = synthesize_counts({0.05, 0.9, 0.05}, kModel, 300, 20 + c);
    const auto a = bootstrap_x(cc, kModel, {300, 0.95, 7, 1});
    const auto b = bootstrap_x(cc, kModel, {300, 0.95, 7, 4});
    CHECK(a.lo == b.lo);
    CHECK(a.hi == b.hi);
    CHECK(a.lo <= a.point);
    CHECK(a.point <= a.hi);
}

TEST_CASE("phi calibration identities") {
    CHECK(phi_calibration(M_PI).p_same == doctest::Approx(0.25).epsilon(1e-12));
    CHECK(phi_calibration(0).p_same == doctest::Approx(0.75).epsilon(1e-12));
    CHECK(phi_calibration(M_PI / 2).p_same == doctest::Approx(0.5).epsilon(1e-12));
    double mx = 0;
    for (int i = 0; i < 100; ++i) {
        const double phi = 2 * M_PI * i / 100;
        const auto p = phi_calibration(phi);
        mx = std::max({mx, std::abs(p.p_same - (0.5 + 0.25 * std::cos(phi))), std::abs(p.p_diff - (0.5 - 0.25 * std::cos(phi)))});
    }
    CHECK(mx < 1e-9);
    const auto s = phi_calibration(M_PI, 40000, 5);
    CHECK(std::abs(s.p_same - 0.25) < 0.01);
}

TEST_CASE("count record round trip") {
    CountRecord rec;
    rec.blocks.push_back({6000.0, Condition::Identity, {0, 3, 17, 29}});
    rec.blocks.push_back({6500.25, Condition::HalfPiRandom, {1, 2}});
    rec.blocks.push_back({7000.0, Condition::Pi, {}});
    std::stringstream ss;
    write_count_record(ss, rec);
    const auto back = read_count_record(ss);
    REQUIRE(back.blocks.size() == 3);
    for (size_t i = 0; i < 3; ++i) {
        CHECK(back.blocks[i].time_us == rec.blocks[i].time_us);
        CHECK(back.blocks[i].condition == rec.blocks[i].condition);
        CHECK(back.blocks[i].counts == rec.blocks[i].counts);
    }
    std::stringstream bad("# dissq count record v1\nblock 1 I 3\n1\n2\n");
    CHECK_THROWS_AS(read_count_record(bad), std::runtime_error);
    std::stringstream neg("# dissq count record v1\nblock 1 I 1\n-4\n");
    CHECK_THROWS_AS(read_count_record(neg), std::runtime_error);
}
