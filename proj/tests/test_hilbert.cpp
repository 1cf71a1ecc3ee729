// test_hilbert.cpp — layout, embedding, expectation values
#include <doctest.h>

#include <random>

#include "dissq/hilbert.hpp"

using namespace dissq;
using namespace dissq::core;

namespace {
Mat random_mat(int n, unsigned seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g;
    Mat m(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) m(i, j) = cplx(g(rng), g(rng));
    return m;
}
}  // namespace

TEST_CASE("layout dimensions and ordering") {
    CHECK(build_layout(16).total_dim == 272);
    CHECK(build_layout(1).total_dim == 32);
    const auto l = build_layout(16);
    CHECK(l.index(Down, Down, 0) == 0);
    CHECK(l.index(Up, Down, 3) == (1 * 4 + 0) * 17 + 3);
    CHECK_THROWS_AS(build_layout(0), std::invalid_argument);
    std::vector<int> seen(l.total_dim, 0);
    for (int a = 0; a < 4; ++a)
        for (int b = 0; b < 4; ++b)
            for (int n = 0; n <= 16; ++n) {
                const int k = l.index(a, b, n);
                ++seen[k];
                CHECK(l.ion1(k) == a);
                CHECK(l.ion2(k) == b);
                CHECK(l.fock(k) == n);
            }
    for (int v : seen) CHECK(v == 1);
}

TEST_CASE("embedding") {
    const auto l = build_layout(3);
    const Mat I = Mat::Identity(l.total_dim, l.total_dim);
    CHECK((embed(Mat::Identity(4, 4), Site::Ion1, l).dense() - I).norm() == 0.0);
    Mat prod = embed(transition(Up, Down), Site::Ion1, l).dense() * embed(transition(Down, Up), Site::Ion1, l).dense();
    CHECK((prod - embed(transition(Up, Up), Site::Ion1, l).dense()).norm() < 1e-14);
    CHECK_THROWS_AS(embed(Mat::Identity(3, 3), Site::Ion1, l), std::invalid_argument);
    CHECK_THROWS_AS(embed(Mat::Identity(5, 5), Site::Motion, l), std::invalid_argument);

    const Mat a = ladder(l).dense();
    const Mat comm = a * a.adjoint() - a.adjoint() * a;
    for (int k = 0; k < l.total_dim; ++k) {
        const double expect = l.fock(k) < l.n_max ? 1.0 : -double(l.n_max);
        CHECK(std::abs(comm(k, k) - expect) < 1e-12);
    }
    CHECK((comm - Mat(comm.diagonal().asDiagonal())).norm() < 1e-12);
}

TEST_CASE("embedding commutes across sites") {
    const auto l = build_layout(3);
    for (unsigned s = 0; s < 5; ++s) {
        const Mat A = embed(random_mat(4, s), Site::Ion1, l).dense();
        const Mat B = embed(random_mat(4, 100 + s), Site::Ion2, l).dense();
        const Mat C = embed(random_mat(4, 200 + s), Site::Motion, l).dense();
        CHECK((A * C - C * A).norm() < 1e-10);
        CHECK((A * B - B * A).norm() < 1e-10);
        CHECK((B * C - C * B).norm() < 1e-10);
    }
}

TEST_CASE("ladder and number operator") {
    const auto l = build_layout(5);
    const Mat a = ladder(l).dense();
    const Vec v0 = basis_state(l, Down, Up, 0).amplitudes;
    const Vec v1 = basis_state(l, Down, Up, 1).amplitudes;
    CHECK((a * v0).norm() == 0.0);
    CHECK((a * v1 - v0).norm() < 1e-14);
    const Mat n = number_op(l).dense();
    for (int k = 0; k < l.total_dim; ++k) CHECK(std::abs(n(k, k) - double(l.fock(k))) < 1e-12);
    CHECK((a.adjoint() * a - n).norm() < 1e-12);
}

TEST_CASE("fidelity and phonon number") {
    const auto l = build_layout(1);
    const auto S = singlet(l), T = triplet0(l);
    CHECK(fidelity(projector(S), S) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(std::abs(fidelity(projector(T), S)) < 1e-14);
    const Mat mixed = Mat::Identity(32, 32) / 32.0;
    CHECK(fidelity(mixed, S) == doctest::Approx(1.0 / 32).epsilon(1e-14));
    CHECK(std::abs(S.amplitudes.norm() - 1) < 1e-12);
    CHECK_THROWS_AS(fidelity(Mat::Identity(4, 4), S), std::invalid_argument);

    const auto l16 = build_layout(16);
    CHECK(mean_phonon(projector(singlet(l16)), l16) == 0.0);
    CHECK(mean_phonon(projector(basis_state(l16, Down, Down, 3)), l16) == doctest::Approx(3.0));
    Mat th = Mat::Zero(l16.total_dim, l16.total_dim);
    double z = 0, nz = 0;
    for (int n = 0; n <= 16; ++n) z += std::exp(-n), nz += n * std::exp(-n);
    for (int n = 0; n <= 16; ++n) th(l16.index(Down, Down, n), l16.index(Down, Down, n)) = std::exp(-n) / z;
    CHECK(mean_phonon(th, l16) == doctest::Approx(nz / z).epsilon(1e-12));
    CHECK(fock_tail(th, l16, 16) == doctest::Approx(std::exp(-16) / z).epsilon(1e-10));
}

TEST_CASE("fidelity is linear and bounded") {
    const auto l = build_layout(1);
    std::mt19937_64 rng(7);
    for (int k = 0; k < 10; ++k) {
        Mat g = random_mat(32, 300 + k);
        Mat r1 = g * g.adjoint();
        r1 /= r1.trace().real();
        Mat h = random_mat(32, 400 + k);
        Mat r2 = h * h.adjoint();
        r2 /= r2.trace().real();
        const auto S = singlet(l);
        const double f1 = fidelity(r1, S), f2 = fidelity(r2, S);
        CHECK(f1 >= 0);
        CHECK(f1 <= 1);
        CHECK(fidelity(0.3 * r1 + 0.7 * r2, S) == doctest::Approx(0.3 * f1 + 0.7 * f2).epsilon(1e-12));
    }
}

TEST_CASE("deterministic construction") {
    const auto l = build_layout(4);
    CHECK((ladder(l).dense() - ladder(l).dense()).norm() == 0.0);
}
