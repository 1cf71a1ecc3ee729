// atomic.cpp — Breit-Rabi ground states, P1/2 + P3/2 amplitudes, calibration
#include "dissq/atomic.hpp"

#include <gsl/gsl_errno.h>
#include <gsl/gsl_roots.h>

#include <cmath>
#include <stdexcept>

namespace dissq::atomic {

using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

struct SpinOps {
    MatrixXd z, p, m;
};

SpinOps spin(double j) {
    const int d = int(std::lround(2 * j + 1));
    SpinOps s{MatrixXd::Zero(d, d), MatrixXd::Zero(d, d), MatrixXd::Zero(d, d)};
    for (int k = 0; k < d; ++k) s.z(k, k) = j - k;
    for (int k = 1; k < d; ++k) {
        const double mk = j - k;
        s.p(k - 1, k) = std::sqrt(j * (j + 1) - mk * (mk + 1));
    }
    s.m = s.p.transpose();
    return s;
}

MatrixXd kron(const MatrixXd& a, const MatrixXd& b) {
    MatrixXd out(a.rows() * b.rows(), a.cols() * b.cols());
    for (int i = 0; i < a.rows(); ++i)
        for (int j = 0; j < a.cols(); ++j) out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    return out;
}

double angular(double hz) { return 2 * M_PI * hz; }

MatrixXd absorb(const AtomModel& m, const Pol3& e) {
    return e[0] * m.t_op[0] + e[1] * m.t_op[1] + e[2] * m.t_op[2];
}

MatrixXd propagator(const AtomModel& m, double detuning_hz, double fs_hz) {
    const double D = angular(detuning_hz), F = angular(fs_hz);
    if (D == 0 || D == F) throw std::invalid_argument("Raman detuning on resonance with a P manifold");
    const MatrixXd I = MatrixXd::Identity(24, 24);
    return (I - m.p32) / D + m.p32 / (D - F);
}

void check_pol(const Pol3& p, const char* name) {
    const double n = p[0] * p[0] + p[1] * p[1] + p[2] * p[2];
    if (std::abs(n - 1) > 1e-9) throw std::invalid_argument(std::string(name) + " polarization is not unit norm");
}

}  // namespace

AtomModel AtomModel::beryllium9() {
    AtomModel m;
    const SpinOps S = spin(0.5), I = spin(1.5), L = spin(1.0);
    const MatrixXd IJ = kron(S.z, I.z) + 0.5 * (kron(S.p, I.m) + kron(S.m, I.p));
    const MatrixXd H = m.hyperfine_a_hz * IJ + m.g_j * m.mu_b_hz_per_tesla * m.field_tesla * kron(S.z, MatrixXd::Identity(4, 4));
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(H);
    m.ground = es.eigenvectors();
    m.energies_hz = es.eigenvalues();
    const MatrixXd Fz = kron(S.z, MatrixXd::Identity(4, 4)) + kron(MatrixXd::Identity(2, 2), I.z);
    std::vector<int> mf1;
    for (int k = 0; k < 8; ++k) {
        const double mf = m.ground.col(k).dot(Fz * m.ground.col(k));
        if (std::abs(mf - 2) < 1e-6) m.idx_down = k;
        if (std::abs(mf - 1) < 1e-6) mf1.push_back(k);
    }
    if (m.idx_down < 0 || mf1.size() != 2) throw std::logic_error("AtomModel: level identification failed");
    // F=2 lies below F=1 for negative hyperfine constant
    m.idx_aux = m.energies_hz(mf1[0]) < m.energies_hz(mf1[1]) ? mf1[0] : mf1[1];
    m.idx_up = m.idx_aux == mf1[0] ? mf1[1] : mf1[0];

    const MatrixXd LS = kron(kron(L.z, S.z) + 0.5 * (kron(L.p, S.m) + kron(L.m, S.p)), MatrixXd::Identity(4, 4));
    m.p32 = (LS + MatrixXd::Identity(24, 24)) / 1.5;
    // orbital index 0, 1, 2 <-> m_L = +1, 0, -1; Pol3 index 0, 1, 2 <-> q = -1, 0, +1
    for (int qi = 0; qi < 3; ++qi) {
        const int ml_idx = 2 - qi;
        MatrixXd T = MatrixXd::Zero(24, 8);
        for (int s = 0; s < 2; ++s)
            for (int i = 0; i < 4; ++i) T((ml_idx * 2 + s) * 4 + i, s * 4 + i) = 1.0;
        m.t_op[qi] = T;
    }
    return m;
}

VectorXd AtomModel::level(int lvl) const {
    switch (lvl) {
        case core::Down: return ground.col(idx_down);
        case core::Up: return ground.col(idx_up);
        case core::Aux: return ground.col(idx_aux);
    }
    throw std::invalid_argument("AtomModel::level: leak is not a single state");
}

int AtomModel::model_level(int k) const {
    if (k == idx_down) return core::Down;
    if (k == idx_up) return core::Up;
    if (k == idx_aux) return core::Aux;
    return core::Leak;
}

void BeamConfig::validate() const {
    if (!(p_total >= 0)) throw std::invalid_argument("BeamConfig: p_total must be >= 0");
    if (!(p_blue_fraction >= 0 && p_blue_fraction <= 1)) throw std::invalid_argument("BeamConfig: p_blue_fraction outside [0,1]");
    if (!(r_q >= 0 && r_q <= 1)) throw std::invalid_argument("BeamConfig: r_q outside [0,1]");
    check_pol(blue_pol, "blue");
    check_pol(red_pol, "red");
    if (std::abs(std::abs(blue_pol[0]) - std::abs(blue_pol[2])) > 1e-9)
        throw std::invalid_argument("BeamConfig: blue polarization needs |b-| = |b+|");
    if (detuning_hz == 0 || detuning_hz == fs_splitting_hz) throw std::invalid_argument("BeamConfig: resonant detuning");
}

double BeamConfig::g_blue() const { return std::sqrt(intensity_scale * p_total * p_blue_fraction); }
double BeamConfig::g_red_q() const { return std::sqrt(intensity_scale * p_total * (1 - p_blue_fraction) * r_q); }
double BeamConfig::g_red_a() const { return std::sqrt(intensity_scale * p_total * (1 - p_blue_fraction) * (1 - r_q)); }

Pol3 blue_polarization(double b_pi) {
    if (!(b_pi >= 0 && b_pi <= 1)) throw std::invalid_argument("blue_polarization: b_pi outside [0,1]");
    const double s = std::sqrt((1 - b_pi * b_pi) / 2);
    return {s, b_pi, -s};
}

Pol3 red_polarization(double r_plus, double r_pi) {
    if (!(r_plus >= 0 && r_plus <= 1) || !(r_pi >= 0 && r_pi < 1))
        throw std::invalid_argument("red_polarization: components outside [0,1]");
    const double cap = std::sqrt(1 - r_pi * r_pi);
    if (r_plus >= cap) return {0.0, r_pi, cap};
    return {std::sqrt(1 - r_plus * r_plus - r_pi * r_pi), r_pi, r_plus};
}

void RateTable::validate() const {
    if (!(omega_bq >= 0 && omega_ba >= 0 && rayleigh_rate >= 0 && omega_res >= 0))
        throw std::invalid_argument("RateTable: rates must be >= 0");
    for (const auto& r : raman_rates)
        if (!(r.gamma >= 0)) throw std::invalid_argument("RateTable: negative Raman rate");
}

double RateTable::raman_total(int from) const {
    double s = 0;
    for (const auto& r : raman_rates)
        if (r.from == from) s += r.gamma;
    return s;
}

double RateTable::raman_rate(int from, int to) const {
    double s = 0;
    for (const auto& r : raman_rates)
        if (r.from == from && r.to == to) s += r.gamma;
    return s;
}

double raman_amplitude(const AtomModel& m, int f, int i, const Pol3& in, const Pol3& out, double detuning_hz,
                       double fs_hz) {
    return m.level(f).dot(absorb(m, out).transpose() * propagator(m, detuning_hz, fs_hz) * absorb(m, in) * m.level(i));
}

double raman_amplitude_asymptotic(const AtomModel& m, int f, int i, const Pol3& in, const Pol3& out, double fs_hz) {
    return angular(fs_hz) * m.level(f).dot(absorb(m, out).transpose() * m.p32 * absorb(m, in) * m.level(i));
}

StimulatedRates stimulated_rates(const AtomModel& m, const BeamConfig& b) {
    b.validate();
    const double Mq = raman_amplitude(m, core::Up, core::Down, b.blue_pol, b.red_pol, b.detuning_hz, b.fs_splitting_hz);
    const double Ma = raman_amplitude(m, core::Up, core::Aux, b.blue_pol, b.red_pol, b.detuning_hz, b.fs_splitting_hz);
    return {b.g_blue() * b.g_red_q() * std::abs(Mq) / 2, b.g_blue() * b.g_red_a() * std::abs(Ma) / 2};
}

double SpontaneousRates::total(int i, int f) const { return rate[i][f][0] + rate[i][f][1] + rate[i][f][2]; }

double SpontaneousRates::total_out(int i) const {
    double s = 0;
    for (int f = 0; f < 4; ++f)
        if (f != i) s += total(i, f);
    return s;
}

SpontaneousRates spontaneous_rates_full(const AtomModel& m, const BeamConfig& b) {
    b.validate();
    const MatrixXd V = propagator(m, b.detuning_hz, b.fs_splitting_hz);
    const std::array<std::pair<Pol3, double>, 3> beams{{{b.blue_pol, b.g_blue()},
                                                        {b.red_pol, b.g_red_q()},
                                                        {b.red_pol, b.g_red_a()}}};
    SpontaneousRates out;
    for (int i : {core::Down, core::Up, core::Aux}) {
        const VectorXd vi = m.level(i);
        for (const auto& [pol, g] : beams) {
            if (g == 0) continue;
            const VectorXd excited = (g / 2) * (V * (absorb(m, pol) * vi));
            for (int q = 0; q < 3; ++q) {
                const VectorXd amp = m.ground.transpose() * (m.t_op[q].transpose() * excited);
                for (int k = 0; k < 8; ++k) out.rate[i][m.model_level(k)][q] += m.gamma * amp(k) * amp(k);
            }
        }
    }
    return out;
}

RateTable spontaneous_rates(const AtomModel& m, const BeamConfig& b) {
    const SpontaneousRates s = spontaneous_rates_full(m, b);
    RateTable t;
    double ray = 0;
    dissipation::EmissionMix mix{0, 0, 0};
    for (int i : {core::Down, core::Up, core::Aux}) {
        for (int f = 0; f < 4; ++f) {
            if (f == i) continue;
            for (int q = 0; q < 3; ++q)
                if (s.rate[i][f][q] > 0)
                    t.raman_rates.push_back({i, f, dissipation::Polarization(q), s.rate[i][f][q]});
        }
        for (int q = 0; q < 3; ++q) mix[q] += s.rate[i][i][q], ray += s.rate[i][i][q];
    }
    t.rayleigh_rate = ray / 3;
    if (ray > 0)
        for (auto& v : mix) v /= ray;
    else mix = {0, 0, 1};
    t.rayleigh_mix = mix;
    return t;
}

double residual_coupling_rate(const AtomModel& m, const BeamConfig& b) {
    b.validate();
    const double M = raman_amplitude(m, core::Aux, core::Down, b.red_pol, b.red_pol, b.detuning_hz, b.fs_splitting_hz);
    return b.g_red_q() * b.g_red_a() * std::abs(M) / 2;
}

RateTable large_detuning_table(const AtomModel& m, double eta, const LargeDetuningBeams& lb, double omega_ba) {
    if (!(eta > 0)) throw std::invalid_argument("large_detuning_table: eta must be > 0");
    if (!(lb.r_q > 0 && lb.r_q < 1)) throw std::invalid_argument("large_detuning_table: r_q outside (0,1)");
    const double fb = lb.p_blue_fraction;
    if (!(fb > 0 && fb < 1)) throw std::invalid_argument("large_detuning_table: p_blue_fraction outside (0,1)");
    const Pol3 bp = blue_polarization(lb.b_pi), rp = red_polarization(lb.r_plus);
    const double fs = 197.15e9;
    const double Mq = std::abs(raman_amplitude_asymptotic(m, core::Up, core::Down, bp, rp, fs));
    const double Ma = std::abs(raman_amplitude_asymptotic(m, core::Up, core::Aux, bp, rp, fs));
    RateTable t;
    t.omega_ba = omega_ba;
    t.omega_bq = omega_ba * std::sqrt(lb.r_q / (1 - lb.r_q)) * Mq / Ma;
    // kappa / Delta^2 fixed by the sideband rate; Rayleigh rate is Gamma kappa / (4 Delta^2)
    const double y = 2 * omega_ba / (eta * std::sqrt(fb * (1 - fb) * (1 - lb.r_q)) * Ma);
    t.rayleigh_rate = m.gamma * y / 4;
    dissipation::EmissionMix mix;
    for (int q = 0; q < 3; ++q) mix[q] = fb * bp[q] * bp[q] + (1 - fb) * rp[q] * rp[q];
    t.rayleigh_mix = mix;
    return t;
}

BeamConfig calibrate_beams(const AtomModel& m, const MeasuredDrive& md, double eta) {
    if (!(md.omega_bq > 0 && md.omega_ba > 0)) throw std::invalid_argument("calibrate_beams: Rabi rates must be > 0");
    if (!(md.red_to_blue_power > 0)) throw std::invalid_argument("calibrate_beams: power ratio must be > 0");
    BeamConfig b;
    b.blue_pol = blue_polarization(md.b_pi);
    b.red_pol = red_polarization(md.r_plus, md.r_pi);
    b.detuning_hz = md.detuning_hz;
    b.fs_splitting_hz = m.fs_splitting_hz;
    const double Mq = std::abs(raman_amplitude(m, core::Up, core::Down, b.blue_pol, b.red_pol, b.detuning_hz, b.fs_splitting_hz));
    const double Ma = std::abs(raman_amplitude(m, core::Up, core::Aux, b.blue_pol, b.red_pol, b.detuning_hz, b.fs_splitting_hz));
    const double x = 2 * md.omega_bq / (eta * Mq), y = 2 * md.omega_ba / (eta * Ma);
    const double gb2 = std::sqrt((x * x + y * y) / md.red_to_blue_power);
    b.p_total = 1.0;
    b.p_blue_fraction = 1.0 / (1.0 + md.red_to_blue_power);
    b.intensity_scale = gb2 / b.p_blue_fraction;
    b.r_q = x * x / (x * x + y * y);
    return b;
}

double calibrate_r_pi(const AtomModel& m, const MeasuredDrive& md, double eta, double target) {
    if (!(target >= 0)) throw std::invalid_argument("calibrate_r_pi: target must be >= 0");
    if (target == 0) return 0;
    struct Ctx {
        const AtomModel* m;
        MeasuredDrive md;
        double eta, target;
    } ctx{&m, md, eta, target};
    gsl_function F;
    F.function = [](double rpi, void* p) {
        auto* c = static_cast<Ctx*>(p);
        MeasuredDrive d = c->md;
        d.r_pi = rpi;
        return residual_coupling_rate(*c->m, calibrate_beams(*c->m, d, c->eta)) - c->target;
    };
    F.params = &ctx;
    double lo = 0, hi = 0.5;
    if (GSL_FN_EVAL(&F, hi) < 0) throw std::runtime_error("calibrate_r_pi: target coupling unreachable");
    gsl_root_fsolver* s = gsl_root_fsolver_alloc(gsl_root_fsolver_brent);
    gsl_root_fsolver_set(s, &F, lo, hi);
    for (int it = 0; it < 200; ++it) {
        gsl_root_fsolver_iterate(s);
        lo = gsl_root_fsolver_x_lower(s);
        hi = gsl_root_fsolver_x_upper(s);
        if (gsl_root_test_interval(lo, hi, 1e-16, 1e-13) == GSL_SUCCESS) break;
    }
    gsl_root_fsolver_free(s);
    return 0.5 * (lo + hi);
}

RateTable finite_detuning_table(const AtomModel& m, const MeasuredDrive& md, double eta) {
    const BeamConfig b = calibrate_beams(m, md, eta);
    RateTable t = spontaneous_rates(m, b);
    t.omega_bq = md.omega_bq;
    t.omega_ba = md.omega_ba;
    t.omega_res = md.r_pi > 0 ? residual_coupling_rate(m, b) : 0.0;
    return t;
}

}  // namespace dissq::atomic
