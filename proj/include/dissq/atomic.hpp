// atomic.hpp — 9Be+ two-manifold Raman model: stimulated and spontaneous rates
#pragma once

#include <array>
#include <vector>

#include "dissq/channels.hpp"

namespace dissq::atomic {

// spherical components (sigma-, pi, sigma+)
using Pol3 = std::array<double, 3>;

struct AtomModel {
    double hyperfine_a_hz = -625.008837e6;
    double field_tesla = 0.0119;
    double mu_b_hz_per_tesla = 13.99624e9;
    double g_j = 2.00226206;
    double gamma = 2 * M_PI * 19.4e6;        // P-state decay rate, 1/s
    double fs_splitting_hz = 197.15e9;

    Eigen::MatrixXd ground;   // 8 x 8, columns are field eigenstates in |m_S, m_I> basis
    Eigen::VectorXd energies_hz;
    int idx_down = -1, idx_up = -1, idx_aux = -1;
    Eigen::MatrixXd p32;      // 24 x 24 projector onto P3/2
    std::array<Eigen::MatrixXd, 3> t_op;  // 24 x 8, |S, mS, mI> -> |P, mL = q, mS, mI>

    static AtomModel beryllium9();
    // ground eigenvector for a model level (down, up, aux)
    Eigen::VectorXd level(int lvl) const;
    // maps an eigenstate index to a model level; everything else is leak
    int model_level(int eig_index) const;
    double qubit_splitting_hz() const { return energies_hz(idx_up) - energies_hz(idx_down); }
};

struct BeamConfig {
    double p_total = 1.0;
    double p_blue_fraction = 0.5;
    double r_q = 0.357;
    Pol3 blue_pol{0, 1, 0};
    Pol3 red_pol{0, 0, 1};
    double detuning_hz = -450e9;
    double fs_splitting_hz = 197.15e9;
    // single-beam coupling squared per unit power, (rad/s)^2
    double intensity_scale = 1.0;

    void validate() const;
    double g_blue() const;
    double g_red_q() const;
    double g_red_a() const;
};

Pol3 blue_polarization(double b_pi);
Pol3 red_polarization(double r_plus, double r_pi = 0.0);

struct RateTable {
    double omega_bq = 0, omega_ba = 0;
    std::vector<dissipation::RamanRate> raman_rates;
    double rayleigh_rate = 0;                        // per ion, 1/s
    dissipation::EmissionMix rayleigh_mix{0, 0, 1};  // emitted polarization weights
    std::array<std::array<double, 4>, 2> stark{};
    double omega_res = 0;

    void validate() const;
    double raman_total(int from) const;
    double raman_rate(int from, int to) const;
};

// two-photon amplitude <f| A_out^dag V(Delta) A_in |i>, units s/rad
double raman_amplitude(const AtomModel& m, int f, int i, const Pol3& in, const Pol3& out, double detuning_hz,
                       double fs_splitting_hz);
// limit of Delta^2 times the above for orthogonal f, i (rad/s)
double raman_amplitude_asymptotic(const AtomModel& m, int f, int i, const Pol3& in, const Pol3& out,
                                  double fs_splitting_hz);

struct StimulatedRates {
    double omega_bq = 0;
    double omega_ba = 0;
};
// sideband Rabi rates without the Lamb-Dicke factor
StimulatedRates stimulated_rates(const AtomModel& m, const BeamConfig& b);

struct SpontaneousRates {
    // rate[i][f][q], i, f in {down, up, aux, leak}, q in (sigma-, pi, sigma+)
    std::array<std::array<std::array<double, 3>, 4>, 4> rate{};
    double total(int i, int f) const;
    double total_out(int i) const;
};
SpontaneousRates spontaneous_rates_full(const AtomModel& m, const BeamConfig& b);
// RateTable fragment: spontaneous Raman (inelastic) rates, level-averaged Rayleigh rate and emission mix
RateTable spontaneous_rates(const AtomModel& m, const BeamConfig& b);

double residual_coupling_rate(const AtomModel& m, const BeamConfig& b);

// Large-detuning limit: polarizations and power split only; the overall scale is set by omega_ba.
struct LargeDetuningBeams {
    double b_pi = 0.59;
    double r_plus = 0.88;
    double r_q = 0.357;
    double p_blue_fraction = 0.5;
};
RateTable large_detuning_table(const AtomModel& m, double eta, const LargeDetuningBeams& beams, double omega_ba);

// Beam intensities and red power split reproducing measured sideband Rabi rates.
struct MeasuredDrive {
    double omega_bq = 0;
    double omega_ba = 0;
    double detuning_hz = -315e9;
    double b_pi = 0.62;
    double r_plus = 1.0;
    double red_to_blue_power = 0.4;
    double r_pi = 0.0;
};
BeamConfig calibrate_beams(const AtomModel& m, const MeasuredDrive& md, double eta);
// r_pi giving the requested residual coupling rate for the calibrated beams
double calibrate_r_pi(const AtomModel& m, const MeasuredDrive& md, double eta, double omega_res_target);

// Full finite-detuning table: measured drives, calibrated spontaneous rates, residual coupling.
RateTable finite_detuning_table(const AtomModel& m, const MeasuredDrive& md, double eta);

}  // namespace dissq::atomic
