// hamiltonian.hpp — interaction-picture drive Hamiltonians (hbar = 1, rad/s)
#pragma once

#include <array>

#include "dissq/hilbert.hpp"

namespace dissq::protocol {

// which drive terms the per-ion Rabi imbalance scales
enum class ImbalanceTarget { QubitSideband, CarrierAndSideband };

struct ProtocolParams {
    double omega_bq = 0;
    double omega_ba = 0;
    double omega_c = 0;
    double phi = M_PI;
    double global_phase = 0;
    double omega_res = 0;
    // stark[ion][level], rad/s
    std::array<std::array<double, 4>, 2> stark{};
    double rabi_imbalance = 0;
    ImbalanceTarget imbalance_target = ImbalanceTarget::QubitSideband;
    double t_rep = 34e-6;
    double eta = 0.257;
    double raman_detuning_hz = 0;

    void validate() const;
};

core::OperatorMatrix h_carrier(const ProtocolParams& p, const core::HilbertLayout& layout);
core::OperatorMatrix h_blue_qubit(const ProtocolParams& p, const core::HilbertLayout& layout);
core::OperatorMatrix h_blue_aux(const ProtocolParams& p, const core::HilbertLayout& layout);
core::OperatorMatrix h_residual(const ProtocolParams& p, const core::HilbertLayout& layout);
core::OperatorMatrix h_stark(const ProtocolParams& p, const core::HilbertLayout& layout);
core::OperatorMatrix total_hamiltonian(const ProtocolParams& p, const core::HilbertLayout& layout);

// Rabi rate of a resonant coupling with the given pi time
inline double omega_from_pi_time(double t_pi) { return M_PI / t_pi; }

}  // namespace dissq::protocol
