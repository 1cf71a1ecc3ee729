// hamiltonian.cpp — carrier, blue sidebands, residual coupling, Stark shifts
#include "dissq/hamiltonian.hpp"

#include <cmath>
#include <stdexcept>

namespace dissq::protocol {

using core::OperatorMatrix;
using core::Site;

void ProtocolParams::validate() const {
    auto nonneg = [](double v, const char* name) {
        if (!(v >= 0)) throw std::invalid_argument(std::string("ProtocolParams: ") + name + " must be >= 0");
    };
    nonneg(omega_bq, "omega_bq");
    nonneg(omega_ba, "omega_ba");
    nonneg(omega_c, "omega_c");
    nonneg(omega_res, "omega_res");
    if (!(phi >= 0 && phi < 2 * M_PI)) throw std::invalid_argument("ProtocolParams: phi must lie in [0, 2pi)");
    if (!(eta > 0 && eta < 1)) throw std::invalid_argument("ProtocolParams: eta must lie in (0, 1)");
    if (!(t_rep > 0)) throw std::invalid_argument("ProtocolParams: t_rep must be > 0");
    if (!(std::abs(rabi_imbalance) < 2)) throw std::invalid_argument("ProtocolParams: rabi_imbalance out of range");
}

namespace {

SpMat on_ion(const Mat& m, int ion, const core::HilbertLayout& l) {
    return core::embed(m, ion == 0 ? Site::Ion1 : Site::Ion2, l).m;
}

SpMat plus_hc(const SpMat& x) {
    SpMat h = x + SpMat(x.adjoint());
    h.prune(cplx(0.0), 0.0);
    h.makeCompressed();
    return h;
}

OperatorMatrix herm(SpMat m) {
    OperatorMatrix o;
    o.m = std::move(m);
    o.hermitian = true;
    return o;
}

double scale(const ProtocolParams& p, int ion) { return 1.0 + (ion == 0 ? 0.5 : -0.5) * p.rabi_imbalance; }

}  // namespace

OperatorMatrix h_carrier(const ProtocolParams& p, const core::HilbertLayout& l) {
    const Mat up_dn = core::transition(core::Up, core::Down);
    double s1 = 1, s2 = 1;
    if (p.imbalance_target == ImbalanceTarget::CarrierAndSideband) s1 = scale(p, 0), s2 = scale(p, 1);
    SpMat x = (0.5 * p.omega_c) * (s1 * on_ion(up_dn, 0, l) + s2 * on_ion(up_dn, 1, l));
    return herm(plus_hc(x));
}

OperatorMatrix h_blue_qubit(const ProtocolParams& p, const core::HilbertLayout& l) {
    const Mat up_dn = core::transition(core::Up, core::Down);
    SpMat ad = SpMat(core::ladder(l).m.adjoint());
    const cplx pre = std::polar(0.5 * p.omega_bq, p.global_phase);
    SpMat spin = scale(p, 0) * on_ion(up_dn, 0, l) - std::polar(scale(p, 1), p.phi) * on_ion(up_dn, 1, l);
    SpMat x = pre * (ad * spin);
    return herm(plus_hc(x));
}

OperatorMatrix h_blue_aux(const ProtocolParams& p, const core::HilbertLayout& l) {
    const Mat up_aux = core::transition(core::Up, core::Aux);
    SpMat ad = SpMat(core::ladder(l).m.adjoint());
    SpMat spin = on_ion(up_aux, 0, l) + on_ion(up_aux, 1, l);
    SpMat x = (0.5 * p.omega_ba) * (ad * spin);
    return herm(plus_hc(x));
}

OperatorMatrix h_residual(const ProtocolParams& p, const core::HilbertLayout& l) {
    const Mat dn_aux = core::transition(core::Down, core::Aux);
    SpMat x = (0.5 * p.omega_res) * (on_ion(dn_aux, 0, l) + on_ion(dn_aux, 1, l));
    return herm(plus_hc(x));
}

OperatorMatrix h_stark(const ProtocolParams& p, const core::HilbertLayout& l) {
    SpMat h(l.total_dim, l.total_dim);
    std::vector<Eigen::Triplet<cplx>> t;
    for (int i = 0; i < l.total_dim; ++i) {
        double e = p.stark[0][l.ion1(i)] + p.stark[1][l.ion2(i)];
        if (e != 0) t.emplace_back(i, i, e);
    }
    h.setFromTriplets(t.begin(), t.end());
    return herm(std::move(h));
}

OperatorMatrix total_hamiltonian(const ProtocolParams& p, const core::HilbertLayout& l) {
    SpMat h = h_carrier(p, l).m + h_blue_qubit(p, l).m + h_blue_aux(p, l).m + h_residual(p, l).m + h_stark(p, l).m;
    h.prune(cplx(0.0), 0.0);
    h.makeCompressed();
    return herm(std::move(h));
}

}  // namespace dissq::protocol
