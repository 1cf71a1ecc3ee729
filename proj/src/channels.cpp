// channels.cpp — repump, Raman and Rayleigh channel construction
#include "dissq/channels.hpp"

#include <cmath>
#include <stdexcept>
#include <tuple>

namespace dissq::dissipation {

double ChannelSet::total_rate() const {
    double s = 0;
    for (const auto& e : elements) s += e.gamma;
    return s;
}

void ChannelSet::append(const ChannelSet& other) {
    elements.insert(elements.end(), other.elements.begin(), other.elements.end());
    terms.insert(terms.end(), other.terms.begin(), other.terms.end());
}

MapCache::MapCache(RecoilGeometry geom, int n_fock, DissipatorForm form)
    : geom_(std::move(geom)), n_fock_(n_fock), form_(form) {
    if (geom_.nodes.empty()) throw std::invalid_argument("MapCache: empty node list");
}

std::shared_ptr<const RecoilMap> MapCache::get(const EmissionMix& mix, double k_inc) {
    // sigma- and sigma+ share one angular pattern
    const EmissionMix folded{0.0, mix[1], mix[0] + mix[2]};
    auto key = std::make_pair(folded, k_inc);
    auto it = cache_.find(key);
    if (it != cache_.end()) return it->second;
    auto m = form_ == DissipatorForm::Quadrature ? quadrature_map(geom_, folded, k_inc, n_fock_)
                                                 : series_map(geom_, folded, k_inc, n_fock_);
    cache_.emplace(key, m);
    return m;
}

static void check_element(const ScatterElement& e) {
    if (!(e.gamma >= 0)) throw std::invalid_argument("scatter element: negative rate");
    auto ok = [](int s) { return s >= 0 && s < core::kLevels; };
    if (!ok(e.initial_level) || !ok(e.final_level)) throw std::invalid_argument("scatter element: bad level");
    if (e.ion != 0 && e.ion != 1) throw std::invalid_argument("scatter element: ion must be 0 or 1");
}

static JumpTerm single_term(const ScatterElement& e, std::shared_ptr<const RecoilMap> map) {
    check_element(e);
    JumpTerm t;
    t.ion = e.ion;
    t.m = std::sqrt(e.gamma) * core::transition(e.final_level, e.initial_level);
    t.map = std::move(map);
    return t;
}

JumpTerm recoil_dissipator_quadrature(const ScatterElement& e, const RecoilGeometry& g, const core::HilbertLayout& l) {
    return single_term(e, quadrature_map(g, pure_mix(e.emitted_polarization), e.incident_axial_k, l.n_fock));
}

JumpTerm recoil_dissipator_series(const ScatterElement& e, const RecoilGeometry& g, const core::HilbertLayout& l) {
    return single_term(e, series_map(g, pure_mix(e.emitted_polarization), e.incident_axial_k, l.n_fock));
}

Mat apply_term(const JumpTerm& t, const Mat& rho, const core::HilbertLayout& l) {
    const auto site = t.ion == 0 ? core::Site::Ion1 : core::Site::Ion2;
    Mat M = core::embed(t.m, site, l).dense();
    Mat mm = M.adjoint() * M;
    Mat out = -0.5 * (mm * rho + rho * mm);
    Mat z = M * rho * M.adjoint();
    const int N = l.n_fock;
    for (int a = 0; a < core::kInternal; ++a)
        for (int b = 0; b < core::kInternal; ++b)
            out.block(a * N, b * N, N, N) += t.map->apply(z.block(a * N, b * N, N, N));
    return out;
}

ChannelSet assemble(std::vector<ScatterElement> elements, MapCache& cache) {
    ChannelSet cs;
    using Key = std::tuple<int, int, int, double>;
    std::map<Key, JumpTerm> grouped;
    for (const auto& e : elements) {
        check_element(e);
        if (e.gamma == 0) continue;
        auto map = cache.get(pure_mix(e.emitted_polarization), e.incident_axial_k);
        if (e.coherent_group < 0) {
            cs.terms.push_back(single_term(e, map));
            continue;
        }
        Key k{e.ion, e.coherent_group, int(e.emitted_polarization), e.incident_axial_k};
        auto it = grouped.find(k);
        if (it == grouped.end()) {
            JumpTerm t;
            t.ion = e.ion;
            t.m = Mat::Zero(core::kLevels, core::kLevels);
            t.map = map;
            it = grouped.emplace(k, std::move(t)).first;
        }
        it->second.m(e.final_level, e.initial_level) += std::sqrt(e.gamma);
    }
    for (auto& [k, t] : grouped) cs.terms.push_back(std::move(t));
    cs.elements = std::move(elements);
    return cs;
}

std::vector<ScatterElement> repump_elements(const protocol::ProtocolParams& p, const RepumpOptions& opt) {
    if (!(p.t_rep > 0)) throw std::invalid_argument("repump: t_rep must be > 0");
    const double g = 1.0 / p.t_rep;
    std::vector<ScatterElement> out;
    for (int ion = 0; ion < 2; ++ion) {
        out.push_back({g * 5.0 / 12.0, core::Aux, core::Up, ion, opt.pol_up, opt.incident_axial_k, -1});
        out.push_back({g * 4.0 / 12.0, core::Aux, core::Down, ion, opt.pol_down, opt.incident_axial_k, -1});
        out.push_back({g * 3.0 / 12.0, core::Aux, core::Aux, ion, opt.pol_aux, opt.incident_axial_k, -1});
    }
    return out;
}

ChannelSet repump_channels(const protocol::ProtocolParams& p, MapCache& cache, const RepumpOptions& opt) {
    return assemble(repump_elements(p, opt), cache);
}

std::vector<ScatterElement> raman_elements(const std::vector<RamanRate>& rates, double incident_axial_k) {
    std::vector<ScatterElement> out;
    for (const auto& r : rates) {
        if (!(r.gamma >= 0)) throw std::invalid_argument("raman_channels: negative rate");
        if (r.gamma == 0) continue;
        for (int ion = 0; ion < 2; ++ion) out.push_back({r.gamma, r.from, r.to, ion, r.pol, incident_axial_k, -1});
    }
    return out;
}

ChannelSet raman_channels(const std::vector<RamanRate>& rates, MapCache& cache, double incident_axial_k) {
    return assemble(raman_elements(rates, incident_axial_k), cache);
}

std::vector<ScatterElement> rayleigh_elements(double rate_per_ion, const EmissionMix& mix, double incident_axial_k) {
    if (!(rate_per_ion >= 0)) throw std::invalid_argument("rayleigh_channels: negative rate");
    std::vector<ScatterElement> out;
    if (rate_per_ion == 0) return out;
    const double tot = mix[0] + mix[1] + mix[2];
    if (!(tot > 0)) throw std::invalid_argument("rayleigh_channels: empty emission mix");
    for (int ion = 0; ion < 2; ++ion)
        for (int q = 0; q < 3; ++q) {
            if (mix[q] <= 0) continue;
            for (int s : {core::Down, core::Up, core::Aux})
                out.push_back({rate_per_ion * mix[q] / tot, s, s, ion, Polarization(q), incident_axial_k, 0});
        }
    return out;
}

ChannelSet rayleigh_channels(double rate_per_ion, const EmissionMix& mix, MapCache& cache, double incident_axial_k) {
    return assemble(rayleigh_elements(rate_per_ion, mix, incident_axial_k), cache);
}

}  // namespace dissq::dissipation
