// channels.hpp — scattering elements and their recoil-dressed dissipator terms
#pragma once

#include <map>
#include <memory>
#include <vector>

#include "dissq/hamiltonian.hpp"
#include "dissq/recoil.hpp"

namespace dissq::dissipation {

struct ScatterElement {
    double gamma = 0;
    int initial_level = core::Aux;
    int final_level = core::Up;
    int ion = 0;
    Polarization emitted_polarization = Polarization::SigmaPlus;
    double incident_axial_k = 1.0;
    // elements sharing a non-negative group on one ion are summed into one jump amplitude
    int coherent_group = -1;
};

enum class DissipatorForm { Quadrature, Series };

// one jump operator m (4x4 on the given ion, sqrt(rate) included) and its motional map
struct JumpTerm {
    int ion = 0;
    Mat m;
    std::shared_ptr<const RecoilMap> map;
};

struct ChannelSet {
    std::vector<ScatterElement> elements;
    std::vector<JumpTerm> terms;

    double total_rate() const;
    void append(const ChannelSet& other);
};

// Recoil maps keyed by (pattern, incident projection) so identical maps are built once.
class MapCache {
public:
    MapCache(RecoilGeometry geom, int n_fock, DissipatorForm form);
    std::shared_ptr<const RecoilMap> get(const EmissionMix& mix, double k_inc);
    const RecoilGeometry& geometry() const { return geom_; }
    int n_fock() const { return n_fock_; }
    DissipatorForm form() const { return form_; }

private:
    RecoilGeometry geom_;
    int n_fock_;
    DissipatorForm form_;
    std::map<std::pair<std::array<double, 3>, double>, std::shared_ptr<const RecoilMap>> cache_;
};

JumpTerm recoil_dissipator_quadrature(const ScatterElement& e, const RecoilGeometry& g, const core::HilbertLayout& l);
JumpTerm recoil_dissipator_series(const ScatterElement& e, const RecoilGeometry& g, const core::HilbertLayout& l);

// Reference action of one term on a full density matrix: -1/2{L^dag L, rho} + recoil(m rho m^dag)
Mat apply_term(const JumpTerm& t, const Mat& rho, const core::HilbertLayout& l);

// Build the terms for a list of elements, merging coherent groups.
ChannelSet assemble(std::vector<ScatterElement> elements, MapCache& cache);

struct RepumpOptions {
    double incident_axial_k = M_SQRT1_2;
    // emitted polarization per final level up, down, aux
    Polarization pol_up = Polarization::SigmaPlus;
    Polarization pol_down = Polarization::Pi;
    Polarization pol_aux = Polarization::SigmaPlus;
};

std::vector<ScatterElement> repump_elements(const protocol::ProtocolParams& p, const RepumpOptions& opt = {});
ChannelSet repump_channels(const protocol::ProtocolParams& p, MapCache& cache, const RepumpOptions& opt = {});

struct RamanRate {
    int from = core::Down;
    int to = core::Up;
    Polarization pol = Polarization::Pi;
    double gamma = 0;
};

std::vector<ScatterElement> raman_elements(const std::vector<RamanRate>& rates, double incident_axial_k = 1.0);
ChannelSet raman_channels(const std::vector<RamanRate>& rates, MapCache& cache, double incident_axial_k = 1.0);

// elastic scattering on down, up and aux of each ion with emission mix normalized to one
std::vector<ScatterElement> rayleigh_elements(double rate_per_ion, const EmissionMix& mix,
                                              double incident_axial_k = 1.0);
ChannelSet rayleigh_channels(double rate_per_ion, const EmissionMix& mix, MapCache& cache,
                             double incident_axial_k = 1.0);

}  // namespace dissq::dissipation
