// recoil.hpp — dipole emission patterns, angular quadrature, motional recoil maps
#pragma once

#include <array>
#include <memory>
#include <string>
#include <vector>

#include "dissq/hilbert.hpp"

namespace dissq::dissipation {

enum class Polarization { SigmaMinus = 0, Pi = 1, SigmaPlus = 2 };

Polarization parse_polarization(const std::string& tag);
std::string polarization_name(Polarization p);

// normalized over the sphere: integral of P sin(theta) dtheta dphi = 1
double emission_pattern(Polarization pol, double theta, double phi_az);
// same, from a string tag ("sigma-", "pi", "sigma+")
double emission_pattern(const std::string& pol, double theta, double phi_az);

// f = k_inc - sqrt(2) u, u = (sin(theta) cos(phi) - cos(theta)) / sqrt(2)
double recoil_factor(double theta, double phi_az, double k_inc = 1.0);

struct QuadratureNode {
    double theta = 0;
    double phi_az = 0;
    double weight = 0;  // solid-angle weight
};

struct RecoilGeometry {
    double eta = 0.257;
    std::vector<QuadratureNode> nodes;
    int series_order = 12;
};

// Gauss-Legendre in cos(theta) times trapezoid in phi
std::vector<QuadratureNode> product_quadrature(int n_theta, int n_phi);
RecoilGeometry make_geometry(double eta, int n_theta = 24, int n_phi = 24, int series_order = 12);

// incoherent mix of emission polarizations; entries indexed by Polarization
using EmissionMix = std::array<double, 3>;
EmissionMix pure_mix(Polarization p);
double pattern_value(const EmissionMix& mix, double theta, double phi_az);
double pattern_normalization(const RecoilGeometry& g, const EmissionMix& mix);
// pattern-weighted average of f^k
double recoil_moment(const RecoilGeometry& g, const EmissionMix& mix, double k_inc, int k);

// Linear map on N x N motional blocks that keeps the diagonal offset j-k.
// blocks[d + N - 1] acts on the offset-d diagonal, element t <-> (t + max(d,0), t + max(-d,0)).
class RecoilMap {
public:
    RecoilMap() = default;
    explicit RecoilMap(int n_fock);

    int n_fock() const { return n_; }
    const Mat& block(int d) const { return blocks_[d + n_ - 1]; }
    Mat& block(int d) { return blocks_[d + n_ - 1]; }

    Mat apply(const Mat& x) const;
    // apply(E_jk), entry (j2, k2); zero unless j2-k2 == j-k
    cplx element(int j2, int k2, int j, int k) const;
    size_t stored_entries() const;

    static RecoilMap identity(int n_fock);
    // exact displacement sandwich in the truncated space, averaged over nodes
    static RecoilMap quadrature(int n_fock, double eta, const std::vector<double>& weights,
                                const std::vector<double>& f);
    // Lamb-Dicke expansion with truncated ladder operators; moments[m] = <(eta f)^(2m)>
    static RecoilMap series(int n_fock, int order, const std::vector<double>& moments);

private:
    int n_ = 0;
    std::vector<Mat> blocks_;
};

// node-resolved inputs for a pattern and incident projection
void pattern_weights(const RecoilGeometry& g, const EmissionMix& mix, double k_inc, std::vector<double>& w,
                     std::vector<double>& f);

std::shared_ptr<const RecoilMap> quadrature_map(const RecoilGeometry& g, const EmissionMix& mix, double k_inc,
                                                int n_fock);
std::shared_ptr<const RecoilMap> series_map(const RecoilGeometry& g, const EmissionMix& mix, double k_inc,
                                            int n_fock);

}  // namespace dissq::dissipation
