// recoil.cpp — emission patterns, quadrature and series recoil maps
#include "dissq/recoil.hpp"

#include <gsl/gsl_integration.h>

#include <cmath>
#include <stdexcept>

namespace dissq::dissipation {

Polarization parse_polarization(const std::string& tag) {
    if (tag == "sigma-" || tag == "sigma_minus") return Polarization::SigmaMinus;
    if (tag == "pi") return Polarization::Pi;
    if (tag == "sigma+" || tag == "sigma_plus") return Polarization::SigmaPlus;
    throw std::invalid_argument("unknown polarization tag '" + tag + "'");
}

std::string polarization_name(Polarization p) {
    switch (p) {
        case Polarization::SigmaMinus: return "sigma-";
        case Polarization::Pi: return "pi";
        case Polarization::SigmaPlus: return "sigma+";
    }
    return "?";
}

double emission_pattern(Polarization pol, double theta, double) {
    const double c = std::cos(theta), s = std::sin(theta);
    if (pol == Polarization::Pi) return 3.0 / (8.0 * M_PI) * s * s;
    return 3.0 / (16.0 * M_PI) * (1.0 + c * c);
}

double emission_pattern(const std::string& pol, double theta, double phi_az) {
    return emission_pattern(parse_polarization(pol), theta, phi_az);
}

double recoil_factor(double theta, double phi_az, double k_inc) {
    const double u = (std::sin(theta) * std::cos(phi_az) - std::cos(theta)) / M_SQRT2;
    return k_inc - M_SQRT2 * u;
}

std::vector<QuadratureNode> product_quadrature(int n_theta, int n_phi) {
    if (n_theta < 1 || n_phi < 1) throw std::invalid_argument("product_quadrature: empty node list");
    gsl_integration_glfixed_table* tab = gsl_integration_glfixed_table_alloc(n_theta);
    std::vector<QuadratureNode> nodes;
    nodes.reserve(size_t(n_theta) * n_phi);
    for (int i = 0; i < n_theta; ++i) {
        double x, w;
        gsl_integration_glfixed_point(-1.0, 1.0, i, &x, &w, tab);
        for (int j = 0; j < n_phi; ++j)
            nodes.push_back({std::acos(x), 2.0 * M_PI * j / n_phi, w * 2.0 * M_PI / n_phi});
    }
    gsl_integration_glfixed_table_free(tab);
    return nodes;
}

RecoilGeometry make_geometry(double eta, int n_theta, int n_phi, int series_order) {
    RecoilGeometry g;
    g.eta = eta;
    g.nodes = product_quadrature(n_theta, n_phi);
    g.series_order = series_order;
    return g;
}

EmissionMix pure_mix(Polarization p) {
    EmissionMix m{0, 0, 0};
    m[int(p)] = 1.0;
    return m;
}

double pattern_value(const EmissionMix& mix, double theta, double phi_az) {
    double v = 0;
    for (int q = 0; q < 3; ++q)
        if (mix[q] != 0) v += mix[q] * emission_pattern(Polarization(q), theta, phi_az);
    return v;
}

double pattern_normalization(const RecoilGeometry& g, const EmissionMix& mix) {
    double s = 0;
    for (const auto& nd : g.nodes) s += nd.weight * pattern_value(mix, nd.theta, nd.phi_az);
    return s;
}

double recoil_moment(const RecoilGeometry& g, const EmissionMix& mix, double k_inc, int k) {
    double s = 0;
    for (const auto& nd : g.nodes)
        s += nd.weight * pattern_value(mix, nd.theta, nd.phi_az) * std::pow(recoil_factor(nd.theta, nd.phi_az, k_inc), k);
    return s;
}

void pattern_weights(const RecoilGeometry& g, const EmissionMix& mix, double k_inc, std::vector<double>& w,
                     std::vector<double>& f) {
    if (g.nodes.empty()) throw std::invalid_argument("recoil geometry has no quadrature nodes");
    w.resize(g.nodes.size());
    f.resize(g.nodes.size());
    for (size_t k = 0; k < g.nodes.size(); ++k) {
        const auto& nd = g.nodes[k];
        w[k] = nd.weight * pattern_value(mix, nd.theta, nd.phi_az);
        if (w[k] < 0) throw std::logic_error("negative quadrature weight");
        f[k] = recoil_factor(nd.theta, nd.phi_az, k_inc);
    }
}

RecoilMap::RecoilMap(int n_fock) : n_(n_fock), blocks_(2 * n_fock - 1) {
    for (int d = -(n_ - 1); d <= n_ - 1; ++d) {
        const int len = n_ - std::abs(d);
        block(d) = Mat::Zero(len, len);
    }
}

Mat RecoilMap::apply(const Mat& x) const {
    if (x.rows() != n_ || x.cols() != n_) throw std::invalid_argument("RecoilMap::apply: shape mismatch");
    Mat y = Mat::Zero(n_, n_);
    for (int d = -(n_ - 1); d <= n_ - 1; ++d) {
        const int len = n_ - std::abs(d), r0 = std::max(d, 0), c0 = std::max(-d, 0);
        Vec v(len);
        for (int t = 0; t < len; ++t) v(t) = x(r0 + t, c0 + t);
        Vec out = block(d) * v;
        for (int t = 0; t < len; ++t) y(r0 + t, c0 + t) = out(t);
    }
    return y;
}

cplx RecoilMap::element(int j2, int k2, int j, int k) const {
    const int d = j - k;
    if (j2 - k2 != d) return 0.0;
    const int r0 = std::max(d, 0);
    return block(d)(j2 - r0, j - r0);
}

size_t RecoilMap::stored_entries() const {
    size_t s = 0;
    for (const auto& b : blocks_) s += size_t(b.size());
    return s;
}

RecoilMap RecoilMap::identity(int n_fock) {
    RecoilMap r(n_fock);
    for (auto& b : r.blocks_) b.setIdentity();
    return r;
}

RecoilMap RecoilMap::quadrature(int n_fock, double eta, const std::vector<double>& weights,
                                const std::vector<double>& f) {
    if (weights.empty() || weights.size() != f.size())
        throw std::invalid_argument("RecoilMap::quadrature: empty or mismatched node list");
    const int N = n_fock;
    Eigen::MatrixXd x = Eigen::MatrixXd::Zero(N, N);
    for (int n = 1; n < N; ++n) x(n - 1, n) = x(n, n - 1) = std::sqrt(double(n));
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(x);
    const Eigen::MatrixXd& V = es.eigenvectors();
    const Eigen::VectorXd& lam = es.eigenvalues();

    Mat K = Mat::Zero(N, N);
    for (size_t k = 0; k < weights.size(); ++k) {
        if (weights[k] == 0) continue;
        const double s = eta * f[k];
        Vec e(N);
        for (int a = 0; a < N; ++a) e(a) = std::polar(1.0, s * lam(a));
        K.noalias() += weights[k] * (e * e.adjoint());
    }

    // U(a, j2*N + j) = V(j2,a) V(j,a); G = U^T K
    Eigen::MatrixXd U(N, N * N);
    for (int j2 = 0; j2 < N; ++j2)
        for (int j = 0; j < N; ++j)
            for (int a = 0; a < N; ++a) U(a, j2 * N + j) = V(j2, a) * V(j, a);
    Mat G = U.transpose().cast<cplx>() * K;

    RecoilMap r(N);
    for (int d = -(N - 1); d <= N - 1; ++d) {
        const int len = N - std::abs(d), r0 = std::max(d, 0), c0 = std::max(-d, 0);
        Mat& B = r.block(d);
        for (int t2 = 0; t2 < len; ++t2) {
            const int j2 = r0 + t2, k2 = c0 + t2;
            for (int t = 0; t < len; ++t) {
                const int j = r0 + t, k = c0 + t;
                cplx s = 0;
                for (int b = 0; b < N; ++b) s += G(j2 * N + j, b) * (V(k, b) * V(k2, b));
                B(t2, t) = s;
            }
        }
    }
    return r;
}

RecoilMap RecoilMap::series(int n_fock, int order, const std::vector<double>& moments) {
    if (order < 0 || order % 2 != 0) throw std::invalid_argument("series order must be even and >= 0");
    const int N = n_fock, mmax = order / 2;
    if (int(moments.size()) < mmax + 1) throw std::invalid_argument("RecoilMap::series: missing moments");
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(N, N);
    for (int n = 1; n < N; ++n) a(n - 1, n) = std::sqrt(double(n));
    const Eigen::MatrixXd ad = a.transpose();
    std::vector<Eigen::MatrixXd> ap(mmax + 1), adp(mmax + 1);
    ap[0] = adp[0] = Eigen::MatrixXd::Identity(N, N);
    for (int k = 1; k <= mmax; ++k) ap[k] = ap[k - 1] * a, adp[k] = adp[k - 1] * ad;
    std::vector<double> fact(2 * mmax + 2, 1.0);
    for (size_t k = 1; k < fact.size(); ++k) fact[k] = fact[k - 1] * double(k);

    RecoilMap r(N);
    for (int m = 0; m <= mmax; ++m) {
        if (moments[m] == 0) continue;
        for (int n = 0; n <= m; ++n) {
            for (int p = n - m; p <= n; ++p) {
                const double sign = ((m + p) % 2 == 0) ? 1.0 : -1.0;
                const double c = moments[m] * sign / (fact[n] * fact[n - p] * fact[m - n] * fact[m - n + p]);
                const Eigen::MatrixXd L = ap[n] * adp[n - p];
                const Eigen::MatrixXd R = adp[m - n + p] * ap[m - n];
                for (int d = -(N - 1); d <= N - 1; ++d) {
                    const int len = N - std::abs(d), r0 = std::max(d, 0), c0 = std::max(-d, 0);
                    Mat& B = r.block(d);
                    for (int t2 = 0; t2 < len; ++t2)
                        for (int t = 0; t < len; ++t) {
                            const double l = L(r0 + t2, r0 + t);
                            if (l == 0) continue;
                            B(t2, t) += c * l * R(c0 + t, c0 + t2);
                        }
                }
            }
        }
    }
    return r;
}

std::shared_ptr<const RecoilMap> quadrature_map(const RecoilGeometry& g, const EmissionMix& mix, double k_inc,
                                                int n_fock) {
    std::vector<double> w, f;
    pattern_weights(g, mix, k_inc, w, f);
    return std::make_shared<const RecoilMap>(RecoilMap::quadrature(n_fock, g.eta, w, f));
}

std::shared_ptr<const RecoilMap> series_map(const RecoilGeometry& g, const EmissionMix& mix, double k_inc,
                                            int n_fock) {
    if (g.series_order < 0 || g.series_order % 2 != 0) throw std::invalid_argument("series order must be even");
    const int mmax = g.series_order / 2;
    std::vector<double> mom(mmax + 1);
    for (int m = 0; m <= mmax; ++m)
        mom[m] = std::pow(g.eta, 2 * m) * recoil_moment(g, mix, k_inc, 2 * m);
    return std::make_shared<const RecoilMap>(RecoilMap::series(n_fock, g.series_order, mom));
}

}  // namespace dissq::dissipation
