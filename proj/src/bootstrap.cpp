// bootstrap.cpp — resampling with per-replica streams, bias-corrected percentile intervals
#include <gsl/gsl_cdf.h>
#include <gsl/gsl_statistics_double.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>
#include <functional>
#include <thread>

#include "dissq/readout.hpp"

namespace dissq::readout {

BootstrapResult bca_interval(double point, std::vector<double> replicas, double level) {
    if (!(level > 0 && level < 1)) throw std::invalid_argument("bootstrap: level must lie in (0, 1)");
    if (replicas.empty()) throw std::invalid_argument("bootstrap: no replicas");
    for (double v : replicas)
        if (!std::isfinite(v)) throw std::runtime_error("bootstrap: non-finite replica statistic");
    std::sort(replicas.begin(), replicas.end());
    BootstrapResult r;
    r.point = point;
    if (replicas.front() == replicas.back()) {
        r.lo = r.hi = point;
        r.degenerate = true;
        r.replicas = std::move(replicas);
        return r;
    }
    const double B = double(replicas.size());
    const auto lo_it = std::lower_bound(replicas.begin(), replicas.end(), point);
    const auto hi_it = std::upper_bound(replicas.begin(), replicas.end(), point);
    double frac = (double(lo_it - replicas.begin()) + 0.5 * double(hi_it - lo_it)) / B;
    frac = std::clamp(frac, 0.5 / B, 1 - 0.5 / B);
    r.z0 = gsl_cdf_ugaussian_Pinv(frac);
    const double za = gsl_cdf_ugaussian_Pinv((1 - level) / 2);
    const double a1 = gsl_cdf_ugaussian_P(2 * r.z0 + za);
    const double a2 = gsl_cdf_ugaussian_P(2 * r.z0 - za);
    r.lo = gsl_stats_quantile_from_sorted_data(replicas.data(), 1, replicas.size(), a1);
    r.hi = gsl_stats_quantile_from_sorted_data(replicas.data(), 1, replicas.size(), a2);
    r.replicas = std::move(replicas);
    return r;
}

BootstrapResult bootstrap_ci(const std::vector<std::vector<int>>& groups, const Statistic& stat,
                             const BootstrapOptions& opt) {
    if (opt.n_resamples < 1) throw std::invalid_argument("bootstrap: n_resamples must be >= 1");
    for (const auto& g : groups)
        if (g.empty()) throw std::invalid_argument("bootstrap: empty group");
    const double point = stat(groups);
    std::vector<double> reps(size_t(opt.n_resamples));
    auto worker = [&](int first, int last, std::exception_ptr& err) {
        try {
            std::vector<std::vector<int>> rs(groups.size());
            for (int i = first; i < last; ++i) {
                std::seed_seq sq{std::uint32_t(opt.seed), std::uint32_t(opt.seed >> 32), std::uint32_t(i), 0x5eedu};
                std::mt19937_64 rng(sq);
                for (size_t g = 0; g < groups.size(); ++g) {
                    std::uniform_int_distribution<size_t> pick(0, groups[g].size() - 1);
                    rs[g].resize(groups[g].size());
                    for (auto& v : rs[g]) v = groups[g][pick(rng)];
                }
                reps[size_t(i)] = stat(rs);
            }
        } catch (...) {
            err = std::current_exception();
        }
    };
    const int nt = std::max(1, std::min(opt.threads, opt.n_resamples));
    std::vector<std::exception_ptr> errs(static_cast<size_t>(nt));
    if (nt == 1) {
        worker(0, opt.n_resamples, errs[0]);
    } else {
        std::vector<std::thread> pool;
        for (int t = 0; t < nt; ++t) {
            const int a = int(long(opt.n_resamples) * t / nt), b = int(long(opt.n_resamples) * (t + 1) / nt);
            pool.emplace_back(worker, a, b, std::ref(errs[size_t(t)]));
        }
        for (auto& th : pool) th.join();
    }
    for (auto& e : errs)
        if (e) std::rethrow_exception(e);
    return bca_interval(point, std::move(reps), opt.level);
}

BootstrapResult bootstrap_x(const ConditionCounts& counts, const DetectionModel& model, const BootstrapOptions& opt) {
    const std::vector<std::vector<int>> groups(counts.begin(), counts.end());
    return bootstrap_ci(
        groups,
        [&](const std::vector<std::vector<int>>& g) {
            return estimate_populations({g[0], g[1], g[2]}, model).x;
        },
        opt);
}

}  // namespace dissq::readout
