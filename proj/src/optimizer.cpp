// optimizer.cpp — model assembly, objectives, multi-start Nelder-Mead, eta sweep, resets, error budget
#include "dissq/optimizer.hpp"

#include <gsl/gsl_fit.h>
#include <gsl/gsl_multimin.h>
#include <gsl/gsl_qrng.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <stdexcept>
#include <thread>

namespace dissq::opt {

using atomic::RateTable;
using protocol::ProtocolParams;

namespace {

// runs f(i) for i in [0, n) on up to `threads` workers; first exception wins
template <class F>
void parallel_for(int n, int threads, F&& f) {
    const int nt = std::max(1, std::min(threads, n));
    if (nt == 1) {
        for (int i = 0; i < n; ++i) f(i);
        return;
    }
    std::atomic<int> next{0};
    std::vector<std::exception_ptr> errs(static_cast<size_t>(nt));
    std::vector<std::thread> pool;
    for (int t = 0; t < nt; ++t)
        pool.emplace_back([&, t] {
            try {
                for (int i = next++; i < n; i = next++) f(i);
            } catch (...) {
                errs[size_t(t)] = std::current_exception();
            }
        });
    for (auto& th : pool) th.join();
    for (auto& e : errs)
        if (e) std::rethrow_exception(e);
}

core::DensityMatrix ground_state(const core::HilbertLayout& l) {
    return core::projector(core::basis_state(l, core::Down, core::Down, 0));
}

double sigmoid(double u) { return 1.0 / (1.0 + std::exp(-u)); }

}  // namespace

Model build_model(const ProtocolParams& p, const RateTable* rates, const ModelOptions& opt) {
    p.validate();
    if (opt.n_max < 1) throw std::invalid_argument("build_model: n_max must be >= 1");
    const auto layout = core::build_layout(opt.n_max);
    const auto geom = dissipation::make_geometry(opt.recoil ? p.eta : 0.0, opt.n_theta, opt.n_phi, opt.series_order);
    dissipation::MapCache cache(geom, layout.n_fock, opt.form);
    auto channels = dissipation::repump_channels(p, cache, opt.repump);
    if (rates) {
        rates->validate();
        if (!rates->raman_rates.empty()) channels.append(dissipation::raman_channels(rates->raman_rates, cache));
        if (rates->rayleigh_rate > 0)
            channels.append(dissipation::rayleigh_channels(rates->rayleigh_rate, rates->rayleigh_mix, cache));
    }
    auto H = protocol::total_hamiltonian(p, layout);
    engine::Generator gen(layout, H, channels);
    return Model{layout, p, std::move(channels), std::move(H), std::move(gen)};
}

const char* ControlPoint::name(int i) {
    static const char* names[kDim] = {"b_pi", "r_plus", "r_q", "omega_c_ratio", "t_rep_ratio"};
    if (i < 0 || i >= kDim) throw std::out_of_range("ControlPoint: parameter index");
    return names[i];
}

void OptSpace::validate() const {
    for (int i = 0; i < ControlPoint::kDim; ++i)
        if (!(lo[size_t(i)] < hi[size_t(i)]))
            throw std::invalid_argument(std::string("OptSpace: empty interval for ") + ControlPoint::name(i));
    if (!(lo[0] >= 0 && hi[0] <= 1 && lo[1] >= 0 && hi[1] <= 1 && lo[2] > 0 && hi[2] < 1 && lo[3] > 0 && lo[4] > 0))
        throw std::invalid_argument("OptSpace: bounds outside the physical domain");
    if (!(p_blue_fraction > 0 && p_blue_fraction < 1)) throw std::invalid_argument("OptSpace: p_blue_fraction outside (0,1)");
    if (!(omega_ba > 0)) throw std::invalid_argument("OptSpace: omega_ba must be > 0");
}

bool OptSpace::contains(const ControlPoint& c) const {
    const auto a = c.to_array();
    for (size_t i = 0; i < a.size(); ++i)
        if (!(a[i] >= lo[i] && a[i] <= hi[i])) return false;
    return true;
}

RateTable control_rates(const atomic::AtomModel& m, const ControlPoint& c, double eta, const OptSpace& space) {
    atomic::LargeDetuningBeams b;
    b.b_pi = c.b_pi;
    b.r_plus = c.r_plus;
    b.r_q = c.r_q;
    b.p_blue_fraction = space.p_blue_fraction;
    return atomic::large_detuning_table(m, eta, b, space.omega_ba);
}

ProtocolParams control_params(const ControlPoint& c, double eta, const RateTable& rates) {
    ProtocolParams p;
    p.omega_ba = rates.omega_ba;
    p.omega_bq = rates.omega_bq;
    p.omega_c = c.oc_ratio * rates.omega_ba;
    p.t_rep = c.trep_ratio * M_PI / rates.omega_ba;
    p.eta = eta;
    p.stark = rates.stark;
    p.omega_res = rates.omega_res;
    return p;
}

ObjectiveMode parse_objective_mode(const std::string& s) {
    if (s == "steady") return ObjectiveMode::Steady;
    if (s == "plateau") return ObjectiveMode::Plateau;
    if (s == "horizon") return ObjectiveMode::Horizon;
    throw std::invalid_argument("unknown objective mode '" + s + "' (steady, plateau, horizon)");
}

double singlet_mean_phonon(const core::DensityMatrix& rho, const core::HilbertLayout& l) {
    double ps = 0, pn = 0;
    for (int n = 0; n < l.n_fock; ++n) {
        const double pop = core::fidelity(rho, core::singlet(l, n));
        ps += pop;
        pn += n * pop;
    }
    return ps > 0 ? pn / ps : 0.0;
}

ObjectiveValue model_objective(const Model& model, const ObjectiveOptions& opt) {
    const auto& l = model.layout;
    const auto target = core::singlet(l, 0);
    ObjectiveValue v;
    core::DensityMatrix rho;
    switch (opt.mode) {
    case ObjectiveMode::Steady:
        rho = engine::steady_state(model.generator, ground_state(l), {opt.steady_eps});
        break;
    case ObjectiveMode::Horizon: {
        engine::EvolutionConfig cfg;
        cfg.t_final = opt.horizon;
        cfg.sample_times = {opt.horizon};
        rho = engine::evolve(ground_state(l), model.generator, cfg, target).final_state;
        break;
    }
    case ObjectiveMode::Plateau: {
        // sampled once per repump time; stationary once the drift stays small for a whole chunk
        const double tr = model.params.t_rep;
        const int per_chunk = 50;
        engine::EvolutionConfig cfg;
        cfg.t_final = per_chunk * tr;
        cfg.sample_times = engine::uniform_times(cfg.t_final, per_chunk);
        rho = ground_state(l);
        double prev = core::fidelity(rho, target), t = 0;
        int quiet = 0;
        v.converged = false;
        while (t < opt.plateau_cap && !v.converged) {
            const auto tj = engine::evolve(rho, model.generator, cfg, target);
            for (size_t k = 1; k < tj.fidelities.size(); ++k) {
                const double f = tj.fidelities[k];
                quiet = std::abs(f - prev) <= opt.drift_tol * std::abs(f) ? quiet + 1 : 0;
                prev = f;
            }
            rho = tj.final_state;
            t += cfg.t_final;
            v.converged = quiet >= per_chunk;
        }
        break;
    }
    }
    v.fidelity = std::clamp(core::fidelity(rho, target), 0.0, 1.0);
    v.mean_phonon = core::mean_phonon(rho, l);
    v.singlet_phonon = singlet_mean_phonon(rho, l);
    v.checks = core::check_state(rho, l.total_dim <= 400);
    return v;
}

ObjectiveValue large_detuning_objective(const atomic::AtomModel& m, const ControlPoint& c, double eta,
                                        const OptSpace& space, const ObjectiveOptions& opt) {
    if (!space.contains(c)) throw std::invalid_argument("objective: control point outside the search space");
    const auto t = control_rates(m, c, eta, space);
    auto p = control_params(c, eta, t);
    if (opt.omega_c_override >= 0) p.omega_c = opt.omega_c_override;
    const auto model = build_model(p, &t, opt.model);
    return model_objective(model, opt);
}

namespace {

struct StartRun {
    StartRecord rec;
    std::vector<double> values;
};

StartRun run_start(const atomic::AtomModel& m, double eta, const ControlPoint& start, const OptSpace& space,
                   const ObjectiveOptions& obj, const OptOptions& opt, int budget) {
    std::vector<int> idx;
    for (int i = 0; i < ControlPoint::kDim; ++i)
        if (space.free[size_t(i)]) idx.push_back(i);
    const size_t n = idx.size();
    const auto base = start.to_array();

    struct Ctx {
        const atomic::AtomModel* m;
        double eta;
        const OptSpace* space;
        const ObjectiveOptions* obj;
        const std::vector<int>* idx;
        std::array<double, ControlPoint::kDim> base;
        StartRun* run;
        std::exception_ptr err;

        ControlPoint point(const gsl_vector* u) const {
            auto a = base;
            for (size_t k = 0; k < idx->size(); ++k) {
                const size_t i = size_t((*idx)[k]);
                a[i] = space->lo[i] + (space->hi[i] - space->lo[i]) * sigmoid(gsl_vector_get(u, k));
            }
            return ControlPoint::from_array(a);
        }
    };
    StartRun run;
    run.rec.start = start;
    run.rec.best = start;
    run.rec.best_fidelity = -1;
    Ctx ctx{&m, eta, &space, &obj, &idx, base, &run, nullptr};

    gsl_multimin_function fn;
    fn.n = n;
    fn.params = &ctx;
    fn.f = [](const gsl_vector* u, void* pv) -> double {
        auto& c = *static_cast<Ctx*>(pv);
        if (c.err) return 10.0;
        try {
            const ControlPoint pt = c.point(u);
            const double f = large_detuning_objective(*c.m, pt, c.eta, *c.space, *c.obj).fidelity;
            c.run->values.push_back(f);
            if (f > c.run->rec.best_fidelity) {
                c.run->rec.best_fidelity = f;
                c.run->rec.best = pt;
            }
            return -f;
        } catch (...) {
            c.err = std::current_exception();
            return 10.0;
        }
    };

    if (n == 0) {
        run.rec.best_fidelity = large_detuning_objective(m, start, eta, space, obj).fidelity;
        run.values.push_back(run.rec.best_fidelity);
        run.rec.evaluations = 1;
        run.rec.converged = true;
        return run;
    }

    gsl_vector* u = gsl_vector_alloc(n);
    gsl_vector* step = gsl_vector_alloc(n);
    for (size_t k = 0; k < n; ++k) {
        const size_t i = size_t(idx[k]);
        const double lo = space.lo[i], hi = space.hi[i];
        const double x = std::clamp(base[i], lo + 1e-6 * (hi - lo), hi - 1e-6 * (hi - lo));
        const double s = (x - lo) / (hi - lo);
        gsl_vector_set(u, k, std::log(s / (1 - s)));
        // a step of initial_step * range in x, measured in logit units
        gsl_vector_set(step, k, std::clamp(opt.initial_step / (s * (1 - s)), 0.05, 2.0));
    }
    gsl_multimin_fminimizer* s = gsl_multimin_fminimizer_alloc(gsl_multimin_fminimizer_nmsimplex2, n);
    gsl_multimin_fminimizer_set(s, &fn, u, step);
    while (!ctx.err && int(run.values.size()) < budget) {
        if (gsl_multimin_fminimizer_iterate(s) != GSL_SUCCESS) break;
        if (gsl_multimin_test_size(gsl_multimin_fminimizer_size(s), opt.size_tol) == GSL_SUCCESS) {
            run.rec.converged = true;
            break;
        }
    }
    gsl_multimin_fminimizer_free(s);
    gsl_vector_free(u);
    gsl_vector_free(step);
    if (ctx.err) std::rethrow_exception(ctx.err);
    run.rec.evaluations = int(run.values.size());
    return run;
}

}  // namespace

OptResult optimize_large_detuning(const atomic::AtomModel& m, double eta, const ControlPoint& initial,
                                  const OptSpace& space, const ObjectiveOptions& obj, const OptOptions& opt) {
    space.validate();
    if (opt.starts < 1) throw std::invalid_argument("optimize: starts must be >= 1");
    if (opt.budget < 100) throw std::invalid_argument("optimize: budget must be >= 100 evaluations");
    if (!space.contains(initial)) throw std::invalid_argument("optimize: initial point outside bounds");

    std::vector<int> idx;
    for (int i = 0; i < ControlPoint::kDim; ++i)
        if (space.free[size_t(i)]) idx.push_back(i);

    std::vector<ControlPoint> starts;
    if (opt.include_initial) starts.push_back(initial);
    if (!idx.empty()) {
        gsl_qrng* q = gsl_qrng_alloc(gsl_qrng_sobol, unsigned(idx.size()));
        std::vector<double> v(idx.size());
        gsl_qrng_get(q, v.data());  // origin
        while (int(starts.size()) < opt.starts) {
            gsl_qrng_get(q, v.data());
            auto a = initial.to_array();
            for (size_t k = 0; k < idx.size(); ++k) {
                const size_t i = size_t(idx[k]);
                a[i] = space.lo[i] + (space.hi[i] - space.lo[i]) * (0.05 + 0.9 * v[k]);
            }
            starts.push_back(ControlPoint::from_array(a));
        }
        gsl_qrng_free(q);
    }
    starts.resize(size_t(std::max(1, std::min<int>(opt.starts, int(starts.size())))));

    const int per_start = std::max(1, opt.budget / int(starts.size()));
    std::vector<StartRun> runs(starts.size());
    parallel_for(int(starts.size()), opt.threads,
                 [&](int i) { runs[size_t(i)] = run_start(m, eta, starts[size_t(i)], space, obj, opt, per_start); });

    OptResult r;
    r.best_fidelity = -1;
    r.converged = true;
    double best = -1;
    for (auto& run : runs) {
        for (double v : run.values) {
            best = std::max(best, v);
            r.convergence_trace.push_back(best);
        }
        r.evaluation_count += run.rec.evaluations;
        if (run.rec.best_fidelity > r.best_fidelity) {
            r.best_fidelity = run.rec.best_fidelity;
            r.best_params = run.rec.best;
        }
        r.converged = r.converged && run.rec.converged;
        r.starts.push_back(run.rec);
    }
    return r;
}

std::array<double, ControlPoint::kDim> objective_gradient(const atomic::AtomModel& m, const ControlPoint& c, double eta,
                                                          const OptSpace& space, const ObjectiveOptions& obj,
                                                          double step) {
    std::array<double, ControlPoint::kDim> g{};
    const auto a = c.to_array();
    const double f0 = large_detuning_objective(m, c, eta, space, obj).fidelity;
    for (size_t i = 0; i < a.size(); ++i) {
        if (!space.free[i]) continue;
        auto up = a, dn = a;
        up[i] = std::min(a[i] + step, space.hi[i]);
        dn[i] = std::max(a[i] - step, space.lo[i]);
        const double fu = up[i] == a[i] ? f0 : large_detuning_objective(m, ControlPoint::from_array(up), eta, space, obj).fidelity;
        const double fd = dn[i] == a[i] ? f0 : large_detuning_objective(m, ControlPoint::from_array(dn), eta, space, obj).fidelity;
        g[i] = (fu - fd) / (up[i] - dn[i]);
    }
    return g;
}

std::vector<double> sensitivity_scan(const atomic::AtomModel& m, const ControlPoint& c, int param,
                                     const std::vector<double>& factors, double eta, const OptSpace& space,
                                     const ObjectiveOptions& obj, int threads) {
    if (param < 0 || param >= ControlPoint::kDim) throw std::out_of_range("sensitivity_scan: parameter index");
    std::vector<double> out(factors.size());
    parallel_for(int(factors.size()), threads, [&](int k) {
        auto a = c.to_array();
        a[size_t(param)] *= factors[size_t(k)];
        const auto pt = ControlPoint::from_array(a);
        out[size_t(k)] = space.contains(pt) ? large_detuning_objective(m, pt, eta, space, obj).fidelity : NAN;
    });
    return out;
}

EtaMode parse_eta_mode(const std::string& s) {
    if (s == "frozen") return EtaMode::Frozen;
    if (s == "reoptimize") return EtaMode::Reoptimize;
    throw std::invalid_argument("unknown eta mode '" + s + "' (frozen, reoptimize)");
}

std::vector<EtaPoint> eta_sweep(const atomic::AtomModel& m, const std::vector<double>& etas, const ControlPoint& c,
                                EtaMode mode, const OptSpace& space, const ObjectiveOptions& obj, int budget_per_eta,
                                int threads) {
    for (double e : etas)
        if (!(e > 0 && e <= 0.3)) throw std::invalid_argument("eta_sweep: eta must lie in (0, 0.3]");
    std::vector<EtaPoint> out(etas.size());
    parallel_for(int(etas.size()), threads, [&](int k) {
        EtaPoint& pt = out[size_t(k)];
        pt.eta = etas[size_t(k)];
        if (mode == EtaMode::Frozen) {
            pt.error = 1 - large_detuning_objective(m, c, pt.eta, space, obj).fidelity;
            pt.oc_ratio = c.oc_ratio;
            pt.trep_ratio = c.trep_ratio;
            pt.evaluations = 1;
            return;
        }
        OptSpace sp = space;
        sp.free = {false, false, false, true, true};
        OptOptions oo;
        oo.starts = 1;
        oo.budget = std::max(100, budget_per_eta);
        oo.initial_step = 0.05;
        oo.size_tol = 1e-3;
        const auto r = optimize_large_detuning(m, pt.eta, c, sp, obj, oo);
        pt.error = 1 - r.best_fidelity;
        pt.oc_ratio = r.best_params.oc_ratio;
        pt.trep_ratio = r.best_params.trep_ratio;
        pt.evaluations = r.evaluation_count;
    });
    return out;
}

double log_log_slope(const std::vector<EtaPoint>& pts, double lo, double hi) {
    std::vector<double> x, y;
    for (const auto& p : pts)
        if (p.eta >= lo && p.eta <= hi && p.error > 0) x.push_back(std::log(p.eta)), y.push_back(std::log(p.error));
    if (x.size() < 2) throw std::invalid_argument("log_log_slope: need two points in range");
    double c0, c1, c00, c01, c11, ss;
    gsl_fit_linear(x.data(), 1, y.data(), 1, x.size(), &c0, &c1, &c00, &c01, &c11, &ss);
    return c1;
}

InterleaveResult cooling_interleave(const Model& model, double reset_period, const ObjectiveOptions& obj,
                                    int samples_per_period, int max_periods, double tol) {
    if (!(reset_period > 0)) throw std::invalid_argument("cooling_interleave: reset_period must be > 0");
    if (samples_per_period < 2) throw std::invalid_argument("cooling_interleave: samples_per_period must be >= 2");
    const auto& l = model.layout;
    const auto target = core::singlet(l, 0);
    InterleaveResult r;
    core::DensityMatrix rho = engine::steady_state(model.generator, ground_state(l), {obj.steady_eps});
    r.baseline_fidelity = core::fidelity(rho, target);
    r.baseline_phonon = singlet_mean_phonon(rho, l);

    engine::EvolutionConfig cfg;
    cfg.t_final = reset_period;
    cfg.sample_times = engine::uniform_times(reset_period, samples_per_period);
    double prev = -1;
    for (r.periods = 1; r.periods <= max_periods; ++r.periods) {
        rho = engine::reset_motion(rho, l);
        const auto tj = engine::evolve(rho, model.generator, cfg, target);
        double avg = 0;
        for (size_t k = 1; k < tj.times.size(); ++k)
            avg += 0.5 * (tj.fidelities[k] + tj.fidelities[k - 1]) * (tj.times[k] - tj.times[k - 1]);
        avg /= reset_period;
        r.fidelity = avg;
        r.post_reset_fidelity = tj.fidelities.front();
        r.pre_reset_phonon = tj.mean_phonons.back();
        rho = tj.final_state;
        if (std::abs(avg - prev) < tol) break;
        prev = avg;
    }
    r.periods = std::min(r.periods, max_periods);
    return r;
}

FiniteConfig preset_315() {
    FiniteConfig c;
    c.name = "315";
    c.drive.omega_bq = 2 * M_PI * 6.56e3;
    c.drive.omega_ba = 2 * M_PI * 10.03e3;
    c.drive.detuning_hz = -315e9;
    c.omega_c = 2 * M_PI * 4.08e3;
    c.t_rep = 34e-6;
    c.residual_reference = c.drive;
    return c;
}

FiniteConfig preset_450() {
    FiniteConfig c;
    c.name = "450";
    c.drive.omega_bq = 2 * M_PI * 3.43e3;
    c.drive.omega_ba = 2 * M_PI * 5.50e3;
    c.drive.detuning_hz = -450e9;
    c.omega_c = 2 * M_PI * 1.77e3;
    c.t_rep = 69.5e-6;
    c.residual_reference = preset_315().drive;
    return c;
}

Model build_finite_model(const atomic::AtomModel& m, const FiniteConfig& c, const ModelOptions& opt) {
    atomic::MeasuredDrive d = c.drive;
    if (c.residual && c.residual_reference_rate > 0)
        d.r_pi = atomic::calibrate_r_pi(m, c.residual_reference, c.eta, c.residual_reference_rate);
    const RateTable t = atomic::finite_detuning_table(m, d, c.eta);
    ProtocolParams p;
    p.omega_bq = t.omega_bq;
    p.omega_ba = t.omega_ba;
    p.omega_c = c.omega_c;
    p.phi = c.phi;
    p.t_rep = c.t_rep;
    p.eta = c.eta;
    p.rabi_imbalance = c.rabi_imbalance;
    p.stark = t.stark;
    p.omega_res = c.residual ? t.omega_res : 0.0;
    ModelOptions o = opt;
    o.recoil = opt.recoil && c.recoil;
    return build_model(p, c.scattering ? &t : nullptr, o);
}

double TimeSeries::peak_singlet() const {
    double best = 0;
    for (const auto& p : populations) best = std::max(best, p[2]);
    return best;
}

double TimeSeries::plateau_singlet(double t_lo, double t_hi) const {
    double s = 0;
    int n = 0;
    for (size_t k = 0; k < times.size(); ++k)
        if (times[k] >= t_lo - 1e-12 && times[k] <= t_hi + 1e-12) s += populations[k][2], ++n;
    if (n == 0) throw std::invalid_argument("plateau_singlet: no samples in window");
    return s / n;
}

TimeSeries time_sweep(const Model& model, const engine::EvolutionConfig& cfg) {
    const auto tj = engine::evolve(ground_state(model.layout), model.generator, cfg, core::singlet(model.layout, 0));
    TimeSeries ts;
    ts.times = tj.times;
    ts.fidelity = tj.fidelities;
    ts.mean_phonon = tj.mean_phonons;
    ts.populations = tj.populations;
    ts.diag = tj.diag;
    return ts;
}

std::vector<std::string> budget_cases() {
    return {"nominal_450",       "nominal_315",       "phi_error_315",    "t_rep_51us_315",
            "no_residual_315",   "no_residual_450",   "phi_only",         "imbalance_only",
            "residual_only_315", "residual_only_450", "ideal_315",        "ideal_450"};
}

FiniteConfig budget_case(const std::string& name) {
    auto ideal = [](FiniteConfig c) {
        c.scattering = false;
        c.residual = false;
        c.recoil = false;
        return c;
    };
    FiniteConfig c;
    if (name == "nominal_450") c = preset_450();
    else if (name == "nominal_315") c = preset_315();
    else if (name == "phi_error_315") c = preset_315(), c.phi = M_PI + 0.05;
    else if (name == "t_rep_51us_315") c = preset_315(), c.t_rep = 51e-6;
    else if (name == "no_residual_315") c = preset_315(), c.residual = false;
    else if (name == "no_residual_450") c = preset_450(), c.residual = false;
    else if (name == "phi_only") c = ideal(preset_450()), c.phi = M_PI + 0.05;
    else if (name == "imbalance_only") c = ideal(preset_450()), c.rabi_imbalance = 0.017;
    else if (name == "residual_only_315") c = ideal(preset_315()), c.residual = true;
    else if (name == "residual_only_450") c = ideal(preset_450()), c.residual = true;
    else if (name == "ideal_315") c = ideal(preset_315());
    else if (name == "ideal_450") c = ideal(preset_450());
    else throw std::invalid_argument("unknown error-budget case '" + name + "'");
    c.name = name;
    return c;
}

std::vector<BudgetRow> error_budget(const atomic::AtomModel& m, const std::vector<std::string>& cases,
                                    const ModelOptions& model, const engine::EvolutionConfig& cfg, int threads) {
    std::vector<FiniteConfig> cfgs;
    for (const auto& c : cases) cfgs.push_back(budget_case(c));
    std::vector<BudgetRow> rows(cases.size());
    parallel_for(int(cases.size()), threads, [&](int i) {
        const auto mdl = build_finite_model(m, cfgs[size_t(i)], model);
        const auto ts = time_sweep(mdl, cfg);
        rows[size_t(i)] = {cases[size_t(i)], ts.peak_singlet(), ts.plateau_singlet(6e-3, 16e-3)};
    });
    return rows;
}

}  // namespace dissq::opt
