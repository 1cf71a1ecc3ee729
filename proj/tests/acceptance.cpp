// acceptance.cpp — end-to-end acceptance criteria, one PASS/FAIL line each
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <map>
#include <iostream>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "dissq/optimizer.hpp"
#include "dissq/readout.hpp"
#include "oracles.hpp"

using namespace dissq;

namespace {

const atomic::AtomModel& atom() {
    static const auto m = atomic::AtomModel::beryllium9();
    return m;
}

struct Outcome {
    bool pass = false;
    std::string summary;
    std::vector<std::string> notes;
};

std::string f(double v, int prec = 5) {
    char b[48];
    std::snprintf(b, sizeof b, "%.*g", prec, v);
    return b;
}

bool within(double v, double target, double tol) { return std::abs(v - target) <= tol; }

// production settings for time-resolved runs
constexpr int kProductionNmax = 16;

opt::ModelOptions production_model() {
    opt::ModelOptions mo;
    mo.n_max = kProductionNmax;
    return mo;
}

engine::EvolutionConfig sweep_config(double t_final = 16e-3, int n = 64) {
    engine::EvolutionConfig cfg;
    cfg.t_final = t_final;
    cfg.sample_times = engine::uniform_times(t_final, n);
    return cfg;
}

// diagnostics of every production run, checked by the conservation criterion
std::vector<std::pair<std::string, engine::Diagnostics>>& production_log() {
    static std::vector<std::pair<std::string, engine::Diagnostics>> log;
    return log;
}

// time sweeps shared by the finite-detuning and budget criteria
const opt::TimeSeries& finite_sweep(const std::string& name) {
    static std::map<std::string, opt::TimeSeries> cache;
    auto it = cache.find(name);
    if (it != cache.end()) return it->second;
    const auto model = opt::build_finite_model(atom(), opt::budget_case(name), production_model());
    auto ts = opt::time_sweep(model, sweep_config());
    production_log().push_back({"time_sweep " + name, ts.diag});
    return cache.emplace(name, std::move(ts)).first->second;
}

protocol::ProtocolParams measured_450() {
    const auto c = opt::preset_450();
    protocol::ProtocolParams p;
    p.omega_bq = c.drive.omega_bq;
    p.omega_ba = c.drive.omega_ba;
    p.omega_c = c.omega_c;
    p.t_rep = c.t_rep;
    p.eta = c.eta;
    p.phi = M_PI;
    return p;
}

Outcome dark_state() {
    opt::ModelOptions mo;
    mo.n_max = 8;
    const auto m = opt::build_model(measured_450(), nullptr, mo);
    auto cfg = sweep_config(16e-3, 160);
    const auto target = core::singlet(m.layout, 0);
    const auto tj = engine::evolve(core::projector(target), m.generator, cfg, target);
    double dev = 0;
    for (double x : tj.fidelities) dev = std::max(dev, std::abs(1 - x));
    return {dev < 1e-8, "max |1 - F| over 16 ms = " + f(dev, 3) + " (need < 1e-8)", {}};
}

Outcome ideal_convergence() {
    const opt::OptSpace sp;
    const opt::ControlPoint c;
    const auto t = opt::control_rates(atom(), c, 0.257, sp);
    const auto p = opt::control_params(c, 0.257, t);
    opt::ObjectiveOptions o;
    o.model.n_max = 10;
    o.model.recoil = false;
    const auto v = opt::model_objective(opt::build_model(p, nullptr, o.model), o);
    Outcome out{v.fidelity > 0.999, "steady-state F = " + f(v.fidelity, 8) + " (need > 0.999)", {}};
    // with repump recoil the motion is heated and the target is no longer reached exactly
    o.model.recoil = true;
    const auto r = opt::model_objective(opt::build_model(p, nullptr, o.model), o);
    out.notes.push_back("same with repump recoil: F = " + f(r.fidelity, 6));
    return out;
}

Outcome large_detuning_optimum() {
    const opt::OptSpace sp;
    const opt::ControlPoint ref;
    opt::ObjectiveOptions o;
    o.model.n_max = 12;
    const auto v = opt::large_detuning_objective(atom(), ref, 0.257, sp, o);
    Outcome out;
    out.pass = within(v.fidelity, 0.989, 0.003);
    out.summary = "frozen-point steady-state F (n_max 12) = " + f(v.fidelity, 6) + " (target 0.989 +- 0.003)";

    opt::ObjectiveOptions coarse;
    coarse.model.n_max = 8;
    if (const char* full = std::getenv("DISSQ_ACCEPT_FULL"); full && std::string(full) == "1") {
        opt::OptOptions oo;
        const auto r = opt::optimize_large_detuning(atom(), 0.257, ref, sp, coarse, oo);
        const auto a = r.best_params.to_array(), b = ref.to_array();
        const std::array<double, 5> tol{0.05, 0.05, 0.04, 0.05, 0.05};
        bool near = true;
        std::string s;
        for (int i = 0; i < 5; ++i) {
            near = near && within(a[size_t(i)], b[size_t(i)], tol[size_t(i)]);
            s += std::string(opt::ControlPoint::name(i)) + "=" + f(a[size_t(i)], 4) + " ";
        }
        opt::ObjectiveOptions fine;
        fine.model.n_max = 12;
        const double fb = opt::large_detuning_objective(atom(), r.best_params, 0.257, sp, fine).fidelity;
        out.pass = out.pass && near && within(fb, 0.989, 0.003);
        out.notes.push_back("full search (n_max 8, " + std::to_string(r.evaluation_count) + " evaluations): " + s +
                            "F8=" + f(r.best_fidelity, 6) + " F12=" + f(fb, 6));
    } else {
        // local stationarity of the reference point at the search truncation
        const auto g = opt::objective_gradient(atom(), ref, 0.257, sp, coarse, 1e-3);
        std::string s;
        for (int i = 0; i < 5; ++i) s += std::string(opt::ControlPoint::name(i)) + "=" + f(g[size_t(i)], 2) + " ";
        out.notes.push_back("gradient at the reference point (n_max 8, per unit parameter): " + s);
        out.notes.push_back("full multi-start search skipped; set DISSQ_ACCEPT_FULL=1 (hours)");
    }
    out.notes.push_back("mean phonon " + f(v.mean_phonon, 3) + ", singlet-conditioned " + f(v.singlet_phonon, 3));
    return out;
}

Outcome eta_scaling() {
    opt::ObjectiveOptions o;
    o.model.n_max = 8;
    const std::vector<double> etas{0.024, 0.05, 0.1, 0.15, 0.2, 0.229, 0.25};
    const auto pts = opt::eta_sweep(atom(), etas, {}, opt::EtaMode::Reoptimize, opt::OptSpace{}, o, 40);
    const double slope = opt::log_log_slope(pts, 0.05, 0.25);
    double e229 = 0, e024 = 0;
    for (const auto& p : pts) {
        if (p.eta == 0.229) e229 = p.error;
        if (p.eta == 0.024) e024 = p.error;
    }
    Outcome out;
    out.pass = within(slope, 1.0, 0.15) && within(e229, 0.010, 0.002) && within(e024, 0.0010, 0.0004);
    out.summary = "slope " + f(slope, 4) + " (1.0 +- 0.15), error(0.229) " + f(e229, 4) + " (0.010 +- 0.002), error(0.024) " +
                  f(e024, 4) + " (0.0010 +- 0.0004)";
    std::string s;
    for (const auto& p : pts) s += f(p.eta, 3) + ":" + f(p.error, 4) + " ";
    out.notes.push_back("errors (omega_c, t_rep re-optimized, n_max 8): " + s);
    return out;
}

Outcome cooling() {
    const opt::OptSpace sp;
    opt::ObjectiveOptions o;
    o.model.n_max = 10;
    const auto t = opt::control_rates(atom(), {}, 0.257, sp);
    const auto m = opt::build_model(opt::control_params({}, 0.257, t), &t, o.model);
    const auto r = opt::cooling_interleave(m, 2 * M_PI / m.params.omega_ba, o);
    Outcome out;
    out.pass = within(r.fidelity, 0.994, 0.002) && within(r.baseline_phonon, 0.002, 0.001);
    out.summary = "interleaved F " + f(r.fidelity, 5) + " (0.994 +- 0.002), no-reset singlet n " +
                  f(r.baseline_phonon, 3) + " (0.002 +- 0.001)";
    out.notes.push_back("no-reset F " + f(r.baseline_fidelity, 5) + ", periods to converge " + std::to_string(r.periods) +
                        ", n before reset " + f(r.pre_reset_phonon, 3));
    return out;
}

Outcome error_budget() {
    const double phi = finite_sweep("phi_only").peak_singlet();
    const double imb = finite_sweep("imbalance_only").peak_singlet();
    const double r315 = finite_sweep("no_residual_315").peak_singlet() - finite_sweep("nominal_315").peak_singlet();
    const double r450 = finite_sweep("no_residual_450").peak_singlet() - finite_sweep("nominal_450").peak_singlet();
    Outcome out;
    const bool a = within(phi, 0.993, 0.002), b = imb > 0.999, c = within(r315, 0.008, 0.003),
               d = within(r450, 0.009, 0.003);
    out.pass = a && b && c && d;
    out.summary = "phi-only " + f(phi, 5) + (a ? "" : " [out]") + ", imbalance-only " + f(imb, 5) + (b ? "" : " [out]") +
                  ", residual contribution 315 " + f(r315, 3) + (c ? "" : " [out]") + " / 450 " + f(r450, 3) +
                  (d ? "" : " [out]");
    const double ideal315 = finite_sweep("ideal_315").peak_singlet(), ideal450 = finite_sweep("ideal_450").peak_singlet();
    out.notes.push_back("residual alone vs ideal: 315 " + f(ideal315 - finite_sweep("residual_only_315").peak_singlet(), 3) +
                        ", 450 " + f(ideal450 - finite_sweep("residual_only_450").peak_singlet(), 3));
    out.notes.push_back("ideal peaks: 315 " + f(ideal315, 5) + ", 450 " + f(ideal450, 5));
    return out;
}

Outcome finite_peaks() {
    struct Row {
        const char* name;
        double target, tol;
    };
    const Row rows[] = {{"nominal_450", 0.954, 0.015},
                        {"nominal_315", 0.946, 0.015},
                        {"phi_error_315", 0.935, 0.015},
                        {"t_rep_51us_315", 0.912, 0.02}};
    Outcome out{true, "", {}};
    for (const auto& r : rows) {
        const auto& ts = finite_sweep(r.name);
        const double pk = ts.peak_singlet();
        const bool ok = within(pk, r.target, r.tol);
        out.pass = out.pass && ok;
        out.summary += std::string(r.name) + " " + f(pk, 4) + (ok ? "" : " [out]") + "; ";
    }
    for (const char* name : {"nominal_450", "nominal_315"}) {
        const auto& ts = finite_sweep(name);
        const double pk = ts.peak_singlet();
        double t_half = -1, t_plateau = -1;
        for (size_t k = 0; k < ts.times.size(); ++k) {
            if (t_half < 0 && ts.populations[k][2] >= 0.5 * pk) t_half = ts.times[k];
            if (t_plateau < 0 && ts.populations[k][2] >= pk - 0.02) t_plateau = ts.times[k];
        }
        // rise to half height within 3 ms and within 0.02 of the peak by 7 ms
        const bool shape = t_half > 0 && t_half <= 3e-3 && t_plateau > 0 && t_plateau <= 7e-3;
        out.pass = out.pass && shape;
        out.notes.push_back(std::string(name) + ": half height at " + f(t_half * 1e3, 3) + " ms, within 0.02 of peak at " +
                            f(t_plateau * 1e3, 3) + " ms, plateau 6-16 ms mean " +
                            f(ts.plateau_singlet(6e-3, 16e-3), 4) + (shape ? "" : " [shape out]"));
    }
    out.notes.push_back("peak of the motion-traced singlet population P_S, n_max " + std::to_string(kProductionNmax));
    return out;
}

Outcome phi_identities() {
    std::vector<double> phis;
    for (int i = 0; i < 100; ++i) phis.push_back(2 * M_PI * i / 100);
    double dev = 0;
    for (const auto& p : readout::phi_calibration_curve(phis))
        dev = std::max({dev, std::abs(p.p_same - (0.5 + 0.25 * std::cos(p.phi))),
                        std::abs(p.p_diff - (0.5 - 0.25 * std::cos(p.phi)))});
    return {dev < 1e-9, "max deviation over 100 phases = " + f(dev, 3) + " (need < 1e-9)", {}};
}

Outcome oracle_equivalence() {
    std::mt19937_64 rng(20240917);
    std::uniform_real_distribution<double> u(0, 1);
    double worst = 0;
    int count = 0;
    std::string dims;
    for (int inst = 0; inst < 20; ++inst) {
        const int n_max = inst < 8 ? 1 : inst < 16 ? 2 : 3;  // total dimension 32, 48, 64
        const auto l = core::build_layout(n_max);
        const double eta = 0.05 + 0.25 * u(rng);
        const auto g = dissipation::make_geometry(eta, 4, 4);
        dissipation::MapCache cache(g, l.n_fock, dissipation::DissipatorForm::Quadrature);
        const Mat H = oracle::random_hermitian(l.total_dim, rng, 2 * M_PI * 2e3 / std::sqrt(double(l.total_dim)));
        core::OperatorMatrix op;
        op.m = H.sparseView();
        op.hermitian = true;
        std::vector<dissipation::ScatterElement> els;
        const int n_ch = 1 + int(3 * u(rng));
        for (int c = 0; c < n_ch; ++c) {
            dissipation::ScatterElement e;
            e.gamma = 2e3 * (0.2 + u(rng));
            e.initial_level = int(4 * u(rng)) % 4;
            e.final_level = int(4 * u(rng)) % 4;
            e.ion = int(2 * u(rng)) % 2;
            e.emitted_polarization = dissipation::Polarization(int(3 * u(rng)) % 3);
            e.incident_axial_k = u(rng) < 0.5 ? 1.0 : M_SQRT1_2;
            els.push_back(e);
        }
        const auto ch = dissipation::assemble(els, cache);
        engine::Generator gen(l, op, ch);
        const Mat rho0 = oracle::random_density(l.total_dim, rng);
        engine::EvolutionConfig cfg;
        cfg.t_final = 2e-4;
        cfg.sample_times = {cfg.t_final};
        cfg.abs_tol = 1e-12;
        cfg.rel_tol = 1e-10;
        cfg.positivity_every = 0;
        const auto tj = engine::evolve(rho0, gen, cfg, core::singlet(l, 0));
        std::vector<oracle::Jump> jumps;
        for (const auto& e : els) jumps.push_back(oracle::from_element(e));
        const Mat L = oracle::superoperator(H, jumps, l, g);
        const Mat ref = oracle::evolve_dense_action(L, rho0, cfg.t_final);
        worst = std::max(worst, oracle::trace_distance(tj.final_state, ref));
        ++count;
        dims += std::to_string(l.total_dim) + " ";
    }
    return {worst < 1e-7, std::to_string(count) + " instances, worst trace distance " + f(worst, 3) + " (need < 1e-7)",
            {"dimensions: " + dims}};
}

Outcome dissipator_cross_validation() {
    using namespace dissipation;
    const double eta = 0.257;
    const int N = 9;  // n_max 8
    const auto g = make_geometry(eta, 24, 24, 12);
    double all = 0, inner = 0;
    for (int pol = 0; pol < 3; ++pol)
        for (double k : {1.0, M_SQRT1_2}) {
            const auto q = quadrature_map(g, pure_mix(Polarization(pol)), k, N);
            const auto s = series_map(g, pure_mix(Polarization(pol)), k, N);
            for (int j = 0; j < N; ++j)
                for (int kk = 0; kk < N; ++kk) {
                    Mat E = Mat::Zero(N, N);
                    E(j, kk) = 1;
                    const double d = (q->apply(E) - s->apply(E)).cwiseAbs().maxCoeff();
                    all = std::max(all, d);
                    if (j <= N - 5 && kk <= N - 5) inner = std::max(inner, d);
                }
        }
    double heat = 0;
    for (int pol = 0; pol < 3; ++pol)
        for (double k : {1.0, M_SQRT1_2}) {
            const auto q = quadrature_map(g, pure_mix(Polarization(pol)), k, 20);
            Mat r0 = Mat::Zero(20, 20);
            r0(0, 0) = 1;
            const Mat out = q->apply(r0);
            double n = 0;
            for (int i = 0; i < 20; ++i) n += i * out(i, i).real();
            const double mc = eta * eta * oracle::monte_carlo_f2(Polarization(pol), k, 2'000'000, 77 + pol);
            heat = std::max(heat, std::abs(n / mc - 1));
        }
    Outcome out;
    out.pass = all < 1e-6 && heat < 5e-3;
    out.summary = "max entrywise difference over all matrix units " + f(all, 3) + " (need < 1e-6); heating vs Monte Carlo " +
                  f(100 * heat, 3) + " % (need < 0.5 %)";
    out.notes.push_back("restricted to units with n <= n_max - 4: " + f(inner, 3));
    // both forms on a large Fock space, so only the series order matters, compared band by band
    const int big = 32;
    for (int order : {12, 20}) {
        const auto go = make_geometry(eta, 24, 24, order);
        std::string s;
        for (int band : {2, 4, 6, 8}) {
            double mx = 0;
            for (int pol = 0; pol < 3; ++pol)
                for (double k : {1.0, M_SQRT1_2}) {
                    const auto q = quadrature_map(go, pure_mix(Polarization(pol)), k, big);
                    const auto sr = series_map(go, pure_mix(Polarization(pol)), k, big);
                    for (int j = 0; j <= band; ++j)
                        for (int kk = 0; kk <= band; ++kk) {
                            Mat E = Mat::Zero(big, big);
                            E(j, kk) = 1;
                            const Mat d = q->apply(E) - sr->apply(E);
                            mx = std::max(mx, d.topLeftCorner(band + 1, band + 1).cwiseAbs().maxCoeff());
                        }
                }
            s += "n<=" + std::to_string(band) + ": " + f(mx, 2) + "  ";
        }
        out.notes.push_back("order " + std::to_string(order) + " on " + std::to_string(big) + " Fock states: " + s);
    }
    // effect on the large-detuning objective
    opt::ObjectiveOptions oq;
    oq.model.n_max = 10;
    auto os = oq;
    os.model.form = DissipatorForm::Series;
    const double fq = opt::large_detuning_objective(atom(), {}, 0.257, opt::OptSpace{}, oq).fidelity;
    const double fs = opt::large_detuning_objective(atom(), {}, 0.257, opt::OptSpace{}, os).fidelity;
    out.notes.push_back("steady-state F at the reference point (n_max 10): quadrature " + f(fq, 7) + ", series " + f(fs, 7));
    return out;
}

Outcome statistics_pipeline() {
    // plateau state: X = 0.949, rest in dd, uu and T0
    const auto l = core::build_layout(1);
    Mat rho = 0.949 * core::projector(core::singlet(l, 0)) + 0.016 * core::projector(core::triplet0(l, 0)) +
              0.020 * core::projector(core::basis_state(l, core::Down, core::Down, 0)) +
              0.015 * core::projector(core::basis_state(l, core::Up, core::Up, 0));
    std::array<readout::BrightPops, 3> pops;
    for (int c = 0; c < 3; ++c) pops[size_t(c)] = readout::analysis_map(rho, l, readout::Condition(c));
    const double x_true = readout::basis_populations(pops).x;
    const auto dm = readout::DetectionModel::from_single(0.3, 15);

    // eleven plateau times, 200 shots for I and pi, 600 for the random-phase pulse
    auto experiment = [&](std::uint64_t seed) {
        readout::ConditionCounts cc;
        std::seed_seq sq{std::uint32_t(seed), std::uint32_t(seed >> 32)};
        std::vector<std::uint32_t> seeds(33);
        sq.generate(seeds.begin(), seeds.end());
        for (int k = 0; k < 11; ++k)
            for (int c = 0; c < 3; ++c) {
                const auto v = readout::synthesize_counts(pops[size_t(c)], dm, c == 2 ? 600 : 200, seeds[size_t(3 * k + c)]);
                cc[size_t(c)].insert(cc[size_t(c)].end(), v.begin(), v.end());
            }
        return cc;
    };
    const int n_exp = 200;
    int covered = 0;
    for (int e = 0; e < n_exp; ++e) {
        readout::BootstrapOptions bo;
        bo.n_resamples = 2000;
        bo.seed = 1000 + std::uint64_t(e);
        const auto b = readout::bootstrap_x(experiment(std::uint64_t(e) + 1), dm, bo);
        covered += b.lo <= x_true && x_true <= b.hi;
    }
    const double coverage = double(covered) / n_exp;
    readout::BootstrapOptions bo;
    bo.seed = 99;
    const auto one = readout::bootstrap_x(experiment(424242), dm, bo);
    const double half = 0.5 * (one.hi - one.lo);
    Outcome out;
    out.pass = within(coverage, 0.95, 0.04) && half >= 0.002 && half <= 0.008;
    out.summary = "coverage " + f(100 * coverage, 3) + " % over " + std::to_string(n_exp) + " experiments (95 +- 4 %), " +
                  "half-width at X = " + f(x_true, 4) + ": " + f(half, 3) + " (0.004 within a factor 2)";
    out.notes.push_back("single experiment: X = " + f(one.point, 5) + " [" + f(one.lo, 5) + ", " + f(one.hi, 5) +
                        "], 10000 resamples; coverage runs use 2000");
    return out;
}

Outcome conservation() {
    // the dark-state and oracle runs are covered by their own criteria; these are the production sweeps
    for (const char* name : {"nominal_450", "nominal_315", "phi_error_315", "t_rep_51us_315"}) finite_sweep(name);
    Outcome out{true, "", {}};
    int n = 0;
    engine::Diagnostics worst;
    worst.min_eigenvalue = 1;
    for (const auto& [name, d] : production_log()) {
        const bool ok = d.max_trace_error < 1e-7 && d.max_hermiticity < 1e-9 && d.min_eigenvalue > -1e-6 &&
                        d.max_top_population < 1e-4;
        out.pass = out.pass && ok;
        if (!ok) out.notes.push_back("violated in " + name);
        worst.max_trace_error = std::max(worst.max_trace_error, d.max_trace_error);
        worst.max_hermiticity = std::max(worst.max_hermiticity, d.max_hermiticity);
        worst.min_eigenvalue = std::min(worst.min_eigenvalue, d.min_eigenvalue);
        worst.max_top_population = std::max(worst.max_top_population, d.max_top_population);
        worst.max_edge_population = std::max(worst.max_edge_population, d.max_edge_population);
        ++n;
    }
    out.pass = out.pass && n > 0;
    out.summary = std::to_string(n) + " production runs: trace " + f(worst.max_trace_error, 2) + ", hermiticity " +
                  f(worst.max_hermiticity, 2) + ", min eigenvalue " + f(worst.min_eigenvalue, 2) + ", top rung " +
                  f(worst.max_top_population, 2);
    out.notes.push_back("population with n >= n_max - 2: " + f(worst.max_edge_population, 2));
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    struct Criterion {
        int id;
        const char* name;
        std::function<Outcome()> run;
    };
    const std::vector<Criterion> all{
        {1, "dark-state invariance", dark_state},
        {2, "ideal-protocol convergence", ideal_convergence},
        {3, "large-detuning optimum", large_detuning_optimum},
        {4, "eta scaling", eta_scaling},
        {5, "cooling interleave", cooling},
        {6, "error-budget toggles", error_budget},
        {7, "finite-detuning peak fidelities", finite_peaks},
        {8, "phi-calibration identities", phi_identities},
        {9, "oracle equivalence", oracle_equivalence},
        {10, "dissipator cross-validation", dissipator_cross_validation},
        {11, "statistics pipeline", statistics_pipeline},
        {12, "conservation on production runs", conservation},
    };
    // optional list of criterion numbers to run
    std::set<int> only;
    for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));

    int failed = 0;
    for (const auto& c : all) {
        if (!only.empty() && !only.count(c.id)) continue;
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what(), {}};
        }
        const double sec = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        std::cout << (o.pass ? "PASS" : "FAIL") << " criterion " << c.id << " (" << c.name << "): " << o.summary << " ["
                  << f(sec, 3) << " s]\n";
        for (const auto& n : o.notes) std::cout << "    " << n << "\n";
        std::cout.flush();
        failed += !o.pass;
    }
    return failed == 0 ? 0 : 1;
}
