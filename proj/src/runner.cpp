// runner.cpp — experiment dispatch, result tables and summaries, verify suite
#include "dissq/runner.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <random>
#include <set>
#include <sstream>

#ifndef DISSQ_VERSION
#define DISSQ_VERSION "dev"
#endif

namespace dissq::cli {

using json = nlohmann::json;

namespace {

const atomic::AtomModel& atom() {
    static const auto m = atomic::AtomModel::beryllium9();
    return m;
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint32_t a, std::uint32_t b) {
    std::seed_seq sq{std::uint32_t(seed), std::uint32_t(seed >> 32), a, b};
    std::array<std::uint32_t, 2> out{};
    sq.generate(out.begin(), out.end());
    return (std::uint64_t(out[0]) << 32) | out[1];
}

json diagnostics_json(const engine::Diagnostics& d) {
    return {{"max_trace_error", d.max_trace_error},
            {"max_hermiticity", d.max_hermiticity},
            {"min_eigenvalue", d.min_eigenvalue},
            {"max_edge_population", d.max_edge_population},
            {"max_top_population", d.max_top_population},
            {"steps", d.steps},
            {"rejected_steps", d.rejected},
            {"rhs_calls", d.rhs_calls},
            {"truncation_flag", d.truncation_flag},
            {"conservation_ok",
             d.max_trace_error < 1e-7 && d.max_hermiticity < 1e-9 && d.min_eigenvalue > -1e-6 && d.max_top_population < 1e-4}};
}

json point_json(const opt::ControlPoint& c) {
    json j;
    const auto a = c.to_array();
    for (int i = 0; i < opt::ControlPoint::kDim; ++i) j[opt::ControlPoint::name(i)] = a[size_t(i)];
    return j;
}

opt::ControlPoint ld_point(const ExperimentSpec& s) {
    return s.large_detuning ? s.large_detuning->point : opt::ControlPoint{};
}

ResultSet time_sweep(const ExperimentSpec& s) {
    const auto model = spec_model(s);
    const auto ts = opt::time_sweep(model, evolution_config(s));
    ResultSet r;
    r.table.header = {"t_ms", "P_dd", "P_uu", "P_S", "P_T", "P_leak", "nbar", "F"};
    for (size_t k = 0; k < ts.times.size(); ++k) {
        const auto& p = ts.populations[k];
        r.table.rows.push_back({fmt(ts.times[k] * 1e3), fmt(p[0]), fmt(p[1]), fmt(p[2]), fmt(p[3]), fmt(p[4]),
                                fmt(ts.mean_phonon[k]), fmt(ts.fidelity[k])});
    }
    const auto& st = s.statistics;
    json j = {{"peak_singlet_population", ts.peak_singlet()},
              {"peak_fidelity", *std::max_element(ts.fidelity.begin(), ts.fidelity.end())},
              {"final_fidelity", ts.fidelity.back()},
              {"diagnostics", diagnostics_json(ts.diag)}};
    try {
        j["plateau_singlet_population"] = ts.plateau_singlet(st.plateau_start_ms * 1e-3, st.plateau_stop_ms * 1e-3);
    } catch (const std::invalid_argument&) {
        j["plateau_singlet_population"] = nullptr;
    }
    j["channels"] = model.channels.terms.size();
    j["omega_res_hz"] = model.params.omega_res / (2 * M_PI);
    r.summary_json = j.dump();
    return r;
}

ResultSet eta_sweep(const ExperimentSpec& s, int threads) {
    const auto& e = *s.eta_sweep;
    const auto mode = opt::parse_eta_mode(e.mode);
    const auto pts = opt::eta_sweep(atom(), e.etas, ld_point(s), mode, opt_space(s), objective_options(s),
                                    e.budget_per_eta, threads);
    ResultSet r;
    r.table.header = {"eta", "error", "omega_c_ratio", "t_rep_ratio", "evaluations"};
    for (const auto& p : pts)
        r.table.rows.push_back({fmt(p.eta), fmt(p.error), fmt(p.oc_ratio), fmt(p.trep_ratio), std::to_string(p.evaluations)});
    json j;
    j["mode"] = e.mode;
    j["notes"] = mode == opt::EtaMode::Reoptimize
                     ? "omega_c and t_rep re-optimized at every eta; polarizations and power split frozen at the supplied point"
                     : "all controls frozen at the supplied point";
    try {
        j["log_log_slope_0.05_0.25"] = opt::log_log_slope(pts, 0.05, 0.25);
    } catch (const std::invalid_argument&) {
        j["log_log_slope_0.05_0.25"] = nullptr;
    }
    r.summary_json = j.dump();
    return r;
}

ResultSet optimize(const ExperimentSpec& s, int threads) {
    const auto& o = *s.optimize;
    opt::OptOptions oo;
    oo.starts = o.starts;
    oo.budget = o.budget;
    oo.initial_step = o.initial_step;
    oo.size_tol = o.size_tol;
    oo.threads = threads;
    const auto sp = opt_space(s);
    const auto obj = objective_options(s);
    const auto res = opt::optimize_large_detuning(atom(), s.protocol.eta, ld_point(s), sp, obj, oo);
    ResultSet r;
    r.table.header = {"evaluation", "best_fidelity"};
    for (size_t k = 0; k < res.convergence_trace.size(); ++k)
        r.table.rows.push_back({std::to_string(k + 1), fmt(res.convergence_trace[k])});
    json j;
    j["best_params"] = point_json(res.best_params);
    j["best_fidelity"] = res.best_fidelity;
    j["evaluation_count"] = res.evaluation_count;
    j["converged"] = res.converged;
    json starts = json::array();
    for (const auto& st : res.starts)
        starts.push_back({{"start", point_json(st.start)},
                          {"best", point_json(st.best)},
                          {"best_fidelity", st.best_fidelity},
                          {"evaluations", st.evaluations},
                          {"converged", st.converged}});
    j["starts"] = starts;
    const auto grad = opt::objective_gradient(atom(), res.best_params, s.protocol.eta, sp, obj);
    double gn = 0;
    for (double g : grad) gn += g * g;
    j["gradient_norm"] = std::sqrt(gn);
    if (o.polish_n_max > 0) {
        auto po = obj;
        po.model.n_max = o.polish_n_max;
        j["fidelity_at_polish_n_max"] = opt::large_detuning_objective(atom(), res.best_params, s.protocol.eta, sp, po).fidelity;
    }
    const auto t = opt::control_rates(atom(), res.best_params, s.protocol.eta, sp);
    j["omega_bq_over_omega_ba"] = t.omega_bq / t.omega_ba;
    r.summary_json = j.dump();
    return r;
}

ResultSet error_budget(const ExperimentSpec& s, int threads) {
    const auto& cases = s.error_budget ? s.error_budget->cases : opt::budget_cases();
    const auto rows = opt::error_budget(atom(), cases, model_options(s), evolution_config(s), threads);
    ResultSet r;
    r.table.header = {"case", "peak_singlet_population", "plateau_singlet_population"};
    json j, peaks;
    for (const auto& row : rows) {
        r.table.rows.push_back({row.name, fmt(row.peak), fmt(row.plateau)});
        peaks[row.name] = row.peak;
    }
    json contrib;
    for (const char* d : {"315", "450"}) {
        const std::string nom = std::string("nominal_") + d, nores = std::string("no_residual_") + d;
        if (peaks.contains(nom) && peaks.contains(nores))
            contrib[std::string("residual_") + d] = peaks[nores].get<double>() - peaks[nom].get<double>();
    }
    j["peaks"] = peaks;
    j["contributions"] = contrib;
    r.summary_json = j.dump();
    return r;
}

ResultSet cooling(const ExperimentSpec& s) {
    const auto sp = opt_space(s);
    const auto obj = objective_options(s);
    const auto c = ld_point(s);
    const auto t = opt::control_rates(atom(), c, s.protocol.eta, sp);
    auto p = opt::control_params(c, s.protocol.eta, t);
    p.phi = s.protocol.phi_rad;
    const auto model = opt::build_model(p, &t, obj.model);
    const auto& cs = s.cooling_interleave ? *s.cooling_interleave : CoolingSpec{};
    const double period = cs.reset_period_us ? *cs.reset_period_us * 1e-6 : 2 * M_PI / p.omega_ba;
    const auto res = opt::cooling_interleave(model, period, obj, cs.samples_per_period);
    ResultSet r;
    r.table.header = {"reset_period_us", "baseline_fidelity", "baseline_singlet_nbar", "interleaved_fidelity",
                      "pre_reset_nbar", "post_reset_fidelity", "periods"};
    r.table.rows.push_back({fmt(period * 1e6), fmt(res.baseline_fidelity), fmt(res.baseline_phonon), fmt(res.fidelity),
                            fmt(res.pre_reset_phonon), fmt(res.post_reset_fidelity), std::to_string(res.periods)});
    r.summary_json = json{{"interleaved_fidelity", res.fidelity},
                          {"baseline_fidelity", res.baseline_fidelity},
                          {"baseline_singlet_nbar", res.baseline_phonon},
                          {"pre_reset_nbar", res.pre_reset_phonon},
                          {"periods", res.periods}}
                         .dump();
    return r;
}

ResultSet phi_cal(const ExperimentSpec& s) {
    const auto& f = s.phi_calibration ? *s.phi_calibration : PhiCalSpec{};
    std::vector<double> phis;
    for (int i = 0; i < f.n_points; ++i)
        phis.push_back(f.n_points == 1 ? f.phi_start_rad
                                       : f.phi_start_rad + (f.phi_stop_rad - f.phi_start_rad) * i / (f.n_points - 1));
    const auto pts = readout::phi_calibration_curve(phis, f.shots, s.statistics.seed);
    ResultSet r;
    r.table.header = {"phi_rad", "p_same", "p_diff", "p_same_theory", "p_diff_theory"};
    double dev = 0;
    for (const auto& p : pts) {
        const double ts = 0.5 + 0.25 * std::cos(p.phi), td = 0.5 - 0.25 * std::cos(p.phi);
        dev = std::max({dev, std::abs(p.p_same - ts), std::abs(p.p_diff - td)});
        r.table.rows.push_back({fmt(p.phi), fmt(p.p_same), fmt(p.p_diff), fmt(ts), fmt(td)});
    }
    r.summary_json = json{{"max_deviation", dev}, {"shots", f.shots}}.dump();
    return r;
}

ResultSet synthetic_readout(const ExperimentSpec& s, int threads) {
    const auto model = spec_model(s);
    const auto dm = detection_model(s);
    const auto& st = s.statistics;
    auto cfg = evolution_config(s);
    std::vector<std::array<readout::BrightPops, 3>> pops;
    cfg.observer = [&](double, const core::DensityMatrix& rho) {
        std::array<readout::BrightPops, 3> b;
        for (int c = 0; c < 3; ++c) b[size_t(c)] = readout::analysis_map(rho, model.layout, readout::Condition(c));
        pops.push_back(b);
    };
    const auto tj = engine::evolve(core::projector(core::basis_state(model.layout, core::Down, core::Down, 0)),
                                   model.generator, cfg, core::singlet(model.layout, 0));

    ResultSet r;
    r.table.header = {"t_ms", "X_true", "P_S_true", "X_est", "P_dd_est", "P_uu_est", "P_T_est"};
    readout::CountRecord rec;
    readout::ConditionCounts pooled;
    double x_true_plateau = 0;
    int n_plateau = 0;
    for (size_t k = 0; k < tj.times.size(); ++k) {
        readout::ConditionCounts cc;
        for (int c = 0; c < 3; ++c) {
            // the random-phase condition gets three times the shots
            const int shots = readout::Condition(c) == readout::Condition::HalfPiRandom ? 3 * st.shots : st.shots;
            cc[size_t(c)] = readout::synthesize_counts(pops[k][size_t(c)], dm, shots,
                                                       derive_seed(st.seed, std::uint32_t(k), std::uint32_t(c)));
            rec.blocks.push_back({tj.times[k] * 1e6, readout::Condition(c), cc[size_t(c)]});
        }
        const auto truth = readout::basis_populations(pops[k]);
        const auto est = readout::estimate_populations(cc, dm);
        r.table.rows.push_back({fmt(tj.times[k] * 1e3), fmt(truth.x), fmt(tj.populations[k][2]), fmt(est.x),
                                fmt(est.p_dd), fmt(est.p_uu), fmt(est.p_t)});
        const double tms = tj.times[k] * 1e3;
        if (tms >= st.plateau_start_ms - 1e-9 && tms <= st.plateau_stop_ms + 1e-9) {
            for (int c = 0; c < 3; ++c)
                pooled[size_t(c)].insert(pooled[size_t(c)].end(), cc[size_t(c)].begin(), cc[size_t(c)].end());
            x_true_plateau += truth.x;
            ++n_plateau;
        }
    }
    json j;
    j["diagnostics"] = diagnostics_json(tj.diag);
    if (n_plateau > 0) {
        readout::BootstrapOptions bo;
        bo.n_resamples = st.n_resamples;
        bo.level = st.level;
        bo.seed = derive_seed(st.seed, 0xb007u, 0);
        bo.threads = threads;
        const auto b = readout::bootstrap_x(pooled, dm, bo);
        j["plateau"] = {{"x_true", x_true_plateau / n_plateau},
                        {"x_est", b.point},
                        {"ci_lo", b.lo},
                        {"ci_hi", b.hi},
                        {"level", st.level},
                        {"z0", b.z0},
                        {"samples", n_plateau},
                        {"shots_per_condition", pooled[0].size()}};
    } else {
        j["plateau"] = nullptr;
    }
    r.summary_json = j.dump();
    r.counts = std::move(rec);
    return r;
}

}  // namespace

std::string fmt(double v) {
    if (std::isnan(v)) return "nan";
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

std::string csv_field(const std::string& v) {
    if (v.find_first_of(",\"\r\n") == std::string::npos) return v;
    std::string out = "\"";
    for (char c : v) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

std::string to_csv(const Table& t) {
    std::string out;
    auto line = [&](const std::vector<std::string>& f) {
        for (size_t i = 0; i < f.size(); ++i) out += (i ? "," : "") + csv_field(f[i]);
        out += "\r\n";
    };
    line(t.header);
    for (const auto& r : t.rows) line(r);
    return out;
}

void apply_seed_override(ExperimentSpec& s) {
    const char* v = std::getenv("DISSQ_SEED");
    if (!v || !*v) return;
    std::uint64_t seed = 0;
    const std::string str(v);
    const auto res = std::from_chars(str.data(), str.data() + str.size(), seed);
    if (res.ec != std::errc() || res.ptr != str.data() + str.size())
        throw SpecError("DISSQ_SEED", "expected a non-negative integer, got '" + str + "'");
    s.statistics.seed = seed;
}

opt::Model spec_model(const ExperimentSpec& s) {
    const auto mo = model_options(s);
    if (s.large_detuning) {
        const auto sp = opt_space(s);
        const auto c = s.large_detuning->point;
        const auto t = opt::control_rates(atom(), c, s.protocol.eta, sp);
        auto p = opt::control_params(c, s.protocol.eta, t);
        const auto q = protocol_params(s);
        p.phi = q.phi;
        p.global_phase = q.global_phase;
        p.rabi_imbalance = q.rabi_imbalance;
        p.imbalance_target = q.imbalance_target;
        p.stark = q.stark;
        return opt::build_model(p, &t, mo);
    }
    auto p = protocol_params(s);
    if (s.beams) {
        const auto& b = *s.beams;
        atomic::MeasuredDrive d;
        d.omega_bq = p.omega_bq;
        d.omega_ba = p.omega_ba;
        d.detuning_hz = b.detuning_ghz * 1e9;
        d.b_pi = b.b_pi;
        d.r_plus = b.r_plus;
        d.red_to_blue_power = b.red_to_blue_power;
        if (b.residual == "r_pi") d.r_pi = b.r_pi;
        if (b.residual == "calibrated" && b.reference_rate_hz > 0) {
            atomic::MeasuredDrive ref = d;
            ref.omega_bq = 2 * M_PI * b.reference_omega_bq_hz;
            ref.omega_ba = 2 * M_PI * b.reference_omega_ba_hz;
            ref.detuning_hz = b.reference_detuning_ghz * 1e9;
            d.r_pi = atomic::calibrate_r_pi(atom(), ref, p.eta, 2 * M_PI * b.reference_rate_hz);
        }
        const auto t = atomic::finite_detuning_table(atom(), d, p.eta);
        if (b.residual != "off") p.omega_res = t.omega_res;
        return opt::build_model(p, b.scattering ? &t : nullptr, mo);
    }
    if (s.rate_table) {
        const auto t = explicit_rate_table(s);
        return opt::build_model(p, &t, mo);
    }
    return opt::build_model(p, nullptr, mo);
}

ResultSet run_experiment(const ExperimentSpec& s, const RunOptions& o) {
    validate(s);
    const auto t0 = std::chrono::steady_clock::now();
    const int threads = std::max(1, o.threads);
    ResultSet r;
    switch (s.experiment) {
    case Experiment::TimeSweep: r = time_sweep(s); break;
    case Experiment::EtaSweep: r = eta_sweep(s, threads); break;
    case Experiment::Optimize: r = optimize(s, threads); break;
    case Experiment::ErrorBudget: r = error_budget(s, threads); break;
    case Experiment::CoolingInterleave: r = cooling(s); break;
    case Experiment::PhiCalibration: r = phi_cal(s); break;
    case Experiment::SyntheticReadout: r = synthetic_readout(s, threads); break;
    }
    r.experiment = experiment_name(s.experiment);
    r.spec_hash = spec_hash(s);
    r.table.header.push_back("spec_sha256");
    for (auto& row : r.table.rows) row.push_back(r.spec_hash);
    r.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return r;
}

std::vector<std::string> write_results(const ResultSet& r, const ExperimentSpec& s, const RunOptions& o) {
    namespace fs = std::filesystem;
    const fs::path dir = o.out_dir ? *o.out_dir : s.output.dir;
    fs::create_directories(dir);
    const std::string prefix = s.output.prefix.empty() ? r.experiment : s.output.prefix;
    std::vector<std::string> paths;
    auto put = [&](const std::string& name, const std::string& body) {
        const auto path = (dir / name).string();
        std::ofstream out(path, std::ios::binary);
        if (!out) throw std::runtime_error("cannot write '" + path + "'");
        out << body;
        paths.push_back(path);
    };
    put(prefix + ".csv", to_csv(r.table));
    json j;
    j["experiment"] = r.experiment;
    j["spec_sha256"] = r.spec_hash;
    j["code_version"] = DISSQ_VERSION;
    j["wall_time_s"] = r.wall_time_s;
    j["rows"] = r.table.rows.size();
    j["results"] = json::parse(r.summary_json);
    j["spec"] = json::parse(serialize(s));
    put(prefix + ".json", j.dump(2) + "\n");
    if (r.counts && s.output.write_counts) {
        std::ostringstream os;
        readout::write_count_record(os, *r.counts);
        auto text = os.str();
        text.insert(text.find('\n') + 1, "# spec_sha256 " + r.spec_hash + "\n");
        put(prefix + ".counts", text);
    }
    return paths;
}

std::vector<VerifyItem> verify(const ExperimentSpec& s) {
    std::vector<VerifyItem> out;
    auto add = [&](const std::string& name, bool pass, const std::string& detail) { out.push_back({name, pass, detail}); };
    auto num = [](double v) {
        char b[32];
        std::snprintf(b, sizeof b, "%.3g", v);
        return std::string(b);
    };
    try {
        validate(s);
        add("spec validation", true, "");
    } catch (const SpecError& e) {
        add("spec validation", false, e.what());
        return out;
    }

    ExperimentSpec base = s;
    if (s.experiment == Experiment::ErrorBudget || s.experiment == Experiment::PhiCalibration) {
        // no spec-level physics; check the nominal finite-detuning configuration instead
        base.experiment = Experiment::TimeSweep;
        base.error_budget.reset();
        base.phi_calibration.reset();
        base.protocol.omega_bq_hz = 3.43e3;
        base.protocol.omega_ba_hz = 5.5e3;
        base.protocol.omega_c_hz = 1.77e3;
        base.protocol.t_rep_us = 69.5;
        base.beams = BeamSpec{};
    } else if (s.experiment != Experiment::TimeSweep && s.experiment != Experiment::SyntheticReadout &&
               !base.large_detuning) {
        base.large_detuning = LargeDetuningSpec{};
    }
    const auto model = spec_model(base);
    const auto& l = model.layout;
    const int d = l.total_dim;

    const Mat H = model.hamiltonian.dense();
    const double herm = (H - H.adjoint()).norm() / std::max(1.0, H.norm());
    add("hamiltonian hermitian", herm < 1e-12, "relative defect " + num(herm));

    std::mt19937_64 rng(derive_seed(s.statistics.seed, 0x7e57u, 0));
    std::normal_distribution<double> g;
    Mat a(d, d);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) a(i, j) = cplx(g(rng), g(rng));
    Mat rho = a * a.adjoint();
    rho /= rho.trace().real();
    const Mat lr = model.generator.rhs(rho);
    const double tr = std::abs(lr.trace()) / std::max(1e-300, lr.norm());
    add("trace preservation", tr < 1e-10, "relative |tr L(rho)| " + num(tr));
    const double hp = (lr - lr.adjoint()).norm() / std::max(1e-300, lr.norm());
    add("hermiticity preservation", hp < 1e-10, "relative defect " + num(hp));

    engine::EvolutionConfig cfg;
    cfg.t_final = 5e-6;
    cfg.sample_times = {cfg.t_final};
    cfg.positivity_every = 1;
    cfg.positivity_abort = -1;
    const auto pure = core::projector(core::basis_state(l, core::Down, core::Down, 0));
    const auto tj = engine::evolve(pure, model.generator, cfg, core::singlet(l, 0));
    add("positivity (short evolution from a pure state)", tj.diag.min_eigenvalue > -1e-9,
        "min eigenvalue " + num(tj.diag.min_eigenvalue));
    add("trace after short evolution", tj.diag.max_trace_error < 1e-9, "trace error " + num(tj.diag.max_trace_error));

    const auto geom = dissipation::make_geometry(base.numerics.recoil ? base.protocol.eta : 0.0, base.numerics.n_theta,
                                                 base.numerics.n_phi, base.numerics.series_order);
    double norm_err = 0, series_err = 0;
    std::set<std::pair<int, double>> seen;
    for (const auto& e : model.channels.elements) {
        const auto mix = dissipation::pure_mix(e.emitted_polarization);
        norm_err = std::max(norm_err, std::abs(dissipation::pattern_normalization(geom, mix) - 1));
        if (!seen.insert({int(e.emitted_polarization), e.incident_axial_k}).second) continue;
        // action on the motional ground state
        const auto q = dissipation::quadrature_map(geom, mix, e.incident_axial_k, l.n_fock);
        const auto sr = dissipation::series_map(geom, mix, e.incident_axial_k, l.n_fock);
        Mat x = Mat::Zero(l.n_fock, l.n_fock);
        x(0, 0) = 1;
        series_err = std::max(series_err, (q->apply(x) - sr->apply(x)).cwiseAbs().maxCoeff());
    }
    add("quadrature normalization", norm_err < 1e-10, "max |integral - 1| " + num(norm_err));
    add("series vs quadrature dissipator (order " + std::to_string(base.numerics.series_order) + ", ground state)",
        series_err < 1e-6, "max deviation " + num(series_err));
    return out;
}

}  // namespace dissq::cli
