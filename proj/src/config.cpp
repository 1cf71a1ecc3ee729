// config.cpp — strict JSON reader for experiment specs
#include "dissq/config.hpp"

#include <openssl/evp.h>

#include <cmath>
#include <fstream>
#include <json.hpp>
#include <set>
#include <sstream>

namespace dissq::cli {

using json = nlohmann::json;

SpecError::SpecError(std::string field_, const std::string& msg, int line_, int column_)
    : std::runtime_error(field_.empty() ? msg : field_ + ": " + msg), field(std::move(field_)), line(line_), column(column_) {}

const std::vector<std::string>& experiment_names() {
    static const std::vector<std::string> names{"time_sweep",         "eta_sweep",       "optimize",         "error_budget",
                                                "cooling_interleave", "phi_calibration", "synthetic_readout"};
    return names;
}

Experiment parse_experiment(const std::string& s) {
    const auto& n = experiment_names();
    for (size_t i = 0; i < n.size(); ++i)
        if (n[i] == s) return Experiment(i);
    throw SpecError("experiment", "unknown experiment '" + s + "'");
}

std::string experiment_name(Experiment e) { return experiment_names().at(size_t(e)); }

namespace {

std::string join(const std::string& a, const std::string& b) { return a.empty() ? b : a + "." + b; }

// Object reader that records consumed keys so leftovers can be reported.
class Section {
public:
    Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) throw SpecError(path_, "expected an object");
    }

    bool has(const std::string& k) const { return j_.contains(k); }
    std::string path(const std::string& k) const { return join(path_, k); }

    template <class T>
    void get(const std::string& k, T& out) {
        if (!j_.contains(k)) return;
        seen_.insert(k);
        try {
            out = convert<T>(j_.at(k), path(k));
        } catch (const json::exception& e) {
            throw SpecError(path(k), std::string("wrong type (") + e.what() + ")");
        }
    }
    template <class T>
    void get(const std::string& k, std::optional<T>& out) {
        if (!j_.contains(k)) return;
        T v{};
        get(k, v);
        out = v;
    }
    std::optional<Section> sub(const std::string& k) {
        if (!j_.contains(k)) return std::nullopt;
        seen_.insert(k);
        return Section(j_.at(k), path(k));
    }
    const json& raw(const std::string& k) {
        seen_.insert(k);
        return j_.at(k);
    }
    void finish() const {
        for (auto it = j_.begin(); it != j_.end(); ++it)
            if (!seen_.count(it.key())) throw SpecError(path(it.key()), "unknown key");
    }

private:
    template <class T>
    static T convert(const json& v, const std::string& p) {
        if constexpr (std::is_same_v<T, double>) {
            if (!v.is_number()) throw SpecError(p, "expected a number");
            return v.get<double>();
        } else if constexpr (std::is_same_v<T, int>) {
            if (!v.is_number_integer()) throw SpecError(p, "expected an integer");
            return v.get<int>();
        } else if constexpr (std::is_same_v<T, std::uint64_t>) {
            if (!v.is_number_unsigned()) throw SpecError(p, "expected a non-negative integer");
            return v.get<std::uint64_t>();
        } else if constexpr (std::is_same_v<T, bool>) {
            if (!v.is_boolean()) throw SpecError(p, "expected true or false");
            return v.get<bool>();
        } else if constexpr (std::is_same_v<T, std::string>) {
            if (!v.is_string()) throw SpecError(p, "expected a string");
            return v.get<std::string>();
        } else {
            return v.get<T>();
        }
    }

    const json& j_;
    std::string path_;
    std::set<std::string> seen_;
};

void require(bool ok, const std::string& field, const std::string& msg) {
    if (!ok) throw SpecError(field, msg);
}

template <class T>
void one_of(const T& v, std::initializer_list<T> allowed, const std::string& field) {
    for (const auto& a : allowed)
        if (v == a) return;
    std::ostringstream os;
    os << "must be one of";
    for (const auto& a : allowed) os << " '" << a << "'";
    throw SpecError(field, os.str());
}

int level_index(const std::string& s, const std::string& field) {
    for (int l = 0; l < core::kLevels; ++l)
        if (s == core::level_name(l)) return l;
    throw SpecError(field, "unknown level '" + s + "'");
}

int control_index(const std::string& s, const std::string& field) {
    for (int i = 0; i < opt::ControlPoint::kDim; ++i)
        if (s == opt::ControlPoint::name(i)) return i;
    throw SpecError(field, "unknown parameter '" + s + "'");
}

ProtocolSpec read_protocol(Section s) {
    ProtocolSpec p;
    s.get("omega_bq_hz", p.omega_bq_hz);
    s.get("omega_ba_hz", p.omega_ba_hz);
    s.get("omega_c_hz", p.omega_c_hz);
    s.get("omega_res_hz", p.omega_res_hz);
    s.get("t_rep_us", p.t_rep_us);
    s.get("phi_rad", p.phi_rad);
    s.get("global_phase_rad", p.global_phase_rad);
    s.get("eta", p.eta);
    s.get("rabi_imbalance", p.rabi_imbalance);
    s.get("imbalance_target", p.imbalance_target);
    if (s.has("stark_hz")) {
        const json& v = s.raw("stark_hz");
        const auto f = s.path("stark_hz");
        require(v.is_array() && v.size() == 2, f, "expected [[4 numbers], [4 numbers]] (per ion, per level)");
        for (size_t i = 0; i < 2; ++i) {
            require(v[i].is_array() && v[i].size() == 4, f, "each ion needs 4 level shifts");
            for (size_t l = 0; l < 4; ++l) {
                require(v[i][l].is_number(), f, "expected numbers");
                p.stark_hz[i][l] = v[i][l].get<double>();
            }
        }
    }
    s.finish();
    return p;
}

BeamSpec read_beams(Section s) {
    BeamSpec b;
    s.get("detuning_ghz", b.detuning_ghz);
    s.get("b_pi", b.b_pi);
    s.get("r_plus", b.r_plus);
    s.get("red_to_blue_power", b.red_to_blue_power);
    s.get("scattering", b.scattering);
    s.get("residual", b.residual);
    s.get("r_pi", b.r_pi);
    s.get("reference_omega_bq_hz", b.reference_omega_bq_hz);
    s.get("reference_omega_ba_hz", b.reference_omega_ba_hz);
    s.get("reference_detuning_ghz", b.reference_detuning_ghz);
    s.get("reference_rate_hz", b.reference_rate_hz);
    s.finish();
    return b;
}

RateTableSpec read_rates(Section s) {
    RateTableSpec r;
    if (s.has("raman")) {
        const json& v = s.raw("raman");
        require(v.is_array(), s.path("raman"), "expected an array");
        for (size_t i = 0; i < v.size(); ++i) {
            Section e(v[i], s.path("raman[" + std::to_string(i) + "]"));
            RamanRateSpec x;
            e.get("from", x.from);
            e.get("to", x.to);
            e.get("pol", x.pol);
            e.get("rate_per_s", x.rate_per_s);
            e.finish();
            r.raman.push_back(x);
        }
    }
    s.get("rayleigh_rate_per_s", r.rayleigh_rate_per_s);
    if (s.has("rayleigh_mix")) {
        const json& v = s.raw("rayleigh_mix");
        require(v.is_array() && v.size() == 3, s.path("rayleigh_mix"), "expected [sigma-, pi, sigma+] weights");
        for (size_t q = 0; q < 3; ++q) {
            require(v[q].is_number(), s.path("rayleigh_mix"), "expected numbers");
            r.rayleigh_mix[q] = v[q].get<double>();
        }
    }
    s.finish();
    return r;
}

LargeDetuningSpec read_large(Section s) {
    LargeDetuningSpec l;
    auto a = l.point.to_array();
    for (int i = 0; i < opt::ControlPoint::kDim; ++i) s.get(opt::ControlPoint::name(i), a[size_t(i)]);
    l.point = opt::ControlPoint::from_array(a);
    s.get("p_blue_fraction", l.p_blue_fraction);
    s.finish();
    return l;
}

NumericsSpec read_numerics(Section s) {
    NumericsSpec n;
    s.get("n_max", n.n_max);
    s.get("dissipator", n.dissipator);
    s.get("series_order", n.series_order);
    s.get("n_theta", n.n_theta);
    s.get("n_phi", n.n_phi);
    s.get("recoil", n.recoil);
    s.get("integrator", n.integrator);
    s.get("t_final_ms", n.t_final_ms);
    s.get("n_samples", n.n_samples);
    s.get("abs_tol", n.abs_tol);
    s.get("rel_tol", n.rel_tol);
    s.get("dt_max_us", n.dt_max_us);
    s.get("objective", n.objective);
    s.get("steady_eps_per_s", n.steady_eps_per_s);
    s.finish();
    return n;
}

StatisticsSpec read_stats(Section s) {
    StatisticsSpec t;
    s.get("shots", t.shots);
    s.get("n_resamples", t.n_resamples);
    s.get("level", t.level);
    s.get("seed", t.seed);
    s.get("c0", t.c0);
    s.get("c1", t.c1);
    s.get("c2", t.c2);
    s.get("plateau_start_ms", t.plateau_start_ms);
    s.get("plateau_stop_ms", t.plateau_stop_ms);
    s.finish();
    return t;
}

std::vector<double> number_list(Section& s, const std::string& k) {
    const json& v = s.raw(k);
    require(v.is_array(), s.path(k), "expected an array of numbers");
    std::vector<double> out;
    for (const auto& x : v) {
        require(x.is_number(), s.path(k), "expected numbers");
        out.push_back(x.get<double>());
    }
    return out;
}

std::vector<std::string> string_list(Section& s, const std::string& k) {
    const json& v = s.raw(k);
    require(v.is_array(), s.path(k), "expected an array of strings");
    std::vector<std::string> out;
    for (const auto& x : v) {
        require(x.is_string(), s.path(k), "expected strings");
        out.push_back(x.get<std::string>());
    }
    return out;
}

// line and column of a byte offset
std::pair<int, int> locate(const std::string& text, size_t byte) {
    int line = 1, col = 1;
    for (size_t i = 0; i < std::min(byte, text.size()); ++i) {
        if (text[i] == '\n') ++line, col = 1;
        else ++col;
    }
    return {line, col};
}

}  // namespace

ExperimentSpec parse_spec(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        const auto [line, col] = locate(text, e.byte > 0 ? e.byte - 1 : 0);
        throw SpecError("", "JSON syntax error at line " + std::to_string(line) + ", column " + std::to_string(col) + ": " +
                                e.what(),
                        line, col);
    }
    Section root(j, "");
    ExperimentSpec s;
    require(root.has("experiment"), "experiment", "missing (one of: time_sweep, eta_sweep, optimize, error_budget, "
                                                  "cooling_interleave, phi_calibration, synthetic_readout)");
    std::string e;
    root.get("experiment", e);
    s.experiment = parse_experiment(e);
    if (auto x = root.sub("protocol")) s.protocol = read_protocol(*x);
    if (auto x = root.sub("beams")) s.beams = read_beams(*x);
    if (auto x = root.sub("rate_table")) s.rate_table = read_rates(*x);
    if (auto x = root.sub("large_detuning")) s.large_detuning = read_large(*x);
    if (auto x = root.sub("numerics")) s.numerics = read_numerics(*x);
    if (auto x = root.sub("statistics")) s.statistics = read_stats(*x);
    if (auto x = root.sub("eta_sweep")) {
        EtaSweepSpec v;
        if (x->has("etas")) v.etas = number_list(*x, "etas");
        x->get("mode", v.mode);
        x->get("budget_per_eta", v.budget_per_eta);
        x->finish();
        s.eta_sweep = v;
    }
    if (auto x = root.sub("optimize")) {
        OptimizeSpec v;
        x->get("starts", v.starts);
        x->get("budget", v.budget);
        if (x->has("free")) v.free = string_list(*x, "free");
        x->get("initial_step", v.initial_step);
        x->get("size_tol", v.size_tol);
        x->get("polish_n_max", v.polish_n_max);
        x->finish();
        s.optimize = v;
    }
    if (auto x = root.sub("error_budget")) {
        ErrorBudgetSpec v;
        if (x->has("cases")) v.cases = string_list(*x, "cases");
        x->finish();
        s.error_budget = v;
    }
    if (auto x = root.sub("cooling_interleave")) {
        CoolingSpec v;
        x->get("reset_period_us", v.reset_period_us);
        x->get("samples_per_period", v.samples_per_period);
        x->finish();
        s.cooling_interleave = v;
    }
    if (auto x = root.sub("phi_calibration")) {
        PhiCalSpec v;
        x->get("phi_start_rad", v.phi_start_rad);
        x->get("phi_stop_rad", v.phi_stop_rad);
        x->get("n_points", v.n_points);
        x->get("shots", v.shots);
        x->finish();
        s.phi_calibration = v;
    }
    if (auto x = root.sub("output")) {
        x->get("dir", s.output.dir);
        x->get("prefix", s.output.prefix);
        x->get("write_counts", s.output.write_counts);
        x->finish();
    }
    root.finish();
    validate(s);
    return s;
}

ExperimentSpec load_spec(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw SpecError("", "cannot open spec file '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_spec(ss.str());
}

void validate(const ExperimentSpec& s) {
    const auto& p = s.protocol;
    const auto ex = s.experiment;
    auto nonneg = [](const std::optional<double>& v, const char* f) {
        if (v) require(*v >= 0 && std::isfinite(*v), f, "must be a finite value >= 0");
    };
    nonneg(p.omega_bq_hz, "protocol.omega_bq_hz");
    nonneg(p.omega_ba_hz, "protocol.omega_ba_hz");
    nonneg(p.omega_c_hz, "protocol.omega_c_hz");
    nonneg(p.omega_res_hz, "protocol.omega_res_hz");
    if (p.t_rep_us) require(*p.t_rep_us > 0, "protocol.t_rep_us", "must be > 0");
    require(p.phi_rad >= 0 && p.phi_rad < 2 * M_PI, "protocol.phi_rad", "must lie in [0, 2 pi)");
    require(std::isfinite(p.global_phase_rad), "protocol.global_phase_rad", "must be finite");
    require(p.eta > 0 && p.eta <= 0.3, "protocol.eta", "must lie in (0, 0.3]");
    require(std::abs(p.rabi_imbalance) < 2, "protocol.rabi_imbalance", "must lie in (-2, 2)");
    one_of<std::string>(p.imbalance_target, {"qubit_sideband", "carrier_and_sideband"}, "protocol.imbalance_target");

    const int sources = int(s.beams.has_value()) + int(s.rate_table.has_value()) + int(s.large_detuning.has_value());
    if (s.beams && s.rate_table)
        throw SpecError("rate_table", "an explicit rate table and a beam configuration are mutually exclusive");
    require(sources <= 1, s.large_detuning ? "large_detuning" : "beams",
            "choose one of beams, rate_table, large_detuning");

    if (const auto& b = s.beams) {
        require(b->detuning_ghz != 0 && std::isfinite(b->detuning_ghz), "beams.detuning_ghz", "must be nonzero");
        require(b->b_pi >= 0 && b->b_pi <= 1, "beams.b_pi", "polarization component must lie in [0, 1]");
        require(b->r_plus >= 0 && b->r_plus <= 1, "beams.r_plus", "polarization component must lie in [0, 1]");
        require(b->red_to_blue_power > 0, "beams.red_to_blue_power", "must be > 0");
        one_of<std::string>(b->residual, {"off", "r_pi", "calibrated"}, "beams.residual");
        require(b->r_pi >= 0 && b->r_pi < 1, "beams.r_pi", "polarization component must lie in [0, 1)");
        require(b->r_pi * b->r_pi + b->r_plus * b->r_plus <= 1 + 1e-12 || b->r_plus == 1 || b->residual != "r_pi",
                "beams.r_pi", "r_plus and r_pi exceed a unit polarization");
        require(b->reference_omega_bq_hz > 0 && b->reference_omega_ba_hz > 0, "beams.reference_omega_bq_hz",
                "reference drives must be > 0");
        require(b->reference_detuning_ghz != 0, "beams.reference_detuning_ghz", "must be nonzero");
        require(b->reference_rate_hz >= 0, "beams.reference_rate_hz", "must be >= 0");
        require(p.omega_bq_hz && *p.omega_bq_hz > 0, "protocol.omega_bq_hz", "beams need a measured drive > 0");
        require(p.omega_ba_hz && *p.omega_ba_hz > 0, "protocol.omega_ba_hz", "beams need a measured drive > 0");
        require(!p.omega_res_hz, "protocol.omega_res_hz", "set by beams.residual; remove it");
    }
    if (const auto& r = s.rate_table) {
        for (size_t i = 0; i < r->raman.size(); ++i) {
            const auto f = "rate_table.raman[" + std::to_string(i) + "]";
            const int from = level_index(r->raman[i].from, f + ".from");
            level_index(r->raman[i].to, f + ".to");
            require(from != core::Leak, f + ".from", "leak does not scatter");
            try {
                dissipation::parse_polarization(r->raman[i].pol);
            } catch (const std::invalid_argument&) {
                throw SpecError(f + ".pol", "unknown polarization '" + r->raman[i].pol + "'");
            }
            require(r->raman[i].rate_per_s >= 0, f + ".rate_per_s", "must be >= 0");
        }
        require(r->rayleigh_rate_per_s >= 0, "rate_table.rayleigh_rate_per_s", "must be >= 0");
        double sum = 0;
        for (double w : r->rayleigh_mix) {
            require(w >= 0, "rate_table.rayleigh_mix", "weights must be >= 0");
            sum += w;
        }
        require(std::abs(sum - 1) < 1e-9, "rate_table.rayleigh_mix", "polarization weights must sum to 1");
    }
    if (const auto& l = s.large_detuning) {
        opt::OptSpace sp;
        const auto a = l->point.to_array();
        for (int i = 0; i < opt::ControlPoint::kDim; ++i)
            require(a[size_t(i)] >= sp.lo[size_t(i)] && a[size_t(i)] <= sp.hi[size_t(i)],
                    std::string("large_detuning.") + opt::ControlPoint::name(i), "outside the search bounds");
        require(l->p_blue_fraction > 0 && l->p_blue_fraction < 1, "large_detuning.p_blue_fraction", "must lie in (0, 1)");
        for (auto [v, f] : {std::pair{p.omega_bq_hz, "protocol.omega_bq_hz"}, {p.omega_c_hz, "protocol.omega_c_hz"},
                            {p.t_rep_us, "protocol.t_rep_us"}, {p.omega_res_hz, "protocol.omega_res_hz"}})
            require(!v, f, "derived from large_detuning; remove it");
    }

    const bool ld_exp = ex == Experiment::EtaSweep || ex == Experiment::Optimize || ex == Experiment::CoolingInterleave;
    if (ld_exp) {
        require(!s.beams && !s.rate_table, s.beams ? "beams" : "rate_table",
                "not used by " + experiment_name(ex) + " (large-detuning study)");
        for (auto [v, f] : {std::pair{p.omega_bq_hz, "protocol.omega_bq_hz"}, {p.omega_c_hz, "protocol.omega_c_hz"},
                            {p.t_rep_us, "protocol.t_rep_us"}, {p.omega_res_hz, "protocol.omega_res_hz"}})
            require(!v, f, "derived from large_detuning; remove it");
    }
    if (ex == Experiment::ErrorBudget)
        require(sources == 0, "error_budget", "uses the built-in finite-detuning presets; remove beams/rate_table/large_detuning");
    if ((ex == Experiment::TimeSweep || ex == Experiment::SyntheticReadout) && !s.large_detuning) {
        require(p.omega_ba_hz.has_value(), "protocol.omega_ba_hz", "required");
        require(p.t_rep_us.has_value(), "protocol.t_rep_us", "required");
    }

    auto only_for = [&](bool present, Experiment owner, const char* name) {
        if (present && ex != owner) throw SpecError(name, "section applies only to experiment " + experiment_name(owner));
    };
    only_for(s.eta_sweep.has_value(), Experiment::EtaSweep, "eta_sweep");
    only_for(s.optimize.has_value(), Experiment::Optimize, "optimize");
    only_for(s.error_budget.has_value(), Experiment::ErrorBudget, "error_budget");
    only_for(s.cooling_interleave.has_value(), Experiment::CoolingInterleave, "cooling_interleave");
    only_for(s.phi_calibration.has_value(), Experiment::PhiCalibration, "phi_calibration");

    const auto& n = s.numerics;
    require(n.n_max >= 1 && n.n_max <= 40, "numerics.n_max", "must lie in [1, 40]");
    one_of<std::string>(n.dissipator, {"quadrature", "series"}, "numerics.dissipator");
    require(n.series_order >= 1 && n.series_order <= 40, "numerics.series_order", "must lie in [1, 40]");
    require(n.n_theta >= 4 && n.n_phi >= 4, "numerics.n_theta", "quadrature needs at least 4 nodes per angle");
    one_of<std::string>(n.integrator, {"dopri5", "rk4"}, "numerics.integrator");
    require(n.t_final_ms > 0, "numerics.t_final_ms", "must be > 0");
    require(n.n_samples >= 1, "numerics.n_samples", "must be >= 1");
    require(n.abs_tol > 0 && n.rel_tol > 0, "numerics.abs_tol", "tolerances must be > 0");
    require(n.dt_max_us >= 0, "numerics.dt_max_us", "must be >= 0");
    one_of<std::string>(n.objective, {"steady", "plateau", "horizon"}, "numerics.objective");
    require(n.steady_eps_per_s > 0, "numerics.steady_eps_per_s", "must be > 0");

    const auto& t = s.statistics;
    require(t.shots >= 1, "statistics.shots", "must be >= 1");
    require(t.n_resamples >= 1, "statistics.n_resamples", "must be >= 1");
    require(t.level > 0 && t.level < 1, "statistics.level", "must lie in (0, 1)");
    require(t.c0 >= 0 && t.c1 > t.c0, "statistics.c1", "need 0 <= c0 < c1");
    if (t.c2) require(*t.c2 > t.c1, "statistics.c2", "must exceed c1");
    require(t.plateau_start_ms >= 0 && t.plateau_stop_ms > t.plateau_start_ms, "statistics.plateau_stop_ms",
            "plateau window must be nonempty");

    if (const auto& e = s.eta_sweep) {
        require(!e->etas.empty(), "eta_sweep.etas", "must not be empty");
        for (double v : e->etas) require(v > 0 && v <= 0.3, "eta_sweep.etas", "values must lie in (0, 0.3]");
        one_of<std::string>(e->mode, {"frozen", "reoptimize"}, "eta_sweep.mode");
        require(e->budget_per_eta >= 1, "eta_sweep.budget_per_eta", "must be >= 1");
    }
    if (const auto& o = s.optimize) {
        require(o->starts >= 1, "optimize.starts", "must be >= 1");
        require(o->budget >= 100, "optimize.budget", "must be >= 100 evaluations");
        require(!o->free.empty(), "optimize.free", "must name at least one parameter");
        for (const auto& f : o->free) control_index(f, "optimize.free");
        require(o->initial_step > 0 && o->initial_step <= 1, "optimize.initial_step", "must lie in (0, 1]");
        require(o->size_tol > 0, "optimize.size_tol", "must be > 0");
        require(o->polish_n_max >= 0 && o->polish_n_max <= 40, "optimize.polish_n_max", "must lie in [0, 40]");
    }
    if (const auto& b = s.error_budget) {
        require(!b->cases.empty(), "error_budget.cases", "must not be empty");
        for (const auto& c : b->cases) {
            try {
                opt::budget_case(c);
            } catch (const std::invalid_argument&) {
                throw SpecError("error_budget.cases", "unknown case '" + c + "'");
            }
        }
    }
    if (const auto& c = s.cooling_interleave) {
        if (c->reset_period_us) require(*c->reset_period_us > 0, "cooling_interleave.reset_period_us", "must be > 0");
        require(c->samples_per_period >= 2, "cooling_interleave.samples_per_period", "must be >= 2");
    }
    if (const auto& f = s.phi_calibration) {
        require(f->n_points >= 1, "phi_calibration.n_points", "must be >= 1");
        require(f->shots >= 0, "phi_calibration.shots", "must be >= 0");
        require(std::isfinite(f->phi_start_rad) && std::isfinite(f->phi_stop_rad), "phi_calibration.phi_start_rad",
                "must be finite");
    }
    require(!s.output.dir.empty(), "output.dir", "must not be empty");
}

std::string serialize(const ExperimentSpec& s) {
    json j;
    j["experiment"] = experiment_name(s.experiment);
    const auto& p = s.protocol;
    json jp;
    auto opt_set = [](json& o, const char* k, const std::optional<double>& v) {
        if (v) o[k] = *v;
    };
    opt_set(jp, "omega_bq_hz", p.omega_bq_hz);
    opt_set(jp, "omega_ba_hz", p.omega_ba_hz);
    opt_set(jp, "omega_c_hz", p.omega_c_hz);
    opt_set(jp, "omega_res_hz", p.omega_res_hz);
    opt_set(jp, "t_rep_us", p.t_rep_us);
    jp["phi_rad"] = p.phi_rad;
    jp["global_phase_rad"] = p.global_phase_rad;
    jp["eta"] = p.eta;
    jp["rabi_imbalance"] = p.rabi_imbalance;
    jp["imbalance_target"] = p.imbalance_target;
    jp["stark_hz"] = p.stark_hz;
    j["protocol"] = jp;
    if (const auto& b = s.beams)
        j["beams"] = {{"detuning_ghz", b->detuning_ghz},
                      {"b_pi", b->b_pi},
                      {"r_plus", b->r_plus},
                      {"red_to_blue_power", b->red_to_blue_power},
                      {"scattering", b->scattering},
                      {"residual", b->residual},
                      {"r_pi", b->r_pi},
                      {"reference_omega_bq_hz", b->reference_omega_bq_hz},
                      {"reference_omega_ba_hz", b->reference_omega_ba_hz},
                      {"reference_detuning_ghz", b->reference_detuning_ghz},
                      {"reference_rate_hz", b->reference_rate_hz}};
    if (const auto& r = s.rate_table) {
        json raman = json::array();
        for (const auto& x : r->raman)
            raman.push_back({{"from", x.from}, {"to", x.to}, {"pol", x.pol}, {"rate_per_s", x.rate_per_s}});
        j["rate_table"] = {{"raman", raman}, {"rayleigh_rate_per_s", r->rayleigh_rate_per_s}, {"rayleigh_mix", r->rayleigh_mix}};
    }
    if (const auto& l = s.large_detuning) {
        json jl;
        const auto a = l->point.to_array();
        for (int i = 0; i < opt::ControlPoint::kDim; ++i) jl[opt::ControlPoint::name(i)] = a[size_t(i)];
        jl["p_blue_fraction"] = l->p_blue_fraction;
        j["large_detuning"] = jl;
    }
    const auto& n = s.numerics;
    j["numerics"] = {{"n_max", n.n_max},         {"dissipator", n.dissipator}, {"series_order", n.series_order},
                     {"n_theta", n.n_theta},     {"n_phi", n.n_phi},           {"recoil", n.recoil},
                     {"integrator", n.integrator}, {"t_final_ms", n.t_final_ms}, {"n_samples", n.n_samples},
                     {"abs_tol", n.abs_tol},     {"rel_tol", n.rel_tol},       {"dt_max_us", n.dt_max_us},
                     {"objective", n.objective}, {"steady_eps_per_s", n.steady_eps_per_s}};
    const auto& t = s.statistics;
    json js = {{"shots", t.shots}, {"n_resamples", t.n_resamples}, {"level", t.level},
               {"seed", t.seed},   {"c0", t.c0},                   {"c1", t.c1},
               {"plateau_start_ms", t.plateau_start_ms}, {"plateau_stop_ms", t.plateau_stop_ms}};
    if (t.c2) js["c2"] = *t.c2;
    j["statistics"] = js;
    if (const auto& e = s.eta_sweep)
        j["eta_sweep"] = {{"etas", e->etas}, {"mode", e->mode}, {"budget_per_eta", e->budget_per_eta}};
    if (const auto& o = s.optimize)
        j["optimize"] = {{"starts", o->starts},   {"budget", o->budget},     {"free", o->free},
                         {"initial_step", o->initial_step}, {"size_tol", o->size_tol}, {"polish_n_max", o->polish_n_max}};
    if (const auto& b = s.error_budget) j["error_budget"] = {{"cases", b->cases}};
    if (const auto& c = s.cooling_interleave) {
        json jc = {{"samples_per_period", c->samples_per_period}};
        if (c->reset_period_us) jc["reset_period_us"] = *c->reset_period_us;
        j["cooling_interleave"] = jc;
    }
    if (const auto& f = s.phi_calibration)
        j["phi_calibration"] = {{"phi_start_rad", f->phi_start_rad}, {"phi_stop_rad", f->phi_stop_rad},
                                {"n_points", f->n_points},           {"shots", f->shots}};
    j["output"] = {{"dir", s.output.dir}, {"prefix", s.output.prefix}, {"write_counts", s.output.write_counts}};
    return j.dump(2) + "\n";
}

std::string sha256_hex(const std::string& data) {
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (!EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr))
        throw std::runtime_error("sha256: digest failed");
    static const char* hex = "0123456789abcdef";
    std::string out;
    for (unsigned i = 0; i < len; ++i) out += hex[md[i] >> 4], out += hex[md[i] & 15];
    return out;
}

std::string spec_hash(const ExperimentSpec& s) { return sha256_hex(serialize(s)); }

protocol::ProtocolParams protocol_params(const ExperimentSpec& s) {
    const auto& p = s.protocol;
    protocol::ProtocolParams q;
    const double tp = 2 * M_PI;
    q.omega_bq = tp * p.omega_bq_hz.value_or(0);
    q.omega_ba = tp * p.omega_ba_hz.value_or(0);
    q.omega_c = tp * p.omega_c_hz.value_or(0);
    q.omega_res = tp * p.omega_res_hz.value_or(0);
    q.t_rep = p.t_rep_us.value_or(34) * 1e-6;
    q.phi = p.phi_rad;
    q.global_phase = p.global_phase_rad;
    q.eta = p.eta;
    q.rabi_imbalance = p.rabi_imbalance;
    q.imbalance_target = p.imbalance_target == "carrier_and_sideband" ? protocol::ImbalanceTarget::CarrierAndSideband
                                                                      : protocol::ImbalanceTarget::QubitSideband;
    for (int i = 0; i < 2; ++i)
        for (int l = 0; l < 4; ++l) q.stark[size_t(i)][size_t(l)] = tp * p.stark_hz[size_t(i)][size_t(l)];
    return q;
}

opt::ModelOptions model_options(const ExperimentSpec& s) {
    opt::ModelOptions m;
    const auto& n = s.numerics;
    m.n_max = n.n_max;
    m.form = n.dissipator == "series" ? dissipation::DissipatorForm::Series : dissipation::DissipatorForm::Quadrature;
    m.series_order = n.series_order;
    m.n_theta = n.n_theta;
    m.n_phi = n.n_phi;
    m.recoil = n.recoil;
    return m;
}

engine::EvolutionConfig evolution_config(const ExperimentSpec& s) {
    const auto& n = s.numerics;
    engine::EvolutionConfig c;
    c.t_final = n.t_final_ms * 1e-3;
    c.sample_times = engine::uniform_times(c.t_final, n.n_samples);
    c.integrator = n.integrator == "rk4" ? engine::Integrator::RK4 : engine::Integrator::DOPRI5;
    c.abs_tol = n.abs_tol;
    c.rel_tol = n.rel_tol;
    c.dt_max = n.dt_max_us * 1e-6;
    return c;
}

readout::DetectionModel detection_model(const ExperimentSpec& s) {
    const auto& t = s.statistics;
    auto m = readout::DetectionModel::from_single(t.c0, t.c1);
    if (t.c2) m.c2 = *t.c2;
    m.validate();
    return m;
}

atomic::RateTable explicit_rate_table(const ExperimentSpec& s) {
    if (!s.rate_table) throw std::logic_error("explicit_rate_table: no rate_table section");
    atomic::RateTable t;
    const auto p = protocol_params(s);
    t.omega_bq = p.omega_bq;
    t.omega_ba = p.omega_ba;
    t.omega_res = p.omega_res;
    for (const auto& r : s.rate_table->raman)
        t.raman_rates.push_back({level_index(r.from, "rate_table"), level_index(r.to, "rate_table"),
                                 dissipation::parse_polarization(r.pol), r.rate_per_s});
    t.rayleigh_rate = s.rate_table->rayleigh_rate_per_s;
    t.rayleigh_mix = s.rate_table->rayleigh_mix;
    return t;
}

opt::OptSpace opt_space(const ExperimentSpec& s) {
    opt::OptSpace sp;
    if (s.large_detuning) sp.p_blue_fraction = s.large_detuning->p_blue_fraction;
    if (s.protocol.omega_ba_hz) sp.omega_ba = 2 * M_PI * *s.protocol.omega_ba_hz;
    if (s.optimize) {
        sp.free.fill(false);
        for (const auto& f : s.optimize->free) sp.free[size_t(control_index(f, "optimize.free"))] = true;
    }
    return sp;
}

opt::ObjectiveOptions objective_options(const ExperimentSpec& s) {
    opt::ObjectiveOptions o;
    o.mode = opt::parse_objective_mode(s.numerics.objective);
    o.model = model_options(s);
    o.horizon = s.numerics.t_final_ms * 1e-3;
    o.steady_eps = s.numerics.steady_eps_per_s;
    return o;
}

}  // namespace dissq::cli
