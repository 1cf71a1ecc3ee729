// dissq.cpp — command-line front end: run, verify, list-experiments
#include <CLI11.hpp>
#include <iostream>
#include <json.hpp>

#include "dissq/runner.hpp"

using namespace dissq::cli;
using json = nlohmann::json;

namespace {

int fail(const std::string& kind, const std::string& msg, const SpecError* se = nullptr) {
    json j = {{"error", kind}, {"message", msg}};
    if (se) {
        j["field"] = se->field;
        if (se->line > 0) {
            j["line"] = se->line;
            j["column"] = se->column;
        }
    }
    std::cerr << j.dump() << "\n";
    return kind == "spec" ? 2 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"dissipative two-ion entanglement simulator"};
    app.require_subcommand(1);

    std::string spec_path;
    RunOptions ro;
    std::string out_dir;
    auto* run = app.add_subcommand("run", "run the experiment described by a JSON spec");
    run->add_option("spec", spec_path, "experiment spec")->required()->check(CLI::ExistingFile);
    run->add_option("--threads", ro.threads, "worker threads")->check(CLI::PositiveNumber);
    run->add_option("--out", out_dir, "output directory (overrides output.dir)");

    auto* ver = app.add_subcommand("verify", "check generator invariants for a spec");
    ver->add_option("spec", spec_path, "experiment spec")->required()->check(CLI::ExistingFile);

    auto* list = app.add_subcommand("list-experiments", "print the experiment names");

    CLI11_PARSE(app, argc, argv);

    try {
        if (list->parsed()) {
            for (const auto& n : experiment_names()) std::cout << n << "\n";
            return 0;
        }
        auto spec = load_spec(spec_path);
        apply_seed_override(spec);
        if (ver->parsed()) {
            bool ok = true;
            for (const auto& v : verify(spec)) {
                std::cout << (v.pass ? "PASS " : "FAIL ") << v.name;
                if (!v.detail.empty()) std::cout << ": " << v.detail;
                std::cout << "\n";
                ok = ok && v.pass;
            }
            return ok ? 0 : 3;
        }
        if (!out_dir.empty()) ro.out_dir = out_dir;
        const auto r = run_experiment(spec, ro);
        for (const auto& p : write_results(r, spec, ro)) std::cout << p << "\n";
        std::cerr << r.experiment << ": " << r.table.rows.size() << " rows in " << r.wall_time_s << " s\n";
        return 0;
    } catch (const SpecError& e) {
        return fail("spec", e.what(), &e);
    } catch (const std::exception& e) {
        return fail("runtime", e.what());
    }
}
