// bloodnet: command-line front end.
//
//   bloodnet simulate <config> [--t-end X] [--dt X] [--output DIR] [--check-only] [--snapshot t1,t2,...]
//
// Exit codes: 0 success, 1 usage or parse error, 2 well-posedness failure,
// 3 solver failure.

#include <CLI11.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "bloodnet/bloodnet.hpp"

namespace fs = std::filesystem;
using namespace bloodnet;

namespace {

enum Exit { kOk = 0, kUsage = 1, kIllPosed = 2, kSolver = 3 };

struct SimulateArgs {
    std::string config;
    std::optional<double> t_end;
    std::optional<double> dt;
    std::optional<std::string> output;
    bool check_only = false;
    std::vector<double> snapshots;
};

void print_settings(const Scenario& sc) {
    std::cout << "solver settings: " << solver_json(sc.solver).dump() << '\n';
    for (const auto& w : sc.warnings) std::cout << "warning [" << w.subject << "] " << w.message << '\n';
}

void print_compatibility(const std::vector<CompatibilityEntry>& entries) {
    for (const auto& e : entries) {
        if (!e.severity) continue;
        std::cout << (*e.severity == Severity::error ? "error" : "warning") << " [" << e.node << "] initial "
                  << e.quantity << " residual " << e.residual << '\n';
    }
}

int simulate(const SimulateArgs& args) {
    Scenario sc;
    try {
        sc = load_config(args.config);
        if (args.t_end) sc.solver.t_end = *args.t_end;
        if (args.dt) sc.solver.dt = *args.dt;
        if (args.output) sc.output.dir = *args.output;
        if (!args.snapshots.empty()) sc.output.snapshots = args.snapshots;
        validate(sc.solver);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kUsage;
    }
    print_settings(sc);

    InitialState init;
    try {
        init = initial_state(sc.network, sc.initial, sc.solver.epsilon0);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kUsage;
    } catch (const Error& e) {
        std::cout << "initial state rejected: " << e.what() << '\n';
        return kIllPosed;
    }
    print_compatibility(init.compatibility);
    const bool compat_ok = !has_errors(compatibility_diagnostics(init.compatibility));

    const auto report = check_state(sc.network, init.state, sc.solver.dt, sc.solver.epsilon0);
    std::cout << report.summary();
    if (args.check_only) {
        const bool ok = report.passed() && compat_ok;
        std::cout << (ok ? "check passed\n" : "check FAILED\n");
        return ok ? kOk : kIllPosed;
    }
    if (!report.passed() || !compat_ok) {
        std::cout << "well-posedness check failed; not running\n";
        return kIllPosed;
    }

    try {
        const fs::path dir = sc.output.dir;
        fs::create_directories(dir);
        std::ofstream csv(dir / sc.output.csv, std::ios::binary);
        if (!csv) throw Error("cannot open " + (dir / sc.output.csv).string());
        CsvSink sink(csv);
        sink.write_header();

        std::vector<double> snaps;
        for (double t : sc.output.snapshots) {
            if (t > sc.solver.t_end) std::cout << "warning: snapshot time " << t << " is after t_end; skipped\n";
            else snaps.push_back(t);
        }
        std::size_t snap_no = 0;
        const double tol = 1e-9 * sc.solver.dt;
        auto snapshot = [&](const NetworkState& st) {
            for (std::size_t k = 0; k < snaps.size(); ++k) {
                if (std::abs(snaps[k] - st.t) > tol) continue;
                std::ofstream out(dir / ("snapshot_" + std::to_string(k) + ".csv"), std::ios::binary);
                if (!out) throw Error("cannot open snapshot file");
                write_snapshot(out, sc.network, st);
                ++snap_no;
            }
        };
        snapshot(init.state);
        const auto rep = run(
            sc.network, init.state, sc.solver,
            [&](const NetworkState& st, const StepInfo&) {
                sink.write(probe_records(sc.network, st, sc.probes));
                snapshot(st);
            },
            snaps);
        std::cout << "steps " << rep.steps << ", Picard iterations " << rep.total_picard_iterations
                  << ", dt halvings " << rep.dt_adjustments << ", t_final " << rep.t_final << ", rows "
                  << sink.rows() << ", snapshots " << snap_no << '\n';
    } catch (const WellPosednessFailure& e) {
        std::cout << "well-posedness failure: " << e.what() << '\n';
        return kIllPosed;
    } catch (const std::exception& e) {
        std::cout << "solver failure: " << e.what() << '\n';
        return kSolver;
    }
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"One-dimensional blood flow on vessel networks"};
    app.require_subcommand(1);

    SimulateArgs args;
    auto* sim = app.add_subcommand("simulate", "run a scenario");
    sim->add_option("config", args.config, "scenario JSON file")->required()->check(CLI::ExistingFile);
    sim->add_option_function<double>("--t-end", [&](double v) { args.t_end = v; }, "final time (s)");
    sim->add_option_function<double>("--dt", [&](double v) { args.dt = v; }, "base time step (s)");
    sim->add_option_function<std::string>("--output", [&](const std::string& v) { args.output = v; },
                                          "output directory");
    sim->add_flag("--check-only", args.check_only, "run the well-posedness checks and exit");
    sim->add_option("--snapshot", args.snapshots, "times for full-field snapshots")->delimiter(',');

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kOk : kUsage;
    }
    return simulate(args);
}
