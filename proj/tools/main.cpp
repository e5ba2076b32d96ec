#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "fedswarm/checkpoint.hpp"
#include "fedswarm/comms_ledger.hpp"
#include "fedswarm/config.hpp"
#include "fedswarm/error.hpp"
#include "fedswarm/experiment.hpp"
#include "fedswarm/metrics.hpp"

namespace fs = std::filesystem;
using namespace fedswarm;

namespace {

enum ExitCode : int { kOk = 0, kFailure = 1, kBadConfig = 2, kAborted = 3 };

int cmd_train(const std::string& config_path, const std::vector<std::string>& strategies,
              const std::vector<std::uint64_t>& seeds, const std::string& out, bool measured) {
    exp::ExperimentConfig config = exp::load_config(config_path);
    if (!strategies.empty()) {
        config.strategies.clear();
        for (const auto& name : strategies) {
            const auto kind = train::parse_strategy(name);
            if (!kind) throw ConfigError("--strategy: unknown strategy '" + name + "'");
            config.strategies.push_back(*kind);
        }
    }
    if (!seeds.empty()) config.seeds = seeds;
    if (!out.empty()) config.output_dir = out;
    if (measured) config.trainer.measured_sizes = true;
    config.validate();

    const auto manifest = exp::run_experiment(config, [](std::string_view msg) {
        std::cerr << "[train] " << msg << "\n";
    });
    exp::emit_plot_data({manifest}, config.output_dir);
    std::cerr << "[train] wrote " << config.output_dir.string() << " in " << manifest.duration_s << " s\n";
    return kOk;
}

int cmd_eval(const std::string& weights, const std::string& arena_spec, std::size_t runs, std::uint64_t seed,
             double time_limit, double dt) {
    const auto actor = nn::load_checkpoint(weights);
    const auto arena = exp::load_arena(arena_spec);
    metrics::EvalSpec spec;
    spec.runs = runs;
    spec.time_limit = time_limit;
    spec.dt = dt;
    const auto res = metrics::evaluate(actor, arena, spec, seed);
    nlohmann::ordered_json out{{"runs", res.runs}, {"successes", res.successes}, {"rho_s", res.rho_s},
                               {"t_comp", res.t_comp ? nlohmann::ordered_json(*res.t_comp) : nlohmann::ordered_json(nullptr)}};
    std::cout << out.dump(2) << "\n";
    return kOk;
}

int cmd_report(const std::string& in, const std::string& out) {
    std::vector<exp::RunManifest> manifests;
    const fs::path root(in);
    if (fs::is_regular_file(root / "manifest.json")) {
        manifests.push_back(exp::load_manifest(root / "manifest.json"));
    } else {
        std::vector<fs::path> found;
        for (const auto& e : fs::recursive_directory_iterator(root)) {
            if (e.is_regular_file() && e.path().filename() == "manifest.json") found.push_back(e.path());
        }
        std::sort(found.begin(), found.end());
        for (const auto& p : found) manifests.push_back(exp::load_manifest(p));
    }
    if (manifests.empty()) {
        std::cerr << "error: no manifest.json under " << in << "\n";
        return kFailure;
    }
    const fs::path dest = out.empty() ? root : fs::path(out);
    exp::emit_plot_data(manifests, dest);
    std::cerr << "[report] wrote reward_curves.csv, summary.csv, best_models.csv to " << dest.string() << "\n";
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Federated DDPG training for simulated robot swarms"};
    app.set_version_flag("--version", std::string(exp::version()));
    app.require_subcommand(1);

    std::string config_path, out;
    std::vector<std::string> strategies;
    std::vector<std::uint64_t> seeds;
    bool measured = false;
    auto* train = app.add_subcommand("train", "Run every (strategy, seed) cell of an experiment");
    train->add_option("--config", config_path, "Experiment config (JSON)")->required();
    train->add_option("--strategy", strategies, "IDDPG, SNDDPG, SEDDPG or FLDDPG; repeatable");
    train->add_option("--seed", seeds, "Seed; repeatable");
    train->add_option("--out", out, "Output directory (overrides output_dir)");
    train->add_flag("--measured-sizes", measured, "Ledger uses measured payload sizes");

    std::string weights, arena = "open";
    std::size_t runs = 20;
    std::uint64_t eval_seed = 1;
    double time_limit = 102.4, dt = sim::kDefaultDt;
    auto* eval = app.add_subcommand("eval", "Evaluate an actor checkpoint");
    eval->add_option("--weights", weights, "Actor checkpoint (.fswn)")->required()->check(CLI::ExistingFile);
    eval->add_option("--arena", arena, "Arena JSON file or open|pillar|walls|boxes[:size]")->capture_default_str();
    eval->add_option("--runs", runs, "Number of rollouts")->capture_default_str()->check(CLI::PositiveNumber);
    eval->add_option("--seed", eval_seed, "Start/goal seed")->capture_default_str();
    eval->add_option("--time-limit", time_limit, "Seconds per rollout")->capture_default_str();
    eval->add_option("--dt", dt, "Control period in seconds")->capture_default_str();

    std::string report_in, report_out;
    auto* report = app.add_subcommand("report", "Emit plot CSVs from finished runs");
    report->add_option("--in", report_in, "Run directory")->required()->check(CLI::ExistingDirectory);
    report->add_option("--out", report_out, "Destination (defaults to --in)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        // --help and --version arrive here too, with exit code 0.
        return app.exit(e) == 0 ? kOk : kBadConfig;
    }

    try {
        if (*train) return cmd_train(config_path, strategies, seeds, out, measured);
        if (*eval) return cmd_eval(weights, arena, runs, eval_seed, time_limit, dt);
        if (*report) return cmd_report(report_in, report_out);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kBadConfig;
    } catch (const comms::BudgetExceeded& e) {
        std::cerr << "aborted: " << e.what() << "\n";
        return kAborted;
    } catch (const NumericError& e) {
        std::cerr << "aborted: " << e.what() << "\n";
        return kAborted;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kFailure;
    }
    return kFailure;
}
