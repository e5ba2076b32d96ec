#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "fedswarm/config.hpp"
#include "fedswarm/metrics.hpp"
#include "fedswarm/strategies.hpp"

namespace fedswarm::exp {

std::string_view version();

struct AgentEval {
    double rho_s = 0.0;
    std::optional<double> t_comp;
};

/// Everything metrics.json holds for one (strategy, seed) cell.
struct CellMetrics {
    train::StrategyKind strategy = train::StrategyKind::IDDPG;
    std::uint64_t seed = 0;
    metrics::RewardCurve r_avg_curve;
    std::size_t n_ci = 0;
    std::size_t n_fa = 0;
    double rho_s = 0.0;             // mean over agents
    std::optional<double> t_comp;   // mean over agents that succeeded at least once
    std::uint64_t comm_bytes = 0;
    std::vector<AgentEval> agents;
};

/// Evaluates every agent's final actor in its own training arena and computes the training metrics.
CellMetrics compute_cell_metrics(const train::TrainingRecord& record, const ExperimentConfig& config);

std::string metrics_json(const CellMetrics& m);
CellMetrics parse_metrics_json(std::string_view text);

struct RunEntry {
    train::StrategyKind strategy = train::StrategyKind::IDDPG;
    std::uint64_t seed = 0;
    std::filesystem::path dir;          // relative to the manifest's output directory
    std::vector<std::string> files;
    double duration_s = 0.0;
    bool ok = true;
    std::string error;
};

struct RunManifest {
    std::string config_hash;
    std::string version;
    std::filesystem::path output_dir;
    std::vector<RunEntry> runs;
    double duration_s = 0.0;
};

using ProgressFn = std::function<void(std::string_view)>;

/// Runs every (strategy, seed) cell in order and writes, per cell, under
/// <output_dir>/<STRATEGY>/seed_<seed>/: record.json, ledger.csv,
/// ledger_summary.json, metrics.json and actor/critic checkpoints; plus
/// config.json and manifest.json at the top. A cell that aborts leaves its
/// partial outputs and a FAILED file, the manifest is written, and the error is rethrown.
RunManifest run_experiment(const ExperimentConfig& config, const ProgressFn& progress = {});

std::string manifest_json(const RunManifest& manifest);
RunManifest load_manifest(const std::filesystem::path& path);

/// Writes reward_curves.csv (episode,strategy,seed,r_avg), summary.csv
/// (strategy,n_ci,n_fa,rho_s,t_comp,comm_mb; means over seeds, recomputed from the
/// per-cell metrics.json files) and best_models.csv (strategy,seed,agent,rho_s,t_comp,actor)
/// into `out_dir`. Failed cells are skipped.
void emit_plot_data(const std::vector<RunManifest>& manifests, const std::filesystem::path& out_dir);

}  // namespace fedswarm::exp
