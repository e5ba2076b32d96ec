#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "fedswarm/metrics.hpp"
#include "fedswarm/strategies.hpp"

namespace fedswarm::exp {

struct ExperimentConfig {
    train::TrainerConfig trainer;  // trainer.seed is overwritten per run
    /// Side length used to generate trainer.arenas when none are given explicitly.
    double arena_size = 4.0;
    std::vector<train::StrategyKind> strategies{std::begin(train::kAllStrategies), std::end(train::kAllStrategies)};
    std::vector<std::uint64_t> seeds{1, 2, 3};
    metrics::EvalSpec eval;
    std::filesystem::path output_dir = "runs";
    bool save_checkpoints = true;

    /// Throws ConfigError naming the offending field.
    void validate() const;
};

/// Full-scale defaults: 120 x 1024-step episodes, 4 m arenas, hidden width 512.
ExperimentConfig full_preset();
/// N = 4, M = 30, T = 256, hidden width 64, 2.5 m arenas.
ExperimentConfig desk_preset();
/// "full" or "desk"; throws ConfigError otherwise.
ExperimentConfig preset(std::string_view name);

/// JSON text. Missing keys keep the defaults of the selected "preset" (full when
/// absent); unknown keys and out-of-range values throw ConfigError naming the field.
/// Whitespace-only text yields the full preset.
ExperimentConfig parse_config(std::string_view text);
ExperimentConfig load_config(const std::filesystem::path& path);

/// Fully explicit JSON; parse_config(dump_config(c)) == c.
std::string dump_config(const ExperimentConfig& config);
void save_config(const std::filesystem::path& path, const ExperimentConfig& config);

/// FNV-1a over the canonical dump, as 16 hex digits. Independent of key order in the source file.
std::string config_hash(const ExperimentConfig& config);

bool operator==(const ExperimentConfig& a, const ExperimentConfig& b);

/// Arena description: a JSON file path or a built-in layout "open|pillar|walls|boxes[:size]".
sim::ArenaSpec load_arena(std::string_view spec);
std::string dump_arena(const sim::ArenaSpec& arena);

}  // namespace fedswarm::exp
