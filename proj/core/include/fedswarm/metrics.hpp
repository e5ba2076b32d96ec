#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "fedswarm/arena.hpp"
#include "fedswarm/neuralnet.hpp"
#include "fedswarm/strategies.hpp"

namespace fedswarm::metrics {

/// Per-episode reward averaged over agents.
using RewardCurve = std::vector<double>;

RewardCurve average_reward_curve(const train::TrainingRecord& record);

/// Consecutive-episode jumps strictly larger than half the curve's range.
/// Throws InvalidArgument for curves shorter than 2.
std::size_t count_catastrophic_interference(std::span<const double> curve);

/// |last - first| <= 1 and max - min < 1.5 on the raw curve.
bool is_failed_agent(std::span<const double> agent_curve);
std::size_t count_failed_agents(const train::TrainingRecord& record);

struct EvalSpec {
    std::size_t runs = 20;
    double time_limit = 102.4;  // s
    double dt = sim::kDefaultDt;
    double min_start_goal_distance = 1.0;
};

struct EvalRun {
    sim::Pose start;
    sim::Point goal;
    std::vector<sim::Action> actions;
    sim::EpisodeStatus status = sim::EpisodeStatus::Running;
    std::size_t steps = 0;
};

struct EvalResult {
    double rho_s = 0.0;
    std::optional<double> t_comp;  // s, mean over successful runs
    std::size_t runs = 0;
    std::size_t successes = 0;
    friend bool operator==(const EvalResult&, const EvalResult&) = default;
};

using Policy = std::function<sim::Action(const sim::Observation&)>;

/// Noise-free rollouts from seeded random start/goal pairs. A run succeeds when
/// the goal is reached before the time limit without a collision. When `trace`
/// is non-null every rollout's start, goal and action sequence is appended to it.
EvalResult evaluate_policy(const Policy& policy, const sim::ArenaSpec& arena, const EvalSpec& spec,
                           std::uint64_t seed, std::vector<EvalRun>* trace = nullptr);

/// Greedy actor.
EvalResult evaluate(const nn::NetworkWeights& actor, const sim::ArenaSpec& arena, const EvalSpec& spec,
                    std::uint64_t seed, std::vector<EvalRun>* trace = nullptr);

}  // namespace fedswarm::metrics
