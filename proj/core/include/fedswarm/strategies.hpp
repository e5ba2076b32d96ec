#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fedswarm/arena.hpp"
#include "fedswarm/comms_ledger.hpp"
#include "fedswarm/ddpg.hpp"
#include "fedswarm/neuralnet.hpp"

namespace fedswarm::train {

enum class StrategyKind : std::uint8_t { IDDPG, SNDDPG, SEDDPG, FLDDPG };

inline constexpr StrategyKind kAllStrategies[] = {StrategyKind::IDDPG, StrategyKind::SNDDPG, StrategyKind::SEDDPG,
                                                  StrategyKind::FLDDPG};

std::string_view to_string(StrategyKind kind);
/// Case-insensitive; nullopt for unknown names.
std::optional<StrategyKind> parse_strategy(std::string_view name);

enum class MemoryTopology : std::uint8_t { Local, Shared };
enum class NetworkTopology : std::uint8_t { Local, Shared, Federated };

MemoryTopology memory_topology(StrategyKind kind);
NetworkTopology network_topology(StrategyKind kind);

/// Bytes one transition occupies on the wire in measured-size mode:
/// s, a, r, s' as float32 plus one terminal byte.
inline constexpr std::uint64_t kTransitionWireBytes = (2 * sim::kObservationSize + nn::kActionSize + 1) * 4 + 1;

struct TrainerConfig {
    std::size_t episodes = 120;           // M
    std::size_t steps_per_episode = 1024; // T
    std::size_t robots = 4;               // N
    double tau = 0.5;
    std::size_t federated_period = 1;     // T_wa, episodes
    std::size_t seddpg_period = 5;        // episodes
    std::size_t snddpg_period = 3;        // episodes
    ddpg::DdpgParams ddpg;
    sim::RewardParams reward;
    double dt = sim::kDefaultDt;
    double min_start_goal_distance = 1.0;
    std::vector<sim::ArenaSpec> arenas;   // one per robot
    comms::CommBudget comms;
    bool enforce_budget = true;
    /// Ledger sizes from serialized_size / transition counts instead of the configured constants.
    bool measured_sizes = false;
    std::uint64_t seed = 1;

    /// Throws ConfigError naming the offending field.
    void validate() const;
};

struct TrainingEvent {
    std::size_t episode = 0;
    std::string kind;
    std::string detail;
};

struct TrainingRecord {
    StrategyKind strategy = StrategyKind::IDDPG;
    std::uint64_t seed = 0;
    std::vector<std::vector<double>> rewards;  // [episode][agent] reward sums
    comms::CommLedger ledger;
    std::vector<nn::NetworkWeights> final_actors;   // per agent
    std::vector<nn::NetworkWeights> final_critics;  // per agent
    std::vector<TrainingEvent> events;
    std::vector<std::uint64_t> goals;       // per agent, over the whole run
    std::vector<std::uint64_t> collisions;  // per agent
    std::uint64_t train_steps = 0;
    std::uint64_t skipped_train_steps = 0;

    std::size_t episodes() const { return rewards.size(); }
    std::size_t agents() const { return rewards.empty() ? 0 : rewards.front().size(); }
    /// One agent's reward sums across episodes.
    std::vector<double> agent_curve(std::size_t agent) const;
};

/// Averages actors and critics separately and blends every agent towards the
/// mean with factor tau. Target networks and optimizer state are left alone.
void federated_round(std::span<ddpg::AgentNets> agents, double tau);

/// Called after every environment step: (agent, t within the episode, transition, step result).
using StepObserver =
    std::function<void(std::size_t, std::size_t, const ddpg::Transition&, const sim::StepResult&)>;
/// Replaces actor + exploration when set: (agent, observation) -> action.
using ActionOverride = std::function<sim::Action(std::size_t, const sim::Observation&)>;

/// N robots in N environments trained under one strategy. Each call to
/// run_episode collects exactly T transitions per robot (resetting the
/// environment after goal/collision), trains on the strategy's schedule and
/// performs any end-of-episode synchronization.
class SwarmTrainer {
public:
    SwarmTrainer(StrategyKind kind, TrainerConfig config);

    /// Per-agent reward sums of the episode just run.
    std::vector<double> run_episode();
    bool finished() const { return episode_ >= config_.episodes; }
    std::size_t episodes_done() const { return episode_; }

    TrainingRecord take_record();

    StrategyKind kind() const { return kind_; }
    const TrainerConfig& config() const { return config_; }
    /// Networks each robot trains (IDDPG/SEDDPG/FLDDPG) or the single server network (SNDDPG).
    std::span<const ddpg::AgentNets> networks() const { return nets_; }
    /// Actor robot `agent` currently acts with.
    const nn::NetworkWeights& acting_actor(std::size_t agent) const;
    /// Transitions robot `agent` trains from: its local memory, its view of the shared
    /// memory (SEDDPG), or the server memory (SNDDPG).
    const ddpg::ReplayBuffer& training_buffer(std::size_t agent) const;
    /// Transitions robot `agent` collected and has not uploaded yet (SEDDPG/SNDDPG).
    std::span<const ddpg::Transition> pending_upload(std::size_t agent) const;
    const comms::CommLedger& ledger() const { return record_.ledger; }
    const std::vector<TrainingEvent>& events() const { return record_.events; }

    void set_step_observer(StepObserver observer) { observer_ = std::move(observer); }
    void set_action_override(ActionOverride override_fn) { override_ = std::move(override_fn); }

private:
    void record_transfer(comms::CommKind kind, std::uint64_t bytes);
    void log(std::string kind, std::string detail);
    void train_local(std::size_t agent, std::size_t t);
    void end_of_episode();
    void sync_shared_experience();
    void sync_shared_network();

    StrategyKind kind_;
    TrainerConfig config_;
    std::vector<sim::Environment> envs_;
    std::vector<ddpg::AgentNets> nets_;
    std::vector<ddpg::ReplayBuffer> buffers_;  // local memory or local view of the shared one
    std::optional<ddpg::ReplayBuffer> server_buffer_;
    std::vector<std::vector<ddpg::Transition>> pending_;
    std::vector<nn::NetworkWeights> broadcast_actor_;  // SNDDPG frozen acting model
    std::vector<std::mt19937_64> explore_rngs_;
    std::vector<std::mt19937_64> sample_rngs_;
    std::vector<sim::Observation> obs_;
    std::size_t server_train_steps_ = 0;
    std::size_t episode_ = 0;
    TrainingRecord record_;
    StepObserver observer_;
    ActionOverride override_;
};

/// Runs all M episodes. Propagates comms::BudgetExceeded and NumericError.
TrainingRecord run_training(StrategyKind kind, const TrainerConfig& config);

}  // namespace fedswarm::train
