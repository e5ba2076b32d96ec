#include "fedswarm/strategies.hpp"

#include <algorithm>
#include <cctype>
#include <string>

#include "fedswarm/error.hpp"
#include "fedswarm/seeding.hpp"

namespace fedswarm::train {

std::string_view to_string(StrategyKind kind) {
    switch (kind) {
        case StrategyKind::IDDPG: return "IDDPG";
        case StrategyKind::SNDDPG: return "SNDDPG";
        case StrategyKind::SEDDPG: return "SEDDPG";
        case StrategyKind::FLDDPG: return "FLDDPG";
    }
    return "unknown";
}

std::optional<StrategyKind> parse_strategy(std::string_view name) {
    std::string upper(name);
    std::transform(upper.begin(), upper.end(), upper.begin(), [](unsigned char c) { return std::toupper(c); });
    for (StrategyKind k : kAllStrategies) {
        if (upper == to_string(k)) return k;
    }
    return std::nullopt;
}

MemoryTopology memory_topology(StrategyKind kind) {
    return kind == StrategyKind::SNDDPG || kind == StrategyKind::SEDDPG ? MemoryTopology::Shared
                                                                         : MemoryTopology::Local;
}

NetworkTopology network_topology(StrategyKind kind) {
    switch (kind) {
        case StrategyKind::SNDDPG: return NetworkTopology::Shared;
        case StrategyKind::FLDDPG: return NetworkTopology::Federated;
        default: return NetworkTopology::Local;
    }
}

void TrainerConfig::validate() const {
    auto require = [](bool ok, const std::string& field, const std::string& what) {
        if (!ok) throw ConfigError(field + ": " + what);
    };
    require(episodes >= 1, "episodes", "must be >= 1");
    require(steps_per_episode >= 1, "steps_per_episode", "must be >= 1");
    require(robots >= 1, "robots", "must be >= 1");
    require(tau >= 0.0 && tau <= 1.0, "tau", "must lie in [0, 1]");
    require(federated_period >= 1, "federated_period", "must be >= 1");
    require(seddpg_period >= 1, "seddpg_period", "must be >= 1");
    require(snddpg_period >= 1, "snddpg_period", "must be >= 1");
    require(ddpg.gamma >= 0.0 && ddpg.gamma < 1.0, "gamma", "must lie in [0, 1)");
    require(ddpg.hidden_width >= 1, "hidden_width", "must be >= 1");
    require(ddpg.batch_size >= 1, "batch_size", "must be >= 1");
    require(ddpg.train_every >= 1, "train_every", "must be >= 1");
    require(ddpg.target_every >= 1, "target_every", "must be >= 1");
    require(ddpg.buffer_capacity >= 1, "buffer_capacity", "must be >= 1");
    require(ddpg.actor_lr >= 0.0, "actor_lr", "must be >= 0");
    require(ddpg.critic_lr >= 0.0, "critic_lr", "must be >= 0");
    require(ddpg.noise.sigma_v >= 0.0, "noise_v", "must be >= 0");
    require(ddpg.noise.sigma_omega >= 0.0, "noise_omega", "must be >= 0");
    require(dt > 0.0, "dt", "must be > 0");
    require(min_start_goal_distance >= 0.0, "min_start_goal_distance", "must be >= 0");
    require(arenas.size() == robots, "arenas",
            "expected " + std::to_string(robots) + " arena specs, got " + std::to_string(arenas.size()));
    for (std::size_t i = 0; i < arenas.size(); ++i) {
        try {
            arenas[i].validate();
        } catch (const InvalidWorldState& e) {
            throw ConfigError("arenas[" + std::to_string(i) + "]: " + e.what());
        }
    }
    try {
        comms.validate();
    } catch (const InvalidArgument& e) {
        throw ConfigError(std::string("comms: ") + e.what());
    }
}

std::vector<double> TrainingRecord::agent_curve(std::size_t agent) const {
    std::vector<double> curve;
    curve.reserve(rewards.size());
    for (const auto& row : rewards) curve.push_back(row.at(agent));
    return curve;
}

void federated_round(std::span<ddpg::AgentNets> agents, double tau) {
    if (agents.empty()) throw InvalidArgument("federated_round needs at least one agent");
    if (!(tau >= 0.0 && tau <= 1.0)) throw InvalidArgument("federated_round: tau must lie in [0, 1]");

    std::vector<const nn::NetworkWeights*> actors;
    std::vector<const nn::NetworkWeights*> critics;
    for (const auto& a : agents) {
        actors.push_back(&a.actor);
        critics.push_back(&a.critic);
    }
    const nn::NetworkWeights mean_actor = nn::fedavg(actors);
    const nn::NetworkWeights mean_critic = nn::fedavg(critics);
    for (auto& a : agents) {
        nn::soft_blend_into(a.actor, mean_actor, tau);
        nn::soft_blend_into(a.critic, mean_critic, tau);
    }
}

// SwarmTrainer -------------------------------------------------------------

SwarmTrainer::SwarmTrainer(StrategyKind kind, TrainerConfig config) : kind_(kind), config_(std::move(config)) {
    config_.validate();
    const std::size_t n = config_.robots;
    const std::uint64_t seed = config_.seed;

    sim::EnvParams env_params;
    env_params.dt = config_.dt;
    env_params.max_steps = config_.steps_per_episode;
    env_params.min_start_goal_distance = config_.min_start_goal_distance;
    env_params.reward = config_.reward;

    envs_.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        envs_.emplace_back(config_.arenas[i], env_params, derive_seed(seed, SeedStream::Environment, i));
        explore_rngs_.emplace_back(derive_seed(seed, SeedStream::Exploration, i));
        sample_rngs_.emplace_back(derive_seed(seed, SeedStream::Sampling, i));
    }
    obs_.resize(n);
    pending_.resize(n);

    const auto make_nets = [&](std::size_t i) {
        return ddpg::AgentNets::create(config_.ddpg, derive_seed(seed, SeedStream::ActorInit, i),
                                       derive_seed(seed, SeedStream::CriticInit, i));
    };
    if (kind_ == StrategyKind::SNDDPG) {
        nets_.push_back(make_nets(0));
        broadcast_actor_.assign(n, nets_.front().actor);
        server_buffer_.emplace(config_.ddpg.buffer_capacity);
    } else {
        for (std::size_t i = 0; i < n; ++i) {
            nets_.push_back(make_nets(i));
            buffers_.emplace_back(config_.ddpg.buffer_capacity);
        }
        if (kind_ == StrategyKind::SEDDPG) server_buffer_.emplace(config_.ddpg.buffer_capacity);
    }

    record_.strategy = kind_;
    record_.seed = seed;
    record_.ledger = comms::CommLedger(config_.enforce_budget ? std::optional(config_.comms.total_budget)
                                                              : std::nullopt);
    record_.goals.assign(n, 0);
    record_.collisions.assign(n, 0);

    log("note", "TD targets mask terminal (goal/collision) transitions");
    log("note", "target networks: hard copy every target_every steps within an episode");
    log("note", "environment resets after goal/collision; every episode collects exactly T transitions per robot");
    switch (kind_) {
        case StrategyKind::IDDPG: log("note", "local memory, local networks, no communication"); break;
        case StrategyKind::FLDDPG:
            log("note", "local memory, federated averaging of actor and critic every federated_period episodes; "
                        "targets not averaged");
            break;
        case StrategyKind::SEDDPG:
            log("note", "agents train on a local view of the shared memory; new transitions merge and the "
                        "merged memory is redistributed every seddpg_period episodes");
            break;
        case StrategyKind::SNDDPG:
            log("note", "agents act with the last broadcast model and bank transitions; every snddpg_period "
                        "episodes the server ingests them, runs the same number of train steps the robots "
                        "would have run locally, and broadcasts the refreshed actor");
            break;
    }
    if (config_.measured_sizes) log("note", "ledger uses measured payload sizes");
}

void SwarmTrainer::log(std::string kind, std::string detail) {
    record_.events.push_back({episode_, std::move(kind), std::move(detail)});
}

const nn::NetworkWeights& SwarmTrainer::acting_actor(std::size_t agent) const {
    if (kind_ == StrategyKind::SNDDPG) return broadcast_actor_.at(agent);
    return nets_.at(agent).actor;
}

const ddpg::ReplayBuffer& SwarmTrainer::training_buffer(std::size_t agent) const {
    if (kind_ == StrategyKind::SNDDPG) return *server_buffer_;
    return buffers_.at(agent);
}

std::span<const ddpg::Transition> SwarmTrainer::pending_upload(std::size_t agent) const {
    return pending_.at(agent);
}

void SwarmTrainer::record_transfer(comms::CommKind kind, std::uint64_t bytes) {
    if (bytes == 0) return;  // nothing to send
    record_.ledger.record(comms::CommEvent{episode_, comms::kAllAgents, kind, bytes});
}

std::vector<double> SwarmTrainer::run_episode() {
    if (finished()) throw InvalidArgument("all configured episodes have already run");
    ++episode_;
    const std::size_t n = config_.robots;
    std::vector<double> sums(n, 0.0);

    for (std::size_t i = 0; i < n; ++i) obs_[i] = envs_[i].reset();

    for (std::size_t t = 1; t <= config_.steps_per_episode; ++t) {
        for (std::size_t i = 0; i < n; ++i) {
            const sim::Action action =
                override_ ? override_(i, obs_[i])
                          : ddpg::act_with_exploration(acting_actor(i), obs_[i], config_.ddpg.noise, explore_rngs_[i]);
            const sim::StepResult step = envs_[i].step(action);
            const bool terminal =
                step.status == sim::EpisodeStatus::GoalReached || step.status == sim::EpisodeStatus::Collided;
            ddpg::Transition tr{obs_[i], action, step.reward.total, step.observation, terminal};

            sums[i] += step.reward.total;
            if (step.status == sim::EpisodeStatus::GoalReached) ++record_.goals[i];
            if (step.status == sim::EpisodeStatus::Collided) ++record_.collisions[i];
            if (observer_) observer_(i, t, tr, step);

            switch (kind_) {
                case StrategyKind::IDDPG:
                case StrategyKind::FLDDPG: buffers_[i].push(std::move(tr)); break;
                case StrategyKind::SEDDPG:
                    buffers_[i].push(tr);
                    pending_[i].push_back(std::move(tr));
                    break;
                case StrategyKind::SNDDPG: pending_[i].push_back(std::move(tr)); break;
            }
            obs_[i] = sim::is_terminal(step.status) ? envs_[i].reset() : step.observation;
        }
        if (kind_ != StrategyKind::SNDDPG) {
            for (std::size_t i = 0; i < n; ++i) train_local(i, t);
        }
    }

    end_of_episode();
    record_.rewards.push_back(sums);
    return sums;
}

void SwarmTrainer::train_local(std::size_t agent, std::size_t t) {
    const auto& p = config_.ddpg;
    if (t % p.train_every == 0) {
        const auto report = ddpg::train_step(nets_[agent], buffers_[agent], p.batch_size, p.gamma, sample_rngs_[agent]);
        if (report.skipped) {
            ++record_.skipped_train_steps;
        } else {
            ++record_.train_steps;
        }
    }
    if (t % p.target_every == 0) ddpg::target_sync(nets_[agent]);
}

void SwarmTrainer::end_of_episode() {
    const std::size_t e = episode_;
    switch (kind_) {
        case StrategyKind::IDDPG: break;
        case StrategyKind::FLDDPG:
            if (e % config_.federated_period == 0) {
                const std::uint64_t bytes =
                    config_.measured_sizes
                        ? nn::serialized_size(nets_.front().actor) + nn::serialized_size(nets_.front().critic)
                        : config_.comms.model_oneway;
                record_transfer(comms::CommKind::ModelUp, bytes);
                record_transfer(comms::CommKind::ModelDown, bytes);
                federated_round(nets_, config_.tau);
                log("federated_round", "tau=" + std::to_string(config_.tau));
            }
            break;
        case StrategyKind::SEDDPG:
            if (e % config_.seddpg_period == 0) sync_shared_experience();
            break;
        case StrategyKind::SNDDPG:
            if (e % config_.snddpg_period == 0) sync_shared_network();
            break;
    }
}

void SwarmTrainer::sync_shared_experience() {
    const std::size_t n = config_.robots;
    const std::uint64_t per_agent = pending_.front().size();
    const std::uint64_t up = config_.measured_sizes ? per_agent * kTransitionWireBytes : config_.comms.buffer_oneway;
    const std::uint64_t down =
        config_.measured_sizes ? (n - 1) * per_agent * kTransitionWireBytes : config_.comms.buffer_oneway;
    record_transfer(comms::CommKind::BufferUp, up);
    record_transfer(comms::CommKind::BufferDown, down);

    for (auto& bank : pending_) {
        for (auto& tr : bank) server_buffer_->push(std::move(tr));
        bank.clear();
    }
    for (auto& view : buffers_) view = *server_buffer_;
    log("buffer_sync", "shared memory holds " + std::to_string(server_buffer_->size()) + " transitions");
}

void SwarmTrainer::sync_shared_network() {
    const std::size_t n = config_.robots;
    const auto& p = config_.ddpg;
    ddpg::AgentNets& server = nets_.front();

    const std::uint64_t banked = pending_.front().size();
    const std::uint64_t bytes = config_.measured_sizes
                                    ? banked * kTransitionWireBytes + nn::serialized_size(server.actor)
                                    : config_.comms.snddpg_per_update;
    record_transfer(comms::CommKind::CombinedUpdate, bytes);

    for (auto& bank : pending_) {
        for (auto& tr : bank) server_buffer_->push(std::move(tr));
        bank.clear();
    }

    const std::size_t steps = n * config_.snddpg_period * (config_.steps_per_episode / p.train_every);
    const std::size_t target_interval = std::max<std::size_t>(1, p.target_every / p.train_every);
    std::size_t skipped = 0;
    for (std::size_t k = 0; k < steps; ++k) {
        const auto report = ddpg::train_step(server, *server_buffer_, p.batch_size, p.gamma, sample_rngs_.front());
        if (report.skipped) {
            ++skipped;
            ++record_.skipped_train_steps;
        } else {
            ++record_.train_steps;
        }
        ++server_train_steps_;
        if (server_train_steps_ % target_interval == 0) ddpg::target_sync(server);
    }
    for (auto& actor : broadcast_actor_) actor = server.actor;
    log("model_sync", "server ran " + std::to_string(steps - skipped) + " train steps on " +
                          std::to_string(server_buffer_->size()) + " transitions");
}

TrainingRecord SwarmTrainer::take_record() {
    record_.final_actors.clear();
    record_.final_critics.clear();
    for (std::size_t i = 0; i < config_.robots; ++i) {
        const auto& nets = kind_ == StrategyKind::SNDDPG ? nets_.front() : nets_[i];
        record_.final_actors.push_back(nets.actor);
        record_.final_critics.push_back(nets.critic);
    }
    return std::move(record_);
}

TrainingRecord run_training(StrategyKind kind, const TrainerConfig& config) {
    SwarmTrainer trainer(kind, config);
    while (!trainer.finished()) trainer.run_episode();
    return trainer.take_record();
}

}  // namespace fedswarm::train
