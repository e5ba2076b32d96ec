#pragma once

#include <cstddef>
#include <cstdint>
#include <numbers>
#include <random>
#include <span>
#include <vector>

#include "fedswarm/arena.hpp"
#include "fedswarm/neuralnet.hpp"

namespace fedswarm::ddpg {

struct Transition {
    sim::Observation state;
    sim::Action action;
    double reward = 0.0;
    sim::Observation next_state;
    bool terminal = false;  // next_state ended the episode by goal or collision
    friend bool operator==(const Transition&, const Transition&) = default;
};

/// Column-packed minibatch ready for the network code.
struct Batch {
    nn::Matrix<float> states;       // 26 x l
    nn::Matrix<float> actions;      // 2 x l
    nn::Vector<float> rewards;      // l
    nn::Matrix<float> next_states;  // 26 x l
    nn::Vector<float> terminal;     // l, 1 for terminal transitions

    std::size_t size() const { return static_cast<std::size_t>(states.cols()); }
};

Batch pack_batch(std::span<const Transition> transitions);

/// Fixed-capacity FIFO ring of transitions with uniform sampling with replacement.
class ReplayBuffer {
public:
    explicit ReplayBuffer(std::size_t capacity);

    void push(Transition t);

    /// `count` uniform draws with replacement. Throws InvalidArgument when fewer
    /// than `count` transitions are stored.
    std::vector<std::size_t> sample_indices(std::size_t count, std::mt19937_64& rng) const;
    std::vector<Transition> sample(std::size_t count, std::mt19937_64& rng) const;
    Batch sample_batch(std::size_t count, std::mt19937_64& rng) const;

    /// i = 0 is the oldest stored transition.
    const Transition& at(std::size_t i) const;
    std::vector<Transition> snapshot() const;

    std::size_t size() const { return items_.size(); }
    std::size_t capacity() const { return capacity_; }
    bool empty() const { return items_.empty(); }
    std::uint64_t total_pushed() const { return pushed_; }

private:
    std::size_t capacity_;
    std::vector<Transition> items_;
    std::size_t head_ = 0;  // oldest element once the ring is full
    std::uint64_t pushed_ = 0;
};

struct ExplorationNoise {
    double sigma_v = 0.1 * sim::kMaxLinearVelocity;       // 0.025 m/s
    double sigma_omega = 0.1 * sim::kMaxAngularVelocity;  // pi/20 rad/s
    friend bool operator==(const ExplorationNoise&, const ExplorationNoise&) = default;
};

struct DdpgParams {
    std::size_t hidden_width = 512;
    std::size_t batch_size = 128;
    std::size_t train_every = 1;    // t_train
    std::size_t target_every = 128; // t_target
    std::size_t buffer_capacity = 100000;
    double gamma = 0.99;
    double actor_lr = 1e-4;
    double critic_lr = 1e-3;
    ExplorationNoise noise;
    friend bool operator==(const DdpgParams&, const DdpgParams&) = default;
};

/// Online and target actor/critic plus their optimizers.
struct AgentNets {
    nn::NetworkWeights actor;
    nn::NetworkWeights critic;
    nn::NetworkWeights target_actor;
    nn::NetworkWeights target_critic;
    nn::AdamState actor_opt;
    nn::AdamState critic_opt;

    /// Targets start as copies of the freshly initialised online networks.
    static AgentNets create(const DdpgParams& params, std::uint64_t actor_seed, std::uint64_t critic_seed);
    /// Reuses existing weights; fresh optimizer state.
    static AgentNets from_weights(nn::NetworkWeights actor, nn::NetworkWeights critic, const DdpgParams& params);
};

/// y_i = r_i + gamma * (1 - terminal_i) * Q'(s_{i+1}, pi'(s_{i+1})).
nn::Vector<float> td_targets(const Batch& batch, const nn::NetworkWeights& target_actor,
                             const nn::NetworkWeights& target_critic, double gamma);

/// actor_forward plus per-dimension Gaussian noise, clamped to the velocity limits.
sim::Action act_with_exploration(const nn::NetworkWeights& actor, const sim::Observation& obs,
                                 const ExplorationNoise& noise, std::mt19937_64& rng);

struct TrainReport {
    bool skipped = false;  // buffer held fewer than batch_size transitions
    double critic_loss = 0.0;
    double mean_q = 0.0;   // mean Q(s, pi(s)) over the batch after the critic step
};

/// sample -> TD targets -> critic minimise -> actor maximise.
TrainReport train_step(AgentNets& nets, const ReplayBuffer& buffer, std::size_t batch_size, double gamma,
                       std::mt19937_64& rng);

/// Hard copy of online weights into the targets.
void target_sync(AgentNets& nets);

}  // namespace fedswarm::ddpg
