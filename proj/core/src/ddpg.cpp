#include <algorithm>

#include "fedswarm/ddpg.hpp"
#include "fedswarm/error.hpp"

namespace fedswarm::ddpg {

AgentNets AgentNets::create(const DdpgParams& params, std::uint64_t actor_seed, std::uint64_t critic_seed) {
    std::mt19937_64 actor_rng(actor_seed);
    std::mt19937_64 critic_rng(critic_seed);
    return from_weights(nn::make_actor(params.hidden_width, actor_rng),
                        nn::make_critic(params.hidden_width, critic_rng), params);
}

AgentNets AgentNets::from_weights(nn::NetworkWeights actor, nn::NetworkWeights critic, const DdpgParams& params) {
    AgentNets nets;
    nets.actor = std::move(actor);
    nets.critic = std::move(critic);
    nets.target_actor = nets.actor;
    nets.target_critic = nets.critic;
    nets.actor_opt = nn::AdamState::init(nets.actor, nn::AdamParams{.learning_rate = params.actor_lr});
    nets.critic_opt = nn::AdamState::init(nets.critic, nn::AdamParams{.learning_rate = params.critic_lr});
    return nets;
}

nn::Vector<float> td_targets(const Batch& batch, const nn::NetworkWeights& target_actor,
                             const nn::NetworkWeights& target_critic, double gamma) {
    if (!(gamma >= 0.0 && gamma < 1.0)) throw InvalidArgument("gamma must lie in [0, 1)");
    const nn::Matrix<float> next_actions = nn::actor_forward_batch<float>(target_actor, batch.next_states);
    const nn::Vector<float> next_q = nn::critic_forward_batch<float>(target_critic, batch.next_states, next_actions);
    const auto g = static_cast<float>(gamma);
    return (batch.rewards.array() + g * (1.0f - batch.terminal.array()) * next_q.array()).matrix();
}

sim::Action act_with_exploration(const nn::NetworkWeights& actor, const sim::Observation& obs,
                                 const ExplorationNoise& noise, std::mt19937_64& rng) {
    sim::Action a = nn::actor_forward(actor, obs);
    if (noise.sigma_v > 0.0) a.v += std::normal_distribution<double>(0.0, noise.sigma_v)(rng);
    if (noise.sigma_omega > 0.0) a.omega += std::normal_distribution<double>(0.0, noise.sigma_omega)(rng);
    a.v = std::clamp(a.v, 0.0, sim::kMaxLinearVelocity);
    a.omega = std::clamp(a.omega, -sim::kMaxAngularVelocity, sim::kMaxAngularVelocity);
    return a;
}

TrainReport train_step(AgentNets& nets, const ReplayBuffer& buffer, std::size_t batch_size, double gamma,
                       std::mt19937_64& rng) {
    TrainReport report;
    if (batch_size == 0 || buffer.size() < batch_size) {
        report.skipped = true;
        return report;
    }
    const Batch batch = buffer.sample_batch(batch_size, rng);
    const nn::Vector<float> targets = td_targets(batch, nets.target_actor, nets.target_critic, gamma);

    const auto critic_grad = nn::backprop_critic<float>(nets.critic, batch.states, batch.actions, targets);
    nn::adam_step(nets.critic, critic_grad.grad, nets.critic_opt, nn::Direction::Minimize);

    const auto actor_grad = nn::backprop_actor<float>(nets.actor, nets.critic, batch.states);
    nn::adam_step(nets.actor, actor_grad.grad, nets.actor_opt, nn::Direction::Maximize);

    report.critic_loss = critic_grad.loss;
    report.mean_q = actor_grad.objective;
    return report;
}

void target_sync(AgentNets& nets) {
    nets.target_actor = nets.actor;
    nets.target_critic = nets.critic;
}

}  // namespace fedswarm::ddpg
