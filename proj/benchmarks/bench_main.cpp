#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "fedswarm/arena.hpp"
#include "fedswarm/ddpg.hpp"
#include "fedswarm/neuralnet.hpp"
#include "fedswarm/strategies.hpp"

using namespace fedswarm;

namespace {

sim::Observation random_obs(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    sim::Observation o;
    o.d = 3.0 * u(rng);
    o.theta_d = 2.0 * u(rng) - 1.0;
    for (auto& s : o.s_laser) s = u(rng);
    return o;
}

void BM_RaycastScan(benchmark::State& state) {
    const auto arena = sim::training_arenas(4, 4.0)[3];
    const sim::Pose pose{1.0, 2.0, 0.3};
    for (auto _ : state) benchmark::DoNotOptimize(sim::raycast_scan(pose, arena));
}
BENCHMARK(BM_RaycastScan);

void BM_ActorForward(benchmark::State& state) {
    std::mt19937_64 rng(1);
    const auto actor = nn::make_actor(static_cast<std::size_t>(state.range(0)), rng);
    const auto obs = random_obs(rng);
    for (auto _ : state) benchmark::DoNotOptimize(nn::actor_forward(actor, obs));
}
BENCHMARK(BM_ActorForward)->Arg(64)->Arg(512);

void BM_TrainStep(benchmark::State& state) {
    ddpg::DdpgParams params;
    params.hidden_width = static_cast<std::size_t>(state.range(0));
    params.batch_size = static_cast<std::size_t>(state.range(1));
    auto nets = ddpg::AgentNets::create(params, 1, 2);
    std::mt19937_64 rng(3);
    ddpg::ReplayBuffer buffer(1024);
    for (int i = 0; i < 1024; ++i) {
        ddpg::Transition t;
        t.state = random_obs(rng);
        t.next_state = random_obs(rng);
        t.action = {0.1, 0.2};
        t.reward = -1.0;
        buffer.push(t);
    }
    for (auto _ : state) benchmark::DoNotOptimize(ddpg::train_step(nets, buffer, params.batch_size, 0.99, rng));
}
BENCHMARK(BM_TrainStep)->Args({64, 64})->Args({512, 128})->Unit(benchmark::kMicrosecond);

void BM_FederatedRound(benchmark::State& state) {
    ddpg::DdpgParams params;
    params.hidden_width = static_cast<std::size_t>(state.range(0));
    std::vector<ddpg::AgentNets> agents;
    for (std::uint64_t i = 0; i < 4; ++i) agents.push_back(ddpg::AgentNets::create(params, 2 * i, 2 * i + 1));
    for (auto _ : state) train::federated_round(agents, 0.5);
}
BENCHMARK(BM_FederatedRound)->Arg(64)->Arg(512)->Unit(benchmark::kMicrosecond);

}  // namespace
BENCHMARK_MAIN();
