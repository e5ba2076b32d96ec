#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <random>

#include "fedswarm/error.hpp"
#include "fedswarm/strategies.hpp"
#include "oracles.hpp"

namespace fedswarm::train {
namespace {

TrainerConfig small_config(std::size_t episodes = 4, std::size_t steps = 16, std::size_t robots = 3) {
    TrainerConfig c;
    c.episodes = episodes;
    c.steps_per_episode = steps;
    c.robots = robots;
    c.ddpg.hidden_width = 8;
    c.ddpg.batch_size = 8;
    c.ddpg.target_every = 8;
    c.arenas = sim::training_arenas(robots, 2.5);
    c.seed = 42;
    return c;
}

TEST(StrategyKindTest, NamesAndTopologies) {
    for (auto k : kAllStrategies) EXPECT_EQ(parse_strategy(to_string(k)), k);
    EXPECT_EQ(parse_strategy("flddpg"), StrategyKind::FLDDPG);
    EXPECT_FALSE(parse_strategy("MADDPG").has_value());

    EXPECT_EQ(memory_topology(StrategyKind::IDDPG), MemoryTopology::Local);
    EXPECT_EQ(network_topology(StrategyKind::IDDPG), NetworkTopology::Local);
    EXPECT_EQ(memory_topology(StrategyKind::SNDDPG), MemoryTopology::Shared);
    EXPECT_EQ(network_topology(StrategyKind::SNDDPG), NetworkTopology::Shared);
    EXPECT_EQ(memory_topology(StrategyKind::SEDDPG), MemoryTopology::Shared);
    EXPECT_EQ(network_topology(StrategyKind::SEDDPG), NetworkTopology::Local);
    EXPECT_EQ(memory_topology(StrategyKind::FLDDPG), MemoryTopology::Local);
    EXPECT_EQ(network_topology(StrategyKind::FLDDPG), NetworkTopology::Federated);
}

TEST(TrainerConfigTest, ValidationNamesField) {
    auto c = small_config();
    EXPECT_NO_THROW(c.validate());
    c.tau = 1.5;
    try {
        c.validate();
        FAIL();
    } catch (const ConfigError& e) {
        EXPECT_NE(std::string(e.what()).find("tau"), std::string::npos);
    }
    c = small_config();
    c.arenas.pop_back();
    EXPECT_THROW(c.validate(), ConfigError);
    c = small_config();
    c.episodes = 0;
    EXPECT_THROW(c.validate(), ConfigError);
}

TEST(FederatedRoundTest, HandEvaluatedBlend) {
    auto params = small_config().ddpg;
    std::vector<ddpg::AgentNets> agents{ddpg::AgentNets::create(params, 1, 2), ddpg::AgentNets::create(params, 3, 4)};
    agents[0].actor.layers[0].weight(0, 0) = 0.0f;
    agents[1].actor.layers[0].weight(0, 0) = 4.0f;
    const auto target_before = agents[0].target_actor;
    federated_round(agents, 0.5);
    EXPECT_EQ(agents[0].actor.layers[0].weight(0, 0), 1.0f);
    EXPECT_EQ(agents[1].actor.layers[0].weight(0, 0), 3.0f);
    EXPECT_TRUE(agents[0].target_actor.identical(target_before));
}

TEST(FederatedRoundTest, IdenticalAgentsAreFixed) {
    auto params = small_config().ddpg;
    std::vector<ddpg::AgentNets> agents(3, ddpg::AgentNets::create(params, 5, 6));
    const auto actor = agents[0].actor;
    const auto critic = agents[0].critic;
    federated_round(agents, 0.5);
    for (const auto& a : agents) {
        EXPECT_TRUE(a.actor.identical(actor));
        EXPECT_TRUE(a.critic.identical(critic));
    }
}

TEST(FederatedRoundTest, HardUpdateMakesAgentsIdentical) {
    auto params = small_config().ddpg;
    std::vector<ddpg::AgentNets> agents;
    for (std::uint64_t i = 0; i < 4; ++i) agents.push_back(ddpg::AgentNets::create(params, 10 + i, 20 + i));
    std::vector<nn::NetworkWeights> actors;
    for (const auto& a : agents) actors.push_back(a.actor);
    const auto mean = nn::fedavg(actors);
    federated_round(agents, 0.0);
    for (const auto& a : agents) {
        EXPECT_TRUE(a.actor.identical(mean));
        EXPECT_TRUE(a.critic.identical(agents[0].critic));
    }
}

TEST(FederatedRoundTest, Errors) {
    std::vector<ddpg::AgentNets> none;
    EXPECT_THROW(federated_round(none, 0.5), InvalidArgument);
    auto params = small_config().ddpg;
    std::vector<ddpg::AgentNets> agents{ddpg::AgentNets::create(params, 1, 2)};
    EXPECT_THROW(federated_round(agents, -0.5), InvalidArgument);
    params.hidden_width = 9;
    agents.push_back(ddpg::AgentNets::create(params, 1, 2));
    EXPECT_THROW(federated_round(agents, 0.5), ShapeError);
}

TEST(FederatedRoundTest, ContractsSpreadAndKeepsMean) {
    std::mt19937_64 rng(7);
    auto params = small_config().ddpg;
    std::uniform_real_distribution<double> tau_dist(0.0, 1.0);
    for (int round = 0; round < 100; ++round) {
        std::vector<ddpg::AgentNets> agents;
        for (int i = 0; i < 4; ++i) agents.push_back(ddpg::AgentNets::create(params, rng(), rng()));
        std::vector<std::vector<float>> before;
        for (const auto& a : agents) before.push_back(a.critic.flatten());
        federated_round(agents, tau_dist(rng));
        std::vector<std::vector<float>> after;
        for (const auto& a : agents) after.push_back(a.critic.flatten());
        for (std::size_t j = 0; j < before[0].size(); ++j) {
            double lo0 = INFINITY, hi0 = -INFINITY, lo1 = INFINITY, hi1 = -INFINITY, m0 = 0, m1 = 0, mag = 0;
            for (std::size_t i = 0; i < agents.size(); ++i) {
                const double x0 = before[i][j];
                const double x1 = after[i][j];
                lo0 = std::min(lo0, x0), hi0 = std::max(hi0, x0), lo1 = std::min(lo1, x1), hi1 = std::max(hi1, x1);
                m0 += x0 / 4.0, m1 += x1 / 4.0;
                mag = std::max(mag, std::abs(x0));
            }
            ASSERT_LE(hi1 - lo1, hi0 - lo0);
            ASSERT_LE(std::abs(m1 - m0), std::nextafter(static_cast<float>(mag), INFINITY) - static_cast<float>(mag));
        }
    }
}

TEST(SwarmTrainerTest, OneStepEpisodeCollectsOneTransitionPerAgent) {
    auto c = small_config(1, 1, 4);
    SwarmTrainer trainer(StrategyKind::IDDPG, c);
    std::vector<int> seen(4, 0);
    trainer.set_step_observer([&](std::size_t agent, std::size_t t, const ddpg::Transition&, const sim::StepResult&) {
        EXPECT_EQ(t, 1u);
        ++seen[agent];
    });
    trainer.run_episode();
    EXPECT_EQ(seen, std::vector<int>(4, 1));
    for (std::size_t i = 0; i < 4; ++i) EXPECT_EQ(trainer.training_buffer(i).size(), 1u);
}

TEST(SwarmTrainerTest, EpisodeSumIncludesGoalReward) {
    auto c = small_config(1, 400, 1);
    c.arenas = {sim::ArenaSpec{}};
    SwarmTrainer trainer(StrategyKind::IDDPG, c);
    // Turn towards the goal, then drive straight.
    trainer.set_action_override([](std::size_t, const sim::Observation& o) {
        const double w = std::clamp(5.0 * o.theta_d, -sim::kMaxAngularVelocity, sim::kMaxAngularVelocity);
        return sim::Action{std::abs(o.theta_d) < 0.1 ? sim::kMaxLinearVelocity : 0.0, w};
    });
    double observed = 0.0;
    int goals = 0;
    trainer.set_step_observer([&](std::size_t, std::size_t, const ddpg::Transition& tr, const sim::StepResult& r) {
        observed += tr.reward;
        if (r.status == sim::EpisodeStatus::GoalReached) {
            ++goals;
            EXPECT_EQ(r.reward.goal, 100.0);
            EXPECT_TRUE(tr.terminal);
        }
    });
    const auto sums = trainer.run_episode();
    EXPECT_GE(goals, 1);
    EXPECT_DOUBLE_EQ(sums[0], observed);
    EXPECT_EQ(trainer.take_record().goals[0], static_cast<std::uint64_t>(goals));
}

TEST(SwarmTrainerTest, TimeoutsAreNotTerminal) {
    auto c = small_config(1, 30, 1);
    c.arenas = {sim::ArenaSpec{}};
    SwarmTrainer trainer(StrategyKind::IDDPG, c);
    trainer.set_action_override([](std::size_t, const sim::Observation&) { return sim::Action{0.0, 0.0}; });
    trainer.run_episode();
    for (const auto& t : trainer.training_buffer(0).snapshot()) EXPECT_FALSE(t.terminal);
}

TEST(SwarmTrainerTest, LearningFreeStrategiesShareRewardStreams) {
    auto c = small_config(4, 32, 3);
    c.ddpg.actor_lr = 0.0;
    c.ddpg.critic_lr = 0.0;
    c.enforce_budget = false;
    const auto a = run_training(StrategyKind::IDDPG, c);
    const auto b = run_training(StrategyKind::SEDDPG, c);
    EXPECT_EQ(a.rewards, b.rewards);
}

TEST(SwarmTrainerTest, LocalMemoryNeverHoldsForeignTransitions) {
    for (auto kind : {StrategyKind::IDDPG, StrategyKind::FLDDPG}) {
        auto c = small_config(3, 20, 3);
        SwarmTrainer trainer(kind, c);
        std::vector<std::vector<ddpg::Transition>> own(3);
        trainer.set_step_observer([&](std::size_t agent, std::size_t, const ddpg::Transition& tr,
                                      const sim::StepResult&) { own[agent].push_back(tr); });
        while (!trainer.finished()) trainer.run_episode();
        for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(trainer.training_buffer(i).snapshot(), own[i]);
    }
}

TEST(SwarmTrainerTest, SharedNetworkAgentsActIdentically) {
    auto c = small_config(6, 16, 3);
    c.snddpg_period = 2;
    SwarmTrainer trainer(StrategyKind::SNDDPG, c);
    nn::NetworkWeights last = trainer.acting_actor(0);
    while (!trainer.finished()) {
        trainer.run_episode();
        for (std::size_t i = 1; i < 3; ++i) EXPECT_TRUE(trainer.acting_actor(i).identical(trainer.acting_actor(0)));
        const bool synced = trainer.episodes_done() % 2 == 0;
        EXPECT_EQ(!trainer.acting_actor(0).identical(last), synced);
        if (synced) {
            EXPECT_TRUE(trainer.acting_actor(0).identical(trainer.networks()[0].actor));
            for (std::size_t i = 0; i < 3; ++i) EXPECT_TRUE(trainer.pending_upload(i).empty());
        } else {
            EXPECT_EQ(trainer.pending_upload(0).size(), 16u);
        }
        last = trainer.acting_actor(0);
    }
    EXPECT_EQ(trainer.networks().size(), 1u);
}

TEST(SwarmTrainerTest, SharedNetworkServerReplaysLocalStepCount) {
    auto c = small_config(3, 16, 2);
    c.snddpg_period = 3;
    c.ddpg.train_every = 2;
    const auto rec = run_training(StrategyKind::SNDDPG, c);
    EXPECT_EQ(rec.train_steps + rec.skipped_train_steps, 2u * 3u * (16u / 2u));
}

TEST(SwarmTrainerTest, SharedExperienceMergesAndRedistributes) {
    auto c = small_config(4, 10, 3);
    c.seddpg_period = 2;
    SwarmTrainer trainer(StrategyKind::SEDDPG, c);
    std::vector<std::vector<ddpg::Transition>> own(3);
    trainer.set_step_observer([&](std::size_t agent, std::size_t, const ddpg::Transition& tr,
                                  const sim::StepResult&) { own[agent].push_back(tr); });
    trainer.run_episode();
    for (std::size_t i = 0; i < 3; ++i) {
        EXPECT_EQ(trainer.training_buffer(i).snapshot(), own[i]);
        EXPECT_EQ(trainer.pending_upload(i).size(), 10u);
    }
    trainer.run_episode();
    std::vector<ddpg::Transition> merged;
    for (const auto& list : own) merged.insert(merged.end(), list.begin(), list.end());
    for (std::size_t i = 0; i < 3; ++i) {
        EXPECT_EQ(trainer.training_buffer(i).snapshot(), merged);
        EXPECT_TRUE(trainer.pending_upload(i).empty());
    }
}

TEST(SwarmTrainerTest, FullScheduleLedgerTotals) {
    auto c = small_config(120, 1, 4);
    c.ddpg.batch_size = 1000;  // never trains; only the schedule matters here
    EXPECT_EQ(run_training(StrategyKind::FLDDPG, c).ledger.total_bytes(), 132'000'000u);
    EXPECT_EQ(run_training(StrategyKind::SEDDPG, c).ledger.total_bytes(), 115'200'000u);
    EXPECT_EQ(run_training(StrategyKind::SNDDPG, c).ledger.total_bytes(), 118'000'000u);
    EXPECT_EQ(run_training(StrategyKind::IDDPG, c).ledger.total_bytes(), 0u);
}

TEST(SwarmTrainerTest, LedgerMatchesSyncSchedule) {
    auto c = small_config(12, 2, 2);
    c.ddpg.batch_size = 1000;
    c.federated_period = 2;
    c.seddpg_period = 3;
    c.snddpg_period = 4;
    const std::map<StrategyKind, std::size_t> expected{{StrategyKind::FLDDPG, 6},
                                                       {StrategyKind::SEDDPG, 4},
                                                       {StrategyKind::SNDDPG, 3},
                                                       {StrategyKind::IDDPG, 0}};
    for (const auto& [kind, syncs] : expected) {
        const auto rec = run_training(kind, c);
        EXPECT_EQ(rec.ledger.sync_count(), syncs) << to_string(kind);
        const std::size_t per_sync = kind == StrategyKind::SNDDPG ? 1 : 2;
        EXPECT_EQ(rec.ledger.events().size(), syncs * per_sync);
        const auto sync_events = std::count_if(rec.events.begin(), rec.events.end(), [](const TrainingEvent& e) {
            return e.kind == "federated_round" || e.kind == "buffer_sync" || e.kind == "model_sync";
        });
        EXPECT_EQ(static_cast<std::size_t>(sync_events), syncs);
        for (const auto& ev : rec.ledger.events()) EXPECT_EQ(ev.episode % (kind == StrategyKind::FLDDPG ? 2 : kind == StrategyKind::SEDDPG ? 3 : 4), 0u);
    }
}

TEST(SwarmTrainerTest, BudgetExceededAbortsBeforeTransfer) {
    auto c = small_config(12, 2, 2);
    c.ddpg.batch_size = 1000;
    c.comms.total_budget = 10 * c.comms.model_cycle();
    SwarmTrainer trainer(StrategyKind::FLDDPG, c);
    try {
        while (!trainer.finished()) trainer.run_episode();
        FAIL() << "expected BudgetExceeded";
    } catch (const comms::BudgetExceeded& e) {
        EXPECT_EQ(e.event().episode, 11u);
    }
    EXPECT_EQ(trainer.ledger().total_bytes(), 10 * c.comms.model_cycle());
}

TEST(SwarmTrainerTest, MeasuredSizes) {
    auto c = small_config(2, 5, 3);
    c.measured_sizes = true;
    const auto fl = run_training(StrategyKind::FLDDPG, c);
    const auto model = nn::serialized_size(fl.final_actors[0]) + nn::serialized_size(fl.final_critics[0]);
    ASSERT_EQ(fl.ledger.events().size(), 4u);
    EXPECT_EQ(fl.ledger.events()[0].bytes, model);

    c.seddpg_period = 2;
    const auto se = run_training(StrategyKind::SEDDPG, c);
    ASSERT_EQ(se.ledger.events().size(), 2u);
    EXPECT_EQ(se.ledger.events()[0].bytes, 10 * kTransitionWireBytes);
    EXPECT_EQ(se.ledger.events()[1].bytes, 2 * 10 * kTransitionWireBytes);

    c.snddpg_period = 2;
    const auto sn = run_training(StrategyKind::SNDDPG, c);
    ASSERT_EQ(sn.ledger.events().size(), 1u);
    EXPECT_EQ(sn.ledger.events()[0].bytes, 10 * kTransitionWireBytes + nn::serialized_size(sn.final_actors[0]));
}

TEST(SwarmTrainerTest, RecordShapeAndDeterminism) {
    auto c = small_config(3, 12, 3);
    for (auto kind : kAllStrategies) {
        const auto a = run_training(kind, c);
        const auto b = run_training(kind, c);
        EXPECT_EQ(a.episodes(), 3u);
        EXPECT_EQ(a.agents(), 3u);
        EXPECT_EQ(a.rewards, b.rewards);
        ASSERT_EQ(a.final_actors.size(), 3u);
        for (std::size_t i = 0; i < 3; ++i) EXPECT_TRUE(a.final_actors[i].identical(b.final_actors[i]));
        EXPECT_TRUE(std::any_of(a.events.begin(), a.events.end(), [](const auto& e) { return e.kind == "note"; }));
    }
}

TEST(SwarmTrainerTest, RunEpisodePastEndThrows) {
    SwarmTrainer trainer(StrategyKind::IDDPG, small_config(1, 2, 1));
    trainer.run_episode();
    EXPECT_TRUE(trainer.finished());
    EXPECT_THROW(trainer.run_episode(), InvalidArgument);
}

}  // namespace
}  // namespace fedswarm::train
