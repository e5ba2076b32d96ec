#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "fedswarm/arena.hpp"
#include "fedswarm/error.hpp"
#include "oracles.hpp"

namespace fedswarm::sim {
namespace {

constexpr double kPi = std::numbers::pi;

ArenaSpec open_arena(double w, double h) {
    ArenaSpec a;
    a.width = w;
    a.height = h;
    return a;
}

TEST(RaycastTest, EmptyArenaBeyondRange) {
    const auto scan = raycast_scan(Pose{5.0, 5.0, 0.3}, open_arena(10.0, 10.0));
    for (double r : scan.ranges) EXPECT_DOUBLE_EQ(r, kLidarMaxRange);
}

TEST(RaycastTest, WallDirectlyAhead) {
    const auto scan = raycast_scan(Pose{3.0, 2.0, 0.0}, open_arena(4.0, 4.0));
    EXPECT_DOUBLE_EQ(scan.ranges[0], 1.0);
    // Beam 6 points at +90 degrees: 2 m to the top wall.
    EXPECT_NEAR(scan.ranges[6], 2.0, 1e-12);
    // Beam 12 points backwards: 3 m to the left wall.
    EXPECT_NEAR(scan.ranges[12], 3.0, 1e-12);
}

TEST(RaycastTest, BoxAtFortyFiveDegrees) {
    ArenaSpec a = open_arena(10.0, 10.0);
    const double c = 5.0 + 2.0 * std::cos(kPi / 4);
    a.obstacles.push_back({c - 0.5, c - 0.5, c + 0.5, c + 0.5});
    const Pose pose{5.0, 5.0, 0.0};
    const auto scan = raycast_scan(pose, a);
    // Beam 3 is at 45 degrees and enters the box corner-first.
    EXPECT_NEAR(scan.ranges[3], 2.0 - 0.5 * std::sqrt(2.0), 1e-9);
    for (std::size_t k = 0; k < kLidarBeams; ++k) {
        const double angle = static_cast<double>(k) * 2.0 * kPi / kLidarBeams;
        EXPECT_NEAR(scan.ranges[k], testing::march_ray(a, pose.position(), angle, kLidarMaxRange), 2e-3) << k;
    }
}

TEST(RaycastTest, MatchesMarchingOracleOnRandomScenes) {
    std::mt19937_64 rng(7);
    int checked = 0;
    while (checked < 30) {
        const ArenaSpec a = testing::random_arena(rng);
        std::uniform_real_distribution<double> ux(0.0, a.width), uy(0.0, a.height), uh(-kPi, kPi);
        const Pose pose{ux(rng), uy(rng), uh(rng)};
        bool inside = false;
        for (const auto& r : a.obstacles) inside = inside || r.contains(pose.position());
        if (inside) continue;
        const auto scan = raycast_scan(pose, a);
        for (std::size_t k = 0; k < kLidarBeams; ++k) {
            const double angle = pose.heading + static_cast<double>(k) * 2.0 * kPi / kLidarBeams;
            EXPECT_NEAR(scan.ranges[k], testing::march_ray(a, pose.position(), angle, kLidarMaxRange), 2e-3);
        }
        ++checked;
    }
}

TEST(RaycastTest, OriginInsideObstacleReadsZero) {
    ArenaSpec a = open_arena(4.0, 4.0);
    a.obstacles.push_back({1.0, 1.0, 2.0, 2.0});
    const auto scan = raycast_scan(Pose{1.5, 1.5, 0.0}, a);
    for (double r : scan.ranges) EXPECT_EQ(r, 0.0);
}

TEST(RaycastTest, PoseOutsideArenaThrows) {
    EXPECT_THROW(raycast_scan(Pose{-0.1, 1.0, 0.0}, open_arena(4.0, 4.0)), InvalidWorldState);
    EXPECT_THROW(raycast_scan(Pose{1.0, 4.5, 0.0}, open_arena(4.0, 4.0)), InvalidWorldState);
}

TEST(NormalizeScanTest, Endpoints) {
    LidarScan scan;
    scan.ranges.fill(3.5);
    scan.ranges[0] = 0.8;
    scan.ranges[1] = 0.0;
    scan.ranges[2] = 0.4;
    const auto n = normalize_scan(scan);
    EXPECT_DOUBLE_EQ(n[0], 0.0);
    EXPECT_DOUBLE_EQ(n[1], 1.0);
    EXPECT_DOUBLE_EQ(n[2], 0.5);
    EXPECT_DOUBLE_EQ(n[3], 0.0);
}

TEST(DynamicsTest, Examples) {
    const Pose p{1.0, 2.0, 0.0};
    EXPECT_EQ(step_dynamics(p, {0.0, 0.0}, 1.0), p);

    const Pose fwd = step_dynamics(p, {0.25, 0.0}, 1.0);
    EXPECT_DOUBLE_EQ(fwd.x, 1.25);
    EXPECT_DOUBLE_EQ(fwd.y, 2.0);

    const Pose rot = step_dynamics(p, {0.0, kPi / 2}, 1.0);
    EXPECT_DOUBLE_EQ(rot.x, 1.0);
    EXPECT_DOUBLE_EQ(rot.y, 2.0);
    EXPECT_DOUBLE_EQ(rot.heading, kPi / 2);
}

TEST(DynamicsTest, RejectsOutOfLimitCommands) {
    EXPECT_THROW(step_dynamics(Pose{}, {0.3, 0.0}, 0.1), InvalidArgument);
    EXPECT_THROW(step_dynamics(Pose{}, {-0.01, 0.0}, 0.1), InvalidArgument);
    EXPECT_THROW(step_dynamics(Pose{}, {0.1, 1.6}, 0.1), InvalidArgument);
}

TEST(DynamicsTest, HeadingWrapsIntoHalfOpenInterval) {
    const Pose p = step_dynamics(Pose{1.0, 1.0, kPi - 0.01}, {0.0, kPi / 2}, 0.1);
    EXPECT_GT(p.heading, -kPi);
    EXPECT_LE(p.heading, kPi);
    EXPECT_NEAR(p.heading, -kPi + kPi / 20 - 0.01, 1e-12);
    EXPECT_DOUBLE_EQ(normalize_angle(-kPi), kPi);
}

TEST(ObserveTest, PolarGoal) {
    const ArenaSpec a = open_arena(10.0, 10.0);
    Observation o = observe(Pose{5.0, 5.0, 0.0}, {6.0, 5.0}, a);
    EXPECT_DOUBLE_EQ(o.d, 1.0);
    EXPECT_DOUBLE_EQ(o.theta_d, 0.0);

    o = observe(Pose{5.0, 5.0, 0.0}, {4.0, 5.0}, a);
    EXPECT_DOUBLE_EQ(o.d, 1.0);
    EXPECT_DOUBLE_EQ(o.theta_d, kPi);

    o = observe(Pose{1.0, 1.0, 0.0}, {2.0, 2.0}, a);
    EXPECT_DOUBLE_EQ(o.d, std::sqrt(2.0));
    EXPECT_DOUBLE_EQ(o.theta_d, kPi / 4);
}

TEST(ObserveTest, FeatureLayout) {
    Observation o;
    o.d = 1.5;
    o.theta_d = -0.5;
    o.s_laser[3] = 0.25;
    const auto f = o.features();
    EXPECT_FLOAT_EQ(f[0], 1.5f);
    EXPECT_FLOAT_EQ(f[1], -0.5f);
    EXPECT_FLOAT_EQ(f[5], 0.25f);
}

Observation obs_with(double d, double closest) {
    Observation o;
    o.d = d;
    o.s_laser.fill(0.0);
    o.s_laser[7] = closest;
    return o;
}

TEST(RewardTest, WorkedExamples) {
    const RewardParams p;
    const Observation far = obs_with(1.0, 0.0);
    EXPECT_DOUBLE_EQ(compute_reward(far, far, EpisodeStatus::GoalReached, p).goal, 100.0);
    EXPECT_DOUBLE_EQ(compute_reward(far, far, EpisodeStatus::Collided, p).collision, -100.0);
    EXPECT_DOUBLE_EQ(compute_reward(far, far, EpisodeStatus::Running, p).goal, 0.0);

    const auto approach = compute_reward(obs_with(1.0, 0.0), obs_with(0.95, 0.0), EpisodeStatus::Running, p);
    EXPECT_NEAR(approach.progress, 0.2, 1e-12);
    const auto retreat = compute_reward(obs_with(0.95, 0.0), obs_with(1.0, 0.0), EpisodeStatus::Running, p);
    EXPECT_NEAR(retreat.progress, -0.2, 1e-12);

    EXPECT_NEAR(compute_reward(far, obs_with(1.0, 1.0), EpisodeStatus::Running, p).proximity, -2.0, 1e-12);
    EXPECT_EQ(compute_reward(far, far, EpisodeStatus::Running, p).proximity, 0.0);
}

TEST(RewardTest, TotalIsSumAndProximityMonotone) {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const RewardParams p;
    const EpisodeStatus statuses[] = {EpisodeStatus::Running, EpisodeStatus::GoalReached, EpisodeStatus::Collided,
                                      EpisodeStatus::TimedOut};
    double prev_penalty = 0.0;
    for (int i = 0; i <= 200; ++i) {
        const auto a = testing::random_observation(rng);
        const auto b = testing::random_observation(rng);
        const auto r = compute_reward(a, b, statuses[i % 4], p);
        EXPECT_EQ(r.total, r.goal + r.progress + r.collision + r.proximity);

        const double closest = i / 200.0;
        const double penalty = compute_reward(obs_with(1.0, 0.0), obs_with(1.0, closest), EpisodeStatus::Running, p).proximity;
        EXPECT_LE(penalty, prev_penalty);
        prev_penalty = penalty;
    }
}

TEST(TerminationTest, Examples) {
    const ArenaSpec a = open_arena(4.0, 4.0);
    EXPECT_EQ(detect_termination(Pose{1.0, 1.0, 0.0}, {1.2, 1.0}, a, 0, 10), EpisodeStatus::GoalReached);
    EXPECT_EQ(detect_termination(Pose{0.5 * a.robot_radius, 2.0, 0.0}, {3.0, 3.0}, a, 0, 10),
              EpisodeStatus::Collided);
    EXPECT_EQ(detect_termination(Pose{2.0, 2.0, 0.0}, {3.0, 3.0}, a, 10, 10), EpisodeStatus::TimedOut);
    EXPECT_EQ(detect_termination(Pose{2.0, 2.0, 0.0}, {3.0, 3.0}, a, 9, 10), EpisodeStatus::Running);
    // Goal wins over collision and timeout.
    EXPECT_EQ(detect_termination(Pose{0.1, 0.1, 0.0}, {0.1, 0.2}, a, 10, 10), EpisodeStatus::GoalReached);
}

TEST(TerminationTest, ObstacleContact) {
    ArenaSpec a = open_arena(4.0, 4.0);
    a.obstacles.push_back({2.0, 2.0, 3.0, 3.0});
    EXPECT_EQ(detect_termination(Pose{1.9, 2.5, 0.0}, {0.5, 0.5}, a, 0, 10), EpisodeStatus::Collided);
    EXPECT_EQ(detect_termination(Pose{1.8, 2.5, 0.0}, {0.5, 0.5}, a, 0, 10), EpisodeStatus::Running);
}

TEST(ArenaSpecTest, Validation) {
    ArenaSpec a = open_arena(4.0, 4.0);
    EXPECT_NO_THROW(a.validate());
    a.obstacles.push_back({3.0, 3.0, 4.5, 3.5});
    EXPECT_THROW(a.validate(), InvalidWorldState);
    EXPECT_THROW(open_arena(0.0, 1.0).validate(), InvalidWorldState);
    for (const auto& t : training_arenas(6, 2.5)) EXPECT_NO_THROW(t.validate());
}

TEST(EnvironmentTest, ResetSamplesValidStartAndGoal) {
    const auto arenas = training_arenas(4, 2.5);
    for (std::size_t i = 0; i < arenas.size(); ++i) {
        Environment env(arenas[i], EnvParams{}, 11 + i);
        for (int k = 0; k < 50; ++k) {
            const Observation o = env.reset();
            EXPECT_GE(o.d, 1.0);
            EXPECT_FALSE(disc_collides(arenas[i], env.pose().position(), arenas[i].robot_radius));
            EXPECT_EQ(env.status(), EpisodeStatus::Running);
            for (double s : o.s_laser) {
                EXPECT_GE(s, 0.0);
                EXPECT_LE(s, 1.0);
            }
            EXPECT_GT(o.theta_d, -kPi);
            EXPECT_LE(o.theta_d, kPi);
        }
    }
}

TEST(EnvironmentTest, DeterministicUnderSeedAndActions) {
    const ArenaSpec arena = training_arenas(4, 2.5)[3];
    auto rollout = [&] {
        Environment env(arena, EnvParams{}, 99);
        std::mt19937_64 rng(5);
        std::uniform_real_distribution<double> v(0.0, kMaxLinearVelocity), w(-kMaxAngularVelocity, kMaxAngularVelocity);
        std::vector<double> trace;
        env.reset();
        for (int t = 0; t < 500; ++t) {
            const auto r = env.step({v(rng), w(rng)});
            trace.push_back(r.reward.total);
            trace.push_back(env.pose().x);
            trace.push_back(r.observation.s_laser[5]);
            if (is_terminal(r.status)) env.reset();
        }
        return trace;
    };
    EXPECT_EQ(rollout(), rollout());
}

TEST(EnvironmentTest, TerminalStatusIsAbsorbing) {
    Environment env(open_arena(4.0, 4.0), EnvParams{}, 1);
    env.reset(Pose{1.0, 2.0, 0.0}, {1.3, 2.0});
    StepResult r;
    for (int t = 0; t < 20 && !is_terminal(env.status()); ++t) r = env.step({0.25, 0.0});
    ASSERT_EQ(r.status, EpisodeStatus::GoalReached);
    EXPECT_DOUBLE_EQ(r.reward.goal, 100.0);
    const Pose frozen = env.pose();
    const auto again = env.step({0.25, 0.0});
    EXPECT_EQ(again.status, EpisodeStatus::GoalReached);
    EXPECT_EQ(again.reward.total, 0.0);
    EXPECT_EQ(env.pose(), frozen);
}

TEST(EnvironmentTest, TimesOutAfterMaxSteps) {
    EnvParams params;
    params.max_steps = 5;
    Environment env(open_arena(4.0, 4.0), params, 1);
    env.reset(Pose{2.0, 2.0, 0.0}, {3.5, 3.5});
    for (int t = 0; t < 4; ++t) EXPECT_EQ(env.step({0.0, 0.0}).status, EpisodeStatus::Running);
    EXPECT_EQ(env.step({0.0, 0.0}).status, EpisodeStatus::TimedOut);
}

}  // namespace
}  // namespace fedswarm::sim
