#include <algorithm>
#include <cmath>

#include "fedswarm/arena.hpp"
#include "fedswarm/error.hpp"

namespace fedswarm::sim {

namespace {
constexpr int kMaxSpawnAttempts = 100000;
}

Environment::Environment(ArenaSpec arena, EnvParams params, std::uint64_t seed)
    : arena_(std::move(arena)), params_(params), rng_(seed) {
    arena_.validate();
    if (!(params_.dt > 0.0) || params_.max_steps == 0) {
        throw InvalidArgument("environment needs dt > 0 and max_steps >= 1");
    }
}

Point Environment::sample_free_point(double clearance) {
    std::uniform_real_distribution<double> ux(clearance, arena_.width - clearance);
    std::uniform_real_distribution<double> uy(clearance, arena_.height - clearance);
    for (int attempt = 0; attempt < kMaxSpawnAttempts; ++attempt) {
        const Point p{ux(rng_), uy(rng_)};
        if (!disc_collides(arena_, p, clearance)) return p;
    }
    throw InvalidWorldState("arena has no collision-free spawn area");
}

Observation Environment::reset() {
    const double clearance = arena_.robot_radius + params_.spawn_clearance;
    if (2.0 * clearance >= std::min(arena_.width, arena_.height)) {
        throw InvalidWorldState("arena too small for the robot footprint");
    }
    std::uniform_real_distribution<double> uh(-std::numbers::pi, std::numbers::pi);

    for (int attempt = 0; attempt < kMaxSpawnAttempts; ++attempt) {
        const Point start = sample_free_point(clearance);
        const Point goal = sample_free_point(clearance);
        if (std::hypot(goal.x - start.x, goal.y - start.y) < params_.min_start_goal_distance) continue;
        const double heading = normalize_angle(uh(rng_));
        return reset(Pose{start.x, start.y, heading}, goal);
    }
    throw InvalidWorldState("could not place start and goal min_start_goal_distance apart");
}

Observation Environment::reset(const Pose& start, Point goal) {
    if (!arena_.contains(start.position())) {
        throw InvalidWorldState("start pose outside the arena");
    }
    pose_ = Pose{start.x, start.y, normalize_angle(start.heading)};
    goal_ = goal;
    step_ = 0;
    obs_ = observe(pose_, goal_, arena_);
    status_ = detect_termination(pose_, goal_, arena_, step_, params_.max_steps);
    return obs_;
}

StepResult Environment::step(const Action& action) {
    if (is_terminal(status_)) {
        return StepResult{obs_, RewardBreakdown{}, status_};
    }
    const Observation prev = obs_;
    pose_ = step_dynamics(pose_, action, params_.dt);
    ++step_;
    status_ = detect_termination(pose_, goal_, arena_, step_, params_.max_steps);

    // A collided robot may have its center a hair past a wall; scan from the clamped point.
    Pose scan_pose = pose_;
    scan_pose.x = std::clamp(scan_pose.x, 0.0, arena_.width);
    scan_pose.y = std::clamp(scan_pose.y, 0.0, arena_.height);
    obs_ = observe(scan_pose, goal_, arena_);

    return StepResult{obs_, compute_reward(prev, obs_, status_, params_.reward), status_};
}

}  // namespace fedswarm::sim
