#include "fedswarm/arena.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "fedswarm/error.hpp"

namespace fedswarm::sim {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Entry distance of the ray into `r`, or +inf on a miss. 0 when the origin is inside.
double ray_rect_entry(const Rect& r, Point o, double dx, double dy) {
    double t_near = -std::numeric_limits<double>::infinity();
    double t_far = std::numeric_limits<double>::infinity();

    auto slab = [&](double origin, double dir, double lo, double hi) {
        if (dir == 0.0) {
            return origin >= lo && origin <= hi;
        }
        double t1 = (lo - origin) / dir;
        double t2 = (hi - origin) / dir;
        if (t1 > t2) std::swap(t1, t2);
        t_near = std::max(t_near, t1);
        t_far = std::min(t_far, t2);
        return true;
    };

    if (!slab(o.x, dx, r.xmin, r.xmax) || !slab(o.y, dy, r.ymin, r.ymax)) {
        return std::numeric_limits<double>::infinity();
    }
    if (t_far < 0.0 || t_near > t_far) {
        return std::numeric_limits<double>::infinity();
    }
    return std::max(t_near, 0.0);
}

}  // namespace

std::array<float, kObservationSize> Observation::features() const {
    std::array<float, kObservationSize> out{};
    out[0] = static_cast<float>(d);
    out[1] = static_cast<float>(theta_d);
    for (std::size_t k = 0; k < kLidarBeams; ++k) {
        out[2 + k] = static_cast<float>(s_laser[k]);
    }
    return out;
}

std::string_view to_string(EpisodeStatus status) {
    switch (status) {
        case EpisodeStatus::Running: return "running";
        case EpisodeStatus::GoalReached: return "goal";
        case EpisodeStatus::Collided: return "collision";
        case EpisodeStatus::TimedOut: return "timeout";
    }
    return "unknown";
}

void ArenaSpec::validate() const {
    if (!(width > 0.0) || !(height > 0.0)) {
        throw InvalidWorldState("arena width and height must be positive");
    }
    if (!(goal_radius > 0.0) || !(robot_radius > 0.0)) {
        throw InvalidWorldState("goal_radius and robot_radius must be positive");
    }
    for (std::size_t i = 0; i < obstacles.size(); ++i) {
        const Rect& r = obstacles[i];
        if (!(r.xmin < r.xmax) || !(r.ymin < r.ymax) || r.xmin < 0.0 || r.ymin < 0.0 || r.xmax > width ||
            r.ymax > height) {
            throw InvalidWorldState("obstacle " + std::to_string(i) + " is degenerate or outside the arena");
        }
    }
}

double normalize_angle(double angle) {
    double a = std::remainder(angle, kTwoPi);
    if (a <= -std::numbers::pi) a += kTwoPi;
    return a;
}

double cast_ray(const ArenaSpec& arena, Point o, double dx, double dy, double max_range) {
    double best = std::numeric_limits<double>::infinity();

    // Walls, seen from inside.
    if (dx > 0.0) best = std::min(best, (arena.width - o.x) / dx);
    if (dx < 0.0) best = std::min(best, -o.x / dx);
    if (dy > 0.0) best = std::min(best, (arena.height - o.y) / dy);
    if (dy < 0.0) best = std::min(best, -o.y / dy);

    for (const Rect& r : arena.obstacles) {
        best = std::min(best, ray_rect_entry(r, o, dx, dy));
    }
    return std::clamp(best, 0.0, max_range);
}

LidarScan raycast_scan(const Pose& pose, const ArenaSpec& arena, double max_range) {
    if (!arena.contains(pose.position())) {
        throw InvalidWorldState("pose (" + std::to_string(pose.x) + ", " + std::to_string(pose.y) +
                                ") lies outside the arena");
    }
    LidarScan scan;
    for (std::size_t k = 0; k < kLidarBeams; ++k) {
        const double angle = pose.heading + static_cast<double>(k) * (kTwoPi / kLidarBeams);
        scan.ranges[k] = cast_ray(arena, pose.position(), std::cos(angle), std::sin(angle), max_range);
    }
    return scan;
}

std::array<double, kLidarBeams> normalize_scan(const LidarScan& scan, double cutoff) {
    std::array<double, kLidarBeams> out{};
    for (std::size_t k = 0; k < kLidarBeams; ++k) {
        out[k] = std::clamp(1.0 - scan.ranges[k] / cutoff, 0.0, 1.0);
    }
    return out;
}

bool action_within_limits(const Action& a) {
    return a.v >= 0.0 && a.v <= kMaxLinearVelocity && a.omega >= -kMaxAngularVelocity &&
           a.omega <= kMaxAngularVelocity;
}

Pose step_dynamics(const Pose& pose, const Action& action, double dt) {
    if (!action_within_limits(action)) {
        throw InvalidArgument("action (v=" + std::to_string(action.v) + ", omega=" + std::to_string(action.omega) +
                              ") outside velocity limits");
    }
    Pose next;
    next.x = pose.x + action.v * std::cos(pose.heading) * dt;
    next.y = pose.y + action.v * std::sin(pose.heading) * dt;
    next.heading = normalize_angle(pose.heading + action.omega * dt);
    return next;
}

Observation observe(const Pose& pose, Point goal, const ArenaSpec& arena) {
    Observation obs;
    const double gx = goal.x - pose.x;
    const double gy = goal.y - pose.y;
    obs.d = std::hypot(gx, gy);
    obs.theta_d = normalize_angle(std::atan2(gy, gx) - pose.heading);
    obs.s_laser = normalize_scan(raycast_scan(pose, arena));
    return obs;
}

RewardBreakdown compute_reward(const Observation& prev, const Observation& cur, EpisodeStatus status,
                               const RewardParams& params) {
    RewardBreakdown r;
    r.goal = status == EpisodeStatus::GoalReached ? params.goal_reward : 0.0;
    r.collision = status == EpisodeStatus::Collided ? params.collision_penalty : 0.0;

    const double delta = std::abs(prev.d - cur.d);
    r.progress = cur.d < prev.d ? params.progress_factor * delta : -params.progress_factor * delta;

    const double closest = *std::max_element(cur.s_laser.begin(), cur.s_laser.end());
    r.proximity = closest > 0.0 ? -std::exp(closest * params.proximity_lambda) : 0.0;

    r.total = r.goal + r.progress + r.collision + r.proximity;
    return r;
}

bool disc_collides(const ArenaSpec& arena, Point p, double radius) {
    if (p.x - radius < 0.0 || p.x + radius > arena.width || p.y - radius < 0.0 || p.y + radius > arena.height) {
        return true;
    }
    for (const Rect& r : arena.obstacles) {
        const double cx = std::clamp(p.x, r.xmin, r.xmax);
        const double cy = std::clamp(p.y, r.ymin, r.ymax);
        const double ddx = p.x - cx;
        const double ddy = p.y - cy;
        if (ddx * ddx + ddy * ddy < radius * radius) return true;
    }
    return false;
}

EpisodeStatus detect_termination(const Pose& pose, Point goal, const ArenaSpec& arena, std::size_t step,
                                 std::size_t max_steps) {
    if (std::hypot(goal.x - pose.x, goal.y - pose.y) <= arena.goal_radius) {
        return EpisodeStatus::GoalReached;
    }
    if (disc_collides(arena, pose.position(), arena.robot_radius)) {
        return EpisodeStatus::Collided;
    }
    if (step >= max_steps) {
        return EpisodeStatus::TimedOut;
    }
    return EpisodeStatus::Running;
}

std::vector<ArenaSpec> training_arenas(std::size_t count, double size) {
    const double s = size;
    std::vector<ArenaSpec> layouts(4);
    for (auto& a : layouts) {
        a.width = s;
        a.height = s;
    }
    // 0: open room.
    // 1: central pillar.
    layouts[1].obstacles = {{0.4 * s, 0.4 * s, 0.6 * s, 0.6 * s}};
    // 2: two partial walls.
    layouts[2].obstacles = {{0.3 * s, 0.0, 0.36 * s, 0.45 * s}, {0.64 * s, 0.55 * s, 0.7 * s, s}};
    // 3: scattered boxes.
    layouts[3].obstacles = {{0.2 * s, 0.2 * s, 0.3 * s, 0.3 * s},
                            {0.7 * s, 0.2 * s, 0.8 * s, 0.3 * s},
                            {0.2 * s, 0.7 * s, 0.3 * s, 0.8 * s},
                            {0.7 * s, 0.7 * s, 0.8 * s, 0.8 * s}};
    std::vector<ArenaSpec> out;
    out.reserve(count);
    for (std::size_t i = 0; i < count; ++i) out.push_back(layouts[i % layouts.size()]);
    return out;
}

}  // namespace fedswarm::sim
