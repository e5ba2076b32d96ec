#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <random>
#include <string_view>
#include <vector>

namespace fedswarm::sim {

inline constexpr std::size_t kLidarBeams = 24;
inline constexpr double kLidarMaxRange = 3.5;        // m
inline constexpr double kProximityCutoff = 0.8;      // m
inline constexpr double kMaxLinearVelocity = 0.25;   // m/s
inline constexpr double kMaxAngularVelocity = std::numbers::pi / 2.0;  // rad/s
inline constexpr double kDefaultDt = 0.1;            // s
inline constexpr std::size_t kObservationSize = 2 + kLidarBeams;

struct Point {
    double x = 0.0;
    double y = 0.0;
};

/// Axis-aligned rectangle, [xmin, xmax] x [ymin, ymax] in meters.
struct Rect {
    double xmin = 0.0;
    double ymin = 0.0;
    double xmax = 0.0;
    double ymax = 0.0;

    bool contains(Point p) const { return p.x >= xmin && p.x <= xmax && p.y >= ymin && p.y <= ymax; }
    friend bool operator==(const Rect&, const Rect&) = default;
};

/// World geometry. The arena spans [0, width] x [0, height]; its border is a wall.
struct ArenaSpec {
    double width = 4.0;
    double height = 4.0;
    std::vector<Rect> obstacles;
    double goal_radius = 0.2;
    double robot_radius = 0.15;

    /// Throws InvalidWorldState when the invariants do not hold.
    void validate() const;
    bool contains(Point p) const { return p.x >= 0.0 && p.x <= width && p.y >= 0.0 && p.y <= height; }
    friend bool operator==(const ArenaSpec&, const ArenaSpec&) = default;
};

struct Pose {
    double x = 0.0;
    double y = 0.0;
    double heading = 0.0;  // (-pi, pi]

    Point position() const { return {x, y}; }
    friend bool operator==(const Pose&, const Pose&) = default;
};

/// Translational and rotational velocity command.
struct Action {
    double v = 0.0;      // m/s, [0, 0.25]
    double omega = 0.0;  // rad/s, [-pi/2, pi/2]
    friend bool operator==(const Action&, const Action&) = default;
};

struct LidarScan {
    std::array<double, kLidarBeams> ranges{};
};

struct Observation {
    double d = 0.0;        // distance to goal
    double theta_d = 0.0;  // bearing to goal in the robot frame
    std::array<double, kLidarBeams> s_laser{};

    /// Network input layout: [d, theta_d, s_laser...].
    std::array<float, kObservationSize> features() const;
    friend bool operator==(const Observation&, const Observation&) = default;
};

enum class EpisodeStatus : std::uint8_t { Running, GoalReached, Collided, TimedOut };

std::string_view to_string(EpisodeStatus status);
inline bool is_terminal(EpisodeStatus s) { return s != EpisodeStatus::Running; }

struct RewardParams {
    double goal_reward = 100.0;        // R_g
    double collision_penalty = -100.0; // R_c
    double progress_factor = 4.0;      // a
    double proximity_lambda = std::numbers::ln2;
    friend bool operator==(const RewardParams&, const RewardParams&) = default;
};

struct RewardBreakdown {
    double goal = 0.0;       // r_g
    double progress = 0.0;   // r_p
    double collision = 0.0;  // r_c
    double proximity = 0.0;  // r_a
    double total = 0.0;
};

/// Wraps an angle into (-pi, pi].
double normalize_angle(double angle);

/// Distance from `origin` along unit direction (dx, dy) to the nearest wall or
/// obstacle, clamped to `max_range`. Returns 0 when the origin is inside an obstacle.
double cast_ray(const ArenaSpec& arena, Point origin, double dx, double dy, double max_range);

/// 24 beams at heading + k * 2pi/24. Throws InvalidWorldState for poses outside the arena.
LidarScan raycast_scan(const Pose& pose, const ArenaSpec& arena, double max_range = kLidarMaxRange);

/// Inverted proximity: clamp(1 - range / cutoff, 0, 1) per beam.
std::array<double, kLidarBeams> normalize_scan(const LidarScan& scan, double cutoff = kProximityCutoff);

bool action_within_limits(const Action& action);

/// Unicycle integration. Throws InvalidArgument for commands outside the velocity limits.
Pose step_dynamics(const Pose& pose, const Action& action, double dt);

Observation observe(const Pose& pose, Point goal, const ArenaSpec& arena);

RewardBreakdown compute_reward(const Observation& prev, const Observation& cur, EpisodeStatus status,
                               const RewardParams& params);

/// True when a disc of the arena's robot radius centered at `p` touches a wall or obstacle.
bool disc_collides(const ArenaSpec& arena, Point p, double radius);

/// Precedence: GoalReached > Collided > TimedOut > Running.
EpisodeStatus detect_termination(const Pose& pose, Point goal, const ArenaSpec& arena, std::size_t step,
                                 std::size_t max_steps);

/// Four training layouts (open room, central pillar, two walls, scattered boxes) in a
/// `size` x `size` arena, cycled to `count` entries so robots train under different
/// configurations.
std::vector<ArenaSpec> training_arenas(std::size_t count, double size);

struct EnvParams {
    double dt = kDefaultDt;
    std::size_t max_steps = 1024;
    double min_start_goal_distance = 1.0;
    double spawn_clearance = 0.1;  // extra margin over robot_radius when sampling
    RewardParams reward;
};

struct StepResult {
    Observation observation;
    RewardBreakdown reward;
    EpisodeStatus status = EpisodeStatus::Running;
};

/// One robot in one arena. Start and goal are rejection-sampled on reset from
/// the injected generator, so a fixed seed fixes the whole trajectory.
class Environment {
public:
    Environment(ArenaSpec arena, EnvParams params, std::uint64_t seed);

    Observation reset();
    /// Places the robot explicitly; used for scripted scenarios and replays.
    Observation reset(const Pose& start, Point goal);
    StepResult step(const Action& action);

    const ArenaSpec& arena() const { return arena_; }
    const EnvParams& params() const { return params_; }
    const Pose& pose() const { return pose_; }
    Point goal() const { return goal_; }
    EpisodeStatus status() const { return status_; }
    std::size_t steps() const { return step_; }
    const Observation& observation() const { return obs_; }

private:
    Point sample_free_point(double clearance);

    ArenaSpec arena_;
    EnvParams params_;
    std::mt19937_64 rng_;
    Pose pose_;
    Point goal_;
    Observation obs_;
    EpisodeStatus status_ = EpisodeStatus::Running;
    std::size_t step_ = 0;
};

}  // namespace fedswarm::sim
