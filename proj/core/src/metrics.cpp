#include "fedswarm/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "fedswarm/error.hpp"
#include "fedswarm/seeding.hpp"

namespace fedswarm::metrics {

RewardCurve average_reward_curve(const train::TrainingRecord& record) {
    RewardCurve curve;
    curve.reserve(record.rewards.size());
    for (const auto& row : record.rewards) {
        double sum = 0.0;
        for (double r : row) sum += r;
        curve.push_back(row.empty() ? 0.0 : sum / static_cast<double>(row.size()));
    }
    return curve;
}

std::size_t count_catastrophic_interference(std::span<const double> curve) {
    if (curve.size() < 2) throw InvalidArgument("catastrophic interference needs at least two episodes");
    const auto [lo, hi] = std::minmax_element(curve.begin(), curve.end());
    const double threshold = 0.5 * (*hi - *lo);
    std::size_t count = 0;
    for (std::size_t m = 0; m + 1 < curve.size(); ++m) {
        if (std::abs(curve[m + 1] - curve[m]) > threshold) ++count;
    }
    return count;
}

bool is_failed_agent(std::span<const double> agent_curve) {
    if (agent_curve.empty()) throw InvalidArgument("empty agent curve");
    const auto [lo, hi] = std::minmax_element(agent_curve.begin(), agent_curve.end());
    return std::abs(agent_curve.back() - agent_curve.front()) <= 1.0 && (*hi - *lo) < 1.5;
}

std::size_t count_failed_agents(const train::TrainingRecord& record) {
    std::size_t failed = 0;
    for (std::size_t i = 0; i < record.agents(); ++i) {
        if (is_failed_agent(record.agent_curve(i))) ++failed;
    }
    return failed;
}

EvalResult evaluate_policy(const Policy& policy, const sim::ArenaSpec& arena, const EvalSpec& spec,
                           std::uint64_t seed, std::vector<EvalRun>* trace) {
    if (spec.runs == 0) throw InvalidArgument("evaluation needs runs >= 1");
    if (!(spec.time_limit > 0.0) || !(spec.dt > 0.0)) throw InvalidArgument("time_limit and dt must be positive");

    sim::EnvParams params;
    params.dt = spec.dt;
    params.max_steps = std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(spec.time_limit / spec.dt + 1e-9)));
    params.min_start_goal_distance = spec.min_start_goal_distance;
    sim::Environment env(arena, params, derive_seed(seed, SeedStream::Evaluation));

    EvalResult result;
    result.runs = spec.runs;
    double time_sum = 0.0;
    for (std::size_t run = 0; run < spec.runs; ++run) {
        sim::Observation obs = env.reset();
        EvalRun log;
        if (trace) {
            log.start = env.pose();
            log.goal = env.goal();
        }
        while (!sim::is_terminal(env.status())) {
            const sim::Action a = policy(obs);
            if (trace) log.actions.push_back(a);
            obs = env.step(a).observation;
        }
        if (env.status() == sim::EpisodeStatus::GoalReached) {
            ++result.successes;
            time_sum += spec.dt * static_cast<double>(env.steps());
        }
        if (trace) {
            log.status = env.status();
            log.steps = env.steps();
            trace->push_back(std::move(log));
        }
    }
    result.rho_s = static_cast<double>(result.successes) / static_cast<double>(result.runs);
    if (result.successes > 0) result.t_comp = time_sum / static_cast<double>(result.successes);
    return result;
}

EvalResult evaluate(const nn::NetworkWeights& actor, const sim::ArenaSpec& arena, const EvalSpec& spec,
                    std::uint64_t seed, std::vector<EvalRun>* trace) {
    return evaluate_policy([&actor](const sim::Observation& obs) { return nn::actor_forward(actor, obs); }, arena,
                           spec, seed, trace);
}

}  // namespace fedswarm::metrics
