#include <string>

#include "fedswarm/ddpg.hpp"
#include "fedswarm/error.hpp"

namespace fedswarm::ddpg {

Batch pack_batch(std::span<const Transition> transitions) {
    const auto n = static_cast<Eigen::Index>(transitions.size());
    const auto obs_dim = static_cast<Eigen::Index>(sim::kObservationSize);
    Batch b;
    b.states.resize(obs_dim, n);
    b.next_states.resize(obs_dim, n);
    b.actions.resize(2, n);
    b.rewards.resize(n);
    b.terminal.resize(n);
    for (Eigen::Index j = 0; j < n; ++j) {
        const Transition& t = transitions[static_cast<std::size_t>(j)];
        const auto s = t.state.features();
        const auto s2 = t.next_state.features();
        for (Eigen::Index r = 0; r < obs_dim; ++r) {
            b.states(r, j) = s[static_cast<std::size_t>(r)];
            b.next_states(r, j) = s2[static_cast<std::size_t>(r)];
        }
        b.actions(0, j) = static_cast<float>(t.action.v);
        b.actions(1, j) = static_cast<float>(t.action.omega);
        b.rewards(j) = static_cast<float>(t.reward);
        b.terminal(j) = t.terminal ? 1.0f : 0.0f;
    }
    return b;
}

ReplayBuffer::ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
    if (capacity == 0) throw InvalidArgument("replay buffer capacity must be >= 1");
}

void ReplayBuffer::push(Transition t) {
    ++pushed_;
    if (items_.size() < capacity_) {
        items_.push_back(std::move(t));
        return;
    }
    items_[head_] = std::move(t);
    head_ = (head_ + 1) % capacity_;
}

std::vector<std::size_t> ReplayBuffer::sample_indices(std::size_t count, std::mt19937_64& rng) const {
    if (items_.size() < count || items_.empty()) {
        throw InvalidArgument("replay buffer holds " + std::to_string(items_.size()) + " transitions, " +
                              std::to_string(count) + " requested");
    }
    std::uniform_int_distribution<std::size_t> pick(0, items_.size() - 1);
    std::vector<std::size_t> idx(count);
    for (auto& i : idx) i = pick(rng);
    return idx;
}

std::vector<Transition> ReplayBuffer::sample(std::size_t count, std::mt19937_64& rng) const {
    std::vector<Transition> out;
    out.reserve(count);
    for (std::size_t i : sample_indices(count, rng)) out.push_back(at(i));
    return out;
}

Batch ReplayBuffer::sample_batch(std::size_t count, std::mt19937_64& rng) const {
    return pack_batch(sample(count, rng));
}

const Transition& ReplayBuffer::at(std::size_t i) const {
    if (i >= items_.size()) throw InvalidArgument("replay buffer index out of range");
    return items_[(head_ + i) % items_.size()];
}

std::vector<Transition> ReplayBuffer::snapshot() const {
    std::vector<Transition> out;
    out.reserve(items_.size());
    for (std::size_t i = 0; i < items_.size(); ++i) out.push_back(at(i));
    return out;
}

}  // namespace fedswarm::ddpg
