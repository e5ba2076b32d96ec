#include "fedswarm/comms_ledger.hpp"

#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

namespace fedswarm::comms {

std::string_view to_string(CommKind kind) {
    switch (kind) {
        case CommKind::ModelUp: return "model_up";
        case CommKind::ModelDown: return "model_down";
        case CommKind::BufferUp: return "buffer_up";
        case CommKind::BufferDown: return "buffer_down";
        case CommKind::CombinedUpdate: return "combined_update";
    }
    return "unknown";
}

void CommBudget::validate() const {
    if (total_budget == 0 || model_oneway == 0 || buffer_oneway == 0 || snddpg_per_update == 0) {
        throw InvalidArgument("communication budget sizes must all be positive");
    }
}

BudgetExceeded::BudgetExceeded(CommEvent event, std::uint64_t total_before, std::uint64_t budget)
    : Error("communication budget exceeded: " + std::string(to_string(event.kind)) + " of " +
            std::to_string(event.bytes) + " bytes at episode " + std::to_string(event.episode) + " would bring " +
            std::to_string(total_before) + " to " + std::to_string(total_before + event.bytes) + " > " +
            std::to_string(budget) + " bytes"),
      event_(event),
      total_before_(total_before),
      budget_(budget) {}

void CommLedger::record(const CommEvent& event) {
    if (event.bytes == 0) throw InvalidArgument("communication events must carry at least one byte");
    if (budget_ && total_ + event.bytes > *budget_) {
        throw BudgetExceeded(event, total_, *budget_);
    }
    events_.push_back(event);
    total_ += event.bytes;
}

std::optional<std::uint64_t> CommLedger::headroom() const {
    if (!budget_) return std::nullopt;
    return *budget_ - total_;
}

std::size_t CommLedger::sync_count() const {
    std::set<std::size_t> episodes;
    for (const auto& e : events_) episodes.insert(e.episode);
    return episodes.size();
}

std::string CommLedger::to_csv() const {
    std::ostringstream out;
    out << "episode,agent,kind,bytes\n";
    for (const auto& e : events_) {
        out << e.episode << ',';
        if (e.agent == kAllAgents) {
            out << "all";
        } else {
            out << e.agent;
        }
        out << ',' << to_string(e.kind) << ',' << e.bytes << '\n';
    }
    return out.str();
}

std::string CommLedger::summary_json() const {
    nlohmann::ordered_json j;
    j["total_bytes"] = total_;
    j["events"] = events_.size();
    j["budget_bytes"] = budget_ ? nlohmann::ordered_json(*budget_) : nlohmann::ordered_json(nullptr);
    const auto room = headroom();
    j["headroom_bytes"] = room ? nlohmann::ordered_json(*room) : nlohmann::ordered_json(nullptr);
    return j.dump(2) + "\n";
}

std::uint64_t total_volume(const CommLedger& ledger) { return ledger.total_bytes(); }

std::size_t max_period_within_budget(std::uint64_t budget, std::uint64_t per_event, std::size_t episodes) {
    if (budget == 0 || per_event == 0 || episodes == 0) {
        throw InvalidArgument("max_period_within_budget: all arguments must be positive");
    }
    for (std::size_t p = 1; p <= episodes; ++p) {
        if (static_cast<std::uint64_t>(episodes / p) * per_event <= budget) return p;
    }
    throw InvalidArgument("budget of " + std::to_string(budget) + " bytes cannot fit a single " +
                          std::to_string(per_event) + "-byte transfer");
}

std::string format_megabytes(std::uint64_t bytes) {
    // Round half up at the first decimal, integer arithmetic only.
    const std::uint64_t tenths = (bytes + 50'000) / 100'000;
    return std::to_string(tenths / 10) + "." + std::to_string(tenths % 10);
}

}  // namespace fedswarm::comms
