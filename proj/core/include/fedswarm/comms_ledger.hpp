#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fedswarm/error.hpp"

namespace fedswarm::comms {

/// Decimal megabyte. Every size in this module is an exact byte count.
inline constexpr std::uint64_t kMegabyte = 1'000'000;

enum class CommKind : std::uint8_t { ModelUp, ModelDown, BufferUp, BufferDown, CombinedUpdate };

std::string_view to_string(CommKind kind);

/// Agent index of an event that every robot link carries identically.
inline constexpr int kAllAgents = -1;

/// One transfer over a robot<->server link. The ledger accounts a single link:
/// a round where every robot uploads its model costs one model_oneway up and
/// one down, not N of each.
struct CommEvent {
    std::size_t episode = 0;
    int agent = kAllAgents;
    CommKind kind = CommKind::ModelUp;
    std::uint64_t bytes = 0;
    friend bool operator==(const CommEvent&, const CommEvent&) = default;
};

struct CommBudget {
    std::uint64_t total_budget = 132 * kMegabyte;
    std::uint64_t model_oneway = 550'000;
    std::uint64_t buffer_oneway = 2'400'000;
    std::uint64_t snddpg_per_update = 2'950'000;

    std::uint64_t model_cycle() const { return 2 * model_oneway; }
    std::uint64_t buffer_cycle() const { return 2 * buffer_oneway; }
    /// Throws InvalidArgument unless every field is positive.
    void validate() const;
    friend bool operator==(const CommBudget&, const CommBudget&) = default;
};

/// Raised before recording an event that would push the total past the budget.
class BudgetExceeded : public Error {
public:
    BudgetExceeded(CommEvent event, std::uint64_t total_before, std::uint64_t budget);

    const CommEvent& event() const { return event_; }
    std::uint64_t total_before() const { return total_before_; }
    std::uint64_t budget() const { return budget_; }

private:
    CommEvent event_;
    std::uint64_t total_before_;
    std::uint64_t budget_;
};

/// Append-only transfer log with a running total.
class CommLedger {
public:
    CommLedger() = default;
    explicit CommLedger(std::optional<std::uint64_t> budget_bytes) : budget_(budget_bytes) {}

    /// Throws InvalidArgument for zero-byte events and BudgetExceeded when the
    /// event does not fit; the ledger is unchanged in both cases.
    void record(const CommEvent& event);

    std::span<const CommEvent> events() const { return events_; }
    std::uint64_t total_bytes() const { return total_; }
    std::optional<std::uint64_t> budget() const { return budget_; }
    std::optional<std::uint64_t> headroom() const;
    /// Number of distinct episodes with at least one transfer.
    std::size_t sync_count() const;

    /// Header `episode,agent,kind,bytes`; agent is `all` for link-wide events.
    std::string to_csv() const;
    /// {"total_bytes", "events", "budget_bytes", "headroom_bytes"}; budget fields null when unbounded.
    std::string summary_json() const;

private:
    std::optional<std::uint64_t> budget_;
    std::vector<CommEvent> events_;
    std::uint64_t total_ = 0;
};

std::uint64_t total_volume(const CommLedger& ledger);

/// Smallest period p >= 1 with floor(episodes / p) * per_event <= budget.
/// Throws InvalidArgument on zero inputs or when even p = episodes does not fit.
std::size_t max_period_within_budget(std::uint64_t budget, std::uint64_t per_event, std::size_t episodes);

/// Bytes rendered in decimal MB with one decimal, e.g. 132000000 -> "132.0".
std::string format_megabytes(std::uint64_t bytes);

}  // namespace fedswarm::comms
