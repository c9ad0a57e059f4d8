#pragma once

#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "batchsched/instance.hpp"

namespace batchsched {

enum class Termination {
    running,
    horizon_complete, ///< every FAS schedule will be served from stock
    deadlock,         ///< PAS blocked and no FAS can ever free buffer space
    horizon_guard,    ///< clock passed 2x the nominal horizon
};

std::string to_string(Termination t);

struct FasState {
    std::size_t schedule_index = 0; ///< next entry not yet taken from the buffer
    double busy_until = 0.0;        ///< end of the entry in progress
    double idle_accumulated = 0.0;
    bool waiting = false;           ///< free but its next type is not buffered
    double idle_mark = 0.0;         ///< idle accrued up to this instant while waiting

    bool operator==(const FasState&) const = default;
};

/// Dynamic line state owned by one episode.
struct SimState {
    double clock = 0.0; ///< PAS time: the instant the next batch may start
    std::optional<ProductType> last_type;
    std::vector<int> buffer;
    int buffer_total = 0;
    std::vector<FasState> fas;
    double setup_effort_total = 0.0;
    Termination termination = Termination::running;
    long produced = 0; ///< units inserted by the PAS
    long consumed = 0; ///< units taken by all FAS

    bool terminated() const noexcept { return termination != Termination::running; }
    bool operator==(const SimState&) const = default;
};

/// Per-decision aggregates of one PAS batch.
struct StepOutcome {
    double elapsed = 0.0;            ///< seconds the PAS clock advanced
    double idle_delta = 0.0;         ///< summed over all FAS
    double setup_effort_delta = 0.0;
    bool blocked = false;            ///< PAS had to wait for buffer space
    bool deadlock = false;
    bool all_demand_met = false;
};

/// Deterministic discrete-event model of the line.
///
/// A FAS takes its next unit from the buffer at the instant it becomes free;
/// if the type is absent it idles until a batch containing it is inserted.
/// A batch of `b` units enters the buffer as a whole once the PAS finishes it
/// and `b` slots are free; while blocked the PAS clock stalls. FAS events are
/// processed in global time order with ties broken by FAS index, and all FAS
/// events at an instant precede a batch insertion at that instant.
class Simulator {
public:
    explicit Simulator(std::shared_ptr<const Instance> instance);

    const Instance& instance() const noexcept { return *instance_; }
    const std::shared_ptr<const Instance>& instance_ptr() const noexcept { return instance_; }

    SimState reset() const;

    /// Produces one batch of `type`. Throws UsageError on a terminated state,
    /// b < 1 or an out-of-range type.
    StepOutcome produce_batch(SimState& state, ProductType type, int batch_size) const;

    /// Units of `type` in FAS schedules not yet taken from the buffer.
    int remaining_demand(const SimState& state, ProductType type) const;

    /// Units of `type` whose projected start lies in [clock, clock + window),
    /// assuming every FAS runs at nominal speed from now on.
    int demand_within(const SimState& state, ProductType type, double window) const;

    /// Seconds from clock until the (k+1)-th projected demand of `type`, where
    /// k is the buffered stock of that type; kNeverRequired if stock covers all.
    double range_of(const SimState& state, ProductType type) const;

    /// All three demand views for every type in one pass over the schedules.
    struct DemandProfile {
        std::vector<int> remaining;
        std::vector<int> within;
        std::vector<double> range; ///< kNeverRequired where stock covers demand
    };
    DemandProfile demand_profile(const SimState& state, double window) const;

    /// Observation-friendly stand-in for kNeverRequired: remaining horizon + one day.
    double finite_range(const SimState& state, ProductType type) const;

    static double idle_total(const SimState& state);
    static double setup_total(const SimState& state) { return state.setup_effort_total; }

    static constexpr double kNeverRequired = std::numeric_limits<double>::infinity();

private:
    /// Processes every FAS event with time <= t.
    void advance_fas(SimState& state, double t) const;
    /// Serves waiting stations from the buffer at instant t.
    void serve_waiting(SimState& state, double t) const;
    void accrue_idle(SimState& state, double t) const;
    bool can_consume(const SimState& state) const;
    bool stock_covers_demand(const SimState& state) const;
    void take(SimState& state, std::size_t k, double t) const;

    std::shared_ptr<const Instance> instance_;
};

/// One row of a replay trace.
struct TraceRow {
    int step = 0;
    ProductType type = 0;
    int batch_size = 0;
    double start = 0.0;
    double end = 0.0;
    double idle_delta = 0.0;
    double setup_delta = 0.0;
    int buffer_after = 0;
    bool deadlock = false;
};

struct ReplayResult {
    double idle_total = 0.0;
    double setup_total = 0.0;
    bool deadlock = false;
    bool complete = false; ///< all demand met
    int steps_executed = 0;
    std::vector<TraceRow> trace;
};

/// Replays an ordered batch list. Stops early when the simulation terminates.
ReplayResult replay(const Simulator& sim, const std::vector<std::pair<ProductType, int>>& batches);

std::string trace_csv(const std::vector<TraceRow>& trace);

} // namespace batchsched
