#include "batchsched/simulator.hpp"

#include <algorithm>
#include <sstream>

#include "batchsched/error.hpp"
#include "io_util.hpp"

namespace batchsched {

std::string to_string(Termination t) {
    switch (t) {
    case Termination::running: return "running";
    case Termination::horizon_complete: return "horizon-complete";
    case Termination::deadlock: return "deadlock";
    case Termination::horizon_guard: return "horizon-guard";
    }
    return "unknown";
}

Simulator::Simulator(std::shared_ptr<const Instance> instance) : instance_(std::move(instance)) {
    if (!instance_) throw UsageError("Simulator requires an instance");
    require_valid(*instance_);
}

SimState Simulator::reset() const {
    SimState s;
    s.buffer = instance_->initial_buffer;
    for (int c : s.buffer) s.buffer_total += c;
    s.fas.assign(instance_->fas.size(), FasState{});
    return s;
}

void Simulator::take(SimState& state, std::size_t k, double t) const {
    auto& f = state.fas[k];
    const auto& entry = instance_->fas[k].entries[f.schedule_index];
    --state.buffer[static_cast<std::size_t>(entry.type)];
    --state.buffer_total;
    ++state.consumed;
    ++f.schedule_index;
    f.busy_until = t + entry.proc_time;
}

void Simulator::advance_fas(SimState& state, double t) const {
    const auto& stations = instance_->fas;
    for (;;) {
        std::size_t next = stations.size();
        double when = t;
        for (std::size_t k = 0; k < stations.size(); ++k) {
            const auto& f = state.fas[k];
            if (f.waiting || f.schedule_index >= stations[k].entries.size()) continue;
            if (f.busy_until <= when && (next == stations.size() || f.busy_until < when)) {
                next = k;
                when = f.busy_until;
            }
        }
        if (next == stations.size()) return;
        auto& f = state.fas[next];
        const ProductType type = stations[next].entries[f.schedule_index].type;
        if (state.buffer[static_cast<std::size_t>(type)] > 0) {
            take(state, next, f.busy_until);
        } else {
            f.waiting = true;
            f.idle_mark = f.busy_until;
        }
    }
}

void Simulator::serve_waiting(SimState& state, double t) const {
    const auto& stations = instance_->fas;
    for (std::size_t k = 0; k < stations.size(); ++k) {
        auto& f = state.fas[k];
        if (!f.waiting) continue;
        const ProductType type = stations[k].entries[f.schedule_index].type;
        if (state.buffer[static_cast<std::size_t>(type)] == 0) continue;
        f.idle_accumulated += t - f.idle_mark;
        f.waiting = false;
        take(state, k, t);
    }
}

void Simulator::accrue_idle(SimState& state, double t) const {
    for (auto& f : state.fas) {
        if (!f.waiting || t <= f.idle_mark) continue;
        f.idle_accumulated += t - f.idle_mark;
        f.idle_mark = t;
    }
}

bool Simulator::can_consume(const SimState& state) const {
    const auto& stations = instance_->fas;
    for (std::size_t k = 0; k < stations.size(); ++k) {
        const auto idx = state.fas[k].schedule_index;
        if (idx >= stations[k].entries.size()) continue;
        if (state.buffer[static_cast<std::size_t>(stations[k].entries[idx].type)] > 0) return true;
    }
    return false;
}

bool Simulator::stock_covers_demand(const SimState& state) const {
    for (ProductType t = 0; t < instance_->num_types; ++t) {
        if (remaining_demand(state, t) > state.buffer[static_cast<std::size_t>(t)]) return false;
    }
    return true;
}

double Simulator::idle_total(const SimState& state) {
    double sum = 0.0;
    for (const auto& f : state.fas) sum += f.idle_accumulated;
    return sum;
}

StepOutcome Simulator::produce_batch(SimState& state, ProductType type, int batch_size) const {
    if (state.terminated())
        throw UsageError("produce_batch on a terminated episode (" + to_string(state.termination) + ")");
    if (batch_size < 1) throw UsageError("batch size must be >= 1");
    if (type < 0 || type >= instance_->num_types)
        throw UsageError("product type " + std::to_string(type) + " out of range");

    StepOutcome out;
    const double idle_before = idle_total(state);

    if (state.last_type && *state.last_type != type) {
        out.setup_effort_delta =
            instance_->setup_matrix[static_cast<std::size_t>(*state.last_type)][static_cast<std::size_t>(type)];
        state.setup_effort_total += out.setup_effort_delta;
    }
    state.last_type = type;

    const double start = state.clock;
    double now = start + static_cast<double>(batch_size) * instance_->pas_proc_time;
    advance_fas(state, now);

    while (instance_->buffer_capacity - state.buffer_total < batch_size) {
        out.blocked = true;
        if (!can_consume(state)) {
            accrue_idle(state, now);
            state.clock = now;
            state.termination = Termination::deadlock;
            out.deadlock = true;
            out.elapsed = now - start;
            out.idle_delta = idle_total(state) - idle_before;
            return out;
        }
        double next = kNeverRequired;
        for (std::size_t k = 0; k < state.fas.size(); ++k) {
            const auto& f = state.fas[k];
            if (f.waiting || f.schedule_index >= instance_->fas[k].entries.size()) continue;
            next = std::min(next, f.busy_until);
        }
        now = std::max(now, next);
        advance_fas(state, now);
    }

    state.buffer[static_cast<std::size_t>(type)] += batch_size;
    state.buffer_total += batch_size;
    state.produced += batch_size;
    serve_waiting(state, now);
    accrue_idle(state, now);
    state.clock = now;
    out.elapsed = now - start;

    if (stock_covers_demand(state)) {
        advance_fas(state, kNeverRequired);
        state.termination = Termination::horizon_complete;
        out.all_demand_met = true;
    } else if (state.clock > 2.0 * instance_->horizon) {
        state.termination = Termination::horizon_guard;
    }
    out.idle_delta = idle_total(state) - idle_before;
    return out;
}

int Simulator::remaining_demand(const SimState& state, ProductType type) const {
    int n = 0;
    const auto& stations = instance_->fas;
    for (std::size_t k = 0; k < stations.size(); ++k) {
        const auto& entries = stations[k].entries;
        for (std::size_t i = state.fas[k].schedule_index; i < entries.size(); ++i) {
            if (entries[i].type == type) ++n;
        }
    }
    return n;
}

int Simulator::demand_within(const SimState& state, ProductType type, double window) const {
    if (!(window > 0.0)) throw UsageError("demand window must be > 0");
    const double end = state.clock + window;
    int n = 0;
    const auto& stations = instance_->fas;
    for (std::size_t k = 0; k < stations.size(); ++k) {
        const auto& entries = stations[k].entries;
        double t = std::max(state.fas[k].busy_until, state.clock);
        for (std::size_t i = state.fas[k].schedule_index; i < entries.size() && t < end; ++i) {
            if (entries[i].type == type) ++n;
            t += entries[i].proc_time;
        }
    }
    return n;
}

double Simulator::range_of(const SimState& state, ProductType type) const {
    const auto stock = static_cast<std::size_t>(state.buffer[static_cast<std::size_t>(type)]);
    std::vector<double> times;
    const auto& stations = instance_->fas;
    for (std::size_t k = 0; k < stations.size(); ++k) {
        const auto& entries = stations[k].entries;
        double t = std::max(state.fas[k].busy_until, state.clock);
        for (std::size_t i = state.fas[k].schedule_index; i < entries.size(); ++i) {
            if (entries[i].type == type) times.push_back(t);
            t += entries[i].proc_time;
        }
    }
    if (times.size() <= stock) return kNeverRequired;
    std::nth_element(times.begin(), times.begin() + static_cast<std::ptrdiff_t>(stock), times.end());
    return times[stock] - state.clock;
}

Simulator::DemandProfile Simulator::demand_profile(const SimState& state, double window) const {
    if (!(window > 0.0)) throw UsageError("demand window must be > 0");
    const auto n = static_cast<std::size_t>(instance_->num_types);
    DemandProfile p;
    p.remaining.assign(n, 0);
    p.within.assign(n, 0);
    p.range.assign(n, kNeverRequired);
    std::vector<std::vector<double>> times(n);
    const double end = state.clock + window;
    const auto& stations = instance_->fas;
    for (std::size_t k = 0; k < stations.size(); ++k) {
        const auto& entries = stations[k].entries;
        double t = std::max(state.fas[k].busy_until, state.clock);
        for (std::size_t i = state.fas[k].schedule_index; i < entries.size(); ++i) {
            const auto type = static_cast<std::size_t>(entries[i].type);
            ++p.remaining[type];
            if (t < end) ++p.within[type];
            times[type].push_back(t);
            t += entries[i].proc_time;
        }
    }
    for (std::size_t type = 0; type < n; ++type) {
        const auto stock = static_cast<std::size_t>(state.buffer[type]);
        auto& v = times[type];
        if (v.size() <= stock) continue;
        std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(stock), v.end());
        p.range[type] = v[stock] - state.clock;
    }
    return p;
}

double Simulator::finite_range(const SimState& state, ProductType type) const {
    const double r = range_of(state, type);
    if (r != kNeverRequired) return r;
    return std::max(0.0, instance_->horizon - state.clock) + instance_->day_window;
}

ReplayResult replay(const Simulator& sim, const std::vector<std::pair<ProductType, int>>& batches) {
    ReplayResult result;
    SimState state = sim.reset();
    int step = 0;
    for (const auto& [type, b] : batches) {
        if (state.terminated()) break;
        const double start = state.clock;
        const StepOutcome out = sim.produce_batch(state, type, b);
        result.trace.push_back(TraceRow{step, type, b, start, state.clock, out.idle_delta,
                                        out.setup_effort_delta, state.buffer_total, out.deadlock});
        ++step;
    }
    result.idle_total = Simulator::idle_total(state);
    result.setup_total = Simulator::setup_total(state);
    result.deadlock = state.termination == Termination::deadlock;
    result.complete = state.termination == Termination::horizon_complete;
    result.steps_executed = step;
    return result;
}

std::string trace_csv(const std::vector<TraceRow>& trace) {
    std::ostringstream out;
    out << "step,type,batch_size,start,end,idle_delta,setup_delta,buffer_after,deadlock\n";
    for (const auto& r : trace) {
        out << r.step << ',' << r.type << ',' << r.batch_size << ',' << detail::fmt_num(r.start) << ','
            << detail::fmt_num(r.end) << ',' << detail::fmt_num(r.idle_delta) << ','
            << detail::fmt_num(r.setup_delta) << ',' << r.buffer_after << ',' << (r.deadlock ? 1 : 0) << '\n';
    }
    return out.str();
}

} // namespace batchsched
