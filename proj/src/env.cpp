#include "batchsched/env.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "batchsched/error.hpp"
#include "batchsched/rng.hpp"

namespace batchsched {

std::string to_string(MaskMode m) { return m == MaskMode::easy ? "easy" : "normal"; }

MaskMode mask_mode_from_string(const std::string& s) {
    if (s == "easy") return MaskMode::easy;
    if (s == "normal") return MaskMode::normal;
    throw ValidationError("unknown mask mode '" + s + "' (expected easy|normal)");
}

std::string to_string(CritAggregation a) {
    switch (a) {
    case CritAggregation::sum: return "sum";
    case CritAggregation::max: return "max";
    case CritAggregation::chosen: return "chosen";
    }
    return "sum";
}

CritAggregation crit_aggregation_from_string(const std::string& s) {
    if (s == "sum") return CritAggregation::sum;
    if (s == "max") return CritAggregation::max;
    if (s == "chosen") return CritAggregation::chosen;
    throw ValidationError("unknown criticality aggregation '" + s + "' (expected sum|max|chosen)");
}

namespace {

/// Demand views with buffer stock netted out.
struct Netted {
    Simulator::DemandProfile profile;
    std::vector<int> net_window;
    std::vector<int> net_remaining;
};

Netted netted(const Simulator& sim, const SimState& state) {
    Netted n{sim.demand_profile(state, sim.instance().day_window), {}, {}};
    const auto types = static_cast<std::size_t>(sim.instance().num_types);
    n.net_window.resize(types);
    n.net_remaining.resize(types);
    for (std::size_t t = 0; t < types; ++t) {
        n.net_window[t] = std::max(0, n.profile.within[t] - state.buffer[t]);
        n.net_remaining[t] = std::max(0, n.profile.remaining[t] - state.buffer[t]);
    }
    return n;
}

std::vector<double> criticalities_from(const Netted& n, double range_floor) {
    std::vector<double> c(n.net_window.size(), 0.0);
    for (std::size_t t = 0; t < c.size(); ++t) {
        if (n.net_remaining[t] == 0) continue;
        c[t] = n.net_window[t] / std::max(n.profile.range[t], range_floor);
    }
    return c;
}

Observation observe_from(const Simulator& sim, const SimState& state, const Netted& n) {
    const Instance& inst = sim.instance();
    const auto types = static_cast<std::size_t>(inst.num_types);
    const auto demand = inst.total_demand();
    Observation obs(observation_size(inst.num_types), 0.0);
    const double never = std::max(0.0, inst.horizon - state.clock) + inst.day_window;
    for (std::size_t t = 0; t < types; ++t) {
        const double scale = demand[t] > 0 ? 1.0 / demand[t] : 0.0;
        obs[3 * t] = n.net_window[t] * scale;
        obs[3 * t + 1] = n.net_remaining[t] * scale;
        const double r = n.profile.range[t] == Simulator::kNeverRequired ? never : n.profile.range[t];
        obs[3 * t + 2] = r / inst.day_window;
    }
    obs[3 * types] = std::clamp(static_cast<double>(state.buffer_total) / inst.buffer_capacity, 0.0, 1.0);
    if (state.last_type) obs[3 * types + 1 + static_cast<std::size_t>(*state.last_type)] = 1.0;
    return obs;
}

ActionMask mask_from(const Netted& n, MaskMode mode, double range_floor) {
    const auto types = n.net_remaining.size();
    ActionMask m(types, 0);
    if (mode == MaskMode::normal) {
        for (std::size_t t = 0; t < types; ++t) m[t] = n.net_remaining[t] > 0 ? 1 : 0;
        return m;
    }
    const auto crit = criticalities_from(n, range_floor);
    std::vector<std::size_t> required;
    for (std::size_t t = 0; t < types; ++t)
        if (n.net_remaining[t] > 0) required.push_back(t);
    std::stable_sort(required.begin(), required.end(),
                     [&](std::size_t a, std::size_t b) { return crit[a] > crit[b]; });
    const auto keep = std::min<std::size_t>(3, required.size());
    for (std::size_t i = 0; i < keep; ++i) m[required[i]] = 1;
    return m;
}

RewardComponents reward_from(const SimState& state_after, const Netted& n, const StepOutcome& outcome,
                             const RewardConfig& cfg, const EnvConfig& env) {
    RewardComponents r;
    const auto crit = criticalities_from(n, cfg.range_floor);
    double agg = 0.0;
    switch (cfg.crit_aggregation) {
    case CritAggregation::sum:
        for (double c : crit) agg += c;
        break;
    case CritAggregation::max:
        for (double c : crit) agg = std::max(agg, c);
        break;
    case CritAggregation::chosen:
        if (state_after.last_type) agg = crit[static_cast<std::size_t>(*state_after.last_type)];
        break;
    }
    r.raw_crit = -cfg.crit_scale * agg;

    int violations = 0;
    for (double range : n.profile.range)
        if (range != Simulator::kNeverRequired && range < cfg.margin_threshold) ++violations;
    r.raw_mgn = -cfg.margin_penalty * violations;

    const double scale = static_cast<double>(env.batch_size) / cfg.b_ref;
    r.crit = r.raw_crit * scale;
    r.mgn = r.raw_mgn * scale;
    r.setup = cfg.alpha_se * outcome.setup_effort_delta;
    r.total = r.crit + r.mgn - r.setup;
    return r;
}

} // namespace

Observation observe(const Simulator& sim, const SimState& state) {
    return observe_from(sim, state, netted(sim, state));
}

ActionMask compute_mask(const Simulator& sim, const SimState& state, MaskMode mode) {
    return mask_from(netted(sim, state), mode, RewardConfig{}.range_floor);
}

std::vector<double> criticalities(const Simulator& sim, const SimState& state, double range_floor) {
    return criticalities_from(netted(sim, state), range_floor);
}

RewardComponents reward(const Simulator& sim, const SimState& state_after, const StepOutcome& outcome,
                        const RewardConfig& cfg, const EnvConfig& env) {
    return reward_from(state_after, netted(sim, state_after), outcome, cfg, env);
}

// ---------------------------------------------------------------------------

Env::Env(std::shared_ptr<const Instance> instance, RewardConfig reward_cfg, EnvConfig env_cfg)
    : sim_(std::move(instance)), pending_reward_(reward_cfg), pending_env_(env_cfg),
      active_reward_(reward_cfg), active_env_(env_cfg) {
    if (env_cfg.batch_size < 1) throw ValidationError("batch size must be >= 1");
    if (!(reward_cfg.b_ref > 0.0)) throw ValidationError("b_ref must be > 0");
    reset();
}

void Env::configure(const EnvConfig& env_cfg, double alpha_se) {
    if (env_cfg.batch_size < 1) throw ValidationError("batch size must be >= 1");
    pending_env_ = env_cfg;
    pending_reward_.alpha_se = alpha_se;
}

void Env::refresh() {
    const Netted n = netted(sim_, state_);
    obs_ = observe_from(sim_, state_, n);
    if (state_.terminated()) mask_.assign(static_cast<std::size_t>(sim_.instance().num_types), 0);
    else mask_ = mask_from(n, active_env_.mask_mode, active_reward_.range_floor);
}

const Observation& Env::reset() {
    active_env_ = pending_env_;
    active_reward_ = pending_reward_;
    state_ = sim_.reset();
    episode_ = EpisodeStats{};
    refresh();
    return obs_;
}

StepResult Env::step(ProductType action) {
    if (state_.terminated()) throw UsageError("step called on a finished episode; call reset()");
    if (action < 0 || action >= sim_.instance().num_types || mask_[static_cast<std::size_t>(action)] == 0)
        throw UsageError("action " + std::to_string(action) + " is masked out");

    const StepOutcome outcome = sim_.produce_batch(state_, action, active_env_.batch_size);
    const Netted n = netted(sim_, state_);
    StepResult res;
    res.components = reward_from(state_, n, outcome, active_reward_, active_env_);
    res.reward = res.components.total;
    res.done = state_.terminated();
    res.info = StepInfo{outcome.idle_delta, outcome.setup_effort_delta, outcome.deadlock, state_.termination};

    obs_ = observe_from(sim_, state_, n);
    if (res.done) mask_.assign(mask_.size(), 0);
    else mask_ = mask_from(n, active_env_.mask_mode, active_reward_.range_floor);

    episode_.ret += res.reward;
    episode_.idle_sum += outcome.idle_delta;
    episode_.setup_sum += outcome.setup_effort_delta;
    ++episode_.length;
    episode_.termination = state_.termination;
    res.observation = &obs_;
    return res;
}

RewardConfig calibrate_reward(const Instance& instance, int b_ref, std::uint64_t seed, int episodes) {
    if (b_ref < 1) throw ValidationError("calibration batch size must be >= 1");
    RewardConfig probe;
    probe.b_ref = b_ref;
    probe.crit_scale = 1.0;
    probe.margin_penalty = 1.0;
    probe.margin_threshold = 1800.0 * instance.day_window / 86400.0;
    probe.alpha_se = 0.0;

    auto inst = std::make_shared<const Instance>(instance);
    Env env(inst, probe, EnvConfig{b_ref, MaskMode::normal});
    CounterRng rng(seed, 0xca11b8a7eULL);
    double crit_sum = 0.0;
    double mgn_count_sum = 0.0;
    long steps = 0;
    for (int e = 0; e < episodes; ++e) {
        env.reset();
        bool done = false;
        while (!done) {
            std::vector<ProductType> legal;
            for (std::size_t t = 0; t < env.mask().size(); ++t)
                if (env.mask()[t]) legal.push_back(static_cast<ProductType>(t));
            const auto a = legal[static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(legal.size()) - 1))];
            const auto res = env.step(a);
            crit_sum += -res.components.raw_crit;
            mgn_count_sum += -res.components.raw_mgn;
            ++steps;
            done = res.done;
        }
    }
    RewardConfig cfg = probe;
    const double mean_crit = steps > 0 ? crit_sum / steps : 0.0;
    const double mean_violations = steps > 0 ? mgn_count_sum / steps : 0.0;
    cfg.crit_scale = mean_crit > 0.0 ? 1.0 / mean_crit : 1.0;
    cfg.margin_penalty = 0.5;
    const double per_step = 1.0 + 0.5 * mean_violations;
    const double q = instance.mean_setup_effort();
    cfg.a_se_base = q > 0.0 ? 0.25 * per_step / q : 0.0;
    return cfg;
}

} // namespace batchsched
