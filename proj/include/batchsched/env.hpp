#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "batchsched/simulator.hpp"

namespace batchsched {

enum class MaskMode {
    easy,   ///< only the three most critical required types
    normal, ///< every type with uncovered remaining demand
};

std::string to_string(MaskMode m);
MaskMode mask_mode_from_string(const std::string& s);

/// How per-type criticality is combined into the criticality penalty.
enum class CritAggregation { sum, max, chosen };

std::string to_string(CritAggregation a);
CritAggregation crit_aggregation_from_string(const std::string& s);

struct RewardConfig {
    double alpha_se = 0.0;  ///< setup penalty factor of the active task
    double a_se_base = 1.0; ///< full setup penalty factor; tasks use fractions of it
    double margin_threshold = 1800.0;
    double margin_penalty = 0.5;
    double crit_scale = 1.0;
    double b_ref = 50.0;
    /// Ranges below this many seconds count as this value in criticality
    /// ratios, which keeps them finite when a FAS is already waiting.
    double range_floor = 60.0;
    CritAggregation crit_aggregation = CritAggregation::sum;

    bool operator==(const RewardConfig&) const = default;
};

struct EnvConfig {
    int batch_size = 50;
    MaskMode mask_mode = MaskMode::normal;

    bool operator==(const EnvConfig&) const = default;
};

/// Per type: [net 24h quantity, net horizon quantity, range] (quantities
/// divided by the type's total demand, range divided by day_window); then the
/// buffer fill fraction; then a one-hot of the last produced type.
using Observation = std::vector<double>;

/// 1 = the type may be produced.
using ActionMask = std::vector<std::uint8_t>;

inline std::size_t observation_size(int num_types) {
    return static_cast<std::size_t>(4 * num_types + 1);
}

Observation observe(const Simulator& sim, const SimState& state);

ActionMask compute_mask(const Simulator& sim, const SimState& state, MaskMode mode);

/// Criticality of every type after netting buffer stock: net 24h quantity
/// divided by the floored range; 0 for types without uncovered demand.
std::vector<double> criticalities(const Simulator& sim, const SimState& state, double range_floor = 60.0);

struct RewardComponents {
    double raw_crit = 0.0; ///< before batch-size normalization
    double raw_mgn = 0.0;
    double crit = 0.0;     ///< raw_crit * b / b_ref
    double mgn = 0.0;      ///< raw_mgn * b / b_ref
    double setup = 0.0;    ///< alpha_se * setup effort, subtracted from the total
    double total = 0.0;
};

RewardComponents reward(const Simulator& sim, const SimState& state_after, const StepOutcome& outcome,
                        const RewardConfig& cfg, const EnvConfig& env);

struct StepInfo {
    double idle_delta = 0.0;
    double setup_delta = 0.0;
    bool deadlock = false;
    Termination termination = Termination::running;
};

struct StepResult {
    const Observation* observation = nullptr; ///< owned by the Env, valid until the next call
    double reward = 0.0;
    bool done = false;
    StepInfo info;
    RewardComponents components;
};

struct EpisodeStats {
    double ret = 0.0;
    double idle_sum = 0.0;
    double setup_sum = 0.0;
    int length = 0;
    Termination termination = Termination::running;
};

/// The simulator wrapped as a decision process: one action per PAS batch.
class Env {
public:
    Env(std::shared_ptr<const Instance> instance, RewardConfig reward_cfg, EnvConfig env_cfg);

    /// Takes effect at the next reset().
    void configure(const EnvConfig& env_cfg, double alpha_se);

    const Observation& reset();

    /// Throws UsageError when `action` is masked out or the episode is done.
    StepResult step(ProductType action);

    const Observation& observation() const noexcept { return obs_; }
    const ActionMask& mask() const noexcept { return mask_; }
    const SimState& state() const noexcept { return state_; }
    const Simulator& simulator() const noexcept { return sim_; }
    const EpisodeStats& episode() const noexcept { return episode_; }
    const EnvConfig& env_config() const noexcept { return active_env_; }
    const RewardConfig& reward_config() const noexcept { return active_reward_; }
    int num_actions() const noexcept { return sim_.instance().num_types; }
    std::size_t obs_size() const noexcept { return observation_size(sim_.instance().num_types); }

private:
    void refresh();

    Simulator sim_;
    RewardConfig pending_reward_;
    EnvConfig pending_env_;
    RewardConfig active_reward_;
    EnvConfig active_env_;
    SimState state_;
    Observation obs_;
    ActionMask mask_;
    EpisodeStats episode_;
};

/// Scales chosen so that under a uniform random legal policy at batch size
/// `b_ref` the mean |criticality penalty| per step is 1, one margin violation
/// costs 0.5, and an average type change under the full setup factor costs a
/// quarter of the mean per-step |crit + mgn|. The margin threshold is 30 min
/// scaled by day_window / 24 h.
RewardConfig calibrate_reward(const Instance& instance, int b_ref, std::uint64_t seed, int episodes = 20);

} // namespace batchsched
