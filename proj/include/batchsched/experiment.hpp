#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "batchsched/curriculum.hpp"
#include "batchsched/env.hpp"
#include "batchsched/policy.hpp"
#include "batchsched/ppo.hpp"
#include "batchsched/trainer.hpp"

namespace batchsched {

/// An evaluated production plan.
struct Plan {
    std::vector<std::pair<ProductType, int>> batches;
    double idle_total = 0.0;
    double setup_total = 0.0;
    bool deadlock = false;
    double ret = 0.0;  ///< episode return of the rollout that produced it
    int rollout = 0;   ///< index of that rollout

    int length() const noexcept { return static_cast<int>(batches.size()); }
};

/// Index of the lexicographic minimum of (idle_total, setup_total); ties go
/// to the earlier entry. Throws UsageError on an empty list.
std::size_t select_best(std::span<const Plan> plans);

/// Runs `rollouts` stochastic episodes and returns the lexicographically best
/// plan, after checking that replaying it reproduces its idle and setup totals.
Plan evaluate(const PolicyNet& policy, std::shared_ptr<const Instance> instance, const EnvConfig& env_cfg,
              const RewardConfig& reward_cfg, int rollouts, std::uint64_t seed);

/// Greedy baseline: always produces the most critical legal type.
Plan greedy_plan(std::shared_ptr<const Instance> instance, const EnvConfig& env_cfg, const RewardConfig& reward_cfg);

/// Number of batches needed to cover the demand not already in the buffer.
int nominal_episode_length(const Instance& instance, int batch_size);

/// log10(|A|^T), computed as T * log10(|A|).
double policy_space_log10(double num_actions_avg, double T);

struct DriftParams {
    int window = 100;
    double length_fraction = 0.8;
    double idle_threshold = 100.0;
    int min_episodes = 10; ///< episodes of the new task before a window is judged
};

struct DriftReport {
    bool drifted = false;
    std::optional<long> onset_episode;
};

/// Flags a run whose episodes collapse in length after a task transition.
/// For every episode after the first transition, the trailing window (limited
/// to episodes since the latest transition) is tested for mean length below
/// length_fraction * nominal_T; it only counts once some earlier full window
/// had a mean idle sum below idle_threshold.
DriftReport drift_detector(const TrainRunRecord& record, double nominal_T, const DriftParams& params = {});

/// One row per (batch size, seed) run.
struct RunSummary {
    int batch_size = 0;
    std::uint64_t seed = 0;
    std::string curriculum;
    bool finished = false;
    long steps_used = 0;
    int task_reached = 0;
    long episodes = 0;
    long illegal_actions = 0;
    int plan_length = 0;
    double best_idle = 0.0;
    double best_setup = 0.0;
    double best_return = 0.0;
    bool best_deadlock = false;
    bool drifted = false;
    long drift_onset = -1;

    bool operator==(const RunSummary&) const = default;
};

struct Stats {
    std::size_t count = 0;
    double min = 0.0;
    double max = 0.0;
    double mean = 0.0;
    double median = 0.0;
    std::optional<double> stddev; ///< sample standard deviation, absent for a single value
};

/// Absent for an empty sample.
std::optional<Stats> describe(std::vector<double> values);

struct SizeSummary {
    int batch_size = 0;
    int runs = 0;
    int finished = 0;
    int zero_idle = 0;
    std::optional<Stats> steps;  ///< finished runs only
    std::optional<Stats> setup;  ///< zero-idle plans only
    std::optional<Stats> ret;    ///< zero-idle plans only
    double mean_plan_length = 0.0;
};

struct SweepReport {
    std::vector<SizeSummary> rows; ///< ascending batch size
};

SweepReport aggregate(std::span<const RunSummary> runs);

/// PPO settings sized for desk-scale instances on a few CPU cores.
PPOConfig desk_ppo_config();

/// Reference batch size used to calibrate desk-scale rewards.
inline constexpr int kDeskReferenceBatch = 6;

struct SweepConfig {
    std::vector<int> batch_sizes{10, 20, 30, 40, 50};
    int seeds = 10;
    std::uint64_t base_seed = 1; ///< run seeds are base_seed, base_seed + 1, ...
    std::string curriculum = "a";
    long max_steps = 2'000'000;
    int eval_rollouts = 20;
    int workers = 1;
    PPOConfig ppo = desk_ppo_config();
    RewardConfig reward; ///< base configuration (alpha_se is set per task)
};

struct RunResult {
    RunSummary summary;
    TrainRunRecord record;
    Plan plan;
    PolicyNet policy;
};

struct SweepResult {
    std::vector<RunResult> runs; ///< sorted by (batch size, seed)
    SweepReport report;
};

/// Train + evaluate for one (batch size, seed).
RunResult run_one(std::shared_ptr<const Instance> instance, const SweepConfig& cfg, int batch_size, std::uint64_t seed);

/// All (batch size, seed) runs on `cfg.workers` threads; results do not
/// depend on the worker count.
SweepResult sweep(std::shared_ptr<const Instance> instance, const SweepConfig& cfg,
                  const std::function<void(const RunSummary&)>& on_run_done = {});

/// Worker count from BATCHSCHED_WORKERS, or `fallback` when unset.
int workers_from_env(int fallback = 1);

} // namespace batchsched
