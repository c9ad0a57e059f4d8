#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "batchsched/curriculum.hpp"
#include "batchsched/env.hpp"
#include "batchsched/ppo.hpp"

namespace batchsched {

struct EpisodeRecord {
    long episode = 0;
    long end_step = 0; ///< global env-step count when the episode ended
    int task_index = 0;
    int batch_size = 0;
    double ret = 0.0;
    double idle_sum = 0.0;
    double setup_sum = 0.0;
    int length = 0;
    Termination termination = Termination::running;
};

/// Metrics of one training run.
struct TrainRunRecord {
    std::uint64_t seed = 0;
    std::string curriculum_id;
    int batch_size = 0; ///< batch size of the curriculum's last task
    bool finished = false; ///< final criterion met
    long steps_used = 0;   ///< env steps until finishing, or until the cap
    int task_reached = 0;  ///< 1-based
    long illegal_actions = 0;
    std::vector<EpisodeRecord> episodes;
    std::vector<UpdateStats> updates;
};

/// Builds a fresh environment over the shared instance with the base reward
/// configuration (a_se_base and the calibrated scales).
using EnvFactory = std::function<Env()>;

struct TrainCallbacks {
    std::function<void(const EpisodeRecord&)> on_episode;
    std::function<void(const UpdateStats&, long steps)> on_update;
    std::function<void(int task_index, long steps)> on_task_change;
};

struct TrainOutcome {
    TrainRunRecord record;
    PolicyNet policy;
    AdamState adam;
    CounterRng update_rng;
};

/// Collects rollouts from `cfg.num_envs` envs, updates the policy with PPO and
/// drives the curriculum with every episode's idle sum, in a fixed (step, env)
/// order. A task change reconfigures each env at its next episode boundary;
/// episodes still running under an older task do not count toward the new
/// task's window. Stops when the curriculum finishes or `max_env_steps` is
/// reached. Fully determined by (env factory, curriculum, cfg, seed).
TrainOutcome train_loop(const EnvFactory& make_env, const CurriculumSpec& curriculum, const PPOConfig& cfg,
                        std::uint64_t seed, long max_env_steps, const TrainCallbacks& callbacks = {});

} // namespace batchsched
