#include "batchsched/trainer.hpp"

#include <algorithm>

#include "batchsched/error.hpp"

namespace batchsched {

namespace {

void require(const std::vector<std::string>& problems, const std::string& what) {
    if (problems.empty()) return;
    std::string msg = "invalid " + what + ":";
    for (const auto& p : problems) msg += "\n  - " + p;
    throw ValidationError(msg);
}

} // namespace

TrainOutcome train_loop(const EnvFactory& make_env, const CurriculumSpec& spec, const PPOConfig& cfg,
                        std::uint64_t seed, long max_env_steps, const TrainCallbacks& cb) {
    require(validate(cfg), "PPO config");
    require(validate(spec), "curriculum");

    TrainOutcome out;
    auto& rec = out.record;
    rec.seed = seed;
    rec.curriculum_id = spec.id;
    rec.batch_size = spec.tasks.back().batch_size;
    rec.task_reached = 1;

    const auto num_envs = static_cast<std::size_t>(cfg.num_envs);
    std::vector<Env> envs;
    envs.reserve(num_envs);
    for (std::size_t e = 0; e < num_envs; ++e) envs.push_back(make_env());

    const auto configure_all = [&](const TaskSpec& task) {
        for (auto& env : envs) {
            env.configure(EnvConfig{task.batch_size, task.mask_mode}, task.alpha_fraction * env.reward_config().a_se_base);
        }
    };
    configure_all(spec.tasks.front());
    for (auto& env : envs) env.reset();

    const auto obs_size = static_cast<Eigen::Index>(envs.front().obs_size());
    CounterRng init_rng(seed, 1);
    out.policy = PolicyNet(NetShape{static_cast<int>(obs_size), envs.front().num_actions(), cfg.hidden}, init_rng);
    out.update_rng = CounterRng(seed, 2);
    std::vector<CounterRng> action_rng;
    for (std::size_t e = 0; e < num_envs; ++e) action_rng.emplace_back(seed, 100 + e);

    CurriculumState cstate(spec.window);
    std::vector<int> env_task(num_envs, 0);
    std::vector<Trajectory> traj(num_envs);
    Eigen::MatrixXd obs(obs_size, static_cast<Eigen::Index>(num_envs));
    const long steps_per_env = std::max(1, cfg.rollout_length / cfg.num_envs);
    long global = 0;
    long episode_counter = 0;
    bool finished = false;

    const auto gather_obs = [&] {
        for (std::size_t e = 0; e < num_envs; ++e) {
            const auto& o = envs[e].observation();
            obs.col(static_cast<Eigen::Index>(e)) = Eigen::Map<const Eigen::VectorXd>(o.data(), obs_size);
        }
    };

    while (!finished && global < max_env_steps) {
        const long horizon = std::min(steps_per_env, (max_env_steps - global) / static_cast<long>(num_envs));
        if (horizon == 0) break;
        for (auto& tr : traj) tr.clear();

        for (long t = 0; t < horizon && !finished; ++t) {
            gather_obs();
            const auto fwd = out.policy.forward(obs);
            for (std::size_t e = 0; e < num_envs && !finished; ++e) {
                Env& env = envs[e];
                const auto col = static_cast<Eigen::Index>(e);
                const Eigen::VectorXd z = apply_mask(fwd.logits.col(col), env.mask());
                const auto [action, logp] = sample_action(z, action_rng[e]);
                if (!env.mask()[static_cast<std::size_t>(action)]) ++rec.illegal_actions;

                auto& tr = traj[e];
                tr.observations.push_back(env.observation());
                tr.masks.push_back(env.mask());
                tr.actions.push_back(action);
                tr.log_probs.push_back(logp);
                tr.values.push_back(fwd.values[col]);

                const StepResult res = env.step(action);
                ++global;
                tr.rewards.push_back(res.reward);
                tr.dones.push_back(res.done ? 1 : 0);
                if (!res.done) continue;

                const auto& ep = env.episode();
                EpisodeRecord er{episode_counter++, global,        env_task[e], env.env_config().batch_size,
                                 ep.ret,            ep.idle_sum,   ep.setup_sum, ep.length,
                                 ep.termination};
                rec.episodes.push_back(er);
                if (cb.on_episode) cb.on_episode(er);

                if (env_task[e] == cstate.task_index()) {
                    const Decision d = on_episode_end(cstate, spec, ep.idle_sum);
                    if (d.kind == Decision::Kind::advance) {
                        configure_all(*d.next);
                        rec.task_reached = cstate.task_index() + 1;
                        if (cb.on_task_change) cb.on_task_change(cstate.task_index(), global);
                    } else if (d.kind == Decision::Kind::finished) {
                        finished = true;
                        rec.steps_used = global;
                    }
                }
                env_task[e] = cstate.task_index();
                env.reset();
            }
        }
        if (finished) break;

        gather_obs();
        const auto boot = out.policy.forward(obs);
        for (std::size_t e = 0; e < num_envs; ++e) traj[e].bootstrap_value = boot.values[static_cast<Eigen::Index>(e)];

        const Batch batch = make_batch(traj, cfg.gamma, cfg.gae_lambda);
        UpdateStats stats = ppo_update(out.policy, out.adam, batch, cfg, out.update_rng);
        if (cb.on_update) cb.on_update(stats, global);
        rec.updates.push_back(std::move(stats));
    }

    if (!finished) rec.steps_used = global;
    rec.finished = finished;
    rec.task_reached = cstate.task_index() + 1;
    return out;
}

} // namespace batchsched
