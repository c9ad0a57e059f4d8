#include "batchsched/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <numeric>
#include <thread>

#include "batchsched/error.hpp"

namespace batchsched {

std::size_t select_best(std::span<const Plan> plans) {
    if (plans.empty()) throw UsageError("select_best on an empty plan list");
    std::size_t best = 0;
    for (std::size_t i = 1; i < plans.size(); ++i) {
        const auto& p = plans[i];
        const auto& b = plans[best];
        if (p.idle_total < b.idle_total || (p.idle_total == b.idle_total && p.setup_total < b.setup_total)) best = i;
    }
    return best;
}

namespace {

void verify_by_replay(const std::shared_ptr<const Instance>& instance, const Plan& plan) {
    const ReplayResult r = replay(Simulator(instance), plan.batches);
    if (r.idle_total != plan.idle_total || r.setup_total != plan.setup_total || r.deadlock != plan.deadlock)
        throw Error("plan replay mismatch: recorded (" + std::to_string(plan.idle_total) + ", " +
                    std::to_string(plan.setup_total) + "), replayed (" + std::to_string(r.idle_total) + ", " +
                    std::to_string(r.setup_total) + ")");
}

template <class ChooseAction>
Plan roll_out(Env& env, ChooseAction&& choose) {
    Plan plan;
    env.reset();
    bool done = false;
    while (!done) {
        const ProductType a = choose(env);
        const StepResult res = env.step(a);
        plan.batches.emplace_back(a, env.env_config().batch_size);
        done = res.done;
    }
    const auto& ep = env.episode();
    plan.idle_total = ep.idle_sum;
    plan.setup_total = ep.setup_sum;
    plan.deadlock = ep.termination == Termination::deadlock;
    plan.ret = ep.ret;
    return plan;
}

} // namespace

Plan evaluate(const PolicyNet& policy, std::shared_ptr<const Instance> instance, const EnvConfig& env_cfg,
              const RewardConfig& reward_cfg, int rollouts, std::uint64_t seed) {
    if (rollouts < 1) throw UsageError("evaluation needs at least one rollout");
    Env env(instance, reward_cfg, env_cfg);
    std::vector<Plan> plans;
    plans.reserve(static_cast<std::size_t>(rollouts));
    for (int r = 0; r < rollouts; ++r) {
        CounterRng rng(seed, 1000 + static_cast<std::uint64_t>(r));
        Plan p = roll_out(env, [&](const Env& e) {
            const auto [z, v] = policy_forward(policy, e.observation(), e.mask());
            (void)v;
            return sample_action(z, rng).first;
        });
        p.rollout = r;
        plans.push_back(std::move(p));
    }
    Plan best = plans[select_best(plans)];
    verify_by_replay(instance, best);
    return best;
}

Plan greedy_plan(std::shared_ptr<const Instance> instance, const EnvConfig& env_cfg, const RewardConfig& reward_cfg) {
    Env env(instance, reward_cfg, env_cfg);
    Plan p = roll_out(env, [&](const Env& e) {
        const auto crit = criticalities(e.simulator(), e.state(), reward_cfg.range_floor);
        int best = -1;
        for (std::size_t t = 0; t < e.mask().size(); ++t) {
            if (!e.mask()[t]) continue;
            if (best < 0 || crit[t] > crit[static_cast<std::size_t>(best)]) best = static_cast<int>(t);
        }
        return static_cast<ProductType>(best);
    });
    verify_by_replay(instance, p);
    return p;
}

int nominal_episode_length(const Instance& instance, int batch_size) {
    if (batch_size < 1) throw UsageError("batch size must be >= 1");
    const auto demand = instance.total_demand();
    long needed = 0;
    for (std::size_t t = 0; t < demand.size(); ++t) {
        const int stock = t < instance.initial_buffer.size() ? instance.initial_buffer[t] : 0;
        needed += std::max(0, demand[t] - stock);
    }
    return static_cast<int>((needed + batch_size - 1) / batch_size);
}

double policy_space_log10(double num_actions_avg, double T) {
    if (T < 0.0) throw UsageError("T must be >= 0");
    if (num_actions_avg < 1.0) throw UsageError("average action count must be >= 1");
    if (T == 0.0) return 0.0;
    return T * std::log10(num_actions_avg);
}

DriftReport drift_detector(const TrainRunRecord& record, double nominal_T, const DriftParams& params) {
    DriftReport out;
    const auto& eps = record.episodes;
    const auto w = static_cast<std::size_t>(params.window);
    bool idle_ok_seen = false;
    bool transitioned = false;
    std::size_t task_start = 0;
    double idle_sum = 0.0;   // over the last w episodes regardless of task
    double len_sum = 0.0;    // over the last w episodes of the current task
    for (std::size_t i = 0; i < eps.size(); ++i) {
        if (i > 0 && eps[i].task_index != eps[i - 1].task_index) {
            transitioned = true;
            task_start = i;
            len_sum = 0.0;
        }
        idle_sum += eps[i].idle_sum;
        if (i >= w) idle_sum -= eps[i - w].idle_sum;
        len_sum += eps[i].length;
        const std::size_t in_task = i - task_start + 1;
        if (in_task > w) len_sum -= eps[i - w].length;

        if (transitioned && in_task >= static_cast<std::size_t>(params.min_episodes) && idle_ok_seen) {
            const double mean_len = len_sum / static_cast<double>(std::min(in_task, w));
            if (mean_len < params.length_fraction * nominal_T) {
                out.drifted = true;
                out.onset_episode = eps[i].episode;
                return out;
            }
        }
        if (i + 1 >= w && idle_sum / static_cast<double>(w) < params.idle_threshold) idle_ok_seen = true;
    }
    return out;
}

std::optional<Stats> describe(std::vector<double> v) {
    if (v.empty()) return std::nullopt;
    Stats s;
    s.count = v.size();
    std::sort(v.begin(), v.end());
    s.min = v.front();
    s.max = v.back();
    const double n = static_cast<double>(v.size());
    s.mean = std::accumulate(v.begin(), v.end(), 0.0) / n;
    const std::size_t mid = v.size() / 2;
    s.median = v.size() % 2 == 1 ? v[mid] : 0.5 * (v[mid - 1] + v[mid]);
    if (v.size() >= 2) {
        double ss = 0.0;
        for (double x : v) ss += (x - s.mean) * (x - s.mean);
        s.stddev = std::sqrt(ss / (n - 1.0));
    }
    return s;
}

SweepReport aggregate(std::span<const RunSummary> runs) {
    std::vector<int> sizes;
    for (const auto& r : runs) sizes.push_back(r.batch_size);
    std::sort(sizes.begin(), sizes.end());
    sizes.erase(std::unique(sizes.begin(), sizes.end()), sizes.end());

    SweepReport rep;
    for (int b : sizes) {
        SizeSummary row;
        row.batch_size = b;
        std::vector<double> steps, setup, ret;
        double len_sum = 0.0;
        for (const auto& r : runs) {
            if (r.batch_size != b) continue;
            ++row.runs;
            len_sum += r.plan_length;
            if (r.finished) {
                ++row.finished;
                steps.push_back(static_cast<double>(r.steps_used));
            }
            if (r.best_idle == 0.0) {
                ++row.zero_idle;
                setup.push_back(r.best_setup);
                ret.push_back(r.best_return);
            }
        }
        row.mean_plan_length = len_sum / row.runs;
        row.steps = describe(std::move(steps));
        row.setup = describe(std::move(setup));
        row.ret = describe(std::move(ret));
        rep.rows.push_back(std::move(row));
    }
    return rep;
}

PPOConfig desk_ppo_config() {
    PPOConfig c;
    c.hidden = {64, 64};
    c.num_envs = 8;
    c.rollout_length = 2048;
    c.minibatch_size = 256;
    c.epochs = 10;
    c.learning_rate = 1e-3;
    return c;
}

RunResult run_one(std::shared_ptr<const Instance> instance, const SweepConfig& cfg, int batch_size, std::uint64_t seed) {
    const CurriculumSpec spec = curriculum_by_name(cfg.curriculum, batch_size);
    const RewardConfig base = cfg.reward;
    TrainOutcome t = train_loop([&] { return Env(instance, base, EnvConfig{}); }, spec, cfg.ppo, seed, cfg.max_steps);

    const TaskSpec& last = spec.tasks.back();
    RewardConfig eval_reward = base;
    eval_reward.alpha_se = last.alpha_fraction * base.a_se_base;
    const EnvConfig eval_env{last.batch_size, last.mask_mode};

    RunResult r;
    r.plan = evaluate(t.policy, instance, eval_env, eval_reward, cfg.eval_rollouts, seed);
    const DriftReport drift = drift_detector(t.record, nominal_episode_length(*instance, last.batch_size));

    auto& s = r.summary;
    s.batch_size = last.batch_size;
    s.seed = seed;
    s.curriculum = spec.id;
    s.finished = t.record.finished;
    s.steps_used = t.record.steps_used;
    s.task_reached = t.record.task_reached;
    s.episodes = static_cast<long>(t.record.episodes.size());
    s.illegal_actions = t.record.illegal_actions;
    s.plan_length = r.plan.length();
    s.best_idle = r.plan.idle_total;
    s.best_setup = r.plan.setup_total;
    s.best_return = r.plan.ret;
    s.best_deadlock = r.plan.deadlock;
    s.drifted = drift.drifted;
    s.drift_onset = drift.onset_episode.value_or(-1);
    r.record = std::move(t.record);
    r.policy = std::move(t.policy);
    return r;
}

SweepResult sweep(std::shared_ptr<const Instance> instance, const SweepConfig& cfg,
                  const std::function<void(const RunSummary&)>& on_run_done) {
    if (cfg.batch_sizes.empty()) throw UsageError("sweep needs at least one batch size");
    if (cfg.seeds < 1) throw UsageError("sweep needs at least one seed");
    std::vector<std::pair<int, std::uint64_t>> jobs;
    for (int b : cfg.batch_sizes)
        for (int s = 0; s < cfg.seeds; ++s) jobs.emplace_back(b, cfg.base_seed + static_cast<std::uint64_t>(s));

    std::vector<RunResult> results(jobs.size());
    std::atomic<std::size_t> next{0};
    std::mutex mu;
    std::exception_ptr failure;
    const auto work = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= jobs.size()) return;
            try {
                results[i] = run_one(instance, cfg, jobs[i].first, jobs[i].second);
                if (on_run_done) {
                    std::lock_guard lock(mu);
                    on_run_done(results[i].summary);
                }
            } catch (...) {
                std::lock_guard lock(mu);
                if (!failure) failure = std::current_exception();
                next = jobs.size();
                return;
            }
        }
    };
    const int workers = std::max(1, std::min<int>(cfg.workers, static_cast<int>(jobs.size())));
    if (workers == 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        for (int w = 0; w < workers; ++w) pool.emplace_back(work);
        for (auto& th : pool) th.join();
    }
    if (failure) std::rethrow_exception(failure);

    std::stable_sort(results.begin(), results.end(), [](const RunResult& a, const RunResult& b) {
        return std::pair(a.summary.batch_size, a.summary.seed) < std::pair(b.summary.batch_size, b.summary.seed);
    });
    SweepResult out;
    std::vector<RunSummary> rows;
    for (const auto& r : results) rows.push_back(r.summary);
    out.report = aggregate(rows);
    out.runs = std::move(results);
    return out;
}

int workers_from_env(int fallback) {
    const char* v = std::getenv("BATCHSCHED_WORKERS");
    if (!v || !*v) return fallback;
    char* end = nullptr;
    const long n = std::strtol(v, &end, 10);
    if (*end != '\0' || n < 1 || n > 1024) throw UsageError(std::string("BATCHSCHED_WORKERS must be a positive integer, got '") + v + "'");
    return static_cast<int>(n);
}

} // namespace batchsched
