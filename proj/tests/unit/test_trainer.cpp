#include "doctest.h"

#include "batchsched/error.hpp"
#include "batchsched/experiment.hpp"
#include "batchsched/trainer.hpp"
#include "fixtures.hpp"

using namespace batchsched;

namespace {

// 2 types, 1 FAS, 20 products; the PAS is only slightly faster than the FAS
// and the buffer holds the whole demand, so no order can deadlock. About 4% of
// all orders avoid idle time.
std::shared_ptr<const Instance> tiny_line() {
    std::vector<std::pair<int, double>> s;
    const int pattern[20] = {0, 0, 0, 1, 1, 0, 1, 1, 1, 0, 0, 1, 0, 0, 1, 1, 1, 0, 0, 1};
    for (int t : pattern) s.emplace_back(t, 5.0);
    Instance inst = fixtures::make(2, {s}, 20, {1, 0}, 4.0, 100.0, 100.0);
    return fixtures::share(std::move(inst));
}

PPOConfig small_ppo() {
    PPOConfig c;
    c.hidden = {16, 16};
    c.num_envs = 4;
    c.rollout_length = 256;
    c.minibatch_size = 64;
    c.epochs = 4;
    c.learning_rate = 1e-3;
    return c;
}

EnvFactory factory(std::shared_ptr<const Instance> inst) {
    const RewardConfig base = calibrate_reward(*inst, 1, 0, 20);
    return [inst, base] { return Env(inst, base, EnvConfig{1, MaskMode::easy}); };
}

} // namespace

TEST_CASE("a zero step budget trains nothing") {
    const auto inst = tiny_line();
    const TrainOutcome o = train_loop(factory(inst), curriculum_a(1), small_ppo(), 1, 0);
    CHECK_FALSE(o.record.finished);
    CHECK(o.record.steps_used == 0);
    CHECK(o.record.episodes.empty());
    CHECK(o.record.task_reached == 1);
}

TEST_CASE("invalid configurations are rejected") {
    const auto inst = tiny_line();
    PPOConfig bad = small_ppo();
    bad.num_envs = 0;
    CHECK_THROWS_AS(train_loop(factory(inst), curriculum_a(1), bad, 1, 100), ValidationError);
    CurriculumSpec empty = curriculum_a(1);
    empty.tasks.clear();
    CHECK_THROWS_AS(train_loop(factory(inst), empty, small_ppo(), 1, 100), ValidationError);
}

TEST_CASE("training is reproducible per seed") {
    const auto inst = tiny_line();
    const auto run = [&](std::uint64_t seed) { return train_loop(factory(inst), curriculum_a(1), small_ppo(), seed, 3000); };
    const TrainOutcome a = run(4), b = run(4), c = run(5);
    REQUIRE(a.record.episodes.size() == b.record.episodes.size());
    for (std::size_t i = 0; i < a.record.episodes.size(); ++i) {
        CHECK(a.record.episodes[i].ret == b.record.episodes[i].ret);
        CHECK(a.record.episodes[i].idle_sum == b.record.episodes[i].idle_sum);
        CHECK(a.record.episodes[i].end_step == b.record.episodes[i].end_step);
    }
    CHECK(a.policy == b.policy);
    CHECK_FALSE(a.policy == c.policy);
}

TEST_CASE("a tiny line produces zero-idle episodes") {
    const auto inst = tiny_line();
    long task_changes = 0;
    TrainCallbacks cb;
    cb.on_task_change = [&](int, long) { ++task_changes; };
    const TrainOutcome o = train_loop(factory(inst), curriculum_a(1), small_ppo(), 7, 200000, cb);
    const auto& eps = o.record.episodes;
    REQUIRE_FALSE(eps.empty());
    CHECK(o.record.illegal_actions == 0);
    CHECK(o.record.steps_used <= 200000);
    CHECK(task_changes == o.record.task_reached - 1);

    long first_zero = -1;
    for (const auto& e : eps)
        if (e.idle_sum == 0.0 && e.termination == Termination::horizon_complete) {
            first_zero = e.end_step;
            break;
        }
    CHECK(first_zero > 0);
    CHECK(first_zero <= 200000);
}
