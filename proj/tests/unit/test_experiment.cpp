#include "doctest.h"

#include <cmath>

#include "batchsched/error.hpp"
#include "batchsched/experiment.hpp"
#include "fixtures.hpp"

using namespace batchsched;

namespace {

Plan plan(double idle, double setup) {
    Plan p;
    p.idle_total = idle;
    p.setup_total = setup;
    return p;
}

EpisodeRecord ep(long i, int task, int length, double idle) {
    EpisodeRecord e;
    e.episode = i;
    e.task_index = task;
    e.length = length;
    e.idle_sum = idle;
    return e;
}

RunSummary run(int b, std::uint64_t seed, bool finished, long steps, double idle, double setup, double ret) {
    RunSummary r;
    r.batch_size = b;
    r.seed = seed;
    r.curriculum = "a";
    r.finished = finished;
    r.steps_used = steps;
    r.best_idle = idle;
    r.best_setup = setup;
    r.best_return = ret;
    r.plan_length = 10;
    return r;
}

// Two-pass textbook formulas, written independently of describe().
double oracle_mean(const std::vector<double>& v) {
    long double s = 0;
    for (double x : v) s += x;
    return static_cast<double>(s / v.size());
}
double oracle_sd(const std::vector<double>& v) {
    const double m = oracle_mean(v);
    long double s = 0;
    for (double x : v) s += (x - m) * (x - m);
    return std::sqrt(static_cast<double>(s / (v.size() - 1)));
}

} // namespace

TEST_CASE("best plan is the lexicographic minimum of idle then setup") {
    const std::vector<Plan> plans{plan(0, 200), plan(0, 190), plan(5, 100)};
    CHECK(select_best(plans) == 1);
    const std::vector<Plan> one{plan(3, 3)};
    CHECK(select_best(one) == 0);
    const std::vector<Plan> ties{plan(1, 1), plan(1, 1)};
    CHECK(select_best(ties) == 0);
    CHECK_THROWS_AS(select_best(std::vector<Plan>{}), UsageError);
}

TEST_CASE("evaluation is deterministic and its plan replays") {
    const auto inst = fixtures::share(generate(GeneratorParams::desk(1)));
    CounterRng init(2);
    const PolicyNet net(NetShape{static_cast<int>(observation_size(8)), 8, {16}}, init);
    const EnvConfig env{kDeskReferenceBatch, MaskMode::normal};
    const Plan a = evaluate(net, inst, env, RewardConfig{}, 4, 9);
    const Plan b = evaluate(net, inst, env, RewardConfig{}, 4, 9);
    CHECK(a.batches == b.batches);
    CHECK(a.idle_total == b.idle_total);
    CHECK(a.rollout == b.rollout);

    const ReplayResult r = replay(Simulator(inst), a.batches);
    CHECK(r.idle_total == a.idle_total);
    CHECK(r.setup_total == a.setup_total);

    const Plan single = evaluate(net, inst, env, RewardConfig{}, 1, 9);
    CHECK(single.rollout == 0);
    CHECK_THROWS_AS(evaluate(net, inst, env, RewardConfig{}, 0, 9), UsageError);
}

TEST_CASE("greedy baseline on the desk instance") {
    const auto inst = fixtures::share(generate(GeneratorParams::desk(1)));
    const Plan g = greedy_plan(inst, {kDeskReferenceBatch, MaskMode::normal}, RewardConfig{});
    CHECK(g.idle_total == 0.0);
    CHECK_FALSE(g.deadlock);
    CHECK(g.length() >= nominal_episode_length(*inst, kDeskReferenceBatch));
}

TEST_CASE("nominal episode length counts uncovered demand") {
    const Instance inst = fixtures::make(2, {{{0, 1.0}, {0, 1.0}, {1, 1.0}}, {{0, 1.0}, {1, 1.0}}}, 10, {1, 0}, 1.0);
    CHECK(nominal_episode_length(inst, 1) == 4);
    CHECK(nominal_episode_length(inst, 3) == 2);
    CHECK(nominal_episode_length(inst, 50) == 1);
}

TEST_CASE("policy space size") {
    CHECK(policy_space_log10(8, 300) == doctest::Approx(270.9).epsilon(0.1 / 270.9));
    CHECK(std::abs(policy_space_log10(8, 300) - 300.0 * std::log(8.0) / std::log(10.0)) < 1e-9);
    CHECK(policy_space_log10(5, 0) == 0.0);
    CHECK(policy_space_log10(1, 1000) == 0.0);
    CHECK(std::isfinite(policy_space_log10(8, 1e6)));
    double prev = -1.0;
    for (int t = 0; t <= 50; ++t) {
        const double v = policy_space_log10(3.5, t);
        CHECK(v > prev);
        prev = v;
    }
    CHECK_THROWS(policy_space_log10(0.5, 10));
    CHECK_THROWS(policy_space_log10(4, -1));
}

TEST_CASE("drift: constant episode length never drifts") {
    TrainRunRecord r;
    for (long i = 0; i < 500; ++i) r.episodes.push_back(ep(i, static_cast<int>(i / 150), 100, 0.0));
    CHECK_FALSE(drift_detector(r, 100).drifted);
}

TEST_CASE("drift: a length collapse after entering the last task is flagged") {
    TrainRunRecord r;
    long i = 0;
    for (; i < 150; ++i) r.episodes.push_back(ep(i, 0, 100, 0.0));
    for (; i < 300; ++i) r.episodes.push_back(ep(i, 1, 100, 0.0));
    for (; i < 400; ++i) r.episodes.push_back(ep(i, 2, 100, 0.0));
    for (; i < 500; ++i) r.episodes.push_back(ep(i, 2, 50, 0.0));
    const DriftReport d = drift_detector(r, 100);
    CHECK(d.drifted);
    // the task-local trailing mean drops below 80 with the 41st short episode
    REQUIRE(d.onset_episode.has_value());
    CHECK(*d.onset_episode == 440);
}

TEST_CASE("drift: a collapse before any transition is ignored") {
    TrainRunRecord r;
    for (long i = 0; i < 300; ++i) r.episodes.push_back(ep(i, 0, i < 150 ? 100 : 50, 0.0));
    CHECK_FALSE(drift_detector(r, 100).drifted);
}

TEST_CASE("drift needs an earlier window with low idle") {
    TrainRunRecord r;
    long i = 0;
    for (; i < 150; ++i) r.episodes.push_back(ep(i, 0, 100, 500.0));
    for (; i < 300; ++i) r.episodes.push_back(ep(i, 1, 50, 500.0));
    CHECK_FALSE(drift_detector(r, 100).drifted);
}

TEST_CASE("describe matches independent statistics") {
    CHECK_FALSE(describe({}).has_value());
    const auto one = describe({4.0});
    REQUIRE(one);
    CHECK(one->mean == 4.0);
    CHECK(one->median == 4.0);
    CHECK_FALSE(one->stddev.has_value());

    const std::vector<double> v{3.0, 9.5, 1.25, 7.0, 7.0, 2.0};
    const auto s = describe(v);
    REQUIRE(s);
    CHECK(s->count == 6);
    CHECK(s->min == 1.25);
    CHECK(s->max == 9.5);
    CHECK(s->median == 5.0);
    CHECK(std::abs(s->mean - oracle_mean(v)) < 1e-9);
    CHECK(std::abs(*s->stddev - oracle_sd(v)) < 1e-9);
}

TEST_CASE("aggregate applies the row filters") {
    const std::vector<RunSummary> runs{
        run(20, 1, true, 1000, 0.0, 50.0, -3.0),   run(20, 2, true, 3000, 0.0, 70.0, -5.0),
        run(20, 3, false, 9000, 12.0, 10.0, -1.0), run(20, 4, true, 2500, 0.0, 65.5, -4.5),
        run(10, 1, false, 9000, 40.0, 5.0, -9.0),  run(10, 2, false, 9000, 30.0, 6.0, -8.0),
        run(40, 1, true, 800, 0.0, 20.0, -2.0),    run(40, 2, true, 900, 3.0, 15.0, -2.5),
    };
    const SweepReport rep = aggregate(runs);
    REQUIRE(rep.rows.size() == 3);
    CHECK(rep.rows[0].batch_size == 10);
    CHECK(rep.rows[1].batch_size == 20);
    CHECK(rep.rows[2].batch_size == 40);

    const SizeSummary& b10 = rep.rows[0];
    CHECK(b10.runs == 2);
    CHECK(b10.finished == 0);
    CHECK(b10.zero_idle == 0);
    CHECK_FALSE(b10.steps.has_value());
    CHECK_FALSE(b10.setup.has_value());

    const SizeSummary& b20 = rep.rows[1];
    CHECK(b20.finished == 3);
    CHECK(b20.zero_idle == 3);
    REQUIRE(b20.steps);
    CHECK(std::abs(b20.steps->mean - oracle_mean({1000, 3000, 2500})) < 1e-9);
    CHECK(std::abs(*b20.steps->stddev - oracle_sd({1000, 3000, 2500})) < 1e-9);
    REQUIRE(b20.setup);
    CHECK(std::abs(b20.setup->mean - oracle_mean({50.0, 70.0, 65.5})) < 1e-9);
    CHECK(std::abs(*b20.setup->stddev - oracle_sd({50.0, 70.0, 65.5})) < 1e-9);
    CHECK(b20.ret->max == -3.0);
    CHECK(b20.mean_plan_length == 10.0);

    const SizeSummary& b40 = rep.rows[2];
    CHECK(b40.zero_idle == 1);
    REQUIRE(b40.setup);
    CHECK(b40.setup->mean == 20.0);
    CHECK(b40.setup->count == 1);
    CHECK_FALSE(b40.setup->stddev.has_value());
}

TEST_CASE("workers from the environment") {
    CHECK(workers_from_env(3) >= 1);
}
