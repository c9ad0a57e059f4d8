#include "doctest.h"

#include <filesystem>
#include <fstream>

#include "batchsched/curriculum.hpp"
#include "batchsched/error.hpp"

using namespace batchsched;

namespace {

// Feeds `n` equal idle sums; returns the 1-based episode numbers of each non-stay decision.
std::vector<std::pair<int, Decision::Kind>> feed(CurriculumState& st, const CurriculumSpec& spec,
                                                 std::vector<std::pair<int, double>> stream) {
    std::vector<std::pair<int, Decision::Kind>> events;
    int ep = 0;
    for (auto [n, idle] : stream)
        for (int i = 0; i < n; ++i) {
            ++ep;
            const Decision d = on_episode_end(st, spec, idle);
            if (d.kind != Decision::Kind::stay) events.emplace_back(ep, d.kind);
        }
    return events;
}

} // namespace

TEST_CASE("curriculum A has the three base tasks") {
    const CurriculumSpec a = curriculum_a(50);
    REQUIRE(a.tasks.size() == 3);
    CHECK(a.tasks[0] == TaskSpec{MaskMode::easy, 0.0, 50});
    CHECK(a.tasks[1] == TaskSpec{MaskMode::normal, 0.0, 50});
    CHECK(a.tasks[2] == TaskSpec{MaskMode::normal, 1.0, 50});
    CHECK(a.transition_threshold == 100.0);
    CHECK(a.final_threshold == 15.0);
    CHECK(a.window == 100);
    CHECK(curriculum_a(7).tasks.size() == 3);
    CHECK(curriculum_a(7).tasks[2].batch_size == 7);
}

TEST_CASE("curriculum B ramps the setup penalty at b = 10") {
    const CurriculumSpec b = curriculum_b();
    REQUIRE(b.tasks.size() == 7);
    CHECK(b.tasks[0] == TaskSpec{MaskMode::easy, 0.0, 10});
    CHECK(b.tasks[1] == TaskSpec{MaskMode::normal, 0.0, 10});
    const double alphas[5] = {0.2, 0.4, 0.6, 0.8, 1.0};
    for (int i = 0; i < 5; ++i) {
        CHECK(b.tasks[static_cast<std::size_t>(i + 2)].mask_mode == MaskMode::normal);
        CHECK(b.tasks[static_cast<std::size_t>(i + 2)].alpha_fraction == doctest::Approx(alphas[i]).epsilon(1e-15));
    }
    for (const auto& t : b.tasks) CHECK(t.batch_size == 10);
}

TEST_CASE("curriculum C shrinks the batch size by two") {
    const CurriculumSpec c = curriculum_c();
    REQUIRE(c.tasks.size() == 8);
    CHECK(c.tasks[0] == TaskSpec{MaskMode::easy, 0.0, 20});
    CHECK(c.tasks[1] == TaskSpec{MaskMode::normal, 0.0, 20});
    const int sizes[6] = {20, 18, 16, 14, 12, 10};
    for (int i = 0; i < 6; ++i)
        CHECK(c.tasks[static_cast<std::size_t>(i + 2)] == TaskSpec{MaskMode::normal, 1.0, sizes[i]});
}

TEST_CASE("lookup by name") {
    CHECK(curriculum_by_name("a", 12) == curriculum_a(12));
    CHECK(curriculum_by_name("b", 12) == curriculum_b());
    CHECK(curriculum_by_name("c", 12) == curriculum_c());
    CHECK_THROWS(curriculum_by_name("/nonexistent/zzz.json", 1));
}

TEST_CASE("a full window just under the threshold advances") {
    const CurriculumSpec spec = curriculum_a(10);
    CurriculumState st(spec.window);
    const auto ev = feed(st, spec, {{100, 99.0}});
    REQUIRE(ev.size() == 1);
    CHECK(ev[0] == std::pair{100, Decision::Kind::advance});
    CHECK(st.task_index() == 1);
    CHECK(st.filled() == 0);
}

TEST_CASE("no decision before the window is full") {
    const CurriculumSpec spec = curriculum_a(10);
    CurriculumState st(spec.window);
    CHECK(feed(st, spec, {{99, 0.0}}).empty());
    CHECK(st.task_index() == 0);
    CHECK(st.episodes_in_task() == 99);
}

TEST_CASE("a mean of exactly the threshold does not advance") {
    const CurriculumSpec spec = curriculum_a(10);
    CurriculumState st(spec.window);
    CHECK(feed(st, spec, {{100, 100.0}}).empty());
}

TEST_CASE("the last task finishes below the final threshold only") {
    const CurriculumSpec spec = curriculum_a(10);
    CurriculumState st(spec.window);
    // 100 + 100 to reach task 3, then 100 episodes at 14 s
    const auto ev = feed(st, spec, {{200, 0.0}, {100, 14.0}});
    REQUIRE(ev.size() == 3);
    CHECK(ev[0] == std::pair{100, Decision::Kind::advance});
    CHECK(ev[1] == std::pair{200, Decision::Kind::advance});
    CHECK(ev[2] == std::pair{300, Decision::Kind::finished});
    CHECK(st.finished());

    CurriculumState st2(spec.window);
    const auto ev2 = feed(st2, spec, {{200, 0.0}, {100, 50.0}});
    CHECK(ev2.size() == 2); // 50 s would pass a transition, not the final criterion
    CHECK_FALSE(st2.finished());
}

TEST_CASE("the trailing window slides") {
    const CurriculumSpec spec = curriculum_a(10);
    CurriculumState st(spec.window);
    // mean over the last 100 drops below 100 once 51 of them are 0 s next to 49 at 200 s
    const auto ev = feed(st, spec, {{100, 200.0}, {51, 0.0}});
    REQUIRE(ev.size() == 1);
    CHECK(ev[0].first == 151);
}

TEST_CASE("the ring mean is the arithmetic mean of its contents") {
    CurriculumState st(4);
    CHECK(st.mean() == 0.0);
    for (double v : {1.0, 2.0, 3.0, 4.0, 10.0}) st.push(v);
    CHECK(st.filled() == 4);
    CHECK(st.mean() == (2.0 + 3.0 + 4.0 + 10.0) / 4.0);
}

TEST_CASE("transitions depend only on the idle stream") {
    const CurriculumSpec spec = curriculum_c();
    std::vector<std::pair<int, double>> stream;
    for (int i = 0; i < 40; ++i) stream.emplace_back(37, static_cast<double>((i * 53) % 180));
    CurriculumState s1(spec.window), s2(spec.window);
    CHECK(feed(s1, spec, stream) == feed(s2, spec, stream));
}

TEST_CASE("the task index never decreases") {
    const CurriculumSpec spec = curriculum_b();
    CurriculumState st(spec.window);
    int last = 0;
    for (int i = 0; i < 2000; ++i) {
        on_episode_end(st, spec, static_cast<double>((i * 7919) % 120));
        CHECK(st.task_index() >= last);
        last = st.task_index();
    }
}

TEST_CASE("validation and json round trip") {
    CurriculumSpec bad = curriculum_a(5);
    bad.final_threshold = 200.0;
    CHECK_FALSE(validate(bad).empty());
    bad = curriculum_a(5);
    bad.tasks.clear();
    CHECK_FALSE(validate(bad).empty());
    CHECK(validate(curriculum_c()).empty());

    const CurriculumSpec c = curriculum_c();
    CHECK(curriculum_from_json_text(to_json_text(c)) == c);
    CHECK_THROWS_AS(curriculum_from_json_text("{\"tasks\": ["), ParseError);

    const auto path = std::filesystem::temp_directory_path() / "batchsched_curriculum_test.json";
    {
        std::ofstream f(path);
        f << to_json_text(curriculum_b());
    }
    CHECK(curriculum_by_name(path.string(), 3) == curriculum_b());
    std::filesystem::remove(path);
}
