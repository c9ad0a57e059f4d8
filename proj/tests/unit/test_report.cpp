#include "doctest.h"

#include <filesystem>
#include <fstream>
#include <sstream>

#include "batchsched/error.hpp"
#include "batchsched/report.hpp"

using namespace batchsched;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::ostringstream s;
    s << f.rdbuf();
    return s.str();
}

std::vector<RunSummary> fixture_runs() {
    std::vector<RunSummary> v;
    for (int b : {10, 20})
        for (std::uint64_t seed = 1; seed <= 3; ++seed) {
            RunSummary r;
            r.batch_size = b;
            r.seed = seed;
            r.curriculum = "a";
            r.finished = seed != 2;
            r.steps_used = 1000 * static_cast<long>(seed) + b;
            r.task_reached = r.finished ? 3 : 2;
            r.episodes = 40 + static_cast<long>(seed);
            r.plan_length = 60 / b * 10;
            r.best_idle = seed == 3 ? 12.5 : 0.0;
            r.best_setup = 100.0 / static_cast<double>(seed) + b;
            r.best_return = -1.0 / 3.0 * static_cast<double>(seed);
            r.drifted = seed == 1 && b == 10;
            r.drift_onset = r.drifted ? 77 : -1;
            v.push_back(r);
        }
    return v;
}

std::size_t columns(const std::string& line) { return static_cast<std::size_t>(std::count(line.begin(), line.end(), ',')) + 1; }

} // namespace

TEST_CASE("every row has as many fields as its header") {
    const auto runs = fixture_runs();
    const SweepReport rep = aggregate(runs);
    const std::pair<std::string, const char*> files[] = {
        {runs_csv(runs), kRunsHeader},
        {summary_csv(rep), kSummaryHeader},
        {steps_box_csv(runs), kStepsBoxHeader},
        {setup_box_csv(runs), kSetupBoxHeader},
        {policy_space_csv(rep), kPolicySpaceHeader},
    };
    for (const auto& [text, header] : files) {
        std::istringstream in(text);
        std::string line;
        REQUIRE(std::getline(in, line));
        CHECK(line == header);
        int rows = 0;
        while (std::getline(in, line)) {
            CHECK(columns(line) == columns(header));
            ++rows;
        }
        CHECK(rows > 0);
    }
}

TEST_CASE("box files keep only qualifying runs") {
    const auto runs = fixture_runs();
    std::istringstream steps(steps_box_csv(runs));
    std::string line;
    int n = 0;
    while (std::getline(steps, line)) ++n;
    CHECK(n == 1 + 4); // seeds 1 and 3 finished at both sizes
    std::istringstream setup(setup_box_csv(runs));
    n = 0;
    while (std::getline(setup, line)) ++n;
    CHECK(n == 1 + 4); // seeds 1 and 2 have zero idle at both sizes
}

TEST_CASE("empty inputs give header-only files") {
    const std::vector<RunSummary> none;
    CHECK(runs_csv(none) == std::string(kRunsHeader) + "\n");
    CHECK(summary_csv(SweepReport{}) == std::string(kSummaryHeader) + "\n");
    CHECK(steps_box_csv(none) == std::string(kStepsBoxHeader) + "\n");
    CHECK(curves_csv(std::vector<RunResult>{}) == std::string(kCurvesHeader) + "\n");
    CHECK(plans_csv(std::vector<RunResult>{}) == std::string(kPlansHeader) + "\n");
}

TEST_CASE("runs table round trips through its text form") {
    const auto runs = fixture_runs();
    const auto back = runs_from_csv(runs_csv(runs));
    CHECK(back == runs);
    CHECK_THROWS_AS(runs_from_csv("nonsense\n1,2\n"), ParseError);
    CHECK_THROWS_AS(runs_from_csv(std::string(kRunsHeader) + "\n10,1,a,yes\n"), ParseError);
}

TEST_CASE("writing twice gives byte-identical files") {
    const fs::path d1 = fs::temp_directory_path() / "batchsched_report_1";
    const fs::path d2 = fs::temp_directory_path() / "batchsched_report_2";
    fs::remove_all(d1);
    fs::remove_all(d2);
    write_tables(d1, fixture_runs());
    write_tables(d2, fixture_runs());
    for (const char* f : {"runs.csv", "summary.csv", "steps_box.csv", "setup_box.csv", "policy_space.csv"}) {
        CHECK(fs::exists(d1 / f));
        CHECK(slurp(d1 / f) == slurp(d2 / f));
    }
    fs::remove_all(d1);
    fs::remove_all(d2);
}

TEST_CASE("an unwritable destination is an io error") {
    const fs::path blocker = fs::temp_directory_path() / "batchsched_report_blocker";
    fs::remove_all(blocker);
    { std::ofstream(blocker) << "x"; }
    CHECK_THROWS_AS(write_tables(blocker / "sub", fixture_runs()), IoError);
    fs::remove(blocker);
}
