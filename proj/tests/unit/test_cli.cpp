#include "doctest.h"

#include <filesystem>
#include <fstream>
#include <sstream>

#include "batchsched/cli.hpp"
#include "batchsched/instance.hpp"

using namespace batchsched;
namespace fs = std::filesystem;

namespace {

struct Run {
    int code;
    std::string out;
    std::string err;
};

Run cli(std::vector<std::string> args) {
    args.insert(args.begin(), "batchsched");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = parse_and_dispatch(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

fs::path scratch(const char* name) {
    const fs::path p = fs::temp_directory_path() / name;
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

} // namespace

TEST_CASE("gen-instance then simulate") {
    const fs::path dir = scratch("batchsched_cli_sim");
    const std::string inst = (dir / "i.json").string();
    REQUIRE(cli({"gen-instance", "--seed", "3", "--out", inst}).code == 0);
    CHECK(load(inst) == generate(GeneratorParams::desk(3)));

    { std::ofstream(dir / "plan.csv") << "type,size\n0,6\n1,6\n"; }
    const Run r = cli({"simulate", "--instance", inst, "--plan", (dir / "plan.csv").string(), "--trace",
                       (dir / "trace.csv").string()});
    CHECK(r.code == 0);
    CHECK(r.out.find("setup") != std::string::npos);
    CHECK(fs::exists(dir / "trace.csv"));
    fs::remove_all(dir);
}

TEST_CASE("usage problems exit nonzero with one error line") {
    const Run unknown = cli({"frobnicate"});
    CHECK(unknown.code != 0);
    CHECK(unknown.err.rfind("error:", 0) == 0);
    CHECK(cli({}).code != 0);
    const Run missing = cli({"simulate", "--instance", "/nonexistent/x.json", "--plan", "/nonexistent/p.csv"});
    CHECK(missing.code != 0);
    CHECK(missing.err.rfind("error:", 0) == 0);
    CHECK(cli({"--version"}).code == 0);
}

TEST_CASE("train then eval") {
    const fs::path dir = scratch("batchsched_cli_train");
    const std::string inst = (dir / "i.json").string();
    REQUIRE(cli({"gen-instance", "--seed", "2", "--out", inst}).code == 0);
    const std::string ck = (dir / "ck.json").string();
    const Run t = cli({"train", "--instance", inst, "--max-steps", "800", "--num-envs", "4", "--rollout-length",
                       "200", "--minibatch-size", "50", "--hidden", "8", "--out", ck});
    CHECK(t.code == 0);
    CHECK(fs::exists(ck));
    CHECK(fs::exists(ck + ".manifest.json"));
    const Run e = cli({"eval", "--checkpoint", ck, "--rollouts", "2", "--plan-out", (dir / "plan.csv").string()});
    CHECK(e.code == 0);
    CHECK(fs::exists(dir / "plan.csv"));
    fs::remove_all(dir);
}

TEST_CASE("report regenerates tables from runs.csv") {
    const fs::path dir = scratch("batchsched_cli_report");
    {
        std::ofstream f(dir / "runs.csv");
        f << "batch_size,seed,curriculum,finished,steps_used,task_reached,episodes,illegal_actions,plan_length,"
             "best_idle,best_setup,best_return,best_deadlock,drifted,drift_onset\n"
             "10,1,a,1,5000,3,80,0,60,0,120,-4.5,0,0,-1\n"
             "10,2,a,0,9000,2,90,0,60,30,100,-8,0,0,-1\n";
    }
    CHECK(cli({"report", "--in", dir.string()}).code == 0);
    CHECK(fs::exists(dir / "summary.csv"));
    CHECK(fs::exists(dir / "policy_space.csv"));
    CHECK(cli({"report", "--in", (dir / "nothing").string()}).code != 0);
    fs::remove_all(dir);
}
