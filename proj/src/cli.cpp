#include "batchsched/cli.hpp"

#include <algorithm>
#include <iostream>
#include <memory>
#include <sstream>

#include "CLI11.hpp"
#include "batchsched/checkpoint.hpp"
#include "batchsched/error.hpp"
#include "batchsched/experiment.hpp"
#include "batchsched/report.hpp"
#include "io_util.hpp"
#include "json.hpp"

namespace batchsched {

using json = nlohmann::json;

namespace {

/// Every setting a subcommand may read. Defaults < --config FILE < flags.
struct RunConfig {
    std::string instance;
    std::string checkpoint;
    std::string out;
    std::string in;
    std::string plan;
    std::string trace;
    std::string plan_out;
    std::string scale = "desk";
    std::string fas_mode = "symmetric";
    std::string curriculum = "a";
    std::vector<int> batch_sizes{5, 10, 20};
    int batch_size = kDeskReferenceBatch;
    int seeds = 10;
    std::uint64_t seed = 1;
    long max_steps = 2'000'000;
    int rollouts = 20;
    int workers = 1;
    int b_ref = kDeskReferenceBatch;
    std::uint64_t calibration_seed = 0;
    int calibration_episodes = 20;
    PPOConfig ppo = desk_ppo_config();
};

json to_json(const RunConfig& c) {
    return {{"instance", c.instance},
            {"checkpoint", c.checkpoint},
            {"out", c.out},
            {"scale", c.scale},
            {"fas_mode", c.fas_mode},
            {"curriculum", c.curriculum},
            {"batch_sizes", c.batch_sizes},
            {"batch_size", c.batch_size},
            {"seeds", c.seeds},
            {"seed", c.seed},
            {"max_steps", c.max_steps},
            {"rollouts", c.rollouts},
            {"b_ref", c.b_ref},
            {"calibration_seed", c.calibration_seed},
            {"calibration_episodes", c.calibration_episodes},
            {"ppo", json::parse(to_json_text(c.ppo))}};
}

template <class T>
void take(const json& j, const char* key, T& field) {
    if (j.contains(key)) field = j.at(key).get<T>();
}

/// Accepts a bare config object or a manifest that carries one under "config".
void merge_config_file(const std::string& path, RunConfig& c) {
    json j;
    try {
        j = json::parse(detail::read_text_file(path));
    } catch (const json::parse_error& e) {
        throw ParseError("config " + path + ": parse error at byte " + std::to_string(e.byte));
    }
    if (j.contains("config")) j = j.at("config");
    if (!j.is_object()) throw ValidationError("config " + path + ": expected an object");
    try {
        take(j, "instance", c.instance);
        take(j, "checkpoint", c.checkpoint);
        take(j, "out", c.out);
        take(j, "scale", c.scale);
        take(j, "fas_mode", c.fas_mode);
        take(j, "curriculum", c.curriculum);
        take(j, "batch_sizes", c.batch_sizes);
        take(j, "batch_size", c.batch_size);
        take(j, "seeds", c.seeds);
        take(j, "seed", c.seed);
        take(j, "max_steps", c.max_steps);
        take(j, "rollouts", c.rollouts);
        take(j, "b_ref", c.b_ref);
        take(j, "calibration_seed", c.calibration_seed);
        take(j, "calibration_episodes", c.calibration_episodes);
        if (j.contains("ppo")) {
            json merged = json::parse(to_json_text(c.ppo));
            merged.update(j.at("ppo"));
            c.ppo = ppo_config_from_json_text(merged.dump());
        }
    } catch (const json::exception& e) {
        throw ValidationError("config " + path + ": " + e.what());
    }
}

std::string find_config_flag(int argc, const char* const* argv) {
    for (int i = 1; i < argc; ++i) {
        const std::string a = argv[i];
        if (a == "--config") {
            if (i + 1 >= argc) throw UsageError("--config needs a file");
            return argv[i + 1];
        }
        if (a.rfind("--config=", 0) == 0) return a.substr(9);
    }
    return {};
}

void add_ppo_flags(CLI::App* cmd, PPOConfig& p) {
    cmd->add_option("--learning-rate", p.learning_rate, "Adam step size")->capture_default_str();
    cmd->add_option("--epochs", p.epochs, "PPO epochs per update")->capture_default_str();
    cmd->add_option("--rollout-length", p.rollout_length, "env steps per update, all envs")->capture_default_str();
    cmd->add_option("--num-envs", p.num_envs, "parallel environments per run")->capture_default_str();
    cmd->add_option("--minibatch-size", p.minibatch_size, "samples per gradient step")->capture_default_str();
    cmd->add_option("--entropy-coef", p.entropy_coef, "entropy bonus weight")->capture_default_str();
    cmd->add_option("--gamma", p.gamma, "discount")->capture_default_str();
    cmd->add_option("--gae-lambda", p.gae_lambda, "GAE lambda")->capture_default_str();
    cmd->add_option("--clip-epsilon", p.clip_epsilon, "PPO clip range")->capture_default_str();
    cmd->add_option("--hidden", p.hidden, "hidden layer widths, comma separated")->delimiter(',')->capture_default_str();
}

std::shared_ptr<const Instance> load_instance(const std::string& path) {
    if (path.empty()) throw UsageError("--instance is required");
    return std::make_shared<const Instance>(load(path));
}

void require_ppo(const PPOConfig& p) {
    const auto bad = validate(p);
    if (!bad.empty()) throw ValidationError("PPO config: " + bad.front());
}

RewardConfig calibrated(const Instance& inst, const RunConfig& c) {
    return calibrate_reward(inst, c.b_ref, c.calibration_seed, c.calibration_episodes);
}

std::string manifest_text(const std::string& command, const RunConfig& c, const RewardConfig& reward) {
    json m;
    m["tool"] = "batchsched";
    m["version"] = kToolVersion;
    m["command"] = command;
    m["config"] = to_json(c);
    m["resolved_reward"] = json::parse(to_json_text(reward));
    return m.dump(2) + "\n";
}

std::vector<std::pair<ProductType, int>> parse_plan_file(const std::string& path) {
    std::istringstream is(detail::read_text_file(path));
    std::vector<std::pair<ProductType, int>> plan;
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        const auto comma = line.find(',');
        if (comma == std::string::npos) throw ParseError(path + ":" + std::to_string(lineno) + ": expected 'type,size'");
        const std::string a = line.substr(0, comma);
        const std::string b = line.substr(comma + 1);
        if (lineno == 1 && !a.empty() && !std::isdigit(static_cast<unsigned char>(a[0]))) continue; // header
        try {
            std::size_t ea = 0, eb = 0;
            const int type = std::stoi(a, &ea);
            const int size = std::stoi(b, &eb);
            if (ea != a.size() || eb != b.size()) throw std::invalid_argument("trailing");
            plan.emplace_back(type, size);
        } catch (const std::logic_error&) {
            throw ParseError(path + ":" + std::to_string(lineno) + ": malformed number");
        }
    }
    return plan;
}

std::string plan_text(const Plan& p) {
    std::ostringstream os;
    os << "type,size\n";
    for (const auto& [t, b] : p.batches) os << t << ',' << b << '\n';
    return os.str();
}

std::string plan_line(const Plan& p) {
    std::ostringstream os;
    os << "idle_total=" << detail::fmt_num(p.idle_total) << " setup_total=" << detail::fmt_num(p.setup_total)
       << " deadlock=" << (p.deadlock ? 1 : 0) << " return=" << detail::fmt_num(p.ret) << " length=" << p.length()
       << " rollout=" << p.rollout;
    return os.str();
}

int cmd_gen_instance(const RunConfig& c, std::ostream& out) {
    if (c.out.empty()) throw UsageError("--out is required");
    GeneratorParams g;
    if (c.scale == "desk") g = GeneratorParams::desk(c.seed);
    else if (c.scale == "full") g = GeneratorParams::full(c.seed);
    else throw UsageError("--scale must be desk or full");
    if (c.fas_mode == "symmetric") g.fas_mode = FasRateMode::symmetric;
    else if (c.fas_mode == "asymmetric") g.fas_mode = FasRateMode::asymmetric;
    else throw UsageError("--fas-mode must be symmetric or asymmetric");
    const Instance inst = generate(g);
    save(inst, c.out);
    out << "wrote " << c.out << ": " << inst.num_types << " types, " << inst.fas.size() << " FAS, "
        << inst.total_products() << " products\n";
    return 0;
}

int cmd_train(const RunConfig& c, std::ostream& out) {
    if (c.out.empty()) throw UsageError("--out is required");
    require_ppo(c.ppo);
    const auto inst = load_instance(c.instance);
    const CurriculumSpec spec = curriculum_by_name(c.curriculum, c.batch_size);
    const RewardConfig base = calibrated(*inst, c);
    TrainCallbacks cb;
    cb.on_task_change = [&](int task, long steps) { out << "task " << task + 1 << " reached at step " << steps << '\n'; };
    TrainOutcome t = train_loop([&] { return Env(inst, base, EnvConfig{}); }, spec, c.ppo, c.seed, c.max_steps, cb);

    Checkpoint ck;
    ck.policy = t.policy;
    ck.ppo = c.ppo;
    ck.reward = base;
    ck.reward.alpha_se = spec.tasks.back().alpha_fraction * base.a_se_base;
    ck.env = EnvConfig{spec.tasks.back().batch_size, spec.tasks.back().mask_mode};
    ck.curriculum = spec;
    ck.seed = c.seed;
    ck.rng = t.update_rng;
    ck.instance = *inst;
    save_checkpoint(ck, c.out);
    detail::write_text_file(c.out + ".manifest.json", manifest_text("train", c, base));
    const auto& r = t.record;
    out << "finished=" << (r.finished ? 1 : 0) << " steps_used=" << r.steps_used << " task_reached=" << r.task_reached
        << " episodes=" << r.episodes.size() << '\n';
    return 0;
}

int cmd_eval(const RunConfig& c, std::ostream& out) {
    if (c.checkpoint.empty()) throw UsageError("--checkpoint is required");
    const Checkpoint ck = load_checkpoint(c.checkpoint);
    const auto inst = std::make_shared<const Instance>(ck.instance);
    const Plan p = evaluate(ck.policy, inst, ck.env, ck.reward, c.rollouts, c.seed);
    if (!c.plan_out.empty()) detail::write_text_file(c.plan_out, plan_text(p));
    out << plan_line(p) << '\n';
    return 0;
}

int cmd_sweep(const RunConfig& c, std::ostream& out) {
    if (c.out.empty()) throw UsageError("--out is required");
    require_ppo(c.ppo);
    const auto inst = load_instance(c.instance);
    SweepConfig sc;
    sc.batch_sizes = c.batch_sizes;
    sc.seeds = c.seeds;
    sc.base_seed = c.seed;
    sc.curriculum = c.curriculum;
    sc.max_steps = c.max_steps;
    sc.eval_rollouts = c.rollouts;
    sc.workers = c.workers;
    sc.ppo = c.ppo;
    sc.reward = calibrated(*inst, c);
    for (int b : sc.batch_sizes) (void)curriculum_by_name(sc.curriculum, b); // fail before any training
    const SweepResult res = sweep(inst, sc, [&](const RunSummary& r) {
        out << "b=" << r.batch_size << " seed=" << r.seed << " finished=" << (r.finished ? 1 : 0)
            << " steps=" << r.steps_used << " idle=" << detail::fmt_num(r.best_idle)
            << " setup=" << detail::fmt_num(r.best_setup) << std::endl;
    });
    write_report(c.out, res, manifest_text("sweep", c, sc.reward));
    out << "wrote report to " << c.out << '\n';
    return 0;
}

int cmd_simulate(const RunConfig& c, std::ostream& out) {
    if (c.plan.empty()) throw UsageError("--plan is required");
    const auto inst = load_instance(c.instance);
    const auto plan = parse_plan_file(c.plan);
    const ReplayResult r = replay(Simulator(inst), plan);
    const std::string trace = trace_csv(r.trace);
    if (!c.trace.empty()) detail::write_text_file(c.trace, trace);
    out << "idle_total=" << detail::fmt_num(r.idle_total) << " setup_total=" << detail::fmt_num(r.setup_total)
        << " deadlock=" << (r.deadlock ? 1 : 0) << " complete=" << (r.complete ? 1 : 0)
        << " steps=" << r.steps_executed << '\n';
    if (c.trace.empty()) out << trace;
    return 0;
}

int cmd_report(const RunConfig& c, std::ostream& out) {
    if (c.in.empty()) throw UsageError("--in is required");
    const std::filesystem::path dir(c.in);
    const auto runs = runs_from_csv(detail::read_text_file(dir / "runs.csv"));
    write_tables(dir, runs);
    out << "regenerated tables for " << runs.size() << " runs in " << c.in << '\n';
    return 0;
}

} // namespace

int parse_and_dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    RunConfig c;
    c.workers = 1;
    try {
        c.workers = workers_from_env(1);
        if (const auto cfg = find_config_flag(argc, argv); !cfg.empty()) merge_config_file(cfg, c);
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return 2;
    }

    CLI::App app{"Batch scheduling for a two-stage line with PPO and curriculum learning", "batchsched"};
    app.set_version_flag("--version", std::string(kToolVersion));
    app.require_subcommand(1);
    std::string config_file;
    app.add_option("--config", config_file, "JSON config (or a manifest) supplying defaults for every flag");
    app.fallthrough();

    auto* gen = app.add_subcommand("gen-instance", "generate a seeded synthetic instance");
    gen->add_option("--seed", c.seed, "generator seed")->capture_default_str();
    gen->add_option("--out", c.out, "output instance file");
    gen->add_option("--scale", c.scale, "desk or full")->capture_default_str();
    gen->add_option("--fas-mode", c.fas_mode, "symmetric or asymmetric FAS demand rates")->capture_default_str();

    auto* train = app.add_subcommand("train", "train one agent through a curriculum");
    train->add_option("--instance", c.instance, "instance file");
    train->add_option("--curriculum", c.curriculum, "a, b, c or a curriculum file")->capture_default_str();
    train->add_option("--batch-size", c.batch_size, "batch size for curriculum a")->capture_default_str();
    train->add_option("--seed", c.seed, "training seed")->capture_default_str();
    train->add_option("--max-steps", c.max_steps, "env step cap")->capture_default_str();
    train->add_option("--b-ref", c.b_ref, "reference batch size for reward calibration")->capture_default_str();
    train->add_option("--out", c.out, "checkpoint file (a manifest is written next to it)");
    add_ppo_flags(train, c.ppo);

    auto* eval = app.add_subcommand("eval", "best-of-n stochastic evaluation of a checkpoint");
    eval->add_option("--checkpoint", c.checkpoint, "checkpoint file");
    eval->add_option("--rollouts", c.rollouts, "stochastic rollouts")->capture_default_str();
    eval->add_option("--seed", c.seed, "evaluation seed")->capture_default_str();
    eval->add_option("--plan-out", c.plan_out, "write the selected plan as type,size CSV");

    auto* sw = app.add_subcommand("sweep", "multi-seed train + evaluate over batch sizes");
    sw->add_option("--instance", c.instance, "instance file");
    sw->add_option("--curriculum", c.curriculum, "a, b, c or a curriculum file")->capture_default_str();
    sw->add_option("--batch-sizes", c.batch_sizes, "comma separated batch sizes")->delimiter(',')->capture_default_str();
    sw->add_option("--seeds", c.seeds, "seeds per batch size")->capture_default_str();
    sw->add_option("--seed", c.seed, "first run seed")->capture_default_str();
    sw->add_option("--max-steps", c.max_steps, "env step cap per run")->capture_default_str();
    sw->add_option("--rollouts", c.rollouts, "evaluation rollouts per run")->capture_default_str();
    sw->add_option("--workers", c.workers, "worker threads (default: BATCHSCHED_WORKERS or 1)")->capture_default_str();
    sw->add_option("--b-ref", c.b_ref, "reference batch size for reward calibration")->capture_default_str();
    sw->add_option("--out", c.out, "report directory");
    add_ppo_flags(sw, c.ppo);

    auto* sim = app.add_subcommand("simulate", "replay a plan and print idle, setup and the event trace");
    sim->add_option("--instance", c.instance, "instance file");
    sim->add_option("--plan", c.plan, "plan file with type,size lines");
    sim->add_option("--trace", c.trace, "write the trace CSV here instead of stdout");

    auto* rep = app.add_subcommand("report", "regenerate aggregate tables from runs.csv");
    rep->add_option("--in", c.in, "report directory");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) {
            out << (e.get_name() == "CallForVersion" ? std::string(kToolVersion) + "\n" : app.help());
            return 0;
        }
        err << "error: " << e.what() << '\n' << app.help();
        return 2;
    }

    try {
        if (gen->parsed()) return cmd_gen_instance(c, out);
        if (train->parsed()) return cmd_train(c, out);
        if (eval->parsed()) return cmd_eval(c, out);
        if (sw->parsed()) return cmd_sweep(c, out);
        if (sim->parsed()) return cmd_simulate(c, out);
        if (rep->parsed()) return cmd_report(c, out);
    } catch (const UsageError& e) {
        err << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::string msg = e.what();
        std::replace(msg.begin(), msg.end(), '\n', ' ');
        err << "error: " << msg << '\n';
        return 1;
    }
    err << "error: no subcommand\n";
    return 2;
}

} // namespace batchsched
