#include "batchsched/checkpoint.hpp"

#include "batchsched/error.hpp"
#include "io_util.hpp"
#include "json.hpp"

namespace batchsched {

using json = nlohmann::json;

namespace {

json ppo_to_json(const PPOConfig& c) {
    return {{"gamma", c.gamma},
            {"gae_lambda", c.gae_lambda},
            {"clip_epsilon", c.clip_epsilon},
            {"learning_rate", c.learning_rate},
            {"rollout_length", c.rollout_length},
            {"num_envs", c.num_envs},
            {"epochs", c.epochs},
            {"minibatch_size", c.minibatch_size},
            {"entropy_coef", c.entropy_coef},
            {"value_coef", c.value_coef},
            {"max_grad_norm", c.max_grad_norm},
            {"adam_eps", c.adam_eps},
            {"hidden", c.hidden}};
}

PPOConfig ppo_from_json(const json& j) {
    PPOConfig c;
    c.gamma = j.at("gamma").get<double>();
    c.gae_lambda = j.at("gae_lambda").get<double>();
    c.clip_epsilon = j.at("clip_epsilon").get<double>();
    c.learning_rate = j.at("learning_rate").get<double>();
    c.rollout_length = j.at("rollout_length").get<int>();
    c.num_envs = j.at("num_envs").get<int>();
    c.epochs = j.at("epochs").get<int>();
    c.minibatch_size = j.at("minibatch_size").get<int>();
    c.entropy_coef = j.at("entropy_coef").get<double>();
    c.value_coef = j.at("value_coef").get<double>();
    c.max_grad_norm = j.at("max_grad_norm").get<double>();
    c.adam_eps = j.at("adam_eps").get<double>();
    c.hidden = j.at("hidden").get<std::vector<int>>();
    return c;
}

json reward_to_json(const RewardConfig& r) {
    return {{"alpha_se", r.alpha_se},
            {"a_se_base", r.a_se_base},
            {"margin_threshold", r.margin_threshold},
            {"margin_penalty", r.margin_penalty},
            {"crit_scale", r.crit_scale},
            {"b_ref", r.b_ref},
            {"range_floor", r.range_floor},
            {"crit_aggregation", to_string(r.crit_aggregation)}};
}

RewardConfig reward_from_json(const json& j) {
    RewardConfig r;
    r.alpha_se = j.at("alpha_se").get<double>();
    r.a_se_base = j.at("a_se_base").get<double>();
    r.margin_threshold = j.at("margin_threshold").get<double>();
    r.margin_penalty = j.at("margin_penalty").get<double>();
    r.crit_scale = j.at("crit_scale").get<double>();
    r.b_ref = j.at("b_ref").get<double>();
    r.range_floor = j.at("range_floor").get<double>();
    r.crit_aggregation = crit_aggregation_from_string(j.at("crit_aggregation").get<std::string>());
    return r;
}

template <class F>
auto parse_config(const std::string& text, const char* what, F&& from) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string(what) + " parse error at byte " + std::to_string(e.byte) + ": " + e.what());
    }
    try {
        return from(j);
    } catch (const json::exception& e) {
        throw ValidationError(std::string(what) + " schema violation: " + e.what());
    }
}

} // namespace

std::string to_json_text(const PPOConfig& cfg) { return ppo_to_json(cfg).dump(); }

PPOConfig ppo_config_from_json_text(const std::string& text) {
    return parse_config(text, "PPO config", ppo_from_json);
}

std::string to_json_text(const RewardConfig& cfg) { return reward_to_json(cfg).dump(); }

RewardConfig reward_config_from_json_text(const std::string& text) {
    return parse_config(text, "reward config", reward_from_json);
}

std::string to_json_text(const Checkpoint& c) {
    json j;
    j["schema"] = "batchsched.checkpoint";
    j["version"] = kCheckpointSchemaVersion;
    j["seed"] = c.seed;
    j["network"] = {{"obs_size", c.policy.shape().obs_size},
                    {"num_actions", c.policy.shape().num_actions},
                    {"hidden", c.policy.shape().hidden}};
    const auto& p = c.policy.params();
    j["params"] = std::vector<double>(p.data(), p.data() + p.size());
    j["ppo"] = ppo_to_json(c.ppo);
    j["reward"] = reward_to_json(c.reward);
    j["env"] = {{"batch_size", c.env.batch_size}, {"mask", to_string(c.env.mask_mode)}};
    j["curriculum"] = json::parse(to_json_text(c.curriculum));
    j["rng"] = {{"key", c.rng.key()}, {"counter", c.rng.counter()}};
    j["instance"] = json::parse(to_json_text(c.instance));
    return j.dump() + "\n";
}

Checkpoint checkpoint_from_json_text(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ParseError("checkpoint parse error at byte " + std::to_string(e.byte) + ": " + e.what());
    }
    try {
        if (j.at("schema").get<std::string>() != "batchsched.checkpoint")
            throw ValidationError("not a checkpoint file");
        if (j.at("version").get<int>() != kCheckpointSchemaVersion)
            throw ValidationError("unsupported checkpoint version " + std::to_string(j.at("version").get<int>()));
        Checkpoint c;
        c.seed = j.at("seed").get<std::uint64_t>();
        NetShape shape{j.at("network").at("obs_size").get<int>(), j.at("network").at("num_actions").get<int>(),
                       j.at("network").at("hidden").get<std::vector<int>>()};
        const auto params = j.at("params").get<std::vector<double>>();
        c.policy = PolicyNet(std::move(shape),
                             Eigen::Map<const Eigen::VectorXd>(params.data(), static_cast<Eigen::Index>(params.size())));
        c.ppo = ppo_from_json(j.at("ppo"));
        c.reward = reward_from_json(j.at("reward"));
        c.env.batch_size = j.at("env").at("batch_size").get<int>();
        c.env.mask_mode = mask_mode_from_string(j.at("env").at("mask").get<std::string>());
        c.curriculum = curriculum_from_json_text(j.at("curriculum").dump());
        c.rng.restore(j.at("rng").at("key").get<std::uint64_t>(), j.at("rng").at("counter").get<std::uint64_t>());
        c.instance = from_json_text(j.at("instance").dump());
        if (static_cast<std::size_t>(c.policy.shape().obs_size) != observation_size(c.instance.num_types) ||
            c.policy.shape().num_actions != c.instance.num_types)
            throw ValidationError("network shape does not match the embedded instance");
        return c;
    } catch (const json::exception& e) {
        throw ValidationError(std::string("checkpoint schema violation: ") + e.what());
    }
}

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
    detail::write_text_file(path, to_json_text(ckpt));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    return checkpoint_from_json_text(detail::read_text_file(path));
}

} // namespace batchsched
