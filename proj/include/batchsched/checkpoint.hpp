#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "batchsched/curriculum.hpp"
#include "batchsched/instance.hpp"
#include "batchsched/policy.hpp"
#include "batchsched/ppo.hpp"

namespace batchsched {

/// Everything needed to evaluate or resume a trained agent.
struct Checkpoint {
    PolicyNet policy;
    PPOConfig ppo;
    RewardConfig reward;
    EnvConfig env; ///< configuration used for evaluation
    CurriculumSpec curriculum;
    std::uint64_t seed = 0;
    CounterRng rng;
    Instance instance;

    bool operator==(const Checkpoint&) const = default;
};

inline constexpr int kCheckpointSchemaVersion = 1;

/// Flat JSON objects with one key per field.
std::string to_json_text(const PPOConfig& cfg);
PPOConfig ppo_config_from_json_text(const std::string& text);
std::string to_json_text(const RewardConfig& cfg);
RewardConfig reward_config_from_json_text(const std::string& text);

std::string to_json_text(const Checkpoint& ckpt);
Checkpoint checkpoint_from_json_text(const std::string& text);
void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

} // namespace batchsched
