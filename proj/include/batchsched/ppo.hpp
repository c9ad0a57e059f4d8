#pragma once

#include <Eigen/Dense>

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "batchsched/policy.hpp"

namespace batchsched {

struct PPOConfig {
    double gamma = 0.99;
    double gae_lambda = 0.95;
    double clip_epsilon = 0.2;
    double learning_rate = 3e-4;
    int rollout_length = 4096; ///< env steps per update, summed over envs
    int num_envs = 8;
    int epochs = 10;
    int minibatch_size = 512;
    double entropy_coef = 0.01;
    double value_coef = 0.5;
    double max_grad_norm = 0.5;
    double adam_eps = 1e-5;
    std::vector<int> hidden{256, 256};

    bool operator==(const PPOConfig&) const = default;
};

/// Empty when the config is usable.
std::vector<std::string> validate(const PPOConfig& cfg);

/// One env's consecutive transitions. done[t] marks that the episode ended
/// after step t; `bootstrap_value` is V(s_T) for a non-terminal tail.
struct Trajectory {
    std::vector<Observation> observations;
    std::vector<ActionMask> masks;
    std::vector<ProductType> actions;
    std::vector<double> log_probs;
    std::vector<double> values;
    std::vector<double> rewards;
    std::vector<std::uint8_t> dones;
    double bootstrap_value = 0.0;

    std::size_t size() const noexcept { return actions.size(); }
    void clear();
};

struct GaeResult {
    std::vector<double> advantages;
    std::vector<double> returns;
};

/// Recursive generalized advantage estimation. Advantages are returned
/// unnormalized; ppo_update standardizes them over the whole update batch.
GaeResult compute_gae(const Trajectory& trajectory, double gamma, double lambda);

/// Flattened training samples.
struct Batch {
    Eigen::MatrixXd observations; ///< obs_size x N
    std::vector<ActionMask> masks;
    std::vector<ProductType> actions;
    Eigen::VectorXd old_log_probs;
    Eigen::VectorXd advantages;
    Eigen::VectorXd returns;

    Eigen::Index size() const noexcept { return old_log_probs.size(); }
};

Batch make_batch(std::span<const Trajectory> trajectories, double gamma, double lambda);

struct LossParts {
    double policy_loss = 0.0; ///< negated clipped surrogate
    double value_loss = 0.0;  ///< 0.5 * mean squared error
    double entropy = 0.0;
    double total = 0.0;       ///< policy + value_coef * value - entropy_coef * entropy
    double clip_fraction = 0.0;
    double approx_kl = 0.0;
};

/// Loss over the samples `idx` of `batch` (advantages used as given) and,
/// if `grad` is non-null, its exact gradient w.r.t. the flat parameters.
LossParts loss_and_gradient(const PolicyNet& net, const Batch& batch, std::span<const Eigen::Index> idx,
                            const PPOConfig& cfg, Eigen::VectorXd* grad);

struct AdamState {
    Eigen::VectorXd m;
    Eigen::VectorXd v;
    long step = 0;

    bool operator==(const AdamState&) const = default;
};

struct UpdateStats {
    double policy_loss = 0.0;
    double value_loss = 0.0;
    double entropy = 0.0;
    double clip_fraction = 0.0;
    double approx_kl = 0.0;
    double grad_norm = 0.0; ///< mean pre-clipping norm
    /// Set when a non-finite loss or gradient aborted the update; the network
    /// and optimizer state are then left exactly as before the call.
    std::optional<std::string> aborted;
};

/// `epochs` passes of shuffled minibatches with global gradient-norm
/// clipping and Adam.
UpdateStats ppo_update(PolicyNet& net, AdamState& adam, const Batch& batch, const PPOConfig& cfg, CounterRng& rng);

} // namespace batchsched
