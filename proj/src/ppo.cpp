#include "batchsched/ppo.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "batchsched/error.hpp"

namespace batchsched {

std::vector<std::string> validate(const PPOConfig& c) {
    std::vector<std::string> out;
    if (c.gamma < 0.0 || c.gamma > 1.0) out.emplace_back("gamma must lie in [0, 1]");
    if (c.gae_lambda < 0.0 || c.gae_lambda > 1.0) out.emplace_back("gae_lambda must lie in [0, 1]");
    if (!(c.clip_epsilon > 0.0)) out.emplace_back("clip_epsilon must be > 0");
    if (c.learning_rate < 0.0) out.emplace_back("learning_rate must be >= 0");
    if (c.num_envs < 1) out.emplace_back("num_envs must be >= 1");
    if (c.rollout_length < c.num_envs) out.emplace_back("rollout_length must be >= num_envs");
    if (c.epochs < 1) out.emplace_back("epochs must be >= 1");
    if (c.minibatch_size < 1) out.emplace_back("minibatch_size must be >= 1");
    if (c.entropy_coef < 0.0) out.emplace_back("entropy_coef must be >= 0");
    if (!(c.value_coef > 0.0)) out.emplace_back("value_coef must be > 0");
    if (!(c.max_grad_norm > 0.0)) out.emplace_back("max_grad_norm must be > 0");
    if (!(c.adam_eps > 0.0)) out.emplace_back("adam_eps must be > 0");
    for (int h : c.hidden)
        if (h < 1) out.emplace_back("hidden widths must be >= 1");
    return out;
}

void Trajectory::clear() {
    observations.clear();
    masks.clear();
    actions.clear();
    log_probs.clear();
    values.clear();
    rewards.clear();
    dones.clear();
    bootstrap_value = 0.0;
}

GaeResult compute_gae(const Trajectory& tr, double gamma, double lambda) {
    const std::size_t n = tr.size();
    if (tr.rewards.size() != n || tr.values.size() != n || tr.dones.size() != n)
        throw UsageError("trajectory arrays have different lengths");
    GaeResult r;
    r.advantages.assign(n, 0.0);
    r.returns.assign(n, 0.0);
    double gae = 0.0;
    for (std::size_t t = n; t-- > 0;) {
        const double nonterminal = tr.dones[t] ? 0.0 : 1.0;
        const double next_value = t + 1 < n ? tr.values[t + 1] : tr.bootstrap_value;
        const double delta = tr.rewards[t] + gamma * next_value * nonterminal - tr.values[t];
        gae = delta + gamma * lambda * nonterminal * gae;
        r.advantages[t] = gae;
        r.returns[t] = gae + tr.values[t];
    }
    return r;
}

Batch make_batch(std::span<const Trajectory> trajectories, double gamma, double lambda) {
    Eigen::Index total = 0;
    Eigen::Index obs_size = 0;
    for (const auto& tr : trajectories) {
        total += static_cast<Eigen::Index>(tr.size());
        if (!tr.observations.empty()) obs_size = static_cast<Eigen::Index>(tr.observations.front().size());
    }
    Batch b;
    b.observations.resize(obs_size, total);
    b.old_log_probs.resize(total);
    b.advantages.resize(total);
    b.returns.resize(total);
    b.masks.reserve(static_cast<std::size_t>(total));
    b.actions.reserve(static_cast<std::size_t>(total));
    Eigen::Index col = 0;
    for (const auto& tr : trajectories) {
        const auto g = compute_gae(tr, gamma, lambda);
        for (std::size_t t = 0; t < tr.size(); ++t, ++col) {
            b.observations.col(col) = Eigen::Map<const Eigen::VectorXd>(tr.observations[t].data(), obs_size);
            b.masks.push_back(tr.masks[t]);
            b.actions.push_back(tr.actions[t]);
            b.old_log_probs[col] = tr.log_probs[t];
            b.advantages[col] = g.advantages[t];
            b.returns[col] = g.returns[t];
        }
    }
    return b;
}

LossParts loss_and_gradient(const PolicyNet& net, const Batch& batch, std::span<const Eigen::Index> idx,
                            const PPOConfig& cfg, Eigen::VectorXd* grad) {
    const auto n = static_cast<Eigen::Index>(idx.size());
    if (n == 0) throw UsageError("empty minibatch");
    Eigen::MatrixXd obs(batch.observations.rows(), n);
    for (Eigen::Index j = 0; j < n; ++j) obs.col(j) = batch.observations.col(idx[static_cast<std::size_t>(j)]);
    const auto fwd = net.forward(obs);
    const Eigen::Index num_actions = fwd.logits.rows();

    Eigen::MatrixXd dlogits = Eigen::MatrixXd::Zero(num_actions, n);
    Eigen::RowVectorXd dvalues(n);
    LossParts lp;
    const double inv_n = 1.0 / static_cast<double>(n);
    for (Eigen::Index j = 0; j < n; ++j) {
        const auto i = idx[static_cast<std::size_t>(j)];
        const Eigen::VectorXd z = apply_mask(fwd.logits.col(j), batch.masks[static_cast<std::size_t>(i)]);
        const Eigen::VectorXd p = action_probabilities(z);
        const Eigen::VectorXd logp = action_log_probabilities(z);
        const auto a = static_cast<Eigen::Index>(batch.actions[static_cast<std::size_t>(i)]);
        const double log_ratio = logp[a] - batch.old_log_probs[i];
        const double ratio = std::exp(log_ratio);
        const double adv = batch.advantages[i];
        const double clipped = std::clamp(ratio, 1.0 - cfg.clip_epsilon, 1.0 + cfg.clip_epsilon);
        const double unclipped_obj = ratio * adv;
        const double clipped_obj = clipped * adv;
        lp.policy_loss -= std::min(unclipped_obj, clipped_obj) * inv_n;
        if (std::abs(ratio - 1.0) > cfg.clip_epsilon) lp.clip_fraction += inv_n;
        lp.approx_kl += ((ratio - 1.0) - log_ratio) * inv_n;

        // d(-min(.))/d logp_a: the unclipped branch is active unless the clipped
        // objective is strictly smaller, and the clipped branch only carries
        // gradient while the ratio is inside the clip interval.
        double dlogp = 0.0;
        if (unclipped_obj <= clipped_obj || clipped == ratio) dlogp = -ratio * adv * inv_n;

        double h = 0.0;
        for (Eigen::Index k = 0; k < num_actions; ++k)
            if (p[k] > 0.0) h -= p[k] * logp[k];
        lp.entropy += h * inv_n;

        const double v = fwd.values[j];
        const double err = v - batch.returns[i];
        lp.value_loss += 0.5 * err * err * inv_n;
        dvalues[j] = cfg.value_coef * err * inv_n;

        for (Eigen::Index k = 0; k < num_actions; ++k) {
            if (p[k] <= 0.0) continue;
            // d logp_a / d z_k = [k == a] - p_k ; d H / d z_k = -p_k (logp_k + H)
            const double dlogp_dz = (k == a ? 1.0 : 0.0) - p[k];
            const double dh_dz = -p[k] * (logp[k] + h);
            dlogits(k, j) = dlogp * dlogp_dz - cfg.entropy_coef * inv_n * dh_dz;
        }
    }
    lp.total = lp.policy_loss + cfg.value_coef * lp.value_loss - cfg.entropy_coef * lp.entropy;
    if (grad) *grad = net.backward(fwd, dlogits, dvalues);
    return lp;
}

UpdateStats ppo_update(PolicyNet& net, AdamState& adam, const Batch& batch, const PPOConfig& cfg, CounterRng& rng) {
    const Eigen::Index n = batch.size();
    if (n == 0) throw UsageError("ppo_update on an empty batch");
    const Eigen::Index dim = net.params().size();
    if (adam.m.size() != dim) {
        adam.m = Eigen::VectorXd::Zero(dim);
        adam.v = Eigen::VectorXd::Zero(dim);
        adam.step = 0;
    }
    const PolicyNet net_before = net;
    const AdamState adam_before = adam;

    // Advantages standardized over the whole update batch.
    Batch normalized = batch;
    const double mean = batch.advantages.mean();
    const double var = (batch.advantages.array() - mean).square().mean();
    normalized.advantages = (batch.advantages.array() - mean) / (std::sqrt(var) + 1e-8);

    std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    const auto mb = static_cast<std::size_t>(std::min<Eigen::Index>(cfg.minibatch_size, n));

    UpdateStats stats;
    long minibatches = 0;
    constexpr double beta1 = 0.9;
    constexpr double beta2 = 0.999;
    Eigen::VectorXd grad;
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        for (std::size_t i = order.size(); i > 1; --i)
            std::swap(order[i - 1], order[static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(i) - 1))]);
        for (std::size_t start = 0; start < order.size(); start += mb) {
            const auto len = std::min(mb, order.size() - start);
            const std::span<const Eigen::Index> idx(order.data() + start, len);
            const LossParts lp = loss_and_gradient(net, normalized, idx, cfg, &grad);
            const double norm = grad.norm();
            if (!std::isfinite(lp.total) || !std::isfinite(norm)) {
                net = net_before;
                adam = adam_before;
                stats = UpdateStats{};
                stats.aborted = "non-finite loss or gradient in epoch " + std::to_string(epoch) +
                                " (loss=" + std::to_string(lp.total) + ", grad norm=" + std::to_string(norm) + ")";
                return stats;
            }
            if (norm > cfg.max_grad_norm) grad *= cfg.max_grad_norm / norm;

            ++adam.step;
            adam.m = beta1 * adam.m + (1.0 - beta1) * grad;
            adam.v = beta2 * adam.v + (1.0 - beta2) * grad.cwiseProduct(grad);
            const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(adam.step));
            const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(adam.step));
            net.params().array() -=
                cfg.learning_rate * (adam.m.array() / bc1) / ((adam.v.array() / bc2).sqrt() + cfg.adam_eps);

            stats.policy_loss += lp.policy_loss;
            stats.value_loss += lp.value_loss;
            stats.entropy += lp.entropy;
            stats.clip_fraction += lp.clip_fraction;
            stats.approx_kl += lp.approx_kl;
            stats.grad_norm += norm;
            ++minibatches;
        }
    }
    const double k = 1.0 / static_cast<double>(minibatches);
    stats.policy_loss *= k;
    stats.value_loss *= k;
    stats.entropy *= k;
    stats.clip_fraction *= k;
    stats.approx_kl *= k;
    stats.grad_norm *= k;
    return stats;
}

} // namespace batchsched
