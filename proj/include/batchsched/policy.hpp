#pragma once

#include <Eigen/Dense>

#include <span>
#include <utility>
#include <vector>

#include "batchsched/env.hpp"
#include "batchsched/rng.hpp"

namespace batchsched {

struct NetShape {
    int obs_size = 0;
    int num_actions = 0;
    std::vector<int> hidden{256, 256};

    bool operator==(const NetShape&) const = default;
    /// Total number of scalar parameters.
    Eigen::Index param_count() const;
};

/// Logit assigned to masked-out actions; exp() of it underflows to exactly 0.
inline constexpr double kMaskedLogit = -1.0e9;

/// Shared-trunk tanh MLP with a policy head (one logit per action) and a
/// scalar value head. All parameters live in one flat vector; layers are
/// column-major views into it: trunk layers, then policy head, then value head.
class PolicyNet {
public:
    PolicyNet() = default;
    /// Uniform(+-1/sqrt(fan_in)) init; the policy head is scaled by 0.01 so the
    /// initial policy is close to uniform over legal actions.
    PolicyNet(NetShape shape, CounterRng& init_rng);
    /// Adopts existing parameters; throws ValidationError on a size mismatch.
    PolicyNet(NetShape shape, Eigen::VectorXd params);

    const NetShape& shape() const noexcept { return shape_; }
    Eigen::VectorXd& params() noexcept { return params_; }
    const Eigen::VectorXd& params() const noexcept { return params_; }

    struct Forward {
        Eigen::MatrixXd logits; ///< actions x N (unmasked)
        Eigen::RowVectorXd values;
        std::vector<Eigen::MatrixXd> activations; ///< input, then each hidden layer
    };

    /// Batched forward; columns of `obs` are observations.
    Forward forward(const Eigen::MatrixXd& obs) const;

    /// Gradient of a scalar loss given its derivatives w.r.t. logits and values.
    Eigen::VectorXd backward(const Forward& fwd, const Eigen::MatrixXd& dlogits,
                             const Eigen::RowVectorXd& dvalues) const;

    bool operator==(const PolicyNet& o) const { return shape_ == o.shape_ && params_ == o.params_; }

private:
    struct LayerView {
        Eigen::Index w_offset;
        Eigen::Index b_offset;
        int in;
        int out;
    };
    void build_layout();
    Eigen::Map<const Eigen::MatrixXd> weight(const LayerView& l) const {
        return {params_.data() + l.w_offset, l.out, l.in};
    }
    Eigen::Map<const Eigen::VectorXd> bias(const LayerView& l) const { return {params_.data() + l.b_offset, l.out}; }

    NetShape shape_;
    Eigen::VectorXd params_;
    std::vector<LayerView> trunk_;
    LayerView policy_head_{};
    LayerView value_head_{};
};

/// Applies the hard mask. Throws UsageError if no action is legal or the
/// sizes disagree.
Eigen::VectorXd apply_mask(const Eigen::Ref<const Eigen::VectorXd>& logits, const ActionMask& mask);

/// Masked logits and value for a single observation.
std::pair<Eigen::VectorXd, double> policy_forward(const PolicyNet& net, const Observation& obs, const ActionMask& mask);

/// Softmax of masked logits; masked entries are exactly 0.
Eigen::VectorXd action_probabilities(const Eigen::Ref<const Eigen::VectorXd>& masked_logits);
/// Log-softmax; masked entries are left very negative and must not be used.
Eigen::VectorXd action_log_probabilities(const Eigen::Ref<const Eigen::VectorXd>& masked_logits);
/// Entropy over actions with nonzero probability.
double entropy(const Eigen::Ref<const Eigen::VectorXd>& masked_logits);

/// Draws from the masked categorical. Never returns an action with zero probability.
std::pair<ProductType, double> sample_action(const Eigen::Ref<const Eigen::VectorXd>& masked_logits, CounterRng& rng);
/// Most probable action; ties go to the smallest id.
ProductType argmax_action(const Eigen::Ref<const Eigen::VectorXd>& masked_logits);

} // namespace batchsched
