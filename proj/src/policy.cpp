#include "batchsched/policy.hpp"

#include <cmath>

#include "batchsched/error.hpp"

namespace batchsched {

Eigen::Index NetShape::param_count() const {
    Eigen::Index n = 0;
    int in = obs_size;
    for (int h : hidden) {
        n += static_cast<Eigen::Index>(h) * in + h;
        in = h;
    }
    n += static_cast<Eigen::Index>(num_actions) * in + num_actions;
    n += in + 1;
    return n;
}

void PolicyNet::build_layout() {
    trunk_.clear();
    Eigen::Index offset = 0;
    int in = shape_.obs_size;
    auto layer = [&](int out) {
        LayerView l{offset, offset + static_cast<Eigen::Index>(out) * in, in, out};
        offset = l.b_offset + out;
        return l;
    };
    for (int h : shape_.hidden) {
        trunk_.push_back(layer(h));
        in = h;
    }
    policy_head_ = layer(shape_.num_actions);
    value_head_ = layer(1);
}

PolicyNet::PolicyNet(NetShape shape, CounterRng& init_rng) : shape_(std::move(shape)) {
    if (shape_.obs_size < 1 || shape_.num_actions < 1) throw ValidationError("network needs observations and actions");
    for (int h : shape_.hidden)
        if (h < 1) throw ValidationError("hidden layer widths must be >= 1");
    build_layout();
    params_ = Eigen::VectorXd::Zero(shape_.param_count());
    auto init = [&](const LayerView& l, double gain) {
        const double bound = gain / std::sqrt(static_cast<double>(l.in));
        for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(l.out) * l.in; ++i)
            params_[l.w_offset + i] = init_rng.uniform(-bound, bound);
    };
    for (const auto& l : trunk_) init(l, 1.0);
    init(policy_head_, 0.01);
    init(value_head_, 1.0);
}

PolicyNet::PolicyNet(NetShape shape, Eigen::VectorXd params) : shape_(std::move(shape)), params_(std::move(params)) {
    if (shape_.obs_size < 1 || shape_.num_actions < 1) throw ValidationError("network needs observations and actions");
    for (int h : shape_.hidden)
        if (h < 1) throw ValidationError("hidden layer widths must be >= 1");
    if (params_.size() != shape_.param_count())
        throw ValidationError("expected " + std::to_string(shape_.param_count()) + " parameters, got " +
                              std::to_string(params_.size()));
    build_layout();
}

PolicyNet::Forward PolicyNet::forward(const Eigen::MatrixXd& obs) const {
    if (obs.rows() != shape_.obs_size) throw UsageError("observation size does not match the network");
    Forward f;
    f.activations.reserve(trunk_.size() + 1);
    f.activations.push_back(obs);
    for (const auto& l : trunk_) {
        Eigen::MatrixXd z = weight(l) * f.activations.back();
        z.colwise() += bias(l);
        f.activations.push_back(z.array().tanh().matrix());
    }
    const auto& h = f.activations.back();
    f.logits = weight(policy_head_) * h;
    f.logits.colwise() += bias(policy_head_);
    f.values = weight(value_head_) * h;
    f.values.array() += params_[value_head_.b_offset];
    return f;
}

Eigen::VectorXd PolicyNet::backward(const Forward& f, const Eigen::MatrixXd& dlogits,
                                    const Eigen::RowVectorXd& dvalues) const {
    Eigen::VectorXd grad = Eigen::VectorXd::Zero(params_.size());
    const auto& h = f.activations.back();
    auto store = [&](const LayerView& l, const Eigen::MatrixXd& dz, const Eigen::MatrixXd& input) {
        Eigen::Map<Eigen::MatrixXd>(grad.data() + l.w_offset, l.out, l.in).noalias() = dz * input.transpose();
        Eigen::Map<Eigen::VectorXd>(grad.data() + l.b_offset, l.out) = dz.rowwise().sum();
    };
    store(policy_head_, dlogits, h);
    store(value_head_, dvalues, h);
    Eigen::MatrixXd dh = weight(policy_head_).transpose() * dlogits;
    dh.noalias() += weight(value_head_).transpose() * dvalues;
    for (std::size_t i = trunk_.size(); i-- > 0;) {
        const auto& act = f.activations[i + 1];
        Eigen::MatrixXd dz = (dh.array() * (1.0 - act.array().square())).matrix();
        store(trunk_[i], dz, f.activations[i]);
        if (i > 0) dh = weight(trunk_[i]).transpose() * dz;
    }
    return grad;
}

Eigen::VectorXd apply_mask(const Eigen::Ref<const Eigen::VectorXd>& logits, const ActionMask& mask) {
    if (static_cast<Eigen::Index>(mask.size()) != logits.size()) throw UsageError("mask size does not match action count");
    Eigen::VectorXd out = logits;
    bool any = false;
    for (std::size_t a = 0; a < mask.size(); ++a) {
        if (mask[a]) any = true;
        else out[static_cast<Eigen::Index>(a)] = kMaskedLogit;
    }
    if (!any) throw UsageError("action mask has no legal action");
    return out;
}

std::pair<Eigen::VectorXd, double> policy_forward(const PolicyNet& net, const Observation& obs, const ActionMask& mask) {
    const Eigen::MatrixXd x = Eigen::Map<const Eigen::VectorXd>(obs.data(), static_cast<Eigen::Index>(obs.size()));
    const auto f = net.forward(x);
    return {apply_mask(f.logits.col(0), mask), f.values[0]};
}

namespace {

// Scalar std::exp on purpose: Eigen's vectorized exp clamps very negative
// arguments and returns a denormal instead of 0 for masked logits.
Eigen::VectorXd shifted_exp(const Eigen::Ref<const Eigen::VectorXd>& z, double m) {
    Eigen::VectorXd e(z.size());
    for (Eigen::Index a = 0; a < z.size(); ++a) e[a] = std::exp(z[a] - m);
    return e;
}

} // namespace

Eigen::VectorXd action_log_probabilities(const Eigen::Ref<const Eigen::VectorXd>& z) {
    const double m = z.maxCoeff();
    const double lse = m + std::log(shifted_exp(z, m).sum());
    return (z.array() - lse).matrix();
}

Eigen::VectorXd action_probabilities(const Eigen::Ref<const Eigen::VectorXd>& z) {
    const double m = z.maxCoeff();
    const Eigen::VectorXd e = shifted_exp(z, m);
    return e / e.sum();
}

double entropy(const Eigen::Ref<const Eigen::VectorXd>& z) {
    const auto p = action_probabilities(z);
    const auto logp = action_log_probabilities(z);
    double h = 0.0;
    for (Eigen::Index a = 0; a < z.size(); ++a)
        if (p[a] > 0.0) h -= p[a] * logp[a];
    return h;
}

std::pair<ProductType, double> sample_action(const Eigen::Ref<const Eigen::VectorXd>& z, CounterRng& rng) {
    const auto p = action_probabilities(z);
    const double u = rng.uniform();
    double acc = 0.0;
    Eigen::Index chosen = -1;
    for (Eigen::Index a = 0; a < p.size(); ++a) {
        if (p[a] <= 0.0) continue;
        chosen = a;
        acc += p[a];
        if (u < acc) break;
    }
    if (chosen < 0) throw UsageError("no action with nonzero probability");
    return {static_cast<ProductType>(chosen), action_log_probabilities(z)[chosen]};
}

ProductType argmax_action(const Eigen::Ref<const Eigen::VectorXd>& z) {
    Eigen::Index best = 0;
    for (Eigen::Index a = 1; a < z.size(); ++a)
        if (z[a] > z[best]) best = a;
    return static_cast<ProductType>(best);
}

} // namespace batchsched
