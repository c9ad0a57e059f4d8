#include "doctest.h"

#include <cmath>

#include "batchsched/error.hpp"
#include "batchsched/policy.hpp"

using namespace batchsched;

namespace {

Eigen::VectorXd logits_of(std::initializer_list<double> v) {
    Eigen::VectorXd x(static_cast<Eigen::Index>(v.size()));
    Eigen::Index i = 0;
    for (double d : v) x[i++] = d;
    return x;
}

} // namespace

TEST_CASE("a single legal action has probability one") {
    const Eigen::VectorXd masked = apply_mask(logits_of({5.0, -3.0, 40.0, 0.0}), ActionMask{0, 1, 0, 0});
    const Eigen::VectorXd p = action_probabilities(masked);
    CHECK(p[1] == 1.0);
    CHECK(p[0] == 0.0);
    CHECK(p[2] == 0.0);
    CHECK(entropy(masked) == 0.0);
    CounterRng rng(3);
    for (int i = 0; i < 100000; ++i) REQUIRE(sample_action(masked, rng).first == 1);
}

TEST_CASE("equal logits give a uniform distribution over the legal set") {
    const Eigen::VectorXd masked = apply_mask(Eigen::VectorXd::Zero(6), ActionMask{1, 0, 1, 1, 0, 1});
    const Eigen::VectorXd p = action_probabilities(masked);
    for (int i : {0, 2, 3, 5}) CHECK(p[i] == doctest::Approx(0.25).epsilon(1e-15));
    CHECK(p.sum() == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(entropy(masked) == doctest::Approx(std::log(4.0)));
}

TEST_CASE("sampling frequencies match the probabilities") {
    const Eigen::VectorXd masked = apply_mask(logits_of({0.3, 1.0, -0.5, 0.0, 2.0}), ActionMask{1, 1, 0, 1, 1});
    const Eigen::VectorXd p = action_probabilities(masked);
    CounterRng rng(11);
    const int n = 100000;
    std::vector<int> count(5, 0);
    for (int i = 0; i < n; ++i) {
        const auto [a, lp] = sample_action(masked, rng);
        CHECK_FALSE(a == 2);
        CHECK(lp == doctest::Approx(std::log(p[a])));
        ++count[static_cast<std::size_t>(a)];
    }
    CHECK(count[2] == 0);
    for (int a : {0, 1, 3, 4}) {
        const double sigma = std::sqrt(n * p[a] * (1.0 - p[a]));
        CHECK(std::abs(count[static_cast<std::size_t>(a)] - n * p[a]) < 3.0 * sigma);
    }
}

TEST_CASE("masked logits are exactly the sentinel") {
    const Eigen::VectorXd masked = apply_mask(logits_of({1.0, 2.0}), ActionMask{1, 0});
    CHECK(masked[0] == 1.0);
    CHECK(masked[1] == kMaskedLogit);
    CHECK(action_probabilities(masked)[1] == 0.0);
}

TEST_CASE("argmax breaks ties toward the smallest id") {
    CHECK(argmax_action(apply_mask(logits_of({1.0, 3.0, 3.0, 0.0}), ActionMask{1, 1, 1, 1})) == 1);
    CHECK(argmax_action(apply_mask(logits_of({1.0, 3.0, 3.0, 0.0}), ActionMask{1, 0, 1, 1})) == 2);
    CHECK(argmax_action(apply_mask(logits_of({9.0, 3.0}), ActionMask{0, 1})) == 1);
}

TEST_CASE("an empty mask or a size mismatch is a usage error") {
    CHECK_THROWS_AS(apply_mask(logits_of({1.0, 2.0}), ActionMask{0, 0}), UsageError);
    CHECK_THROWS_AS(apply_mask(logits_of({1.0, 2.0}), ActionMask{1}), UsageError);
}

TEST_CASE("the network maps observations to finite logits and values") {
    CounterRng init(5);
    const PolicyNet net(NetShape{9, 2, {16, 16}}, init);
    CHECK(net.params().size() == NetShape{9, 2, {16, 16}}.param_count());
    CHECK(NetShape{9, 2, {16, 16}}.param_count() == (9 * 16 + 16) + (16 * 16 + 16) + (16 * 2 + 2) + (16 + 1));
    const Observation obs(9, 0.5);
    const auto [logits, value] = policy_forward(net, obs, ActionMask{1, 1});
    CHECK(std::isfinite(logits[0]));
    CHECK(std::isfinite(value));
    // the small policy head starts close to uniform
    CHECK(std::abs(action_probabilities(logits)[0] - 0.5) < 0.05);
}

TEST_CASE("adopting a parameter vector checks its size") {
    const NetShape shape{3, 2, {4}};
    CHECK_THROWS_AS(PolicyNet(shape, Eigen::VectorXd::Zero(5)), ValidationError);
    const PolicyNet net(shape, Eigen::VectorXd::Constant(shape.param_count(), 0.1));
    CHECK(net.params()[0] == 0.1);
}

TEST_CASE("masked probabilities are exactly zero for a full set of actions") {
    CounterRng rng(17);
    Eigen::VectorXd logits(8);
    for (int k = 0; k < 8; ++k) logits[k] = 3.0 * rng.normal();
    for (int legal = 0; legal < 8; ++legal) {
        ActionMask m(8, 0);
        m[static_cast<std::size_t>(legal)] = 1;
        const Eigen::VectorXd p = action_probabilities(apply_mask(logits, m));
        for (int k = 0; k < 8; ++k) CHECK(p[k] == (k == legal ? 1.0 : 0.0));
    }
}
