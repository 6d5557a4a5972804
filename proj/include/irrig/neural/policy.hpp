#pragma once

#include <numbers>

#include "irrig/neural/mlp.hpp"

namespace irrig::neural {

inline constexpr double kLog2Pi = 1.8378770664093454836;

double gaussian_log_prob(const Vec& mean, const Vec& log_std, const Vec& action);
double gaussian_entropy(const Vec& log_std);

/// Numerically stable softmax; invariant to adding a constant to all logits.
Vec softmax(const Vec& logits);
double categorical_entropy(const Vec& probs);

struct GaussianSample {
    Vec action;
    double log_prob = 0.0;
    double entropy = 0.0;
};

/// Diagonal Gaussian with state-independent log_std.
class GaussianPolicy {
public:
    GaussianPolicy() = default;
    GaussianPolicy(int input_size, int action_size, const std::vector<int>& hidden, double init_std, Rng& rng);

    Vec mean(const Vec& x) const { return net.forward(x); }
    GaussianSample sample(const Vec& x, Rng& rng) const;
    double log_prob(const Vec& x, const Vec& action) const;

    Mlp net;
    Vec log_std;
};

struct CategoricalSample {
    int action = 0;
    double log_prob = 0.0;
    double entropy = 0.0;
    Vec probs;
};

class CategoricalPolicy {
public:
    CategoricalPolicy() = default;
    CategoricalPolicy(int input_size, int n_actions, const std::vector<int>& hidden, Rng& rng);

    Vec probs(const Vec& x) const { return softmax(net.forward(x)); }
    CategoricalSample sample(const Vec& x, Rng& rng) const;
    /// Argmax; ties go to the lower index.
    int greedy(const Vec& x) const;

    Mlp net;
};

/// Scalar value function.
class Critic {
public:
    Critic() = default;
    Critic(int input_size, const std::vector<int>& hidden, Rng& rng);

    double value(const Vec& x) const { return net.forward(x)[0]; }

    Mlp net;
};

}  // namespace irrig::neural
