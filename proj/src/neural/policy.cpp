#include "irrig/neural/policy.hpp"

#include <cmath>

namespace irrig::neural {

namespace {

std::vector<int> layer_sizes(int in, const std::vector<int>& hidden, int out) {
    std::vector<int> s{in};
    s.insert(s.end(), hidden.begin(), hidden.end());
    s.push_back(out);
    return s;
}

}  // namespace

double gaussian_log_prob(const Vec& mean, const Vec& log_std, const Vec& action) {
    if (mean.size() != log_std.size() || mean.size() != action.size()) throw ShapeMismatch("gaussian dims");
    double lp = 0.0;
    for (Eigen::Index i = 0; i < mean.size(); ++i) {
        const double z = (action[i] - mean[i]) * std::exp(-log_std[i]);
        lp += -0.5 * z * z - log_std[i] - 0.5 * kLog2Pi;
    }
    return lp;
}

double gaussian_entropy(const Vec& log_std) {
    return (0.5 + 0.5 * kLog2Pi) * static_cast<double>(log_std.size()) + log_std.sum();
}

Vec softmax(const Vec& logits) {
    const Vec e = (logits.array() - logits.maxCoeff()).exp();
    return e / e.sum();
}

double categorical_entropy(const Vec& probs) {
    double h = 0.0;
    for (Eigen::Index i = 0; i < probs.size(); ++i) {
        if (probs[i] > 0.0) h -= probs[i] * std::log(probs[i]);
    }
    return h;
}

GaussianPolicy::GaussianPolicy(int input_size, int action_size, const std::vector<int>& hidden, double init_std,
                               Rng& rng)
    : net(layer_sizes(input_size, hidden, action_size), rng, 0.01),
      log_std(Vec::Constant(action_size, std::log(init_std))) {
    if (!(init_std > 0.0)) throw InvalidArgument("initial std must be positive");
}

GaussianSample GaussianPolicy::sample(const Vec& x, Rng& rng) const {
    const Vec mu = mean(x);
    Vec a(mu.size());
    for (Eigen::Index i = 0; i < mu.size(); ++i) a[i] = mu[i] + std::exp(log_std[i]) * rng.normal();
    return {a, gaussian_log_prob(mu, log_std, a), gaussian_entropy(log_std)};
}

double GaussianPolicy::log_prob(const Vec& x, const Vec& action) const {
    return gaussian_log_prob(mean(x), log_std, action);
}

CategoricalPolicy::CategoricalPolicy(int input_size, int n_actions, const std::vector<int>& hidden, Rng& rng)
    : net(layer_sizes(input_size, hidden, n_actions), rng, 0.01) {}

CategoricalSample CategoricalPolicy::sample(const Vec& x, Rng& rng) const {
    const Vec p = probs(x);
    const double u = rng.uniform();
    int k = 0;
    double c = p[0];
    while (u >= c && k + 1 < p.size()) c += p[++k];
    return {k, std::log(p[k]), categorical_entropy(p), p};
}

int CategoricalPolicy::greedy(const Vec& x) const {
    Eigen::Index k = 0;
    net.forward(x).maxCoeff(&k);
    return static_cast<int>(k);
}

Critic::Critic(int input_size, const std::vector<int>& hidden, Rng& rng)
    : net(layer_sizes(input_size, hidden, 1), rng, 1.0) {}

}  // namespace irrig::neural
