#pragma once

#include <span>
#include <vector>

#include "irrig/neural/optimizer.hpp"
#include "irrig/neural/policy.hpp"

namespace irrig::ppo {

using neural::Mat;
using neural::Vec;

enum class OptimizerKind { Adam, Sgd };

struct PpoConfig {
    double lr = 1e-5;
    double critic_lr = 0.0;  ///< 0 means the same as lr
    int horizon = 30;
    int minibatch = 64;
    int epochs = 20;
    double gamma = 0.99;
    double gae_lambda = 0.97;
    double clip = 0.25;
    double entropy_coef = 0.01;
    double value_coef = 0.5;
    bool normalize_advantages = true;
    OptimizerKind optimizer = OptimizerKind::Adam;

    void validate() const;
    double value_lr() const { return critic_lr > 0.0 ? critic_lr : lr; }
};

class EmptyPool : public InvalidArgument {
public:
    using InvalidArgument::InvalidArgument;
};

struct Transition {
    Vec state;
    Vec action;  ///< categorical actions hold the index as a single entry
    double reward = 0.0;
    Vec next_state;
    double log_prob = 0.0;
    double value = 0.0;
    bool done = false;       ///< true terminal: no bootstrap
    bool truncated = false;  ///< time limit: bootstrap from next_state, stop propagation

    bool finite() const;
};

/// Per-agent on-policy buffer of at most `capacity` transitions.
class TrajectoryPool {
public:
    explicit TrajectoryPool(int capacity = 30);

    void push(Transition t);
    bool full() const { return static_cast<int>(items_.size()) >= capacity_; }
    bool empty() const { return items_.empty(); }
    int size() const { return static_cast<int>(items_.size()); }
    int capacity() const { return capacity_; }
    const std::vector<Transition>& items() const { return items_; }
    std::vector<Transition>& items() { return items_; }
    void clear() { items_.clear(); }

private:
    int capacity_;
    std::vector<Transition> items_;
};

struct GaeResult {
    std::vector<double> advantages;
    std::vector<double> returns;
};

/// A single trajectory; next value of the last step is `bootstrap_value`.
GaeResult gae(std::span<const double> rewards, std::span<const double> values, double bootstrap_value, double gamma,
              double lambda);

/// General form: next_values[t] already zeroed at terminals; cut[t] stops the backward recursion.
GaeResult gae(std::span<const double> rewards, std::span<const double> values, std::span<const double> next_values,
              const std::vector<bool>& cut, double gamma, double lambda);

/// -mean(min(r A, clip(r, 1-eps, 1+eps) A)), r = exp(lp_new - lp_old).
double clipped_policy_loss(std::span<const double> lp_new, std::span<const double> lp_old,
                           std::span<const double> advantages, double clip);

struct UpdateStats {
    double policy_loss = 0.0;
    double value_loss = 0.0;
    double entropy = 0.0;
    double approx_kl = 0.0;
    double clip_fraction = 0.0;
    double mean_reward = 0.0;
    int gradient_steps = 0;
};

/// Batched log-probability and entropy of stored actions, plus their backward pass.
struct PolicyBatch {
    Vec log_prob;
    Vec entropy;
    neural::Tape tape;
    Mat out;  ///< raw network output (mean or logits)
};

PolicyBatch evaluate_batch(const neural::GaussianPolicy& pi, const Mat& X, const Mat& A);
PolicyBatch evaluate_batch(const neural::CategoricalPolicy& pi, const Mat& X, const Mat& A);

/// Accumulates gradients for loss = sum_j dlp[j] * lp_j + dent[j] * H_j.
void backward_batch(const neural::GaussianPolicy& pi, const PolicyBatch& b, const Mat& A, const Vec& dlp,
                    const Vec& dent, neural::MlpGrad& g_net, Vec& g_log_std);
void backward_batch(const neural::CategoricalPolicy& pi, const PolicyBatch& b, const Mat& A, const Vec& dlp,
                    const Vec& dent, neural::MlpGrad& g_net, Vec& g_log_std);

/// Gradient of the clipped surrogate loss (with entropy bonus) w.r.t. per-sample log-probs and entropies.
void surrogate_gradients(const Vec& lp_new, const Vec& lp_old, const Vec& adv, const Vec& entropy,
                         const PpoConfig& cfg, Vec& dlp, Vec& dent, UpdateStats* stats);

struct ActResult {
    Vec action;
    double log_prob = 0.0;
    double value = 0.0;
    double entropy = 0.0;
};

/// Actor, critic, their optimizers and the trajectory pool of one agent.
template <class Policy>
class Agent {
public:
    Agent() = default;
    Agent(Policy policy, neural::Critic critic, const PpoConfig& cfg);

    ActResult act(const Vec& x, Rng& rng) const;
    double value(const Vec& x) const { return critic.value(x); }

    /// Runs the PPO epochs over the pool and clears it.
    UpdateStats update(const PpoConfig& cfg, Rng& rng);

    Policy policy;
    neural::Critic critic;
    neural::Adam actor_opt;
    neural::Adam critic_opt;
    TrajectoryPool pool;
};

using GaussianAgent = Agent<neural::GaussianPolicy>;
using CategoricalAgent = Agent<neural::CategoricalPolicy>;

extern template class Agent<neural::GaussianPolicy>;
extern template class Agent<neural::CategoricalPolicy>;

}  // namespace irrig::ppo
