#include "irrig/ppo/ppo.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <type_traits>

namespace irrig::ppo {

void PpoConfig::validate() const {
    const bool ok = lr > 0.0 && horizon >= 1 && minibatch >= 1 && epochs >= 1 && gamma > 0.0 && gamma <= 1.0 &&
                    gae_lambda >= 0.0 && gae_lambda <= 1.0 && clip > 0.0 && entropy_coef >= 0.0 && value_coef >= 0.0 &&
                    critic_lr >= 0.0;
    if (!ok) throw InvalidArgument("invalid PPO configuration");
}

bool Transition::finite() const {
    return state.allFinite() && action.allFinite() && next_state.allFinite() && std::isfinite(reward) &&
           std::isfinite(log_prob) && std::isfinite(value);
}

TrajectoryPool::TrajectoryPool(int capacity) : capacity_(capacity) {
    if (capacity < 1) throw InvalidArgument("pool capacity must be >= 1");
    items_.reserve(static_cast<std::size_t>(capacity));
}

void TrajectoryPool::push(Transition t) {
    if (full()) throw InvalidArgument("trajectory pool is full");
    if (!t.finite()) throw NumericalError("non-finite transition");
    items_.push_back(std::move(t));
}

GaeResult gae(std::span<const double> rewards, std::span<const double> values, double bootstrap_value, double gamma,
              double lambda) {
    if (rewards.size() != values.size()) throw LengthMismatch("gae: rewards and values differ in length");
    const std::size_t n = values.size();
    std::vector<double> next(n);
    for (std::size_t t = 0; t < n; ++t) next[t] = t + 1 < n ? values[t + 1] : bootstrap_value;
    return gae(rewards, values, next, std::vector<bool>(n, false), gamma, lambda);
}

GaeResult gae(std::span<const double> rewards, std::span<const double> values, std::span<const double> next_values,
              const std::vector<bool>& cut, double gamma, double lambda) {
    const std::size_t n = rewards.size();
    if (values.size() != n || next_values.size() != n || cut.size() != n) {
        throw LengthMismatch("gae: input lengths differ");
    }
    GaeResult r{std::vector<double>(n), std::vector<double>(n)};
    double running = 0.0;
    for (std::size_t t = n; t-- > 0;) {
        const double delta = rewards[t] + gamma * next_values[t] - values[t];
        running = delta + (cut[t] ? 0.0 : gamma * lambda * running);
        r.advantages[t] = running;
        r.returns[t] = running + values[t];
    }
    return r;
}

double clipped_policy_loss(std::span<const double> lp_new, std::span<const double> lp_old,
                           std::span<const double> advantages, double clip) {
    const std::size_t n = lp_new.size();
    if (lp_old.size() != n || advantages.size() != n) throw LengthMismatch("policy loss: input lengths differ");
    if (n == 0) return 0.0;
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double ratio = std::exp(lp_new[i] - lp_old[i]);
        const double clipped = std::clamp(ratio, 1.0 - clip, 1.0 + clip);
        s += std::min(ratio * advantages[i], clipped * advantages[i]);
    }
    return -s / static_cast<double>(n);
}

PolicyBatch evaluate_batch(const neural::GaussianPolicy& pi, const Mat& X, const Mat& A) {
    PolicyBatch b;
    b.out = pi.net.forward_batch(X, &b.tape);
    const Eigen::Index n = X.cols();
    const Vec inv_std = (-pi.log_std.array()).exp();
    const double h = neural::gaussian_entropy(pi.log_std);
    b.log_prob.resize(n);
    b.entropy = Vec::Constant(n, h);
    const double c = -pi.log_std.sum() - 0.5 * neural::kLog2Pi * static_cast<double>(pi.log_std.size());
    for (Eigen::Index j = 0; j < n; ++j) {
        const Vec z = (A.col(j) - b.out.col(j)).cwiseProduct(inv_std);
        b.log_prob[j] = c - 0.5 * z.squaredNorm();
    }
    return b;
}

PolicyBatch evaluate_batch(const neural::CategoricalPolicy& pi, const Mat& X, const Mat& A) {
    PolicyBatch b;
    b.out = pi.net.forward_batch(X, &b.tape);
    const Eigen::Index n = X.cols();
    b.log_prob.resize(n);
    b.entropy.resize(n);
    for (Eigen::Index j = 0; j < n; ++j) {
        const Vec p = neural::softmax(b.out.col(j));
        const auto k = static_cast<Eigen::Index>(A(0, j));
        if (k < 0 || k >= p.size()) throw neural::ShapeMismatch("categorical action out of range");
        const Vec logits = b.out.col(j);
        const double mx = logits.maxCoeff();
        const double lse = mx + std::log((logits.array() - mx).exp().sum());
        b.log_prob[j] = logits[k] - lse;
        b.entropy[j] = neural::categorical_entropy(p);
    }
    return b;
}

void backward_batch(const neural::GaussianPolicy& pi, const PolicyBatch& b, const Mat& A, const Vec& dlp,
                    const Vec& dent, neural::MlpGrad& g_net, Vec& g_log_std) {
    const Vec inv_var = (-2.0 * pi.log_std.array()).exp();
    Mat G(b.out.rows(), b.out.cols());
    for (Eigen::Index j = 0; j < b.out.cols(); ++j) {
        const Vec diff = A.col(j) - b.out.col(j);
        G.col(j) = dlp[j] * diff.cwiseProduct(inv_var);
        // d lp / d log_std = z^2 - 1 ; d H / d log_std = 1
        g_log_std.array() += dlp[j] * (diff.array().square() * inv_var.array() - 1.0) + dent[j];
    }
    pi.net.backward(b.tape, G, g_net);
}

void backward_batch(const neural::CategoricalPolicy& pi, const PolicyBatch& b, const Mat& A, const Vec& dlp,
                    const Vec& dent, neural::MlpGrad& g_net, Vec& /*g_log_std*/) {
    Mat G(b.out.rows(), b.out.cols());
    for (Eigen::Index j = 0; j < b.out.cols(); ++j) {
        const Vec p = neural::softmax(b.out.col(j));
        const auto k = static_cast<Eigen::Index>(A(0, j));
        Vec g = -dlp[j] * p;
        g[k] += dlp[j];
        const double h = b.entropy[j];
        for (Eigen::Index i = 0; i < p.size(); ++i) {
            if (p[i] > 0.0) g[i] -= dent[j] * p[i] * (std::log(p[i]) + h);
        }
        G.col(j) = g;
    }
    pi.net.backward(b.tape, G, g_net);
}

void surrogate_gradients(const Vec& lp_new, const Vec& lp_old, const Vec& adv, const Vec& entropy,
                         const PpoConfig& cfg, Vec& dlp, Vec& dent, UpdateStats* stats) {
    const Eigen::Index n = lp_new.size();
    const double inv_n = 1.0 / static_cast<double>(n);
    dlp.resize(n);
    dent = Vec::Constant(n, -cfg.entropy_coef * inv_n);
    double loss = 0.0;
    double kl = 0.0;
    int clipped = 0;
    for (Eigen::Index j = 0; j < n; ++j) {
        const double ratio = std::exp(lp_new[j] - lp_old[j]);
        const double rc = std::clamp(ratio, 1.0 - cfg.clip, 1.0 + cfg.clip);
        const double s1 = ratio * adv[j];
        const double s2 = rc * adv[j];
        loss -= std::min(s1, s2) * inv_n;
        dlp[j] = s1 <= s2 ? -adv[j] * ratio * inv_n : 0.0;
        if (s1 > s2) ++clipped;
        kl += (lp_old[j] - lp_new[j]) * inv_n;
    }
    if (stats) {
        stats->policy_loss += loss - cfg.entropy_coef * entropy.mean();
        stats->approx_kl += kl;
        stats->clip_fraction += clipped * inv_n;
        stats->entropy += entropy.mean();
    }
}

namespace {

std::vector<std::span<double>> actor_params(neural::GaussianPolicy& pi) {
    auto p = pi.net.parameters();
    p.emplace_back(pi.log_std.data(), static_cast<std::size_t>(pi.log_std.size()));
    return p;
}

std::vector<std::span<double>> actor_params(neural::CategoricalPolicy& pi) { return pi.net.parameters(); }

std::vector<std::span<double>> actor_grads(const neural::GaussianPolicy&, neural::MlpGrad& g, Vec& g_ls) {
    auto v = neural::Mlp::views(g);
    v.emplace_back(g_ls.data(), static_cast<std::size_t>(g_ls.size()));
    return v;
}

std::vector<std::span<double>> actor_grads(const neural::CategoricalPolicy&, neural::MlpGrad& g, Vec&) {
    return neural::Mlp::views(g);
}

int log_std_size(const neural::GaussianPolicy& pi) { return static_cast<int>(pi.log_std.size()); }
int log_std_size(const neural::CategoricalPolicy&) { return 0; }

void apply(neural::Adam& opt, const PpoConfig& cfg, double lr, const std::vector<std::span<double>>& p,
           const std::vector<std::span<double>>& g) {
    if (cfg.optimizer == OptimizerKind::Adam) {
        opt.lr = lr;
        opt.step(p, g);
    } else {
        neural::sgd_step(p, g, lr);
    }
}

}  // namespace

template <class Policy>
Agent<Policy>::Agent(Policy pi, neural::Critic c, const PpoConfig& cfg)
    : policy(std::move(pi)), critic(std::move(c)), actor_opt(cfg.lr), critic_opt(cfg.value_lr()), pool(cfg.horizon) {}

template <class Policy>
ActResult Agent<Policy>::act(const Vec& x, Rng& rng) const {
    auto s = policy.sample(x, rng);
    ActResult r;
    if constexpr (std::is_same_v<Policy, neural::CategoricalPolicy>) {
        r.action = Vec::Constant(1, static_cast<double>(s.action));
    } else {
        r.action = s.action;
    }
    r.log_prob = s.log_prob;
    r.entropy = s.entropy;
    r.value = critic.value(x);
    return r;
}

template <class Policy>
UpdateStats Agent<Policy>::update(const PpoConfig& cfg, Rng& rng) {
    cfg.validate();
    if (pool.empty()) throw EmptyPool("PPO update on an empty pool");
    const auto& items = pool.items();
    const int n = pool.size();
    const Eigen::Index in = items[0].state.size();
    const Eigen::Index ad = items[0].action.size();

    Mat X(in, n), Xn(in, n), A(ad, n);
    std::vector<double> rewards(n), values(n), next_values(n);
    std::vector<bool> cut(n);
    Vec lp_old(n);
    for (int t = 0; t < n; ++t) {
        X.col(t) = items[t].state;
        Xn.col(t) = items[t].next_state;
        A.col(t) = items[t].action;
        rewards[t] = items[t].reward;
        values[t] = items[t].value;
        lp_old[t] = items[t].log_prob;
        cut[t] = items[t].done || items[t].truncated || t + 1 == n;
    }
    const Mat vn = critic.net.forward_batch(Xn);
    for (int t = 0; t < n; ++t) next_values[t] = items[t].done ? 0.0 : vn(0, t);
    GaeResult g = gae(rewards, values, next_values, cut, cfg.gamma, cfg.gae_lambda);

    Vec adv = Eigen::Map<Vec>(g.advantages.data(), n);
    const Vec ret = Eigen::Map<Vec>(g.returns.data(), n);
    if (cfg.normalize_advantages && n > 1) {
        const double mean = adv.mean();
        const double sd = std::sqrt((adv.array() - mean).square().sum() / n);
        adv = (adv.array() - mean) / (sd + 1e-8);
    }

    UpdateStats stats;
    stats.mean_reward = std::accumulate(rewards.begin(), rewards.end(), 0.0) / n;

    std::vector<int> order(n);
    neural::MlpGrad g_actor = policy.net.make_grad();
    neural::MlpGrad g_critic = critic.net.make_grad();
    Vec g_ls = Vec::Zero(log_std_size(policy));
    auto a_params = actor_params(policy);
    auto a_grads = actor_grads(policy, g_actor, g_ls);
    auto c_params = critic.net.parameters();
    auto c_grads = neural::Mlp::views(g_critic);

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        std::iota(order.begin(), order.end(), 0);
        std::shuffle(order.begin(), order.end(), rng.engine());
        for (int start = 0; start < n; start += cfg.minibatch) {
            const int m = std::min(cfg.minibatch, n - start);
            Mat Xb(in, m), Ab(ad, m);
            Vec lpb(m), advb(m), retb(m);
            for (int j = 0; j < m; ++j) {
                const int k = order[start + j];
                Xb.col(j) = X.col(k);
                Ab.col(j) = A.col(k);
                lpb[j] = lp_old[k];
                advb[j] = adv[k];
                retb[j] = ret[k];
            }
            PolicyBatch pb = evaluate_batch(policy, Xb, Ab);
            Vec dlp, dent;
            surrogate_gradients(pb.log_prob, lpb, advb, pb.entropy, cfg, dlp, dent, &stats);
            g_actor.zero();
            g_ls.setZero();
            backward_batch(policy, pb, Ab, dlp, dent, g_actor, g_ls);
            apply(actor_opt, cfg, cfg.lr, a_params, a_grads);

            neural::Tape tape;
            const Mat v = critic.net.forward_batch(Xb, &tape);
            const Vec diff = v.row(0).transpose() - retb;
            stats.value_loss += cfg.value_coef * diff.squaredNorm() / m;
            g_critic.zero();
            critic.net.backward(tape, (2.0 * cfg.value_coef / m) * diff.transpose(), g_critic);
            apply(critic_opt, cfg, cfg.value_lr(), c_params, c_grads);
            ++stats.gradient_steps;
        }
    }
    const double k = stats.gradient_steps;
    stats.policy_loss /= k;
    stats.value_loss /= k;
    stats.entropy /= k;
    stats.approx_kl /= k;
    stats.clip_fraction /= k;
    pool.clear();
    return stats;
}

template class Agent<neural::GaussianPolicy>;
template class Agent<neural::CategoricalPolicy>;

}  // namespace irrig::ppo
