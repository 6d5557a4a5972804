#include <doctest.h>

#include <cmath>

#include "irrig/ppo/ppo.hpp"

using namespace irrig;
using namespace irrig::ppo;

namespace {

// O(T^2) double sum: A_t = sum_{l>=0} (gamma lambda)^l delta_{t+l}.
std::vector<double> brute_gae(const std::vector<double>& r, const std::vector<double>& v, double boot, double g,
                              double lam) {
    const std::size_t n = r.size();
    std::vector<double> out(n, 0.0);
    for (std::size_t t = 0; t < n; ++t) {
        for (std::size_t k = t; k < n; ++k) {
            const double next = k + 1 < n ? v[k + 1] : boot;
            out[t] += std::pow(g * lam, static_cast<double>(k - t)) * (r[k] + g * next - v[k]);
        }
    }
    return out;
}

}  // namespace

TEST_CASE("gae reductions") {
    const std::vector<double> r{1.0, -2.0, 0.5}, v{0.3, 0.1, -0.4};
    const auto td = gae(r, v, 0.7, 0.99, 0.0);
    CHECK(td.advantages[0] == doctest::Approx(1.0 + 0.99 * 0.1 - 0.3));
    CHECK(td.advantages[1] == doctest::Approx(-2.0 + 0.99 * -0.4 - 0.1));
    CHECK(td.advantages[2] == doctest::Approx(0.5 + 0.99 * 0.7 + 0.4));

    const std::vector<double> r1{3.0}, v1{1.25};
    const auto one = gae(r1, v1, 0.0, 0.99, 0.97);
    CHECK(one.advantages[0] == doctest::Approx(3.0 - 1.25));
    CHECK(one.returns[0] == doctest::Approx(3.0));

    CHECK_THROWS_AS(gae(r, v1, 0.0, 0.99, 0.97), LengthMismatch);
}

TEST_CASE("property: gae matches the brute-force double sum") {
    Rng rng(1);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t n = 1 + rng.index(30);
        std::vector<double> r(n), v(n);
        for (std::size_t i = 0; i < n; ++i) {
            r[i] = rng.normal(0, 3);
            v[i] = rng.normal(0, 3);
        }
        const double boot = rng.normal();
        const auto got = gae(r, v, boot, 0.99, 0.97);
        const auto want = brute_gae(r, v, boot, 0.99, 0.97);
        for (std::size_t i = 0; i < n; ++i) {
            CHECK(std::fabs(got.advantages[i] - want[i]) <= 1e-10);
            CHECK(got.returns[i] == doctest::Approx(want[i] + v[i]).epsilon(1e-12));
        }
    }
}

TEST_CASE("clipped surrogate") {
    const std::vector<double> a{1.0, -2.0, 0.5};
    CHECK(clipped_policy_loss(a, a, std::vector<double>{2.0, -1.0, 0.5}, 0.25) ==
          doctest::Approx(-(2.0 - 1.0 + 0.5) / 3.0));
    const std::vector<double> old{0.0};
    const std::vector<double> up{std::log(1.5)}, down{std::log(0.5)};
    CHECK(clipped_policy_loss(up, old, std::vector<double>{2.0}, 0.25) == doctest::Approx(-1.25 * 2.0));
    CHECK(clipped_policy_loss(down, old, std::vector<double>{-2.0}, 0.25) == doctest::Approx(-0.75 * -2.0));
    // Favourable direction is not clipped.
    CHECK(clipped_policy_loss(down, old, std::vector<double>{2.0}, 0.25) == doctest::Approx(-0.5 * 2.0));
}

namespace {

template <class Policy>
double total_loss(const Policy& pi, const Mat& X, const Mat& A, const Vec& lp_old, const Vec& adv,
                  const PpoConfig& cfg) {
    const PolicyBatch b = evaluate_batch(pi, X, A);
    std::vector<double> ln(b.log_prob.data(), b.log_prob.data() + b.log_prob.size());
    std::vector<double> lo(lp_old.data(), lp_old.data() + lp_old.size());
    std::vector<double> av(adv.data(), adv.data() + adv.size());
    return clipped_policy_loss(ln, lo, av, cfg.clip) - cfg.entropy_coef * b.entropy.mean();
}

template <class Policy>
void check_loss_gradient(Policy& pi, const Mat& X, const Mat& A, Rng& rng) {
    PpoConfig cfg;
    cfg.entropy_coef = 0.05;
    const Eigen::Index n = X.cols();
    const PolicyBatch b0 = evaluate_batch(pi, X, A);
    Vec lp_old(n), adv(n);
    for (Eigen::Index j = 0; j < n; ++j) {
        // Ratios at 1.1, 0.5 or 2 keep every sample away from the clip kinks.
        const double shift[3] = {std::log(1.1), std::log(0.5), std::log(2.0)};
        lp_old[j] = b0.log_prob[j] - shift[j % 3];
        adv[j] = rng.normal();
    }
    Vec dlp, dent;
    surrogate_gradients(b0.log_prob, lp_old, adv, b0.entropy, cfg, dlp, dent, nullptr);
    neural::MlpGrad g = pi.net.make_grad();
    Vec g_ls = Vec::Zero(0);
    if constexpr (std::is_same_v<Policy, neural::GaussianPolicy>) g_ls = Vec::Zero(pi.log_std.size());
    backward_batch(pi, b0, A, dlp, dent, g, g_ls);

    auto params = pi.net.parameters();
    auto grads = neural::Mlp::views(g);
    if constexpr (std::is_same_v<Policy, neural::GaussianPolicy>) {
        params.emplace_back(pi.log_std.data(), pi.log_std.size());
        grads.emplace_back(g_ls.data(), g_ls.size());
    }
    const double h = 1e-5;
    for (std::size_t k = 0; k < params.size(); ++k) {
        for (std::size_t i = 0; i < params[k].size(); ++i) {
            const double keep = params[k][i];
            params[k][i] = keep + h;
            const double lp = total_loss(pi, X, A, lp_old, adv, cfg);
            params[k][i] = keep - h;
            const double lm = total_loss(pi, X, A, lp_old, adv, cfg);
            params[k][i] = keep;
            const double fd = (lp - lm) / (2 * h);
            CHECK(std::fabs(grads[k][i] - fd) <= 1e-4 * std::max(std::fabs(fd), 1e-4));
        }
    }
}

}  // namespace

TEST_CASE("property: loss gradients match finite differences") {
    Rng rng(2);
    for (int trial = 0; trial < 5; ++trial) {
        neural::GaussianPolicy g(3, 2, {6, 5}, 0.4, rng);
        for (auto& l : g.net.layers()) l.W *= 30.0;  // larger outputs than the 0.01 init
        Mat X = Mat::Random(3, 7), A = Mat::Random(2, 7);
        check_loss_gradient(g, X, A, rng);

        neural::CategoricalPolicy c(3, 2, {6, 5}, rng);
        for (auto& l : c.net.layers()) l.W *= 50.0;
        Mat Ac(1, 7);
        for (int j = 0; j < 7; ++j) Ac(0, j) = static_cast<double>(rng.index(2));
        check_loss_gradient(c, X, Ac, rng);
    }
}

TEST_CASE("unclipped single epoch equals a vanilla policy-gradient step") {
    Rng rng(3);
    PpoConfig cfg;
    cfg.clip = 1e12;
    cfg.entropy_coef = 0.0;
    cfg.epochs = 1;
    cfg.minibatch = 64;
    cfg.lr = 1e-3;
    cfg.optimizer = OptimizerKind::Sgd;
    cfg.horizon = 20;
    GaussianAgent agent(neural::GaussianPolicy(3, 1, {8, 8}, 0.3, rng), neural::Critic(3, {8, 8}, rng), cfg);
    for (auto& l : agent.policy.net.layers()) l.W *= 20.0;

    Mat X(3, 20), A(1, 20);
    Vec adv(20);
    for (int t = 0; t < 20; ++t) {
        Transition tr;
        tr.state = Vec::Random(3);
        const auto act = agent.act(tr.state, rng);
        tr.action = act.action;
        tr.log_prob = act.log_prob;
        tr.value = act.value;
        tr.reward = rng.normal();
        tr.next_state = Vec::Random(3);
        tr.done = true;
        X.col(t) = tr.state;
        A.col(t) = tr.action;
        adv[t] = tr.reward - tr.value;
        agent.pool.push(tr);
    }
    adv = (adv.array() - adv.mean()) / (std::sqrt((adv.array() - adv.mean()).square().mean()) + 1e-8);

    // Oracle: finite-difference gradient of -mean(A * log pi(a|s)) at the pre-update parameters.
    neural::GaussianPolicy before = agent.policy;
    auto params = before.net.parameters();
    params.emplace_back(before.log_std.data(), 1);
    auto pg_loss = [&]() { return -(evaluate_batch(before, X, A).log_prob.cwiseProduct(adv)).mean(); };
    std::vector<std::vector<double>> expected;
    for (auto& blk : params) {
        expected.emplace_back();
        for (double& p : blk) {
            const double keep = p, h = 1e-6;
            p = keep + h;
            const double lp = pg_loss();
            p = keep - h;
            const double lm = pg_loss();
            p = keep;
            expected.back().push_back(keep - cfg.lr * (lp - lm) / (2 * h));
        }
    }
    agent.update(cfg, rng);
    auto after = agent.policy.net.parameters();
    after.emplace_back(agent.policy.log_std.data(), 1);
    for (std::size_t k = 0; k < after.size(); ++k) {
        for (std::size_t i = 0; i < after[k].size(); ++i) CHECK(std::fabs(after[k][i] - expected[k][i]) <= 1e-8);
    }
    CHECK(agent.pool.empty());
}

TEST_CASE("two-armed bandit: greedy picks the rewarding arm within 500 episodes") {
    Rng rng(4);
    PpoConfig cfg;
    cfg.lr = 3e-4;
    cfg.horizon = 30;
    CategoricalAgent agent(neural::CategoricalPolicy(1, 2, {64, 64}, rng), neural::Critic(1, {64, 64}, rng), cfg);
    const Vec s = Vec::Ones(1);
    int solved_at = -1;
    for (int ep = 0; ep < 500; ++ep) {
        for (int t = 0; t < cfg.horizon; ++t) {
            const auto a = agent.act(s, rng);
            agent.pool.push({s, a.action, a.action[0] == 1.0 ? 1.0 : 0.0, s, a.log_prob, a.value, true, false});
        }
        agent.update(cfg, rng);
        if (agent.policy.greedy(s) == 1 && agent.policy.probs(s)[1] > 0.9) {
            solved_at = ep;
            break;
        }
    }
    MESSAGE("bandit solved at episode " << solved_at);
    CHECK(solved_at >= 0);
}

TEST_CASE("critic converges to r / (1 - gamma) on a constant reward stream") {
    Rng rng(5);
    PpoConfig cfg;
    cfg.lr = 1e-3;
    cfg.gamma = 0.9;
    cfg.entropy_coef = 0.0;
    GaussianAgent agent(neural::GaussianPolicy(1, 1, {16, 16}, 0.1, rng), neural::Critic(1, {16, 16}, rng), cfg);
    const Vec s = Vec::Ones(1);
    for (int ep = 0; ep < 1500; ++ep) {
        for (int t = 0; t < cfg.horizon; ++t) {
            const auto a = agent.act(s, rng);
            agent.pool.push({s, a.action, 1.0, s, a.log_prob, a.value, false, t + 1 == cfg.horizon});
        }
        agent.update(cfg, rng);
    }
    CHECK(agent.value(s) == doctest::Approx(10.0).epsilon(0.05));
}

TEST_CASE("update is deterministic given seed and pool") {
    auto run = [] {
        Rng rng(6);
        PpoConfig cfg;
        GaussianAgent agent(neural::GaussianPolicy(4, 1, {64, 64}, 0.006, rng), neural::Critic(4, {64, 64}, rng),
                            cfg);
        auto draw = [&] {
            Vec v(4);
            for (int i = 0; i < 4; ++i) v[i] = rng.uniform(-1, 1);
            return v;
        };
        for (int t = 0; t < 30; ++t) {
            const Vec s = draw();
            const auto a = agent.act(s, rng);
            agent.pool.push({s, a.action, rng.normal(), draw(), a.log_prob, a.value, false, false});
        }
        agent.update(cfg, rng);
        return agent.policy.net.forward(Vec::Ones(4));
    };
    CHECK(run() == run());
}

TEST_CASE("pool and config contracts") {
    Rng rng(7);
    PpoConfig cfg;
    CHECK(cfg.lr == 1e-5);
    CHECK(cfg.horizon == 30);
    CHECK(cfg.minibatch == 64);
    CHECK(cfg.epochs == 20);
    CHECK(cfg.gamma == 0.99);
    CHECK(cfg.gae_lambda == 0.97);
    CHECK(cfg.clip == 0.25);
    CHECK(cfg.entropy_coef == 0.01);
    GaussianAgent agent(neural::GaussianPolicy(2, 1, {4}, 0.1, rng), neural::Critic(2, {4}, rng), cfg);
    CHECK_THROWS_AS(agent.update(cfg, rng), EmptyPool);
    Transition bad{Vec::Zero(2), Vec::Zero(1), std::nan(""), Vec::Zero(2), 0.0, 0.0, false, false};
    CHECK_THROWS_AS(agent.pool.push(bad), NumericalError);
    PpoConfig broken;
    broken.gamma = 1.5;
    CHECK_THROWS_AS(broken.validate(), InvalidArgument);
}
