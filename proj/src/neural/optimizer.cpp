#include "irrig/neural/optimizer.hpp"

#include <cmath>

#include "irrig/neural/mlp.hpp"

namespace irrig::neural {

Adam::Adam(double lr_, double beta1_, double beta2_, double eps_) : lr(lr_), beta1(beta1_), beta2(beta2_), eps(eps_) {}

void Adam::reset() {
    m_.clear();
    v_.clear();
    t_ = 0;
}

void Adam::step(const std::vector<std::span<double>>& params, const std::vector<std::span<double>>& grads) {
    if (params.size() != grads.size()) throw ShapeMismatch("adam: parameter and gradient block counts differ");
    if (m_.empty()) {
        for (const auto& p : params) {
            m_.emplace_back(p.size(), 0.0);
            v_.emplace_back(p.size(), 0.0);
        }
    }
    if (m_.size() != params.size()) throw ShapeMismatch("adam: parameter layout changed");
    ++t_;
    const double c1 = 1.0 - std::pow(beta1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(beta2, static_cast<double>(t_));
    for (std::size_t k = 0; k < params.size(); ++k) {
        auto p = params[k];
        auto g = grads[k];
        if (p.size() != g.size() || p.size() != m_[k].size()) throw ShapeMismatch("adam: block size mismatch");
        for (std::size_t i = 0; i < p.size(); ++i) {
            m_[k][i] = beta1 * m_[k][i] + (1.0 - beta1) * g[i];
            v_[k][i] = beta2 * v_[k][i] + (1.0 - beta2) * g[i] * g[i];
            p[i] -= lr * (m_[k][i] / c1) / (std::sqrt(v_[k][i] / c2) + eps);
        }
    }
}

void sgd_step(const std::vector<std::span<double>>& params, const std::vector<std::span<double>>& grads, double lr) {
    if (params.size() != grads.size()) throw ShapeMismatch("sgd: block counts differ");
    for (std::size_t k = 0; k < params.size(); ++k) {
        if (params[k].size() != grads[k].size()) throw ShapeMismatch("sgd: block size mismatch");
        for (std::size_t i = 0; i < params[k].size(); ++i) params[k][i] -= lr * grads[k][i];
    }
}

double global_norm(const std::vector<std::span<double>>& grads) {
    double s = 0.0;
    for (const auto& g : grads) {
        for (double x : g) s += x * x;
    }
    return std::sqrt(s);
}

}  // namespace irrig::neural
