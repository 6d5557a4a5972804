#pragma once

#include <span>
#include <vector>

namespace irrig::neural {

/// Adam over a fixed list of parameter blocks; gradient blocks must match in order and size.
class Adam {
public:
    explicit Adam(double lr = 1e-5, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);

    void step(const std::vector<std::span<double>>& params, const std::vector<std::span<double>>& grads);
    void reset();

    double lr;
    double beta1;
    double beta2;
    double eps;
    long long t() const { return t_; }

private:
    std::vector<std::vector<double>> m_;
    std::vector<std::vector<double>> v_;
    long long t_ = 0;
};

/// Plain gradient descent: p -= lr * g.
void sgd_step(const std::vector<std::span<double>>& params, const std::vector<std::span<double>>& grads, double lr);

/// Global L2 norm of a set of gradient blocks.
double global_norm(const std::vector<std::span<double>>& grads);

}  // namespace irrig::neural
