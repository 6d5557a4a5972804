#pragma once

#include <span>
#include <vector>

#include "irrig/mpc/surrogate.hpp"

namespace irrig::mpc {

class ForecastTooShort : public InvalidArgument {
public:
    using InvalidArgument::InvalidArgument;
};

class EmptySequence : public InvalidArgument {
public:
    using InvalidArgument::InvalidArgument;
};

/// Per-zone amount problem under a fixed decision sequence c.
struct MpcProblem {
    int np = 14;
    std::vector<int> c;  ///< np binding decisions
    double theta0 = 0.0;
    double nu_lower = 0.0;
    double nu_upper = 0.0;
    double q_upper = 1.2e6;
    double q_lower = 1.0e6;
    double r_u = 9000.0;
    double u_min = 0.0;
    double u_max = 0.030;
    std::vector<DayInput> history;   ///< days before the horizon, oldest first (u included)
    std::vector<DayInput> forecast;  ///< >= np days; u is ignored

    void validate() const;
    double lower(int k) const { return c[k] * u_min; }
    double upper(int k) const { return c[k] * u_max; }
};

struct MpcOptions {
    int restarts = 8;
    int iterations = 500;
    double initial_step = 1e-4;
    double min_step = 1e-14;
    std::uint64_t seed = 1;
    kernels::Exec exec = kernels::Exec::Serial;
};

struct MpcSolution {
    std::vector<double> u;
    std::vector<double> theta;        ///< predicted theta_{k+1}
    std::vector<double> slack_upper;  ///< max(0, theta - nu_upper)
    std::vector<double> slack_lower;  ///< max(0, nu_lower - theta)
    double objective = 0.0;
    int iterations = 0;
    int best_restart = 0;
};

/// Objective with the slacks at their optimal values; fills the trajectory and the gradient if asked.
double objective(const MpcProblem& p, const Surrogate& s, std::span<const double> u,
                 std::vector<double>* theta = nullptr, std::vector<double>* grad = nullptr);

/// Box projection; components with c = 0 become exactly zero.
void project(const MpcProblem& p, std::vector<double>& u);

/// Projected gradient with an adaptive step from `start`; only improving steps are accepted.
/// `trace` receives the objective after every accepted step.
MpcSolution descend(const MpcProblem& p, const Surrogate& s, std::vector<double> start, const MpcOptions& options,
                    std::vector<double>* trace = nullptr);

/// Multi-start solve; restart 0 uses `warm_start` (clipped into the box) when given.
MpcSolution solve(const MpcProblem& p, const Surrogate& s, const MpcOptions& options = {},
                  const std::vector<double>* warm_start = nullptr);

/// First element of the optimized sequence.
double receding_apply(std::span<const double> u);

}  // namespace irrig::mpc
