#include "irrig/mpc/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace irrig::mpc {

void MpcProblem::validate() const {
    if (np < 1) throw InvalidArgument("mpc horizon must be >= 1");
    if (static_cast<int>(c.size()) != np) throw LengthMismatch("decision sequence length != horizon");
    for (int v : c) {
        if (v != 0 && v != 1) throw InvalidArgument("decisions must be 0 or 1");
    }
    if (static_cast<int>(forecast.size()) < np) throw ForecastTooShort("forecast covers fewer days than the horizon");
    if (!(nu_lower < nu_upper)) throw InvalidArgument("mpc bounds require nu_lower < nu_upper");
    if (!(u_min >= 0.0 && u_min <= u_max)) throw InvalidArgument("mpc needs 0 <= u_min <= u_max");
    if (!(q_upper > 0.0 && q_lower > 0.0 && r_u >= 0.0)) throw InvalidArgument("mpc weights");
}

namespace {

std::vector<DayInput> horizon_inputs(const MpcProblem& p, std::span<const double> u) {
    std::vector<DayInput> in(p.forecast.begin(), p.forecast.begin() + p.np);
    for (int k = 0; k < p.np; ++k) in[k].u = u[k];
    return in;
}

}  // namespace

double objective(const MpcProblem& p, const Surrogate& s, std::span<const double> u, std::vector<double>* theta,
                 std::vector<double>* grad) {
    if (static_cast<int>(u.size()) != p.np) throw LengthMismatch("amount sequence length != horizon");
    const auto in = horizon_inputs(p, u);
    const std::vector<double> th = s.rollout(p.history, in, p.theta0);
    double j = 0.0;
    std::vector<double> dj(p.np);
    for (int k = 0; k < p.np; ++k) {
        const double up = std::max(0.0, th[k] - p.nu_upper);
        const double lo = std::max(0.0, p.nu_lower - th[k]);
        j += p.q_upper * up * up + p.q_lower * lo * lo + p.r_u * u[k];
        dj[k] = 2.0 * p.q_upper * up - 2.0 * p.q_lower * lo;
    }
    if (!std::isfinite(j)) throw NumericalError("surrogate evaluation produced a non-finite objective");
    if (grad) {
        *grad = s.rollout_gradient(p.history, in, p.theta0, dj);
        for (int k = 0; k < p.np; ++k) (*grad)[k] += p.r_u;
    }
    if (theta) *theta = th;
    return j;
}

void project(const MpcProblem& p, std::vector<double>& u) {
    for (int k = 0; k < p.np; ++k) u[k] = p.c[k] == 0 ? 0.0 : std::clamp(u[k], p.lower(k), p.upper(k));
}

MpcSolution descend(const MpcProblem& p, const Surrogate& s, std::vector<double> start, const MpcOptions& options,
                    std::vector<double>* trace) {
    p.validate();
    if (static_cast<int>(start.size()) != p.np) throw LengthMismatch("start length != horizon");
    project(p, start);
    std::vector<double> u = std::move(start), g, trial(p.np);
    double j = objective(p, s, u, nullptr, &g);
    double step = options.initial_step;
    int it = 0;
    // The objective is O(1e2) per unit deficit squared while u is O(1e-2), so steps live near 1e-4.
    for (; it < options.iterations && step > options.min_step; ++it) {
        for (int k = 0; k < p.np; ++k) trial[k] = u[k] - step * g[k];
        project(p, trial);
        if (trial == u) break;
        std::vector<double> gt;
        const double jt = objective(p, s, trial, nullptr, &gt);
        if (jt < j) {
            u.swap(trial);
            g.swap(gt);
            j = jt;
            step *= 1.5;
            if (trace) trace->push_back(j);
        } else {
            step *= 0.5;
        }
    }
    MpcSolution sol;
    sol.objective = objective(p, s, u, &sol.theta, nullptr);
    sol.u = std::move(u);
    sol.iterations = it;
    for (double th : sol.theta) {
        sol.slack_upper.push_back(std::max(0.0, th - p.nu_upper));
        sol.slack_lower.push_back(std::max(0.0, p.nu_lower - th));
    }
    return sol;
}

MpcSolution solve(const MpcProblem& p, const Surrogate& s, const MpcOptions& options,
                  const std::vector<double>* warm_start) {
    p.validate();
    if (options.restarts < 1) throw InvalidArgument("mpc needs at least one start");
    Rng rng(options.seed);
    std::vector<std::vector<double>> starts(options.restarts, std::vector<double>(p.np));
    for (int r = 0; r < options.restarts; ++r) {
        for (int k = 0; k < p.np; ++k) {
            if (r == 0) {
                starts[r][k] = warm_start ? (*warm_start).at(k) : 0.5 * (p.lower(k) + p.upper(k));
            } else {
                starts[r][k] = rng.uniform(p.lower(k), std::max(p.lower(k), p.upper(k)));
            }
        }
    }
    std::vector<MpcSolution> sols(options.restarts);
    kernels::for_each_index(options.exec, options.restarts,
                            [&](int r) { sols[r] = descend(p, s, starts[r], options); });
    int best = 0;
    for (int r = 1; r < options.restarts; ++r) {
        if (sols[r].objective < sols[best].objective) best = r;
    }
    MpcSolution out = std::move(sols[best]);
    out.best_restart = best;
    return out;
}

double receding_apply(std::span<const double> u) {
    if (u.empty()) throw EmptySequence("receding application of an empty sequence");
    return u.front();
}

}  // namespace irrig::mpc
