#include "irrig/soilsim/column.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <limits>

namespace irrig::soilsim {

namespace {
constexpr double kVolumeResidualTol = 1e-14;  // m of water per inner step
constexpr double kMinHeadStep = 0.5;           // m
constexpr int kMaxLineSearch = 6;
}  // namespace

void ColumnGrid::validate() const {
    if (!(nodes >= 3 && depth > 0.0 && std::isfinite(depth))) {
        throw InvalidArgument("column grid requires at least 3 nodes and positive depth");
    }
}

void DailyForcing::validate(const ColumnGrid& grid) const {
    const bool ok = u_irr >= 0.0 && precip >= 0.0 && et0 >= 0.0 && kc >= 0.0 && zr > 0.0 &&
                    zr <= grid.depth + 1e-12 && ev_fraction >= 0.0 && ev_fraction <= 1.0 &&
                    std::isfinite(u_irr + precip + et0 + kc + zr);
    if (!ok) throw InvalidArgument("invalid daily forcing");
}

void StressThresholds::validate() const {
    if (!(wilting < optimal_low && optimal_low <= optimal_high && optimal_high <= anaerobic)) {
        throw InvalidArgument("stress thresholds must satisfy wilting < optimal_low <= optimal_high <= anaerobic");
    }
}

double stress_factor(double theta, const StressThresholds& t) {
    if (theta >= t.anaerobic || theta <= t.wilting) return 0.0;
    if (theta > t.optimal_high) return (t.anaerobic - theta) / (t.anaerobic - t.optimal_high);
    if (theta < t.optimal_low) return (theta - t.wilting) / (t.optimal_low - t.wilting);
    return 1.0;
}

NonConvergence::NonConvergence(int step, double residual)
    : NumericalError("Newton iteration did not converge at inner step " + std::to_string(step) +
                     " (residual " + std::to_string(residual) + ")"),
      step_index(step),
      residual_norm(residual) {}

std::vector<double> root_uptake(const ColumnState& state, const DailyForcing& forcing, const ColumnGrid& grid,
                                const HydraulicParams& phi, const StressThresholds& stress) {
    std::vector<double> sink(state.size(), 0.0);
    const double tp = (1.0 - forcing.ev_fraction) * forcing.kc * forcing.et0 / kSecondsPerDay;
    if (tp <= 0.0) return sink;
    double rooted = 0.0;
    const double tol = 1e-9 * grid.dz();
    for (int i = 0; i < grid.nodes; ++i) {
        if (grid.node_depth(i) <= forcing.zr + tol) rooted += grid.control_volume(i);
    }
    for (int i = 0; i < grid.nodes; ++i) {
        if (grid.node_depth(i) > forcing.zr + tol) break;
        sink[i] = tp / rooted * stress_factor(water_content(state.psi[i], phi), stress);
    }
    return sink;
}

std::vector<double> water_profile(const ColumnState& state, const HydraulicParams& phi) {
    std::vector<double> theta(state.size());
    std::transform(state.psi.begin(), state.psi.end(), theta.begin(),
                   [&](double psi) { return water_content(psi, phi); });
    return theta;
}

std::vector<double> observe(const ColumnState& state, const HydraulicParams& phi, double output_std, Rng& rng) {
    std::vector<double> y = water_profile(state, phi);
    if (output_std > 0.0) {
        for (double& v : y) v = std::clamp(v + output_std * rng.normal(), phi.theta_r, phi.theta_s);
    }
    return y;
}

void apply_process_noise(ColumnState& state, const HydraulicParams& phi, double process_std, Rng& rng) {
    if (process_std <= 0.0) return;
    for (double& psi : state.psi) {
        const double perturbed = water_content(psi, phi) + process_std * rng.normal();
        if (perturbed >= phi.theta_s) {
            psi = std::max(psi, 0.0);
        } else {
            psi = head_from_content(perturbed, phi);
        }
    }
}

ColumnState uniform_state(double theta, const HydraulicParams& phi, const ColumnGrid& grid) {
    return ColumnState{std::vector<double>(grid.nodes, head_from_content(theta, phi))};
}

struct RichardsColumn::Workspace {
    std::vector<double> psi_old, storage_old, sink;
    std::vector<double> storage, capacity, K, dK;
    std::vector<double> residual, lower, diag, upper, delta, trial;

    explicit Workspace(std::size_t n)
        : psi_old(n), storage_old(n), sink(n), storage(n), capacity(n), K(n), dK(n), residual(n), lower(n),
          diag(n), upper(n), delta(n), trial(n) {}
};

RichardsColumn::RichardsColumn(HydraulicParams phi, ColumnGrid grid, StressThresholds stress, SolverOptions options)
    : phi_(phi), grid_(grid), stress_(stress), options_(options) {
    phi_.validate();
    grid_.validate();
    if (options_.inner_steps < 1 || options_.max_iterations < 1 || options_.max_halvings < 0) {
        throw InvalidArgument("invalid solver options");
    }
    theta_air_dry_ = water_content(kAirDryHead, phi_);
    weights_.resize(grid_.nodes);
    for (int i = 0; i < grid_.nodes; ++i) weights_[i] = grid_.control_volume(i);
}

double RichardsColumn::total_water(const ColumnState& state) const {
    double total = 0.0;
    for (int i = 0; i < grid_.nodes; ++i) total += weights_[i] * evaluate(state.psi[i], phi_).storage;
    return total;
}

ColumnState RichardsColumn::step_day(const ColumnState& state, const DailyForcing& forcing, double process_std,
                                     Rng& rng, DayBalance* balance) const {
    ColumnState next = advance_day(state, forcing, balance);
    apply_process_noise(next, phi_, process_std, rng);
    return next;
}

ColumnState RichardsColumn::advance_day(const ColumnState& state, const DailyForcing& forcing,
                                        DayBalance* balance) const {
    if (state.size() != static_cast<std::size_t>(grid_.nodes)) {
        throw LengthMismatch("column state has " + std::to_string(state.size()) + " nodes, grid has " +
                             std::to_string(grid_.nodes));
    }
    for (double psi : state.psi) {
        if (!std::isfinite(psi)) throw NonFiniteState("non-finite head in column state");
    }
    forcing.validate(grid_);

    Workspace ws(state.size());
    DayBalance acc;
    std::vector<double> psi = state.psi;
    const double dt = kSecondsPerDay / options_.inner_steps;
    for (int step = 0; step < options_.inner_steps; ++step) {
        advance_interval(psi, dt, forcing, 0, step, ws, acc);
    }
    for (double p : psi) {
        if (!std::isfinite(p)) throw NonFiniteState("non-finite head after daily step");
    }
    if (balance != nullptr) *balance = acc;
    return ColumnState{std::move(psi)};
}

void RichardsColumn::advance_interval(std::vector<double>& psi, double dt, const DailyForcing& forcing, int depth,
                                      int step_index, Workspace& ws, DayBalance& acc) const {
    std::vector<double> trial = psi;
    DayBalance trial_acc = acc;
    double residual = 0.0;
    if (newton_step(trial, dt, forcing, ws, trial_acc, residual)) {
        psi = std::move(trial);
        acc = trial_acc;
        return;
    }
    if (depth >= options_.max_halvings) throw NonConvergence(step_index, residual);
    acc.halvings += 1;
    advance_interval(psi, 0.5 * dt, forcing, depth + 1, step_index, ws, acc);
    advance_interval(psi, 0.5 * dt, forcing, depth + 1, step_index, ws, acc);
}

bool RichardsColumn::newton_step(std::vector<double>& psi, double dt, const DailyForcing& forcing, Workspace& ws,
                                 DayBalance& acc, double& residual_norm) const {
    const int n = grid_.nodes;
    const double dz = grid_.dz();

    for (int i = 0; i < n; ++i) {
        ws.psi_old[i] = psi[i];
        ws.storage_old[i] = evaluate(psi[i], phi_).storage;
    }

    // Sink and surface evaporation are lagged at the start of the step.
    if (options_.root_uptake) {
        ws.sink = root_uptake(ColumnState{ws.psi_old}, forcing, grid_, phi_, stress_);
    } else {
        std::fill(ws.sink.begin(), ws.sink.end(), 0.0);
    }
    double infiltration = 0.0, runoff = 0.0, evap_demand = 0.0;
    if (options_.top == TopBoundary::Flux) {
        const double supply = (forcing.u_irr + forcing.precip) / kSecondsPerDay;
        infiltration = std::min(supply, phi_.Ks);
        runoff = supply - infiltration;
        evap_demand = forcing.ev_fraction * forcing.kc * forcing.et0 / kSecondsPerDay;
    }
    // Surface evaporation tapers linearly to zero between the wilting content and
    // air-dry, evaluated implicitly so a drying surface can always meet it.
    const double taper_top = stress_.wilting > theta_air_dry_ ? stress_.wilting
                                                              : theta_air_dry_ + 0.05 * (phi_.theta_s - phi_.theta_r);
    const double taper_span = taper_top - theta_air_dry_;
    auto taper = [&](double theta, double capacity, double& dtaper) {
        if (taper_span <= 0.0) {
            dtaper = 0.0;
            return 1.0;
        }
        const double t = (std::min(theta, phi_.theta_s) - theta_air_dry_) / taper_span;
        if (t <= 0.0 || t >= 1.0) {
            dtaper = 0.0;
            return std::clamp(t, 0.0, 1.0);
        }
        dtaper = capacity / taper_span;
        return t;
    };
    const bool drains = options_.bottom == BottomBoundary::FreeDrainage;

    // Residual and tridiagonal Jacobian at `h`; returns the max-norm residual.
    auto assemble = [&](const std::vector<double>& h) {
        for (int i = 0; i < n; ++i) {
            const Constitutive c = evaluate(h[i], phi_);
            ws.storage[i] = c.storage;
            ws.capacity[i] = c.capacity;
            ws.K[i] = c.K;
            ws.dK[i] = c.dK;
        }
        for (int i = 0; i < n; ++i) {
            ws.residual[i] = weights_[i] * ((ws.storage[i] - ws.storage_old[i]) / dt + ws.sink[i]);
            ws.diag[i] = weights_[i] * ws.capacity[i] / dt;
            ws.lower[i] = 0.0;
            ws.upper[i] = 0.0;
        }
        double dtaper = 0.0;
        const double evaporation = evap_demand * taper(ws.storage[0], ws.capacity[0], dtaper);
        ws.residual[0] += evaporation - infiltration;
        ws.diag[0] += evap_demand * dtaper;
        // Interior faces: downward Darcy flux q = Kbar * (1 - dpsi/dz).
        for (int i = 0; i + 1 < n; ++i) {
            const double kbar = 0.5 * (ws.K[i] + ws.K[i + 1]);
            const double grad = (h[i + 1] - h[i]) / dz;
            const double q = kbar * (1.0 - grad);
            const double dq_di = 0.5 * ws.dK[i] * (1.0 - grad) + kbar / dz;
            const double dq_dj = 0.5 * ws.dK[i + 1] * (1.0 - grad) - kbar / dz;
            ws.residual[i] += q;
            ws.residual[i + 1] -= q;
            ws.diag[i] += dq_di;
            ws.upper[i] += dq_dj;
            ws.lower[i + 1] -= dq_di;
            ws.diag[i + 1] -= dq_dj;
        }
        if (drains) {
            ws.residual[n - 1] += ws.K[n - 1];
            ws.diag[n - 1] += ws.dK[n - 1];
        }
        double norm = 0.0;
        for (int i = 0; i < n; ++i) norm = std::max(norm, std::abs(ws.residual[i]));
        return std::isfinite(norm) ? norm : std::numeric_limits<double>::infinity();
    };

    int iter = 0;
    bool converged = false;
    std::vector<double>& trial = ws.trial;
    residual_norm = assemble(psi);
    for (; iter < options_.max_iterations && std::isfinite(residual_norm); ++iter) {
        // Very dry nodes leave the head poorly determined; a water-volume residual far below
        // the conservation tolerance is accepted as converged there.
        if (residual_norm * dt <= kVolumeResidualTol) {
            converged = true;
            break;
        }
        // Thomas algorithm on J * delta = -residual.
        for (int i = 0; i < n; ++i) ws.delta[i] = -ws.residual[i];
        for (int i = 1; i < n; ++i) {
            const double w = ws.lower[i] / ws.diag[i - 1];
            ws.diag[i] -= w * ws.upper[i - 1];
            ws.delta[i] -= w * ws.delta[i - 1];
        }
        ws.delta[n - 1] /= ws.diag[n - 1];
        for (int i = n - 2; i >= 0; --i) ws.delta[i] = (ws.delta[i] - ws.upper[i] * ws.delta[i + 1]) / ws.diag[i];

        double step = 0.0;
        for (int i = 0; i < n; ++i) {
            // Near saturation C ~ 0 and a raw Newton step can overshoot by kilometres.
            const double limit = std::max(kMinHeadStep, 0.5 * std::abs(psi[i]));
            ws.delta[i] = std::clamp(ws.delta[i], -limit, limit);
            step = std::max(step, std::abs(ws.delta[i]));
        }
        if (!std::isfinite(step)) break;

        // Backtracking on the residual norm; the last trial is taken regardless.
        double lambda = 1.0;
        double trial_norm = 0.0;
        for (int ls = 0;; ++ls) {
            for (int i = 0; i < n; ++i) trial[i] = psi[i] + lambda * ws.delta[i];
            trial_norm = assemble(trial);
            if (trial_norm < residual_norm || ls == kMaxLineSearch) break;
            lambda *= 0.5;
        }
        psi.swap(trial);
        residual_norm = trial_norm;
        if (lambda == 1.0 && step <= options_.newton_tol && std::isfinite(residual_norm)) {
            converged = true;
            ++iter;
            break;
        }
    }
    acc.newton_iterations += iter;
    if (!converged) return false;

    double uptake = 0.0;
    for (int i = 0; i < n; ++i) uptake += weights_[i] * ws.sink[i];
    acc.infiltration += infiltration * dt;
    acc.runoff += runoff * dt;
    const Constitutive top = evaluate(psi[0], phi_);
    double unused = 0.0;
    acc.evaporation += evap_demand * taper(top.storage, top.capacity, unused) * dt;
    acc.uptake += uptake * dt;
    if (drains) acc.drainage += conductivity(psi[n - 1], phi_) * dt;
    return true;
}

}  // namespace irrig::soilsim
