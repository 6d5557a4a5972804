#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "irrig/common/error.hpp"
#include "irrig/common/rng.hpp"
#include "irrig/soilsim/hydraulics.hpp"

namespace irrig::soilsim {

inline constexpr double kSecondsPerDay = 86400.0;
/// Surface head at which soil evaporation ceases, m.
inline constexpr double kAirDryHead = -1000.0;

/// Uniform vertical grid; node 0 is the surface, z increases downward.
struct ColumnGrid {
    double depth = 0.5;
    int nodes = 21;

    double dz() const { return depth / (nodes - 1); }
    double node_depth(int i) const { return i * dz(); }
    /// Control-volume length of node i (half cells at both ends).
    double control_volume(int i) const { return (i == 0 || i == nodes - 1) ? 0.5 * dz() : dz(); }
    void validate() const;
};

/// Capillary pressure heads, m, one per node.
struct ColumnState {
    std::vector<double> psi;

    std::size_t size() const { return psi.size(); }
    bool operator==(const ColumnState&) const = default;
};

/// Daily inputs; all depths in m/day.
struct DailyForcing {
    double u_irr = 0.0;
    double precip = 0.0;
    double et0 = 0.0;
    double kc = 0.0;
    double zr = 0.5;
    double ev_fraction = 0.1;

    void validate(const ColumnGrid& grid) const;
};

/// Trapezoidal root-water stress thresholds expressed as water contents:
/// zero uptake at or above `anaerobic` and at or below `wilting`, full uptake on
/// [optimal_low, optimal_high], linear in between.
struct StressThresholds {
    double anaerobic = 1.0;
    double optimal_high = 1.0;
    double optimal_low = 0.0;
    double wilting = 0.0;

    void validate() const;
};

/// Trapezoidal stress factor in [0, 1].
double stress_factor(double theta, const StressThresholds& t);

enum class TopBoundary { Flux, Sealed };
enum class BottomBoundary { FreeDrainage, Sealed };

struct SolverOptions {
    int inner_steps = 48;  ///< 30-minute steps per day
    double newton_tol = 1e-8;
    int max_iterations = 50;
    int max_halvings = 4;
    TopBoundary top = TopBoundary::Flux;
    BottomBoundary bottom = BottomBoundary::FreeDrainage;
    bool root_uptake = true;
};

/// Water fluxes accumulated over a day, all in m of water.
struct DayBalance {
    double infiltration = 0.0;  ///< irrigation + rain that entered the surface
    double runoff = 0.0;        ///< irrigation + rain rejected by the infiltration cap
    double evaporation = 0.0;
    double uptake = 0.0;
    double drainage = 0.0;
    int newton_iterations = 0;
    int halvings = 0;

    double net_inflow() const { return infiltration - evaporation - uptake - drainage; }
};

/// Newton failed on an inner step even after the allowed step halvings.
class NonConvergence : public NumericalError {
public:
    NonConvergence(int step_index, double residual_norm);
    int step_index;
    double residual_norm;
};

class NonFiniteState : public NumericalError {
public:
    using NumericalError::NumericalError;
};

/// Root water uptake per node, 1/s.
std::vector<double> root_uptake(const ColumnState& state, const DailyForcing& forcing, const ColumnGrid& grid,
                                const HydraulicParams& phi, const StressThresholds& stress);

/// Noisy water-content observation of every node, clipped to [theta_r, theta_s].
std::vector<double> observe(const ColumnState& state, const HydraulicParams& phi, double output_std, Rng& rng);

/// Adds zero-mean moisture-space noise of the given std to each node; the
/// perturbed content is mapped back to a head through the retention curve.
void apply_process_noise(ColumnState& state, const HydraulicParams& phi, double process_std, Rng& rng);

/// Uniform-content profile converted to heads.
ColumnState uniform_state(double theta, const HydraulicParams& phi, const ColumnGrid& grid);

/// Water-content profile of a state (noise free).
std::vector<double> water_profile(const ColumnState& state, const HydraulicParams& phi);

/// One management-zone soil column: implicit (backward Euler) mass-conservative
/// finite-volume discretization of the 1D Richards equation, solved by Newton.
class RichardsColumn {
public:
    RichardsColumn(HydraulicParams phi, ColumnGrid grid, StressThresholds stress, SolverOptions options = {});

    /// Deterministic daily map F(x, u).
    ColumnState advance_day(const ColumnState& state, const DailyForcing& forcing,
                            DayBalance* balance = nullptr) const;

    /// F(x, u) + omega.
    ColumnState step_day(const ColumnState& state, const DailyForcing& forcing, double process_std, Rng& rng,
                         DayBalance* balance = nullptr) const;

    /// Total stored water (control-volume weighted), m.
    double total_water(const ColumnState& state) const;

    const HydraulicParams& params() const { return phi_; }
    const ColumnGrid& grid() const { return grid_; }
    const StressThresholds& stress() const { return stress_; }
    const SolverOptions& options() const { return options_; }

private:
    struct Workspace;
    bool newton_step(std::vector<double>& psi, double dt, const DailyForcing& forcing, Workspace& ws,
                     DayBalance& acc, double& residual_norm) const;
    void advance_interval(std::vector<double>& psi, double dt, const DailyForcing& forcing, int depth,
                          int step_index, Workspace& ws, DayBalance& acc) const;

    HydraulicParams phi_;
    ColumnGrid grid_;
    StressThresholds stress_;
    SolverOptions options_;
    std::vector<double> weights_;
    double theta_air_dry_ = 0.0;
};

}  // namespace irrig::soilsim
