#pragma once

#include <filesystem>
#include <span>
#include <vector>

#include "irrig/field/zone.hpp"
#include "irrig/kernels/parallel.hpp"
#include "irrig/neural/mlp.hpp"
#include "irrig/soilsim/column.hpp"

namespace irrig::mpc {

using neural::Mat;
using neural::Vec;

/// Daily inputs that drive the root-zone surrogate.
struct DayInput {
    double kc = 0.0;
    double et0 = 0.0;  ///< m/day
    double u = 0.0;    ///< irrigation, m/day
    double zr = 0.5;
    double precip = 0.0;  ///< m/day
};

inline constexpr int kDayFeatures = 5;

class RmseGateFailed : public NumericalError {
public:
    RmseGateFailed(double achieved, double gate);
    double achieved;
    double gate;
};

struct SurrogateConfig {
    int window = 5;
    std::vector<int> hidden{32, 32};
    int trajectories = 240;  ///< data budget: simulated trajectories
    int days = 40;           ///< per trajectory
    double validation_fraction = 0.2;
    double irrigation_probability = 0.35;
    double u_max = 0.030;
    double zr = 0.5;
    double ev_fraction = 0.1;
    int epochs = 120;
    int batch = 128;
    double lr = 1e-3;
    double rmse_gate = 0.01;
    std::uint64_t seed = 1;

    void validate() const;
};

/// Next root-zone moisture from the last `window` days of inputs and the current root-zone moisture.
/// The net predicts the daily change; inputs are min-max normalized with stored bounds.
class Surrogate {
public:
    Surrogate() = default;
    Surrogate(int window, const std::vector<int>& hidden, Vec lo, Vec hi, double delta_scale, Rng& rng);

    int window() const { return window_; }
    int input_size() const { return window_ * kDayFeatures + 1; }

    /// `days` holds exactly window() entries, oldest first; the last one is the current day.
    double step(std::span<const DayInput> days, double theta) const;
    Vec features(std::span<const DayInput> days, double theta) const;

    /// Batched forward on raw feature columns.
    Mat predict_batch(const Mat& raw) const;

    /// theta_{k+1} for k = 0..n-1; `history` has window()-1 days before the first input.
    std::vector<double> rollout(std::span<const DayInput> history, std::span<const DayInput> inputs,
                                double theta0) const;

    /// Same as rollout, plus dJ/du given dJ/dtheta_{k+1} for every step (adjoint pass).
    std::vector<double> rollout_gradient(std::span<const DayInput> history, std::span<const DayInput> inputs,
                                         double theta0, std::span<const double> dj_dtheta) const;

    neural::Mlp& net() { return net_; }
    const neural::Mlp& net() const { return net_; }
    const Vec& lo() const { return lo_; }
    const Vec& hi() const { return hi_; }
    double delta_scale() const { return delta_scale_; }

    double validation_rmse = 0.0;
    int training_samples = 0;

    void save(const std::filesystem::path& path) const;
    static Surrogate load(const std::filesystem::path& path);

private:
    int window_ = 5;
    neural::Mlp net_;
    Vec lo_, hi_;
    double delta_scale_ = 0.02;
};

/// Simulated daily trajectory of one zone.
struct Trajectory {
    std::vector<DayInput> inputs;
    std::vector<double> theta;  ///< theta[k] before day k; size inputs.size() + 1
};

/// Random forcing and irrigation trajectories on the noise-free zone model.
std::vector<Trajectory> simulate_trajectories(const soilsim::RichardsColumn& column, const field::ZoneConfig& zone,
                                              const SurrogateConfig& config, int count, Rng& rng,
                                              kernels::Exec exec = kernels::Exec::Serial);

/// (window, theta_k) -> theta_{k+1} pairs; the first days repeat day 0 to fill the window.
void build_samples(const std::vector<Trajectory>& trajectories, int window, Mat& x, Vec& y);

/// Generates data from the zone model, fits the surrogate and enforces the validation RMSE gate.
Surrogate train_surrogate(const soilsim::RichardsColumn& column, const field::ZoneConfig& zone,
                          const SurrogateConfig& config, kernels::Exec exec = kernels::Exec::Parallel);

}  // namespace irrig::mpc
