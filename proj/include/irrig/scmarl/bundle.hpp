#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "irrig/ppo/ppo.hpp"

namespace irrig::scmarl {

using neural::Vec;

/// Scmarl shares the coordinator decision with the local agents; Dmarl does not.
enum class Mode { Scmarl, Dmarl };

std::string to_string(Mode mode);
Mode parse_mode(const std::string& text);

/// Largest daily prescription of a local agent, m.
inline constexpr double kActionMax = 0.030;
/// Prescriptions above this count as "irrigate" in the alignment test, m.
inline constexpr double kAlignThreshold = 0.001;

/// Forcing values as the agents see them (possibly noisy forecasts).
struct AgentForcing {
    double et0 = 0.0;
    double kc = 0.0;
    double rn = 0.0;  ///< precipitation, m/day
};

/// Min-max ranges mapped onto [-2, 2] before the networks.
struct StateScales {
    double moisture_lo = 0.10;
    double moisture_hi = 0.40;
    double et0_hi = 0.010;
    double kc_hi = 1.3;
    double rn_hi = 0.030;
};

int local_state_size(int nodes, Mode mode);
int coordinator_state_size(int zones, int nodes);

/// [y, et0, kc, rn, c]; c is omitted in Dmarl mode.
Vec local_state(std::span<const double> y, const AgentForcing& f, int c, Mode mode);
/// [y_1, ..., y_M, et0, kc, rn].
Vec coordinator_state(const std::vector<std::vector<double>>& ys, const AgentForcing& f);

struct BundleConfig {
    int zones = 3;
    int nodes = 21;
    Mode mode = Mode::Scmarl;
    std::vector<int> hidden{64, 64};
    double init_std = 0.006;  ///< m
    double action_max = kActionMax;
    StateScales scales;

    void validate() const;
};

struct JointAction {
    int c = 0;
    std::vector<double> a_la;  ///< prescriptions, clipped to [0, action_max]
    std::vector<double> u;     ///< applied irrigation c * a_la
};

/// One coordinator (binary decision) and M local agents (amounts).
class AgentBundle {
public:
    AgentBundle(const BundleConfig& config, const ppo::PpoConfig& ppo, std::uint64_t seed);

    const BundleConfig& config() const { return config_; }
    Mode mode() const { return config_.mode; }
    int zone_count() const { return config_.zones; }

    Vec coordinator_input(const std::vector<std::vector<double>>& ys, const AgentForcing& f) const;
    Vec local_input(std::span<const double> y, const AgentForcing& f, int c) const;

    double prescription(double raw) const;

    /// Greedy joint action: argmax decision, then mean amounts.
    JointAction act_greedy(const std::vector<std::vector<double>>& ys, const AgentForcing& f) const;

    /// Directory with one checkpoint per agent and a bundle.json.
    void save(const std::filesystem::path& dir) const;
    static AgentBundle load(const std::filesystem::path& dir, const ppo::PpoConfig& ppo = {});

    ppo::CategoricalAgent coordinator;
    std::vector<ppo::GaussianAgent> locals;

private:
    AgentBundle() = default;
    void build_normalizers();

    BundleConfig config_;
    neural::MinMaxNormalizer coord_norm_;
    neural::MinMaxNormalizer local_norm_;
};

/// Joint action of the bundle in evaluation (greedy) mode.
JointAction act_joint(const AgentBundle& bundle, const std::vector<std::vector<double>>& ys, const AgentForcing& f);

}  // namespace irrig::scmarl
