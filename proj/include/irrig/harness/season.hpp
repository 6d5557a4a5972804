#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "irrig/estimator/ekf.hpp"
#include "irrig/field/field.hpp"
#include "irrig/mpc/solver.hpp"
#include "irrig/scmarl/train.hpp"

namespace irrig::harness {

/// A solver or filter failure inside the season loop.
class SeasonFailure : public NumericalError {
public:
    SeasonFailure(int day, int zone, const std::string& cause);
    int day;
    int zone;
};

enum class Variant { Scmarl, Dmarl, ScmarlMpc, LbMaMpc };

std::string to_string(Variant v);
Variant parse_variant(const std::string& text);
bool uses_mpc(Variant v);

/// Number of days from start to end inclusive; dates are YYYY-MM-DD.
int season_days(const std::string& start, const std::string& end);

struct SeasonConfig {
    std::string start_date = "2022-05-15";
    std::string end_date = "2022-09-04";
    Variant variant = Variant::Scmarl;
    double truth_noise = 0.0007;
    double sensor_noise = 0.0008;
    field::ForcingNoise forcing_noise;
    field::ForecastGrowth growth;
    field::WeatherConfig weather;
    double zr = 0.5;
    double ev_fraction = 0.1;
    estimator::EkfConfig ekf;
    int np = 14;
    mpc::MpcOptions mpc;
    scmarl::RewardWeights weights;
    double u_max = scmarl::kActionMax;
    bool force_off = false;      ///< coordinator decision pinned to 0
    bool perfect_start = false;  ///< filters start from the true state
    std::uint64_t seed = 1;
    kernels::Exec exec = kernels::Exec::Parallel;

    int days() const { return season_days(start_date, end_date); }
    void validate() const;
};

/// What each variant needs: a bundle (Scmarl, Dmarl, ScmarlMpc), one single-zone bundle
/// per zone (LbMaMpc), one surrogate per zone (both MPC variants).
struct Schedulers {
    const scmarl::AgentBundle* bundle = nullptr;
    std::vector<const scmarl::AgentBundle*> zone_bundles;
    std::vector<const mpc::Surrogate*> surrogates;
};

struct DayRecord {
    int day = 0;
    int zone = 0;
    int c = 0;
    double a_la = 0.0;
    double u = 0.0;
    double theta_rz_true = 0.0;  ///< end of day
    double theta_rz_est = 0.0;   ///< estimate the decision was based on
    double et0 = 0.0;
    double precip = 0.0;
    double kc = 0.0;
    bool violation_low = false;
    bool violation_high = false;
};

struct SeasonLog {
    Variant variant = Variant::Scmarl;
    int days = 0;
    int zones = 0;
    std::vector<DayRecord> rows;  ///< day-major, zone-minor

    const DayRecord& at(int day, int zone) const { return rows.at(static_cast<std::size_t>(day * zones + zone)); }
    std::vector<double> zone_totals() const;
    /// Mean over zones of the seasonal irrigation depth, m.
    double total_irrigation() const;
    int violation_days(int zone) const;
    int irrigation_events() const;

    void write_csv(const std::filesystem::path& path) const;
    static SeasonLog read_csv(const std::filesystem::path& path);
};

/// Logical OR over zones of the proposed decisions, day by day.
std::vector<int> lbmampc_binding_decision(const std::vector<std::vector<int>>& proposals);

/// Closed-loop season: filter update from the sensor, scheduler, truth step, log.
SeasonLog run_season(const field::Field& field, const SeasonConfig& config, const Schedulers& schedulers);

struct SeasonMetrics {
    double total_irrigation = 0.0;
    std::vector<double> zone_totals;
    double yield = 0.0;  ///< mean over zones, kg/m2
    std::vector<double> zone_yields;
    double iwue = 0.0;  ///< kg/m3; 0 when no water was applied
    int violation_days = 0;
    int irrigation_events = 0;
};

SeasonMetrics season_metrics(const SeasonLog& log, const std::vector<field::ZoneConfig>& zones);

}  // namespace irrig::harness
