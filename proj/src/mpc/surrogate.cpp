#include "irrig/mpc/surrogate.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "irrig/field/season.hpp"
#include "irrig/neural/checkpoint.hpp"
#include "irrig/neural/optimizer.hpp"

namespace irrig::mpc {

namespace {

std::string rmse_message(double achieved, double gate) {
    std::ostringstream s;
    s << "surrogate validation RMSE " << achieved << " exceeds the gate " << gate;
    return s.str();
}

void put_day(Vec& x, int offset, const DayInput& d) {
    x[offset] = d.kc;
    x[offset + 1] = d.et0;
    x[offset + 2] = d.u;
    x[offset + 3] = d.zr;
    x[offset + 4] = d.precip;
}

// Window of inputs ending at step k, padded with the earliest available day.
std::vector<DayInput> window_at(std::span<const DayInput> history, std::span<const DayInput> inputs, int k,
                                int window) {
    std::vector<DayInput> w(window);
    const int h = static_cast<int>(history.size());
    for (int j = 0; j < window; ++j) {
        const int idx = k - (window - 1) + j;  // index into inputs; negative reaches into history
        if (idx >= 0) {
            w[j] = inputs[idx];
        } else if (h + idx >= 0) {
            w[j] = history[h + idx];
        } else {
            w[j] = h > 0 ? history.front() : inputs.front();
        }
    }
    return w;
}

}  // namespace

RmseGateFailed::RmseGateFailed(double achieved_, double gate_)
    : NumericalError(rmse_message(achieved_, gate_)), achieved(achieved_), gate(gate_) {}

void SurrogateConfig::validate() const {
    if (window < 1) throw ConfigError("surrogate window must be >= 1");
    if (trajectories < 0 || days < 1) throw ConfigError("surrogate data budget must be non-negative");
    if (!(validation_fraction > 0.0 && validation_fraction < 1.0)) throw ConfigError("validation fraction in (0, 1)");
    if (epochs < 1 || batch < 1 || !(lr > 0.0)) throw ConfigError("surrogate optimizer settings");
    if (!(u_max > 0.0) || !(rmse_gate > 0.0)) throw ConfigError("u_max and rmse_gate must be positive");
}

Surrogate::Surrogate(int window, const std::vector<int>& hidden, Vec lo, Vec hi, double delta_scale, Rng& rng)
    : window_(window), lo_(std::move(lo)), hi_(std::move(hi)), delta_scale_(delta_scale) {
    std::vector<int> sizes{input_size()};
    sizes.insert(sizes.end(), hidden.begin(), hidden.end());
    sizes.push_back(1);
    net_ = neural::Mlp(sizes, rng, 1.0);
    if (lo_.size() != input_size() || hi_.size() != input_size()) throw LengthMismatch("surrogate bounds size");
}

Vec Surrogate::features(std::span<const DayInput> days, double theta) const {
    if (static_cast<int>(days.size()) != window_) throw LengthMismatch("surrogate window length");
    Vec x(input_size());
    for (int j = 0; j < window_; ++j) put_day(x, j * kDayFeatures, days[j]);
    x[window_ * kDayFeatures] = theta;
    return x;
}

Mat Surrogate::predict_batch(const Mat& raw) const {
    Mat x = (raw.colwise() - lo_).array().colwise() / (hi_ - lo_).array();
    x = (-2.0 + 4.0 * x.array()).cwiseMax(-2.0).cwiseMin(2.0);
    Mat out = net_.forward_batch(x);
    out.array() *= delta_scale_;
    out.row(0) += raw.row(window_ * kDayFeatures);
    return out;
}

double Surrogate::step(std::span<const DayInput> days, double theta) const {
    return predict_batch(features(days, theta))(0, 0);
}

std::vector<double> Surrogate::rollout(std::span<const DayInput> history, std::span<const DayInput> inputs,
                                       double theta0) const {
    std::vector<double> theta(inputs.size());
    double th = theta0;
    for (int k = 0; k < static_cast<int>(inputs.size()); ++k) {
        const auto w = window_at(history, inputs, k, window_);
        th = step(w, th);
        theta[k] = th;
    }
    return theta;
}

std::vector<double> Surrogate::rollout_gradient(std::span<const DayInput> history, std::span<const DayInput> inputs,
                                                double theta0, std::span<const double> dj_dtheta) const {
    const int n = static_cast<int>(inputs.size());
    if (static_cast<int>(dj_dtheta.size()) != n) throw LengthMismatch("one adjoint seed per step expected");
    std::vector<neural::Tape> tapes(n);
    std::vector<Vec> scale(n);  // d(normalized)/d(raw), zero where clipped
    double th = theta0;
    for (int k = 0; k < n; ++k) {
        const Vec raw = features(window_at(history, inputs, k, window_), th);
        Vec z = -2.0 + 4.0 * ((raw - lo_).array() / (hi_ - lo_).array());
        scale[k] = Vec(input_size());
        for (int i = 0; i < input_size(); ++i) {
            scale[k][i] = (z[i] < -2.0 || z[i] > 2.0) ? 0.0 : 4.0 / (hi_[i] - lo_[i]);
        }
        z = z.cwiseMax(-2.0).cwiseMin(2.0);
        const Mat out = net_.forward_batch(z, &tapes[k]);
        th += delta_scale_ * out(0, 0);
    }
    std::vector<double> du(n, 0.0);
    neural::MlpGrad scratch = net_.make_grad();
    double lam = 0.0;
    const int theta_index = window_ * kDayFeatures;
    for (int k = n - 1; k >= 0; --k) {
        lam += dj_dtheta[k];
        const Mat dx = net_.backward(tapes[k], Mat::Constant(1, 1, delta_scale_ * lam), scratch);
        for (int j = 0; j < window_; ++j) {
            const int idx = k - (window_ - 1) + j;
            if (idx < 0) continue;
            const int f = j * kDayFeatures + 2;
            du[idx] += dx(f, 0) * scale[k][f];
        }
        lam += dx(theta_index, 0) * scale[k][theta_index];
    }
    return du;
}

void Surrogate::save(const std::filesystem::path& path) const {
    neural::Checkpoint ck;
    ck.put_mlp("surrogate", net_);
    ck.put("surrogate.lo", lo_);
    ck.put("surrogate.hi", hi_);
    Mat meta(1, 4);
    meta << window_, delta_scale_, validation_rmse, training_samples;
    ck.put("surrogate.meta", meta);
    ck.save(path);
}

Surrogate Surrogate::load(const std::filesystem::path& path) {
    const auto ck = neural::Checkpoint::load(path);
    Surrogate s;
    s.net_ = ck.get_mlp("surrogate");
    s.lo_ = ck.get("surrogate.lo");
    s.hi_ = ck.get("surrogate.hi");
    const Mat& meta = ck.get("surrogate.meta");
    if (meta.size() != 4) throw neural::ShapeMismatch("surrogate metadata shape");
    s.window_ = static_cast<int>(meta(0, 0));
    s.delta_scale_ = meta(0, 1);
    s.validation_rmse = meta(0, 2);
    s.training_samples = static_cast<int>(meta(0, 3));
    if (s.net_.input_size() != s.input_size() || s.lo_.size() != s.input_size()) {
        throw neural::ShapeMismatch("surrogate checkpoint sizes disagree");
    }
    return s;
}

std::vector<Trajectory> simulate_trajectories(const soilsim::RichardsColumn& column, const field::ZoneConfig& zone,
                                              const SurrogateConfig& config, int count, Rng& rng,
                                              kernels::Exec exec) {
    std::vector<std::uint64_t> seeds(std::max(count, 0));
    for (auto& s : seeds) s = rng.engine()();
    std::vector<Trajectory> out(seeds.size());
    const int season_length = std::max(113, config.days + 1);
    kernels::for_each_index(exec, static_cast<int>(seeds.size()), [&](int t) {
        Rng r(seeds[t]);
        const field::Season season = field::generate_season(season_length, r);
        const int start = static_cast<int>(r.index(static_cast<std::size_t>(season_length - config.days + 1)));
        const double theta_init = r.uniform(zone.theta_wp, zone.theta_fc + 0.04);
        soilsim::ColumnState x = soilsim::uniform_state(theta_init, zone.phi, column.grid());
        Trajectory& tr = out[t];
        auto rz = [&](const soilsim::ColumnState& s) {
            return field::root_zone_moisture(soilsim::water_profile(s, zone.phi), config.zr, column.grid());
        };
        tr.theta.push_back(rz(x));
        for (int k = 0; k < config.days; ++k) {
            const int d = start + k;
            DayInput in;
            in.kc = season.kc[d];
            in.et0 = season.weather[d].et0;
            in.precip = season.weather[d].precip;
            in.zr = config.zr;
            in.u = r.bernoulli(config.irrigation_probability) ? r.uniform(0.0, config.u_max) : 0.0;
            x = column.advance_day(x, {in.u, in.precip, in.et0, in.kc, in.zr, config.ev_fraction});
            tr.inputs.push_back(in);
            tr.theta.push_back(rz(x));
        }
    });
    return out;
}

void build_samples(const std::vector<Trajectory>& trajectories, int window, Mat& x, Vec& y) {
    int n = 0;
    for (const auto& t : trajectories) n += static_cast<int>(t.inputs.size());
    x.resize(window * kDayFeatures + 1, n);
    y.resize(n);
    int col = 0;
    for (const auto& t : trajectories) {
        for (int k = 0; k < static_cast<int>(t.inputs.size()); ++k) {
            const auto w = window_at({}, t.inputs, k, window);
            Vec f(window * kDayFeatures + 1);
            for (int j = 0; j < window; ++j) put_day(f, j * kDayFeatures, w[j]);
            f[window * kDayFeatures] = t.theta[k];
            x.col(col) = f;
            y[col] = t.theta[k + 1];
            ++col;
        }
    }
}

Surrogate train_surrogate(const soilsim::RichardsColumn& column, const field::ZoneConfig& zone,
                          const SurrogateConfig& config, kernels::Exec exec) {
    config.validate();
    Rng rng(config.seed);
    Rng data_rng = rng.fork(1);
    Rng init_rng = rng.fork(2);
    Rng shuffle_rng = rng.fork(3);

    const int n_val = static_cast<int>(std::ceil(config.trajectories * config.validation_fraction));
    const int n_train = config.trajectories - n_val;
    if (n_train < 1 || n_val < 1) throw RmseGateFailed(std::numeric_limits<double>::infinity(), config.rmse_gate);

    auto trajs = simulate_trajectories(column, zone, config, config.trajectories, data_rng, exec);
    std::vector<Trajectory> train_set(trajs.begin(), trajs.begin() + n_train);
    std::vector<Trajectory> val_set(trajs.begin() + n_train, trajs.end());
    Mat xt, xv;
    Vec yt, yv;
    build_samples(train_set, config.window, xt, yt);
    build_samples(val_set, config.window, xv, yv);

    const int in = config.window * kDayFeatures + 1;
    Vec lo(in), hi(in);
    for (int j = 0; j < config.window; ++j) {
        lo.segment(j * kDayFeatures, kDayFeatures) << 0.0, 0.0, 0.0, 0.0, 0.0;
        hi.segment(j * kDayFeatures, kDayFeatures) << 1.3, 0.010, config.u_max, 1.0, 0.050;
    }
    lo[in - 1] = 0.05;
    hi[in - 1] = 0.45;
    Surrogate s(config.window, config.hidden, lo, hi, 0.02, init_rng);

    const Mat zt = ((xt.colwise() - lo).array().colwise() / (hi - lo).array() * 4.0 - 2.0).cwiseMax(-2.0).cwiseMin(2.0);
    const Vec target = (yt - xt.row(in - 1).transpose()) / s.delta_scale();
    const int n = static_cast<int>(yt.size());

    neural::Adam opt(config.lr);
    auto params = s.net().parameters();
    neural::MlpGrad grad = s.net().make_grad();
    auto gviews = neural::Mlp::views(grad);
    std::vector<int> order(n);
    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        std::iota(order.begin(), order.end(), 0);
        std::shuffle(order.begin(), order.end(), shuffle_rng.engine());
        for (int start = 0; start < n; start += config.batch) {
            const int m = std::min(config.batch, n - start);
            Mat xb(in, m);
            Vec yb(m);
            for (int j = 0; j < m; ++j) {
                xb.col(j) = zt.col(order[start + j]);
                yb[j] = target[order[start + j]];
            }
            neural::Tape tape;
            const Mat out = s.net().forward_batch(xb, &tape);
            const Mat g = (2.0 / m) * (out.row(0) - yb.transpose());
            grad.zero();
            s.net().backward(tape, g, grad);
            opt.step(params, gviews);
        }
    }

    const Mat pv = s.predict_batch(xv);
    s.validation_rmse = std::sqrt((pv.row(0).transpose() - yv).squaredNorm() / std::max<Eigen::Index>(1, yv.size()));
    s.training_samples = n;
    if (!(s.validation_rmse <= config.rmse_gate)) throw RmseGateFailed(s.validation_rmse, config.rmse_gate);
    return s;
}

}  // namespace irrig::mpc
