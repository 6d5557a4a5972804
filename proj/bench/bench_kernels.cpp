#include <benchmark/benchmark.h>

#include "irrig/estimator/ekf.hpp"
#include "irrig/mpc/solver.hpp"
#include "irrig/scmarl/train.hpp"

using namespace irrig;
using Vec = Eigen::VectorXd;

namespace {

const field::Field& bench_field() {
    static const field::Field f(field::default_zones());
    return f;
}

kernels::Exec exec_of(const benchmark::State& st) {
    return st.range(0) == 0 ? kernels::Exec::Serial : kernels::Exec::Parallel;
}

void label(benchmark::State& st) {
    st.SetLabel(st.range(0) == 0 ? "serial" : "parallel/" + std::to_string(kernels::thread_count()));
}

void BM_FieldStep(benchmark::State& st) {
    const auto& f = bench_field();
    std::vector<Rng> rngs;
    for (int i = 0; i < 3; ++i) rngs.emplace_back(10 + i);
    const field::FieldState s0 = f.sample_initial(rngs);
    const field::FieldForcing forcing{{0.006, 0.0, 18.0}, 0.9};
    const std::vector<double> u{0.01, 0.0, 0.02};
    for (auto _ : st) {
        auto next = f.step(s0, u, forcing, {}, rngs, exec_of(st));
        benchmark::DoNotOptimize(next);
    }
    label(st);
}

void BM_EkfJacobian(benchmark::State& st) {
    const auto& col = bench_field().column(0);
    Rng rng(4);
    const auto s = field::sample_initial_state(bench_field().zone(0), col.grid(), rng);
    const soilsim::DailyForcing forcing{0.0, 0.0, 0.006, 0.9, 0.5, 0.1};
    const estimator::Dynamics fx = [&](const Vec& x) {
        soilsim::ColumnState cs{std::vector<double>(x.data(), x.data() + x.size())};
        const auto n = col.advance_day(cs, forcing);
        return Vec(Eigen::Map<const Vec>(n.psi.data(), n.psi.size()));
    };
    const Vec x = Eigen::Map<const Vec>(s.psi.data(), s.psi.size());
    for (auto _ : st) {
        auto a = estimator::jacobian_fd(fx, x, 1e-4, exec_of(st));
        benchmark::DoNotOptimize(a);
    }
    label(st);
}

void BM_MpcRestarts(benchmark::State& st) {
    Rng rng(2);
    const int in = 5 * mpc::kDayFeatures + 1;
    Vec lo = Vec::Zero(in), hi = Vec::Ones(in);
    hi[in - 1] = 0.5;
    const mpc::Surrogate sur(5, {32, 32}, lo, hi, 0.02, rng);
    mpc::MpcProblem p;
    p.c.assign(p.np, 1);
    p.theta0 = 0.22;
    p.nu_lower = 0.2;
    p.nu_upper = 0.28;
    p.forecast.assign(p.np, {0.9, 0.006, 0.0, 0.5, 0.0});
    mpc::MpcOptions opt;
    opt.iterations = 100;
    opt.exec = exec_of(st);
    for (auto _ : st) {
        auto sol = mpc::solve(p, sur, opt);
        benchmark::DoNotOptimize(sol);
    }
    label(st);
}

void BM_Alignment(benchmark::State& st) {
    const scmarl::AgentBundle b(scmarl::BundleConfig{}, {}, 3);
    scmarl::TrainConfig tc;
    tc.exec = exec_of(st);
    for (auto _ : st) {
        Rng rng(9);
        auto r = scmarl::evaluate_alignment(b, bench_field(), 50, rng, tc);
        benchmark::DoNotOptimize(r);
    }
    label(st);
}

}  // namespace

BENCHMARK(BM_FieldStep)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_EkfJacobian)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_MpcRestarts)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Alignment)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
