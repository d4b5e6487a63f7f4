#include <numbers>
#include <random>

#include <benchmark/benchmark.h>

#include "dsmcbf/qp_solver.hpp"
#include "dsmcbf/safety_filters.hpp"
#include "dsmcbf/sim_engine.hpp"
#include "dsmcbf/threshold_oracle.hpp"

using namespace dsmcbf;

namespace {

ScenarioConfig scenario_b() {
    ScenarioConfig cfg;
    cfg.constraints = {{{ConstraintKind::PositionLower, -1.1}, 10.0, 6.0, 8.0},
                       {{ConstraintKind::PositionUpper, 1.1}, 10.0, 6.0, 8.0},
                       {{ConstraintKind::InputBound, 4.0}, 20.0, 6.0, 8.0},
                       {{ConstraintKind::AngleBound, 10.0 * std::numbers::pi / 180.0}, 80.0, 6.0, 8.0},
                       {{ConstraintKind::PayloadBound, 1.1}, 2.2, 4.0, 3.5}};
    return cfg;
}

void BM_SolveQp(benchmark::State& state) {
    std::mt19937_64 rng(3);
    std::normal_distribution<double> nd;
    std::vector<QpProblem> problems(64);
    for (auto& qp : problems) {
        qp.H = Eigen::Matrix2d{{2.0, 0.0}, {0.0, 0.02}};
        qp.f = Eigen::Vector2d(nd(rng), nd(rng));
        const Eigen::Vector2d z0(nd(rng), nd(rng));
        qp.A = Eigen::MatrixXd(state.range(0), 2);
        qp.b = Eigen::VectorXd(state.range(0));
        for (Eigen::Index i = 0; i < qp.A.rows(); ++i) {
            qp.A.row(i) << nd(rng), nd(rng);
            qp.b[i] = -qp.A.row(i).dot(z0) + std::abs(nd(rng));
        }
        qp.box = QpBox{Eigen::Vector2d(-4.0, -1e3), Eigen::Vector2d(4.0, 1e3)};
    }
    std::size_t k = 0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(solve_qp(problems[k++ % problems.size()]));
    }
}
BENCHMARK(BM_SolveQp)->Arg(1)->Arg(5)->Arg(20);

void BM_DsmCbfStep(benchmark::State& state) {
    const ScenarioConfig cfg = scenario_b();
    const DsmCbfFilter filter(cfg.params, cfg.nominal, cfg.build_dsms(), cfg.eta, cfg.u_max());
    const AugmentedState a{{0.05, 0.01, 0.1, -0.05}, 0.1};
    for (auto _ : state) benchmark::DoNotOptimize(filter.step(a, cfg.reference));
}
BENCHMARK(BM_DsmCbfStep);

void BM_CandidateCbfStep(benchmark::State& state) {
    const ScenarioConfig cfg = scenario_b();
    const CandidateCbfFilter filter(cfg.params, cfg.nominal, cfg.build_candidate_cbfs(), cfg.u_max());
    const PlantState s{0.05, 0.01, 0.1, -0.05};
    for (auto _ : state) benchmark::DoNotOptimize(filter.step(s, cfg.reference));
}
BENCHMARK(BM_CandidateCbfStep);

void BM_ThresholdOracle(benchmark::State& state) {
    const ScenarioConfig cfg = scenario_b();
    const auto dsms = cfg.build_dsms();
    const Dsm& payload = dsms.back();
    const int resolution = static_cast<int>(state.range(0));
    for (auto _ : state) {
        benchmark::DoNotOptimize(gamma_star_oracle(0.3, payload.constraint(), payload.lyapunov(), resolution));
    }
}
BENCHMARK(BM_ThresholdOracle)->Arg(21)->Arg(41)->Unit(benchmark::kMillisecond);

void BM_ScenarioSecond(benchmark::State& state) {
    ScenarioConfig cfg = scenario_b();
    cfg.horizon = 1.0;
    for (auto _ : state) benchmark::DoNotOptimize(run_scenario(cfg, ControllerKind::DsmCbf));
}
BENCHMARK(BM_ScenarioSecond)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
