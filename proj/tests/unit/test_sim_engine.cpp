#include <cmath>
#include <random>

#include <gtest/gtest.h>
#include <unsupported/Eigen/MatrixFunctions>

#include "dsmcbf/errors.hpp"
#include "dsmcbf/sim_engine.hpp"
#include "oracles.hpp"

using namespace dsmcbf;

namespace {

ScenarioConfig scenario(bool with_angle) {
    ScenarioConfig cfg;
    cfg.constraints = {{{ConstraintKind::PositionLower, -1.1}, 10.0, 6.0, 8.0},
                       {{ConstraintKind::PositionUpper, 1.1}, 10.0, 6.0, 8.0},
                       {{ConstraintKind::InputBound, 4.0}, 20.0, 6.0, 8.0}};
    if (with_angle) cfg.constraints.push_back({{ConstraintKind::AngleBound, 10.0 * M_PI / 180.0}, 80.0, 6.0, 8.0});
    cfg.constraints.push_back({{ConstraintKind::PayloadBound, 1.1}, 2.2, 4.0, 3.5});
    return cfg;
}

double max_violation(const RunSummary& s) {
    double m = 0.0;
    for (double v : s.max_violation) {
        if (!std::isnan(v)) m = std::max(m, v);
    }
    return m;
}

}  // namespace

TEST(Rk4, ZeroFieldLeavesStateUnchanged) {
    const StateVector y(1, 2, 3, 4);
    EXPECT_EQ(rk4_step(y, [](const StateVector&) { return StateVector::Zero().eval(); }, 0.1), y);
}

TEST(Rk4, ExponentialDecay) {
    Eigen::Matrix<double, 1, 1> y;
    y << 1.0;
    const auto f = [](const Eigen::Matrix<double, 1, 1>& s) { return Eigen::Matrix<double, 1, 1>(-s); };
    EXPECT_NEAR(rk4_step(y, f, 0.1)[0], 0.9048375, 1e-12);
}

TEST(Rk4, NonPositiveStepRejected) {
    const StateVector y = StateVector::Zero();
    const auto f = [](const StateVector& s) { return s; };
    EXPECT_THROW(rk4_step(y, f, 0.0), ConfigError);
    EXPECT_THROW(rk4_step(y, f, -1e-3), ConfigError);
}

TEST(Rk4, LinearizedCraneAgainstMatrixExponential) {
    const CraneParams p;
    const PdGains g;
    const Eigen::MatrixXd A = oracle::fd_jacobian(
        [&](const Eigen::VectorXd& s) -> Eigen::VectorXd {
            return closed_loop_f_pi(PlantState::from(s), 0.0, p, g);
        },
        Eigen::VectorXd::Zero(4));
    const Eigen::Matrix4d A4 = A;
    const StateVector y0(0.1, 0.05, -0.2, 0.3);
    auto error = [&](double dt) {
        const StateVector rk = rk4_step(y0, [&](const StateVector& s) { return (A4 * s).eval(); }, dt);
        const StateVector exact = (A4 * dt).exp() * y0;
        return (rk - exact).norm();
    };
    const double e1 = error(0.1), e2 = error(0.05);
    EXPECT_LT(e1, 1e-4);
    EXPECT_GT(e1 / e2, 20.0);  // fifth order local error: ratio near 32
    EXPECT_LT(e1 / e2, 45.0);
}

TEST(Controllers, NamesRoundTrip) {
    for (ControllerKind k : kAllControllers) EXPECT_EQ(parse_controller(to_string(k)), k);
    EXPECT_FALSE(parse_controller("mpc"));
}

TEST(Scenario, Validation) {
    ScenarioConfig cfg = scenario(false);
    EXPECT_NO_THROW(cfg.validate());
    cfg.dt = 0.0;
    EXPECT_THROW(cfg.validate(), ConfigError);
    cfg = scenario(false);
    cfg.constraints[0].alpha = -1.0;
    EXPECT_THROW(cfg.validate(), ConfigError);
    cfg = scenario(false);
    cfg.initial_state.theta = 2.0;
    EXPECT_THROW(cfg.validate(), ConfigError);
}

TEST(Scenario, InitialStateOutsideSafeSetRejectedForDsmCbf) {
    ScenarioConfig cfg = scenario(false);
    cfg.initial_state.xdot = 5.0;
    EXPECT_THROW(run_scenario(cfg, ControllerKind::DsmCbf), ConfigError);
}

TEST(Scenario, LogHasOneRecordPerStep) {
    ScenarioConfig cfg = scenario(false);
    cfg.horizon = 0.5;
    cfg.dt = 1e-3;
    for (ControllerKind k : kAllControllers) {
        const TrajectoryLog log = run_scenario(cfg, k);
        ASSERT_TRUE(log.completed);
        EXPECT_EQ(static_cast<long>(log.samples.size()), cfg.steps() + 1);
        EXPECT_EQ(cfg.steps(), 500);
        for (std::size_t i = 1; i < log.samples.size(); ++i) EXPECT_GT(log.samples[i].t, log.samples[i - 1].t);
    }
}

TEST(Scenario, ZeroHorizonKeepsInitialRecord) {
    ScenarioConfig cfg = scenario(false);
    cfg.horizon = 0.0;
    const TrajectoryLog log = run_scenario(cfg, ControllerKind::DsmCbf);
    ASSERT_EQ(log.samples.size(), 1u);
    EXPECT_EQ(log.samples[0].t, 0.0);
    EXPECT_EQ(log.samples[0].v, 0.1);
}

TEST(Scenario, Deterministic) {
    ScenarioConfig cfg = scenario(true);
    cfg.horizon = 2.0;
    const TrajectoryLog a = run_scenario(cfg, ControllerKind::DsmCbf);
    const TrajectoryLog b = run_scenario(cfg, ControllerKind::DsmCbf);
    ASSERT_EQ(a.samples.size(), b.samples.size());
    for (std::size_t i = 0; i < a.samples.size(); ++i) {
        EXPECT_EQ(a.samples[i].state, b.samples[i].state);
        EXPECT_EQ(a.samples[i].u, b.samples[i].u);
        EXPECT_EQ(a.samples[i].rho, b.samples[i].rho);
    }
}

TEST(Scenario, NominalViolatesScenarioA) {
    const ScenarioConfig cfg = scenario(false);
    const RunSummary s = summarize(run_scenario(cfg, ControllerKind::Nominal), cfg);
    EXPECT_GT(max_violation(s), 1e-3);
}

TEST(Scenario, DsmCbfKeepsScenarioASafe) {
    const ScenarioConfig cfg = scenario(false);
    const TrajectoryLog log = run_scenario(cfg, ControllerKind::DsmCbf);
    const RunSummary s = summarize(log, cfg);
    EXPECT_TRUE(s.completed);
    EXPECT_LE(max_violation(s), 1e-6);
    EXPECT_GE(s.min_margin, -1e-6);
    EXPECT_LE(s.max_abs_u, 4.0 + 1e-9);
    EXPECT_LT(s.settling_time, settling_time(run_scenario(cfg, ControllerKind::Erg), 1.0, 0.02));
    for (const auto& smp : log.samples) {
        EXPECT_GE(smp.v, -1.1);  // v stays admissible
        EXPECT_LE(smp.v, 1.1);
    }
}

TEST(Scenario, ZeroEtaStaysSafe) {
    ScenarioConfig cfg = scenario(false);
    cfg.eta = 0.0;
    const RunSummary s = summarize(run_scenario(cfg, ControllerKind::DsmCbf), cfg);
    EXPECT_TRUE(s.completed);
    EXPECT_LE(max_violation(s), 1e-6);
}

TEST(Scenario, CandidateCbfInfeasibleInScenarioB) {
    const ScenarioConfig cfg = scenario(true);
    const TrajectoryLog log = run_scenario(cfg, ControllerKind::CandidateCbf);
    EXPECT_FALSE(log.completed);
    ASSERT_EQ(log.events.size(), 1u);
    EXPECT_EQ(log.events[0].kind, EventKind::CandidateInfeasible);
    EXPECT_GT(log.events[0].t, 0.0);
    EXPECT_EQ(log.samples.back().status, FilterStatus::Infeasible);
    EXPECT_EQ(log.samples.back().t, log.events[0].t);
}

TEST(Scenario, DomainExitStopsRun) {
    ScenarioConfig cfg;
    cfg.initial_state = {0.0, 1.5, 0.0, 6.0};
    cfg.dt = 1e-3;
    cfg.horizon = 2.0;
    const TrajectoryLog log = run_scenario(cfg, ControllerKind::Nominal);
    EXPECT_FALSE(log.completed);
    ASSERT_FALSE(log.events.empty());
    EXPECT_EQ(log.events.back().kind, EventKind::DomainExit);
    EXPECT_TRUE(summarize(log, cfg).domain_exit_time.has_value());
}

TEST(Scenario, HalvingStepBarelyMovesTerminalState) {
    for (ControllerKind k : {ControllerKind::Nominal, ControllerKind::Erg}) {
        ScenarioConfig cfg = scenario(false);
        cfg.dt = 1e-3;
        const PlantState a = run_scenario(cfg, k).samples.back().state;
        cfg.dt = 5e-4;
        const PlantState b = run_scenario(cfg, k).samples.back().state;
        EXPECT_LT((a.vec() - b.vec()).lpNorm<Eigen::Infinity>(), 1e-6) << to_string(k);
    }
}

TEST(Scenario, EnergyNonIncreasingUnderPrestabilization) {
    const CraneParams p;
    const PdGains g;
    const LyapunovFunction V(p, g);
    std::mt19937_64 rng(41);
    std::uniform_real_distribution<double> x(-1, 1), th(-1, 1), xd(-2, 2), thd(-2, 2);
    for (int trial = 0; trial < 20; ++trial) {
        StateVector y(x(rng), th(rng), xd(rng), thd(rng));
        const double v = x(rng);
        double prev = V.value(PlantState::from(y), v);
        for (int k = 0; k < 5000; ++k) {
            y = rk4_step(y, [&](const StateVector& s) { return closed_loop_f_pi(PlantState::from(s), v, p, g); }, 1e-3);
            const double now = V.value(PlantState::from(y), v);
            ASSERT_LE(now - prev, 1e-7);
            prev = now;
        }
    }
}

TEST(SettlingTime, Examples) {
    TrajectoryLog log;
    for (int i = 0; i < 10; ++i) {
        Sample s;
        s.t = 0.1 * i;
        s.state.x = 1.0;
        log.samples.push_back(s);
    }
    EXPECT_EQ(settling_time(log, 1.0, 0.02), 0.0);
    EXPECT_TRUE(std::isinf(settling_time(log, 2.0, 0.02)));
    log.samples[4].state.x = 0.9;
    EXPECT_DOUBLE_EQ(settling_time(log, 1.0, 0.02), 0.5);
    EXPECT_THROW(settling_time(log, 1.0, 0.0), ConfigError);
}
