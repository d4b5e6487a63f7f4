#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "dsmcbf/dynamics.hpp"
#include "dsmcbf/errors.hpp"
#include "oracles.hpp"

using namespace dsmcbf;

namespace {

const CraneParams kParams;  // reference parameter set

PlantState random_state(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> x(-2, 2), th(-1.5, 1.5), xd(-3, 3), thd(-4, 4);
    return {x(rng), th(rng), xd(rng), thd(rng)};
}

}  // namespace

TEST(Dynamics, EquilibriumIsAtRest) {
    const StateVector d = crane_dynamics(equilibrium_state(0.7), equilibrium_input(0.7), kParams);
    EXPECT_EQ(d, StateVector::Zero());
}

TEST(Dynamics, DeflectedPayloadMatchesHandSolved2x2) {
    const PlantState s{0.0, 0.1, 0.0, 0.0};
    const StateVector d = crane_dynamics(s, 0.0, kParams);
    const Eigen::Vector2d qdd = oracle::crane_accel(0.1, 0.0, 0.0, 1.0, 0.5, 0.7, 9.81);
    EXPECT_EQ(d[0], 0.0);
    EXPECT_EQ(d[1], 0.0);
    EXPECT_NEAR(d[2], qdd[0], 1e-13);
    EXPECT_NEAR(d[3], qdd[1], 1e-13);
}

TEST(Dynamics, RandomStatesMatchEulerLagrangeOracle) {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> ud(-10, 10);
    for (int i = 0; i < 1000; ++i) {
        const PlantState s = random_state(rng);
        const double u = ud(rng);
        const StateVector d = crane_dynamics(s, u, kParams);
        const Eigen::Vector2d qdd = oracle::crane_accel(s.theta, s.thetadot, u, 1.0, 0.5, 0.7, 9.81);
        EXPECT_NEAR(d[2], qdd[0], 1e-9 * (1 + std::abs(qdd[0])));
        EXPECT_NEAR(d[3], qdd[1], 1e-9 * (1 + std::abs(qdd[1])));
    }
}

TEST(Dynamics, PowerBalanceEqualsForceTimesVelocity) {
    // dE/dt along the vector field must be u * xdot.
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> ud(-5, 5);
    for (int i = 0; i < 200; ++i) {
        const PlantState s = random_state(rng);
        const double u = ud(rng);
        const StateVector f = crane_dynamics(s, u, kParams);
        const double h = 1e-6;
        const double dE = (oracle::crane_energy(s.vec() + h * f, 1, 0.5, 0.7, 9.81)
                           - oracle::crane_energy(s.vec() - h * f, 1, 0.5, 0.7, 9.81))
                        / (2 * h);
        EXPECT_NEAR(dE, u * s.xdot, 1e-6 * (1 + std::abs(u * s.xdot)));
    }
}

TEST(Dynamics, MassMatrixDeterminantAtZero) {
    EXPECT_NEAR(mass_matrix_det(0.0, kParams), 1.5 * 0.5 * 0.49 - std::pow(0.5 * 0.7, 2), 1e-15);
    EXPECT_NEAR(mass_matrix_det(0.0, kParams), 0.245, 1e-15);
    EXPECT_NEAR(mass_matrix(0.3, kParams).determinant(), mass_matrix_det(0.3, kParams), 1e-14);
}

TEST(Dynamics, MassMatrixDeterminantBoundedBelow) {
    const double floor = kParams.payload_mass * kParams.length * kParams.length * kParams.cart_mass;
    for (double th = -1.5707; th <= 1.5707; th += 1e-3) {
        EXPECT_GE(mass_matrix_det(th, kParams), floor);
    }
}

TEST(Dynamics, ControlAffineSplitIsExact) {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> ud(-20, 20);
    for (int i = 0; i < 1000; ++i) {
        const PlantState s = random_state(rng);
        const double u = ud(rng);
        const ControlAffineField cf = control_affine(s, kParams);
        const StateVector direct = crane_dynamics(s, u, kParams);
        EXPECT_LE((direct - (cf.drift + cf.input * u)).lpNorm<Eigen::Infinity>(),
                  1e-12 * (1 + direct.lpNorm<Eigen::Infinity>()));
    }
}

TEST(Dynamics, DomainExitThrows) {
    EXPECT_THROW(crane_dynamics({0, M_PI / 2, 0, 0}, 0, kParams), ModelDomainError);
    EXPECT_THROW(crane_dynamics({0, -2.0, 0, 0}, 0, kParams), ModelDomainError);
    EXPECT_FALSE(in_model_domain({0, M_PI / 2, 0, 0}));
    EXPECT_TRUE(in_model_domain({0, 1.5, 0, 0}));
}

TEST(Dynamics, InvalidParametersRejected) {
    CraneParams p;
    p.length = 0.0;
    EXPECT_THROW(p.validate(), ConfigError);
    PdGains g{1.0, -0.1};
    EXPECT_THROW(g.validate(), ConfigError);
}

TEST(Dynamics, PrestabilizingLawValues) {
    const PdGains pi_gains{1.0, 0.1};
    EXPECT_EQ(prestab_pi({0.4, 0.3, 0.0, 2.0}, 0.4, pi_gains), 0.0);
    EXPECT_NEAR(prestab_pi({0, 0, 0, 0}, 0.1, pi_gains), 0.1, 1e-15);
    EXPECT_NEAR(prestab_pi({1, 0, 2, 0}, 0.0, pi_gains), -1.2, 1e-15);
}

TEST(Dynamics, NominalLawValues) {
    const PdGains kappa{10.0, 4.0};
    EXPECT_EQ(nominal_kappa(equilibrium_state(1.0), 1.0, kappa), 0.0);
    EXPECT_NEAR(nominal_kappa({0, 0, 0, 0}, 1.0, kappa), 10.0, 1e-15);
    EXPECT_NEAR(nominal_kappa({1, 0, 1, 0}, 1.0, kappa), -4.0, 1e-15);
}

TEST(Dynamics, ClosedLoopIsComposition) {
    std::mt19937_64 rng(6);
    const PdGains gains;
    for (int i = 0; i < 100; ++i) {
        const PlantState s = random_state(rng);
        EXPECT_EQ(closed_loop_f_pi(s, 0.3, kParams, gains),
                  crane_dynamics(s, prestab_pi(s, 0.3, gains), kParams));
    }
    const StateVector d = closed_loop_f_pi({0, 0, 0, 0}, 0.1, kParams, gains);
    EXPECT_EQ(d[0], 0.0);
    EXPECT_EQ(d[1], 0.0);
}

TEST(Dynamics, EquilibriaOfClosedLoop) {
    for (double r = -2.0; r <= 2.0; r += 0.05) {
        EXPECT_LE(closed_loop_f_pi(equilibrium_state(r), r, kParams, {}).lpNorm<Eigen::Infinity>(), 1e-12);
    }
}
