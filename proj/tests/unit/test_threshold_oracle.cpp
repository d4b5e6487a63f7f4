#include <cmath>

#include <gtest/gtest.h>

#include "dsmcbf/threshold_oracle.hpp"

using namespace dsmcbf;

namespace {

const CraneParams kP;
const PdGains kPi{1.0, 0.1};
const double kThetaMax = 10.0 * M_PI / 180.0;

}  // namespace

TEST(GammaStarOracle, PositionUpperBoundsClosedForm) {
    const LyapunovFunction V(kP, kPi);
    const ConstraintSpec c{ConstraintKind::PositionUpper, 1.1};
    const OracleResult r = gamma_star_oracle(0.5, c, V, 61);
    ASSERT_TRUE(r.found);
    EXPECT_GE(r.level, threshold(c, 0.5, kP, kPi) * (1 - 0.02));
    EXPECT_NEAR(threshold(c, 0.5, kP, kPi), 0.18, 1e-12);
    EXPECT_GE(constraint_slack(c, r.argmin, 0.0, kP), -1e-9);
    EXPECT_LE(constraint_slack(c, r.argmin, 0.0, kP), 1e-6);
}

TEST(GammaStarOracle, AngleMatchesCosineForm) {
    const LyapunovFunction V(kP, kPi);
    const ConstraintSpec c{ConstraintKind::AngleBound, kThetaMax};
    const OracleResult r = gamma_star_oracle(0.5, c, V, 61);
    const double cosine = 0.5 * 9.81 * 0.7 * (1 - std::cos(kThetaMax));
    EXPECT_NEAR(r.level, cosine, 0.01 * cosine);
    // The linear form exceeds the infimum, so it would not be a valid threshold.
    EXPECT_GT(threshold(c, 0.5, kP, kPi, AngleThresholdForm::Linear), 10.0 * r.level);
}

TEST(GammaStarOracle, PayloadIsConservative) {
    const LyapunovFunction V(kP, kPi);
    const ConstraintSpec c{ConstraintKind::PayloadBound, 1.1};
    const OracleResult r = gamma_star_oracle(0.1, c, V, 61);
    EXPECT_GT(r.level, threshold(c, 0.1, kP, kPi));
}

TEST(GammaStarOracle, InputBoundMatchesClosedForm) {
    const LyapunovFunction V(kP, kPi);
    const ConstraintSpec c{ConstraintKind::InputBound, 4.0};
    const OracleResult r = gamma_star_oracle(0.2, c, V, 61);
    ASSERT_TRUE(r.found);
    EXPECT_GE(r.level, threshold(c, 0.2, kP, kPi) * (1 - 0.02));
    EXPECT_LE(r.level, threshold(c, 0.2, kP, kPi) * 1.01);
    EXPECT_GE(std::abs(prestab_pi(r.argmin, 0.2, kPi)), 4.0 - 1e-9);
}

TEST(GammaStarOracle, SweepUpperBoundsEveryThreshold) {
    const LyapunovFunction V(kP, kPi);
    const ConstraintSpec all[] = {{ConstraintKind::PositionLower, -1.1},
                                  {ConstraintKind::PositionUpper, 1.1},
                                  {ConstraintKind::InputBound, 4.0},
                                  {ConstraintKind::AngleBound, kThetaMax},
                                  {ConstraintKind::PayloadBound, 1.1}};
    for (const auto& c : all) {
        for (double v = -1.0; v <= 1.1 + 1e-12; v += 0.15) {
            const double gamma = threshold(c, v, kP, kPi);
            const OracleResult r = gamma_star_oracle(v, c, V, 41);
            EXPECT_LE(gamma, r.level + 0.02 * gamma) << to_string(c.kind) << " v=" << v;
        }
    }
}

TEST(GammaStarOracle, NoViolatingPointGivesInfinity) {
    const LyapunovFunction V(kP, kPi);
    const OracleResult r = gamma_star_oracle(0.0, {ConstraintKind::InputBound, 1e6}, V, 11);
    EXPECT_FALSE(r.found);
    EXPECT_TRUE(std::isinf(r.level));
}
