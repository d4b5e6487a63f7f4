#include "dsmcbf/threshold_oracle.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

#include "dsmcbf/errors.hpp"

namespace dsmcbf {

namespace {

// Violation test shared by the scan and the refinement. The input constraint
// is evaluated on the prestabilizing law, not on an applied input.
double unsafe_slack(const ConstraintSpec& c, const PlantState& s, double v,
                    const LyapunovFunction& lyap) {
    const double u = c.kind == ConstraintKind::InputBound ? prestab_pi(s, v, lyap.gains()) : 0.0;
    return constraint_slack(c, s, u, lyap.params());
}

// Moves the pivot coordinate of `s` onto the constraint boundary. Returns
// false when the boundary point leaves the model domain.
bool project_to_boundary(const ConstraintSpec& c, PlantState& s, double v,
                         const LyapunovFunction& lyap) {
    const auto& p = lyap.params();
    switch (c.kind) {
        case ConstraintKind::PositionLower:
        case ConstraintKind::PositionUpper: s.x = c.bound; break;
        case ConstraintKind::AngleBound: s.theta = s.theta < 0.0 ? -c.bound : c.bound; break;
        case ConstraintKind::PayloadBound: s.x = c.bound - p.length * std::sin(s.theta); break;
        case ConstraintKind::InputBound: {
            const auto& k = lyap.gains();
            const double sign = prestab_pi(s, v, k) < 0.0 ? -1.0 : 1.0;
            s.xdot = (-sign * c.bound - k.kp * (s.x - v)) / k.kd;
            break;
        }
    }
    return in_model_domain(s);
}

void refine(const ConstraintSpec& c, double v, const LyapunovFunction& lyap,
            const std::array<double, 4>& spacing, OracleResult& best) {
    std::array<double, 4> step = spacing;
    StateVector current = best.argmin.vec();
    double current_level = best.level;

    // Axis directions plus all pairwise diagonals.
    std::vector<StateVector> directions;
    for (int i = 0; i < 4; ++i) {
        for (double sign : {1.0, -1.0}) {
            StateVector d = StateVector::Zero();
            d[i] = sign;
            directions.push_back(d);
        }
        for (int j = i + 1; j < 4; ++j) {
            for (double si : {1.0, -1.0}) {
                for (double sj : {1.0, -1.0}) {
                    StateVector d = StateVector::Zero();
                    d[i] = si;
                    d[j] = sj;
                    directions.push_back(d);
                }
            }
        }
    }

    for (int iter = 0; iter < 20000; ++iter) {
        bool improved = false;
        for (const auto& d : directions) {
            StateVector trial = current;
            for (int i = 0; i < 4; ++i) trial[i] += d[i] * step[i];
            PlantState s = PlantState::from(trial);
            if (!in_model_domain(s)) continue;
            if (unsafe_slack(c, s, v, lyap) > 0.0 && !project_to_boundary(c, s, v, lyap)) continue;
            if (unsafe_slack(c, s, v, lyap) > 1e-12) continue;
            const double level = lyap.value(s, v);
            if (level < current_level) {
                current = s.vec();
                current_level = level;
                improved = true;
            }
        }
        if (!improved) {
            for (auto& h : step) h *= 0.5;
            if (step[0] < 1e-10 * spacing[0]) break;
        }
    }
    best.level = current_level;
    best.argmin = PlantState::from(current);
}

}  // namespace

OracleResult gamma_star_oracle(double v, const ConstraintSpec& c, const LyapunovFunction& lyap,
                               int resolution, const OracleBox& box) {
    if (resolution < 2) throw ConfigError("oracle grid resolution must be at least 2");

    const int n = resolution;
    const auto axis = [n](double lo, double hi) {
        std::vector<double> pts(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) pts[i] = lo + (hi - lo) * i / (n - 1);
        return pts;
    };
    const double theta_max = box.theta_fraction * std::numbers::pi / 2.0;
    const auto xs = axis(v - box.x_half_width, v + box.x_half_width);
    const auto thetas = axis(-theta_max, theta_max);
    const auto xdots = axis(-box.xdot_max, box.xdot_max);
    const auto thetadots = axis(-box.thetadot_max, box.thetadot_max);
    const std::array<double, 4> spacing = {xs[1] - xs[0], thetas[1] - thetas[0],
                                           xdots[1] - xdots[0], thetadots[1] - thetadots[0]};

    // V separates into a position term, a pendulum term and the kinetic
    // quadratic form in (xdot, thetadot) with theta-dependent M.
    std::vector<double> position_term(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) {
        position_term[i] = lyap.value(PlantState{xs[i], 0.0, 0.0, 0.0}, v);
    }
    const bool rate_dependent = c.kind == ConstraintKind::InputBound;

    OracleResult best;
    best.level = std::numeric_limits<double>::infinity();
    for (std::size_t ith = 0; ith < thetas.size(); ++ith) {
        const double th = thetas[ith];
        const double pendulum = lyap.value(PlantState{v, th, 0.0, 0.0}, v);
        const Eigen::Matrix2d m = mass_matrix(th, lyap.params());
        for (std::size_t ix = 0; ix < xs.size(); ++ix) {
            const double base = position_term[ix] + pendulum;
            if (base >= best.level) continue;
            if (!rate_dependent
                && unsafe_slack(c, PlantState{xs[ix], th, 0.0, 0.0}, v, lyap) >= 0.0) {
                continue;
            }
            for (double xd : xdots) {
                if (rate_dependent
                    && unsafe_slack(c, PlantState{xs[ix], th, xd, 0.0}, v, lyap) >= 0.0) {
                    continue;
                }
                for (double td : thetadots) {
                    const double level = base + 0.5 * m(0, 0) * xd * xd + m(0, 1) * xd * td
                                       + 0.5 * m(1, 1) * td * td;
                    if (level < best.level) {
                        best.level = level;
                        best.argmin = PlantState{xs[ix], th, xd, td};
                        best.found = true;
                    }
                }
            }
        }
    }
    if (best.found) refine(c, v, lyap, spacing, best);
    return best;
}

}  // namespace dsmcbf
