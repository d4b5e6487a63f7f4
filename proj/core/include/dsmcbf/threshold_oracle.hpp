#pragma once

#include "dsmcbf/lyapunov_dsm.hpp"

namespace dsmcbf {

/// Search box for the brute-force threshold. The position range is centred on
/// the reference so the input constraint's minimizer (|x - v| up to
/// u_max / kp) stays inside it.
struct OracleBox {
    double x_half_width = 5.0;     // |x - v| <= x_half_width [m]
    double theta_fraction = 0.999; // |theta| <= theta_fraction * pi/2
    double xdot_max = 3.0;         // [m/s]
    double thetadot_max = 4.0;     // [rad/s]
};

struct OracleResult {
    /// +inf when no grid point violates the constraint.
    double level = 0.0;
    PlantState argmin;
    bool found = false;
};

/// Numerical infimum of V(., v) over the states violating `c` (for the input
/// bound: the states where |pi(x, v)| > u_max). A uniform grid with
/// `resolution` points per axis is scanned, then the best violating point is
/// refined by a pattern search that slides along the constraint boundary.
OracleResult gamma_star_oracle(double v, const ConstraintSpec& c, const LyapunovFunction& lyapunov,
                               int resolution, const OracleBox& box = {});

}  // namespace dsmcbf
