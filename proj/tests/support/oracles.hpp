#pragma once

// Test-only reference computations. Nothing here calls into the library code
// it is used to check.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <random>
#include <vector>

#include <Eigen/Dense>

namespace oracle {

/// Solves [[a, b], [c, d]] x = r by Cramer's rule.
inline Eigen::Vector2d cramer(double a, double b, double c, double d, const Eigen::Vector2d& r) {
    const double det = a * d - b * c;
    return {(r[0] * d - b * r[1]) / det, (a * r[1] - c * r[0]) / det};
}

/// Crane accelerations from the Euler-Lagrange equations written out by hand:
///   (mc + mp) xdd - mp L cos(th) thdd + mp L sin(th) thd^2 = u
///   -mp L cos(th) xdd + mp L^2 thdd + mp g L sin(th) = 0
inline Eigen::Vector2d crane_accel(double theta, double thetadot, double u, double mc, double mp,
                                   double L, double g) {
    const double c = std::cos(theta);
    const double s = std::sin(theta);
    return cramer(mc + mp, -mp * L * c, -mp * L * c, mp * L * L,
                  {u - mp * L * s * thetadot * thetadot, -mp * g * L * s});
}

/// Mechanical energy of the crane (no spring term).
inline double crane_energy(const Eigen::Vector4d& s, double mc, double mp, double L, double g) {
    const double th = s[1], xd = s[2], thd = s[3];
    const double kinetic = 0.5 * (mc + mp) * xd * xd - mp * L * std::cos(th) * xd * thd
                         + 0.5 * mp * L * L * thd * thd;
    return kinetic + mp * g * L * (1.0 - std::cos(th));
}

/// Central finite-difference gradient.
inline Eigen::VectorXd fd_gradient(const std::function<double(const Eigen::VectorXd&)>& f,
                                   const Eigen::VectorXd& x, double h = 1e-6) {
    Eigen::VectorXd g(x.size());
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        Eigen::VectorXd p = x, m = x;
        p[i] += h;
        m[i] -= h;
        g[i] = (f(p) - f(m)) / (2.0 * h);
    }
    return g;
}

/// Central finite-difference Jacobian.
inline Eigen::MatrixXd fd_jacobian(const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& f,
                                   const Eigen::VectorXd& x, double h = 1e-6) {
    const Eigen::VectorXd f0 = f(x);
    Eigen::MatrixXd J(f0.size(), x.size());
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        Eigen::VectorXd p = x, m = x;
        p[i] += h;
        m[i] -= h;
        J.col(i) = (f(p) - f(m)) / (2.0 * h);
    }
    return J;
}

/// Two-variable QP  min 1/2 z'Hz + f'z  s.t.  A z + b >= 0, with the feasible
/// set assumed to lie inside [lo, hi]^2.
struct Qp2 {
    Eigen::Matrix2d H;
    Eigen::Vector2d f;
    Eigen::MatrixXd A;  // m x 2
    Eigen::VectorXd b;

    double cost(const Eigen::Vector2d& z) const { return 0.5 * z.dot(H * z) + f.dot(z); }
    double worst_slack(const Eigen::Vector2d& z) const {
        return A.rows() == 0 ? INFINITY : (A * z + b).minCoeff();
    }
};

struct GridResult {
    Eigen::Vector2d z = Eigen::Vector2d::Zero();
    double cost = INFINITY;
    bool found = false;
};

/// Nested grid scan down to `resolution`, then a pattern search over the
/// axes and each constraint tangent with projection back onto violated
/// half-planes.
inline GridResult qp_grid_argmin(const Qp2& qp, double lo, double hi, double resolution = 1e-3) {
    GridResult best;
    auto scan = [&](double x0, double x1, double y0, double y1, int n) {
        GridResult r;
        for (int i = 0; i <= n; ++i) {
            for (int j = 0; j <= n; ++j) {
                const Eigen::Vector2d z(x0 + (x1 - x0) * i / n, y0 + (y1 - y0) * j / n);
                if (qp.worst_slack(z) < 0.0) continue;
                const double c = qp.cost(z);
                if (c < r.cost) r = {z, c, true};
            }
        }
        return r;
    };
    const int n = 200;
    double h = (hi - lo) / n;
    best = scan(lo, hi, lo, hi, n);
    if (!best.found) return best;
    while (h > resolution) {
        const double w = 2.0 * h;
        const GridResult r = scan(best.z[0] - w, best.z[0] + w, best.z[1] - w, best.z[1] + w, 40);
        if (r.found && r.cost <= best.cost) best = r;
        h = 2.0 * w / 40;
    }

    std::vector<Eigen::Vector2d> dirs = {{1, 0}, {-1, 0}, {0, 1}, {0, -1},
                                         {M_SQRT1_2, M_SQRT1_2}, {-M_SQRT1_2, -M_SQRT1_2},
                                         {M_SQRT1_2, -M_SQRT1_2}, {-M_SQRT1_2, M_SQRT1_2}};
    for (Eigen::Index i = 0; i < qp.A.rows(); ++i) {
        const Eigen::Vector2d a = qp.A.row(i).transpose();
        if (a.norm() == 0.0) continue;
        const Eigen::Vector2d t(-a[1] / a.norm(), a[0] / a.norm());
        dirs.push_back(t);
        dirs.push_back(-t);
    }
    auto project = [&](Eigen::Vector2d z) {
        for (int sweep = 0; sweep < 50; ++sweep) {
            bool moved = false;
            for (Eigen::Index i = 0; i < qp.A.rows(); ++i) {
                const Eigen::Vector2d a = qp.A.row(i).transpose();
                const double s = a.dot(z) + qp.b[i];
                if (s < 0.0) {
                    z -= s / a.squaredNorm() * a;
                    moved = true;
                }
            }
            if (!moved) break;
        }
        return z;
    };
    double step = h;
    while (step > 1e-13) {
        bool improved = false;
        for (const auto& d : dirs) {
            const Eigen::Vector2d trial = project(best.z + step * d);
            if (qp.worst_slack(trial) < -1e-13) continue;
            const double c = qp.cost(trial);
            if (c < best.cost) {
                best.z = trial;
                best.cost = c;
                improved = true;
            }
        }
        if (!improved) step *= 0.5;
    }
    return best;
}

/// Grid scan of {A z + b >= 0} over [-10, 10]^2 at spacing h. Reports
/// whether some grid point has every slack at least `margin`.
inline bool grid_feasible(const Eigen::MatrixXd& A, const Eigen::VectorXd& b, double h, double margin) {
    const int n = static_cast<int>(std::lround(20.0 / h));
    for (int i = 0; i <= n; ++i) {
        for (int j = 0; j <= n; ++j) {
            const Eigen::Vector2d z(-10.0 + h * i, -10.0 + h * j);
            if ((A * z + b).minCoeff() >= margin) return true;
        }
    }
    return false;
}

}  // namespace oracle
