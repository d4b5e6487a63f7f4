#include "dsmcbf/qp_solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "dsmcbf/errors.hpp"

namespace dsmcbf {

namespace {

constexpr double kNnlsTol = 1e-13;
constexpr double kFeasibilityCheckTol = 1e-10;
constexpr double kCertificateTol = 1e-9;
constexpr double kStepTol = 1e-12;

Eigen::VectorXd solve_least_squares(const Eigen::MatrixXd& E, const std::vector<int>& cols,
                                    const Eigen::VectorXd& f) {
    Eigen::MatrixXd sub(E.rows(), static_cast<Eigen::Index>(cols.size()));
    for (std::size_t k = 0; k < cols.size(); ++k) sub.col(static_cast<Eigen::Index>(k)) = E.col(cols[k]);
    return sub.colPivHouseholderQr().solve(f);
}

}  // namespace

double KktResiduals::max() const {
    return std::max({stationarity, primal, dual, complementarity});
}

FoldedConstraints fold_constraints(const Eigen::MatrixXd& A, const Eigen::VectorXd& b,
                                   const std::optional<QpBox>& box, Eigen::Index n) {
    std::vector<std::pair<Eigen::VectorXd, double>> rows;
    for (Eigen::Index i = 0; i < A.rows(); ++i) rows.emplace_back(A.row(i).transpose(), b[i]);
    if (box) {
        for (Eigen::Index j = 0; j < n; ++j) {
            if (std::isfinite(box->lower[j])) {
                Eigen::VectorXd a = Eigen::VectorXd::Zero(n);
                a[j] = 1.0;
                rows.emplace_back(a, -box->lower[j]);
            }
            if (std::isfinite(box->upper[j])) {
                Eigen::VectorXd a = Eigen::VectorXd::Zero(n);
                a[j] = -1.0;
                rows.emplace_back(a, box->upper[j]);
            }
        }
    }
    FoldedConstraints out;
    out.A.resize(static_cast<Eigen::Index>(rows.size()), n);
    out.b.resize(static_cast<Eigen::Index>(rows.size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        out.A.row(static_cast<Eigen::Index>(i)) = rows[i].first.transpose();
        out.b[static_cast<Eigen::Index>(i)] = rows[i].second;
    }
    return out;
}

Eigen::VectorXd nnls(const Eigen::MatrixXd& E, const Eigen::VectorXd& f, int max_iterations) {
    const Eigen::Index m = E.cols();
    Eigen::VectorXd x = Eigen::VectorXd::Zero(m);
    std::vector<bool> passive(static_cast<std::size_t>(m), false);
    std::vector<bool> blocked(static_cast<std::size_t>(m), false);
    const double tol = kNnlsTol * std::max(1.0, E.lpNorm<Eigen::Infinity>());

    int iterations = 0;
    while (true) {
        const Eigen::VectorXd w = E.transpose() * (f - E * x);
        Eigen::Index entering = -1;
        for (Eigen::Index j = 0; j < m; ++j) {
            if (passive[j] || blocked[j] || w[j] <= tol) continue;
            if (entering < 0 || w[j] > w[entering]) entering = j;
        }
        if (entering < 0) break;
        passive[entering] = true;

        bool first = true;
        while (true) {
            if (++iterations > max_iterations) {
                throw SolverFailure("NNLS iteration cap exceeded");
            }
            std::vector<int> cols;
            for (Eigen::Index j = 0; j < m; ++j) {
                if (passive[j]) cols.push_back(static_cast<int>(j));
            }
            const Eigen::VectorXd zp = solve_least_squares(E, cols, f);
            Eigen::VectorXd z = Eigen::VectorXd::Zero(m);
            for (std::size_t k = 0; k < cols.size(); ++k) z[cols[k]] = zp[static_cast<Eigen::Index>(k)];

            if (first && z[entering] <= 0.0) {
                // Rounding made the entering column useless; exclude it until x moves.
                passive[entering] = false;
                blocked[entering] = true;
                break;
            }
            first = false;

            bool all_positive = true;
            for (int j : cols) all_positive = all_positive && z[j] > 0.0;
            if (all_positive) {
                x = z;
                std::fill(blocked.begin(), blocked.end(), false);
                break;
            }
            double step = 1.0;
            for (int j : cols) {
                if (z[j] <= 0.0) step = std::min(step, x[j] / (x[j] - z[j]));
            }
            x += step * (z - x);
            for (int j : cols) {
                if (x[j] <= tol) {
                    x[j] = 0.0;
                    passive[j] = false;
                }
            }
            std::fill(blocked.begin(), blocked.end(), false);
        }
    }
    return x;
}

FeasibilityResult phase1_feasibility(const Eigen::MatrixXd& A, const Eigen::VectorXd& b,
                                     const std::optional<QpBox>& box, Eigen::Index n,
                                     int max_iterations) {
    const FoldedConstraints folded = fold_constraints(A, b, box, n);
    const Eigen::Index m = folded.A.rows();

    FeasibilityResult result;
    result.point = Eigen::VectorXd::Zero(n);

    // Rows are normalized so that max(||a_i||, |b_i|) = 1; positive row
    // scaling leaves the feasible set and the sign pattern of a Farkas vector
    // unchanged.
    std::vector<int> kept;
    std::vector<double> scale;
    for (Eigen::Index i = 0; i < m; ++i) {
        const double row_norm = folded.A.row(i).norm();
        const double s = std::max(row_norm, std::abs(folded.b[i]));
        if (row_norm <= 1e-14 * std::max(1.0, s)) {
            if (folded.b[i] < 0.0) {
                result.certificate = Eigen::VectorXd::Zero(m);
                result.certificate[i] = 1.0;
                return result;
            }
            continue;
        }
        kept.push_back(static_cast<int>(i));
        scale.push_back(s);
    }
    if (kept.empty()) {
        result.feasible = true;
        return result;
    }

    const auto k = static_cast<Eigen::Index>(kept.size());
    Eigen::MatrixXd E(n + 1, k);
    for (Eigen::Index c = 0; c < k; ++c) {
        E.block(0, c, n, 1) = folded.A.row(kept[c]).transpose() / scale[c];
        E(n, c) = -folded.b[kept[c]] / scale[c];
    }
    Eigen::VectorXd target = Eigen::VectorXd::Zero(n + 1);
    target[n] = 1.0;

    const Eigen::VectorXd u = nnls(E, target, max_iterations);
    const Eigen::VectorXd r = E * u - target;

    // A feasible problem yields z = -r_head / r_n; an infeasible one leaves
    // r_head = G'u ~ 0 with h'u ~ 1. Accept whichever outcome validates.
    if (r[n] < 0.0) {
        const Eigen::VectorXd z = -r.head(n) / r[n];
        const Eigen::VectorXd slack = folded.A * z + folded.b;
        bool valid = z.allFinite();
        for (Eigen::Index i = 0; i < m && valid; ++i) {
            const double s = std::max({1.0, folded.A.row(i).norm() * z.norm(), std::abs(folded.b[i])});
            valid = slack[i] >= -kFeasibilityCheckTol * s;
        }
        if (valid) {
            result.feasible = true;
            result.point = z;
            return result;
        }
    }
    const double gap = E.row(n).dot(u);
    if (gap > 0.0 && r.head(n).lpNorm<Eigen::Infinity>() <= kCertificateTol * gap) {
        result.certificate = Eigen::VectorXd::Zero(m);
        for (Eigen::Index c = 0; c < k; ++c) result.certificate[kept[c]] = u[c] / scale[c];
        const double norm = result.certificate.lpNorm<Eigen::Infinity>();
        if (norm > 0.0) result.certificate /= norm;
        return result;
    }
    std::ostringstream msg;
    msg << "phase 1 produced neither a feasible point nor a certificate (residual " << r.transpose()
        << ")";
    throw SolverFailure(msg.str());
}

KktResiduals kkt_residuals(const QpProblem& problem, const Eigen::VectorXd& z,
                           const Eigen::VectorXd& multipliers) {
    const FoldedConstraints folded = fold_constraints(problem.A, problem.b, problem.box, z.size());
    const Eigen::VectorXd slack = folded.A * z + folded.b;
    const Eigen::VectorXd hz = problem.H * z;
    const Eigen::VectorXd at_lambda = folded.A.transpose() * multipliers;
    const double z_norm = z.lpNorm<Eigen::Infinity>();

    KktResiduals r;
    const Eigen::VectorXd at_lambda_abs = folded.A.cwiseAbs().transpose() * multipliers.cwiseAbs();
    const double grad_scale = std::max({1.0, hz.lpNorm<Eigen::Infinity>(),
                                        problem.f.lpNorm<Eigen::Infinity>(),
                                        at_lambda_abs.lpNorm<Eigen::Infinity>()});
    r.stationarity = (hz + problem.f - at_lambda).lpNorm<Eigen::Infinity>() / grad_scale;
    for (Eigen::Index i = 0; i < slack.size(); ++i) {
        const double row_scale =
            std::max({1.0, folded.A.row(i).lpNorm<Eigen::Infinity>() * z_norm, std::abs(folded.b[i])});
        const double scaled_slack = slack[i] / row_scale;
        r.primal = std::max(r.primal, -scaled_slack);
        r.dual = std::max(r.dual, -multipliers[i]);
        r.complementarity =
            std::max(r.complementarity, std::min(std::abs(multipliers[i]), std::abs(scaled_slack)));
    }
    return r;
}

QpSolution solve_qp(const QpProblem& problem, const QpOptions& options) {
    const Eigen::Index n = problem.H.rows();
    if (n == 0 || problem.H.cols() != n || problem.f.size() != n
        || (problem.A.rows() > 0 && problem.A.cols() != n) || problem.A.rows() != problem.b.size()
        || (problem.box && (problem.box->lower.size() != n || problem.box->upper.size() != n))) {
        throw ConfigError("QP dimensions are inconsistent");
    }
    const double h_scale = std::max(1.0, problem.H.lpNorm<Eigen::Infinity>());
    if (!(problem.H - problem.H.transpose()).isZero(1e-12 * h_scale)) {
        throw ConfigError("QP Hessian is not symmetric");
    }
    Eigen::LLT<Eigen::MatrixXd> llt(problem.H);
    if (llt.info() != Eigen::Success) throw ConfigError("QP Hessian is not positive definite");

    const FoldedConstraints folded = fold_constraints(problem.A, problem.b, problem.box, n);
    const Eigen::Index m = folded.A.rows();

    QpSolution sol;
    const FeasibilityResult start =
        phase1_feasibility(problem.A, problem.b, problem.box, n, options.max_iterations);
    if (!start.feasible) {
        sol.status = QpStatus::Infeasible;
        sol.certificate = start.certificate;
        sol.z = Eigen::VectorXd::Zero(n);
        sol.multipliers = Eigen::VectorXd::Zero(m);
        return sol;
    }

    Eigen::VectorXd z = start.point;
    std::vector<int> working;  // kept sorted
    Eigen::VectorXd lambda_w;

    for (int iter = 1;; ++iter) {
        if (iter > options.max_iterations) {
            throw SolverFailure("active-set iteration cap exceeded");
        }
        sol.iterations = iter;
        const auto k = static_cast<Eigen::Index>(working.size());
        Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(n + k, n + k);
        kkt.topLeftCorner(n, n) = problem.H;
        for (Eigen::Index i = 0; i < k; ++i) {
            kkt.block(n + i, 0, 1, n) = folded.A.row(working[i]);
            kkt.block(0, n + i, n, 1) = -folded.A.row(working[i]).transpose();
        }
        Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n + k);
        rhs.head(n) = -(problem.H * z + problem.f);
        const Eigen::VectorXd sol_eqp = kkt.fullPivLu().solve(rhs);
        // n independent working rows pin z; any step left is rounding.
        const Eigen::VectorXd p = k >= n ? Eigen::VectorXd::Zero(n) : Eigen::VectorXd(sol_eqp.head(n));
        lambda_w = sol_eqp.tail(k);

        if (p.lpNorm<Eigen::Infinity>() <= kStepTol * (1.0 + z.lpNorm<Eigen::Infinity>())) {
            const double lambda_tol = 1e-12 * std::max(1.0, lambda_w.lpNorm<Eigen::Infinity>());
            Eigen::Index leaving = -1;
            for (Eigen::Index i = 0; i < k; ++i) {
                if (lambda_w[i] < -lambda_tol) {
                    leaving = i;
                    break;
                }
            }
            if (leaving < 0) break;
            working.erase(working.begin() + leaving);
            continue;
        }

        double step = 1.0;
        int blocking = -1;
        const double p_norm = p.norm();
        for (Eigen::Index i = 0; i < m; ++i) {
            if (std::binary_search(working.begin(), working.end(), static_cast<int>(i))) continue;
            const double ap = folded.A.row(i).dot(p);
            if (ap >= -1e-14 * folded.A.row(i).norm() * p_norm) continue;
            const double slack = std::max(0.0, folded.A.row(i).dot(z) + folded.b[i]);
            const double ratio = slack / -ap;
            if (ratio < step) {
                step = ratio;
                blocking = static_cast<int>(i);
            }
        }
        z += step * p;
        if (blocking >= 0) {
            working.insert(std::upper_bound(working.begin(), working.end(), blocking), blocking);
        }
    }

    sol.status = QpStatus::Optimal;
    sol.z = z;
    sol.active_set = working;
    sol.multipliers = Eigen::VectorXd::Zero(m);
    for (std::size_t i = 0; i < working.size(); ++i) {
        sol.multipliers[working[i]] = lambda_w[static_cast<Eigen::Index>(i)];
    }
    const KktResiduals res = kkt_residuals(problem, z, sol.multipliers);
    sol.kkt_residual = res.max();
    if (res.stationarity > options.stationarity_tol || res.primal > options.feasibility_tol
        || res.dual > options.feasibility_tol || res.complementarity > options.feasibility_tol) {
        std::ostringstream msg;
        msg << "QP solution failed KKT check (stationarity " << res.stationarity << ", primal "
            << res.primal << ", dual " << res.dual << ", complementarity " << res.complementarity
            << ")";
        throw SolverFailure(msg.str());
    }
    return sol;
}

}  // namespace dsmcbf
