#pragma once

#include <optional>
#include <vector>

#include <Eigen/Dense>

namespace dsmcbf {

/// Per-variable bounds; infinite entries are ignored.
struct QpBox {
    Eigen::VectorXd lower;
    Eigen::VectorXd upper;
};

/// minimize 1/2 z'Hz + f'z  subject to  A z + b >= 0  and  lower <= z <= upper.
struct QpProblem {
    Eigen::MatrixXd H;
    Eigen::VectorXd f;
    Eigen::MatrixXd A;
    Eigen::VectorXd b;
    std::optional<QpBox> box;
};

/// Inequality rows of a problem with the box folded in: the general rows
/// first, then for each variable its finite lower bound row (z_i - lo >= 0)
/// followed by its finite upper bound row (hi - z_i >= 0).
struct FoldedConstraints {
    Eigen::MatrixXd A;
    Eigen::VectorXd b;
};

FoldedConstraints fold_constraints(const Eigen::MatrixXd& A, const Eigen::VectorXd& b,
                                   const std::optional<QpBox>& box, Eigen::Index n);

enum class QpStatus { Optimal, Infeasible };

struct QpSolution {
    QpStatus status = QpStatus::Optimal;
    Eigen::VectorXd z;
    /// Indices into the folded rows that are in the final working set.
    std::vector<int> active_set;
    /// Multipliers for every folded row (zero off the working set).
    Eigen::VectorXd multipliers;
    /// Farkas vector y >= 0 over the folded rows with A'y = 0 and b'y < 0.
    Eigen::VectorXd certificate;
    double kkt_residual = 0.0;
    int iterations = 0;
};

struct QpOptions {
    double feasibility_tol = 1e-8;
    double stationarity_tol = 1e-8;
    int max_iterations = 200;
};

/// Scale-aware KKT residuals. Stationarity is relative to the largest of
/// |Hz|, |f| and |A|'|lambda|, slacks are divided by max(1, |a_i| |z|, |b_i|), and
/// complementarity is measured as min(|lambda_i|, |scaled slack_i|).
struct KktResiduals {
    double stationarity = 0.0;
    double primal = 0.0;
    double dual = 0.0;
    double complementarity = 0.0;

    double max() const;
};

KktResiduals kkt_residuals(const QpProblem& problem, const Eigen::VectorXd& z,
                           const Eigen::VectorXd& multipliers);

/// Unique global minimizer or a certified infeasibility. Throws ConfigError
/// for inconsistent dimensions or a Hessian that is not positive definite,
/// SolverFailure when the iteration cap is reached.
QpSolution solve_qp(const QpProblem& problem, const QpOptions& options = {});

struct FeasibilityResult {
    bool feasible = false;
    Eigen::VectorXd point;
    Eigen::VectorXd certificate;
};

/// Finds the minimum-norm point of {A z + b >= 0, box} or a Farkas
/// certificate for its emptiness (least-distance programming via NNLS).
FeasibilityResult phase1_feasibility(const Eigen::MatrixXd& A, const Eigen::VectorXd& b,
                                     const std::optional<QpBox>& box, Eigen::Index n,
                                     int max_iterations = 200);

/// Lawson-Hanson non-negative least squares: argmin ||E x - f|| s.t. x >= 0.
Eigen::VectorXd nnls(const Eigen::MatrixXd& E, const Eigen::VectorXd& f, int max_iterations);

}  // namespace dsmcbf
