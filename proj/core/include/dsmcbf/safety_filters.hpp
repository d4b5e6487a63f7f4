#pragma once

#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "dsmcbf/dynamics.hpp"
#include "dsmcbf/lyapunov_dsm.hpp"
#include "dsmcbf/qp_solver.hpp"

namespace dsmcbf {

/// alpha(c) = gain * c.
struct ClassKLinear {
    double gain = 1.0;
    double operator()(double c) const { return gain * c; }
};

/// Plant state stacked with the virtual reference fed to the prestabilizing law.
struct AugmentedState {
    PlantState plant;
    double v = 0.0;
};

enum class FilterStatus { Ok, Infeasible };

std::string_view to_string(FilterStatus status);

struct FilterDecision {
    double u = 0.0;    // applied force [N]
    double rho = 0.0;  // virtual reference rate [m/s]
    FilterStatus status = FilterStatus::Ok;
    /// One entry per DSM / candidate CBF, in the order the filter was given.
    std::vector<double> margins;
    /// Folded QP rows tight at the solution.
    std::vector<int> active_set;
};

/// Smallest margin and its index (first index on ties). Throws ConfigError on
/// an empty list.
std::pair<std::size_t, double> dsm_min_over_constraints(const AugmentedState& a,
                                                        std::span<const Dsm> dsms);

/// Navigation field for an interval of admissible references: rho(v) = r - v.
inline double navigation_field(double v, double r) { return r - v; }

/// Largest input magnitude allowed by an input-bound constraint, if any.
std::optional<double> input_limit(std::span<const ConstraintSpec> constraints);

/// QP filter on the augmented system (x, v) with decision (u, rho):
///
///   min |u - kappa(x)|^2 + eta |rho - (r - v)|^2
///   s.t. dDelta_i/dx (f0 + g u) + dDelta_i/dv rho + alpha_i Delta_i >= 0,  |u| <= u_max
///
/// Every Delta_i must share the prestabilizing law; the pair (pi(x, v), 0)
/// then satisfies all rows whenever (x, v) lies in the safe set.
class DsmCbfFilter {
public:
    /// Start-of-step margins below this are a contract violation.
    static constexpr double kMarginTolerance = 1e-9;
    /// Weight used in place of eta = 0 so that the QP stays strictly convex.
    static constexpr double kMinEta = 1e-8;

    DsmCbfFilter(const CraneParams& params, const PdGains& kappa_gains, std::vector<Dsm> dsms,
                 double eta, std::optional<double> u_max);

    /// Throws SafetyContractViolation when the state is outside the safe set
    /// or the QP is infeasible.
    FilterDecision step(const AugmentedState& a, double r) const;

    /// Same QP without the safe-set precondition; used for intermediate
    /// integrator stages. Still throws when the QP is infeasible.
    FilterDecision solve(const AugmentedState& a, double r) const;

    /// The QP assembled by `step`, exposed for diagnostics and tests.
    QpProblem build_qp(const AugmentedState& a, double r) const;

    const std::vector<Dsm>& dsms() const { return dsms_; }
    std::optional<double> u_max() const { return u_max_; }
    double eta() const { return eta_; }

private:
    CraneParams params_;
    PdGains kappa_gains_;
    std::vector<Dsm> dsms_;
    double eta_;
    std::optional<double> u_max_;
};

/// Explicit reference governor: kappa tracks the virtual reference and
///   vdot = min_i Delta_i^kappa(x, v) (r - v)
/// with each DSM rebuilt from the nominal gains.
class ErgGovernor {
public:
    ErgGovernor(const CraneParams& params, const PdGains& kappa_gains,
                std::span<const Dsm> dsms);

    /// Returns (u, rho) together with the margins in the decision record.
    FilterDecision step(const AugmentedState& a, double r) const;

    const std::vector<Dsm>& dsms() const { return dsms_; }

private:
    CraneParams params_;
    PdGains kappa_gains_;
    std::vector<Dsm> dsms_;
};

enum class CandidateCbfKind { PositionLower, PositionUpper, AngleLower, AngleUpper, Payload };

inline constexpr std::size_t kCandidateSlots = 5;

/// Hand-designed barrier candidate of relative degree one, e.g.
/// h = gamma (x_max - x) - xdot. Nothing guarantees the CBF condition.
struct CandidateCbf {
    CandidateCbfKind kind = CandidateCbfKind::PositionUpper;
    double bound = 0.0;        // x_min, x_max, theta_max or p_max
    double gamma = 1.0;        // slope [1/s]
    double alpha_tilde = 1.0;  // class-K gain [1/s]

    double value(const PlantState& s, const CraneParams& p) const;
    StateVector gradient(const PlantState& s, const CraneParams& p) const;
};

/// Candidate barriers implied by a constraint (the angle bound yields two;
/// the input bound yields none and is handled as a box).
std::vector<CandidateCbf> candidate_cbfs_for(const ConstraintSpec& c, double gamma,
                                             double alpha_tilde);

/// QP over u alone:
///   min |u - kappa(x)|^2  s.t.  dh_i/dx (f0 + g u) + alpha~_i h_i >= 0,  |u| <= u_max.
/// Infeasibility is reported in the status, never thrown.
class CandidateCbfFilter {
public:
    CandidateCbfFilter(const CraneParams& params, const PdGains& kappa_gains,
                       std::vector<CandidateCbf> cbfs, std::optional<double> u_max);

    FilterDecision step(const PlantState& s, double r) const;
    QpProblem build_qp(const PlantState& s, double r) const;

    const std::vector<CandidateCbf>& cbfs() const { return cbfs_; }

private:
    CraneParams params_;
    PdGains kappa_gains_;
    std::vector<CandidateCbf> cbfs_;
    std::optional<double> u_max_;
};

}  // namespace dsmcbf
