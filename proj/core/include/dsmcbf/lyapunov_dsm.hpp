#pragma once

#include <array>
#include <optional>
#include <span>
#include <string_view>

#include "dsmcbf/dynamics.hpp"

namespace dsmcbf {

/// The five constraint families of the crane. The enumerator order fixes the
/// margin slots Delta_1..Delta_5 used in logs.
enum class ConstraintKind {
    PositionLower,  // x >= bound
    PositionUpper,  // x <= bound
    InputBound,     // |u| <= bound
    AngleBound,     // |theta| <= bound (rad)
    PayloadBound,   // x + L sin(theta) <= bound
};

inline constexpr std::size_t kConstraintSlots = 5;

constexpr std::size_t slot(ConstraintKind kind) { return static_cast<std::size_t>(kind); }

std::string_view to_string(ConstraintKind kind);
std::optional<ConstraintKind> parse_constraint_kind(std::string_view name);

/// One scalar constraint. Position bounds are signed positions, the angle
/// bound is in radians, the input bound in newtons.
struct ConstraintSpec {
    ConstraintKind kind = ConstraintKind::PositionUpper;
    double bound = 0.0;

    bool operator==(const ConstraintSpec&) const = default;
};

/// Checks per-kind bound invariants, uniqueness of kinds, and x_min < x_max.
void validate_constraints(std::span<const ConstraintSpec> constraints);

/// Signed distance to violation: >= 0 iff the constraint holds for state `s`
/// and applied input `u`.
double constraint_slack(const ConstraintSpec& c, const PlantState& s, double u,
                        const CraneParams& p);

/// Whether the steady state (x_bar(v), u_bar(v)) satisfies the constraint,
/// i.e. v lies in the admissible reference set R_i.
bool reference_admissible(const ConstraintSpec& c, double v, const CraneParams& p);

struct LyapunovGradient {
    StateVector dx = StateVector::Zero();
    double dv = 0.0;
};

/// Crane energy plus the PD spring:
///   V(x, v) = 1/2 qd' M(q) qd + m_p g L (1 - cos theta) + 1/2 kp (x - v)^2
/// built from the gains of the prestabilizing law.
class LyapunovFunction {
public:
    LyapunovFunction(const CraneParams& params, const PdGains& gains);

    double value(const PlantState& s, double v) const;
    LyapunovGradient gradient(const PlantState& s, double v) const;

    /// Quadratic-pendulum lower bound with (4 / pi^2) m_p g L theta^2 in place
    /// of the cosine potential.
    double lower_bound(const PlantState& s, double v) const;

    const CraneParams& params() const { return params_; }
    const PdGains& gains() const { return gains_; }

private:
    double kinetic(const PlantState& s) const;

    CraneParams params_;
    PdGains gains_;
};

/// Which closed form to use for the angle threshold. `Cosine` is the level of
/// the pendulum potential at theta_max; `Linear` is m_p g L (1 - theta_max).
enum class AngleThresholdForm { Cosine, Linear };

/// Threshold Gamma_i(v): a lower bound of inf V over the states violating the
/// constraint, with V built from `gains`. Outside R_i the position and
/// payload thresholds continue as zero.
double threshold(const ConstraintSpec& c, double v, const CraneParams& p, const PdGains& gains,
                 AngleThresholdForm form = AngleThresholdForm::Cosine);

/// dGamma_i/dv.
double threshold_slope(const ConstraintSpec& c, double v, const CraneParams& p,
                       const PdGains& gains);

struct DsmGradient {
    StateVector dx = StateVector::Zero();
    double dv = 0.0;
};

/// Lyapunov dynamic safety margin Delta(x, v) = Gamma(v) - V(x, v) for one
/// constraint, together with its linear class-K gain.
class Dsm {
public:
    Dsm(const ConstraintSpec& constraint, const LyapunovFunction& lyapunov, double alpha,
        AngleThresholdForm form = AngleThresholdForm::Cosine, double threshold_scale = 1.0);

    double threshold(double v) const;
    double threshold_slope(double v) const;
    double value(const PlantState& s, double v) const;
    DsmGradient gradients(const PlantState& s, double v) const;

    /// Same constraint and class-K gain with V rebuilt for other PD gains.
    Dsm with_gains(const PdGains& gains) const;
    Dsm with_alpha(double alpha) const;

    const ConstraintSpec& constraint() const { return constraint_; }
    const LyapunovFunction& lyapunov() const { return lyapunov_; }
    double alpha() const { return alpha_; }
    double threshold_scale() const { return threshold_scale_; }
    AngleThresholdForm angle_form() const { return form_; }

private:
    ConstraintSpec constraint_;
    LyapunovFunction lyapunov_;
    double alpha_;
    AngleThresholdForm form_;
    double threshold_scale_;
};

}  // namespace dsmcbf
