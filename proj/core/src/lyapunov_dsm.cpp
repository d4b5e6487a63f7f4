#include "dsmcbf/lyapunov_dsm.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "dsmcbf/errors.hpp"

namespace dsmcbf {

namespace {

constexpr std::array<std::string_view, kConstraintSlots> kKindNames = {
    "position-lower", "position-upper", "input-bound", "angle-bound", "payload-bound"};

double positive_part(double a) { return a > 0.0 ? a : 0.0; }

}  // namespace

std::string_view to_string(ConstraintKind kind) { return kKindNames[slot(kind)]; }

std::optional<ConstraintKind> parse_constraint_kind(std::string_view name) {
    for (std::size_t i = 0; i < kKindNames.size(); ++i) {
        if (kKindNames[i] == name) return static_cast<ConstraintKind>(i);
    }
    return std::nullopt;
}

void validate_constraints(std::span<const ConstraintSpec> constraints) {
    std::array<bool, kConstraintSlots> seen{};
    std::optional<double> lower;
    std::optional<double> upper;
    for (const auto& c : constraints) {
        if (seen[slot(c.kind)]) {
            throw ConfigError("duplicate constraint '" + std::string(to_string(c.kind)) + "'");
        }
        seen[slot(c.kind)] = true;
        if (!std::isfinite(c.bound)) {
            throw ConfigError("non-finite bound for '" + std::string(to_string(c.kind)) + "'");
        }
        switch (c.kind) {
            case ConstraintKind::PositionLower: lower = c.bound; break;
            case ConstraintKind::PositionUpper: upper = c.bound; break;
            case ConstraintKind::InputBound:
                if (!(c.bound > 0.0)) throw ConfigError("input bound u_max must be positive");
                break;
            case ConstraintKind::AngleBound:
                if (!(c.bound > 0.0 && c.bound < std::numbers::pi / 2.0)) {
                    throw ConfigError("angle bound theta_max must lie in (0, 90) deg");
                }
                break;
            case ConstraintKind::PayloadBound:
                if (!(c.bound > 0.0)) throw ConfigError("payload bound p_max must be positive");
                break;
        }
    }
    if (lower && upper && !(*lower < *upper)) {
        std::ostringstream msg;
        msg << "position bounds must satisfy x_min < x_max (got " << *lower << ", " << *upper << ")";
        throw ConfigError(msg.str());
    }
}

double constraint_slack(const ConstraintSpec& c, const PlantState& s, double u,
                        const CraneParams& p) {
    switch (c.kind) {
        case ConstraintKind::PositionLower: return s.x - c.bound;
        case ConstraintKind::PositionUpper: return c.bound - s.x;
        case ConstraintKind::InputBound: return c.bound - std::abs(u);
        case ConstraintKind::AngleBound: return c.bound - std::abs(s.theta);
        case ConstraintKind::PayloadBound: return c.bound - (s.x + p.length * std::sin(s.theta));
    }
    return 0.0;
}

bool reference_admissible(const ConstraintSpec& c, double v, const CraneParams& p) {
    return constraint_slack(c, equilibrium_state(v), equilibrium_input(v), p) >= 0.0;
}

LyapunovFunction::LyapunovFunction(const CraneParams& params, const PdGains& gains)
    : params_(params), gains_(gains) {}

double LyapunovFunction::kinetic(const PlantState& s) const {
    const auto& p = params_;
    return 0.5 * (p.cart_mass + p.payload_mass) * s.xdot * s.xdot
         - p.payload_mass * p.length * std::cos(s.theta) * s.xdot * s.thetadot
         + 0.5 * p.payload_mass * p.length * p.length * s.thetadot * s.thetadot;
}

double LyapunovFunction::value(const PlantState& s, double v) const {
    const auto& p = params_;
    const double e = s.x - v;
    return kinetic(s) + p.payload_mass * p.gravity * p.length * (1.0 - std::cos(s.theta))
         + 0.5 * gains_.kp * e * e;
}

double LyapunovFunction::lower_bound(const PlantState& s, double v) const {
    const auto& p = params_;
    const double e = s.x - v;
    constexpr double kQuadPendulum = 4.0 / (std::numbers::pi * std::numbers::pi);
    return kinetic(s) + kQuadPendulum * p.payload_mass * p.gravity * p.length * s.theta * s.theta
         + 0.5 * gains_.kp * e * e;
}

LyapunovGradient LyapunovFunction::gradient(const PlantState& s, double v) const {
    const auto& p = params_;
    const double sin_t = std::sin(s.theta);
    const double cos_t = std::cos(s.theta);
    const double mpl = p.payload_mass * p.length;
    const double e = s.x - v;

    LyapunovGradient g;
    g.dx << gains_.kp * e,
            mpl * sin_t * s.xdot * s.thetadot + mpl * p.gravity * sin_t,
            (p.cart_mass + p.payload_mass) * s.xdot - mpl * cos_t * s.thetadot,
            -mpl * cos_t * s.xdot + mpl * p.length * s.thetadot;
    g.dv = -gains_.kp * e;
    return g;
}

double threshold(const ConstraintSpec& c, double v, const CraneParams& p, const PdGains& gains,
                 AngleThresholdForm form) {
    switch (c.kind) {
        case ConstraintKind::PositionLower: {
            const double d = positive_part(v - c.bound);
            return 0.5 * gains.kp * d * d;
        }
        case ConstraintKind::PositionUpper: {
            const double d = positive_part(c.bound - v);
            return 0.5 * gains.kp * d * d;
        }
        case ConstraintKind::InputBound:
            return p.cart_mass * c.bound * c.bound
                 / (2.0 * (p.cart_mass * gains.kp + gains.kd * gains.kd));
        case ConstraintKind::AngleBound: {
            const double swing = form == AngleThresholdForm::Cosine ? 1.0 - std::cos(c.bound)
                                                                     : 1.0 - c.bound;
            return p.payload_mass * p.gravity * p.length * swing;
        }
        case ConstraintKind::PayloadBound: {
            const double d = positive_part(c.bound - v);
            const double mpg = p.payload_mass * p.gravity;
            const double pi2 = std::numbers::pi * std::numbers::pi;
            return 4.0 * gains.kp * mpg / (8.0 * mpg + p.length * gains.kp * pi2) * d * d;
        }
    }
    return 0.0;
}

double threshold_slope(const ConstraintSpec& c, double v, const CraneParams& p,
                       const PdGains& gains) {
    switch (c.kind) {
        case ConstraintKind::PositionLower: return gains.kp * positive_part(v - c.bound);
        case ConstraintKind::PositionUpper: return -gains.kp * positive_part(c.bound - v);
        case ConstraintKind::InputBound:
        case ConstraintKind::AngleBound: return 0.0;
        case ConstraintKind::PayloadBound: {
            const double mpg = p.payload_mass * p.gravity;
            const double pi2 = std::numbers::pi * std::numbers::pi;
            const double coeff = 4.0 * gains.kp * mpg / (8.0 * mpg + p.length * gains.kp * pi2);
            return -2.0 * coeff * positive_part(c.bound - v);
        }
    }
    return 0.0;
}

Dsm::Dsm(const ConstraintSpec& constraint, const LyapunovFunction& lyapunov, double alpha,
         AngleThresholdForm form, double threshold_scale)
    : constraint_(constraint),
      lyapunov_(lyapunov),
      alpha_(alpha),
      form_(form),
      threshold_scale_(threshold_scale) {
    if (!(alpha_ > 0.0)) {
        throw ConfigError("class-K gain for '" + std::string(to_string(constraint.kind))
                          + "' must be positive");
    }
    if (!(threshold_scale_ > 0.0)) throw ConfigError("threshold scale must be positive");
}

double Dsm::threshold(double v) const {
    return threshold_scale_
         * dsmcbf::threshold(constraint_, v, lyapunov_.params(), lyapunov_.gains(), form_);
}

double Dsm::threshold_slope(double v) const {
    return threshold_scale_
         * dsmcbf::threshold_slope(constraint_, v, lyapunov_.params(), lyapunov_.gains());
}

double Dsm::value(const PlantState& s, double v) const {
    return threshold(v) - lyapunov_.value(s, v);
}

DsmGradient Dsm::gradients(const PlantState& s, double v) const {
    const LyapunovGradient vg = lyapunov_.gradient(s, v);
    DsmGradient g;
    g.dx = -vg.dx;
    g.dv = threshold_slope(v) - vg.dv;
    return g;
}

Dsm Dsm::with_gains(const PdGains& gains) const {
    return Dsm(constraint_, LyapunovFunction(lyapunov_.params(), gains), alpha_, form_,
               threshold_scale_);
}

Dsm Dsm::with_alpha(double alpha) const {
    return Dsm(constraint_, lyapunov_, alpha, form_, threshold_scale_);
}

}  // namespace dsmcbf
