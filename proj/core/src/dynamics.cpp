#include "dsmcbf/dynamics.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "dsmcbf/errors.hpp"

namespace dsmcbf {

void CraneParams::validate() const {
    if (!(cart_mass > 0.0) || !(payload_mass > 0.0) || !(length > 0.0) || !(gravity > 0.0)) {
        std::ostringstream msg;
        msg << "crane parameters must be positive (m_c=" << cart_mass << ", m_p=" << payload_mass
            << ", L=" << length << ", g=" << gravity << ")";
        throw ConfigError(msg.str());
    }
}

void PdGains::validate() const {
    if (!(kp > 0.0) || !(kd > 0.0)) {
        std::ostringstream msg;
        msg << "PD gains must be positive (kp=" << kp << ", kd=" << kd << ")";
        throw ConfigError(msg.str());
    }
}

bool in_model_domain(const PlantState& s) {
    return std::isfinite(s.theta) && std::abs(s.theta) < std::numbers::pi / 2.0;
}

void require_model_domain(const PlantState& s) {
    if (!in_model_domain(s)) {
        std::ostringstream msg;
        msg << "payload angle " << s.theta << " rad outside (-pi/2, pi/2)";
        throw ModelDomainError(msg.str());
    }
}

Eigen::Matrix2d mass_matrix(double theta, const CraneParams& p) {
    const double coupling = -p.payload_mass * p.length * std::cos(theta);
    Eigen::Matrix2d m;
    m << p.cart_mass + p.payload_mass, coupling,
         coupling, p.payload_mass * p.length * p.length;
    return m;
}

double mass_matrix_det(double theta, const CraneParams& p) {
    const double s = std::sin(theta);
    return p.payload_mass * p.length * p.length * (p.cart_mass + p.payload_mass * s * s);
}

namespace {

// M^{-1} rhs through the cofactor formula.
Eigen::Vector2d solve_mass(double theta, const CraneParams& p, const Eigen::Vector2d& rhs) {
    const double m11 = p.cart_mass + p.payload_mass;
    const double m12 = -p.payload_mass * p.length * std::cos(theta);
    const double m22 = p.payload_mass * p.length * p.length;
    const double inv_det = 1.0 / mass_matrix_det(theta, p);
    return {inv_det * (m22 * rhs[0] - m12 * rhs[1]), inv_det * (-m12 * rhs[0] + m11 * rhs[1])};
}

}  // namespace

ControlAffineField control_affine(const PlantState& s, const CraneParams& p) {
    require_model_domain(s);
    const double sin_t = std::sin(s.theta);
    // -V_m(q, qd) qd - G(q)
    const Eigen::Vector2d bias{-p.payload_mass * p.length * s.thetadot * s.thetadot * sin_t,
                               -p.payload_mass * p.gravity * p.length * sin_t};
    const Eigen::Vector2d acc0 = solve_mass(s.theta, p, bias);
    const Eigen::Vector2d acc_u = solve_mass(s.theta, p, Eigen::Vector2d{1.0, 0.0});

    ControlAffineField field;
    field.drift << s.xdot, s.thetadot, acc0[0], acc0[1];
    field.input << 0.0, 0.0, acc_u[0], acc_u[1];
    return field;
}

StateVector crane_dynamics(const PlantState& s, double u, const CraneParams& p) {
    require_model_domain(s);
    const double sin_t = std::sin(s.theta);
    const Eigen::Vector2d rhs{u - p.payload_mass * p.length * s.thetadot * s.thetadot * sin_t,
                              -p.payload_mass * p.gravity * p.length * sin_t};
    const Eigen::Vector2d qdd = solve_mass(s.theta, p, rhs);
    return {s.xdot, s.thetadot, qdd[0], qdd[1]};
}

StateVector closed_loop_f_pi(const PlantState& s, double v, const CraneParams& p,
                             const PdGains& gains) {
    return crane_dynamics(s, prestab_pi(s, v, gains), p);
}

}  // namespace dsmcbf
