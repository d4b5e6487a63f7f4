#pragma once

#include <Eigen/Dense>

namespace dsmcbf {

using StateVector = Eigen::Vector4d;

/// Physical parameters of the gantry crane.
struct CraneParams {
    double cart_mass = 1.0;     // m_c [kg]
    double payload_mass = 0.5;  // m_p [kg]
    double length = 0.7;        // L [m]
    double gravity = 9.81;      // g [m/s^2]

    /// Throws ConfigError unless every field is strictly positive.
    void validate() const;

    bool operator==(const CraneParams&) const = default;
};

/// Crane configuration and rates [x, theta, xdot, thetadot].
struct PlantState {
    double x = 0.0;         // gantry position [m]
    double theta = 0.0;     // payload angle [rad]
    double xdot = 0.0;      // gantry velocity [m/s]
    double thetadot = 0.0;  // angular rate [rad/s]

    StateVector vec() const { return {x, theta, xdot, thetadot}; }
    static PlantState from(const StateVector& s) { return {s[0], s[1], s[2], s[3]}; }

    bool operator==(const PlantState&) const = default;
};

/// PD gains used by both the prestabilizing law and the nominal law.
struct PdGains {
    double kp = 1.0;  // [N/m]
    double kd = 0.1;  // [N s/m]

    void validate() const;

    bool operator==(const PdGains&) const = default;
};

/// Drift and input vector field of the control-affine form xdot = f0(x) + g(x) u.
struct ControlAffineField {
    StateVector drift;
    StateVector input;
};

/// True iff |theta| < pi/2.
bool in_model_domain(const PlantState& s);

/// Throws ModelDomainError when the state is outside the model domain.
void require_model_domain(const PlantState& s);

/// Configuration-dependent inertia matrix M(q).
Eigen::Matrix2d mass_matrix(double theta, const CraneParams& p);

/// det M(q) = m_p L^2 (m_c + m_p sin^2 theta).
double mass_matrix_det(double theta, const CraneParams& p);

/// Control-affine split of the crane vector field at `s`.
ControlAffineField control_affine(const PlantState& s, const CraneParams& p);

/// State derivative [xdot, thetadot, xddot, thetaddot] for gantry force `u`.
/// The accelerations solve M(q) qdd = B u - V_m(q, qd) qd - G(q) with the
/// closed-form 2x2 inverse.
StateVector crane_dynamics(const PlantState& s, double u, const CraneParams& p);

/// Equilibrium x_bar(r) = [r, 0, 0, 0].
inline PlantState equilibrium_state(double r) { return {r, 0.0, 0.0, 0.0}; }

/// Steady-state input u_bar(r) = 0 for every reference.
inline double equilibrium_input(double /*r*/) { return 0.0; }

/// PD law -kp (x - v) - kd xdot toward reference `v`.
inline double pd_law(const PlantState& s, double v, const PdGains& gains) {
    return -gains.kp * (s.x - v) - gains.kd * s.xdot;
}

/// Prestabilizing controller pi(x, v).
inline double prestab_pi(const PlantState& s, double v, const PdGains& gains) {
    return pd_law(s, v, gains);
}

/// Nominal (performance) controller kappa(x) toward the target `r`.
inline double nominal_kappa(const PlantState& s, double r, const PdGains& gains) {
    return pd_law(s, r, gains);
}

/// Prestabilized closed loop f(x, pi(x, v)).
StateVector closed_loop_f_pi(const PlantState& s, double v, const CraneParams& p,
                             const PdGains& gains);

}  // namespace dsmcbf
