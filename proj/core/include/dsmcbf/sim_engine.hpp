#pragma once

#include <array>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "dsmcbf/dynamics.hpp"
#include "dsmcbf/errors.hpp"
#include "dsmcbf/lyapunov_dsm.hpp"
#include "dsmcbf/safety_filters.hpp"

namespace dsmcbf {

/// Classical fourth-order Runge-Kutta step. Inputs computed outside `f` are
/// held over all four stages.
template <class Vec, class Field>
Vec rk4_step(const Vec& y, Field&& f, double dt) {
    if (!(dt > 0.0)) throw ConfigError("integration step must be positive");
    const Vec k1 = f(y);
    const Vec k2 = f(Vec(y + 0.5 * dt * k1));
    const Vec k3 = f(Vec(y + 0.5 * dt * k2));
    const Vec k4 = f(Vec(y + dt * k3));
    return y + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

enum class ControllerKind { Nominal, Erg, CandidateCbf, DsmCbf };

inline constexpr std::array<ControllerKind, 4> kAllControllers = {
    ControllerKind::Nominal, ControllerKind::Erg, ControllerKind::CandidateCbf,
    ControllerKind::DsmCbf};

/// Short names used on the command line and in file names: nominal, erg, cbf, dsmcbf.
std::string_view to_string(ControllerKind kind);
std::optional<ControllerKind> parse_controller(std::string_view name);

/// One active constraint with the gains of every policy that enforces it.
struct ConstraintEntry {
    ConstraintSpec spec;
    double alpha = 1.0;            // DSM class-K gain
    double cbf_gamma = 6.0;        // candidate CBF slope
    double cbf_alpha = 8.0;        // candidate CBF class-K gain
    double threshold_scale = 1.0;  // multiplies Gamma_i

    bool operator==(const ConstraintEntry&) const = default;
};

struct ScenarioConfig {
    CraneParams params;
    PdGains prestab{1.0, 0.1};
    PdGains nominal{10.0, 4.0};
    std::vector<ConstraintEntry> constraints;
    double eta = 0.01;
    double reference = 1.0;
    PlantState initial_state;
    double initial_reference = 0.1;
    double dt = 2.5e-4;
    double horizon = 15.0;
    ControllerKind controller = ControllerKind::DsmCbf;
    AngleThresholdForm angle_form = AngleThresholdForm::Cosine;
    double settling_band = 0.02;

    /// Throws ConfigError on any invalid field.
    void validate() const;

    std::vector<ConstraintSpec> constraint_specs() const;
    /// DSMs built on the prestabilizing gains.
    std::vector<Dsm> build_dsms() const;
    std::vector<CandidateCbf> build_candidate_cbfs() const;
    std::optional<double> u_max() const;
    /// Number of integration steps; the log holds steps() + 1 records.
    long steps() const;

    bool operator==(const ScenarioConfig&) const = default;
};

struct Sample {
    double t = 0.0;
    PlantState state;
    double v = 0.0;
    double u = 0.0;
    double rho = 0.0;
    /// Delta_1..Delta_5 by constraint slot; NaN for inactive constraints.
    std::array<double, kConstraintSlots> dsm{};
    /// h_1..h_5 by candidate slot; NaN when not applicable.
    std::array<double, kCandidateSlots> cbf{};
    /// Smallest margin of the running policy (DSMs, or candidate CBFs).
    double dmin = 0.0;
    FilterStatus status = FilterStatus::Ok;
    std::vector<int> active_set;
};

enum class EventKind { CandidateInfeasible, DomainExit };

std::string_view to_string(EventKind kind);

struct Event {
    EventKind kind;
    double t = 0.0;
    std::string detail;
};

struct TrajectoryLog {
    ControllerKind controller = ControllerKind::DsmCbf;
    std::vector<Sample> samples;
    std::vector<Event> events;
    /// False when an event stopped the run before the horizon.
    bool completed = true;
};

/// Integrates the closed loop of `cfg.controller` over the horizon. The policy
/// is evaluated at every sample and again at each later RK4 stage; v is the
/// fifth state for the ERG and DSM-CBF.
/// Throws SafetyContractViolation if the DSM-CBF filter fails, ConfigError if
/// the configuration is invalid.
TrajectoryLog run_scenario(const ScenarioConfig& cfg);
TrajectoryLog run_scenario(const ScenarioConfig& cfg, ControllerKind controller);

/// First logged time after which |x - r| <= band for every later sample; +inf
/// if the last sample is outside the band.
double settling_time(const TrajectoryLog& log, double r, double band);

struct RunSummary {
    ControllerKind controller = ControllerKind::DsmCbf;
    bool completed = true;
    double settling_time = std::numeric_limits<double>::infinity();
    double max_abs_u = 0.0;
    /// Largest violation of each active constraint over all samples (>= 0);
    /// NaN for inactive slots.
    std::array<double, kConstraintSlots> max_violation{};
    double min_margin = std::numeric_limits<double>::infinity();
    std::optional<double> infeasible_time;
    std::optional<double> domain_exit_time;
};

RunSummary summarize(const TrajectoryLog& log, const ScenarioConfig& cfg);

}  // namespace dsmcbf
