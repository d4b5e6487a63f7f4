#include "dsmcbf/sim_engine.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace dsmcbf {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr std::array<std::string_view, 4> kControllerNames = {"nominal", "erg", "cbf", "dsmcbf"};

using AugmentedVector = Eigen::Matrix<double, 5, 1>;

AugmentedVector stack(const PlantState& s, double v) {
    AugmentedVector y;
    y << s.x, s.theta, s.xdot, s.thetadot, v;
    return y;
}

PlantState plant_of(const AugmentedVector& y) { return {y[0], y[1], y[2], y[3]}; }

std::size_t candidate_slot(CandidateCbfKind kind) { return static_cast<std::size_t>(kind); }

double min_finite(std::span<const double> values) {
    double m = std::numeric_limits<double>::infinity();
    for (double v : values) {
        if (std::isfinite(v)) m = std::min(m, v);
    }
    return m;
}

// Evaluates the running policy at one augmented state and fills the sample.
class Policy {
public:
    explicit Policy(const ScenarioConfig& cfg, ControllerKind kind)
        : cfg_(cfg),
          kind_(kind),
          dsms_(cfg.build_dsms()),
          specs_(cfg.constraint_specs()),
          cbf_filter_(cfg.params, cfg.nominal, cfg.build_candidate_cbfs(), cfg.u_max()),
          dsm_filter_(cfg.params, cfg.nominal, dsms_, cfg.eta, cfg.u_max()) {
        if (kind_ == ControllerKind::Erg && !dsms_.empty()) {
            erg_.emplace(cfg.params, cfg.nominal, dsms_);
        }
    }

    FilterDecision decide(const AugmentedVector& y) const {
        const AugmentedState a{plant_of(y), y[4]};
        switch (kind_) {
            case ControllerKind::Nominal: {
                FilterDecision d;
                d.u = nominal_kappa(a.plant, cfg_.reference, cfg_.nominal);
                for (const auto& dsm : dsms_) d.margins.push_back(dsm.value(a.plant, a.v));
                return d;
            }
            case ControllerKind::Erg: {
                if (erg_) return erg_->step(a, cfg_.reference);
                FilterDecision d;
                d.u = pd_law(a.plant, a.v, cfg_.nominal);
                d.rho = navigation_field(a.v, cfg_.reference);
                return d;
            }
            case ControllerKind::CandidateCbf: return cbf_filter_.step(a.plant, cfg_.reference);
            case ControllerKind::DsmCbf: return dsm_filter_.step(a, cfg_.reference);
        }
        return {};
    }

    // Decision at an intermediate RK4 stage. A candidate-CBF QP that is
    // infeasible mid-step falls back to the decision taken at the sample; the
    // next sample reports the event.
    FilterDecision stage_decision(const AugmentedVector& y, const FilterDecision& held) const {
        switch (kind_) {
            case ControllerKind::DsmCbf:
                return dsm_filter_.solve(AugmentedState{plant_of(y), y[4]}, cfg_.reference);
            case ControllerKind::CandidateCbf: {
                FilterDecision d = cbf_filter_.step(plant_of(y), cfg_.reference);
                return d.status == FilterStatus::Ok ? d : held;
            }
            default: return decide(y);
        }
    }

    // Every policy is re-evaluated in every RK4 stage; the first stage reuses
    // the decision taken at the sample.
    AugmentedVector derivative(const AugmentedVector& y, const FilterDecision& d) const {
        AugmentedVector dy;
        dy.head<4>() = crane_dynamics(plant_of(y), d.u, cfg_.params);
        dy[4] = d.rho;
        return dy;
    }

    Sample record(double t, const AugmentedVector& y, const FilterDecision& d) const {
        Sample smp;
        smp.t = t;
        smp.state = plant_of(y);
        smp.v = y[4];
        smp.u = d.u;
        smp.rho = d.rho;
        smp.status = d.status;
        smp.active_set = d.active_set;
        smp.dsm.fill(kNaN);
        smp.cbf.fill(kNaN);
        if (kind_ == ControllerKind::CandidateCbf) {
            const auto& cbfs = cbf_filter_.cbfs();
            for (std::size_t i = 0; i < cbfs.size(); ++i) {
                smp.cbf[candidate_slot(cbfs[i].kind)] = d.margins[i];
            }
            for (const auto& dsm : dsms_) smp.dsm[slot(dsm.constraint().kind)] = dsm.value(smp.state, smp.v);
            smp.dmin = min_finite(smp.cbf);
        } else {
            for (std::size_t i = 0; i < specs_.size() && i < d.margins.size(); ++i) {
                smp.dsm[slot(specs_[i].kind)] = d.margins[i];
            }
            smp.dmin = min_finite(smp.dsm);
        }
        return smp;
    }

private:
    const ScenarioConfig& cfg_;
    ControllerKind kind_;
    std::vector<Dsm> dsms_;
    std::vector<ConstraintSpec> specs_;
    CandidateCbfFilter cbf_filter_;
    DsmCbfFilter dsm_filter_;
    std::optional<ErgGovernor> erg_;
};

}  // namespace

std::string_view to_string(ControllerKind kind) {
    return kControllerNames[static_cast<std::size_t>(kind)];
}

std::optional<ControllerKind> parse_controller(std::string_view name) {
    for (std::size_t i = 0; i < kControllerNames.size(); ++i) {
        if (kControllerNames[i] == name) return static_cast<ControllerKind>(i);
    }
    return std::nullopt;
}

std::string_view to_string(EventKind kind) {
    return kind == EventKind::CandidateInfeasible ? "cbf-infeasible" : "domain-exit";
}

void ScenarioConfig::validate() const {
    params.validate();
    prestab.validate();
    nominal.validate();
    const auto specs = constraint_specs();
    validate_constraints(specs);
    for (const auto& c : constraints) {
        const std::string name(to_string(c.spec.kind));
        if (!(c.alpha > 0.0)) throw ConfigError("alpha for '" + name + "' must be positive");
        if (!(c.cbf_gamma > 0.0)) throw ConfigError("cbf_gamma for '" + name + "' must be positive");
        if (!(c.cbf_alpha > 0.0)) throw ConfigError("cbf_alpha for '" + name + "' must be positive");
        if (!(c.threshold_scale > 0.0)) {
            throw ConfigError("threshold_scale for '" + name + "' must be positive");
        }
    }
    if (!(eta >= 0.0) || !std::isfinite(eta)) throw ConfigError("eta must be a finite value >= 0");
    if (!std::isfinite(reference) || !std::isfinite(initial_reference)) {
        throw ConfigError("references must be finite");
    }
    if (!(dt > 0.0) || !std::isfinite(dt)) throw ConfigError("dt must be positive");
    if (!(horizon >= 0.0) || !std::isfinite(horizon)) throw ConfigError("horizon must be >= 0");
    if (!(settling_band > 0.0)) throw ConfigError("settling band must be positive");
    if (!std::isfinite(initial_state.x) || !std::isfinite(initial_state.xdot)
        || !std::isfinite(initial_state.thetadot) || !in_model_domain(initial_state)) {
        throw ConfigError("initial state must be finite with |theta| < 90 deg");
    }
}

std::vector<ConstraintSpec> ScenarioConfig::constraint_specs() const {
    std::vector<ConstraintSpec> out;
    out.reserve(constraints.size());
    for (const auto& c : constraints) out.push_back(c.spec);
    return out;
}

std::vector<Dsm> ScenarioConfig::build_dsms() const {
    const LyapunovFunction lyap(params, prestab);
    std::vector<Dsm> out;
    out.reserve(constraints.size());
    for (const auto& c : constraints) {
        out.emplace_back(c.spec, lyap, c.alpha, angle_form, c.threshold_scale);
    }
    return out;
}

std::vector<CandidateCbf> ScenarioConfig::build_candidate_cbfs() const {
    std::vector<CandidateCbf> out;
    for (const auto& c : constraints) {
        for (const auto& h : candidate_cbfs_for(c.spec, c.cbf_gamma, c.cbf_alpha)) out.push_back(h);
    }
    return out;
}

std::optional<double> ScenarioConfig::u_max() const { return input_limit(constraint_specs()); }

long ScenarioConfig::steps() const {
    return static_cast<long>(std::floor(horizon / dt + 1e-9));
}

TrajectoryLog run_scenario(const ScenarioConfig& cfg) { return run_scenario(cfg, cfg.controller); }

TrajectoryLog run_scenario(const ScenarioConfig& cfg, ControllerKind controller) {
    cfg.validate();
    const Policy policy(cfg, controller);

    AugmentedVector y = stack(cfg.initial_state, controller == ControllerKind::Erg
                                                         || controller == ControllerKind::DsmCbf
                                                     ? cfg.initial_reference
                                                     : cfg.reference);
    if (controller == ControllerKind::DsmCbf) {
        for (const auto& dsm : cfg.build_dsms()) {
            const double margin = dsm.value(cfg.initial_state, cfg.initial_reference);
            if (margin < 0.0) {
                std::ostringstream msg;
                msg << "initial augmented state is outside the safe set of '"
                    << to_string(dsm.constraint().kind) << "' (Delta = " << margin << ")";
                throw ConfigError(msg.str());
            }
        }
    }

    TrajectoryLog log;
    log.controller = controller;
    const long n = cfg.steps();
    log.samples.reserve(static_cast<std::size_t>(n + 1));

    for (long k = 0; k <= n; ++k) {
        const double t = static_cast<double>(k) * cfg.dt;
        const FilterDecision decision = policy.decide(y);
        log.samples.push_back(policy.record(t, y, decision));
        if (decision.status == FilterStatus::Infeasible) {
            log.events.push_back({EventKind::CandidateInfeasible, t, "candidate-CBF QP infeasible"});
            log.completed = false;
            break;
        }
        if (k == n) break;
        try {
            bool first_stage = true;
            y = rk4_step(
                y,
                [&](const AugmentedVector& state) {
                    if (first_stage) {
                        first_stage = false;
                        return policy.derivative(state, decision);
                    }
                    return policy.derivative(state, policy.stage_decision(state, decision));
                },
                cfg.dt);
            require_model_domain(plant_of(y));
        } catch (const ModelDomainError& e) {
            log.events.push_back({EventKind::DomainExit, t + cfg.dt, e.what()});
            log.completed = false;
            break;
        }
    }
    return log;
}

double settling_time(const TrajectoryLog& log, double r, double band) {
    if (!(band > 0.0)) throw ConfigError("settling band must be positive");
    if (log.samples.empty()) return std::numeric_limits<double>::infinity();
    for (std::size_t i = log.samples.size(); i-- > 0;) {
        if (std::abs(log.samples[i].state.x - r) > band) {
            return i + 1 < log.samples.size() ? log.samples[i + 1].t
                                              : std::numeric_limits<double>::infinity();
        }
    }
    return log.samples.front().t;
}

RunSummary summarize(const TrajectoryLog& log, const ScenarioConfig& cfg) {
    RunSummary s;
    s.controller = log.controller;
    s.completed = log.completed;
    s.settling_time = settling_time(log, cfg.reference, cfg.settling_band);
    s.max_violation.fill(kNaN);
    for (const auto& c : cfg.constraints) s.max_violation[slot(c.spec.kind)] = 0.0;
    for (const auto& smp : log.samples) {
        if (std::isfinite(smp.u)) s.max_abs_u = std::max(s.max_abs_u, std::abs(smp.u));
        s.min_margin = std::min(s.min_margin, smp.dmin);
        for (const auto& c : cfg.constraints) {
            if (c.spec.kind == ConstraintKind::InputBound && !std::isfinite(smp.u)) continue;
            const double slack = constraint_slack(c.spec, smp.state, smp.u, cfg.params);
            double& worst = s.max_violation[slot(c.spec.kind)];
            worst = std::max(worst, -slack);
        }
    }
    for (const auto& e : log.events) {
        if (e.kind == EventKind::CandidateInfeasible) s.infeasible_time = e.t;
        if (e.kind == EventKind::DomainExit) s.domain_exit_time = e.t;
    }
    return s;
}

}  // namespace dsmcbf
