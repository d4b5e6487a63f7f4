#include "dsmcbf/safety_filters.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "dsmcbf/errors.hpp"

namespace dsmcbf {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::string describe(const AugmentedState& a, double r) {
    std::ostringstream out;
    out.precision(17);
    out << "x=" << a.plant.x << " theta=" << a.plant.theta << " xdot=" << a.plant.xdot
        << " thetadot=" << a.plant.thetadot << " v=" << a.v << " r=" << r;
    return out.str();
}

}  // namespace

std::string_view to_string(FilterStatus status) {
    return status == FilterStatus::Ok ? "ok" : "infeasible";
}

std::pair<std::size_t, double> dsm_min_over_constraints(const AugmentedState& a,
                                                        std::span<const Dsm> dsms) {
    if (dsms.empty()) throw ConfigError("minimum over an empty DSM list");
    std::size_t index = 0;
    double value = dsms[0].value(a.plant, a.v);
    for (std::size_t i = 1; i < dsms.size(); ++i) {
        const double d = dsms[i].value(a.plant, a.v);
        if (d < value) {
            value = d;
            index = i;
        }
    }
    return {index, value};
}

std::optional<double> input_limit(std::span<const ConstraintSpec> constraints) {
    for (const auto& c : constraints) {
        if (c.kind == ConstraintKind::InputBound) return c.bound;
    }
    return std::nullopt;
}

DsmCbfFilter::DsmCbfFilter(const CraneParams& params, const PdGains& kappa_gains,
                           std::vector<Dsm> dsms, double eta, std::optional<double> u_max)
    : params_(params), kappa_gains_(kappa_gains), dsms_(std::move(dsms)), eta_(eta), u_max_(u_max) {
    if (!(eta_ >= 0.0)) throw ConfigError("eta must be non-negative");
    if (u_max_ && !(*u_max_ > 0.0)) throw ConfigError("u_max must be positive");
    for (const auto& d : dsms_) {
        if (!(d.lyapunov().gains() == dsms_.front().lyapunov().gains())
            || !(d.lyapunov().params() == params_)) {
            throw ConfigError("all DSMs must share one Lyapunov function built on the plant parameters");
        }
    }
}

QpProblem DsmCbfFilter::build_qp(const AugmentedState& a, double r) const {
    const ControlAffineField field = control_affine(a.plant, params_);
    const double kappa = nominal_kappa(a.plant, r, kappa_gains_);
    const double weight = std::max(eta_, kMinEta);

    QpProblem qp;
    qp.H = Eigen::Matrix2d{{2.0, 0.0}, {0.0, 2.0 * weight}};
    qp.f = Eigen::Vector2d{-2.0 * kappa, -2.0 * weight * navigation_field(a.v, r)};
    const auto m = static_cast<Eigen::Index>(dsms_.size());
    qp.A.resize(m, 2);
    qp.b.resize(m);
    for (Eigen::Index i = 0; i < m; ++i) {
        const Dsm& dsm = dsms_[static_cast<std::size_t>(i)];
        const DsmGradient grad = dsm.gradients(a.plant, a.v);
        const double margin = dsm.value(a.plant, a.v);
        qp.A(i, 0) = grad.dx.dot(field.input);
        qp.A(i, 1) = grad.dv;
        qp.b[i] = grad.dx.dot(field.drift) + ClassKLinear{dsm.alpha()}(margin);
    }
    if (u_max_) {
        qp.box = QpBox{Eigen::Vector2d{-*u_max_, -kInf}, Eigen::Vector2d{*u_max_, kInf}};
    }
    return qp;
}

FilterDecision DsmCbfFilter::step(const AugmentedState& a, double r) const {
    for (const auto& dsm : dsms_) {
        const double margin = dsm.value(a.plant, a.v);
        if (margin < -kMarginTolerance) {
            std::ostringstream msg;
            msg.precision(17);
            msg << "augmented state left the safe set: Delta[" << to_string(dsm.constraint().kind)
                << "] = " << margin << " at " << describe(a, r);
            throw SafetyContractViolation(msg.str());
        }
    }
    return solve(a, r);
}

FilterDecision DsmCbfFilter::solve(const AugmentedState& a, double r) const {
    FilterDecision decision;
    decision.margins.reserve(dsms_.size());
    for (const auto& dsm : dsms_) decision.margins.push_back(dsm.value(a.plant, a.v));

    const QpProblem qp = build_qp(a, r);
    const QpSolution sol = solve_qp(qp);
    if (sol.status == QpStatus::Infeasible) {
        std::ostringstream msg;
        msg.precision(17);
        msg << "DSM-CBF QP infeasible at " << describe(a, r) << "; margins:";
        for (std::size_t i = 0; i < dsms_.size(); ++i) {
            msg << ' ' << to_string(dsms_[i].constraint().kind) << '=' << decision.margins[i];
        }
        msg << "; certificate: " << sol.certificate.transpose();
        throw SafetyContractViolation(msg.str());
    }
    decision.u = sol.z[0];
    decision.rho = sol.z[1];
    decision.active_set = sol.active_set;
    return decision;
}

ErgGovernor::ErgGovernor(const CraneParams& params, const PdGains& kappa_gains,
                         std::span<const Dsm> dsms)
    : params_(params), kappa_gains_(kappa_gains) {
    if (dsms.empty()) throw ConfigError("the reference governor needs at least one DSM");
    dsms_.reserve(dsms.size());
    for (const auto& dsm : dsms) dsms_.push_back(dsm.with_gains(kappa_gains));
}

FilterDecision ErgGovernor::step(const AugmentedState& a, double r) const {
    FilterDecision decision;
    decision.u = pd_law(a.plant, a.v, kappa_gains_);
    decision.margins.reserve(dsms_.size());
    for (const auto& dsm : dsms_) decision.margins.push_back(dsm.value(a.plant, a.v));
    const auto [index, margin] = dsm_min_over_constraints(a, dsms_);
    (void)index;
    decision.rho = margin * navigation_field(a.v, r);
    return decision;
}

double CandidateCbf::value(const PlantState& s, const CraneParams& p) const {
    switch (kind) {
        case CandidateCbfKind::PositionLower: return gamma * (s.x - bound) + s.xdot;
        case CandidateCbfKind::PositionUpper: return gamma * (bound - s.x) - s.xdot;
        case CandidateCbfKind::AngleLower: return gamma * (bound + s.theta) + s.thetadot;
        case CandidateCbfKind::AngleUpper: return gamma * (bound - s.theta) - s.thetadot;
        case CandidateCbfKind::Payload:
            return gamma * (bound - s.x - p.length * std::sin(s.theta)) - s.xdot
                 - p.length * s.thetadot * std::cos(s.theta);
    }
    return 0.0;
}

StateVector CandidateCbf::gradient(const PlantState& s, const CraneParams& p) const {
    switch (kind) {
        case CandidateCbfKind::PositionLower: return {gamma, 0.0, 1.0, 0.0};
        case CandidateCbfKind::PositionUpper: return {-gamma, 0.0, -1.0, 0.0};
        case CandidateCbfKind::AngleLower: return {0.0, gamma, 0.0, 1.0};
        case CandidateCbfKind::AngleUpper: return {0.0, -gamma, 0.0, -1.0};
        case CandidateCbfKind::Payload: {
            const double c = std::cos(s.theta);
            return {-gamma, -gamma * p.length * c + p.length * s.thetadot * std::sin(s.theta), -1.0,
                    -p.length * c};
        }
    }
    return StateVector::Zero();
}

std::vector<CandidateCbf> candidate_cbfs_for(const ConstraintSpec& c, double gamma,
                                             double alpha_tilde) {
    switch (c.kind) {
        case ConstraintKind::PositionLower:
            return {{CandidateCbfKind::PositionLower, c.bound, gamma, alpha_tilde}};
        case ConstraintKind::PositionUpper:
            return {{CandidateCbfKind::PositionUpper, c.bound, gamma, alpha_tilde}};
        case ConstraintKind::InputBound: return {};
        case ConstraintKind::AngleBound:
            return {{CandidateCbfKind::AngleLower, c.bound, gamma, alpha_tilde},
                    {CandidateCbfKind::AngleUpper, c.bound, gamma, alpha_tilde}};
        case ConstraintKind::PayloadBound:
            return {{CandidateCbfKind::Payload, c.bound, gamma, alpha_tilde}};
    }
    return {};
}

CandidateCbfFilter::CandidateCbfFilter(const CraneParams& params, const PdGains& kappa_gains,
                                       std::vector<CandidateCbf> cbfs, std::optional<double> u_max)
    : params_(params), kappa_gains_(kappa_gains), cbfs_(std::move(cbfs)), u_max_(u_max) {
    for (const auto& h : cbfs_) {
        if (!(h.gamma > 0.0) || !(h.alpha_tilde > 0.0)) {
            throw ConfigError("candidate CBF slopes and class-K gains must be positive");
        }
    }
}

QpProblem CandidateCbfFilter::build_qp(const PlantState& s, double r) const {
    const ControlAffineField field = control_affine(s, params_);
    QpProblem qp;
    qp.H = Eigen::Matrix<double, 1, 1>{2.0};
    qp.f = Eigen::Matrix<double, 1, 1>{-2.0 * nominal_kappa(s, r, kappa_gains_)};
    const auto m = static_cast<Eigen::Index>(cbfs_.size());
    qp.A.resize(m, 1);
    qp.b.resize(m);
    for (Eigen::Index i = 0; i < m; ++i) {
        const CandidateCbf& h = cbfs_[static_cast<std::size_t>(i)];
        const StateVector grad = h.gradient(s, params_);
        qp.A(i, 0) = grad.dot(field.input);
        qp.b[i] = grad.dot(field.drift) + ClassKLinear{h.alpha_tilde}(h.value(s, params_));
    }
    if (u_max_) {
        qp.box = QpBox{Eigen::Matrix<double, 1, 1>{-*u_max_}, Eigen::Matrix<double, 1, 1>{*u_max_}};
    }
    return qp;
}

FilterDecision CandidateCbfFilter::step(const PlantState& s, double r) const {
    FilterDecision decision;
    decision.margins.reserve(cbfs_.size());
    for (const auto& h : cbfs_) decision.margins.push_back(h.value(s, params_));
    const QpSolution sol = solve_qp(build_qp(s, r));
    if (sol.status == QpStatus::Infeasible) {
        decision.status = FilterStatus::Infeasible;
        decision.u = std::numeric_limits<double>::quiet_NaN();
        return decision;
    }
    decision.u = sol.z[0];
    decision.active_set = sol.active_set;
    return decision;
}

}  // namespace dsmcbf
