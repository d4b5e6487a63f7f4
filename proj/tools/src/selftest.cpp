#include <algorithm>
#include <cmath>
#include <functional>
#include <ostream>
#include <numbers>
#include <random>
#include <sstream>

#include "dsmcbf/qp_solver.hpp"
#include "dsmcbf/safety_filters.hpp"
#include "dsmcbf_cli/commands.hpp"

namespace dsmcbf::cli {

namespace {

struct Check {
    const char* name;
    std::function<bool(std::mt19937_64&, std::ostream&)> run;
};

PlantState random_state(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> x(-1.1, 1.1), th(-0.6, 0.6), xd(-1.0, 1.0), thd(-1.5, 1.5);
    return {x(rng), th(rng), xd(rng), thd(rng)};
}

bool gradients_match(const ScenarioConfig& cfg, std::mt19937_64& rng, std::ostream& out) {
    const LyapunovFunction lyap(cfg.params, cfg.prestab);
    std::uniform_real_distribution<double> vdist(-1.0, 1.0);
    double worst = 0.0;
    for (int n = 0; n < 200; ++n) {
        const PlantState s = random_state(rng);
        const double v = vdist(rng);
        const LyapunovGradient g = lyap.gradient(s, v);
        const StateVector base = s.vec();
        for (int i = 0; i < 5; ++i) {
            const double h = 1e-6;
            double fd;
            if (i < 4) {
                StateVector p = base, m = base;
                p[i] += h;
                m[i] -= h;
                fd = (lyap.value(PlantState::from(p), v) - lyap.value(PlantState::from(m), v)) / (2 * h);
            } else {
                fd = (lyap.value(s, v + h) - lyap.value(s, v - h)) / (2 * h);
            }
            const double an = i < 4 ? g.dx[i] : g.dv;
            worst = std::max(worst, std::abs(an - fd) / std::max(1.0, std::abs(fd)));
        }
    }
    out << "max relative error " << worst;
    return worst <= 1e-5;
}

bool control_sharing(const ScenarioConfig& cfg, std::mt19937_64& rng, std::ostream& out) {
    const auto dsms = cfg.build_dsms();
    if (dsms.empty()) {
        out << "no constraints";
        return true;
    }
    const DsmCbfFilter filter(cfg.params, cfg.nominal, dsms, cfg.eta, cfg.u_max());
    std::uniform_real_distribution<double> vdist(-1.1, 1.1);
    int tested = 0;
    int failures = 0;
    while (tested < 1000) {
        const AugmentedState a{random_state(rng), vdist(rng)};
        if (dsm_min_over_constraints(a, dsms).second < 0.0) continue;
        ++tested;
        const QpProblem qp = filter.build_qp(a, cfg.reference);
        const double pi = prestab_pi(a.plant, a.v, cfg.prestab);
        const Eigen::Vector2d z(pi, 0.0);
        const Eigen::VectorXd rows = qp.A * z + qp.b;
        const bool input_ok = !cfg.u_max() || std::abs(pi) <= *cfg.u_max();
        if (!input_ok || (rows.array() < -1e-9 * (1.0 + qp.b.cwiseAbs().maxCoeff())).any()) ++failures;
    }
    out << failures << " failures in " << tested << " safe states";
    return failures == 0;
}

bool qp_kkt(std::mt19937_64& rng, std::ostream& out) {
    std::normal_distribution<double> nd;
    int bad = 0;
    int solved = 0;
    for (int n = 0; n < 300; ++n) {
        QpProblem qp;
        Eigen::Matrix2d L;
        L << 1.0 + std::abs(nd(rng)), 0.0, nd(rng), 1.0 + std::abs(nd(rng));
        qp.H = L * L.transpose();
        qp.f = Eigen::Vector2d(nd(rng), nd(rng));
        // Feasible around z0 by construction; every third problem gets a
        // contradictory pair of half-planes.
        const Eigen::Vector2d z0(nd(rng), nd(rng));
        const bool contradictory = n % 3 == 2;
        qp.A = Eigen::MatrixXd(contradictory ? 5 : 3, 2);
        qp.b = Eigen::VectorXd(qp.A.rows());
        for (int i = 0; i < 3; ++i) {
            qp.A.row(i) << nd(rng), nd(rng);
            qp.b[i] = -qp.A.row(i).dot(z0) + std::abs(nd(rng));
        }
        if (contradictory) {
            const Eigen::Vector2d a(nd(rng), nd(rng));
            qp.A.row(3) = a.transpose();
            qp.A.row(4) = -a.transpose();
            qp.b[3] = -1.0 - std::abs(nd(rng));
            qp.b[4] = 0.5;
        }
        const QpSolution sol = solve_qp(qp);
        if (sol.status == QpStatus::Optimal) {
            ++solved;
            if (sol.kkt_residual > 1e-8) ++bad;
        } else {
            const Eigen::VectorXd y = sol.certificate;
            const FoldedConstraints fc = fold_constraints(qp.A, qp.b, qp.box, 2);
            if ((y.array() < 0.0).any() || (fc.A.transpose() * y).norm() > 1e-8 || fc.b.dot(y) >= 0.0) ++bad;
        }
    }
    out << bad << " bad results, " << solved << " optimal of 300";
    return bad == 0 && solved == 200;
}

bool energy_decreases(const ScenarioConfig& cfg, std::mt19937_64& rng, std::ostream& out) {
    const LyapunovFunction lyap(cfg.params, cfg.prestab);
    std::uniform_real_distribution<double> vdist(-1.0, 1.0);
    double worst = -INFINITY;
    for (int trial = 0; trial < 5; ++trial) {
        StateVector y = random_state(rng).vec();
        const double v = vdist(rng);
        double prev = lyap.value(PlantState::from(y), v);
        for (int k = 0; k < 3000; ++k) {
            y = rk4_step(
                y, [&](const StateVector& s) { return closed_loop_f_pi(PlantState::from(s), v, cfg.params, cfg.prestab); },
                1e-3);
            const double now = lyap.value(PlantState::from(y), v);
            worst = std::max(worst, now - prev);
            prev = now;
        }
    }
    out << "largest per-step increase " << worst << " J";
    return worst <= 1e-7;
}

bool rk4_decay(std::mt19937_64&, std::ostream& out) {
    Eigen::Matrix<double, 1, 1> y;
    y << 1.0;
    y = rk4_step(y, [](const Eigen::Matrix<double, 1, 1>& s) { return Eigen::Matrix<double, 1, 1>(-s); }, 0.1);
    out << "x(0.1) = " << y[0];
    return std::abs(y[0] - 0.9048375) < 5e-8;
}

}  // namespace

int cmd_selftest(const CommandOptions& opts, std::ostream& out, std::ostream& err) {
    ScenarioConfig cfg;
    std::uint64_t seed = opts.seed.value_or(1);
    if (!opts.config.empty()) {
        try {
            const ConfigDocument doc = resolve_config(opts);
            cfg = doc.scenario;
            seed = doc.seed;
        } catch (const ConfigError& e) {
            err << "config error: " << e.what() << '\n';
            return kExitConfig;
        }
    } else {
        cfg.constraints = {{{ConstraintKind::PositionLower, -1.1}, 10.0, 6.0, 8.0},
                           {{ConstraintKind::PositionUpper, 1.1}, 10.0, 6.0, 8.0},
                           {{ConstraintKind::InputBound, 4.0}, 20.0, 6.0, 8.0},
                           {{ConstraintKind::AngleBound, 10.0 * std::numbers::pi / 180.0}, 80.0, 6.0, 8.0},
                           {{ConstraintKind::PayloadBound, 1.1}, 2.2, 4.0, 3.5}};
    }

    const std::vector<Check> checks = {
        {"rk4-exp-decay", rk4_decay},
        {"lyapunov-gradient-fd", [&](auto& rng, auto& os) { return gradients_match(cfg, rng, os); }},
        {"control-sharing-witness", [&](auto& rng, auto& os) { return control_sharing(cfg, rng, os); }},
        {"qp-kkt-or-certificate", qp_kkt},
        {"energy-non-increasing-under-pi", [&](auto& rng, auto& os) { return energy_decreases(cfg, rng, os); }},
    };

    std::mt19937_64 rng(seed);
    int failed = 0;
    for (const auto& c : checks) {
        bool ok = false;
        std::ostringstream detail;
        try {
            ok = c.run(rng, detail);
        } catch (const std::exception& e) {
            detail << "threw: " << e.what();
        }
        out << (ok ? "PASS " : "FAIL ") << c.name << ": " << detail.str() << '\n';
        if (!ok) ++failed;
    }
    out << (checks.size() - failed) << '/' << checks.size() << " checks passed\n";
    return failed == 0 ? kExitOk : kExitFailure;
}

}  // namespace dsmcbf::cli
