#include "dsmcbf_cli/commands.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "dsmcbf/threshold_oracle.hpp"

namespace dsmcbf::cli {

namespace {

namespace fs = std::filesystem;

std::string num(double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

std::string short_num(double v) {
    std::ostringstream os;
    os << std::setprecision(6) << v;
    return os.str();
}

// Double-quoted YAML scalar on one line.
std::string quoted(std::string text) {
    std::replace(text.begin(), text.end(), '\n', ' ');
    std::ostringstream os;
    os << std::quoted(text);
    return os.str();
}

struct RunOutcome {
    ControllerKind controller;
    std::optional<TrajectoryLog> log;
    std::optional<RunSummary> summary;
    std::string error;
    int code = kExitOk;
};

RunOutcome run_one(const ScenarioConfig& cfg, ControllerKind kind) {
    RunOutcome r{kind, {}, {}, {}, kExitOk};
    try {
        r.log = run_scenario(cfg, kind);
        r.summary = summarize(*r.log, cfg);
    } catch (const SafetyContractViolation& e) {
        r.error = e.what();
        r.code = kExitSafety;
    } catch (const SolverFailure& e) {
        r.error = e.what();
        r.code = kExitSolver;
    } catch (const ConfigError& e) {
        r.error = e.what();
        r.code = kExitConfig;
    }
    return r;
}

void write_file(const fs::path& path, const std::string& text) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw ConfigError("cannot write " + path.string());
    os << text;
}

// Runs with the first error code winning.
int combine(int a, int b) { return a != kExitOk ? a : b; }

template <class F>
int guarded(std::ostream& err, F&& body) {
    try {
        return body();
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const SafetyContractViolation& e) {
        err << "safety contract violation: " << e.what() << '\n';
        return kExitSafety;
    } catch (const SolverFailure& e) {
        err << "solver failure: " << e.what() << '\n';
        return kExitSolver;
    } catch (const std::filesystem::filesystem_error& e) {
        err << "error: " << e.what() << '\n';
        return kExitConfig;
    }
}

}  // namespace

ConfigDocument resolve_config(const CommandOptions& opts) {
    ConfigDocument doc = load_config(opts.config);
    if (opts.dt) doc.scenario.dt = *opts.dt;
    if (opts.horizon) doc.scenario.horizon = *opts.horizon;
    if (opts.seed) doc.seed = *opts.seed;
    if (opts.resolution) {
        if (*opts.resolution < 2) throw ConfigError("--resolution must be >= 2");
        doc.verify.resolution = *opts.resolution;
    }
    if (opts.controller) {
        doc.controllers = parse_controller_selection(*opts.controller);
        if (doc.controllers.size() == 1) doc.scenario.controller = doc.controllers.front();
    }
    doc.scenario.validate();
    return doc;
}

void write_csv(std::ostream& os, const TrajectoryLog& log) {
    os << "t,x,theta,xdot,thetadot,v,u,rho,dmin,status\n";
    os.precision(17);
    for (const auto& s : log.samples) {
        os << s.t << ',' << s.state.x << ',' << s.state.theta << ',' << s.state.xdot << ','
           << s.state.thetadot << ',' << s.v << ',' << s.u << ',' << s.rho << ',' << s.dmin << ','
           << to_string(s.status) << '\n';
    }
}

void write_summary(std::ostream& os, const RunSummary& s) {
    os << "  - controller: " << to_string(s.controller) << '\n'
       << "    completed: " << (s.completed ? "true" : "false") << '\n'
       << "    settling_time: " << num(s.settling_time) << '\n'
       << "    max_abs_u: " << num(s.max_abs_u) << '\n'
       << "    min_margin: " << num(s.min_margin) << '\n'
       << "    max_violation:\n";
    for (std::size_t i = 0; i < kConstraintSlots; ++i) {
        if (std::isnan(s.max_violation[i])) continue;
        os << "      " << to_string(static_cast<ConstraintKind>(i)) << ": " << num(s.max_violation[i])
           << '\n';
    }
    os << "    infeasible_time: " << (s.infeasible_time ? num(*s.infeasible_time) : "null") << '\n'
       << "    domain_exit_time: " << (s.domain_exit_time ? num(*s.domain_exit_time) : "null")
       << '\n';
}

int cmd_simulate(const CommandOptions& opts, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        const ConfigDocument doc = resolve_config(opts);
        const fs::path dir = opts.out.value_or("out");
        fs::create_directories(dir);
        write_file(dir / "manifest.yaml",
                   serialize_manifest({opts.config, dir.string(), doc.seed, doc}));

        std::ostringstream summary;
        summary << "runs:\n";
        int code = kExitOk;
        for (ControllerKind kind : selected_controllers(doc)) {
            RunOutcome r = run_one(doc.scenario, kind);
            code = combine(code, r.code);
            if (!r.log) {
                err << to_string(kind) << ": " << r.error << '\n';
                summary << "  - controller: " << to_string(kind) << '\n'
                        << "    error: " << quoted(r.error) << '\n';
                continue;
            }
            std::ostringstream csv;
            write_csv(csv, *r.log);
            write_file(dir / (std::string(to_string(kind)) + ".csv"), csv.str());
            write_summary(summary, *r.summary);
            out << to_string(kind) << ": " << r.log->samples.size() << " samples, settling "
                << short_num(r.summary->settling_time) << " s";
            for (const auto& e : r.log->events) {
                out << ", " << to_string(e.kind) << " at t=" << short_num(e.t);
            }
            out << '\n';
        }
        write_file(dir / "summary.yaml", summary.str());
        return code;
    });
}

int cmd_compare(const CommandOptions& opts, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        const ConfigDocument doc = resolve_config(opts);
        const ScenarioConfig& cfg = doc.scenario;

        std::ostringstream csv;
        csv << "controller,completed,settling_time,max_abs_u";
        for (std::size_t i = 0; i < kConstraintSlots; ++i) {
            csv << ",viol_" << to_string(static_cast<ConstraintKind>(i));
        }
        csv << ",infeasible_time\n";

        out << std::left << std::setw(9) << "ctrl" << std::setw(11) << "settle[s]" << std::setw(11)
            << "max|u|";
        for (const auto& c : cfg.constraints) out << std::setw(16) << to_string(c.spec.kind);
        out << "infeasible_at\n";

        int code = kExitOk;
        for (ControllerKind kind : kAllControllers) {
            const RunOutcome r = run_one(cfg, kind);
            code = combine(code, r.code);
            if (!r.summary) {
                out << std::setw(9) << to_string(kind) << "error: " << r.error << '\n';
                csv << to_string(kind) << ",error,,,,,,,,\n";
                continue;
            }
            const RunSummary& s = *r.summary;
            out << std::setw(9) << to_string(kind) << std::setw(11) << short_num(s.settling_time)
                << std::setw(11) << short_num(s.max_abs_u);
            for (const auto& c : cfg.constraints) {
                out << std::setw(16) << short_num(s.max_violation[slot(c.spec.kind)]);
            }
            out << (s.infeasible_time ? short_num(*s.infeasible_time) : "-") << '\n';

            csv << to_string(kind) << ',' << (s.completed ? "true" : "false") << ','
                << num(s.settling_time) << ',' << num(s.max_abs_u);
            for (double v : s.max_violation) csv << ',' << (std::isnan(v) ? "" : num(v));
            csv << ',' << (s.infeasible_time ? num(*s.infeasible_time) : "-") << '\n';
        }
        if (opts.out) {
            fs::create_directories(*opts.out);
            write_file(fs::path(*opts.out) / "compare.csv", csv.str());
        }
        return code;
    });
}

int cmd_verify_thresholds(const CommandOptions& opts, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        const ConfigDocument doc = resolve_config(opts);
        const ScenarioConfig& cfg = doc.scenario;
        const VerifySettings& vs = doc.verify;
        if (cfg.constraints.empty()) {
            out << "no constraints\n";
            return static_cast<int>(kExitOk);
        }
        const auto dsms = cfg.build_dsms();
        double worst = 0.0;
        bool sound = true;
        out << std::left << std::setw(16) << "constraint" << std::setw(14) << "worst v"
            << std::setw(14) << "Gamma" << std::setw(14) << "Gamma*" << "excess/Gamma\n";
        for (const auto& dsm : dsms) {
            double worst_rel = -INFINITY;
            double worst_v = vs.v_min;
            double worst_gamma = 0.0;
            double worst_star = 0.0;
            for (int k = 0; k < vs.points; ++k) {
                const double v = vs.points == 1
                                     ? vs.v_min
                                     : vs.v_min + (vs.v_max - vs.v_min) * k / (vs.points - 1);
                const double gamma = dsm.threshold(v);
                const OracleResult star =
                    gamma_star_oracle(v, dsm.constraint(), dsm.lyapunov(), vs.resolution);
                const double excess = gamma - star.level;
                // A zero threshold can only fail against a negative level.
                const double rel = gamma > 0.0 ? excess / gamma : (excess > 0.0 ? INFINITY : 0.0);
                if (excess > vs.tolerance * std::abs(gamma)) sound = false;
                if (rel > worst_rel) {
                    worst_rel = rel;
                    worst_v = v;
                    worst_gamma = gamma;
                    worst_star = star.level;
                }
            }
            worst = std::max(worst, worst_rel);
            out << std::setw(16) << to_string(dsm.constraint().kind) << std::setw(14)
                << short_num(worst_v) << std::setw(14) << short_num(worst_gamma) << std::setw(14)
                << short_num(worst_star) << short_num(worst_rel) << '\n';
        }
        out << "max violation: " << short_num(std::max(0.0, worst)) << " (tolerance "
            << short_num(vs.tolerance) << ")\n";
        out << (sound ? "thresholds sound\n" : "thresholds UNSOUND\n");
        return sound ? static_cast<int>(kExitOk) : static_cast<int>(kExitSafety);
    });
}

}  // namespace dsmcbf::cli
