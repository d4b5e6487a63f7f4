#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>

#include "dsmcbf/sim_engine.hpp"
#include "dsmcbf_cli/config_io.hpp"

namespace dsmcbf::cli {

enum ExitCode : int {
    kExitOk = 0,
    kExitFailure = 1,  // a selftest property failed
    kExitConfig = 2,
    kExitSafety = 3,
    kExitSolver = 4,
};

struct CommandOptions {
    std::string config;
    std::optional<std::string> out;
    std::optional<double> dt;
    std::optional<double> horizon;
    std::optional<std::string> controller;
    std::optional<std::uint64_t> seed;
    std::optional<int> resolution;
};

/// Loads the config and applies the command-line overrides.
ConfigDocument resolve_config(const CommandOptions& opts);

/// CSV with header t,x,theta,xdot,thetadot,v,u,rho,dmin,status, 17 significant digits.
void write_csv(std::ostream& os, const TrajectoryLog& log);

/// YAML summary block for one controller.
void write_summary(std::ostream& os, const RunSummary& s);

int cmd_simulate(const CommandOptions& opts, std::ostream& out, std::ostream& err);
int cmd_verify_thresholds(const CommandOptions& opts, std::ostream& out, std::ostream& err);
int cmd_compare(const CommandOptions& opts, std::ostream& out, std::ostream& err);
int cmd_selftest(const CommandOptions& opts, std::ostream& out, std::ostream& err);

}  // namespace dsmcbf::cli
