#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "dsmcbf/sim_engine.hpp"

namespace dsmcbf::cli {

/// Sweep used by `verify-thresholds`.
struct VerifySettings {
    double v_min = -1.0;
    double v_max = 1.05;
    int points = 23;
    int resolution = 61;
    double tolerance = 0.02;  // relative to Gamma_i(v)

    bool operator==(const VerifySettings&) const = default;
};

/// Everything a config file holds. `controllers` is empty when the file asks
/// for all four.
struct ConfigDocument {
    ScenarioConfig scenario;
    std::vector<ControllerKind> controllers;
    std::uint64_t seed = 1;
    VerifySettings verify;

    bool operator==(const ConfigDocument&) const = default;
};

/// Controllers to run: the explicit list, or all four.
std::vector<ControllerKind> selected_controllers(const ConfigDocument& doc);

/// "all" or one controller name.
std::vector<ControllerKind> parse_controller_selection(const std::string& name);

/// Parses YAML text. A document with a top-level `scenario:` key (a run
/// manifest) is read from that key. Throws ConfigError with
/// "<source>:<line>: <field>: <reason>" diagnostics; the result is validated.
ConfigDocument parse_config(const std::string& text, const std::string& source = "<config>");
ConfigDocument load_config(const std::filesystem::path& path);

/// YAML with every field spelled out and 17 significant digits, so that
/// parse_config(serialize_config(d)) == d.
std::string serialize_config(const ConfigDocument& doc);

struct RunManifest {
    std::string config_path;
    std::string output_dir;
    std::uint64_t seed = 1;
    ConfigDocument resolved;
};

std::string serialize_manifest(const RunManifest& manifest);

}  // namespace dsmcbf::cli
