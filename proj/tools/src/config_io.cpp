#include "dsmcbf_cli/config_io.hpp"

#include <cmath>
#include <fstream>
#include <initializer_list>
#include <numbers>
#include <set>
#include <sstream>

#include <yaml-cpp/yaml.h>

namespace dsmcbf::cli {

namespace {

constexpr double kDegToRad = std::numbers::pi / 180.0;

double to_rad(double deg) { return deg * kDegToRad; }

// A degree value that converts back to exactly `rad`.
double to_deg(double rad) {
    double deg = rad / kDegToRad;
    if (to_rad(deg) == rad) return deg;
    double up = deg;
    double down = deg;
    for (int i = 0; i < 8; ++i) {
        up = std::nextafter(up, INFINITY);
        down = std::nextafter(down, -INFINITY);
        if (to_rad(up) == rad) return up;
        if (to_rad(down) == rad) return down;
    }
    return deg;
}

std::string num(double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

class Reader {
public:
    explicit Reader(std::string source) : source_(std::move(source)) {}

    [[noreturn]] void fail(const YAML::Node& node, const std::string& field,
                           const std::string& reason) const {
        std::ostringstream msg;
        msg << source_;
        if (node.IsDefined() && node.Mark().line >= 0) msg << ':' << node.Mark().line + 1;
        msg << ": " << field << ": " << reason;
        throw ConfigError(msg.str());
    }

    void require_map(const YAML::Node& node, const std::string& field) const {
        if (!node.IsMap()) fail(node, field, "expected a mapping");
    }

    void only_keys(const YAML::Node& node, const std::string& field,
                   std::initializer_list<const char*> keys) const {
        const std::set<std::string> allowed(keys.begin(), keys.end());
        for (const auto& kv : node) {
            const auto key = kv.first.as<std::string>();
            if (!allowed.count(key)) {
                fail(kv.first, field.empty() ? key : field + "." + key, "unknown key");
            }
        }
    }

    void read(const YAML::Node& parent, const char* key, const std::string& field, double& out) const {
        const YAML::Node node = parent[key];
        if (!node) return;
        if (!node.IsScalar()) fail(node, field, "expected a number");
        try {
            out = node.as<double>();
        } catch (const YAML::Exception&) {
            fail(node, field, "not a number: '" + node.Scalar() + "'");
        }
        if (!std::isfinite(out)) fail(node, field, "must be finite");
    }

    template <class Int>
    void read_int(const YAML::Node& parent, const char* key, const std::string& field, Int& out) const {
        const YAML::Node node = parent[key];
        if (!node) return;
        try {
            out = node.as<Int>();
        } catch (const YAML::Exception&) {
            fail(node, field, "not an integer: '" + (node.IsScalar() ? node.Scalar() : "") + "'");
        }
    }

    std::string read_string(const YAML::Node& node, const std::string& field) const {
        if (!node.IsScalar()) fail(node, field, "expected a string");
        return node.Scalar();
    }

    const std::string& source() const { return source_; }

private:
    std::string source_;
};

void read_gains(const Reader& rd, const YAML::Node& root, const char* key, PdGains& g) {
    const YAML::Node node = root[key];
    if (!node) return;
    const std::string field(key);
    rd.require_map(node, field);
    rd.only_keys(node, field, {"kp", "kd"});
    rd.read(node, "kp", field + ".kp", g.kp);
    rd.read(node, "kd", field + ".kd", g.kd);
    try {
        g.validate();
    } catch (const ConfigError& e) {
        rd.fail(node, field, e.what());
    }
}

ConstraintEntry read_constraint(const Reader& rd, const YAML::Node& node, std::size_t index) {
    const std::string field = "constraints[" + std::to_string(index) + "]";
    rd.require_map(node, field);
    rd.only_keys(node, field,
                 {"kind", "bound", "bound_deg", "alpha", "cbf_gamma", "cbf_alpha", "threshold_scale"});
    if (!node["kind"]) rd.fail(node, field + ".kind", "missing");
    const std::string kind_name = rd.read_string(node["kind"], field + ".kind");
    const auto kind = parse_constraint_kind(kind_name);
    if (!kind) rd.fail(node["kind"], field + ".kind", "unknown constraint kind '" + kind_name + "'");

    ConstraintEntry c;
    c.spec.kind = *kind;
    if (*kind == ConstraintKind::AngleBound) {
        if (node["bound"]) rd.fail(node["bound"], field + ".bound", "use bound_deg for the angle bound");
        if (!node["bound_deg"]) rd.fail(node, field + ".bound_deg", "missing");
        double deg = 0.0;
        rd.read(node, "bound_deg", field + ".bound_deg", deg);
        c.spec.bound = to_rad(deg);
    } else {
        if (node["bound_deg"]) rd.fail(node["bound_deg"], field + ".bound_deg", "only valid for angle-bound");
        if (!node["bound"]) rd.fail(node, field + ".bound", "missing");
        rd.read(node, "bound", field + ".bound", c.spec.bound);
    }
    if (!node["alpha"]) rd.fail(node, field + ".alpha", "missing");
    rd.read(node, "alpha", field + ".alpha", c.alpha);
    rd.read(node, "cbf_gamma", field + ".cbf_gamma", c.cbf_gamma);
    rd.read(node, "cbf_alpha", field + ".cbf_alpha", c.cbf_alpha);
    rd.read(node, "threshold_scale", field + ".threshold_scale", c.threshold_scale);
    return c;
}

ConfigDocument read_document(const Reader& rd, const YAML::Node& root) {
    rd.require_map(root, "<root>");
    rd.only_keys(root, "",
                 {"plant", "prestabilizing", "nominal", "reference", "initial_reference",
                  "initial_state", "eta", "dt", "horizon", "controller", "angle_threshold",
                  "settling_band", "seed", "constraints", "verify"});
    ConfigDocument doc;
    ScenarioConfig& sc = doc.scenario;

    if (const YAML::Node plant = root["plant"]) {
        rd.require_map(plant, "plant");
        rd.only_keys(plant, "plant", {"cart_mass", "payload_mass", "length", "gravity"});
        rd.read(plant, "cart_mass", "plant.cart_mass", sc.params.cart_mass);
        rd.read(plant, "payload_mass", "plant.payload_mass", sc.params.payload_mass);
        rd.read(plant, "length", "plant.length", sc.params.length);
        rd.read(plant, "gravity", "plant.gravity", sc.params.gravity);
        try {
            sc.params.validate();
        } catch (const ConfigError& e) {
            rd.fail(plant, "plant", e.what());
        }
    }
    read_gains(rd, root, "prestabilizing", sc.prestab);
    read_gains(rd, root, "nominal", sc.nominal);
    rd.read(root, "reference", "reference", sc.reference);
    rd.read(root, "initial_reference", "initial_reference", sc.initial_reference);
    if (const YAML::Node init = root["initial_state"]) {
        rd.require_map(init, "initial_state");
        rd.only_keys(init, "initial_state", {"x", "theta_deg", "xdot", "thetadot_deg"});
        double theta_deg = to_deg(sc.initial_state.theta);
        double thetadot_deg = to_deg(sc.initial_state.thetadot);
        rd.read(init, "x", "initial_state.x", sc.initial_state.x);
        rd.read(init, "theta_deg", "initial_state.theta_deg", theta_deg);
        rd.read(init, "xdot", "initial_state.xdot", sc.initial_state.xdot);
        rd.read(init, "thetadot_deg", "initial_state.thetadot_deg", thetadot_deg);
        sc.initial_state.theta = to_rad(theta_deg);
        sc.initial_state.thetadot = to_rad(thetadot_deg);
    }
    rd.read(root, "eta", "eta", sc.eta);
    rd.read(root, "dt", "dt", sc.dt);
    rd.read(root, "horizon", "horizon", sc.horizon);
    rd.read(root, "settling_band", "settling_band", sc.settling_band);

    if (const YAML::Node ctl = root["controller"]) {
        const std::string name = rd.read_string(ctl, "controller");
        try {
            doc.controllers = parse_controller_selection(name);
        } catch (const ConfigError& e) {
            rd.fail(ctl, "controller", e.what());
        }
        if (doc.controllers.size() == 1) sc.controller = doc.controllers.front();
    }
    if (const YAML::Node form = root["angle_threshold"]) {
        const std::string name = rd.read_string(form, "angle_threshold");
        if (name == "cosine") {
            sc.angle_form = AngleThresholdForm::Cosine;
        } else if (name == "linear") {
            sc.angle_form = AngleThresholdForm::Linear;
        } else {
            rd.fail(form, "angle_threshold", "expected 'cosine' or 'linear', got '" + name + "'");
        }
    }
    rd.read_int(root, "seed", "seed", doc.seed);

    if (const YAML::Node list = root["constraints"]) {
        if (!list.IsSequence()) rd.fail(list, "constraints", "expected a list");
        for (std::size_t i = 0; i < list.size(); ++i) {
            sc.constraints.push_back(read_constraint(rd, list[i], i));
        }
        try {
            validate_constraints(sc.constraint_specs());
        } catch (const ConfigError& e) {
            rd.fail(list, "constraints", e.what());
        }
    }

    if (const YAML::Node verify = root["verify"]) {
        rd.require_map(verify, "verify");
        rd.only_keys(verify, "verify", {"v_min", "v_max", "points", "resolution", "tolerance"});
        rd.read(verify, "v_min", "verify.v_min", doc.verify.v_min);
        rd.read(verify, "v_max", "verify.v_max", doc.verify.v_max);
        rd.read_int(verify, "points", "verify.points", doc.verify.points);
        rd.read_int(verify, "resolution", "verify.resolution", doc.verify.resolution);
        rd.read(verify, "tolerance", "verify.tolerance", doc.verify.tolerance);
        if (doc.verify.points < 1) rd.fail(verify, "verify.points", "must be >= 1");
        if (doc.verify.resolution < 2) rd.fail(verify, "verify.resolution", "must be >= 2");
        if (!(doc.verify.v_min <= doc.verify.v_max)) rd.fail(verify, "verify", "v_min must not exceed v_max");
        if (!(doc.verify.tolerance >= 0.0)) rd.fail(verify, "verify.tolerance", "must be >= 0");
    }

    try {
        sc.validate();
    } catch (const ConfigError& e) {
        throw ConfigError(rd.source() + ": " + e.what());
    }
    return doc;
}

void emit_document(std::ostream& os, const ConfigDocument& doc, const std::string& indent) {
    const ScenarioConfig& sc = doc.scenario;
    const auto& p = sc.params;
    os << indent << "plant:\n"
       << indent << "  cart_mass: " << num(p.cart_mass) << '\n'
       << indent << "  payload_mass: " << num(p.payload_mass) << '\n'
       << indent << "  length: " << num(p.length) << '\n'
       << indent << "  gravity: " << num(p.gravity) << '\n';
    os << indent << "prestabilizing:\n"
       << indent << "  kp: " << num(sc.prestab.kp) << '\n'
       << indent << "  kd: " << num(sc.prestab.kd) << '\n';
    os << indent << "nominal:\n"
       << indent << "  kp: " << num(sc.nominal.kp) << '\n'
       << indent << "  kd: " << num(sc.nominal.kd) << '\n';
    os << indent << "reference: " << num(sc.reference) << '\n'
       << indent << "initial_reference: " << num(sc.initial_reference) << '\n';
    os << indent << "initial_state:\n"
       << indent << "  x: " << num(sc.initial_state.x) << '\n'
       << indent << "  theta_deg: " << num(to_deg(sc.initial_state.theta)) << '\n'
       << indent << "  xdot: " << num(sc.initial_state.xdot) << '\n'
       << indent << "  thetadot_deg: " << num(to_deg(sc.initial_state.thetadot)) << '\n';
    os << indent << "eta: " << num(sc.eta) << '\n'
       << indent << "dt: " << num(sc.dt) << '\n'
       << indent << "horizon: " << num(sc.horizon) << '\n';
    os << indent << "controller: "
       << (doc.controllers.size() == 1 ? std::string(to_string(doc.controllers.front())) : "all") << '\n';
    os << indent << "angle_threshold: "
       << (sc.angle_form == AngleThresholdForm::Cosine ? "cosine" : "linear") << '\n';
    os << indent << "settling_band: " << num(sc.settling_band) << '\n';
    os << indent << "seed: " << doc.seed << '\n';
    os << indent << "constraints:" << (sc.constraints.empty() ? " []" : "") << '\n';
    for (const auto& c : sc.constraints) {
        os << indent << "  - kind: " << to_string(c.spec.kind) << '\n';
        if (c.spec.kind == ConstraintKind::AngleBound) {
            os << indent << "    bound_deg: " << num(to_deg(c.spec.bound)) << '\n';
        } else {
            os << indent << "    bound: " << num(c.spec.bound) << '\n';
        }
        os << indent << "    alpha: " << num(c.alpha) << '\n'
           << indent << "    cbf_gamma: " << num(c.cbf_gamma) << '\n'
           << indent << "    cbf_alpha: " << num(c.cbf_alpha) << '\n'
           << indent << "    threshold_scale: " << num(c.threshold_scale) << '\n';
    }
    const VerifySettings& v = doc.verify;
    os << indent << "verify:\n"
       << indent << "  v_min: " << num(v.v_min) << '\n'
       << indent << "  v_max: " << num(v.v_max) << '\n'
       << indent << "  points: " << v.points << '\n'
       << indent << "  resolution: " << v.resolution << '\n'
       << indent << "  tolerance: " << num(v.tolerance) << '\n';
}

}  // namespace

std::vector<ControllerKind> selected_controllers(const ConfigDocument& doc) {
    if (doc.controllers.empty()) return {kAllControllers.begin(), kAllControllers.end()};
    return doc.controllers;
}

std::vector<ControllerKind> parse_controller_selection(const std::string& name) {
    if (name == "all") return {};
    if (const auto kind = parse_controller(name)) return {*kind};
    throw ConfigError("unknown controller '" + name + "' (expected nominal, erg, cbf, dsmcbf or all)");
}

ConfigDocument parse_config(const std::string& text, const std::string& source) {
    const Reader rd(source);
    YAML::Node root;
    try {
        root = YAML::Load(text);
    } catch (const YAML::ParserException& e) {
        std::ostringstream msg;
        msg << source << ':' << e.mark.line + 1 << ": syntax error: " << e.msg;
        throw ConfigError(msg.str());
    }
    if (root.IsNull()) throw ConfigError(source + ": empty configuration");
    if (root.IsMap() && root["scenario"]) return read_document(rd, root["scenario"]);
    return read_document(rd, root);
}

ConfigDocument load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError(path.string() + ": cannot open configuration file");
    std::ostringstream text;
    text << in.rdbuf();
    return parse_config(text.str(), path.string());
}

std::string serialize_config(const ConfigDocument& doc) {
    std::ostringstream os;
    emit_document(os, doc, "");
    return os.str();
}

std::string serialize_manifest(const RunManifest& m) {
    std::ostringstream os;
    os << "config_path: " << YAML::Node(m.config_path) << '\n'
       << "output_dir: " << YAML::Node(m.output_dir) << '\n'
       << "seed: " << m.seed << '\n'
       << "scenario:\n";
    emit_document(os, m.resolved, "  ");
    return os.str();
}

}  // namespace dsmcbf::cli
