#include "metafed/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace metafed {

namespace {

using ojson = nlohmann::ordered_json;

void ensure_object(const ojson& j, const std::string& path) {
    if (!j.is_object()) throw ConfigError(path + " must be a JSON object");
}

void check_keys(const ojson& j, const std::string& path,
                std::initializer_list<const char*> allowed) {
    for (const auto& item : j.items()) {
        if (std::find_if(allowed.begin(), allowed.end(), [&](const char* k) {
                return item.key() == k;
            }) == allowed.end()) {
            throw ConfigError("unknown key '" + item.key() + "' in " + path);
        }
    }
}

double get_number(const ojson& j, const std::string& path, const char* key, double def) {
    if (!j.contains(key)) return def;
    const ojson& v = j.at(key);
    if (!v.is_number()) throw ConfigError(path + "." + key + " must be a number");
    return v.get<double>();
}

int get_int(const ojson& j, const std::string& path, const char* key, int def) {
    if (!j.contains(key)) return def;
    const ojson& v = j.at(key);
    if (!v.is_number_integer()) throw ConfigError(path + "." + key + " must be an integer");
    return v.get<int>();
}

bool get_bool(const ojson& j, const std::string& path, const char* key, bool def) {
    if (!j.contains(key)) return def;
    const ojson& v = j.at(key);
    if (!v.is_boolean()) throw ConfigError(path + "." + key + " must be a boolean");
    return v.get<bool>();
}

std::string get_string(const ojson& j, const std::string& path, const char* key,
                       const std::string& def) {
    if (!j.contains(key)) return def;
    const ojson& v = j.at(key);
    if (!v.is_string()) throw ConfigError(path + "." + key + " must be a string");
    return v.get<std::string>();
}

ScenarioSpec parse_scenario(const ojson& j, const ScenarioSpec& def) {
    const std::string path = "scenario";
    ensure_object(j, path);
    check_keys(j, path,
               {"density_regime", "incident_rate", "daily_amplitude", "node_bias_scale",
                "num_nodes", "intervals_per_node"});
    ScenarioSpec s = def;
    try {
        s.density_regime =
            regime_from_name(get_string(j, path, "density_regime", regime_name(def.density_regime)));
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("scenario.density_regime: ") + e.what());
    }
    s.incident_rate = get_number(j, path, "incident_rate", def.incident_rate);
    s.daily_amplitude = get_number(j, path, "daily_amplitude", def.daily_amplitude);
    s.node_bias_scale = get_number(j, path, "node_bias_scale", def.node_bias_scale);
    s.num_nodes = get_int(j, path, "num_nodes", def.num_nodes);
    s.intervals_per_node = get_int(j, path, "intervals_per_node", def.intervals_per_node);
    return s;
}

HyperParams parse_hyper(const ojson& j, const HyperParams& def) {
    const std::string path = "hyper";
    ensure_object(j, path);
    check_keys(j, path,
               {"eta0", "alpha", "beta", "local_epochs", "batch_size", "rounds", "weight_scheme"});
    HyperParams h = def;
    h.eta0 = get_number(j, path, "eta0", def.eta0);
    h.alpha = get_number(j, path, "alpha", def.alpha);
    h.beta = get_number(j, path, "beta", def.beta);
    h.local_epochs = get_int(j, path, "local_epochs", def.local_epochs);
    h.batch_size = get_int(j, path, "batch_size", def.batch_size);
    h.rounds = get_int(j, path, "rounds", def.rounds);
    try {
        h.weight_scheme = weight_scheme_from_name(
            get_string(j, path, "weight_scheme", weight_scheme_name(def.weight_scheme)));
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("hyper.weight_scheme: ") + e.what());
    }
    return h;
}

MetaConfig parse_meta(const ojson& j, const MetaConfig& def) {
    const std::string path = "meta";
    ensure_object(j, path);
    check_keys(j, path, {"inner_steps", "inner_lr", "tasks_per_client", "support_size", "query_size"});
    MetaConfig m = def;
    m.inner_steps = get_int(j, path, "inner_steps", def.inner_steps);
    m.inner_lr = get_number(j, path, "inner_lr", def.inner_lr);
    m.tasks_per_client = get_int(j, path, "tasks_per_client", def.tasks_per_client);
    m.support_size = get_int(j, path, "support_size", def.support_size);
    m.query_size = get_int(j, path, "query_size", def.query_size);
    return m;
}

CostModel parse_cost(const ojson& j, const CostModel& def) {
    const std::string path = "cost";
    ensure_object(j, path);
    check_keys(j, path, {"base_latency_s", "per_kb_s", "grad_step_s", "seed", "jitter"});
    CostModel c = def;
    c.base_latency_s = get_number(j, path, "base_latency_s", def.base_latency_s);
    c.per_kb_s = get_number(j, path, "per_kb_s", def.per_kb_s);
    c.grad_step_s = get_number(j, path, "grad_step_s", def.grad_step_s);
    if (j.contains("seed")) {
        if (!j.at("seed").is_number_unsigned() && !j.at("seed").is_number_integer()) {
            throw ConfigError("cost.seed must be an integer");
        }
        c.seed = j.at("seed").get<std::uint64_t>();
    }
    c.jitter = get_bool(j, path, "jitter", def.jitter);
    return c;
}

ControllerConfig parse_controller(const ojson& j, const ControllerConfig& def) {
    const std::string path = "controller";
    ensure_object(j, path);
    check_keys(j, path, {"kappa_up", "kappa_down", "eta_min", "eta_max"});
    ControllerConfig c = def;
    c.kappa_up = get_number(j, path, "kappa_up", def.kappa_up);
    c.kappa_down = get_number(j, path, "kappa_down", def.kappa_down);
    c.eta_min = get_number(j, path, "eta_min", def.eta_min);
    c.eta_max = get_number(j, path, "eta_max", def.eta_max);
    return c;
}

ComparisonConfig parse_comparison(const ojson& j, const ComparisonConfig& def) {
    const std::string path = "comparison";
    ensure_object(j, path);
    check_keys(j, path,
               {"shift_incident_rate", "adapt_steps", "shift_support_size", "shift_query_size",
                "pre_eval_size", "variants", "regimes"});
    ComparisonConfig c = def;
    c.shift_incident_rate = get_number(j, path, "shift_incident_rate", def.shift_incident_rate);
    c.adapt_steps = get_int(j, path, "adapt_steps", def.adapt_steps);
    c.shift_support_size = get_int(j, path, "shift_support_size", def.shift_support_size);
    c.shift_query_size = get_int(j, path, "shift_query_size", def.shift_query_size);
    c.pre_eval_size = get_int(j, path, "pre_eval_size", def.pre_eval_size);
    if (j.contains("variants")) {
        if (!j.at("variants").is_array()) throw ConfigError("comparison.variants must be an array");
        c.variants.clear();
        for (const auto& v : j.at("variants")) {
            if (!v.is_string()) throw ConfigError("comparison.variants entries must be strings");
            try {
                c.variants.push_back(variant_from_name(v.get<std::string>()));
            } catch (const std::invalid_argument& e) {
                throw ConfigError(std::string("comparison.variants: ") + e.what());
            }
        }
    }
    if (j.contains("regimes")) {
        if (!j.at("regimes").is_array()) throw ConfigError("comparison.regimes must be an array");
        c.regimes.clear();
        for (const auto& v : j.at("regimes")) {
            if (!v.is_string()) throw ConfigError("comparison.regimes entries must be strings");
            try {
                c.regimes.push_back(regime_from_name(v.get<std::string>()));
            } catch (const std::invalid_argument& e) {
                throw ConfigError(std::string("comparison.regimes: ") + e.what());
            }
        }
    }
    return c;
}

ExperimentConfig parse_config_object(const ojson& j) {
    ensure_object(j, "config");
    check_keys(j, "config",
               {"scenario", "hyper", "meta", "cost", "controller", "comparison", "model", "seeds",
                "output_dir"});

    ExperimentConfig cfg = default_config();
    if (j.contains("scenario")) cfg.scenario = parse_scenario(j.at("scenario"), cfg.scenario);
    if (j.contains("hyper")) cfg.hyper = parse_hyper(j.at("hyper"), cfg.hyper);
    if (j.contains("meta")) cfg.meta = parse_meta(j.at("meta"), cfg.meta);
    if (j.contains("cost")) cfg.cost = parse_cost(j.at("cost"), cfg.cost);
    if (j.contains("controller")) {
        cfg.hyper.controller = parse_controller(j.at("controller"), cfg.hyper.controller);
    }
    if (j.contains("comparison")) {
        cfg.comparison = parse_comparison(j.at("comparison"), cfg.comparison);
    }
    if (j.contains("model")) {
        ensure_object(j.at("model"), "model");
        check_keys(j.at("model"), "model", {"hidden_width"});
        cfg.hidden_width = get_int(j.at("model"), "model", "hidden_width", cfg.hidden_width);
    }
    if (j.contains("seeds")) {
        if (!j.at("seeds").is_array()) throw ConfigError("seeds must be an array");
        cfg.seeds.clear();
        for (const auto& s : j.at("seeds")) {
            if (!s.is_number_unsigned() && !s.is_number_integer()) {
                throw ConfigError("seeds entries must be integers");
            }
            cfg.seeds.push_back(s.get<std::uint64_t>());
        }
    }
    cfg.output_dir = get_string(j, "config", "output_dir", cfg.output_dir);

    validate_config(cfg);
    return cfg;
}

}  // namespace

const char* variant_name(Variant v) {
    switch (v) {
        case Variant::Centralized: return "Centralized";
        case Variant::StandardFL: return "StandardFL";
        case Variant::MetaFL: return "MetaFL";
    }
    return "?";
}

Variant variant_from_name(const std::string& name) {
    if (name == "Centralized") return Variant::Centralized;
    if (name == "StandardFL") return Variant::StandardFL;
    if (name == "MetaFL") return Variant::MetaFL;
    throw std::invalid_argument("unknown variant: " + name);
}

ExperimentConfig default_config() {
    ExperimentConfig cfg;
    cfg.scenario.density_regime = Regime::Moderate;
    cfg.scenario.incident_rate = 0.02;
    cfg.scenario.daily_amplitude = 0.15;
    cfg.scenario.node_bias_scale = 0.15;
    cfg.scenario.num_nodes = 8;
    cfg.scenario.intervals_per_node = 128;
    cfg.cost.base_latency_s = 0.1;
    cfg.cost.per_kb_s = 0.002;
    cfg.cost.grad_step_s = 0.005;
    cfg.seeds = {1, 2, 3, 4, 5};
    return cfg;
}

ExperimentConfig load_config_file(const std::string& path, std::string* manifest_command,
                                  std::string* manifest_mode) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open config file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config_json(buf.str(), manifest_command, manifest_mode);
}

ExperimentConfig parse_config_json(const std::string& text, std::string* manifest_command,
                                   std::string* manifest_mode) {
    ojson j;
    try {
        j = ojson::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    ensure_object(j, "config");

    // Run manifests wrap the resolved config; accept them transparently so a
    // manifest can be fed straight back through --config.
    if (j.contains("config")) {
        check_keys(j, "manifest", {"command", "mode", "config"});
        if (manifest_command && j.contains("command") && j.at("command").is_string()) {
            *manifest_command = j.at("command").get<std::string>();
        }
        if (manifest_mode && j.contains("mode") && j.at("mode").is_string()) {
            *manifest_mode = j.at("mode").get<std::string>();
        }
        return parse_config_object(j.at("config"));
    }
    return parse_config_object(j);
}

std::string render_config_json(const ExperimentConfig& c) {
    ojson j;
    j["scenario"] = {{"density_regime", regime_name(c.scenario.density_regime)},
                     {"incident_rate", c.scenario.incident_rate},
                     {"daily_amplitude", c.scenario.daily_amplitude},
                     {"node_bias_scale", c.scenario.node_bias_scale},
                     {"num_nodes", c.scenario.num_nodes},
                     {"intervals_per_node", c.scenario.intervals_per_node}};
    j["hyper"] = {{"eta0", c.hyper.eta0},
                  {"alpha", c.hyper.alpha},
                  {"beta", c.hyper.beta},
                  {"local_epochs", c.hyper.local_epochs},
                  {"batch_size", c.hyper.batch_size},
                  {"rounds", c.hyper.rounds},
                  {"weight_scheme", weight_scheme_name(c.hyper.weight_scheme)}};
    j["meta"] = {{"inner_steps", c.meta.inner_steps},
                 {"inner_lr", c.meta.inner_lr},
                 {"tasks_per_client", c.meta.tasks_per_client},
                 {"support_size", c.meta.support_size},
                 {"query_size", c.meta.query_size}};
    j["cost"] = {{"base_latency_s", c.cost.base_latency_s},
                 {"per_kb_s", c.cost.per_kb_s},
                 {"grad_step_s", c.cost.grad_step_s},
                 {"seed", c.cost.seed},
                 {"jitter", c.cost.jitter}};
    j["controller"] = {{"kappa_up", c.hyper.controller.kappa_up},
                       {"kappa_down", c.hyper.controller.kappa_down},
                       {"eta_min", c.hyper.controller.eta_min},
                       {"eta_max", c.hyper.controller.eta_max}};
    ojson variants = ojson::array();
    for (Variant v : c.comparison.variants) variants.push_back(variant_name(v));
    ojson regimes = ojson::array();
    for (Regime r : c.comparison.regimes) regimes.push_back(regime_name(r));
    j["comparison"] = {{"shift_incident_rate", c.comparison.shift_incident_rate},
                       {"adapt_steps", c.comparison.adapt_steps},
                       {"shift_support_size", c.comparison.shift_support_size},
                       {"shift_query_size", c.comparison.shift_query_size},
                       {"pre_eval_size", c.comparison.pre_eval_size},
                       {"variants", variants},
                       {"regimes", regimes}};
    j["model"] = {{"hidden_width", c.hidden_width}};
    j["seeds"] = c.seeds;
    j["output_dir"] = c.output_dir;
    return j.dump(2) + "\n";
}

void validate_config(const ExperimentConfig& c) {
    auto fail = [](const std::string& msg) { throw ConfigError(msg); };

    if (c.scenario.incident_rate < 0.0 || c.scenario.incident_rate > 1.0) {
        fail("scenario.incident_rate must lie in [0,1]");
    }
    if (c.scenario.daily_amplitude < 0.0 || c.scenario.daily_amplitude > 1.0) {
        fail("scenario.daily_amplitude must lie in [0,1]");
    }
    if (c.scenario.node_bias_scale < 0.0) fail("scenario.node_bias_scale must be >= 0");
    if (c.scenario.num_nodes < 1) fail("scenario.num_nodes must be >= 1");
    if (c.scenario.intervals_per_node < 1) fail("scenario.intervals_per_node must be >= 1");

    if (!(c.hyper.eta0 > 0.0)) fail("hyper.eta0 must be > 0");
    if (c.hyper.alpha < 0.0) fail("hyper.alpha must be >= 0");
    if (c.hyper.beta < 0.0) fail("hyper.beta must be >= 0");
    if (c.hyper.local_epochs < 1) fail("hyper.local_epochs must be >= 1");
    if (c.hyper.batch_size < 1) fail("hyper.batch_size must be >= 1");
    if (c.hyper.rounds < 1) fail("hyper.rounds must be >= 1");

    const ControllerConfig& k = c.hyper.controller;
    if (!(k.kappa_up > 1.0)) fail("controller.kappa_up must be > 1");
    if (!(k.kappa_down > 0.0 && k.kappa_down < 1.0)) fail("controller.kappa_down must lie in (0,1)");
    if (!(k.eta_min > 0.0)) fail("controller.eta_min must be > 0");
    if (!(k.eta_min <= k.eta_max)) fail("controller.eta_min must be <= controller.eta_max");
    if (c.hyper.eta0 < k.eta_min || c.hyper.eta0 > k.eta_max) {
        fail("hyper.eta0 must lie within [controller.eta_min, controller.eta_max]");
    }

    if (c.meta.inner_steps < 0) fail("meta.inner_steps must be >= 0");
    if (!(c.meta.inner_lr > 0.0)) fail("meta.inner_lr must be > 0");
    if (c.meta.tasks_per_client < 1) fail("meta.tasks_per_client must be >= 1");
    if (c.meta.support_size < 1) fail("meta.support_size must be >= 1");
    if (c.meta.query_size < 1) fail("meta.query_size must be >= 1");

    if (c.cost.base_latency_s < 0.0) fail("cost.base_latency_s must be >= 0");
    if (c.cost.per_kb_s < 0.0) fail("cost.per_kb_s must be >= 0");
    if (c.cost.grad_step_s < 0.0) fail("cost.grad_step_s must be >= 0");

    if (c.comparison.shift_incident_rate < 0.0 || c.comparison.shift_incident_rate > 1.0) {
        fail("comparison.shift_incident_rate must lie in [0,1]");
    }
    if (c.comparison.adapt_steps < 0) fail("comparison.adapt_steps must be >= 0");
    if (c.comparison.adapt_steps > kMaxAdaptSteps) {
        fail("comparison.adapt_steps must be <= 100");
    }
    if (c.comparison.shift_support_size < 1) fail("comparison.shift_support_size must be >= 1");
    if (c.comparison.shift_query_size < 1) fail("comparison.shift_query_size must be >= 1");
    if (c.comparison.pre_eval_size < 1) fail("comparison.pre_eval_size must be >= 1");
    if (c.comparison.variants.empty()) fail("comparison.variants must be non-empty");
    if (c.comparison.regimes.empty()) fail("comparison.regimes must be non-empty");
    {
        std::set<Variant> vs(c.comparison.variants.begin(), c.comparison.variants.end());
        if (vs.size() != c.comparison.variants.size()) fail("comparison.variants must be distinct");
        std::set<Regime> rs(c.comparison.regimes.begin(), c.comparison.regimes.end());
        if (rs.size() != c.comparison.regimes.size()) fail("comparison.regimes must be distinct");
    }

    if (c.hidden_width < 1) fail("model.hidden_width must be >= 1");

    if (c.seeds.empty()) fail("seeds must be non-empty");
    {
        std::set<std::uint64_t> ss(c.seeds.begin(), c.seeds.end());
        if (ss.size() != c.seeds.size()) fail("seeds must be distinct");
    }
    if (c.output_dir.empty()) fail("output_dir must be non-empty");
}

}  // namespace metafed
