#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "metafed/federation.hpp"
#include "metafed/meta.hpp"

namespace metafed {

// Invalid or inconsistent experiment configuration; the CLI maps this to
// exit code 2.
class ConfigError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

enum class Variant { Centralized, StandardFL, MetaFL };

const char* variant_name(Variant v);
Variant variant_from_name(const std::string& name);

// Time-to-threshold after a regime shift: a variant has "recovered" once its
// query accuracy regains this fraction of its own pre-shift accuracy,
// measured over at most kMaxAdaptSteps adaptation steps.
inline constexpr double kRecoveryFraction = 0.8;
inline constexpr int kMaxAdaptSteps = 100;

// Knobs of the three-way comparison harness. The regime shift is an incident
// burst: the scenario's incident rate is replaced by shift_incident_rate and
// every variant adapts on the same freshly drawn support set.
struct ComparisonConfig {
    double shift_incident_rate = 0.7;
    int adapt_steps = 5;         // fixed adaptation budget for reported accuracy
    int shift_support_size = 20;
    int shift_query_size = 300;
    int pre_eval_size = 400;     // held-out in-regime samples for pre-shift accuracy
    std::vector<Variant> variants = {Variant::Centralized, Variant::StandardFL,
                                     Variant::MetaFL};
    std::vector<Regime> regimes = {Regime::Low, Regime::Moderate, Regime::High};
};

struct ExperimentConfig {
    ScenarioSpec scenario;
    HyperParams hyper;
    MetaConfig meta;
    CostModel cost;
    ComparisonConfig comparison;
    int hidden_width = 16;
    std::vector<std::uint64_t> seeds = {1};
    std::string output_dir = "out";

    ModelArch arch() const { return ModelArch{kFeatureDim, hidden_width, kNumClasses}; }
};

ExperimentConfig default_config();

// Parses a config document (or a run manifest wrapping one). Unknown keys are
// an error; every violated invariant is reported with the offending field
// name. When the document is a manifest, command/mode recorded in it are
// returned through the optional out-params.
ExperimentConfig load_config_file(const std::string& path, std::string* manifest_command = nullptr,
                                  std::string* manifest_mode = nullptr);
ExperimentConfig parse_config_json(const std::string& text, std::string* manifest_command = nullptr,
                                   std::string* manifest_mode = nullptr);

// Serializes the resolved config; parse(render(c)) == c.
std::string render_config_json(const ExperimentConfig& config);

// Cross-checks every nested invariant; throws ConfigError naming the field.
void validate_config(const ExperimentConfig& config);

}  // namespace metafed
