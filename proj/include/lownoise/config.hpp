#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "lownoise/objectives.hpp"

namespace lownoise {

struct SamplerConfig {
    std::size_t steps = 200;
    double eta = 0.5;
    double kappa = 0.0;
    double conv_tol = 1e-2;
    std::size_t max_steps = 0;  // 0 = auto by dimension
};

struct ProbeSpecConfig {
    std::string kind;
    std::map<std::string, double> params;
};

/// Fully materialized experiment description. master_seed determines every
/// derived seed via derive_seed(master_seed, label, index).
struct ExperimentConfig {
    std::string catalog;
    std::vector<ObjectiveSpec> objectives;
    TrainConfig train;
    SamplerConfig sampler;
    std::vector<ProbeSpecConfig> probes;
    std::vector<std::size_t> sizes = {1, 10, 100, 1000, 10000, 100000};
    Vec sigma_list = {0.001, 0.01, 0.05, 0.1, 0.2, 1.0};
    std::uint64_t master_seed = 0;
    std::string out_dir = "out";

    void validate() const;
};

/// Strict parse: unknown keys are rejected, violations name the offending
/// field. Defaults are materialized.
ExperimentConfig parse_config(const std::string& path);
ExperimentConfig parse_config_text(const std::string& text);

/// Canonical serialization; parse(serialize(c)) == c.
std::string serialize_config(const ExperimentConfig& c);

bool operator==(const ExperimentConfig& a, const ExperimentConfig& b);
bool operator==(const SamplerConfig& a, const SamplerConfig& b);
bool operator==(const ProbeSpecConfig& a, const ProbeSpecConfig& b);
bool operator==(const ObjectiveSpec& a, const ObjectiveSpec& b);
bool operator==(const TrainConfig& a, const TrainConfig& b);

}  // namespace lownoise
