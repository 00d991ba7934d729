#pragma once

#include <string>
#include <vector>

#include "lownoise/config.hpp"

namespace lownoise {

/// Configuration-driven experiment pipeline. Stages are runnable standalone;
/// training results are cached as checkpoints inside out_dir, and a manifest
/// of content hashes makes full runs diffable.
class Pipeline {
public:
    explicit Pipeline(ExperimentConfig config);

    void gen_data();
    void train_models();
    void run_probes();
    void make_plots();
    void write_report();
    void verify() const;

    /// gen-data -> train -> probes -> plots -> report.
    void run_all();

    const ExperimentConfig& config() const { return cfg_; }
    std::string out_path(const std::string& rel) const;

    // Derived locations and seeds, shared across stages.
    std::string checkpoint_path(const ObjectiveSpec& o, std::size_t size, char half) const;
    std::uint64_t model_seed(const ObjectiveSpec& o, std::size_t size, char half) const;
    std::uint64_t pool_seed(std::size_t size) const;
    std::uint64_t eval_seed(std::size_t size) const;

private:
    void probe_one(const ObjectiveSpec& o, std::size_t size, const ProbeSpecConfig& probe);

    ExperimentConfig cfg_;
};

/// Content bytes used for hashing: training logs get their wall_ms column
/// masked so timing noise never breaks run-to-run manifest equality.
std::string canonical_for_hash(const std::string& rel_path, const std::string& content);

struct ManifestEntry {
    std::string path;
    std::size_t bytes = 0;  // canonical byte count
    std::string hash;
};

std::vector<ManifestEntry> read_manifest(const std::string& path);

}  // namespace lownoise
