#pragma once

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "lownoise/metrics.hpp"
#include "lownoise/objectives.hpp"
#include "lownoise/sampler.hpp"
#include "lownoise/score_field.hpp"

namespace lownoise {

/// Output of one probe run. `records` is the raw per-sample table (column
/// names in `record_columns`); every aggregate is recomputed from it by
/// recompute_aggregates, so reports are auditable. Provenance carries the
/// seeds and settings needed to re-run the probe bit-identically.
struct ProbeReport {
    std::string kind;
    std::vector<std::string> record_columns;
    std::vector<std::vector<double>> records;
    std::map<std::string, double> aggregates;
    std::map<std::string, std::string> provenance;
    std::map<std::string, MetricSeries> series;
    std::vector<std::pair<Trajectory, Trajectory>> trajectory_pairs;  // comparison probe only

    std::size_t column(const std::string& name) const;
    std::string summary_json() const;
};

/// Recompute the aggregate map from the raw records (the audit path).
std::map<std::string, double> recompute_aggregates(const ProbeReport& r);

/// Default evaluation noise levels.
Vec default_sigma_list();

/// Probe-time integration settings. Probes use the sigma-scaled convergence
/// threshold so low-noise trajectories are not cut off by an absolute
/// tolerance coarser than the perturbation itself.
DenoisePolicy probe_policy();

/// Corrupt each eval point once per sigma (shared seed), denoise under both
/// fields from the identical input, and record L2 divergence and direction
/// cosine similarity per step; aggregates split into low (sigma <= 0.05) and
/// high (sigma >= 0.1) groups.
ProbeReport consistency_probe(const ScoreField& field_a, const ScoreField& field_b,
                              const std::vector<Vec>& eval_points, const Vec& sigma_list,
                              std::uint64_t seed, const DenoisePolicy& policy = probe_policy());

/// Track ||x^(t) - x_clean|| while denoising corrupted train and test points.
ProbeReport denoising_performance_probe(const ScoreField& field, const DatasetHandle& trainset,
                                        const DatasetHandle& testset, const Vec& sigma_list,
                                        std::size_t samples, std::uint64_t seed,
                                        const DenoisePolicy& policy = probe_policy());

/// Re-denoising: corrupt -> denoise -> corrupt (fresh draw) -> denoise;
/// report d(x, o1), d(x, o2), d(o1, o2) distributions.
ProbeReport attractor_probe(const ScoreField& field, const std::vector<Vec>& points, double sigma,
                            std::uint64_t seed, const DenoisePolicy& policy = probe_policy());

/// Draw n_eval points from the sigma-smoothed mixture, compare the field's
/// score to the analytic one, and bin by center distance.
ProbeReport score_accuracy_probe(const ScoreField& field, const GaussianMixture& mixture,
                                 std::size_t n_eval, double sigma, std::uint64_t seed);

/// Integrate the same inits under the field and under the analytic oracle
/// with identical deterministic settings; pairs are kept for export.
ProbeReport trajectory_comparison_probe(const ScoreField& field, const GaussianMixture& mixture,
                                        const std::vector<Vec>& inits, const NoiseSchedule& schedule,
                                        const RunOptions& opts);

// ----- training-size sweep -----

struct SweepRequest {
    ObjectiveSpec objective;
    std::string catalog = "Uniform";
    std::vector<std::size_t> sizes;
    std::vector<std::string> probe_kinds = {"consistency"};
    TrainConfig train;
    Vec sigma_list = default_sigma_list();
    std::size_t eval_points = 200;
    DenoisePolicy policy = probe_policy();
    std::vector<std::size_t> hidden_widths = {128, 128, 128};
};

/// For each size: draw two disjoint halves of a fresh 2*size pool, train
/// models A and B on them, and run the requested probes.
std::vector<ProbeReport> train_size_sweep(const SweepRequest& req, std::uint64_t seed);

// ----- shared helpers -----

double vec_mean(const Vec& v);
double vec_median(Vec v);         // by value: sorts a copy
double vec_quantile(Vec v, double q);

}  // namespace lownoise
