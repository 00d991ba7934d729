#pragma once

#include <string>
#include <vector>

#include "lownoise/mixture.hpp"
#include "lownoise/sampler.hpp"
#include "lownoise/score_field.hpp"

namespace lownoise {

/// One scalar per trajectory step. A set flag marks values produced by the
/// degenerate-input convention rather than the formula.
struct MetricSeries {
    std::string name;
    std::vector<std::size_t> steps;
    Vec values;
    std::vector<bool> flags;

    void validate() const;
};

enum class BinLabel { Close, Mid, Far };

const char* bin_name(BinLabel b);

/// Mahalanobis boundaries of the close / mid / far split.
constexpr double kBinCloseMax = 1.0;
constexpr double kBinMidMax = 3.0;

/// Per-step ||x_A - x_B||; the shorter trajectory defines the range.
MetricSeries l2_divergence(const Trajectory& a, const Trajectory& b);

/// Per-step 1 - cos(sA, sB), in [0, 2]. A vector with norm below 1e-12 yields
/// value 1 with the flag set, so histograms stay total.
MetricSeries cosine_divergence(const std::vector<Vec>& dirs_a, const std::vector<Vec>& dirs_b);

/// Per-step exact min distance from the state to any dataset point.
MetricSeries manifold_distance(const Trajectory& traj, const DatasetHandle& dataset);

/// Per-point || field score - analytic score || at the given sigma.
Vec score_error(const ScoreField& field, const GaussianMixture& mixture,
                const std::vector<Vec>& points, double sigma);

/// Label each point by min-component Mahalanobis distance under
/// Sigma_k + sigma^2 I: Close < 1, Mid in [1, 3), Far >= 3.
std::vector<BinLabel> bin_by_center_distance(const std::vector<Vec>& points,
                                             const GaussianMixture& mixture, double sigma);
BinLabel bin_of(double mahalanobis);

/// CSV with header t,value,flag.
std::string metric_series_csv(const MetricSeries& s);

/// 50 uniform bins over [lo, hi]; CSV header bin_left,bin_right,count.
std::string histogram_csv(const Vec& values, double lo, double hi);

}  // namespace lownoise
