#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "lownoise/common.hpp"
#include "lownoise/linalg.hpp"

namespace lownoise {

/// Gaussian mixture with exact smoothed density and score. Immutable after
/// construction; the cached sampling factors make read-only sharing across
/// threads safe.
class GaussianMixture {
public:
    GaussianMixture(std::vector<double> weights, std::vector<Vec> means, std::vector<Mat> covariances);

    std::size_t dim() const { return dim_; }
    std::size_t components() const { return weights_.size(); }
    const std::vector<double>& weights() const { return weights_; }
    const std::vector<Vec>& means() const { return means_; }
    const std::vector<Mat>& covariances() const { return covs_; }
    const Mat& sampling_factor(std::size_t k) const { return chol_[k]; }

    /// Mixture with covariances Sigma_k + s*I (the sigma-smoothed mixture is
    /// itself a Gaussian mixture).
    GaussianMixture with_inflated_covariances(double added_variance) const;

    std::string to_json() const;
    static GaussianMixture from_json(const std::string& text);

private:
    std::size_t dim_;
    std::vector<double> weights_;
    std::vector<Vec> means_;
    std::vector<Mat> covs_;
    std::vector<Mat> chol_;
};

/// Per-(mixture, sigma) evaluator with cached factorizations of
/// Sigma_k + sigma^2 I. Build once, evaluate many points.
class SmoothedMixture {
public:
    SmoothedMixture(const GaussianMixture& mixture, double sigma);

    std::size_t dim() const { return mix_->dim(); }
    double sigma() const { return sigma_; }

    double log_density(const double* x) const;
    Vec score(const double* x) const;
    Vec responsibilities(const double* x) const;

    /// min_k Mahalanobis distance under Sigma_k + sigma^2 I (used for binning).
    double min_mahalanobis(const double* x) const;

private:
    const GaussianMixture* mix_;
    double sigma_;
    std::vector<Mat> chol_;       // factors of Sigma_k + sigma^2 I
    std::vector<double> lognorm_;  // log w_k - d/2 log 2pi - 1/2 log det
};

// Spec-facing one-shot operations; hot loops should hold a SmoothedMixture.
double smoothed_log_density(const GaussianMixture& m, const Vec& x, double sigma);
Vec analytic_score(const GaussianMixture& m, const Vec& x, double sigma);
Vec responsibilities(const GaussianMixture& m, const Vec& x, double sigma);

/// Draw n points: component by weight, then N(mu_k, Sigma_k). Deterministic
/// given seed.
std::vector<Vec> sample(const GaussianMixture& m, std::size_t n, std::uint64_t seed);

/// y = x0 + sigma * eps, eps ~ N(0, I). Deterministic given seed.
Vec corrupt(const Vec& x0, double sigma, std::uint64_t seed);

// ----- catalog -----

enum class Catalog { Uniform, SharpCov, Spiral, HDUniform, HDSharpCov, ThinManifold };

Catalog catalog_from_name(const std::string& name);
const char* catalog_name(Catalog c);

/// The six benchmark mixtures. The seed only affects the randomized
/// orientations of HDSharpCov and the embedding subspace of ThinManifold.
GaussianMixture make_catalog(Catalog which, std::uint64_t seed);
GaussianMixture make_catalog(const std::string& name, std::uint64_t seed);

// ----- datasets -----

struct DatasetHandle {
    std::string name;
    std::vector<Vec> points;
    GaussianMixture source_mixture;
    std::uint64_t seed = 0;
    std::size_t cardinality = 0;
    std::string origin = "direct";  // "direct", "poolA", "poolB"
};

/// Standard sweep cardinalities.
bool is_standard_cardinality(std::size_t n);

/// Generate a dataset from a catalog distribution; regenerating with the same
/// (name, seed, cardinality) yields identical points.
DatasetHandle make_dataset(const std::string& catalog, std::uint64_t seed, std::size_t cardinality);

/// Split a 2n-point pool (same recipe as make_dataset) into two disjoint
/// halves A and B.
std::pair<DatasetHandle, DatasetHandle> make_disjoint_pair(const std::string& catalog,
                                                           std::uint64_t seed, std::size_t half_size);

/// One point per line, comma-separated coordinates, no header.
void export_dataset_csv(const DatasetHandle& ds, const std::string& path);
std::string dataset_csv_name(const DatasetHandle& ds);

}  // namespace lownoise
