#include "lownoise/mixture.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <json.hpp>

#include "lownoise/io.hpp"
#include "lownoise/kernels.hpp"
#include "lownoise/rng.hpp"

namespace lownoise {

namespace {

constexpr double kLog2Pi = 1.8378770664093454835606594728112;
constexpr double kWeightTol = 1e-12;
constexpr double kSymTol = 1e-12;
constexpr double kConditionLimit = 1e12;

double log_sum_exp(const std::vector<double>& v) {
    double m = -std::numeric_limits<double>::infinity();
    for (double x : v) m = std::max(m, x);
    if (!std::isfinite(m)) return m;
    double s = 0.0;
    for (double x : v) s += std::exp(x - m);
    return m + std::log(s);
}

}  // namespace

GaussianMixture::GaussianMixture(std::vector<double> weights, std::vector<Vec> means,
                                 std::vector<Mat> covariances)
    : weights_(std::move(weights)), means_(std::move(means)), covs_(std::move(covariances)) {
    if (weights_.empty() || weights_.size() != means_.size() || weights_.size() != covs_.size())
        throw ConfigError("mixture: component counts must be equal and >= 1");
    dim_ = means_[0].size();
    double total = 0.0;
    for (double w : weights_) {
        if (w < 0.0) throw ConfigError("mixture: negative weight");
        total += w;
    }
    if (std::abs(total - 1.0) > kWeightTol) throw ConfigError("mixture: weights must sum to 1");
    chol_.reserve(covs_.size());
    for (std::size_t k = 0; k < covs_.size(); ++k) {
        if (means_[k].size() != dim_) throw ConfigError("mixture: mean dimension mismatch");
        const Mat& c = covs_[k];
        if (c.rows != dim_ || c.cols != dim_) throw ConfigError("mixture: covariance shape mismatch");
        if (linalg::max_abs_asymmetry(c) > kSymTol) throw ConfigError("mixture: covariance not symmetric");
        auto l = linalg::cholesky(c);
        if (!l) throw ConfigError("mixture: covariance not positive definite");
        chol_.push_back(std::move(*l));
    }
}

GaussianMixture GaussianMixture::with_inflated_covariances(double added_variance) const {
    std::vector<Mat> covs;
    covs.reserve(covs_.size());
    for (const Mat& c : covs_) covs.push_back(linalg::add_scaled_identity(c, added_variance));
    return GaussianMixture(weights_, means_, std::move(covs));
}

std::string GaussianMixture::to_json() const {
    nlohmann::json j;
    j["dim"] = dim_;
    j["weights"] = weights_;
    nlohmann::json means = nlohmann::json::array();
    for (const Vec& m : means_) means.push_back(m);
    j["means"] = std::move(means);
    nlohmann::json covs = nlohmann::json::array();
    for (const Mat& c : covs_) {
        nlohmann::json rows = nlohmann::json::array();
        for (std::size_t i = 0; i < c.rows; ++i)
            rows.push_back(std::vector<double>(c.row(i), c.row(i) + c.cols));
        covs.push_back(std::move(rows));
    }
    j["covariances"] = std::move(covs);
    return j.dump(2) + "\n";
}

GaussianMixture GaussianMixture::from_json(const std::string& text) {
    nlohmann::json j = nlohmann::json::parse(text);
    std::size_t dim = j.at("dim").get<std::size_t>();
    std::vector<double> weights = j.at("weights").get<std::vector<double>>();
    std::vector<Vec> means;
    for (const auto& m : j.at("means")) means.push_back(m.get<Vec>());
    std::vector<Mat> covs;
    for (const auto& cj : j.at("covariances")) {
        Mat c(dim, dim);
        std::size_t i = 0;
        for (const auto& row : cj) {
            auto r = row.get<std::vector<double>>();
            std::copy(r.begin(), r.end(), c.row(i));
            ++i;
        }
        covs.push_back(std::move(c));
    }
    return GaussianMixture(std::move(weights), std::move(means), std::move(covs));
}

// ----------------------------------------------------------------------------
// smoothed evaluation
// ----------------------------------------------------------------------------

SmoothedMixture::SmoothedMixture(const GaussianMixture& mixture, double sigma)
    : mix_(&mixture), sigma_(sigma) {
    if (sigma < 0.0) throw ConfigError("smoothing sigma must be >= 0");
    const double s2 = sigma * sigma;
    const std::size_t d = mixture.dim();
    chol_.reserve(mixture.components());
    lognorm_.reserve(mixture.components());
    for (std::size_t k = 0; k < mixture.components(); ++k) {
        Mat inflated = linalg::add_scaled_identity(mixture.covariances()[k], s2);
        auto l = linalg::cholesky(inflated);
        if (!l) throw NumericalError("smoothed covariance numerically singular (component " +
                                     std::to_string(k) + ")");
        double lo = std::numeric_limits<double>::infinity();
        double hi = 0.0;
        double logdet = 0.0;
        for (std::size_t i = 0; i < d; ++i) {
            double diag = (*l)(i, i);
            lo = std::min(lo, diag);
            hi = std::max(hi, diag);
            logdet += std::log(diag);
        }
        logdet *= 2.0;
        if ((hi / lo) * (hi / lo) > kConditionLimit)
            throw NumericalError("smoothed covariance numerically singular (component " +
                                 std::to_string(k) + ", condition beyond 1e12)");
        chol_.push_back(std::move(*l));
        double w = mixture.weights()[k];
        lognorm_.push_back((w > 0.0 ? std::log(w) : -std::numeric_limits<double>::infinity()) -
                           0.5 * (static_cast<double>(d) * kLog2Pi + logdet));
    }
}

double SmoothedMixture::log_density(const double* x) const {
    const std::size_t d = dim();
    const std::size_t n = mix_->components();
    std::vector<double> lp(n);
    Vec r(d);
    for (std::size_t k = 0; k < n; ++k) {
        const Vec& mu = mix_->means()[k];
        for (std::size_t i = 0; i < d; ++i) r[i] = x[i] - mu[i];
        lp[k] = lognorm_[k] - 0.5 * linalg::quad_form(chol_[k], r.data());
    }
    return log_sum_exp(lp);
}

Vec SmoothedMixture::responsibilities(const double* x) const {
    const std::size_t d = dim();
    const std::size_t n = mix_->components();
    std::vector<double> lp(n);
    Vec r(d);
    for (std::size_t k = 0; k < n; ++k) {
        const Vec& mu = mix_->means()[k];
        for (std::size_t i = 0; i < d; ++i) r[i] = x[i] - mu[i];
        lp[k] = lognorm_[k] - 0.5 * linalg::quad_form(chol_[k], r.data());
    }
    double lse = log_sum_exp(lp);
    Vec out(n);
    for (std::size_t k = 0; k < n; ++k) out[k] = std::exp(lp[k] - lse);
    return out;
}

Vec SmoothedMixture::score(const double* x) const {
    const std::size_t d = dim();
    const std::size_t n = mix_->components();
    Vec resp = responsibilities(x);
    Vec out(d, 0.0);
    Vec diff(d), pulled(d);
    for (std::size_t k = 0; k < n; ++k) {
        if (resp[k] == 0.0) continue;
        const Vec& mu = mix_->means()[k];
        for (std::size_t i = 0; i < d; ++i) diff[i] = mu[i] - x[i];
        linalg::solve_spd(chol_[k], diff.data(), pulled.data());
        kernels::axpy(resp[k], pulled.data(), out.data(), d);
    }
    return out;
}

double SmoothedMixture::min_mahalanobis(const double* x) const {
    const std::size_t d = dim();
    double best = std::numeric_limits<double>::infinity();
    Vec r(d);
    for (std::size_t k = 0; k < mix_->components(); ++k) {
        const Vec& mu = mix_->means()[k];
        for (std::size_t i = 0; i < d; ++i) r[i] = x[i] - mu[i];
        best = std::min(best, linalg::quad_form(chol_[k], r.data()));
    }
    return std::sqrt(best);
}

double smoothed_log_density(const GaussianMixture& m, const Vec& x, double sigma) {
    return SmoothedMixture(m, sigma).log_density(x.data());
}

Vec analytic_score(const GaussianMixture& m, const Vec& x, double sigma) {
    return SmoothedMixture(m, sigma).score(x.data());
}

Vec responsibilities(const GaussianMixture& m, const Vec& x, double sigma) {
    return SmoothedMixture(m, sigma).responsibilities(x.data());
}

// ----------------------------------------------------------------------------
// sampling and corruption
// ----------------------------------------------------------------------------

std::vector<Vec> sample(const GaussianMixture& m, std::size_t n, std::uint64_t seed) {
    if (n < 1) throw ConfigError("sample: n must be >= 1");
    const std::size_t d = m.dim();
    Rng rng(seed);
    std::vector<Vec> out(n, Vec(d));
    Vec z(d);
    for (std::size_t i = 0; i < n; ++i) {
        double u = rng.uniform();
        std::size_t k = 0;
        double acc = 0.0;
        for (; k + 1 < m.components(); ++k) {
            acc += m.weights()[k];
            if (u < acc) break;
        }
        rng.normal_fill(z.data(), d);
        Vec& x = out[i];
        const Vec& mu = m.means()[k];
        const Mat& l = m.sampling_factor(k);
        for (std::size_t r = 0; r < d; ++r) {
            x[r] = mu[r] + kernels::dot(l.row(r), z.data(), r + 1);
        }
    }
    return out;
}

Vec corrupt(const Vec& x0, double sigma, std::uint64_t seed) {
    if (sigma < 0.0) throw ConfigError("corrupt: sigma must be >= 0");
    Vec y = x0;
    if (sigma == 0.0) return y;
    Rng rng(seed);
    for (double& v : y) v += sigma * rng.normal();
    return y;
}

// ----------------------------------------------------------------------------
// catalog
// ----------------------------------------------------------------------------

Catalog catalog_from_name(const std::string& name) {
    if (name == "Uniform") return Catalog::Uniform;
    if (name == "SharpCov") return Catalog::SharpCov;
    if (name == "Spiral") return Catalog::Spiral;
    if (name == "HDUniform") return Catalog::HDUniform;
    if (name == "HDSharpCov") return Catalog::HDSharpCov;
    if (name == "ThinManifold") return Catalog::ThinManifold;
    throw ConfigError("unknown catalog distribution: " + name);
}

const char* catalog_name(Catalog c) {
    switch (c) {
        case Catalog::Uniform: return "Uniform";
        case Catalog::SharpCov: return "SharpCov";
        case Catalog::Spiral: return "Spiral";
        case Catalog::HDUniform: return "HDUniform";
        case Catalog::HDSharpCov: return "HDSharpCov";
        case Catalog::ThinManifold: return "ThinManifold";
    }
    return "?";
}

namespace {

Mat rotated_cov2d(double eig_major, double eig_minor, double angle) {
    double c = std::cos(angle), s = std::sin(angle);
    // R diag(major, minor) R^T
    Mat m(2, 2);
    m(0, 0) = eig_major * c * c + eig_minor * s * s;
    m(0, 1) = (eig_major - eig_minor) * c * s;
    m(1, 0) = m(0, 1);
    m(1, 1) = eig_major * s * s + eig_minor * c * c;
    return m;
}

Vec pentagon_vertex(std::size_t i, double radius) {
    double a = 0.5 * M_PI + 2.0 * M_PI * static_cast<double>(i) / 5.0;
    return Vec{radius * std::cos(a), radius * std::sin(a)};
}

GaussianMixture make_uniform() {
    std::vector<double> w(5, 0.2);
    std::vector<Vec> means;
    std::vector<Mat> covs;
    for (std::size_t i = 0; i < 5; ++i) {
        means.push_back(pentagon_vertex(i, 2.0));
        Mat c(2, 2);
        c(0, 0) = c(1, 1) = 0.05;
        covs.push_back(c);
    }
    return GaussianMixture(std::move(w), std::move(means), std::move(covs));
}

GaussianMixture make_sharpcov() {
    std::vector<double> w(4, 0.25);
    std::vector<Vec> means = {{2.0, 2.0}, {-2.0, 2.0}, {-2.0, -2.0}, {2.0, -2.0}};
    std::vector<Mat> covs;
    for (std::size_t i = 0; i < 4; ++i) {
        covs.push_back(rotated_cov2d(1.0, 0.01, static_cast<double>(i) * M_PI / 4.0));
    }
    return GaussianMixture(std::move(w), std::move(means), std::move(covs));
}

GaussianMixture make_spiral() {
    const std::size_t n = 12;
    std::vector<double> w(n, 1.0 / static_cast<double>(n));
    std::vector<Vec> means;
    std::vector<Mat> covs;
    for (std::size_t i = 0; i < n; ++i) {
        double theta = 0.5 * M_PI + static_cast<double>(i) * (2.5 * M_PI / 11.0);
        double r = 0.3 * theta;
        means.push_back(Vec{r * std::cos(theta), r * std::sin(theta)});
        // Tangent of r(theta) = 0.3 theta: (r' cos - r sin, r' sin + r cos).
        double tx = 0.3 * std::cos(theta) - r * std::sin(theta);
        double ty = 0.3 * std::sin(theta) + r * std::cos(theta);
        // Major std 0.141 keeps adjacent components > 3 std apart even on the
        // inner turns, so the mixture's density modes stay at the centers.
        covs.push_back(rotated_cov2d(0.02, 0.002, std::atan2(ty, tx)));
    }
    return GaussianMixture(std::move(w), std::move(means), std::move(covs));
}

std::vector<Vec> hd_centers(std::size_t dim) {
    std::vector<Vec> means;
    for (std::size_t i = 0; i < 5; ++i) {
        Vec m(dim, 0.0);
        m[20 * i] = 4.0;
        means.push_back(std::move(m));
    }
    return means;
}

GaussianMixture make_hd_uniform() {
    const std::size_t dim = 100;
    std::vector<double> w(5, 0.2);
    std::vector<Mat> covs(5, linalg::identity(dim));
    return GaussianMixture(std::move(w), hd_centers(dim), std::move(covs));
}

GaussianMixture make_hd_sharpcov(std::uint64_t seed) {
    const std::size_t dim = 100;
    std::vector<double> w(5, 0.2);
    std::vector<Mat> covs;
    for (std::size_t k = 0; k < 5; ++k) {
        Rng rng(derive_seed(seed, "hdsharpcov-orientation", k));
        Mat q = linalg::random_orthogonal(dim, rng);
        // Q diag(10 x 1.0, 90 x 0.01) Q^T, filled symmetrically.
        Mat c(dim, dim, 0.0);
        for (std::size_t a = 0; a < dim; ++a) {
            for (std::size_t b = a; b < dim; ++b) {
                double s = 0.0;
                for (std::size_t j = 0; j < dim; ++j) {
                    double lambda = j < 10 ? 1.0 : 0.01;
                    s += lambda * q(a, j) * q(b, j);
                }
                c(a, b) = s;
                c(b, a) = s;
            }
        }
        covs.push_back(std::move(c));
    }
    return GaussianMixture(std::move(w), hd_centers(dim), std::move(covs));
}

GaussianMixture make_thin_manifold(std::uint64_t seed) {
    const std::size_t dim = 100;
    Rng rng(derive_seed(seed, "thinmanifold-subspace", 0));
    Mat u = linalg::random_orthonormal_columns(dim, 2, rng);
    std::vector<double> w(4, 0.25);
    std::vector<Vec> means;
    std::vector<Mat> covs;
    for (std::size_t i = 0; i < 4; ++i) {
        Vec offset = pentagon_vertex(i, 2.0);
        Vec m(dim, 0.0);
        for (std::size_t a = 0; a < dim; ++a) m[a] = u(a, 0) * offset[0] + u(a, 1) * offset[1];
        means.push_back(std::move(m));
    }
    // Shared covariance U I2 U^T + 0.001 I.
    Mat c(dim, dim, 0.0);
    for (std::size_t a = 0; a < dim; ++a) {
        for (std::size_t b = 0; b < dim; ++b) {
            c(a, b) = u(a, 0) * u(b, 0) + u(a, 1) * u(b, 1);
        }
        c(a, a) += 0.001;
    }
    linalg::symmetrize(c);
    for (std::size_t i = 0; i < 4; ++i) covs.push_back(c);
    return GaussianMixture(std::move(w), std::move(means), std::move(covs));
}

}  // namespace

GaussianMixture make_catalog(Catalog which, std::uint64_t seed) {
    switch (which) {
        case Catalog::Uniform: return make_uniform();
        case Catalog::SharpCov: return make_sharpcov();
        case Catalog::Spiral: return make_spiral();
        case Catalog::HDUniform: return make_hd_uniform();
        case Catalog::HDSharpCov: return make_hd_sharpcov(seed);
        case Catalog::ThinManifold: return make_thin_manifold(seed);
    }
    throw ConfigError("unknown catalog enum");
}

GaussianMixture make_catalog(const std::string& name, std::uint64_t seed) {
    return make_catalog(catalog_from_name(name), seed);
}

// ----------------------------------------------------------------------------
// datasets
// ----------------------------------------------------------------------------

bool is_standard_cardinality(std::size_t n) {
    return n == 1 || n == 10 || n == 100 || n == 1000 || n == 10000 || n == 100000;
}

DatasetHandle make_dataset(const std::string& catalog, std::uint64_t seed, std::size_t cardinality) {
    if (cardinality < 1) throw ConfigError("dataset cardinality must be >= 1");
    GaussianMixture mix = make_catalog(catalog, derive_seed(seed, "catalog-mixture"));
    std::vector<Vec> pts = sample(mix, cardinality, derive_seed(seed, "dataset-points"));
    return DatasetHandle{catalog, std::move(pts), std::move(mix), seed, cardinality, "direct"};
}

std::pair<DatasetHandle, DatasetHandle> make_disjoint_pair(const std::string& catalog,
                                                           std::uint64_t seed,
                                                           std::size_t half_size) {
    DatasetHandle pool = make_dataset(catalog, seed, 2 * half_size);
    DatasetHandle a{catalog,
                    std::vector<Vec>(pool.points.begin(), pool.points.begin() + static_cast<long>(half_size)),
                    pool.source_mixture, seed, half_size, "poolA"};
    DatasetHandle b{catalog,
                    std::vector<Vec>(pool.points.begin() + static_cast<long>(half_size), pool.points.end()),
                    pool.source_mixture, seed, half_size, "poolB"};
    return {std::move(a), std::move(b)};
}

std::string dataset_csv_name(const DatasetHandle& ds) {
    return ds.name + "_" + std::to_string(ds.cardinality) + "_" + std::to_string(ds.seed) + ".csv";
}

void export_dataset_csv(const DatasetHandle& ds, const std::string& path) {
    std::string out;
    out.reserve(ds.points.size() * ds.source_mixture.dim() * 20);
    for (const Vec& p : ds.points) {
        for (std::size_t i = 0; i < p.size(); ++i) {
            if (i) out += ',';
            out += io::format_double(p[i]);
        }
        out += '\n';
    }
    io::write_file_atomic(path, out);
}

}  // namespace lownoise
