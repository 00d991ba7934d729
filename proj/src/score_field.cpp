#include "lownoise/score_field.hpp"

#include <bit>
#include <cmath>

namespace lownoise {

Vec ScoreField::denoise_direction(const Vec& x, double sigma) const {
    Vec s = score_estimate(x, sigma);
    double s2 = sigma * sigma;
    for (double& v : s) v *= s2;
    return s;
}

// ----------------------------------------------------------------------------
// analytic oracle
// ----------------------------------------------------------------------------

AnalyticOracleField::AnalyticOracleField(GaussianMixture mixture) : mix_(std::move(mixture)) {}

std::size_t AnalyticOracleField::dim() const { return mix_.dim(); }

const SmoothedMixture& AnalyticOracleField::smoothed(double sigma) const {
    std::uint64_t key = std::bit_cast<std::uint64_t>(sigma);
    std::lock_guard<std::mutex> lk(cache_mu_);
    auto it = cache_.find(key);
    if (it == cache_.end()) {
        it = cache_.emplace(key, std::make_shared<SmoothedMixture>(mix_, sigma)).first;
    }
    return *it->second;
}

Vec AnalyticOracleField::score_estimate(const Vec& x, double sigma) const {
    return smoothed(sigma).score(x.data());
}

// ----------------------------------------------------------------------------
// trained model
// ----------------------------------------------------------------------------

ModelField::ModelField(Checkpoint checkpoint)
    : ckpt_(std::move(checkpoint)), objective_(objective_from_name(ckpt_.objective)) {
    ckpt_.params.validate();
}

std::size_t ModelField::dim() const { return ckpt_.params.data_dim(); }

std::string ModelField::kind() const { return ckpt_.objective; }

std::string ModelField::description() const {
    return ckpt_.objective + "(seed=" + std::to_string(ckpt_.seed) +
           ",epochs=" + std::to_string(ckpt_.epochs) + ")";
}

Vec ModelField::net_out(const Vec& x, double sigma) const { return forward(ckpt_.params, x, sigma); }

Vec ModelField::score_estimate(const Vec& x, double sigma) const {
    Vec out = net_out(x, sigma);
    if (objective_ == ObjectiveKind::Reconstruction) {
        if (sigma <= 0.0)
            throw NumericalError("reconstruction score undefined at sigma = 0");
        double inv_s2 = 1.0 / (sigma * sigma);
        for (std::size_t i = 0; i < out.size(); ++i) out[i] = (out[i] - x[i]) * inv_s2;
    }
    return out;
}

Vec ModelField::denoise_direction(const Vec& x, double sigma) const {
    Vec out = net_out(x, sigma);
    if (objective_ == ObjectiveKind::Reconstruction) {
        for (std::size_t i = 0; i < out.size(); ++i) out[i] -= x[i];
        return out;
    }
    double s2 = sigma * sigma;
    for (double& v : out) v *= s2;
    return out;
}

std::shared_ptr<ScoreField> make_oracle_field(GaussianMixture mixture) {
    return std::make_shared<AnalyticOracleField>(std::move(mixture));
}

std::shared_ptr<ScoreField> make_model_field(Checkpoint checkpoint) {
    return std::make_shared<ModelField>(std::move(checkpoint));
}

}  // namespace lownoise
