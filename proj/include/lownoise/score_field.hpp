#pragma once

#include <map>
#include <memory>
#include <mutex>
#include <string>

#include "lownoise/mixture.hpp"
#include "lownoise/network.hpp"
#include "lownoise/objectives.hpp"

namespace lownoise {

/// Anything that maps (point, noise level) to a score estimate and a
/// denoising direction, related by direction = sigma^2 * score. Implementations
/// are immutable and safe to share across threads.
class ScoreField {
public:
    virtual ~ScoreField() = default;

    virtual std::size_t dim() const = 0;
    virtual std::string kind() const = 0;
    virtual std::string description() const { return kind(); }

    virtual Vec score_estimate(const Vec& x, double sigma) const = 0;
    virtual Vec denoise_direction(const Vec& x, double sigma) const;
};

/// Exact smoothed score of a Gaussian mixture; factorizations are cached per
/// sigma behind a mutex.
class AnalyticOracleField : public ScoreField {
public:
    explicit AnalyticOracleField(GaussianMixture mixture);

    std::size_t dim() const override;
    std::string kind() const override { return "analytic"; }
    Vec score_estimate(const Vec& x, double sigma) const override;

    const GaussianMixture& mixture() const { return mix_; }
    const SmoothedMixture& smoothed(double sigma) const;

private:
    GaussianMixture mix_;
    mutable std::mutex cache_mu_;
    mutable std::map<std::uint64_t, std::shared_ptr<SmoothedMixture>> cache_;
};

/// Trained network behind the same interface. Reconstruction models expose
/// direction = f(x, sigma) - x and score = direction / sigma^2 (sigma > 0);
/// score models output the score directly.
class ModelField : public ScoreField {
public:
    explicit ModelField(Checkpoint checkpoint);

    std::size_t dim() const override;
    std::string kind() const override;
    std::string description() const override;
    Vec score_estimate(const Vec& x, double sigma) const override;
    Vec denoise_direction(const Vec& x, double sigma) const override;

    const Checkpoint& checkpoint() const { return ckpt_; }

private:
    Vec net_out(const Vec& x, double sigma) const;

    Checkpoint ckpt_;
    ObjectiveKind objective_;
};

std::shared_ptr<ScoreField> make_oracle_field(GaussianMixture mixture);
std::shared_ptr<ScoreField> make_model_field(Checkpoint checkpoint);

}  // namespace lownoise
