#include "lownoise/metrics.hpp"

#include <cmath>
#include <limits>

#include "lownoise/io.hpp"
#include "lownoise/kernels.hpp"

namespace lownoise {

void MetricSeries::validate() const {
    if (steps.size() != values.size()) throw ConfigError("metric series: length mismatch");
    if (!flags.empty() && flags.size() != values.size())
        throw ConfigError("metric series: flag length mismatch");
    for (double v : values)
        if (!std::isfinite(v)) throw NumericalError("metric series: non-finite value");
}

const char* bin_name(BinLabel b) {
    switch (b) {
        case BinLabel::Close: return "close";
        case BinLabel::Mid: return "mid";
        case BinLabel::Far: return "far";
    }
    return "?";
}

MetricSeries l2_divergence(const Trajectory& a, const Trajectory& b) {
    if (a.states.empty() || b.states.empty()) throw ConfigError("l2_divergence: empty trajectory");
    if (a.states[0].size() != b.states[0].size())
        throw ConfigError("l2_divergence: dimension mismatch");
    std::size_t n = std::min(a.states.size(), b.states.size());
    MetricSeries s;
    s.name = "l2_divergence";
    s.steps.resize(n);
    s.values.resize(n);
    s.flags.assign(n, false);
    const std::size_t d = a.states[0].size();
    for (std::size_t t = 0; t < n; ++t) {
        s.steps[t] = t;
        s.values[t] = std::sqrt(kernels::sqdist(a.states[t].data(), b.states[t].data(), d));
    }
    return s;
}

MetricSeries cosine_divergence(const std::vector<Vec>& dirs_a, const std::vector<Vec>& dirs_b) {
    std::size_t n = std::min(dirs_a.size(), dirs_b.size());
    MetricSeries s;
    s.name = "cosine_divergence";
    s.steps.resize(n);
    s.values.resize(n);
    s.flags.assign(n, false);
    constexpr double kTiny = 1e-12;
    for (std::size_t t = 0; t < n; ++t) {
        if (dirs_a[t].size() != dirs_b[t].size())
            throw ConfigError("cosine_divergence: dimension mismatch at step " + std::to_string(t));
        const std::size_t d = dirs_a[t].size();
        double na = std::sqrt(kernels::dot(dirs_a[t].data(), dirs_a[t].data(), d));
        double nb = std::sqrt(kernels::dot(dirs_b[t].data(), dirs_b[t].data(), d));
        s.steps[t] = t;
        if (na < kTiny || nb < kTiny) {
            s.values[t] = 1.0;  // orthogonal by convention
            s.flags[t] = true;
        } else {
            s.values[t] = 1.0 - kernels::dot(dirs_a[t].data(), dirs_b[t].data(), d) / (na * nb);
        }
    }
    return s;
}

MetricSeries manifold_distance(const Trajectory& traj, const DatasetHandle& dataset) {
    if (dataset.points.empty()) throw ConfigError("manifold_distance: empty dataset");
    MetricSeries s;
    s.name = "manifold_distance";
    const std::size_t n = traj.states.size();
    s.steps.resize(n);
    s.values.resize(n);
    s.flags.assign(n, false);
    const std::size_t d = traj.states.empty() ? 0 : traj.states[0].size();
    for (std::size_t t = 0; t < n; ++t) {
        double best = std::numeric_limits<double>::infinity();
        const double* x = traj.states[t].data();
        for (const Vec& p : dataset.points) best = std::min(best, kernels::sqdist(x, p.data(), d));
        s.steps[t] = t;
        s.values[t] = std::sqrt(best);
    }
    return s;
}

Vec score_error(const ScoreField& field, const GaussianMixture& mixture,
                const std::vector<Vec>& points, double sigma) {
    SmoothedMixture sm(mixture, sigma);
    Vec out(points.size());
    const std::size_t d = mixture.dim();
    for (std::size_t i = 0; i < points.size(); ++i) {
        Vec est = field.score_estimate(points[i], sigma);
        Vec truth = sm.score(points[i].data());
        out[i] = std::sqrt(kernels::sqdist(est.data(), truth.data(), d));
    }
    return out;
}

BinLabel bin_of(double m) {
    if (m < kBinCloseMax) return BinLabel::Close;
    if (m < kBinMidMax) return BinLabel::Mid;
    return BinLabel::Far;
}

std::vector<BinLabel> bin_by_center_distance(const std::vector<Vec>& points,
                                             const GaussianMixture& mixture, double sigma) {
    SmoothedMixture sm(mixture, sigma);
    std::vector<BinLabel> out(points.size());
    for (std::size_t i = 0; i < points.size(); ++i)
        out[i] = bin_of(sm.min_mahalanobis(points[i].data()));
    return out;
}

std::string metric_series_csv(const MetricSeries& s) {
    std::vector<std::vector<double>> rows;
    rows.reserve(s.values.size());
    for (std::size_t i = 0; i < s.values.size(); ++i) {
        double flag = !s.flags.empty() && s.flags[i] ? 1.0 : 0.0;
        rows.push_back({static_cast<double>(s.steps[i]), s.values[i], flag});
    }
    return io::csv_from_rows("t,value,flag", rows);
}

std::string histogram_csv(const Vec& values, double lo, double hi) {
    constexpr std::size_t kBins = 50;
    if (!(hi > lo)) hi = lo + 1.0;
    std::vector<std::size_t> counts(kBins, 0);
    double width = (hi - lo) / static_cast<double>(kBins);
    for (double v : values) {
        double pos = (v - lo) / width;
        long b = static_cast<long>(std::floor(pos));
        if (b < 0) b = 0;
        if (b >= static_cast<long>(kBins)) b = kBins - 1;
        ++counts[static_cast<std::size_t>(b)];
    }
    std::vector<std::vector<double>> rows;
    rows.reserve(kBins);
    for (std::size_t b = 0; b < kBins; ++b) {
        rows.push_back({lo + width * static_cast<double>(b), lo + width * static_cast<double>(b + 1),
                        static_cast<double>(counts[b])});
    }
    return io::csv_from_rows("bin_left,bin_right,count", rows);
}

}  // namespace lownoise
