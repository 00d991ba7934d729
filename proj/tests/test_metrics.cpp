#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "lownoise/metrics.hpp"
#include "lownoise/rng.hpp"
#include "test_helpers.hpp"

using namespace lownoise;
using lownoise::testing::l2_dist;

namespace {

Trajectory fake_trajectory(const std::vector<Vec>& states) {
    Trajectory t;
    t.states = states;
    for (std::size_t i = 0; i + 1 < states.size(); ++i) {
        t.sigmas.push_back(0.1);
        t.directions.push_back(Vec(states[0].size(), 0.0));
    }
    t.stop_reason = StopReason::MaxSteps;
    return t;
}

std::vector<Vec> random_states(std::size_t n, std::size_t d, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<Vec> out;
    for (std::size_t i = 0; i < n; ++i) out.push_back(rng.normal_vec(d));
    return out;
}

}  // namespace

TEST_CASE("l2_divergence") {
    auto sa = random_states(8, 2, 1);
    Trajectory a = fake_trajectory(sa);
    MetricSeries zero = l2_divergence(a, a);
    for (double v : zero.values) CHECK(v == 0.0);

    // constant offset
    auto sb = sa;
    for (auto& s : sb) {
        s[0] += 3.0;
        s[1] += 4.0;
    }
    Trajectory b = fake_trajectory(sb);
    MetricSeries off = l2_divergence(a, b);
    for (double v : off.values) CHECK(v == doctest::Approx(5.0).epsilon(1e-12));

    // random pair vs brute-force recompute; also symmetry
    Trajectory c = fake_trajectory(random_states(6, 2, 2));
    MetricSeries ac = l2_divergence(a, c);
    MetricSeries ca = l2_divergence(c, a);
    REQUIRE(ac.values.size() == 6);  // shorter trajectory defines the range
    for (std::size_t t = 0; t < ac.values.size(); ++t) {
        CHECK(ac.values[t] == doctest::Approx(l2_dist(sa[t], c.states[t])).epsilon(1e-14));
        CHECK(ac.values[t] == ca.values[t]);
        CHECK(ac.values[t] >= 0.0);
    }

    Trajectory d3 = fake_trajectory(random_states(4, 3, 3));
    CHECK_THROWS_AS(l2_divergence(a, d3), ConfigError);
}

TEST_CASE("cosine_divergence conventions and range") {
    std::vector<Vec> i1 = {{1.0, 0.0}}, i2 = {{1.0, 0.0}};
    CHECK(cosine_divergence(i1, i2).values[0] == doctest::Approx(0.0).epsilon(1e-15));

    std::vector<Vec> opp = {{-1.0, 0.0}};
    CHECK(cosine_divergence(i1, opp).values[0] == doctest::Approx(2.0).epsilon(1e-15));

    std::vector<Vec> orth = {{0.0, 1.0}};
    CHECK(cosine_divergence(i1, orth).values[0] == doctest::Approx(1.0).epsilon(1e-15));

    // degenerate: near-zero norm maps to 1 with the flag set
    std::vector<Vec> tiny = {{1e-15, 0.0}};
    MetricSeries deg = cosine_divergence(i1, tiny);
    CHECK(deg.values[0] == 1.0);
    CHECK(deg.flags[0]);

    // range and symmetry on random pairs
    Rng rng(4);
    std::vector<Vec> da, db;
    for (int i = 0; i < 50; ++i) {
        da.push_back(rng.normal_vec(3));
        db.push_back(rng.normal_vec(3));
    }
    MetricSeries ab = cosine_divergence(da, db);
    MetricSeries ba = cosine_divergence(db, da);
    for (std::size_t t = 0; t < ab.values.size(); ++t) {
        CHECK(ab.values[t] >= 0.0);
        CHECK(ab.values[t] <= 2.0);
        CHECK(ab.values[t] == ba.values[t]);
    }
}

TEST_CASE("manifold_distance") {
    GaussianMixture mix = make_catalog("Uniform", 1);
    DatasetHandle one{"one", {Vec{1.0, 1.0}}, mix, 0, 1, "direct"};
    auto states = random_states(5, 2, 9);
    states[2] = {1.0, 1.0};  // exactly a dataset point
    Trajectory t = fake_trajectory(states);
    MetricSeries m1 = manifold_distance(t, one);
    CHECK(m1.values[2] == 0.0);
    for (std::size_t k = 0; k < states.size(); ++k)
        CHECK(m1.values[k] == doctest::Approx(l2_dist(states[k], {1.0, 1.0})).epsilon(1e-14));

    DatasetHandle big = make_dataset("Uniform", 3, 1000);
    MetricSeries mb = manifold_distance(t, big);
    for (std::size_t k = 0; k < states.size(); ++k) {
        double best = 1e300;
        for (const auto& p : big.points) best = std::min(best, l2_dist(states[k], p));
        CHECK(mb.values[k] == doctest::Approx(best).epsilon(1e-14));
    }

    // monotone under dataset growth
    DatasetHandle bigger = big;
    bigger.points.push_back(Vec{0.0, 0.0});
    bigger.cardinality++;
    MetricSeries mb2 = manifold_distance(t, bigger);
    for (std::size_t k = 0; k < states.size(); ++k) CHECK(mb2.values[k] <= mb.values[k]);
}

TEST_CASE("score_error") {
    GaussianMixture mix = make_catalog("Uniform", 1);
    AnalyticOracleField oracle(mix);
    auto pts = sample(mix, 20, 5);
    Vec same = score_error(oracle, mix, pts, 0.1);
    for (double v : same) CHECK(v <= 1e-12);

    class ZeroField : public ScoreField {
    public:
        std::size_t dim() const override { return 2; }
        std::string kind() const override { return "zero"; }
        Vec score_estimate(const Vec&, double) const override { return Vec(2, 0.0); }
    } zf;
    Vec ze = score_error(zf, mix, pts, 0.1);
    SmoothedMixture sm(mix, 0.1);
    for (std::size_t i = 0; i < pts.size(); ++i) {
        Vec s = sm.score(pts[i].data());
        CHECK(ze[i] == doctest::Approx(std::sqrt(s[0] * s[0] + s[1] * s[1])).epsilon(1e-12));
    }
}

TEST_CASE("bin_by_center_distance") {
    // Single isotropic unit component at the origin.
    Mat id2(2, 2, 0.0);
    id2(0, 0) = id2(1, 1) = 1.0;
    GaussianMixture sn({1.0}, {Vec{0.0, 0.0}}, {id2});
    std::vector<Vec> pts = {{0.0, 0.0}, {2.0, 0.0}, {5.0, 0.0}};
    auto bins = bin_by_center_distance(pts, sn, 0.0);
    CHECK(bins[0] == BinLabel::Close);
    CHECK(bins[1] == BinLabel::Mid);
    CHECK(bins[2] == BinLabel::Far);

    // Mahalanobis, not Euclidean: wide direction of an anisotropic component.
    Mat aniso(2, 2, 0.0);
    aniso(0, 0) = 100.0;
    aniso(1, 1) = 0.01;
    GaussianMixture an({1.0}, {Vec{0.0, 0.0}}, {aniso});
    auto b2 = bin_by_center_distance({{5.0, 0.0}, {0.0, 0.35}}, an, 0.0);
    CHECK(b2[0] == BinLabel::Close);  // 5/10 = 0.5 mahalanobis
    CHECK(b2[1] == BinLabel::Far);    // 0.35/0.1 = 3.5 mahalanobis
}

TEST_CASE("bins are invariant under joint rotation") {
    GaussianMixture sc = make_catalog("SharpCov", 1);
    auto pts = sample(sc, 100, 6);
    for (auto& p : pts) p = corrupt(p, 0.3, 77);
    auto base = bin_by_center_distance(pts, sc, 0.1);

    Rng rng(31);
    for (int trial = 0; trial < 3; ++trial) {
        double a = rng.uniform() * 2.0 * M_PI;
        double c = std::cos(a), s = std::sin(a);
        auto rot_vec = [&](const Vec& v) { return Vec{c * v[0] - s * v[1], s * v[0] + c * v[1]}; };
        std::vector<Vec> rpts;
        for (const auto& p : pts) rpts.push_back(rot_vec(p));
        std::vector<Vec> rmeans;
        std::vector<Mat> rcovs;
        for (std::size_t k = 0; k < sc.components(); ++k) {
            rmeans.push_back(rot_vec(sc.means()[k]));
            const Mat& m = sc.covariances()[k];
            Mat rm(2, 2);
            // R M R^T
            double m00 = m(0, 0), m01 = m(0, 1), m11 = m(1, 1);
            rm(0, 0) = c * (c * m00 - s * m01) - s * (c * m01 - s * m11);
            rm(0, 1) = c * (s * m00 + c * m01) - s * (s * m01 + c * m11);
            rm(1, 0) = rm(0, 1);
            rm(1, 1) = s * (s * m00 + c * m01) + c * (s * m01 + c * m11);
            rcovs.push_back(rm);
        }
        GaussianMixture rotated(sc.weights(), rmeans, rcovs);
        auto rbins = bin_by_center_distance(rpts, rotated, 0.1);
        for (std::size_t i = 0; i < pts.size(); ++i) CHECK(rbins[i] == base[i]);
    }
}

TEST_CASE("metric csv and histogram export") {
    MetricSeries s;
    s.name = "x";
    s.steps = {0, 1, 2};
    s.values = {0.5, 1.0, 1.5};
    s.flags = {false, true, false};
    std::string csv = metric_series_csv(s);
    CHECK(csv.rfind("t,value,flag\n", 0) == 0);
    CHECK(csv.find("1,1,1\n") != std::string::npos);

    std::string h = histogram_csv({0.0, 0.5, 0.999, 2.0}, 0.0, 2.0);
    CHECK(h.rfind("bin_left,bin_right,count\n", 0) == 0);
    std::size_t lines = static_cast<std::size_t>(std::count(h.begin(), h.end(), '\n'));
    CHECK(lines == 51);  // header + 50 bins
}
