#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "lownoise/probes.hpp"
#include "lownoise/rng.hpp"
#include "test_helpers.hpp"

using namespace lownoise;
using lownoise::testing::l2_dist;

namespace {

/// Snaps to the nearest stored point in one integrator step under the default
/// eta = 0.5: score = 2 (p - x) / sigma^2, so x + 0.5 sigma^2 s = p exactly.
class PointAttractorField : public ScoreField {
public:
    explicit PointAttractorField(std::vector<Vec> points) : points_(std::move(points)) {}
    std::size_t dim() const override { return points_[0].size(); }
    std::string kind() const override { return "point-attractor"; }
    Vec score_estimate(const Vec& x, double sigma) const override {
        const Vec& p = nearest(x);
        Vec s(x.size());
        for (std::size_t i = 0; i < x.size(); ++i) s[i] = 2.0 * (p[i] - x[i]) / (sigma * sigma);
        return s;
    }

private:
    const Vec& nearest(const Vec& x) const {
        std::size_t best = 0;
        double bd = 1e300;
        for (std::size_t k = 0; k < points_.size(); ++k) {
            double d = l2_dist(x, points_[k]);
            if (d < bd) {
                bd = d;
                best = k;
            }
        }
        return points_[best];
    }
    std::vector<Vec> points_;
};

}  // namespace

TEST_CASE("consistency probe: identical fields give zero divergence and unit cosine") {
    GaussianMixture mix = make_catalog("Uniform", 1);
    AnalyticOracleField a(mix);
    AnalyticOracleField b(make_catalog("Uniform", 2));  // independently built, same math
    auto pts = sample(mix, 10, 4);
    Vec sigmas = {0.01, 0.2};
    ProbeReport rep = consistency_probe(a, b, pts, sigmas, 99);

    std::size_t l2c = rep.column("final_l2");
    std::size_t cc = rep.column("final_cos");
    for (const auto& row : rep.records) {
        CHECK(row[l2c] <= 1e-12);
        CHECK(row[cc] == doctest::Approx(1.0).epsilon(1e-9));
    }
    CHECK(rep.aggregates.at("sigma=0.01/mean_final_l2") <= 1e-12);

    // audit: aggregates recompute bit-exactly from records
    auto again = recompute_aggregates(rep);
    CHECK(again == rep.aggregates);
}

TEST_CASE("consistency probe is symmetric in (A, B)") {
    GaussianMixture mix = make_catalog("Uniform", 1);
    AnalyticOracleField oracle(mix);

    // A slightly different field: the oracle of a perturbed mixture.
    std::vector<Vec> means = mix.means();
    means[0][0] += 0.3;
    GaussianMixture mix2(mix.weights(), means, mix.covariances());
    AnalyticOracleField other(mix2);

    auto pts = sample(mix, 8, 5);
    Vec sigmas = {0.05, 0.5};
    ProbeReport ab = consistency_probe(oracle, other, pts, sigmas, 7);
    ProbeReport ba = consistency_probe(other, oracle, pts, sigmas, 7);
    std::size_t l2c = ab.column("final_l2");
    std::size_t cc = ab.column("final_cos");
    REQUIRE(ab.records.size() == ba.records.size());
    for (std::size_t i = 0; i < ab.records.size(); ++i) {
        CHECK(ab.records[i][l2c] == ba.records[i][l2c]);
        CHECK(ab.records[i][cc] == ba.records[i][cc]);
    }
}

TEST_CASE("denoising performance probe: oracle contracts toward the mean") {
    // Data std (0.1 per coordinate) below the probe sigma, so pulling to the
    // mode really does shrink the distance to the clean point.
    Mat cov(2, 2, 0.0);
    cov(0, 0) = cov(1, 1) = 0.01;
    GaussianMixture g({1.0}, {Vec{1.0, 2.0}}, {cov});
    AnalyticOracleField oracle(g);
    DatasetHandle trainset{"g", sample(g, 50, 1), g, 1, 50, "direct"};
    DatasetHandle testset{"g", sample(g, 50, 2), g, 2, 50, "direct"};

    ProbeReport rep = denoising_performance_probe(oracle, trainset, testset, {0.2}, 20, 11);
    CHECK(rep.aggregates.at("sigma=0.2/train/mean_final_dist") <
          rep.aggregates.at("sigma=0.2/train/mean_init_dist"));
    CHECK(rep.aggregates.at("sigma=0.2/test/mean_final_dist") <
          rep.aggregates.at("sigma=0.2/test/mean_init_dist"));
    CHECK(recompute_aggregates(rep) == rep.aggregates);
}

TEST_CASE("attractor probe: idealized point attractor returns exactly") {
    Rng rng(3);
    std::vector<Vec> stored;
    for (int i = 0; i < 10; ++i) {
        stored.push_back({4.0 * rng.normal(), 4.0 * rng.normal()});
    }
    PointAttractorField field(stored);
    std::vector<Vec> probes_at = {stored[0], stored[3], stored[7]};
    ProbeReport rep = attractor_probe(field, probes_at, 0.01, 21);
    std::size_t oc = rep.column("d_o1_o2");
    for (const auto& row : rep.records) CHECK(row[oc] == 0.0);
    CHECK(rep.aggregates.at("median_d_o1_o2") == 0.0);
    CHECK(recompute_aggregates(rep) == rep.aggregates);
}

TEST_CASE("attractor probe: oracle stays near component means at small sigma") {
    GaussianMixture mix = make_catalog("Uniform", 1);
    AnalyticOracleField oracle(mix);
    std::vector<Vec> at_means = {mix.means()[0], mix.means()[2]};
    ProbeReport rep = attractor_probe(oracle, at_means, 0.01, 5);
    CHECK(rep.aggregates.at("median_d_x_o1") < 0.05);
    CHECK(rep.aggregates.at("median_d_x_o2") < 0.05);
}

TEST_CASE("attractor probe satisfies the triangle inequality per sample") {
    GaussianMixture mix = make_catalog("Uniform", 1);
    AnalyticOracleField oracle(mix);
    auto pts = sample(mix, 20, 8);
    ProbeReport rep = attractor_probe(oracle, pts, 0.1, 13);
    std::size_t c1 = rep.column("d_x_o1"), c2 = rep.column("d_x_o2"), c3 = rep.column("d_o1_o2");
    for (const auto& row : rep.records) CHECK(row[c3] <= row[c1] + row[c2] + 1e-12);
}

TEST_CASE("score accuracy probe: oracle is exact, zero field error grows with distance") {
    GaussianMixture mix = make_catalog("Uniform", 1);
    AnalyticOracleField oracle(mix);
    ProbeReport rep = score_accuracy_probe(oracle, mix, 500, 0.1, 17);
    for (const char* bin : {"close", "mid", "far"}) {
        std::string key = std::string("bin=") + bin + "/median_error";
        if (rep.aggregates.count(key)) CHECK(rep.aggregates.at(key) <= 1e-12);
    }

    class ZeroField : public ScoreField {
    public:
        std::size_t dim() const override { return 2; }
        std::string kind() const override { return "zero"; }
        Vec score_estimate(const Vec&, double) const override { return Vec(2, 0.0); }
    } zf;
    ProbeReport zr = score_accuracy_probe(zf, mix, 2000, 0.1, 18);
    REQUIRE(zr.aggregates.at("bin=far/count") > 10);
    CHECK(zr.aggregates.at("bin=far/median_error") > zr.aggregates.at("bin=close/median_error"));
    CHECK(recompute_aggregates(zr) == zr.aggregates);
}

TEST_CASE("trajectory comparison probe: oracle vs itself is identically zero") {
    GaussianMixture mix = make_catalog("Uniform", 1);
    AnalyticOracleField oracle(mix);
    auto inits = sample(mix, 5, 3);
    for (auto& p : inits) p = corrupt(p, 1.0, 44);
    NoiseSchedule sched = make_schedule(1.0, 0.01, 50, 0.5, 0.0);
    RunOptions opts;
    opts.max_steps = 100;
    ProbeReport rep = trajectory_comparison_probe(oracle, mix, inits, sched, opts);
    CHECK(rep.aggregates.at("mean_endpoint_divergence") == 0.0);
    CHECK(rep.aggregates.at("mean_max_divergence") == 0.0);
    CHECK(rep.trajectory_pairs.size() == 5);

    // Zero field: the learned path stays at the init, so the divergence equals
    // the oracle path's distance from the init.
    class ZeroField : public ScoreField {
    public:
        std::size_t dim() const override { return 2; }
        std::string kind() const override { return "zero"; }
        Vec score_estimate(const Vec&, double) const override { return Vec(2, 0.0); }
    } zf;
    ProbeReport zr = trajectory_comparison_probe(zf, mix, inits, sched, opts);
    REQUIRE(zr.trajectory_pairs.size() == 5);
    for (std::size_t i = 0; i < 5; ++i) {
        const Trajectory& tm = zr.trajectory_pairs[i].first;
        // zero field converges immediately (no motion)
        CHECK(l2_dist(tm.final_state(), inits[i]) == 0.0);
    }
    CHECK(recompute_aggregates(zr) == zr.aggregates);
}

TEST_CASE("train_size_sweep: structure, disjointness, determinism of provenance") {
    SweepRequest req;
    req.objective.kind = ObjectiveKind::NCSN;
    req.catalog = "Uniform";
    req.sizes = {10};
    req.probe_kinds = {"consistency"};
    req.train.epochs = 2000;  // 100-visit epochs on the 200k budget
    req.train.batch_size = 64;
    req.sigma_list = {0.1, 1.0};
    req.eval_points = 5;
    req.hidden_widths = {16};

    // Disjointness is structural: verify directly on the pair used by the sweep.
    auto [a, b] = make_disjoint_pair(req.catalog, derive_seed(31, "sweep-pool", 10), 10);
    for (const auto& pa : a.points)
        for (const auto& pb : b.points) CHECK(pa != pb);

    std::vector<ProbeReport> reps = train_size_sweep(req, 31);
    REQUIRE(reps.size() == 1);
    CHECK(reps[0].kind == "consistency");
    CHECK(reps[0].provenance.at("size") == "10");
    CHECK(reps[0].provenance.count("seed_train_a") == 1);
    CHECK(reps[0].provenance.count("seed_train_b") == 1);
    CHECK(reps[0].provenance.at("seed_train_a") != reps[0].provenance.at("seed_train_b"));
    CHECK(recompute_aggregates(reps[0]) == reps[0].aggregates);

    SweepRequest bad = req;
    bad.sizes = {7};
    CHECK_THROWS_AS(train_size_sweep(bad, 31), ConfigError);
}
