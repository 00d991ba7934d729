#include "lownoise/probes.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include <json.hpp>

#include "lownoise/io.hpp"
#include "lownoise/kernels.hpp"
#include "lownoise/rng.hpp"

namespace lownoise {

namespace {

constexpr double kLowNoiseMax = 0.05;
constexpr double kHighNoiseMin = 0.1;

double l2(const Vec& a, const Vec& b) {
    return std::sqrt(kernels::sqdist(a.data(), b.data(), a.size()));
}

std::string sig_key(double sigma) { return "sigma=" + io::format_double(sigma); }

}  // namespace

double vec_mean(const Vec& v) {
    if (v.empty()) return 0.0;
    return kernels::sum(v.data(), v.size()) / static_cast<double>(v.size());
}

double vec_median(Vec v) {
    if (v.empty()) return 0.0;
    std::sort(v.begin(), v.end());
    std::size_t n = v.size();
    if (n % 2 == 1) return v[n / 2];
    return 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

double vec_quantile(Vec v, double q) {
    if (v.empty()) return 0.0;
    std::sort(v.begin(), v.end());
    double pos = q * static_cast<double>(v.size() - 1);
    std::size_t lo = static_cast<std::size_t>(std::floor(pos));
    std::size_t hi = std::min(lo + 1, v.size() - 1);
    double frac = pos - static_cast<double>(lo);
    return v[lo] + frac * (v[hi] - v[lo]);
}

std::size_t ProbeReport::column(const std::string& name) const {
    for (std::size_t i = 0; i < record_columns.size(); ++i)
        if (record_columns[i] == name) return i;
    throw ConfigError("probe report: no column named " + name);
}

std::string ProbeReport::summary_json() const {
    nlohmann::json j;
    j["kind"] = kind;
    j["aggregates"] = aggregates;
    j["provenance"] = provenance;
    j["record_columns"] = record_columns;
    j["n_records"] = records.size();
    return j.dump(2) + "\n";
}

Vec default_sigma_list() { return Vec{0.001, 0.01, 0.05, 0.1, 0.2, 1.0}; }

DenoisePolicy probe_policy() {
    DenoisePolicy p;
    p.conv_mode = ConvMode::SigmaScaled;
    return p;
}

// ----------------------------------------------------------------------------
// aggregate recomputation (the audit path)
// ----------------------------------------------------------------------------

namespace {

/// Values of `value_col` restricted to rows where each (col, value) filter
/// matches exactly.
Vec select(const ProbeReport& r, const std::string& value_col,
           const std::vector<std::pair<std::size_t, double>>& filters) {
    Vec out;
    std::size_t vc = r.column(value_col);
    for (const auto& row : r.records) {
        bool ok = true;
        for (const auto& [c, v] : filters)
            if (row[c] != v) ok = false;
        if (ok) out.push_back(row[vc]);
    }
    return out;
}

std::vector<double> distinct_values(const ProbeReport& r, std::size_t col) {
    std::set<double> s;
    for (const auto& row : r.records) s.insert(row[col]);
    return std::vector<double>(s.begin(), s.end());
}

std::map<std::string, double> aggregate_consistency(const ProbeReport& r) {
    std::map<std::string, double> out;
    std::size_t sc = r.column("sigma");
    Vec low_l2, high_l2, low_cos, high_cos;
    for (double sigma : distinct_values(r, sc)) {
        Vec fl2 = select(r, "final_l2", {{sc, sigma}});
        Vec fn = select(r, "final_l2_normalized", {{sc, sigma}});
        Vec fc = select(r, "final_cos", {{sc, sigma}});
        std::string k = sig_key(sigma);
        out[k + "/mean_final_l2"] = vec_mean(fl2);
        out[k + "/median_final_l2"] = vec_median(fl2);
        out[k + "/mean_final_l2_normalized"] = vec_mean(fn);
        out[k + "/mean_final_cos"] = vec_mean(fc);
        out[k + "/median_final_cos"] = vec_median(fc);
        if (sigma <= kLowNoiseMax) {
            low_l2.insert(low_l2.end(), fn.begin(), fn.end());
            low_cos.insert(low_cos.end(), fc.begin(), fc.end());
        }
        if (sigma >= kHighNoiseMin) {
            high_l2.insert(high_l2.end(), fn.begin(), fn.end());
            high_cos.insert(high_cos.end(), fc.begin(), fc.end());
        }
    }
    out["group=low/mean_final_l2_normalized"] = vec_mean(low_l2);
    out["group=low/mean_final_cos"] = vec_mean(low_cos);
    out["group=high/mean_final_l2_normalized"] = vec_mean(high_l2);
    out["group=high/mean_final_cos"] = vec_mean(high_cos);
    return out;
}

std::map<std::string, double> aggregate_denoising(const ProbeReport& r) {
    std::map<std::string, double> out;
    std::size_t sc = r.column("sigma");
    std::size_t tc = r.column("is_test");
    for (double sigma : distinct_values(r, sc)) {
        for (double is_test : {0.0, 1.0}) {
            Vec init = select(r, "init_dist", {{sc, sigma}, {tc, is_test}});
            if (init.empty()) continue;
            Vec fin = select(r, "final_dist", {{sc, sigma}, {tc, is_test}});
            Vec imp = select(r, "improvement", {{sc, sigma}, {tc, is_test}});
            std::string k = sig_key(sigma) + (is_test > 0.5 ? "/test" : "/train");
            out[k + "/mean_init_dist"] = vec_mean(init);
            out[k + "/mean_final_dist"] = vec_mean(fin);
            out[k + "/mean_improvement"] = vec_mean(imp);
            out[k + "/median_final_dist"] = vec_median(fin);
        }
    }
    return out;
}

std::map<std::string, double> aggregate_attractor(const ProbeReport& r) {
    std::map<std::string, double> out;
    for (const char* col : {"d_x_o1", "d_x_o2", "d_o1_o2"}) {
        Vec v = select(r, col, {});
        std::string k(col);
        out["mean_" + k] = vec_mean(v);
        out["median_" + k] = vec_median(v);
        out["q25_" + k] = vec_quantile(v, 0.25);
        out["q75_" + k] = vec_quantile(v, 0.75);
    }
    out["mean_init_corruption"] = vec_mean(select(r, "init_corruption", {}));
    double denom = out["median_d_x_o1"];
    out["ratio_median"] = denom > 0.0 ? out["median_d_o1_o2"] / denom : 0.0;
    return out;
}

std::map<std::string, double> aggregate_score_accuracy(const ProbeReport& r) {
    std::map<std::string, double> out;
    std::size_t mc = r.column("mahalanobis");
    std::size_t ec = r.column("error");
    std::size_t nc = r.column("true_norm");
    Vec by_bin_err[3], by_bin_norm[3];
    Vec all_err;
    for (const auto& row : r.records) {
        int b = static_cast<int>(bin_of(row[mc]));
        by_bin_err[b].push_back(row[ec]);
        by_bin_norm[b].push_back(row[nc]);
        all_err.push_back(row[ec]);
    }
    out["median_error"] = vec_median(all_err);
    out["mean_error"] = vec_mean(all_err);
    for (int b = 0; b < 3; ++b) {
        std::string k = std::string("bin=") + bin_name(static_cast<BinLabel>(b));
        out[k + "/count"] = static_cast<double>(by_bin_err[b].size());
        if (by_bin_err[b].empty()) continue;
        double med_err = vec_median(by_bin_err[b]);
        double med_norm = vec_median(by_bin_norm[b]);
        out[k + "/median_error"] = med_err;
        out[k + "/q25_error"] = vec_quantile(by_bin_err[b], 0.25);
        out[k + "/q75_error"] = vec_quantile(by_bin_err[b], 0.75);
        out[k + "/median_true_norm"] = med_norm;
        out[k + "/rel_median_error"] = med_norm > 0.0 ? med_err / med_norm : 0.0;
    }
    return out;
}

std::map<std::string, double> aggregate_trajectory_comparison(const ProbeReport& r) {
    std::map<std::string, double> out;
    out["mean_endpoint_divergence"] = vec_mean(select(r, "endpoint_divergence", {}));
    out["mean_mid_divergence"] = vec_mean(select(r, "mid_divergence", {}));
    out["mean_max_divergence"] = vec_mean(select(r, "max_divergence", {}));
    Vec fm = select(r, "final_mahalanobis_model", {});
    double close = 0.0;
    for (double m : fm)
        if (m < kBinCloseMax) close += 1.0;
    out["frac_model_final_close"] = fm.empty() ? 0.0 : close / static_cast<double>(fm.size());
    return out;
}

}  // namespace

std::map<std::string, double> recompute_aggregates(const ProbeReport& r) {
    if (r.kind == "consistency") return aggregate_consistency(r);
    if (r.kind == "denoising_performance") return aggregate_denoising(r);
    if (r.kind == "attractor") return aggregate_attractor(r);
    if (r.kind == "score_accuracy") return aggregate_score_accuracy(r);
    if (r.kind == "trajectory_comparison") return aggregate_trajectory_comparison(r);
    throw ConfigError("unknown probe kind: " + r.kind);
}

// ----------------------------------------------------------------------------
// consistency probe
// ----------------------------------------------------------------------------

ProbeReport consistency_probe(const ScoreField& field_a, const ScoreField& field_b,
                              const std::vector<Vec>& eval_points, const Vec& sigma_list,
                              std::uint64_t seed, const DenoisePolicy& policy) {
    if (field_a.dim() != field_b.dim()) throw ConfigError("consistency_probe: field dims differ");
    if (eval_points.empty()) throw ConfigError("consistency_probe: need eval points");

    ProbeReport rep;
    rep.kind = "consistency";
    rep.record_columns = {"sigma",     "sample",   "init_dist", "final_l2", "final_l2_normalized",
                          "final_cos", "mean_l2",  "mean_cos",  "steps_a",  "steps_b"};
    rep.provenance = {{"field_a", field_a.description()},
                      {"field_b", field_b.description()},
                      {"seed", std::to_string(seed)},
                      {"eval_points", std::to_string(eval_points.size())}};

    const std::size_t n = eval_points.size();
    for (std::size_t si = 0; si < sigma_list.size(); ++si) {
        const double sigma = sigma_list[si];
        struct SampleOut {
            Vec l2_series, cos_series;
            double init_dist = 0.0;
            std::size_t steps_a = 0, steps_b = 0;
        };
        std::vector<SampleOut> slots(n);
        kernels::parallel_for(n, 1, [&](std::size_t b, std::size_t e) {
            for (std::size_t i = b; i < e; ++i) {
                std::uint64_t cseed = derive_seed(seed, "consistency-corrupt", si * 1000003 + i);
                Trajectory ta = denoise_from(field_a, eval_points[i], sigma, policy, cseed);
                Trajectory tb = denoise_from(field_b, eval_points[i], sigma, policy, cseed);
                SampleOut& s = slots[i];
                s.init_dist = l2(ta.states[0], eval_points[i]);
                s.steps_a = ta.n_steps();
                s.steps_b = tb.n_steps();
                MetricSeries div = l2_divergence(ta, tb);
                s.l2_series = div.values;
                MetricSeries cosdiv = cosine_divergence(ta.directions, tb.directions);
                s.cos_series.resize(cosdiv.values.size());
                for (std::size_t t = 0; t < cosdiv.values.size(); ++t)
                    s.cos_series[t] = 1.0 - cosdiv.values[t];
            }
        });

        std::size_t max_len = 0;
        for (const auto& s : slots) max_len = std::max(max_len, s.l2_series.size());
        Vec mean_l2(max_len, 0.0), mean_cos(max_len, 0.0);
        std::vector<std::size_t> counts(max_len, 0);
        for (const auto& s : slots) {
            for (std::size_t t = 0; t < s.l2_series.size(); ++t) {
                mean_l2[t] += s.l2_series[t];
                ++counts[t];
            }
            for (std::size_t t = 0; t < s.cos_series.size(); ++t) mean_cos[t] += s.cos_series[t];
        }
        MetricSeries ml2, mcos;
        ml2.name = "mean_l2_divergence";
        mcos.name = "mean_cos_similarity";
        for (std::size_t t = 0; t < max_len; ++t) {
            if (!counts[t]) continue;
            ml2.steps.push_back(t);
            ml2.values.push_back(mean_l2[t] / static_cast<double>(counts[t]));
            mcos.steps.push_back(t);
            mcos.values.push_back(mean_cos[t] / static_cast<double>(counts[t]));
        }
        ml2.flags.assign(ml2.values.size(), false);
        mcos.flags.assign(mcos.values.size(), false);
        rep.series[sig_key(sigma) + "/l2"] = std::move(ml2);
        rep.series[sig_key(sigma) + "/cos"] = std::move(mcos);

        for (std::size_t i = 0; i < n; ++i) {
            const SampleOut& s = slots[i];
            double final_l2 = s.l2_series.empty() ? 0.0 : s.l2_series.back();
            double final_cos = s.cos_series.empty() ? 1.0 : s.cos_series.back();
            double norm = s.init_dist > 0.0 ? final_l2 / s.init_dist : 0.0;
            rep.records.push_back({sigma, static_cast<double>(i), s.init_dist, final_l2, norm,
                                   final_cos, vec_mean(s.l2_series), vec_mean(s.cos_series),
                                   static_cast<double>(s.steps_a), static_cast<double>(s.steps_b)});
        }
    }
    rep.aggregates = recompute_aggregates(rep);
    return rep;
}

// ----------------------------------------------------------------------------
// denoising performance probe
// ----------------------------------------------------------------------------

ProbeReport denoising_performance_probe(const ScoreField& field, const DatasetHandle& trainset,
                                        const DatasetHandle& testset, const Vec& sigma_list,
                                        std::size_t samples, std::uint64_t seed,
                                        const DenoisePolicy& policy) {
    ProbeReport rep;
    rep.kind = "denoising_performance";
    rep.record_columns = {"sigma", "is_test", "sample", "init_dist", "final_dist", "improvement"};
    bool with_replacement = samples > trainset.points.size() || samples > testset.points.size();
    rep.provenance = {{"field", field.description()},
                      {"seed", std::to_string(seed)},
                      {"samples", std::to_string(samples)},
                      {"with_replacement", with_replacement ? "true" : "false"},
                      {"trainset", dataset_csv_name(trainset)},
                      {"testset", dataset_csv_name(testset)}};

    auto pick = [&](const DatasetHandle& ds, std::uint64_t pick_seed) {
        std::vector<Vec> out;
        Rng rng(pick_seed);
        const std::size_t m = ds.points.size();
        if (samples >= m) {
            for (std::size_t i = 0; i < samples; ++i)
                out.push_back(ds.points[static_cast<std::size_t>(rng.below(m))]);
        } else {
            // Partial Fisher-Yates over indices: first `samples` slots.
            std::vector<std::size_t> idx(m);
            for (std::size_t i = 0; i < m; ++i) idx[i] = i;
            for (std::size_t i = 0; i < samples; ++i) {
                std::size_t j = i + static_cast<std::size_t>(rng.below(m - i));
                std::swap(idx[i], idx[j]);
                out.push_back(ds.points[idx[i]]);
            }
        }
        return out;
    };

    for (int split = 0; split < 2; ++split) {
        const DatasetHandle& ds = split == 0 ? trainset : testset;
        std::vector<Vec> chosen = pick(ds, derive_seed(seed, split == 0 ? "pick-train" : "pick-test"));
        for (std::size_t si = 0; si < sigma_list.size(); ++si) {
            const double sigma = sigma_list[si];
            struct Out {
                double init = 0.0, fin = 0.0;
                Vec curve;
            };
            std::vector<Out> slots(chosen.size());
            kernels::parallel_for(chosen.size(), 1, [&](std::size_t b, std::size_t e) {
                for (std::size_t i = b; i < e; ++i) {
                    std::uint64_t cseed = derive_seed(
                        seed, split == 0 ? "denoise-train" : "denoise-test", si * 1000003 + i);
                    Trajectory t = denoise_from(field, chosen[i], sigma, policy, cseed);
                    Out& o = slots[i];
                    o.curve.resize(t.states.size());
                    for (std::size_t k = 0; k < t.states.size(); ++k)
                        o.curve[k] = l2(t.states[k], chosen[i]);
                    o.init = o.curve.front();
                    o.fin = o.curve.back();
                }
            });
            std::size_t max_len = 0;
            for (const auto& o : slots) max_len = std::max(max_len, o.curve.size());
            MetricSeries mean_curve;
            mean_curve.name = "mean_dist_to_clean";
            for (std::size_t t = 0; t < max_len; ++t) {
                double acc = 0.0;
                std::size_t cnt = 0;
                for (const auto& o : slots)
                    if (t < o.curve.size()) {
                        acc += o.curve[t];
                        ++cnt;
                    }
                mean_curve.steps.push_back(t);
                mean_curve.values.push_back(acc / static_cast<double>(cnt));
            }
            mean_curve.flags.assign(mean_curve.values.size(), false);
            rep.series[sig_key(sigma) + (split == 0 ? "/train" : "/test")] = std::move(mean_curve);
            for (std::size_t i = 0; i < slots.size(); ++i) {
                const Out& o = slots[i];
                double improvement = o.init > 0.0 ? o.fin / o.init : 0.0;
                rep.records.push_back({sigma, static_cast<double>(split), static_cast<double>(i),
                                       o.init, o.fin, improvement});
            }
        }
    }
    rep.aggregates = recompute_aggregates(rep);
    return rep;
}

// ----------------------------------------------------------------------------
// attractor probe
// ----------------------------------------------------------------------------

ProbeReport attractor_probe(const ScoreField& field, const std::vector<Vec>& points, double sigma,
                            std::uint64_t seed, const DenoisePolicy& policy) {
    if (sigma <= 0.0) throw ConfigError("attractor_probe: sigma must be > 0");
    if (points.empty()) throw ConfigError("attractor_probe: need probe points");
    ProbeReport rep;
    rep.kind = "attractor";
    rep.record_columns = {"sample", "d_x_o1", "d_x_o2", "d_o1_o2", "init_corruption"};
    rep.provenance = {{"field", field.description()},
                      {"seed", std::to_string(seed)},
                      {"sigma", io::format_double(sigma)},
                      {"points", std::to_string(points.size())}};

    std::vector<std::array<double, 4>> slots(points.size());
    kernels::parallel_for(points.size(), 1, [&](std::size_t b, std::size_t e) {
        for (std::size_t i = b; i < e; ++i) {
            const Vec& x = points[i];
            Trajectory first =
                denoise_from(field, x, sigma, policy, derive_seed(seed, "attractor-pass1", i));
            const Vec& o1 = first.final_state();
            // Second pass adds an independent fresh draw.
            Trajectory second =
                denoise_from(field, o1, sigma, policy, derive_seed(seed, "attractor-pass2", i));
            const Vec& o2 = second.final_state();
            slots[i] = {l2(x, o1), l2(x, o2), l2(o1, o2), l2(first.states[0], x)};
        }
    });
    for (std::size_t i = 0; i < points.size(); ++i) {
        rep.records.push_back(
            {static_cast<double>(i), slots[i][0], slots[i][1], slots[i][2], slots[i][3]});
    }
    rep.aggregates = recompute_aggregates(rep);
    return rep;
}

// ----------------------------------------------------------------------------
// score accuracy probe
// ----------------------------------------------------------------------------

ProbeReport score_accuracy_probe(const ScoreField& field, const GaussianMixture& mixture,
                                 std::size_t n_eval, double sigma, std::uint64_t seed) {
    if (n_eval < 1) throw ConfigError("score_accuracy_probe: n_eval must be >= 1");
    ProbeReport rep;
    rep.kind = "score_accuracy";
    rep.record_columns = {"sample", "mahalanobis", "error", "true_norm"};
    rep.provenance = {{"field", field.description()},
                      {"seed", std::to_string(seed)},
                      {"sigma", io::format_double(sigma)},
                      {"n_eval", std::to_string(n_eval)}};

    // Draws from the sigma-smoothed mixture: mixture sample plus sigma-noise.
    std::vector<Vec> pts = sample(mixture, n_eval, derive_seed(seed, "score-eval-clean"));
    for (std::size_t i = 0; i < pts.size(); ++i)
        pts[i] = corrupt(pts[i], sigma, derive_seed(seed, "score-eval-noise", i));

    SmoothedMixture sm(mixture, sigma);
    std::vector<std::array<double, 3>> slots(pts.size());
    kernels::parallel_for(pts.size(), 8, [&](std::size_t b, std::size_t e) {
        for (std::size_t i = b; i < e; ++i) {
            Vec est = field.score_estimate(pts[i], sigma);
            Vec truth = sm.score(pts[i].data());
            double err = l2(est, truth);
            double norm = std::sqrt(kernels::dot(truth.data(), truth.data(), truth.size()));
            slots[i] = {sm.min_mahalanobis(pts[i].data()), err, norm};
        }
    });
    for (std::size_t i = 0; i < pts.size(); ++i)
        rep.records.push_back({static_cast<double>(i), slots[i][0], slots[i][1], slots[i][2]});
    rep.aggregates = recompute_aggregates(rep);
    return rep;
}

// ----------------------------------------------------------------------------
// trajectory comparison probe
// ----------------------------------------------------------------------------

namespace {

/// Mean over the middle half of the annealing phase (the descending part of
/// the schedule); path-shape differences live there, while the held-floor
/// tail only polishes the endpoint.
double mid_band_mean(const Vec& series, std::size_t anneal_len) {
    const std::size_t n = std::min(series.size(), anneal_len);
    if (n < 4) return vec_mean(Vec(series.begin(), series.begin() + static_cast<long>(n)));
    std::size_t b = n / 4;
    std::size_t e = (3 * n) / 4;
    Vec mid(series.begin() + static_cast<long>(b), series.begin() + static_cast<long>(e));
    return vec_mean(mid);
}

}  // namespace

ProbeReport trajectory_comparison_probe(const ScoreField& field, const GaussianMixture& mixture,
                                        const std::vector<Vec>& inits, const NoiseSchedule& schedule,
                                        const RunOptions& opts) {
    if (inits.empty()) throw ConfigError("trajectory_comparison_probe: need inits");
    AnalyticOracleField oracle(mixture);
    SmoothedMixture raw(mixture, 0.0);

    ProbeReport rep;
    rep.kind = "trajectory_comparison";
    rep.record_columns = {"sample",
                          "endpoint_divergence",
                          "mid_divergence",
                          "max_divergence",
                          "final_mahalanobis_model",
                          "final_mahalanobis_oracle",
                          "steps_model",
                          "steps_oracle"};
    rep.provenance = {{"field", field.description()}, {"inits", std::to_string(inits.size())}};

    rep.trajectory_pairs.resize(inits.size());
    std::vector<std::array<double, 7>> slots(inits.size());
    kernels::parallel_for(inits.size(), 1, [&](std::size_t b, std::size_t e) {
        for (std::size_t i = b; i < e; ++i) {
            Trajectory tm = run_trajectory(field, inits[i], schedule, opts);
            Trajectory to = run_trajectory(oracle, inits[i], schedule, opts);
            MetricSeries div = l2_divergence(tm, to);
            // Divergence of the final outputs, wherever each run stopped.
            double endpoint = l2(tm.final_state(), to.final_state());
            double maxv = 0.0;
            for (double v : div.values) maxv = std::max(maxv, v);
            slots[i] = {endpoint,
                        mid_band_mean(div.values, schedule.sigmas.size()),
                        maxv,
                        raw.min_mahalanobis(tm.final_state().data()),
                        raw.min_mahalanobis(to.final_state().data()),
                        static_cast<double>(tm.n_steps()),
                        static_cast<double>(to.n_steps())};
            rep.trajectory_pairs[i] = {std::move(tm), std::move(to)};
        }
    });
    for (std::size_t i = 0; i < inits.size(); ++i) {
        const auto& s = slots[i];
        rep.records.push_back(
            {static_cast<double>(i), s[0], s[1], s[2], s[3], s[4], s[5], s[6]});
    }
    rep.aggregates = recompute_aggregates(rep);
    return rep;
}

// ----------------------------------------------------------------------------
// training-size sweep
// ----------------------------------------------------------------------------

std::vector<ProbeReport> train_size_sweep(const SweepRequest& req, std::uint64_t seed) {
    if (req.sizes.empty()) throw ConfigError("train_size_sweep: no sizes");
    for (std::size_t s : req.sizes)
        if (!is_standard_cardinality(s))
            throw ConfigError("train_size_sweep: non-standard size " + std::to_string(s));
    std::vector<ProbeReport> out;
    for (std::size_t size : req.sizes) {
        auto [ds_a, ds_b] = make_disjoint_pair(req.catalog, derive_seed(seed, "sweep-pool", size), size);

        const std::size_t d = ds_a.source_mixture.dim();
        ArchSpec arch;
        arch.layer_dims.push_back(d + 1);
        for (std::size_t w : req.hidden_widths) arch.layer_dims.push_back(w);
        arch.layer_dims.push_back(d);
        TrainConfig cfg_a = req.train;
        cfg_a.seed = derive_seed(seed, "sweep-train-a", size);
        TrainConfig cfg_b = req.train;
        cfg_b.seed = derive_seed(seed, "sweep-train-b", size);
        TrainResult model_a = train(req.objective, ds_a, arch, cfg_a);
        TrainResult model_b = train(req.objective, ds_b, arch, cfg_b);
        ModelField field_a(model_a.checkpoint);
        ModelField field_b(model_b.checkpoint);

        std::vector<Vec> eval_pts = sample(ds_a.source_mixture, req.eval_points,
                                           derive_seed(seed, "sweep-eval", size));

        for (const std::string& kind : req.probe_kinds) {
            ProbeReport rep;
            std::uint64_t probe_seed = derive_seed(seed, "sweep-probe-" + kind, size);
            if (kind == "consistency") {
                rep = consistency_probe(field_a, field_b, eval_pts, req.sigma_list, probe_seed,
                                        req.policy);
            } else if (kind == "denoising_performance") {
                DatasetHandle testset{ds_a.name, eval_pts, ds_a.source_mixture,
                                      derive_seed(seed, "sweep-eval", size), eval_pts.size(),
                                      "direct"};
                rep = denoising_performance_probe(field_a, ds_a, testset, req.sigma_list,
                                                  std::min(req.eval_points, ds_a.points.size()),
                                                  probe_seed, req.policy);
            } else if (kind == "attractor") {
                double sigma = req.sigma_list.empty() ? 0.1 : req.sigma_list[req.sigma_list.size() / 2];
                rep = attractor_probe(field_a, eval_pts, sigma, probe_seed, req.policy);
            } else {
                throw ConfigError("train_size_sweep: unsupported probe kind " + kind);
            }
            rep.provenance["size"] = std::to_string(size);
            rep.provenance["catalog"] = req.catalog;
            rep.provenance["objective"] = objective_name(req.objective.kind);
            rep.provenance["epochs"] = std::to_string(req.train.epochs);
            rep.provenance["seed_pool"] = std::to_string(derive_seed(seed, "sweep-pool", size));
            rep.provenance["seed_train_a"] = std::to_string(cfg_a.seed);
            rep.provenance["seed_train_b"] = std::to_string(cfg_b.seed);
            rep.provenance["master_seed"] = std::to_string(seed);
            out.push_back(std::move(rep));
        }
    }
    return out;
}

}  // namespace lownoise
