#include "lownoise/pipeline.hpp"

#include <algorithm>
#include <filesystem>
#include <iostream>
#include <sstream>

#include <json.hpp>

#include "lownoise/io.hpp"
#include "lownoise/probes.hpp"
#include "lownoise/rng.hpp"
#include "lownoise/svg.hpp"

namespace fs = std::filesystem;

namespace lownoise {

namespace {

bool ends_with(const std::string& s, const std::string& suffix) {
    return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

}  // namespace

Pipeline::Pipeline(ExperimentConfig config) : cfg_(std::move(config)) { cfg_.validate(); }

std::string Pipeline::out_path(const std::string& rel) const { return cfg_.out_dir + "/" + rel; }

std::uint64_t Pipeline::pool_seed(std::size_t size) const {
    return derive_seed(cfg_.master_seed, "pool", size);
}

std::uint64_t Pipeline::eval_seed(std::size_t size) const {
    return derive_seed(cfg_.master_seed, "eval", size);
}

std::uint64_t Pipeline::model_seed(const ObjectiveSpec& o, std::size_t size, char half) const {
    std::uint64_t base = derive_seed(cfg_.master_seed, "train-seed-base", cfg_.train.seed);
    return derive_seed(base, std::string("train-") + objective_name(o.kind) + "-" + half, size);
}

std::string Pipeline::checkpoint_path(const ObjectiveSpec& o, std::size_t size, char half) const {
    // Relative to out_dir so file contents never embed the output location.
    return "checkpoints/" + cfg_.catalog + "_" + objective_name(o.kind) + "_" +
           std::to_string(size) + "_" + half + ".ckpt.json";
}

// ----------------------------------------------------------------------------
// stages
// ----------------------------------------------------------------------------

void Pipeline::gen_data() {
    GaussianMixture mix = make_catalog(cfg_.catalog, derive_seed(cfg_.master_seed, "catalog-mixture"));
    io::write_file_atomic(out_path("datasets/" + cfg_.catalog + "_mixture.json"), mix.to_json());
    for (std::size_t size : cfg_.sizes) {
        auto [a, b] = make_disjoint_pair(cfg_.catalog, pool_seed(size), size);
        std::string base = cfg_.catalog + "_" + std::to_string(size) + "_" +
                           std::to_string(pool_seed(size));
        export_dataset_csv(a, out_path("datasets/" + base + "_A.csv"));
        export_dataset_csv(b, out_path("datasets/" + base + "_B.csv"));
        std::cout << "[gen-data] " << base << " (2x" << size << " points)\n";
    }
}

void Pipeline::train_models() {
    for (const ObjectiveSpec& o : cfg_.objectives) {
        for (std::size_t size : cfg_.sizes) {
            auto pair = make_disjoint_pair(cfg_.catalog, pool_seed(size), size);
            const DatasetHandle* halves[2] = {&pair.first, &pair.second};
            const char half_names[2] = {'A', 'B'};
            for (int h = 0; h < 2; ++h) {
                std::string ckpt_path = out_path(checkpoint_path(o, size, half_names[h]));
                if (io::file_exists(ckpt_path)) {
                    std::cout << "[train] cached: " << ckpt_path << "\n";
                    continue;
                }
                TrainConfig cfg = cfg_.train;
                cfg.seed = model_seed(o, size, half_names[h]);
                ArchSpec arch = default_arch(halves[h]->source_mixture.dim());
                TrainResult res = train(o, *halves[h], arch, cfg);
                save_checkpoint(res.checkpoint, ckpt_path);
                std::string log_name = cfg_.catalog + std::string("_") + objective_name(o.kind) +
                                       "_" + std::to_string(size) + "_" + half_names[h] +
                                       "_trainlog.csv";
                io::write_file_atomic(out_path("logs/" + log_name), train_log_csv(res));
                std::cout << "[train] " << ckpt_path
                          << " final_loss=" << res.epoch_mean_loss.back() << "\n";
            }
        }
    }
}

void Pipeline::probe_one(const ObjectiveSpec& o, std::size_t size, const ProbeSpecConfig& probe) {
    auto param = [&](const std::string& key, double fallback) {
        auto it = probe.params.find(key);
        return it == probe.params.end() ? fallback : it->second;
    };

    std::string ckpt_a_rel = checkpoint_path(o, size, 'A');
    std::string ckpt_b_rel = checkpoint_path(o, size, 'B');
    if (!io::file_exists(out_path(ckpt_a_rel)))
        throw IoError("probe stage: missing checkpoint " + out_path(ckpt_a_rel));
    Checkpoint ckpt_a = load_checkpoint(out_path(ckpt_a_rel));
    ModelField field_a(ckpt_a);

    auto pair = make_disjoint_pair(cfg_.catalog, pool_seed(size), size);
    const GaussianMixture& mix = pair.first.source_mixture;

    std::size_t n_eval = static_cast<std::size_t>(param("eval_points", 200));
    std::vector<Vec> eval_pts = sample(mix, n_eval, eval_seed(size));

    DenoisePolicy policy = probe_policy();
    policy.schedule_steps = cfg_.sampler.steps;
    policy.eta = cfg_.sampler.eta;
    policy.conv_tol = cfg_.sampler.conv_tol;
    policy.max_steps = cfg_.sampler.max_steps;

    std::uint64_t probe_seed = derive_seed(cfg_.master_seed, "probe-" + probe.kind, size);
    ProbeReport rep;
    if (probe.kind == "consistency") {
        if (!io::file_exists(out_path(ckpt_b_rel)))
            throw IoError("probe stage: missing checkpoint " + out_path(ckpt_b_rel));
        ModelField field_b(load_checkpoint(out_path(ckpt_b_rel)));
        rep = consistency_probe(field_a, field_b, eval_pts, cfg_.sigma_list, probe_seed, policy);
    } else if (probe.kind == "denoising_performance") {
        DatasetHandle testset{cfg_.catalog, eval_pts, mix, eval_seed(size), eval_pts.size(),
                              "direct"};
        std::size_t samples = static_cast<std::size_t>(
            param("samples", static_cast<double>(std::min<std::size_t>(200, size))));
        rep = denoising_performance_probe(field_a, pair.first, testset, cfg_.sigma_list, samples,
                                          probe_seed, policy);
    } else if (probe.kind == "attractor") {
        double sigma = param("sigma", 0.1);
        rep = attractor_probe(field_a, eval_pts, sigma, probe_seed, policy);
    } else if (probe.kind == "score_accuracy") {
        double sigma = param("sigma", 0.1);
        std::size_t n = static_cast<std::size_t>(param("n_eval", 2000));
        rep = score_accuracy_probe(field_a, mix, n, sigma, probe_seed);
    } else if (probe.kind == "trajectory_comparison") {
        std::size_t n_inits = static_cast<std::size_t>(param("inits", 20));
        std::vector<Vec> inits = sample(mix, n_inits, derive_seed(probe_seed, "inits"));
        for (std::size_t i = 0; i < inits.size(); ++i)
            inits[i] = corrupt(inits[i], 1.0, derive_seed(probe_seed, "init-noise", i));
        NoiseSchedule schedule =
            make_schedule(1.0, 0.01, cfg_.sampler.steps, cfg_.sampler.eta, cfg_.sampler.kappa);
        RunOptions opts;
        opts.max_steps = cfg_.sampler.max_steps ? cfg_.sampler.max_steps
                                                : (mix.dim() <= 2 ? 300 : 2000);
        opts.conv_tol = cfg_.sampler.conv_tol;
        rep = trajectory_comparison_probe(field_a, mix, inits, schedule, opts);
    } else {
        throw ConfigError("probe stage: unknown kind " + probe.kind);
    }

    rep.provenance["catalog"] = cfg_.catalog;
    rep.provenance["objective"] = objective_name(o.kind);
    rep.provenance["size"] = std::to_string(size);
    rep.provenance["master_seed"] = std::to_string(cfg_.master_seed);
    rep.provenance["checkpoint_a"] = ckpt_a_rel;
    if (probe.kind == "consistency") rep.provenance["checkpoint_b"] = ckpt_b_rel;
    rep.aggregates = recompute_aggregates(rep);

    std::string dir = std::string("probes/") + objective_name(o.kind) + "/";
    std::string base = probe.kind + "_" + cfg_.catalog + "_" + std::to_string(size);
    io::write_file_atomic(out_path(dir + base + ".json"), rep.summary_json());

    // Raw records.
    std::string cols;
    for (std::size_t i = 0; i < rep.record_columns.size(); ++i) {
        if (i) cols += ',';
        cols += rep.record_columns[i];
    }
    io::write_file_atomic(out_path(dir + base + "_records.csv"),
                          io::csv_from_rows(cols, rep.records));

    // Per-sigma series: key "sigma=<s>/<metric>".
    for (const auto& [key, series] : rep.series) {
        std::string name = key;
        std::size_t eq = name.find('=');
        std::size_t slash = name.find('/');
        if (eq != std::string::npos && slash != std::string::npos) {
            std::string sig = name.substr(eq + 1, slash - eq - 1);
            std::string metric = name.substr(slash + 1);
            io::write_file_atomic(out_path(dir + base + "_" + sig + "_" + metric + ".csv"),
                                  metric_series_csv(series));
        }
    }

    // Histogram of final direction cosine divergence per sigma (consistency
    // only): the per-noise-level agreement distribution.
    if (probe.kind == "consistency") {
        std::size_t sc = rep.column("sigma");
        std::size_t cc = rep.column("final_cos");
        for (double sigma : cfg_.sigma_list) {
            Vec vals;
            for (const auto& row : rep.records)
                if (row[sc] == sigma) vals.push_back(1.0 - row[cc]);
            if (vals.empty()) continue;
            io::write_file_atomic(
                out_path(dir + base + "_" + io::format_double(sigma) + "_coshist.csv"),
                histogram_csv(vals, 0.0, 2.0));
        }
    }

    // Paired trajectories for the comparison probe.
    for (std::size_t i = 0; i < rep.trajectory_pairs.size(); ++i) {
        io::write_file_atomic(out_path(dir + base + "_pair" + std::to_string(i) + "_model.csv"),
                              trajectory_csv(rep.trajectory_pairs[i].first));
        io::write_file_atomic(out_path(dir + base + "_pair" + std::to_string(i) + "_oracle.csv"),
                              trajectory_csv(rep.trajectory_pairs[i].second));
    }
    std::cout << "[probe] " << dir + base << " (" << rep.records.size() << " records)\n";
}

void Pipeline::run_probes() {
    for (const ObjectiveSpec& o : cfg_.objectives)
        for (std::size_t size : cfg_.sizes)
            for (const ProbeSpecConfig& p : cfg_.probes) probe_one(o, size, p);
}

void Pipeline::make_plots() {
    if (!fs::exists(out_path("probes"))) return;
    std::vector<std::string> csvs;
    for (const auto& entry : fs::recursive_directory_iterator(out_path("probes"))) {
        if (entry.is_regular_file() && entry.path().extension() == ".csv")
            csvs.push_back(entry.path().string());
    }
    std::sort(csvs.begin(), csvs.end());
    for (const std::string& path : csvs) {
        std::string content = io::read_file(path);
        std::istringstream in(content);
        std::string head;
        std::getline(in, head);
        std::string stem = fs::path(path).stem().string();
        if (head == "t,value,flag") {
            PlotSeries s;
            s.name = stem;
            double t, v, f;
            char c1, c2;
            std::string line;
            while (std::getline(in, line)) {
                std::istringstream ls(line);
                if (ls >> t >> c1 >> v >> c2 >> f) {
                    s.x.push_back(t);
                    s.y.push_back(v);
                }
            }
            if (s.x.empty()) continue;
            emit_plot({s}, "t", stem, out_path("plots/" + stem + ".svg"));
        } else if (head.find("mahalanobis,error") != std::string::npos) {
            std::size_t mc = 1, ec = 2;  // sample,mahalanobis,error,true_norm
            PlotSeries s;
            s.name = stem;
            std::string line;
            while (std::getline(in, line)) {
                std::vector<double> vals;
                std::istringstream ls(line);
                std::string cell;
                while (std::getline(ls, cell, ',')) vals.push_back(std::stod(cell));
                if (vals.size() > ec) {
                    s.x.push_back(vals[mc]);
                    s.y.push_back(vals[ec]);
                }
            }
            if (s.x.empty()) continue;
            emit_scatter(s, "distance from centers (mahalanobis)", "score error",
                         out_path("plots/" + stem + ".svg"));
        }
    }
}

// ----------------------------------------------------------------------------
// manifest
// ----------------------------------------------------------------------------

std::string canonical_for_hash(const std::string& rel_path, const std::string& content) {
    if (!ends_with(rel_path, "_trainlog.csv")) return content;
    // Strip the wall_ms column (timing noise must not break manifest equality).
    std::istringstream in(content);
    std::string out, line;
    while (std::getline(in, line)) {
        std::size_t first = line.find(',');
        std::size_t second = first == std::string::npos ? std::string::npos
                                                        : line.find(',', first + 1);
        out += second == std::string::npos ? line : line.substr(0, second);
        out += '\n';
    }
    return out;
}

void Pipeline::write_report() {
    nlohmann::json files = nlohmann::json::array();
    std::vector<std::string> paths;
    for (const auto& entry : fs::recursive_directory_iterator(cfg_.out_dir)) {
        if (!entry.is_regular_file()) continue;
        std::string rel = fs::relative(entry.path(), cfg_.out_dir).generic_string();
        if (rel == "manifest.json") continue;
        paths.push_back(rel);
    }
    std::sort(paths.begin(), paths.end());
    for (const std::string& rel : paths) {
        std::string content = io::read_file(out_path(rel));
        std::string canon = canonical_for_hash(rel, content);
        nlohmann::json f;
        f["path"] = rel;
        f["bytes"] = canon.size();
        f["hash"] = io::content_hash_hex(canon);
        files.push_back(std::move(f));
    }
    nlohmann::json manifest;
    manifest["files"] = std::move(files);
    io::write_file_atomic(out_path("manifest.json"), manifest.dump(2) + "\n");
    std::cout << "[report] manifest with " << paths.size() << " files\n";
}

std::vector<ManifestEntry> read_manifest(const std::string& path) {
    if (!io::file_exists(path)) throw IoError("manifest not found: " + path);
    nlohmann::json j = nlohmann::json::parse(io::read_file(path));
    std::vector<ManifestEntry> out;
    for (const auto& f : j.at("files")) {
        out.push_back({f.at("path").get<std::string>(), f.at("bytes").get<std::size_t>(),
                       f.at("hash").get<std::string>()});
    }
    return out;
}

void Pipeline::verify() const {
    auto entries = read_manifest(out_path("manifest.json"));
    std::size_t checked = 0;
    for (const auto& e : entries) {
        std::string full = out_path(e.path);
        if (!io::file_exists(full)) throw IoError("verify: missing file " + e.path);
        std::string canon = canonical_for_hash(e.path, io::read_file(full));
        if (io::content_hash_hex(canon) != e.hash)
            throw IoError("verify: hash mismatch for " + e.path);
        ++checked;
    }
    std::cout << "[verify] " << checked << " files ok\n";
}

void Pipeline::run_all() {
    io::ensure_dir(cfg_.out_dir);
    // The resolved-config echo is location-independent so two runs of the
    // same experiment into different directories stay manifest-identical.
    ExperimentConfig echo = cfg_;
    echo.out_dir = ".";
    io::write_file_atomic(out_path("config.resolved.json"), serialize_config(echo));
    gen_data();
    train_models();
    run_probes();
    make_plots();
    write_report();
}

}  // namespace lownoise
