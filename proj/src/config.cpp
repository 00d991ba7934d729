#include "lownoise/config.hpp"

#include <set>

#include <json.hpp>

#include "lownoise/io.hpp"
#include "lownoise/mixture.hpp"

namespace lownoise {

namespace {

using nlohmann::json;

void reject_unknown_keys(const json& obj, const std::set<std::string>& allowed,
                         const std::string& where) {
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        if (!allowed.count(it.key()))
            throw ConfigError("config: unknown key '" + it.key() + "' in " + where);
    }
}

template <typename T>
T get_or(const json& obj, const std::string& key, const T& fallback) {
    if (!obj.contains(key)) return fallback;
    try {
        return obj.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ConfigError("config: bad value for '" + key + "': " + e.what());
    }
}

ObjectiveSpec parse_objective(const json& j) {
    if (!j.is_object()) throw ConfigError("config: each objective must be an object");
    reject_unknown_keys(j, {"kind", "sigma_ladder", "ncsn_weighting", "ssm_slices"}, "objectives[]");
    if (!j.contains("kind")) throw ConfigError("config: objective missing 'kind'");
    ObjectiveSpec spec;
    spec.kind = objective_from_name(j.at("kind").get<std::string>());
    spec.sigma_ladder = get_or<Vec>(j, "sigma_ladder", ObjectiveSpec::default_sigma_ladder());
    spec.ncsn_weighting =
        weighting_from_name(get_or<std::string>(j, "ncsn_weighting", "sigma_squared"));
    spec.ssm_slices = get_or<int>(j, "ssm_slices", 1);
    return spec;
}

}  // namespace

void ExperimentConfig::validate() const {
    catalog_from_name(catalog);  // throws on unknown name
    if (objectives.empty()) throw ConfigError("config: at least one objective is required");
    for (const auto& o : objectives) o.validate();
    train.validate();
    if (sampler.steps < 1) throw ConfigError("config: sampler.steps must be >= 1");
    if (sampler.eta <= 0.0) throw ConfigError("config: sampler.eta must be > 0");
    if (sampler.kappa < 0.0) throw ConfigError("config: sampler.kappa must be >= 0");
    if (sampler.conv_tol < 0.0) throw ConfigError("config: sampler.conv_tol must be >= 0");
    if (sigma_list.empty()) throw ConfigError("config: sigma_list must be nonempty");
    for (double s : sigma_list)
        if (s <= 0.0) throw ConfigError("config: sigma_list entries must be > 0");
    if (sizes.empty()) throw ConfigError("config: sizes must be nonempty");
    for (std::size_t s : sizes)
        if (!is_standard_cardinality(s))
            throw ConfigError("config: sizes entries must be in {1,10,100,1000,10000,100000}");
    static const std::set<std::string> kProbeKinds = {"consistency", "denoising_performance",
                                                      "attractor", "score_accuracy",
                                                      "trajectory_comparison"};
    for (const auto& p : probes)
        if (!kProbeKinds.count(p.kind)) throw ConfigError("config: unknown probe kind '" + p.kind + "'");
    if (out_dir.empty()) throw ConfigError("config: out_dir must be nonempty");
}

ExperimentConfig parse_config_text(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config: malformed JSON: ") + e.what());
    }
    if (!j.is_object()) throw ConfigError("config: top level must be an object");
    reject_unknown_keys(j,
                        {"catalog", "objectives", "train", "sampler", "probes", "sizes",
                         "sigma_list", "master_seed", "out_dir"},
                        "top level");

    ExperimentConfig c;
    if (!j.contains("catalog")) throw ConfigError("config: missing required key 'catalog'");
    c.catalog = j.at("catalog").get<std::string>();

    if (!j.contains("objectives")) throw ConfigError("config: missing required key 'objectives'");
    if (!j.at("objectives").is_array()) throw ConfigError("config: 'objectives' must be a list");
    for (const auto& jo : j.at("objectives")) c.objectives.push_back(parse_objective(jo));

    if (j.contains("train")) {
        const json& t = j.at("train");
        reject_unknown_keys(t, {"batch_size", "lr", "epochs", "seed"}, "train");
        c.train.batch_size = get_or<std::size_t>(t, "batch_size", 128);
        c.train.lr = get_or<double>(t, "lr", 0.001);
        c.train.epochs = get_or<long>(t, "epochs", 500);
        c.train.seed = get_or<std::uint64_t>(t, "seed", 0);
    }
    if (j.contains("sampler")) {
        const json& s = j.at("sampler");
        reject_unknown_keys(s, {"steps", "eta", "kappa", "conv_tol", "max_steps"}, "sampler");
        c.sampler.steps = get_or<std::size_t>(s, "steps", 200);
        c.sampler.eta = get_or<double>(s, "eta", 0.5);
        c.sampler.kappa = get_or<double>(s, "kappa", 0.0);
        c.sampler.conv_tol = get_or<double>(s, "conv_tol", 1e-2);
        c.sampler.max_steps = get_or<std::size_t>(s, "max_steps", 0);
    }
    if (j.contains("probes")) {
        if (!j.at("probes").is_array()) throw ConfigError("config: 'probes' must be a list");
        for (const auto& jp : j.at("probes")) {
            reject_unknown_keys(jp, {"kind", "params"}, "probes[]");
            if (!jp.contains("kind")) throw ConfigError("config: probe missing 'kind'");
            ProbeSpecConfig p;
            p.kind = jp.at("kind").get<std::string>();
            if (jp.contains("params")) {
                if (!jp.at("params").is_object())
                    throw ConfigError("config: probe params must be an object");
                for (auto it = jp.at("params").begin(); it != jp.at("params").end(); ++it) {
                    if (!it.value().is_number())
                        throw ConfigError("config: probe param '" + it.key() + "' must be numeric");
                    p.params[it.key()] = it.value().get<double>();
                }
            }
            c.probes.push_back(std::move(p));
        }
    }
    c.sizes = get_or<std::vector<std::size_t>>(j, "sizes", c.sizes);
    c.sigma_list = get_or<Vec>(j, "sigma_list", c.sigma_list);
    c.master_seed = get_or<std::uint64_t>(j, "master_seed", 0);
    c.out_dir = get_or<std::string>(j, "out_dir", "out");

    c.validate();
    return c;
}

ExperimentConfig parse_config(const std::string& path) {
    if (!io::file_exists(path)) throw ConfigError("config file not found: " + path);
    return parse_config_text(io::read_file(path));
}

std::string serialize_config(const ExperimentConfig& c) {
    json j;
    j["catalog"] = c.catalog;
    json objs = json::array();
    for (const auto& o : c.objectives) {
        json jo;
        jo["kind"] = objective_name(o.kind);
        jo["sigma_ladder"] = o.sigma_ladder;
        jo["ncsn_weighting"] = weighting_name(o.ncsn_weighting);
        jo["ssm_slices"] = o.ssm_slices;
        objs.push_back(std::move(jo));
    }
    j["objectives"] = std::move(objs);
    j["train"] = {{"batch_size", c.train.batch_size},
                  {"lr", c.train.lr},
                  {"epochs", c.train.epochs},
                  {"seed", c.train.seed}};
    j["sampler"] = {{"steps", c.sampler.steps},
                    {"eta", c.sampler.eta},
                    {"kappa", c.sampler.kappa},
                    {"conv_tol", c.sampler.conv_tol},
                    {"max_steps", c.sampler.max_steps}};
    json probes = json::array();
    for (const auto& p : c.probes) {
        json jp;
        jp["kind"] = p.kind;
        jp["params"] = p.params;
        probes.push_back(std::move(jp));
    }
    j["probes"] = std::move(probes);
    j["sizes"] = c.sizes;
    j["sigma_list"] = c.sigma_list;
    j["master_seed"] = c.master_seed;
    j["out_dir"] = c.out_dir;
    return j.dump(2) + "\n";
}

bool operator==(const SamplerConfig& a, const SamplerConfig& b) {
    return a.steps == b.steps && a.eta == b.eta && a.kappa == b.kappa && a.conv_tol == b.conv_tol &&
           a.max_steps == b.max_steps;
}

bool operator==(const ProbeSpecConfig& a, const ProbeSpecConfig& b) {
    return a.kind == b.kind && a.params == b.params;
}

bool operator==(const ObjectiveSpec& a, const ObjectiveSpec& b) {
    return a.kind == b.kind && a.sigma_ladder == b.sigma_ladder &&
           a.ncsn_weighting == b.ncsn_weighting && a.ssm_slices == b.ssm_slices;
}

bool operator==(const TrainConfig& a, const TrainConfig& b) {
    return a.batch_size == b.batch_size && a.lr == b.lr && a.epochs == b.epochs && a.seed == b.seed;
}

bool operator==(const ExperimentConfig& a, const ExperimentConfig& b) {
    return a.catalog == b.catalog && a.objectives == b.objectives && a.train == b.train &&
           a.sampler == b.sampler && a.probes == b.probes && a.sizes == b.sizes &&
           a.sigma_list == b.sigma_list && a.master_seed == b.master_seed && a.out_dir == b.out_dir;
}

}  // namespace lownoise
