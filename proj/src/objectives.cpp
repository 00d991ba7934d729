#include "lownoise/objectives.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>

#include "lownoise/io.hpp"
#include "lownoise/kernels.hpp"
#include "lownoise/rng.hpp"

namespace lownoise {

ObjectiveKind objective_from_name(const std::string& name) {
    if (name == "reconstruction") return ObjectiveKind::Reconstruction;
    if (name == "ncsn") return ObjectiveKind::NCSN;
    if (name == "ssm") return ObjectiveKind::SSM;
    throw ConfigError("unknown objective: " + name);
}

const char* objective_name(ObjectiveKind k) {
    switch (k) {
        case ObjectiveKind::Reconstruction: return "reconstruction";
        case ObjectiveKind::NCSN: return "ncsn";
        case ObjectiveKind::SSM: return "ssm";
    }
    return "?";
}

NcsnWeighting weighting_from_name(const std::string& name) {
    if (name == "sigma_squared") return NcsnWeighting::SigmaSquared;
    if (name == "unweighted") return NcsnWeighting::Unweighted;
    throw ConfigError("unknown ncsn weighting: " + name);
}

const char* weighting_name(NcsnWeighting w) {
    return w == NcsnWeighting::SigmaSquared ? "sigma_squared" : "unweighted";
}

Vec ObjectiveSpec::default_sigma_ladder() { return Vec{1.0, 0.2, 0.1, 0.05, 0.01, 0.001}; }

void ObjectiveSpec::validate() const {
    if (sigma_ladder.empty()) throw ConfigError("sigma ladder must be nonempty");
    for (std::size_t i = 0; i < sigma_ladder.size(); ++i) {
        if (sigma_ladder[i] <= 0.0)
            throw ConfigError("sigma ladder must be strictly positive");
        if (i > 0 && sigma_ladder[i] >= sigma_ladder[i - 1])
            throw ConfigError("sigma ladder must be strictly descending");
    }
    if (ssm_slices < 1) throw ConfigError("ssm_slices must be >= 1");
}

void TrainConfig::validate() const {
    if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
    if (lr <= 0.0) throw ConfigError("lr must be > 0");
    if (epochs < 1) throw ConfigError("epochs must be >= 1");
}

// ----------------------------------------------------------------------------
// batch assembly
// ----------------------------------------------------------------------------

namespace {

struct LossScratch {
    BatchWorkspace ws;
    Mat input, clean, out, upstream;
    Mat tangent, out_tan, up_tan;
    GradientBundle grads;
};

/// Zero sc.grads in place, reallocating only on shape change.
void reset_grads(const NetworkParams& p, GradientBundle& g) {
    bool congruent = g.weights.size() == p.weights.size();
    for (std::size_t l = 0; congruent && l < p.weights.size(); ++l)
        congruent = g.weights[l].same_shape(p.weights[l]) && g.biases[l].size() == p.biases[l].size();
    if (!congruent) {
        g = GradientBundle::zeros_like(p);
        return;
    }
    for (std::size_t l = 0; l < g.weights.size(); ++l) {
        std::fill(g.weights[l].data.begin(), g.weights[l].data.end(), 0.0);
        std::fill(g.biases[l].begin(), g.biases[l].end(), 0.0);
    }
    g.loss = 0.0;
}

void check_batch(const std::vector<Vec>& batch, const std::vector<double>& sigmas,
                 const std::vector<Vec>& eps) {
    if (batch.empty()) throw ConfigError("loss: batch must be nonempty");
    if (sigmas.size() != batch.size() || eps.size() != batch.size())
        throw ConfigError("loss: sigmas/eps must match batch size");
}

/// Rows: [x + sigma*eps, c(sigma)]; clean rows: x.
void assemble(const NetworkParams& p, const std::vector<Vec>& batch,
              const std::vector<double>& sigmas, const std::vector<Vec>& eps, Mat& input,
              Mat& clean) {
    const std::size_t b = batch.size();
    const std::size_t d = p.data_dim();
    if (input.rows != b || input.cols != d + 1) input = Mat(b, d + 1);
    if (clean.rows != b || clean.cols != d) clean = Mat(b, d);
    for (std::size_t i = 0; i < b; ++i) {
        if (batch[i].size() != d) throw ConfigError("loss: point dimension mismatch");
        double s = sigmas[i];
        double* in_row = input.row(i);
        double* cl_row = clean.row(i);
        for (std::size_t j = 0; j < d; ++j) {
            cl_row[j] = batch[i][j];
            in_row[j] = batch[i][j] + s * eps[i][j];
        }
        in_row[d] = conditioning_value(s);
    }
}

std::vector<Vec> draw_eps(std::size_t b, std::size_t d, Rng& rng) {
    std::vector<Vec> eps(b);
    for (auto& e : eps) e = rng.normal_vec(d);
    return eps;
}

void check_finite(const GradientBundle& g, const char* what) {
    if (!g.all_finite()) throw NumericalError(std::string(what) + ": non-finite loss or gradient");
}

}  // namespace

// ----------------------------------------------------------------------------
// reconstruction
// ----------------------------------------------------------------------------

namespace {

void recon_core(const NetworkParams& p, const std::vector<Vec>& batch,
                          const std::vector<double>& sigmas, const std::vector<Vec>& eps,
                          LossScratch& sc) {
    check_batch(batch, sigmas, eps);
    const std::size_t b = batch.size();
    const std::size_t d = p.data_dim();
    assemble(p, batch, sigmas, eps, sc.input, sc.clean);
    forward_batch(p, sc.input, sc.ws, sc.out);
    if (sc.upstream.rows != b || sc.upstream.cols != d) sc.upstream = Mat(b, d);
    double loss = 0.0;
    const double inv_b = 1.0 / static_cast<double>(b);
    for (std::size_t i = 0; i < b; ++i) {
        const double* f = sc.out.row(i);
        const double* x0 = sc.clean.row(i);
        double* up = sc.upstream.row(i);
        for (std::size_t j = 0; j < d; ++j) {
            double r = f[j] - x0[j];
            loss += r * r;
            up[j] = 2.0 * r * inv_b;
        }
    }
    reset_grads(p, sc.grads);
    backward_batch(p, sc.upstream, sc.ws, sc.grads);
    sc.grads.loss = loss * inv_b;
    check_finite(sc.grads, "recon_loss_grad");
}

}  // namespace

GradientBundle recon_loss_grad(const NetworkParams& p, const std::vector<Vec>& batch,
                               const std::vector<double>& sigmas, const std::vector<Vec>& eps) {
    LossScratch sc;
    recon_core(p, batch, sigmas, eps, sc);
    return std::move(sc.grads);
}

GradientBundle recon_loss_grad(const NetworkParams& p, const std::vector<Vec>& batch,
                               const std::vector<double>& sigmas, std::uint64_t seed) {
    Rng rng(seed);
    return recon_loss_grad(p, batch, sigmas, draw_eps(batch.size(), p.data_dim(), rng));
}

// ----------------------------------------------------------------------------
// NCSN
// ----------------------------------------------------------------------------

namespace {

void ncsn_core(const NetworkParams& p, const std::vector<Vec>& batch,
                         const std::vector<double>& sigmas, const std::vector<Vec>& eps,
                         NcsnWeighting weighting, LossScratch& sc) {
    check_batch(batch, sigmas, eps);
    for (double s : sigmas)
        if (s <= 0.0) throw ConfigError("ncsn_loss_grad: sigma must be > 0 (target undefined at 0)");
    const std::size_t b = batch.size();
    const std::size_t d = p.data_dim();
    assemble(p, batch, sigmas, eps, sc.input, sc.clean);
    forward_batch(p, sc.input, sc.ws, sc.out);
    if (sc.upstream.rows != b || sc.upstream.cols != d) sc.upstream = Mat(b, d);
    double loss = 0.0;
    const double inv_b = 1.0 / static_cast<double>(b);
    for (std::size_t i = 0; i < b; ++i) {
        const double sigma = sigmas[i];
        const double w = weighting == NcsnWeighting::SigmaSquared ? sigma * sigma : 1.0;
        const double* s_hat = sc.out.row(i);
        double* up = sc.upstream.row(i);
        for (std::size_t j = 0; j < d; ++j) {
            double r = s_hat[j] + eps[i][j] / sigma;
            loss += w * r * r;
            up[j] = 2.0 * w * r * inv_b;
        }
    }
    reset_grads(p, sc.grads);
    backward_batch(p, sc.upstream, sc.ws, sc.grads);
    sc.grads.loss = loss * inv_b;
    check_finite(sc.grads, "ncsn_loss_grad");
}

}  // namespace

GradientBundle ncsn_loss_grad(const NetworkParams& p, const std::vector<Vec>& batch,
                              const std::vector<double>& sigmas, const std::vector<Vec>& eps,
                              NcsnWeighting weighting) {
    LossScratch sc;
    ncsn_core(p, batch, sigmas, eps, weighting, sc);
    return std::move(sc.grads);
}

GradientBundle ncsn_loss_grad(const NetworkParams& p, const std::vector<Vec>& batch,
                              const std::vector<double>& sigmas, NcsnWeighting weighting,
                              std::uint64_t seed) {
    Rng rng(seed);
    return ncsn_loss_grad(p, batch, sigmas, draw_eps(batch.size(), p.data_dim(), rng), weighting);
}

// ----------------------------------------------------------------------------
// SSM
// ----------------------------------------------------------------------------

namespace {

void ssm_core(const NetworkParams& p, const std::vector<Vec>& batch,
                        const std::vector<double>& sigmas, const std::vector<Vec>& eps,
                        const std::vector<std::vector<Vec>>& slice_dirs, LossScratch& sc) {
    check_batch(batch, sigmas, eps);
    if (slice_dirs.size() != batch.size())
        throw ConfigError("ssm_loss_grad: slice_dirs must match batch size");
    const std::size_t n_slices = slice_dirs[0].size();
    if (n_slices < 1) throw ConfigError("ssm_loss_grad: need at least one slice");
    const std::size_t b = batch.size();
    const std::size_t d = p.data_dim();
    assemble(p, batch, sigmas, eps, sc.input, sc.clean);

    reset_grads(p, sc.grads);
    if (sc.tangent.rows != b || sc.tangent.cols != d + 1) sc.tangent = Mat(b, d + 1);
    if (sc.upstream.rows != b || sc.upstream.cols != d) sc.upstream = Mat(b, d);
    if (sc.up_tan.rows != b || sc.up_tan.cols != d) sc.up_tan = Mat(b, d);

    const double inv_b = 1.0 / static_cast<double>(b);
    const double inv_bs = inv_b / static_cast<double>(n_slices);
    double jac_sum = 0.0;  // sum_ij v_ij . u_ij
    double sq_sum = 0.0;   // sum_i ||s_i||^2
    for (std::size_t j = 0; j < n_slices; ++j) {
        for (std::size_t i = 0; i < b; ++i) {
            if (slice_dirs[i].size() != n_slices)
                throw ConfigError("ssm_loss_grad: ragged slice_dirs");
            const Vec& v = slice_dirs[i][j];
            double* trow = sc.tangent.row(i);
            for (std::size_t q = 0; q < d; ++q) trow[q] = v[q];
            trow[d] = 0.0;  // conditioning slot carries no tangent
        }
        jvp_batch(p, sc.input, sc.tangent, sc.ws, sc.out, sc.out_tan);
        for (std::size_t i = 0; i < b; ++i) {
            const Vec& v = slice_dirs[i][j];
            const double* u = sc.out_tan.row(i);
            const double* s_hat = sc.out.row(i);
            jac_sum += kernels::dot(v.data(), u, d);
            if (j == 0) sq_sum += kernels::dot(s_hat, s_hat, d);
            double* up = sc.upstream.row(i);
            double* ut = sc.up_tan.row(i);
            for (std::size_t q = 0; q < d; ++q) {
                // The 0.5||s||^2 term enters the adjoint once, on slice 0.
                up[q] = j == 0 ? s_hat[q] * inv_b : 0.0;
                ut[q] = v[q] * inv_bs;
            }
        }
        backward_jvp_batch(p, sc.upstream, sc.up_tan, sc.ws, sc.grads);
    }
    sc.grads.loss = jac_sum * inv_bs + 0.5 * sq_sum * inv_b;
    check_finite(sc.grads, "ssm_loss_grad");
}

}  // namespace

GradientBundle ssm_loss_grad(const NetworkParams& p, const std::vector<Vec>& batch,
                             const std::vector<double>& sigmas, const std::vector<Vec>& eps,
                             const std::vector<std::vector<Vec>>& slice_dirs) {
    LossScratch sc;
    ssm_core(p, batch, sigmas, eps, slice_dirs, sc);
    return std::move(sc.grads);
}

GradientBundle ssm_loss_grad(const NetworkParams& p, const std::vector<Vec>& batch,
                             const std::vector<double>& sigmas, int slices, std::uint64_t seed) {
    Rng rng(seed);
    const std::size_t d = p.data_dim();
    std::vector<Vec> eps(batch.size());
    std::vector<std::vector<Vec>> dirs(batch.size());
    for (std::size_t i = 0; i < batch.size(); ++i) {
        eps[i] = rng.normal_vec(d);
        dirs[i].reserve(static_cast<std::size_t>(slices));
        for (int j = 0; j < slices; ++j) dirs[i].push_back(rng.normal_vec(d));
    }
    return ssm_loss_grad(p, batch, sigmas, eps, dirs);
}

// ----------------------------------------------------------------------------
// training loop
// ----------------------------------------------------------------------------

ArchSpec default_arch(std::size_t data_dim) {
    return ArchSpec{{data_dim + 1, 128, 128, 128, data_dim}, Activation::SiLU};
}

namespace {

constexpr std::size_t kBudgetVisits = 200000;

std::vector<std::size_t> canonical_order(const std::vector<Vec>& points) {
    std::vector<std::size_t> idx(points.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
        return std::lexicographical_compare(points[a].begin(), points[a].end(), points[b].begin(),
                                            points[b].end());
    });
    return idx;
}

}  // namespace

TrainResult train(const ObjectiveSpec& objective, const DatasetHandle& dataset,
                  const ArchSpec& arch, const TrainConfig& config) {
    objective.validate();
    config.validate();
    if (dataset.points.empty()) throw ConfigError("train: dataset must be nonempty");
    const std::size_t n = dataset.points.size();
    const std::size_t d = dataset.points[0].size();
    if (arch.layer_dims.front() != d + 1 || arch.layer_dims.back() != d)
        throw ConfigError("train: architecture does not match data dimension");

    NetworkParams params =
        init_network(arch.layer_dims, arch.activation, derive_seed(config.seed, "train-init"));
    AdamState adam = AdamState::zeros_like(params);

    // Canonical point order: training depends on the multiset of points and
    // the seed, not on the order the caller stored them in.
    std::vector<std::size_t> canon = canonical_order(dataset.points);
    const std::size_t epoch_len =
        std::max(n, (kBudgetVisits + static_cast<std::size_t>(config.epochs) - 1) /
                        static_cast<std::size_t>(config.epochs));

    TrainResult result;
    result.epoch_mean_loss.reserve(static_cast<std::size_t>(config.epochs));

    LossScratch sc;
    std::vector<Vec> batch;
    std::vector<double> sigmas;
    std::vector<Vec> eps;
    std::vector<std::vector<Vec>> dirs;
    long step_index = 0;

    for (long epoch = 0; epoch < config.epochs; ++epoch) {
        auto t0 = std::chrono::steady_clock::now();
        Rng order_rng(derive_seed(config.seed, "train-order", static_cast<std::uint64_t>(epoch)));
        Rng draw_rng(derive_seed(config.seed, "train-draws", static_cast<std::uint64_t>(epoch)));

        std::vector<std::size_t> visits;
        visits.reserve(epoch_len);
        if (epoch_len == n) {
            visits = canon;
            for (std::size_t i = n; i-- > 1;) {
                std::size_t j = static_cast<std::size_t>(order_rng.below(i + 1));
                std::swap(visits[i], visits[j]);
            }
        } else {
            for (std::size_t i = 0; i < epoch_len; ++i)
                visits.push_back(canon[static_cast<std::size_t>(order_rng.below(n))]);
        }

        double epoch_loss = 0.0;
        std::size_t done = 0;
        std::size_t batch_index = 0;
        while (done < epoch_len) {
            std::size_t b = std::min(config.batch_size, epoch_len - done);
            batch.assign(b, Vec());
            sigmas.assign(b, 0.0);
            eps.assign(b, Vec());
            if (objective.kind == ObjectiveKind::SSM) dirs.assign(b, {});
            for (std::size_t i = 0; i < b; ++i) {
                batch[i] = dataset.points[visits[done + i]];
                sigmas[i] = objective.sigma_ladder[static_cast<std::size_t>(
                    draw_rng.below(objective.sigma_ladder.size()))];
                eps[i] = draw_rng.normal_vec(d);
                if (objective.kind == ObjectiveKind::SSM) {
                    for (int s = 0; s < objective.ssm_slices; ++s)
                        dirs[i].push_back(draw_rng.normal_vec(d));
                }
            }
            try {
                switch (objective.kind) {
                    case ObjectiveKind::Reconstruction:
                        recon_core(params, batch, sigmas, eps, sc);
                        break;
                    case ObjectiveKind::NCSN:
                        ncsn_core(params, batch, sigmas, eps, objective.ncsn_weighting, sc);
                        break;
                    case ObjectiveKind::SSM:
                        ssm_core(params, batch, sigmas, eps, dirs, sc);
                        break;
                }
            } catch (const NumericalError& e) {
                throw TrainingError("training aborted at epoch " + std::to_string(epoch) +
                                    ", batch " + std::to_string(batch_index) + ": " + e.what());
            }
            adam_step(params, sc.grads, adam, config.lr, ++step_index);
            epoch_loss += sc.grads.loss * static_cast<double>(b);
            done += b;
            ++batch_index;
        }
        auto t1 = std::chrono::steady_clock::now();
        result.epoch_mean_loss.push_back(epoch_loss / static_cast<double>(epoch_len));
        result.epoch_wall_ms.push_back(
            std::chrono::duration<double, std::milli>(t1 - t0).count());
    }

    result.checkpoint.params = std::move(params);
    result.checkpoint.objective = objective_name(objective.kind);
    result.checkpoint.sigma_ladder = objective.sigma_ladder;
    result.checkpoint.seed = config.seed;
    result.checkpoint.epochs = config.epochs;
    return result;
}

std::string train_log_csv(const TrainResult& r) {
    std::vector<std::vector<double>> rows;
    rows.reserve(r.epoch_mean_loss.size());
    for (std::size_t e = 0; e < r.epoch_mean_loss.size(); ++e)
        rows.push_back({static_cast<double>(e), r.epoch_mean_loss[e], r.epoch_wall_ms[e]});
    return io::csv_from_rows("epoch,mean_loss,wall_ms", rows);
}

}  // namespace lownoise
