#include "lownoise/network.hpp"

#include <cmath>

#include <json.hpp>

#include "lownoise/io.hpp"
#include "lownoise/kernels.hpp"
#include "lownoise/rng.hpp"

namespace lownoise {

namespace {

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// Activations are evaluated once per forward pass; the backward passes reuse
// the cached sigmoid/tanh value instead of re-running exp.
inline double cache_of(Activation act, double a) {
    return act == Activation::SiLU ? sigmoid(a) : std::tanh(a);
}
inline double f_from(Activation act, double a, double c) {
    return act == Activation::SiLU ? a * c : c;
}
inline double df_from(Activation act, double a, double c) {
    return act == Activation::SiLU ? c * (1.0 + a * (1.0 - c)) : 1.0 - c * c;
}
inline double ddf_from(Activation act, double a, double c) {
    return act == Activation::SiLU ? c * (1.0 - c) * (2.0 + a * (1.0 - 2.0 * c))
                                   : -2.0 * c * (1.0 - c * c);
}

void ensure_shape(Mat& m, std::size_t r, std::size_t c) {
    if (m.rows != r || m.cols != c) m = Mat(r, c);
}

}  // namespace

Activation activation_from_name(const std::string& name) {
    if (name == "silu") return Activation::SiLU;
    if (name == "tanh") return Activation::Tanh;
    throw ConfigError("unknown activation: " + name);
}

const char* activation_name(Activation a) {
    switch (a) {
        case Activation::SiLU: return "silu";
        case Activation::Tanh: return "tanh";
    }
    return "?";
}

std::size_t NetworkParams::parameter_count() const {
    std::size_t n = 0;
    for (std::size_t l = 0; l < weights.size(); ++l) n += weights[l].data.size() + biases[l].size();
    return n;
}

void NetworkParams::validate() const {
    if (layer_dims.size() < 2) throw ConfigError("network needs at least 2 layers");
    if (weights.size() != layer_dims.size() - 1 || biases.size() != weights.size())
        throw ConfigError("network: parameter count does not match layer_dims");
    if (layer_dims.front() != data_dim() + 1)
        throw ConfigError("network: input width must be data dim + 1 (conditioning slot)");
    for (std::size_t l = 0; l < weights.size(); ++l) {
        if (layer_dims[l] < 1) throw ConfigError("network: layer width must be >= 1");
        if (weights[l].rows != layer_dims[l + 1] || weights[l].cols != layer_dims[l])
            throw ConfigError("network: weight shape mismatch at layer " + std::to_string(l));
        if (biases[l].size() != layer_dims[l + 1])
            throw ConfigError("network: bias length mismatch at layer " + std::to_string(l));
        for (double v : weights[l].data)
            if (!std::isfinite(v)) throw ConfigError("network: non-finite weight");
        for (double v : biases[l])
            if (!std::isfinite(v)) throw ConfigError("network: non-finite bias");
    }
}

GradientBundle GradientBundle::zeros_like(const NetworkParams& p) {
    GradientBundle g;
    for (std::size_t l = 0; l < p.weights.size(); ++l) {
        g.weights.emplace_back(p.weights[l].rows, p.weights[l].cols, 0.0);
        g.biases.emplace_back(p.biases[l].size(), 0.0);
    }
    return g;
}

void GradientBundle::add_scaled(const GradientBundle& other, double s) {
    for (std::size_t l = 0; l < weights.size(); ++l) {
        kernels::axpy(s, other.weights[l].data.data(), weights[l].data.data(), weights[l].data.size());
        kernels::axpy(s, other.biases[l].data(), biases[l].data(), biases[l].size());
    }
    loss += s * other.loss;
}

void GradientBundle::scale(double s) {
    for (std::size_t l = 0; l < weights.size(); ++l) {
        kernels::scale(s, weights[l].data.data(), weights[l].data.size());
        kernels::scale(s, biases[l].data(), biases[l].size());
    }
    loss *= s;
}

bool GradientBundle::all_finite() const {
    if (!std::isfinite(loss)) return false;
    for (const Mat& w : weights)
        for (double v : w.data)
            if (!std::isfinite(v)) return false;
    for (const Vec& b : biases)
        for (double v : b)
            if (!std::isfinite(v)) return false;
    return true;
}

NetworkParams init_network(const std::vector<std::size_t>& layer_dims, Activation activation,
                           std::uint64_t seed) {
    if (layer_dims.size() < 2) throw ConfigError("init_network: need at least 2 layers");
    for (std::size_t w : layer_dims)
        if (w < 1) throw ConfigError("init_network: layer widths must be >= 1");
    NetworkParams p;
    p.layer_dims = layer_dims;
    p.activation = activation;
    for (std::size_t l = 0; l + 1 < layer_dims.size(); ++l) {
        std::size_t out = layer_dims[l + 1];
        std::size_t in = layer_dims[l];
        Rng rng(derive_seed(seed, "init-layer", l));
        Mat w(out, in);
        double std_dev = std::sqrt(2.0 / static_cast<double>(in));
        for (double& v : w.data) v = std_dev * rng.normal();
        p.weights.push_back(std::move(w));
        p.biases.emplace_back(out, 0.0);
    }
    return p;
}

double conditioning_value(double sigma) {
    // Ladder bottom/top of the default noise ladder pin the affine map.
    constexpr double kLo = -6.812445099177812;  // log(0.001 + 1e-4)
    constexpr double kHi = 9.9995000333308335e-05;  // log(1.0 + 1e-4)
    double c = std::log(sigma + 1e-4);
    return 2.0 * (c - kLo) / (kHi - kLo) - 1.0;
}

// ----------------------------------------------------------------------------
// batched passes
// ----------------------------------------------------------------------------

void forward_batch(const NetworkParams& p, const Mat& input, BatchWorkspace& ws, Mat& out) {
    const std::size_t L = p.n_layers();
    const std::size_t B = input.rows;
    ws.pre.resize(L);
    ws.act.resize(L);
    ws.sig.resize(L);
    const Activation act = p.activation;
    const Mat* cur = &input;
    for (std::size_t l = 0; l < L; ++l) {
        if (l > 0) {
            ensure_shape(ws.act[l], B, p.layer_dims[l]);
            ensure_shape(ws.sig[l - 1], B, p.layer_dims[l]);
            const Mat& prev_pre = ws.pre[l - 1];
            for (std::size_t i = 0; i < prev_pre.data.size(); ++i) {
                double a = prev_pre.data[i];
                double c = cache_of(act, a);
                ws.sig[l - 1].data[i] = c;
                ws.act[l].data[i] = f_from(act, a, c);
            }
            cur = &ws.act[l];
        } else {
            ws.act[0] = input;
            cur = &ws.act[0];
        }
        std::size_t out_w = p.layer_dims[l + 1];
        std::size_t in_w = p.layer_dims[l];
        ensure_shape(ws.pre[l], B, out_w);
        kernels::matmul_nt(cur->data.data(), p.weights[l].data.data(), ws.pre[l].data.data(), B,
                           in_w, out_w, false);
        const double* b = p.biases[l].data();
        for (std::size_t i = 0; i < B; ++i) {
            double* row = ws.pre[l].row(i);
            for (std::size_t j = 0; j < out_w; ++j) row[j] += b[j];
        }
    }
    out = ws.pre[L - 1];
}

void backward_batch(const NetworkParams& p, const Mat& upstream, BatchWorkspace& ws,
                    GradientBundle& grads) {
    const std::size_t L = p.n_layers();
    const std::size_t B = upstream.rows;
    ws.adj.resize(L);
    const Activation act = p.activation;
    ws.adj[L - 1] = upstream;
    for (std::size_t l = L; l-- > 0;) {
        const Mat& adj = ws.adj[l];
        std::size_t out_w = p.layer_dims[l + 1];
        std::size_t in_w = p.layer_dims[l];
        // W_l gradient: adj^T . act[l]
        kernels::matmul_tn(adj.data.data(), ws.act[l].data.data(), grads.weights[l].data.data(), B,
                           out_w, in_w, true);
        double* bg = grads.biases[l].data();
        for (std::size_t i = 0; i < B; ++i) {
            const double* row = adj.row(i);
            for (std::size_t j = 0; j < out_w; ++j) bg[j] += row[j];
        }
        if (l == 0) break;
        ensure_shape(ws.adj[l - 1], B, in_w);
        kernels::matmul_nn(adj.data.data(), p.weights[l].data.data(), ws.adj[l - 1].data.data(), B,
                           out_w, in_w, false);
        const Mat& prev_pre = ws.pre[l - 1];
        const Mat& prev_sig = ws.sig[l - 1];
        for (std::size_t i = 0; i < prev_pre.data.size(); ++i)
            ws.adj[l - 1].data[i] *= df_from(act, prev_pre.data[i], prev_sig.data[i]);
    }
}

void jvp_batch(const NetworkParams& p, const Mat& input, const Mat& tangent, BatchWorkspace& ws,
               Mat& out, Mat& out_tangent) {
    const std::size_t L = p.n_layers();
    const std::size_t B = input.rows;
    ws.pre.resize(L);
    ws.act.resize(L);
    ws.sig.resize(L);
    ws.dpre.resize(L);
    ws.dact.resize(L);
    const Activation act = p.activation;
    for (std::size_t l = 0; l < L; ++l) {
        if (l > 0) {
            ensure_shape(ws.act[l], B, p.layer_dims[l]);
            ensure_shape(ws.sig[l - 1], B, p.layer_dims[l]);
            ensure_shape(ws.dact[l], B, p.layer_dims[l]);
            const Mat& prev_pre = ws.pre[l - 1];
            const Mat& prev_dpre = ws.dpre[l - 1];
            for (std::size_t i = 0; i < prev_pre.data.size(); ++i) {
                double a = prev_pre.data[i];
                double c = cache_of(act, a);
                ws.sig[l - 1].data[i] = c;
                ws.act[l].data[i] = f_from(act, a, c);
                ws.dact[l].data[i] = df_from(act, a, c) * prev_dpre.data[i];
            }
        } else {
            ws.act[0] = input;
            ws.dact[0] = tangent;
        }
        std::size_t out_w = p.layer_dims[l + 1];
        std::size_t in_w = p.layer_dims[l];
        ensure_shape(ws.pre[l], B, out_w);
        ensure_shape(ws.dpre[l], B, out_w);
        kernels::matmul_nt(ws.act[l].data.data(), p.weights[l].data.data(), ws.pre[l].data.data(),
                           B, in_w, out_w, false);
        kernels::matmul_nt(ws.dact[l].data.data(), p.weights[l].data.data(),
                           ws.dpre[l].data.data(), B, in_w, out_w, false);
        const double* b = p.biases[l].data();
        for (std::size_t i = 0; i < B; ++i) {
            double* row = ws.pre[l].row(i);
            for (std::size_t j = 0; j < out_w; ++j) row[j] += b[j];
        }
    }
    out = ws.pre[L - 1];
    out_tangent = ws.dpre[L - 1];
}

void backward_jvp_batch(const NetworkParams& p, const Mat& up, const Mat& up_tan,
                        BatchWorkspace& ws, GradientBundle& grads) {
    const std::size_t L = p.n_layers();
    const std::size_t B = up.rows;
    ws.adj.resize(L);
    ws.adj_tan.resize(L);
    const Activation act = p.activation;
    ws.adj[L - 1] = up;
    ws.adj_tan[L - 1] = up_tan;
    for (std::size_t l = L; l-- > 0;) {
        const Mat& adj = ws.adj[l];          // d/d pre[l]
        const Mat& adj_tan = ws.adj_tan[l];  // d/d dpre[l]
        std::size_t out_w = p.layer_dims[l + 1];
        std::size_t in_w = p.layer_dims[l];
        kernels::matmul_tn(adj.data.data(), ws.act[l].data.data(), grads.weights[l].data.data(), B,
                           out_w, in_w, true);
        kernels::matmul_tn(adj_tan.data.data(), ws.dact[l].data.data(),
                           grads.weights[l].data.data(), B, out_w, in_w, true);
        double* bg = grads.biases[l].data();
        for (std::size_t i = 0; i < B; ++i) {
            const double* row = adj.row(i);
            for (std::size_t j = 0; j < out_w; ++j) bg[j] += row[j];
        }
        if (l == 0) break;
        ensure_shape(ws.adj[l - 1], B, in_w);
        ensure_shape(ws.adj_tan[l - 1], B, in_w);
        // p_prev = adj . W; q_prev = adj_tan . W
        kernels::matmul_nn(adj.data.data(), p.weights[l].data.data(), ws.adj[l - 1].data.data(), B,
                           out_w, in_w, false);
        kernels::matmul_nn(adj_tan.data.data(), p.weights[l].data.data(),
                           ws.adj_tan[l - 1].data.data(), B, out_w, in_w, false);
        const Mat& prev_pre = ws.pre[l - 1];
        const Mat& prev_sig = ws.sig[l - 1];
        const Mat& prev_dpre = ws.dpre[l - 1];
        for (std::size_t i = 0; i < prev_pre.data.size(); ++i) {
            double a = prev_pre.data[i];
            double c = prev_sig.data[i];
            double da = prev_dpre.data[i];
            double ph = ws.adj[l - 1].data[i];
            double qh = ws.adj_tan[l - 1].data[i];
            ws.adj[l - 1].data[i] = df_from(act, a, c) * ph + ddf_from(act, a, c) * da * qh;
            ws.adj_tan[l - 1].data[i] = df_from(act, a, c) * qh;
        }
    }
}

// ----------------------------------------------------------------------------
// single-example wrappers
// ----------------------------------------------------------------------------

namespace {

Mat input_row(const NetworkParams& p, const Vec& x, double sigma) {
    if (x.size() != p.data_dim()) throw ConfigError("forward: input dimension mismatch");
    for (double v : x)
        if (!std::isfinite(v)) throw NumericalError("forward: non-finite input");
    if (!std::isfinite(sigma)) throw NumericalError("forward: non-finite sigma");
    Mat in(1, x.size() + 1);
    for (std::size_t i = 0; i < x.size(); ++i) in(0, i) = x[i];
    in(0, x.size()) = conditioning_value(sigma);
    return in;
}

}  // namespace

Vec forward(const NetworkParams& p, const Vec& x, double sigma) {
    BatchWorkspace ws;
    Mat out;
    forward_batch(p, input_row(p, x, sigma), ws, out);
    return Vec(out.row(0), out.row(0) + out.cols);
}

GradientBundle grad_params(const NetworkParams& p, const Vec& x, double sigma, const Vec& upstream) {
    if (upstream.size() != p.data_dim()) throw ConfigError("grad_params: upstream dimension mismatch");
    BatchWorkspace ws;
    Mat out;
    forward_batch(p, input_row(p, x, sigma), ws, out);
    GradientBundle g = GradientBundle::zeros_like(p);
    Mat up(1, upstream.size());
    std::copy(upstream.begin(), upstream.end(), up.row(0));
    backward_batch(p, up, ws, g);
    if (!g.all_finite()) throw NumericalError("grad_params: non-finite intermediate");
    return g;
}

Vec jvp_input(const NetworkParams& p, const Vec& x, double sigma, const Vec& v) {
    if (v.size() != p.data_dim()) throw ConfigError("jvp_input: tangent dimension mismatch");
    BatchWorkspace ws;
    Mat out, out_tan;
    Mat tangent(1, v.size() + 1, 0.0);
    std::copy(v.begin(), v.end(), tangent.row(0));
    jvp_batch(p, input_row(p, x, sigma), tangent, ws, out, out_tan);
    return Vec(out_tan.row(0), out_tan.row(0) + out_tan.cols);
}

// ----------------------------------------------------------------------------
// Adam
// ----------------------------------------------------------------------------

AdamState AdamState::zeros_like(const NetworkParams& p) {
    AdamState s;
    for (std::size_t l = 0; l < p.weights.size(); ++l) {
        s.m_w.emplace_back(p.weights[l].rows, p.weights[l].cols, 0.0);
        s.v_w.emplace_back(p.weights[l].rows, p.weights[l].cols, 0.0);
        s.m_b.emplace_back(p.biases[l].size(), 0.0);
        s.v_b.emplace_back(p.biases[l].size(), 0.0);
    }
    return s;
}

namespace {

void adam_update_span(double* theta, const double* g, double* m, double* v, std::size_t n,
                      double lr, double c1, double c2) {
    constexpr double kBeta1 = 0.9;
    constexpr double kBeta2 = 0.999;
    constexpr double kEps = 1e-8;
    for (std::size_t i = 0; i < n; ++i) {
        m[i] = kBeta1 * m[i] + (1.0 - kBeta1) * g[i];
        v[i] = kBeta2 * v[i] + (1.0 - kBeta2) * g[i] * g[i];
        double mhat = m[i] / c1;
        double vhat = v[i] / c2;
        theta[i] -= lr * mhat / (std::sqrt(vhat) + kEps);
    }
}

}  // namespace

void adam_step(NetworkParams& params, const GradientBundle& grads, AdamState& state, double lr,
               long step_index) {
    if (lr <= 0.0) throw ConfigError("adam_step: lr must be > 0");
    if (!grads.all_finite())
        throw TrainingError("adam_step: non-finite gradient at step " + std::to_string(step_index));
    double c1 = 1.0 - std::pow(0.9, static_cast<double>(step_index));
    double c2 = 1.0 - std::pow(0.999, static_cast<double>(step_index));
    for (std::size_t l = 0; l < params.weights.size(); ++l) {
        adam_update_span(params.weights[l].data.data(), grads.weights[l].data.data(),
                         state.m_w[l].data.data(), state.v_w[l].data.data(),
                         params.weights[l].data.size(), lr, c1, c2);
        adam_update_span(params.biases[l].data(), grads.biases[l].data(), state.m_b[l].data(),
                         state.v_b[l].data(), params.biases[l].size(), lr, c1, c2);
    }
}

// ----------------------------------------------------------------------------
// checkpoints
// ----------------------------------------------------------------------------

std::string checkpoint_to_json(const Checkpoint& c) {
    nlohmann::json j;
    j["layer_dims"] = c.params.layer_dims;
    j["activation"] = activation_name(c.params.activation);
    j["objective"] = c.objective;
    j["sigma_ladder"] = c.sigma_ladder;
    j["seed"] = c.seed;
    j["epochs"] = c.epochs;
    nlohmann::json layers = nlohmann::json::array();
    for (std::size_t l = 0; l < c.params.weights.size(); ++l) {
        nlohmann::json layer;
        const Mat& w = c.params.weights[l];
        nlohmann::json rows = nlohmann::json::array();
        for (std::size_t i = 0; i < w.rows; ++i)
            rows.push_back(std::vector<double>(w.row(i), w.row(i) + w.cols));
        layer["weights"] = std::move(rows);
        layer["biases"] = c.params.biases[l];
        layers.push_back(std::move(layer));
    }
    j["layers"] = std::move(layers);
    return j.dump(2) + "\n";
}

Checkpoint checkpoint_from_json(const std::string& text) {
    nlohmann::json j = nlohmann::json::parse(text);
    Checkpoint c;
    c.params.layer_dims = j.at("layer_dims").get<std::vector<std::size_t>>();
    c.params.activation = activation_from_name(j.at("activation").get<std::string>());
    c.objective = j.at("objective").get<std::string>();
    c.sigma_ladder = j.at("sigma_ladder").get<Vec>();
    c.seed = j.at("seed").get<std::uint64_t>();
    c.epochs = j.at("epochs").get<long>();
    for (const auto& layer : j.at("layers")) {
        const auto& rows = layer.at("weights");
        Mat w(rows.size(), rows.empty() ? 0 : rows[0].size());
        std::size_t i = 0;
        for (const auto& row : rows) {
            auto r = row.get<std::vector<double>>();
            std::copy(r.begin(), r.end(), w.row(i));
            ++i;
        }
        c.params.weights.push_back(std::move(w));
        c.params.biases.push_back(layer.at("biases").get<Vec>());
    }
    c.params.validate();
    return c;
}

void save_checkpoint(const Checkpoint& c, const std::string& path) {
    io::write_file_atomic(path, checkpoint_to_json(c));
}

Checkpoint load_checkpoint(const std::string& path) {
    if (!io::file_exists(path)) throw IoError("checkpoint not found: " + path);
    return checkpoint_from_json(io::read_file(path));
}

}  // namespace lownoise
