#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "lownoise/common.hpp"

namespace lownoise {

enum class Activation { SiLU, Tanh };

Activation activation_from_name(const std::string& name);
const char* activation_name(Activation a);

/// Feedforward approximator with one noise-conditioning input slot:
/// input width = data dim + 1, output width = data dim. Hidden layers apply
/// the smooth activation; the output layer is affine.
struct NetworkParams {
    std::vector<std::size_t> layer_dims;
    Activation activation = Activation::SiLU;
    std::vector<Mat> weights;  // (out x in) per layer
    std::vector<Vec> biases;

    std::size_t data_dim() const { return layer_dims.back(); }
    std::size_t n_layers() const { return weights.size(); }
    std::size_t parameter_count() const;

    void validate() const;
};

/// Per-parameter gradients, shape-congruent with the owning NetworkParams,
/// plus the scalar loss they came from.
struct GradientBundle {
    std::vector<Mat> weights;
    std::vector<Vec> biases;
    double loss = 0.0;

    static GradientBundle zeros_like(const NetworkParams& p);
    void add_scaled(const GradientBundle& other, double s);
    void scale(double s);
    bool all_finite() const;
};

/// He-scaled normal init (std sqrt(2/fan_in)), zero biases. Deterministic
/// given seed.
NetworkParams init_network(const std::vector<std::size_t>& layer_dims, Activation activation,
                           std::uint64_t seed);

/// Noise-conditioning value fed to the extra input slot: log(sigma + 1e-4)
/// affinely placed so the default ladder [0.001, 1.0] spans [-1, 1].
double conditioning_value(double sigma);

Vec forward(const NetworkParams& p, const Vec& x, double sigma);

/// d(upstream . forward)/d(theta), exact reverse accumulation.
GradientBundle grad_params(const NetworkParams& p, const Vec& x, double sigma, const Vec& upstream);

/// Directional derivative of forward w.r.t. x along v (sigma held fixed;
/// the conditioning slot gets a zero tangent).
Vec jvp_input(const NetworkParams& p, const Vec& x, double sigma, const Vec& v);

// ----- batched evaluation (rows = examples) -----

/// Scratch matrices reused across steps; grows on demand.
struct BatchWorkspace {
    std::vector<Mat> pre;  // pre-activations per layer
    std::vector<Mat> act;  // act[0] = input, act[l+1] = activations after layer l
    std::vector<Mat> sig;  // sigmoid(pre) / tanh(pre), reused by the backward passes
    std::vector<Mat> dpre;
    std::vector<Mat> dact;
    std::vector<Mat> adj;       // reverse scratch
    std::vector<Mat> adj_tan;   // reverse-over-forward scratch
};

/// out (B x d) = network applied to each row of input (B x (d+1)).
void forward_batch(const NetworkParams& p, const Mat& input, BatchWorkspace& ws, Mat& out);

/// Accumulate d(sum_i upstream_i . out_i)/d(theta) into grads.
/// forward_batch must have filled ws for the same input.
void backward_batch(const NetworkParams& p, const Mat& upstream, BatchWorkspace& ws,
                    GradientBundle& grads);

/// Forward-mode tangents: out_tangent (B x d) = J_x(row) * tangent(row) with
/// tangent supplied for the full input width (conditioning column zero).
void jvp_batch(const NetworkParams& p, const Mat& input, const Mat& tangent, BatchWorkspace& ws,
               Mat& out, Mat& out_tangent);

/// Reverse through the forward-mode pass: accumulates
/// d(sum_i [up_i . out_i + up_tan_i . out_tangent_i])/d(theta) into grads.
/// jvp_batch must have filled ws for the same (input, tangent).
void backward_jvp_batch(const NetworkParams& p, const Mat& up, const Mat& up_tan,
                        BatchWorkspace& ws, GradientBundle& grads);

// ----- optimizer -----

struct AdamState {
    std::vector<Mat> m_w, v_w;
    std::vector<Vec> m_b, v_b;

    static AdamState zeros_like(const NetworkParams& p);
};

/// Adam with beta1=0.9, beta2=0.999, eps=1e-8 and bias correction at
/// step_index (1-based). Throws TrainingError on non-finite gradients.
void adam_step(NetworkParams& params, const GradientBundle& grads, AdamState& state, double lr,
               long step_index);

// ----- checkpoints -----

struct Checkpoint {
    NetworkParams params;
    std::string objective;
    Vec sigma_ladder;
    std::uint64_t seed = 0;
    long epochs = 0;
};

std::string checkpoint_to_json(const Checkpoint& c);
Checkpoint checkpoint_from_json(const std::string& text);
void save_checkpoint(const Checkpoint& c, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace lownoise
