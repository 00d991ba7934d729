#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "lownoise/mixture.hpp"
#include "lownoise/network.hpp"

namespace lownoise {

enum class ObjectiveKind { Reconstruction, NCSN, SSM };
enum class NcsnWeighting { SigmaSquared, Unweighted };

ObjectiveKind objective_from_name(const std::string& name);
const char* objective_name(ObjectiveKind k);
NcsnWeighting weighting_from_name(const std::string& name);
const char* weighting_name(NcsnWeighting w);

struct ObjectiveSpec {
    ObjectiveKind kind = ObjectiveKind::NCSN;
    Vec sigma_ladder = default_sigma_ladder();
    NcsnWeighting ncsn_weighting = NcsnWeighting::SigmaSquared;
    int ssm_slices = 1;

    static Vec default_sigma_ladder();
    void validate() const;
};

struct TrainConfig {
    std::size_t batch_size = 128;
    double lr = 0.001;
    long epochs = 500;
    std::uint64_t seed = 0;

    void validate() const;
};

// ----- loss + gradient -----
// Each objective has a core overload with explicit noise draws (tests freeze
// them) and a seeded overload that derives the draws, in visit order, from an
// Rng(seed). Returned gradients are of the mean per-example loss; the loss
// value rides along in GradientBundle::loss.

/// ||x0 - f(x0 + sigma*eps, sigma)||^2
GradientBundle recon_loss_grad(const NetworkParams& p, const std::vector<Vec>& batch,
                               const std::vector<double>& sigmas, const std::vector<Vec>& eps);
GradientBundle recon_loss_grad(const NetworkParams& p, const std::vector<Vec>& batch,
                               const std::vector<double>& sigmas, std::uint64_t seed);

/// Unweighted: ||s(y, sigma) + eps/sigma||^2; SigmaSquared scales each term
/// by sigma^2 (identical minimizer, tamed low-sigma variance).
GradientBundle ncsn_loss_grad(const NetworkParams& p, const std::vector<Vec>& batch,
                              const std::vector<double>& sigmas, const std::vector<Vec>& eps,
                              NcsnWeighting weighting);
GradientBundle ncsn_loss_grad(const NetworkParams& p, const std::vector<Vec>& batch,
                              const std::vector<double>& sigmas, NcsnWeighting weighting,
                              std::uint64_t seed);

/// Sliced score matching: mean over slices of v . d/dx[s](y)v plus
/// 0.5 ||s(y, sigma)||^2, with exact nested differentiation for the
/// parameter gradient.
GradientBundle ssm_loss_grad(const NetworkParams& p, const std::vector<Vec>& batch,
                             const std::vector<double>& sigmas, const std::vector<Vec>& eps,
                             const std::vector<std::vector<Vec>>& slice_dirs);
GradientBundle ssm_loss_grad(const NetworkParams& p, const std::vector<Vec>& batch,
                             const std::vector<double>& sigmas, int slices, std::uint64_t seed);

// ----- training -----

struct ArchSpec {
    std::vector<std::size_t> layer_dims;
    Activation activation = Activation::SiLU;
};

/// Three hidden layers of width 128 on top of the conditioning slot.
ArchSpec default_arch(std::size_t data_dim);

struct TrainResult {
    Checkpoint checkpoint;
    std::vector<double> epoch_mean_loss;
    std::vector<double> epoch_wall_ms;
};

/// Shuffled minibatch Adam over the objective. Each epoch visits
/// max(cardinality, 200000/epochs) examples (with replacement when the
/// dataset is smaller); per-visit sigma is drawn uniformly from the ladder.
/// Deterministic given config.seed, including across dataset point order
/// (points are canonicalized before the seeded shuffle).
TrainResult train(const ObjectiveSpec& objective, const DatasetHandle& dataset, const ArchSpec& arch,
                  const TrainConfig& config);

/// CSV with header epoch,mean_loss,wall_ms.
std::string train_log_csv(const TrainResult& r);

}  // namespace lownoise
