#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "lownoise/score_field.hpp"

namespace lownoise {

/// Descending sigma ladder for reverse integration with step size
/// h_t = eta * sigma_t^2 and noise scale gamma_t = kappa * sigma_t.
struct NoiseSchedule {
    Vec sigmas;
    double eta = 0.5;
    double kappa = 0.0;

    void validate() const;
};

/// Geometric interpolation from sigma_start down to sigma_end.
NoiseSchedule make_schedule(double sigma_start, double sigma_end, std::size_t steps, double eta,
                            double kappa);

enum class StopReason { Converged, MaxSteps };

/// Ordered record of one reverse-diffusion run. directions[t] is the
/// denoising direction sigma_t^2 * score at states[t]; states has one more
/// entry than directions.
struct Trajectory {
    std::vector<Vec> states;
    Vec sigmas;
    std::vector<Vec> directions;
    StopReason stop_reason = StopReason::MaxSteps;

    const Vec& final_state() const { return states.back(); }
    std::size_t n_steps() const { return directions.size(); }
};

enum class ConvMode { Absolute, SigmaScaled };

struct RunOptions {
    std::size_t max_steps = 300;
    double conv_tol = 1e-2;
    ConvMode conv_mode = ConvMode::Absolute;
    bool deterministic = true;  // forces gamma_t = 0
    std::uint64_t seed = 0;
};

/// x + h_t * score(x, sigma_t) + gamma_t * z
Vec step(const ScoreField& field, const Vec& x, double sigma_t, double h_t, double gamma_t,
         const Vec& z);

/// Iterate step along the schedule, holding the last sigma once the schedule
/// is exhausted; stop when the state change drops below the tolerance or at
/// max_steps.
Trajectory run_trajectory(const ScoreField& field, const Vec& x_init, const NoiseSchedule& schedule,
                          const RunOptions& opts);

/// Schedule construction knobs shared by the probe procedures.
struct DenoisePolicy {
    std::size_t schedule_steps = 200;
    double eta = 0.5;
    double conv_tol = 1e-2;
    ConvMode conv_mode = ConvMode::Absolute;
    std::size_t max_steps = 0;  // 0 = 300 for dim <= 2, 2000 otherwise

    double sigma_floor(double sigma_init) const;
    std::size_t resolve_max_steps(std::size_t dim) const;
};

/// Corrupt x_clean at sigma_init, then integrate deterministically down to
/// the policy's sigma floor. states[0] is the corrupted point, which depends
/// only on (x_clean, sigma_init, seed) so two fields can be probed from the
/// identical input.
Trajectory denoise_from(const ScoreField& field, const Vec& x_clean, double sigma_init,
                        const DenoisePolicy& policy, std::uint64_t seed);

/// CSV with header t,sigma,x0,...,d0,...; the final state row carries zero
/// direction columns.
std::string trajectory_csv(const Trajectory& t);

}  // namespace lownoise
