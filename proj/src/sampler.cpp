#include "lownoise/sampler.hpp"

#include <cmath>

#include "lownoise/io.hpp"
#include "lownoise/kernels.hpp"
#include "lownoise/rng.hpp"

namespace lownoise {

void NoiseSchedule::validate() const {
    if (sigmas.empty()) throw ConfigError("schedule: needs at least one sigma");
    if (sigmas.front() > 1.0) throw ConfigError("schedule: sigmas[0] must be <= 1.0 (conditioning range)");
    if (sigmas.back() <= 0.0) throw ConfigError("schedule: sigmas must stay positive");
    // Non-increasing: annealed ladder schedules hold each level for several
    // iterations before moving down.
    for (std::size_t i = 1; i < sigmas.size(); ++i)
        if (sigmas[i] > sigmas[i - 1]) throw ConfigError("schedule: sigmas must be non-increasing");
    if (eta <= 0.0) throw ConfigError("schedule: eta must be > 0");
    if (kappa < 0.0) throw ConfigError("schedule: kappa must be >= 0");
}

NoiseSchedule make_schedule(double sigma_start, double sigma_end, std::size_t steps, double eta,
                            double kappa) {
    if (steps < 1) throw ConfigError("make_schedule: steps must be >= 1");
    if (sigma_end <= 0.0 || sigma_start <= sigma_end)
        throw ConfigError("make_schedule: need sigma_start > sigma_end > 0");
    NoiseSchedule s;
    s.eta = eta;
    s.kappa = kappa;
    s.sigmas.resize(steps);
    if (steps == 1) {
        s.sigmas[0] = sigma_start;
    } else {
        double ratio = sigma_end / sigma_start;
        double denom = static_cast<double>(steps - 1);
        for (std::size_t t = 0; t < steps; ++t)
            s.sigmas[t] = sigma_start * std::pow(ratio, static_cast<double>(t) / denom);
    }
    s.validate();
    return s;
}

Vec step(const ScoreField& field, const Vec& x, double sigma_t, double h_t, double gamma_t,
         const Vec& z) {
    if (sigma_t <= 0.0) throw ConfigError("step: sigma_t must be > 0");
    Vec s = field.score_estimate(x, sigma_t);
    for (double v : s)
        if (!std::isfinite(v))
            throw NumericalError("step: non-finite score at sigma " + std::to_string(sigma_t));
    Vec next(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) next[i] = x[i] + h_t * s[i] + gamma_t * z[i];
    return next;
}

Trajectory run_trajectory(const ScoreField& field, const Vec& x_init, const NoiseSchedule& schedule,
                          const RunOptions& opts) {
    if (opts.max_steps < 1) throw ConfigError("run_trajectory: max_steps must be >= 1");
    if (schedule.sigmas.empty()) throw ConfigError("run_trajectory: empty schedule");
    if (x_init.size() != field.dim()) throw ConfigError("run_trajectory: init dimension mismatch");

    Rng rng(opts.seed);
    const std::size_t d = x_init.size();
    Trajectory traj;
    traj.states.reserve(opts.max_steps + 1);
    traj.states.push_back(x_init);
    Vec x = x_init;
    Vec z(d, 0.0);

    for (std::size_t t = 0; t < opts.max_steps; ++t) {
        double sigma = schedule.sigmas[std::min(t, schedule.sigmas.size() - 1)];
        Vec s = field.score_estimate(x, sigma);
        for (double v : s)
            if (!std::isfinite(v))
                throw NumericalError("run_trajectory: non-finite score at step " + std::to_string(t) +
                                     ", sigma " + std::to_string(sigma));
        double s2 = sigma * sigma;
        Vec dir(d);
        for (std::size_t i = 0; i < d; ++i) dir[i] = s2 * s[i];

        double h = schedule.eta * s2;
        double gamma = opts.deterministic ? 0.0 : schedule.kappa * sigma;
        if (gamma > 0.0) rng.normal_fill(z.data(), d);

        Vec next(d);
        for (std::size_t i = 0; i < d; ++i) next[i] = x[i] + h * s[i] + gamma * z[i];

        traj.sigmas.push_back(sigma);
        traj.directions.push_back(std::move(dir));
        traj.states.push_back(next);

        double tol = opts.conv_mode == ConvMode::SigmaScaled ? opts.conv_tol * sigma : opts.conv_tol;
        double change = std::sqrt(kernels::sqdist(next.data(), x.data(), d));
        x = std::move(next);
        if (change < tol) {
            traj.stop_reason = StopReason::Converged;
            return traj;
        }
    }
    traj.stop_reason = StopReason::MaxSteps;
    return traj;
}

double DenoisePolicy::sigma_floor(double sigma_init) const {
    return std::max(0.001, sigma_init / 100.0);
}

std::size_t DenoisePolicy::resolve_max_steps(std::size_t dim) const {
    if (max_steps > 0) return max_steps;
    return dim <= 2 ? 300 : 2000;
}

Trajectory denoise_from(const ScoreField& field, const Vec& x_clean, double sigma_init,
                        const DenoisePolicy& policy, std::uint64_t seed) {
    if (sigma_init <= 0.0 || sigma_init > 1.0)
        throw ConfigError("denoise_from: sigma_init must be in (0, 1]");
    Vec y = corrupt(x_clean, sigma_init, seed);

    double floor = policy.sigma_floor(sigma_init);
    NoiseSchedule schedule;
    if (floor >= sigma_init) {
        schedule.sigmas = Vec{sigma_init};
        schedule.eta = policy.eta;
        schedule.kappa = 0.0;
    } else {
        schedule = make_schedule(sigma_init, floor, policy.schedule_steps, policy.eta, 0.0);
    }

    RunOptions opts;
    opts.max_steps = policy.resolve_max_steps(field.dim());
    opts.conv_tol = policy.conv_tol;
    opts.conv_mode = policy.conv_mode;
    opts.deterministic = true;
    return run_trajectory(field, y, schedule, opts);
}

std::string trajectory_csv(const Trajectory& t) {
    const std::size_t d = t.states.empty() ? 0 : t.states[0].size();
    std::string header = "t,sigma";
    for (std::size_t i = 0; i < d; ++i) header += ",x" + std::to_string(i);
    for (std::size_t i = 0; i < d; ++i) header += ",d" + std::to_string(i);
    std::vector<std::vector<double>> rows;
    rows.reserve(t.states.size());
    for (std::size_t k = 0; k < t.states.size(); ++k) {
        std::vector<double> row;
        row.reserve(2 + 2 * d);
        bool has_dir = k < t.directions.size();
        row.push_back(static_cast<double>(k));
        row.push_back(has_dir ? t.sigmas[k] : (t.sigmas.empty() ? 0.0 : t.sigmas.back()));
        for (double v : t.states[k]) row.push_back(v);
        for (std::size_t i = 0; i < d; ++i) row.push_back(has_dir ? t.directions[k][i] : 0.0);
        rows.push_back(std::move(row));
    }
    return io::csv_from_rows(header, rows);
}

}  // namespace lownoise
