#pragma once

#include <cstddef>
#include <cstdint>
#include <exception>
#include <functional>
#include <span>
#include <utility>
#include <vector>

#include "drst/data_model.hpp"
#include "drst/rng.hpp"
#include "drst/synth.hpp"

// Verification machinery kept independent of the losses module: every
// quantity here is computed from first principles (enumeration, differences,
// sample moments) rather than through the loss implementations.
namespace drst::oracle {

using LossFunction = std::function<double(const Parameter&)>;

// 1e-6 * (1 + max |theta_i|)
double default_fd_step(const Parameter& theta);

// Central differences: (L(theta + eps e_i) - L(theta - eps e_i)) / (2 eps).
Vector fd_gradient(const LossFunction& loss, const Parameter& theta, double eps);
Vector fd_gradient(const LossFunction& loss, const Parameter& theta);

// ||a - b|| / max(||a||, ||b||), 0 when both vanish.
double relative_error(const Vector& a, const Vector& b);

// sum_x P_X(x) sum_y P(y|x) loss(theta; x, y)
double exact_expected_loss(const DiscreteMismatchSpec& spec, const Parameter& theta, const LossModel& model);

// E_P[l(X, f(X))] - E_Q[pi(X) l(X, f(X))] + E_Q[pi(X) E_{Y|X}[l(X, Y)]]
double exact_expected_dr2(const DiscreteMismatchSpec& spec, const Parameter& theta, const LossModel& model,
                          const Teacher& teacher, const ImportanceWeighter& weighter);

struct McSummary {
  double mean = 0.0;
  double mean_se = 0.0;
  double mse = 0.0;  // mean of (estimate - theta*)^2
  double mse_se = 0.0;
  double variance = 0.0;  // unbiased sample variance of the estimate
  double variance_se = 0.0;
  std::size_t trials = 0;
};

// Moments of `values` with leave-one-out jackknife standard errors.
McSummary summarize(std::span<const double> values, double theta_star);

// Runs fn(trial) for trial in [0, trials) on `threads` workers (0 = hardware
// concurrency). Results are stored by trial index, so the output does not
// depend on the thread count. The first failing trial aborts the run with a
// NumericalError carrying its index.
std::vector<std::vector<double>> run_trials(std::size_t trials, unsigned threads,
                                            const std::function<std::vector<double>(std::size_t)>& fn);

// Monte Carlo summary of one or more estimators. `generate(seed)` draws a
// trial's data from a per-trial seed derived from master_seed and the trial
// index; `estimate(data)` returns one value per estimator.
template <class Generate, class Estimate>
std::vector<McSummary> mc_statistic(Generate&& generate, Estimate&& estimate, double theta_star, std::size_t trials,
                                    std::uint64_t master_seed, unsigned threads = 1) {
  const auto per_trial = run_trials(trials, threads, [&](std::size_t t) -> std::vector<double> {
    auto data = generate(derive_seed(master_seed, t));
    return estimate(data);
  });
  std::vector<McSummary> out;
  if (per_trial.empty()) return out;
  const std::size_t k = per_trial.front().size();
  std::vector<double> column(trials);
  for (std::size_t j = 0; j < k; ++j) {
    for (std::size_t t = 0; t < trials; ++t) column[t] = per_trial[t].at(j);
    out.push_back(summarize(column, theta_star));
  }
  return out;
}

struct GradientCovarianceReport {
  Matrix sigma_fhat;   // Cov[grad l(X, f(X))]
  Matrix sigma_resid;  // Cov[grad l(X, f(X)) - grad l(X, Y)]
  Matrix sigma_y;      // Cov[grad l(X, Y)]
  std::size_t sample_count = 0;
  std::size_t d = 0;
};

GradientCovarianceReport estimate_grad_covariances(const LabeledSet& samples, const Teacher& teacher,
                                                   const LossModel& model, const Parameter& theta);
// Draws `sample_count` labeled pairs from `generator` (its m, n are ignored).
GradientCovarianceReport estimate_grad_covariances(const LinearGaussianSpec& generator, const Teacher& teacher,
                                                   const LossModel& model, const Parameter& theta,
                                                   std::size_t sample_count);

struct ScalingFit {
  std::vector<std::pair<double, double>> points;  // (size, statistic)
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
};

// Least-squares line through (log size, log statistic).
ScalingFit fit_scaling(std::span<const std::pair<double, double>> points);

}  // namespace drst::oracle
