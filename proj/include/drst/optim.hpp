#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "drst/data_model.hpp"
#include "drst/losses.hpp"

namespace drst {

struct StepRule {
  enum class Kind { fixed, backtracking };

  Kind kind = Kind::backtracking;
  double initial_step = 1.0;  // eta for fixed, first trial step for backtracking
  double shrink = 0.5;
  double armijo = 1e-4;       // sufficient-decrease constant

  static StepRule fixed(double eta) { return {Kind::fixed, eta, 0.5, 1e-4}; }
  static StepRule backtracking(double eta = 1.0, double shrink = 0.5, double armijo = 1e-4) {
    return {Kind::backtracking, eta, shrink, armijo};
  }
};

// Step-size decay inside an epoch of mini-batch descent: harmonic uses
// eta / (1 + k) for the k-th batch of the epoch.
enum class StepDecay { none, harmonic };

struct OptimSettings {
  StepRule step = StepRule::backtracking();
  int max_iters = 10000;
  double grad_tol = 1e-10;
  std::uint64_t seed = 0;
  std::size_t batch_size = 32;
  // Labeled share of each mini-batch; unset means n / (m + n).
  std::optional<double> labeled_fraction;
  StepDecay decay = StepDecay::harmonic;
  double stochastic_step = 0.5;  // base eta for mini-batch descent

  void validate() const;
};

inline constexpr double kDivergenceThreshold = 1e12;

struct MinimizeResult {
  Parameter theta;
  std::vector<double> grad_norms;  // one per gradient evaluation, starting at theta0
  std::vector<double> losses;      // matching loss values
  int iterations = 0;
  bool converged = false;          // grad norm <= grad_tol
  bool max_iters_reached = false;
  bool stalled = false;            // line search found no decrease
};

// Full-batch gradient descent on `problem`. Throws NumericalError when the
// loss exceeds the divergence threshold or the gradient is non-finite.
MinimizeResult minimize_batch(const LossProblem& problem, const Parameter& theta0, const OptimSettings& settings);

MinimizeResult minimize_batch(const LossSpec& spec, const UnlabeledSet& unlabeled, const LabeledSet& labeled,
                              const Teacher& teacher, const LossModel& model, const Parameter& theta0,
                              const OptimSettings& settings);

struct BatchPlan {
  std::size_t labeled_per_batch = 0;
  std::size_t unlabeled_per_batch = 0;
  std::size_t batches = 0;
};

// Fixed-ratio mini-batch layout for one epoch. Throws DataError when a batch
// cannot hold at least one sample of each pool.
BatchPlan plan_batches(std::size_t m, std::size_t n, const OptimSettings& settings);

struct CurriculumResult {
  Parameter theta;
  std::vector<double> alphas;        // alpha_t for t = 1..T
  std::vector<double> epoch_losses;  // full curriculum loss at alpha_t after epoch t
};

// Epochs t = 1..T. Each epoch permutes both pools (seeded by settings.seed
// and t), walks fixed-ratio mini-batches and takes one gradient step on the
// batch's own curriculum loss at alpha_t.
CurriculumResult train_curriculum(const UnlabeledSet& unlabeled, const LabeledSet& labeled, const Teacher& teacher,
                                  const LossModel& model, const CurriculumSchedule& schedule,
                                  const OptimSettings& settings, std::optional<Parameter> theta0 = std::nullopt);

struct SplitRecord {
  std::vector<std::size_t> estimation;  // ceil(n/2) indices used inside the loss
  std::vector<std::size_t> training;    // the rest, used to fit the teacher
};

// Seeded shuffle of 0..n-1 split into estimation and teacher-training halves.
SplitRecord split_labeled(std::size_t n, std::uint64_t seed);

using TeacherTrainer = std::function<Teacher(const LabeledSet&)>;

struct SplitEstimate {
  Parameter theta;
  SplitRecord split;
  Teacher teacher;
  MinimizeResult fit;
};

// Trains the teacher on one half of the labeled set and minimizes the
// importance-weighted doubly robust loss on the unlabeled set plus the other
// half. `weighter` defaults to pi = 1.
SplitEstimate split_and_estimate(const LabeledSet& labeled, const UnlabeledSet& unlabeled,
                                 const TeacherTrainer& teacher_trainer, const LossModel& model,
                                 const OptimSettings& settings, std::uint64_t seed,
                                 const ImportanceWeighter* weighter = nullptr);

}  // namespace drst
