#include "drst/optim.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "drst/errors.hpp"
#include "drst/rng.hpp"

namespace drst {

namespace {

constexpr std::uint64_t kSplitStream = 0x5EED5;
constexpr double kMinTrialStep = 1e-30;

void check_loss(double loss, int iter) {
  if (!std::isfinite(loss) || std::abs(loss) > kDivergenceThreshold) {
    throw NumericalError("loss diverged (" + std::to_string(loss) + ") at iteration " + std::to_string(iter));
  }
}

void check_gradient(const Vector& g, int iter) {
  if (!g.allFinite()) throw NumericalError("non-finite gradient at iteration " + std::to_string(iter));
}

}  // namespace

void OptimSettings::validate() const {
  if (!(grad_tol > 0.0)) throw DataError("grad_tol must be > 0");
  if (max_iters < 1) throw DataError("max_iters must be >= 1");
  if (!(step.initial_step > 0.0)) throw DataError("step size must be > 0");
  if (step.kind == StepRule::Kind::backtracking) {
    if (!(step.shrink > 0.0 && step.shrink < 1.0)) throw DataError("backtracking shrink must lie in (0, 1)");
    if (!(step.armijo > 0.0 && step.armijo < 1.0)) throw DataError("Armijo constant must lie in (0, 1)");
  }
  if (labeled_fraction && !(*labeled_fraction > 0.0 && *labeled_fraction <= 1.0)) {
    throw DataError("labeled_fraction must lie in (0, 1]");
  }
  if (!(stochastic_step > 0.0)) throw DataError("stochastic_step must be > 0");
  if (batch_size < 2) throw DataError("batch_size must be >= 2 (one labeled and one unlabeled sample)");
}

MinimizeResult minimize_batch(const LossProblem& problem, const Parameter& theta0, const OptimSettings& settings) {
  settings.validate();
  problem.model().check_parameter(theta0);

  Vector theta = theta0.values();
  double loss = problem.value(Parameter(theta));
  check_loss(loss, 0);
  Vector grad = problem.gradient(Parameter(theta));
  check_gradient(grad, 0);

  MinimizeResult out{Parameter(theta), {grad.norm()}, {loss}, 0, false, false, false};
  if (grad.norm() <= settings.grad_tol) {
    out.converged = true;
    return out;
  }

  Vector best = theta;
  double best_loss = loss;
  for (int it = 1; it <= settings.max_iters; ++it) {
    Vector next;
    double next_loss = 0.0;
    if (settings.step.kind == StepRule::Kind::fixed) {
      next = theta - settings.step.initial_step * grad;
      next_loss = problem.value(Parameter(next));
      check_loss(next_loss, it);
    } else {
      const double g2 = grad.squaredNorm();
      double t = settings.step.initial_step;
      bool accepted = false;
      while (t >= kMinTrialStep) {
        next = theta - t * grad;
        next_loss = problem.value(Parameter(next));
        check_loss(next_loss, it);
        if (next_loss <= loss - settings.step.armijo * t * g2) {
          accepted = true;
          break;
        }
        t *= settings.step.shrink;
      }
      if (!accepted) {
        out.stalled = true;
        break;
      }
    }

    theta = std::move(next);
    loss = next_loss;
    grad = problem.gradient(Parameter(theta));
    check_gradient(grad, it);
    out.iterations = it;
    out.grad_norms.push_back(grad.norm());
    out.losses.push_back(loss);
    if (loss < best_loss) {
      best_loss = loss;
      best = theta;
    }
    if (grad.norm() <= settings.grad_tol) {
      out.converged = true;
      break;
    }
  }

  if (out.converged) {
    out.theta = Parameter(theta);
  } else {
    out.max_iters_reached = out.iterations >= settings.max_iters;
    out.theta = Parameter(loss <= best_loss ? theta : best);
  }
  return out;
}

MinimizeResult minimize_batch(const LossSpec& spec, const UnlabeledSet& unlabeled, const LabeledSet& labeled,
                              const Teacher& teacher, const LossModel& model, const Parameter& theta0,
                              const OptimSettings& settings) {
  return minimize_batch(LossProblem(spec, unlabeled, labeled, teacher, model), theta0, settings);
}

BatchPlan plan_batches(std::size_t m, std::size_t n, const OptimSettings& settings) {
  settings.validate();
  if (n < 1) throw DataError("empty labeled set");
  const double frac = settings.labeled_fraction.value_or(static_cast<double>(n) / static_cast<double>(m + n));
  BatchPlan plan;
  if (frac >= 1.0 || m == 0) {
    if (m > 0) throw DataError("labeled_fraction = 1 leaves no room for unlabeled samples");
    plan.labeled_per_batch = std::min(settings.batch_size, n);
    plan.unlabeled_per_batch = 0;
    plan.batches = n / plan.labeled_per_batch;
    return plan;
  }
  if (settings.batch_size < 2) throw DataError("batch_size must be >= 2 to hold both pools");
  const auto size = static_cast<double>(settings.batch_size);
  std::size_t labeled = static_cast<std::size_t>(std::llround(frac * size));
  labeled = std::clamp<std::size_t>(labeled, 1, settings.batch_size - 1);
  plan.labeled_per_batch = labeled;
  plan.unlabeled_per_batch = settings.batch_size - labeled;
  plan.batches = std::min(n / plan.labeled_per_batch, m / plan.unlabeled_per_batch);
  if (plan.batches == 0) {
    throw DataError("infeasible batch composition: need " + std::to_string(plan.labeled_per_batch) +
                    " labeled and " + std::to_string(plan.unlabeled_per_batch) + " unlabeled samples per batch, have n=" +
                    std::to_string(n) + ", m=" + std::to_string(m));
  }
  return plan;
}

CurriculumResult train_curriculum(const UnlabeledSet& unlabeled, const LabeledSet& labeled, const Teacher& teacher,
                                  const LossModel& model, const CurriculumSchedule& schedule,
                                  const OptimSettings& settings, std::optional<Parameter> theta0) {
  if (schedule.total_epochs < 1) throw DataError("schedule needs total_epochs >= 1");
  const LossProblem base(LossSpec{LossKind::curriculum, 0.0}, unlabeled, labeled, teacher, model);
  const BatchPlan plan = plan_batches(base.m(), base.n(), settings);

  Vector theta = theta0 ? theta0->values() : Vector::Zero(static_cast<Eigen::Index>(model.param_dim()));
  model.check_parameter(Parameter(theta));

  CurriculumResult out{Parameter(theta), {}, {}};
  std::vector<std::size_t> u_idx(plan.unlabeled_per_batch);
  std::vector<std::size_t> l_idx(plan.labeled_per_batch);
  for (int t = 1; t <= schedule.total_epochs; ++t) {
    const double alpha = alpha_at(schedule, t);
    const LossProblem epoch_problem = base.with_alpha(alpha);

    CounterRng rng(settings.seed, static_cast<std::uint64_t>(t));
    const auto perm_u = seeded_permutation(base.m(), rng);
    const auto perm_l = seeded_permutation(base.n(), rng);
    for (std::size_t k = 0; k < plan.batches; ++k) {
      std::copy_n(perm_u.begin() + static_cast<std::ptrdiff_t>(k * plan.unlabeled_per_batch),
                  plan.unlabeled_per_batch, u_idx.begin());
      std::copy_n(perm_l.begin() + static_cast<std::ptrdiff_t>(k * plan.labeled_per_batch), plan.labeled_per_batch,
                  l_idx.begin());
      const LossProblem batch = epoch_problem.subsample(u_idx, l_idx);
      const Vector g = batch.gradient(Parameter(theta));
      check_gradient(g, t);
      const double eta = settings.decay == StepDecay::harmonic
                             ? settings.stochastic_step / (1.0 + static_cast<double>(k))
                             : settings.stochastic_step;
      theta -= eta * g;
      if (!theta.allFinite()) throw NumericalError("parameter became non-finite in epoch " + std::to_string(t));
    }
    const double loss = epoch_problem.value(Parameter(theta));
    check_loss(loss, t);
    out.alphas.push_back(alpha);
    out.epoch_losses.push_back(loss);
  }
  out.theta = Parameter(theta);
  return out;
}

SplitRecord split_labeled(std::size_t n, std::uint64_t seed) {
  if (n < 2) throw DataError("data splitting needs n >= 2");
  CounterRng rng(seed, kSplitStream);
  const auto perm = seeded_permutation(n, rng);
  const std::size_t half = (n + 1) / 2;
  return SplitRecord{{perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(half)},
                     {perm.begin() + static_cast<std::ptrdiff_t>(half), perm.end()}};
}

SplitEstimate split_and_estimate(const LabeledSet& labeled, const UnlabeledSet& unlabeled,
                                 const TeacherTrainer& teacher_trainer, const LossModel& model,
                                 const OptimSettings& settings, std::uint64_t seed,
                                 const ImportanceWeighter* weighter) {
  SplitRecord split = split_labeled(labeled.size(), seed);
  const LabeledSet estimation = labeled.subset(split.estimation);
  const LabeledSet training = labeled.subset(split.training);

  std::optional<Teacher> teacher;
  try {
    teacher = teacher_trainer(training);
  } catch (const std::exception& e) {
    throw DataError(std::string("teacher training failed: ") + e.what());
  }

  const ImportanceWeighter unit = ImportanceWeighter::constant(1.0);
  LossSpec spec{LossKind::dr2, 1.0, weighter != nullptr ? weighter : &unit};
  const LossProblem problem(spec, unlabeled, estimation, *teacher, model);
  MinimizeResult fit = minimize_batch(problem, Parameter::zeros(model.param_dim()), settings);
  Parameter theta = fit.theta;
  return SplitEstimate{std::move(theta), std::move(split), std::move(*teacher), std::move(fit)};
}

}  // namespace drst
