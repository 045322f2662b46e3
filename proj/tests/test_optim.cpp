#include <doctest.h>

#include <cmath>
#include <set>

#include "drst/closed_form.hpp"
#include "drst/errors.hpp"
#include "drst/optim.hpp"
#include "drst/rng.hpp"
#include "drst/synth.hpp"

using namespace drst;

namespace {

const Teacher identity = Teacher::affine(0.0, Vector::Constant(1, 1.0));
const LossModel sq = LossModel::squared_error(1);

SyntheticSample sample(std::size_t m, std::size_t n, std::uint64_t seed) {
  LinearGaussianSpec spec{Vector{{1.0, 0.8}}, 0.6, Vector::Zero(1), Matrix::Identity(1, 1), m, n, seed};
  return gen_linear_gaussian(spec);
}

}  // namespace

TEST_CASE("batch descent on the hand instance") {
  const UnlabeledSet u(RowMatrix{{1.0}, {3.0}});
  const LabeledSet l(RowMatrix{{2.0}}, Vector::Constant(1, 4.0));
  OptimSettings settings;
  const auto dr = minimize_batch(LossSpec{LossKind::dr}, u, l, identity, sq, Parameter{0.0}, settings);
  CHECK(std::abs(dr.theta[0] - 4.0) <= 1e-8);
  CHECK(dr.converged);
  const auto tl = minimize_batch(LossSpec{LossKind::tl}, u, l, identity, sq, Parameter{0.0}, settings);
  CHECK(std::abs(tl.theta[0] - 4.0) <= 1e-8);
}

TEST_CASE("starting at the minimizer returns immediately") {
  const UnlabeledSet u(RowMatrix{{1.0}, {3.0}});
  const LabeledSet l(RowMatrix{{2.0}}, Vector::Constant(1, 4.0));
  const auto r = minimize_batch(LossSpec{LossKind::dr}, u, l, identity, sq, Parameter{4.0}, OptimSettings{});
  CHECK(r.iterations == 0);
  CHECK(r.grad_norms.size() == 1);
  CHECK(r.converged);
}

TEST_CASE("backtracking descent is monotone on logistic models") {
  CounterRng rng(5, 0);
  RowMatrix xu(40, 2), xl(25, 2);
  for (Eigen::Index i = 0; i < xu.size(); ++i) xu.data()[i] = rng.normal();
  for (Eigen::Index i = 0; i < xl.size(); ++i) xl.data()[i] = rng.normal();
  Vector y(25);
  for (Eigen::Index i = 0; i < 25; ++i) y[i] = xl(i, 0) + 0.5 * rng.normal() > 0 ? 1.0 : 0.0;
  const Teacher f = Teacher::affine(0.1, Vector{{0.8, 0.1}});
  const LossModel lg = LossModel::logistic(3);
  for (LossKind kind : {LossKind::tl, LossKind::sl, LossKind::dr}) {
    const auto r = minimize_batch(LossSpec{kind}, UnlabeledSet(xu), LabeledSet(xl, y), f, lg, Parameter::zeros(3), OptimSettings{});
    for (std::size_t i = 1; i < r.losses.size(); ++i) REQUIRE(r.losses[i] <= r.losses[i - 1]);
  }
}

TEST_CASE("divergence is reported as a numerical error") {
  const LabeledSet l(RowMatrix{{1.0}}, Vector::Constant(1, 1e7));
  OptimSettings settings;
  settings.step = StepRule::fixed(1.5);  // overshoots a quadratic with curvature 2
  CHECK_THROWS_AS(minimize_batch(LossSpec{LossKind::tl}, UnlabeledSet(1), l, identity, sq, Parameter{0.0}, settings),
                  NumericalError);
}

TEST_CASE("batch plans keep the configured ratio") {
  OptimSettings s;
  s.batch_size = 20;
  const BatchPlan p = plan_batches(900, 100, s);
  CHECK(p.labeled_per_batch == 2);
  CHECK(p.unlabeled_per_batch == 18);
  CHECK(p.batches == 50);
  s.labeled_fraction = 0.5;
  const BatchPlan q = plan_batches(900, 100, s);
  CHECK(q.labeled_per_batch == 10);
  CHECK(q.batches == 10);
}

TEST_CASE("curriculum training lands on the DR minimizer") {
  const auto s = sample(900, 100, 12);
  const Teacher f = Teacher::noisy_oracle(AffineMap{1.0, Vector::Constant(1, 0.8)}, 0.5, 0.3, 2);
  OptimSettings settings;
  settings.batch_size = 20;
  settings.seed = 4;
  const auto r = train_curriculum(s.unlabeled, s.labeled, f, sq, CurriculumSchedule::linear(20), settings);
  CHECK(std::abs(r.theta[0] - theta_dr(s.unlabeled, s.labeled, f)) <= 1e-3);
  CHECK(r.alphas.front() == 0.05);
  CHECK(r.alphas.back() == 1.0);

  const auto again = train_curriculum(s.unlabeled, s.labeled, f, sq, CurriculumSchedule::linear(20), settings);
  CHECK(again.epoch_losses == r.epoch_losses);
  CHECK(again.theta.values() == r.theta.values());

  const auto zero = train_curriculum(s.unlabeled, s.labeled, f, sq, CurriculumSchedule::constant(0.0, 10), settings);
  const Vector all_u = f.predict_all(s.unlabeled.covariates());
  const Vector all_l = f.predict_all(s.labeled.covariates());
  CHECK(std::abs(zero.theta[0] - (all_u.sum() + all_l.sum()) / 1000.0) <= 1e-3);
}

TEST_CASE("mini-batch losses average to the full curriculum loss") {
  const auto s = sample(90, 30, 31);
  const Teacher f = Teacher::noisy_oracle(AffineMap{1.0, Vector::Constant(1, 0.8)}, 0.4, 0.5, 2);
  const LossProblem full(LossSpec{LossKind::curriculum, 0.6}, s.unlabeled, s.labeled, f, sq);
  const Parameter theta{0.7};
  OptimSettings settings;
  settings.batch_size = 8;
  const BatchPlan plan = plan_batches(90, 30, settings);
  std::vector<double> values;
  for (std::uint64_t draw = 0; values.size() < 12000; ++draw) {
    CounterRng rng(derive_seed(55, draw), 0);
    const auto pu = seeded_permutation(90, rng);
    const auto pl = seeded_permutation(30, rng);
    for (std::size_t b = 0; b < plan.batches; ++b) {
      const std::span<const std::size_t> bu(pu.data() + b * plan.unlabeled_per_batch, plan.unlabeled_per_batch);
      const std::span<const std::size_t> bl(pl.data() + b * plan.labeled_per_batch, plan.labeled_per_batch);
      values.push_back(full.subsample(bu, bl).value(theta));
    }
  }
  double mean = 0.0, var = 0.0;
  for (double v : values) mean += v;
  mean /= static_cast<double>(values.size());
  for (double v : values) var += (v - mean) * (v - mean);
  var /= static_cast<double>(values.size() - 1);
  // batches within one permutation are dependent, so this se is approximate
  const double se = std::sqrt(var / static_cast<double>(values.size()));
  CHECK(std::abs(mean - full.value(theta)) <= 4.0 * se);
}

TEST_CASE("split_labeled is a deterministic half split") {
  const SplitRecord a = split_labeled(7, 99), b = split_labeled(7, 99);
  CHECK(a.estimation == b.estimation);
  CHECK(a.training == b.training);
  CHECK(a.estimation.size() == 4);
  CHECK(a.training.size() == 3);
  std::set<std::size_t> all(a.estimation.begin(), a.estimation.end());
  all.insert(a.training.begin(), a.training.end());
  CHECK(all.size() == 7);
}

TEST_CASE("split_and_estimate with a mean-of-half teacher") {
  const LabeledSet l(RowMatrix{{0.0}, {1.0}}, Vector{{2.0, 6.0}});
  const UnlabeledSet u(RowMatrix{{5.0}, {7.0}});
  const TeacherTrainer trainer = [](const LabeledSet& half) { return Teacher::constant(half.responses().mean()); };
  const auto r = split_and_estimate(l, u, trainer, sq, OptimSettings{}, 3);
  REQUIRE(r.split.estimation.size() == 1);
  const double y_est = l.response(r.split.estimation[0]);
  const double c = l.response(r.split.training[0]);
  // c - (c - y_est): the pseudo-label terms cancel
  CHECK(std::abs(r.theta[0] - y_est) <= 1e-8);
  CHECK(std::abs(r.teacher.predict(u.covariate(0)) - c) == 0.0);
}

TEST_CASE("split_and_estimate with an exact teacher is the unlabeled pseudo-label mean") {
  const LabeledSet l(RowMatrix{{0.0}, {1.0}, {2.0}, {3.0}}, Vector{{0.0, 2.0, 4.0, 6.0}});
  const UnlabeledSet u(RowMatrix{{10.0}, {20.0}});
  const auto r = split_and_estimate(l, u, [](const LabeledSet& h) { return fit_linear_teacher(h); }, sq, OptimSettings{}, 8);
  CHECK(std::abs(r.theta[0] - 30.0) <= 1e-8);
}

TEST_CASE("settings validation") {
  OptimSettings s;
  s.batch_size = 0;
  CHECK_THROWS_AS(s.validate(), DataError);
  s = OptimSettings{};
  s.labeled_fraction = 1.5;
  CHECK_THROWS_AS(s.validate(), DataError);
}
