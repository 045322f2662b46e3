#include <doctest.h>

#include <cmath>
#include <functional>

#include "drst/closed_form.hpp"
#include "drst/errors.hpp"
#include "drst/losses.hpp"
#include "drst/oracle.hpp"
#include "drst/synth.hpp"

using namespace drst;

namespace {

DiscreteMismatchSpec binary() {
  DiscreteMismatchSpec s;
  s.support = {{0.0}, {1.0}};
  s.p_x = {0.5, 0.5};
  s.q_x = {0.8, 0.2};
  s.y_given_x = {{{0.0, 1.0}}, {{1.0, 1.0}}};
  return s;
}

const LossModel sq = LossModel::squared_error(1);

}  // namespace

TEST_CASE("finite differences") {
  const auto quad = [](const Parameter& t) { return t[0] * t[0]; };
  CHECK(std::abs(oracle::fd_gradient(quad, Parameter{3.0}, 1e-5)[0] - 6.0) <= 1e-8);
  CHECK(oracle::fd_gradient([](const Parameter&) { return 4.0; }, Parameter{1.0, 2.0}).norm() == 0.0);

  const UnlabeledSet u(RowMatrix{{1.0}, {3.0}});
  const LabeledSet l(RowMatrix{{2.0}}, Vector::Constant(1, 4.0));
  const Teacher f = Teacher::affine(0.0, Vector::Constant(1, 1.0));
  const Vector g = oracle::fd_gradient([&](const Parameter& t) { return loss_dr(t, u, l, f, sq); }, Parameter{0.0});
  CHECK(std::abs(g[0] + 8.0) <= 1e-6);
  CHECK(oracle::relative_error(Vector::Zero(2), Vector::Zero(2)) == 0.0);
}

TEST_CASE("exact expected loss") {
  DiscreteMismatchSpec s = binary();
  CHECK(oracle::exact_expected_loss(s, Parameter{0.5}, sq) == doctest::Approx(0.25).epsilon(1e-15));
  CHECK(oracle::exact_expected_loss(s, Parameter{1.0}, sq) == doctest::Approx(0.5).epsilon(1e-15));
  DiscreteMismatchSpec point;
  point.support = {{3.0}};
  point.p_x = {1.0};
  point.q_x = {1.0};
  point.y_given_x = {{{2.0, 1.0}}};
  CHECK(oracle::exact_expected_loss(point, Parameter{2.0}, sq) == 0.0);
}

TEST_CASE("doubly robust identity under mismatch") {
  const DiscreteMismatchSpec s = binary();
  const Teacher zero = Teacher::constant(0.0);
  const Teacher calibrated = Teacher::affine(0.0, Vector::Constant(1, 1.0));
  const auto exact = s.exact_weighter();
  const auto unit = ImportanceWeighter::constant(1.0);
  CHECK(std::abs(oracle::exact_expected_dr2(s, Parameter{1.0}, sq, zero, exact) - 0.5) <= 1e-12);
  CHECK(std::abs(oracle::exact_expected_dr2(s, Parameter{0.5}, sq, calibrated, unit) - 0.25) <= 1e-12);
  CHECK(std::abs(oracle::exact_expected_dr2(s, Parameter{1.0}, sq, zero, unit) - 0.8) <= 1e-12);
}

TEST_CASE("enumeration agrees with Monte Carlo") {
  DiscreteMismatchSpec s = binary();
  s.y_given_x = {{{0.0, 0.6}, {2.0, 0.4}}, {{1.0, 0.5}, {-1.0, 0.5}}};
  const Teacher f = Teacher::affine(0.2, Vector::Constant(1, 0.5));
  const Parameter theta{0.3};
  const auto w = ImportanceWeighter::table({{0.0}, {1.0}}, {0.9, 1.7});
  const double exact = oracle::exact_expected_dr2(s, theta, sq, f, w);
  const auto res = oracle::mc_statistic(
      [&](std::uint64_t seed) { return gen_discrete_mismatch(s, 3, 4, seed); },
      [&](const MismatchSample& d) { return std::vector<double>{loss_dr2(theta, d.unlabeled, d.labeled, f, sq, w)}; },
      exact, 100000, 12);
  CHECK(std::abs(res[0].mean - exact) <= 4.0 * res[0].mean_se);
}

TEST_CASE("summaries and jackknife") {
  const std::vector<double> constant(50, 2.0);
  const auto c = oracle::summarize(constant, 2.0);
  CHECK(c.mse == 0.0);
  CHECK(c.variance == 0.0);
  CHECK(c.mse_se == 0.0);

  const std::vector<double> v{1.0, 2.0, 4.0, 7.0};
  const auto s = oracle::summarize(v, 3.0);
  CHECK(s.mean == 3.5);
  CHECK(s.mse == doctest::Approx((4.0 + 1.0 + 1.0 + 16.0) / 4.0));
  CHECK(s.variance == doctest::Approx(7.0));
  // leave-one-out mean of a mean is the classic s/sqrt(N)
  CHECK(s.mean_se == doctest::Approx(std::sqrt(7.0 / 4.0)));
}

TEST_CASE("TL Monte Carlo MSE matches sigma^2 / n") {
  LinearGaussianSpec spec{Vector{{1.5, 0.0}}, 2.0, Vector::Zero(1), Matrix::Identity(1, 1), 0, 8, 0};
  const auto res = oracle::mc_statistic(
      [&](std::uint64_t seed) {
        LinearGaussianSpec s = spec;
        s.seed = seed;
        return gen_linear_gaussian(s);
      },
      [](const SyntheticSample& d) { return std::vector<double>{theta_tl(d.labeled)}; }, 1.5, 50000, 3);
  CHECK(std::abs(res[0].mse - 0.5) <= 4.0 * res[0].mse_se);
}

TEST_CASE("SL mean under a constant teacher") {
  LinearGaussianSpec spec{Vector{{1.0, 1.0}}, 1.0, Vector::Zero(1), Matrix::Identity(1, 1), 90, 10, 0};
  const Teacher c = Teacher::constant(3.0);
  const auto res = oracle::mc_statistic(
      [&](std::uint64_t seed) {
        LinearGaussianSpec s = spec;
        s.seed = seed;
        return gen_linear_gaussian(s);
      },
      [&](const SyntheticSample& d) { return std::vector<double>{theta_sl(d.unlabeled, d.labeled, c)}; }, 1.0, 20000, 4);
  CHECK(std::abs(res[0].mean - (9.0 * 3.0 + 1.0) / 10.0) <= 4.0 * res[0].mean_se);
}

TEST_CASE("trial runner is deterministic and thread-count independent") {
  const auto fn = [](std::size_t t) { return std::vector<double>{static_cast<double>(derive_seed(1, t) % 1000)}; };
  CHECK(oracle::run_trials(37, 1, fn) == oracle::run_trials(37, 4, fn));
  const auto failing = [](std::size_t t) -> std::vector<double> {
    if (t == 5 || t == 9) throw NumericalError("boom");
    return {0.0};
  };
  try {
    oracle::run_trials(20, 3, failing);
    FAIL("expected a failure");
  } catch (const NumericalError& e) {
    REQUIRE(e.trial().has_value());
    CHECK(*e.trial() == 5);
  }
}

TEST_CASE("gradient covariances") {
  LinearGaussianSpec det{Vector{{0.0, 1.0}}, 0.0, Vector::Zero(1), Matrix::Identity(1, 1), 0, 1, 0};
  const Teacher perfect = Teacher::affine(0.0, Vector::Constant(1, 1.0));
  const auto r = oracle::estimate_grad_covariances(det, perfect, sq, Parameter{0.0}, 5000);
  CHECK(r.sigma_resid.norm() <= 1e-12);

  LinearGaussianSpec noisy{Vector{{0.0, 1.0}}, 1.0, Vector::Zero(1), Matrix::Identity(1, 1), 0, 1, 5};
  const auto q = oracle::estimate_grad_covariances(noisy, perfect, sq, Parameter{0.0}, 40000);
  // Var[2(theta - Y)] = 4 Var[Y] = 8; the sample variance has se ~ 8 sqrt(2 / N)
  CHECK(std::abs(q.sigma_y(0, 0) - 8.0) <= 4.0 * 8.0 * std::sqrt(2.0 / 40000.0));
  for (const Matrix* m : {&q.sigma_y, &q.sigma_fhat, &q.sigma_resid}) {
    CHECK((*m - m->transpose()).norm() == 0.0);
    Eigen::SelfAdjointEigenSolver<Matrix> es(*m);
    CHECK(es.eigenvalues().minCoeff() >= -1e-12);
  }
}

TEST_CASE("scaling fit recovers a power law") {
  std::vector<std::pair<double, double>> pts;
  for (double n : {10.0, 100.0, 1000.0}) pts.emplace_back(n, 3.0 * std::pow(n, -0.5));
  const auto fit = oracle::fit_scaling(pts);
  CHECK(fit.slope == doctest::Approx(-0.5).epsilon(1e-12));
  CHECK(fit.intercept == doctest::Approx(std::log(3.0)).epsilon(1e-12));
  CHECK(fit.r_squared == doctest::Approx(1.0));
  pts.resize(2);
  CHECK_THROWS_AS(oracle::fit_scaling(pts), DataError);
}
