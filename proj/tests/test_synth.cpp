#include <doctest.h>

#include <cmath>

#include "drst/closed_form.hpp"
#include "drst/errors.hpp"
#include "drst/synth.hpp"

using namespace drst;

TEST_CASE("deterministic linear responses") {
  LinearGaussianSpec spec{Vector{{0.0, 1.0}}, 0.0, Vector::Constant(1, 5.0), Matrix::Identity(1, 1), 10, 20, 1};
  const auto s = gen_linear_gaussian(spec);
  for (std::size_t i = 0; i < s.labeled.size(); ++i) CHECK(s.labeled.response(i) == s.labeled.covariate(i)[0]);
  CHECK(s.truth.theta_star == 5.0);
  CHECK(s.unlabeled.size() == 10);
}

TEST_CASE("zero slope gives constant mean") {
  LinearGaussianSpec spec{Vector{{2.0, 0.0}}, 1.0, Vector::Zero(1), Matrix::Identity(1, 1), 0, 5, 1};
  CHECK(spec.theta_star() == 2.0);
  CHECK(spec.var_y() == 1.0);
}

TEST_CASE("same seed gives the same data") {
  LinearGaussianSpec spec{Vector{{1.0, 1.0, -1.0}}, 1.0, Vector::Zero(2), Matrix::Identity(2, 2), 30, 20, 42};
  const auto a = gen_linear_gaussian(spec), b = gen_linear_gaussian(spec);
  CHECK(a.unlabeled.covariates() == b.unlabeled.covariates());
  CHECK(a.labeled.responses() == b.labeled.responses());
  spec.seed = 43;
  CHECK(gen_linear_gaussian(spec).labeled.responses() != a.labeled.responses());
}

TEST_CASE("covariate moments converge") {
  Matrix cov{{2.0, 0.6}, {0.6, 1.0}};
  LinearGaussianSpec spec{Vector{{0.0, 1.0, 1.0}}, 1.0, Vector{{1.0, -2.0}}, cov, 50000, 50000, 8};
  const auto s = gen_linear_gaussian(spec);
  const RowMatrix& x = s.unlabeled.covariates();
  const double n = 50000.0;
  for (Eigen::Index j = 0; j < 2; ++j) {
    const double mean = (x.col(j).sum() + s.labeled.covariates().col(j).sum()) / (2 * n);
    CHECK(std::abs(mean - spec.x_mean[j]) <= 5.0 * std::sqrt(cov(j, j) / (2 * n)));
  }
  const Vector centered0 = x.col(0).array() - x.col(0).mean();
  const Vector centered1 = x.col(1).array() - x.col(1).mean();
  CHECK(centered0.dot(centered1) / (n - 1) == doctest::Approx(0.6).epsilon(0.05));
}

TEST_CASE("covariance factor repairs tiny negative eigenvalues only") {
  bool repaired = false;
  Matrix near{{1.0, 1.0}, {1.0, 1.0 - 1e-12}};
  const Matrix f = covariance_factor(near, &repaired);
  CHECK(repaired);
  CHECK((f * f.transpose() - near).norm() <= 1e-9);
  CHECK_THROWS_AS(covariance_factor(Matrix{{1.0, 2.0}, {2.0, 1.0}}), DataError);
}

TEST_CASE("teacher constructors") {
  LinearGaussianSpec spec{Vector{{0.5, 2.0}}, 0.0, Vector::Zero(1), Matrix::Identity(1, 1), 5, 50, 2};
  const auto s = gen_linear_gaussian(spec);
  TeacherSpec perfect;
  const Teacher p = make_teacher(perfect, spec.truth());
  for (std::size_t i = 0; i < s.labeled.size(); ++i) CHECK(p.predict(s.labeled.covariate(i)) == s.labeled.response(i));

  TeacherSpec biased;
  biased.kind = TeacherSpec::Kind::biased;
  biased.bias = 3.0;
  const Teacher b = make_teacher(biased, spec.truth());
  for (std::size_t i = 0; i < s.labeled.size(); ++i) {
    CHECK(b.predict(s.labeled.covariate(i)) - s.labeled.response(i) == doctest::Approx(3.0).epsilon(1e-12));
  }
  const MomentSummary ms = population_moments(spec, biased);
  CHECK(ms.mean_resid == 3.0);
  CHECK(ms.var_resid == 0.0);

  TeacherSpec c;
  c.kind = TeacherSpec::Kind::constant;
  c.constant = 7.0;
  const Teacher ct = make_teacher(c, std::nullopt);
  const double ysum = s.labeled.responses().sum();
  CHECK(theta_sl(s.unlabeled, s.labeled, ct) == doctest::Approx((5 * 7.0 + ysum) / 55.0).epsilon(1e-14));

  TeacherSpec ols;
  ols.kind = TeacherSpec::Kind::ols;
  CHECK_THROWS_AS(make_teacher(ols, spec.truth()), DataError);
  CHECK_THROWS_AS(population_moments(spec, ols), DataError);
  CHECK_THROWS_AS(make_teacher(perfect, std::nullopt), DataError);
}

namespace {
DiscreteMismatchSpec binary() {
  DiscreteMismatchSpec s;
  s.support = {{0.0}, {1.0}};
  s.p_x = {0.5, 0.5};
  s.q_x = {0.8, 0.2};
  s.y_given_x = {{{0.0, 1.0}}, {{1.0, 1.0}}};
  return s;
}
}  // namespace

TEST_CASE("exact density ratio") {
  const auto w = binary().exact_weighter();
  const double zero[] = {0.0}, one[] = {1.0};
  CHECK(w.weight(Covariate(zero, 1)) == 0.625);
  CHECK(w.weight(Covariate(one, 1)) == 2.5);
  DiscreteMismatchSpec same = binary();
  same.q_x = same.p_x;
  const auto u = same.exact_weighter();
  CHECK(u.weight(Covariate(zero, 1)) == 1.0);
  CHECK(u.weight(Covariate(one, 1)) == 1.0);
}

TEST_CASE("discrete mismatch validation") {
  DiscreteMismatchSpec s = binary();
  s.q_x = {1.0, 0.0};  // P puts mass where Q has none
  CHECK_THROWS_AS(s.validate(), DataError);
  s = binary();
  s.p_x = {0.5, 0.6};
  CHECK_THROWS_AS(s.validate(), DataError);
}

TEST_CASE("discrete sampling frequencies and the weighted-frequency identity") {
  const DiscreteMismatchSpec spec = binary();
  const auto a = gen_discrete_mismatch(spec, 40000, 40000, 5);
  const auto b = gen_discrete_mismatch(spec, 40000, 40000, 5);
  CHECK(a.labeled.responses() == b.labeled.responses());
  double u1 = 0.0, l1 = 0.0, weighted1 = 0.0;
  for (std::size_t i = 0; i < 40000; ++i) {
    u1 += a.unlabeled.covariate(i)[0];
    const double x = a.labeled.covariate(i)[0];
    l1 += x;
    weighted1 += a.weighter.weight(a.labeled.covariate(i)) * x;
    CHECK(a.labeled.response(i) == x);
  }
  const double n = 40000.0;
  CHECK(std::abs(u1 / n - 0.5) <= 4.0 * std::sqrt(0.25 / n));
  CHECK(std::abs(l1 / n - 0.2) <= 4.0 * std::sqrt(0.16 / n));
  // pi * 1{x=1} has variance 0.2 * 2.5^2 - 0.5^2 under Q
  CHECK(std::abs(weighted1 / n - 0.5) <= 4.0 * std::sqrt((0.2 * 6.25 - 0.25) / n));
}
