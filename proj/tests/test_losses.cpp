#include <doctest.h>

#include <cmath>

#include "drst/errors.hpp"
#include "drst/losses.hpp"
#include "drst/oracle.hpp"
#include "drst/rng.hpp"

using namespace drst;

namespace {

struct Fixture {
  UnlabeledSet u{RowMatrix{{1.0}, {3.0}}};
  LabeledSet l{RowMatrix{{2.0}}, Vector::Constant(1, 4.0)};
  Teacher f = Teacher::affine(0.0, Vector::Constant(1, 1.0));
  LossModel sq = LossModel::squared_error(1);
  Parameter zero{0.0};
};

struct Random {
  UnlabeledSet u;
  LabeledSet l;
  Teacher f;
  LossModel model;
  Parameter theta;
};

Random random_problem(std::uint64_t seed, ModelKind kind, std::size_t m, std::size_t n) {
  CounterRng rng(seed, 0);
  const std::size_t d = 2;
  RowMatrix xu(static_cast<Eigen::Index>(m), d), xl(static_cast<Eigen::Index>(n), d);
  for (Eigen::Index i = 0; i < xu.size(); ++i) xu.data()[i] = rng.normal();
  for (Eigen::Index i = 0; i < xl.size(); ++i) xl.data()[i] = rng.normal();
  Vector y(static_cast<Eigen::Index>(n));
  for (auto& v : y) v = kind == ModelKind::logistic ? (rng.uniform() < 0.5 ? 0.0 : 1.0) : rng.normal();
  return {UnlabeledSet(xu), LabeledSet(xl, y), Teacher::affine(rng.normal(), Vector{{rng.normal(), rng.normal()}}),
          LossModel(kind, 3), Parameter(Vector{{rng.normal(), rng.normal(), rng.normal()}})};
}

}  // namespace

TEST_CASE("hand-computed loss values") {
  Fixture fx;
  CHECK(loss_tl(fx.zero, fx.l, fx.sq) == doctest::Approx(16.0).epsilon(1e-15));
  CHECK(std::abs(loss_sl(fx.zero, fx.u, fx.l, fx.f, fx.sq) - 26.0 / 3.0) <= 1e-12);
  CHECK(std::abs(loss_dr(fx.zero, fx.u, fx.l, fx.f, fx.sq) - 50.0 / 3.0) <= 1e-12);
  CHECK(std::abs(curriculum_loss(fx.zero, fx.u, fx.l, fx.f, fx.sq, 0.5) - 32.0 / 3.0) <= 1e-12);
  const LabeledSet two(RowMatrix{{0.0}, {0.0}}, Vector{{1.0, 3.0}});
  CHECK(loss_tl(Parameter{2.0}, two, fx.sq) == 1.0);
}

TEST_CASE("DR gradient on the hand instance") {
  Fixture fx;
  const Vector g = grad_loss(LossSpec{LossKind::dr}, fx.zero, fx.u, fx.l, fx.f, fx.sq);
  CHECK(std::abs(g[0] + 8.0) <= 1e-12);
  CHECK(grad_loss(LossSpec{LossKind::dr}, Parameter{4.0}, fx.u, fx.l, fx.f, fx.sq).norm() <= 1e-12);
}

TEST_CASE("reduction identities") {
  for (std::uint64_t s = 0; s < 20; ++s) {
    Random r = random_problem(s, s % 2 ? ModelKind::logistic : ModelKind::squared_error, 7, 5);
    const UnlabeledSet empty(2);
    const double tl = loss_tl(r.theta, r.l, r.model);
    CHECK(std::abs(loss_dr(r.theta, empty, r.l, r.f, r.model) - tl) <= 1e-12 * (1.0 + std::abs(tl)));
    CHECK(std::abs(loss_sl(r.theta, empty, r.l, r.f, r.model) - tl) <= 1e-12 * (1.0 + std::abs(tl)));
    CHECK(curriculum_loss(r.theta, r.u, r.l, r.f, r.model, 1.0) == loss_dr(r.theta, r.u, r.l, r.f, r.model));

    double all = 0.0;
    for (std::size_t i = 0; i < r.u.size(); ++i) all += r.model.value(r.theta, r.u.covariate(i), r.f.predict(r.u.covariate(i)));
    double lab_f = 0.0, lab_y = 0.0;
    for (std::size_t i = 0; i < r.l.size(); ++i) {
      lab_f += r.model.value(r.theta, r.l.covariate(i), r.f.predict(r.l.covariate(i)));
      lab_y += r.model.value(r.theta, r.l.covariate(i), r.l.response(i));
    }
    const double total = static_cast<double>(r.u.size() + r.l.size());
    const double pseudo_avg = (all + lab_f) / total;
    CHECK(curriculum_loss(r.theta, r.u, r.l, r.f, r.model, 0.0) == doctest::Approx(pseudo_avg).epsilon(1e-12));
    // SL rewritten as pseudo-label average plus a labeled correction with weight 1/(m+n)
    CHECK(loss_sl(r.theta, r.u, r.l, r.f, r.model) ==
          doctest::Approx(pseudo_avg - lab_f / total + lab_y / total).epsilon(1e-12));

    // perfect labeled teacher: the labeled terms cancel
    Vector fitted(static_cast<Eigen::Index>(r.l.size()));
    for (std::size_t i = 0; i < r.l.size(); ++i) fitted[static_cast<Eigen::Index>(i)] = r.f.predict(r.l.covariate(i));
    const LabeledSet perfect(r.l.covariates(), fitted);
    CHECK(loss_dr(r.theta, r.u, perfect, r.f, r.model) == doctest::Approx(pseudo_avg).epsilon(1e-12));
    CHECK(loss_dr2(r.theta, r.u, perfect, r.f, r.model, ImportanceWeighter::constant(1.0)) ==
          doctest::Approx(all / static_cast<double>(r.u.size())).epsilon(1e-12));
  }
}

TEST_CASE("SL equals TL when the teacher matches labels and the labeled set is reused as unlabeled") {
  const LabeledSet l(RowMatrix{{1.0}, {2.0}, {5.0}}, Vector{{1.0, 2.0, 5.0}});
  const Teacher f = Teacher::affine(0.0, Vector::Constant(1, 1.0));
  const LossModel sq = LossModel::squared_error(1);
  for (double th : {-1.0, 0.0, 2.5}) {
    CHECK(loss_sl(Parameter{th}, l.as_unlabeled(), l, f, sq) == doctest::Approx(loss_tl(Parameter{th}, l, sq)).epsilon(1e-14));
  }
}

TEST_CASE("losses are linear in the labeled set") {
  Random a = random_problem(101, ModelKind::squared_error, 6, 4);
  Random b = random_problem(202, ModelKind::squared_error, 6, 9);
  const LabeledSet joined = concat(a.l, b.l);
  const double na = 4.0, nb = 9.0;
  const double tl = loss_tl(a.theta, joined, a.model);
  CHECK(tl == doctest::Approx((na * loss_tl(a.theta, a.l, a.model) + nb * loss_tl(a.theta, b.l, a.model)) / (na + nb)).epsilon(1e-12));
  // DR on the joined set recombines the three per-set sums
  const UnlabeledSet empty(2);
  const double m = static_cast<double>(a.u.size());
  const auto sums = [&](const LabeledSet& l, double& lf, double& ly) {
    lf = ly = 0.0;
    for (std::size_t i = 0; i < l.size(); ++i) {
      lf += a.model.value(a.theta, l.covariate(i), a.f.predict(l.covariate(i)));
      ly += a.model.value(a.theta, l.covariate(i), l.response(i));
    }
  };
  double fa, ya, fb, yb;
  sums(a.l, fa, ya);
  sums(b.l, fb, yb);
  double uu = 0.0;
  for (std::size_t i = 0; i < a.u.size(); ++i) uu += a.model.value(a.theta, a.u.covariate(i), a.f.predict(a.u.covariate(i)));
  const double expect = (uu + fa + fb) / (m + na + nb) - (fa + fb) / (na + nb) + (ya + yb) / (na + nb);
  CHECK(loss_dr(a.theta, a.u, joined, a.f, a.model) == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("DR is convex under squared error") {
  Fixture fx;
  for (double t : {-3.0, 0.0, 1.0, 4.0, 10.0}) {
    const double h = 0.5;
    const double second = loss_dr(Parameter{t + h}, fx.u, fx.l, fx.f, fx.sq) - 2.0 * loss_dr(Parameter{t}, fx.u, fx.l, fx.f, fx.sq) +
                          loss_dr(Parameter{t - h}, fx.u, fx.l, fx.f, fx.sq);
    CHECK(second / (h * h) == doctest::Approx(2.0).epsilon(1e-9));
  }
}

TEST_CASE("gradients of every kind agree with finite differences") {
  for (ModelKind mk : {ModelKind::squared_error, ModelKind::logistic}) {
    for (LossKind kind : {LossKind::tl, LossKind::sl, LossKind::dr, LossKind::dr2, LossKind::curriculum}) {
      for (std::uint64_t s = 0; s < 100; ++s) {
        Random r = random_problem(1000 + s, mk, 1 + s % 9, 1 + s % 7);
        const auto w = ImportanceWeighter::constant(0.5 + static_cast<double>(s % 5) / 3.0);
        LossSpec spec{kind, 0.37, kind == LossKind::dr2 ? &w : nullptr};
        const LossProblem problem(spec, r.u, r.l, r.f, r.model);
        const Vector analytic = grad_loss(spec, r.theta, r.u, r.l, r.f, r.model);
        const Vector numeric = oracle::fd_gradient([&](const Parameter& t) { return problem.value(t); }, r.theta);
        REQUIRE(oracle::relative_error(analytic, numeric) <= 1e-6);
      }
    }
  }
}

TEST_CASE("DR2 multiplies labeled terms by pi") {
  Fixture fx;
  const auto w = ImportanceWeighter::constant(2.0);
  // (1/m) sum_u f^2 - 2 * f_l^2 + 2 * y^2 at theta = 0: 5 - 8 + 32
  CHECK(loss_dr2(fx.zero, fx.u, fx.l, fx.f, fx.sq, w) == doctest::Approx(29.0).epsilon(1e-15));
}

TEST_CASE("structural errors") {
  Fixture fx;
  const UnlabeledSet empty(1);
  CHECK_THROWS_AS(loss_dr2(fx.zero, empty, fx.l, fx.f, fx.sq, ImportanceWeighter::constant(1.0)), DataError);
  CHECK_THROWS_AS(curriculum_loss(fx.zero, fx.u, fx.l, fx.f, fx.sq, 1.5), DataError);
  const auto tiny = ImportanceWeighter::constant(1e-13);
  CHECK_THROWS_AS(loss_dr2(fx.zero, fx.u, fx.l, fx.f, fx.sq, tiny), DataError);
  CHECK_THROWS_AS(loss_kind_from_string("XYZ"), DataError);
  CHECK(loss_kind_from_string("CURR") == LossKind::curriculum);
}

TEST_CASE("curriculum schedules") {
  CHECK(alpha_at(CurriculumSchedule::linear(20), 5) == 0.25);
  CHECK(alpha_at(CurriculumSchedule::quadratic(20), 10) == 0.25);
  CHECK(alpha_at(CurriculumSchedule::final_epoch_step(20), 19) == 0.0);
  CHECK(alpha_at(CurriculumSchedule::final_epoch_step(20), 20) == 1.0);
  CHECK(alpha_at(CurriculumSchedule::constant(0.3, 4), 2) == 0.3);
  CHECK(alpha_at(CurriculumSchedule::linear(20), 0) == 0.0);
  CHECK_THROWS_AS(alpha_at(CurriculumSchedule::linear(20), 21), DataError);
  CHECK_THROWS_AS(alpha_at(CurriculumSchedule::linear(20), -1), DataError);
}
