#include "drst/synth.hpp"

#include <cmath>
#include <numeric>
#include <string>

#include "drst/errors.hpp"
#include "drst/rng.hpp"

namespace drst {

namespace {

constexpr std::uint64_t kCovariateStream = 0;
constexpr std::uint64_t kNoiseStream = 1;
constexpr std::uint64_t kUnlabeledStream = 2;
constexpr std::uint64_t kLabeledStream = 3;

void check_probabilities(const std::vector<double>& p, const char* name) {
  double total = 0.0;
  for (double v : p) {
    if (!(v >= 0.0) || !std::isfinite(v)) throw DataError(std::string(name) + " has a negative or non-finite entry");
    total += v;
  }
  if (std::abs(total - 1.0) > 1e-12) throw DataError(std::string(name) + " does not sum to 1");
}

// Inverse-CDF draw from a finite distribution.
template <class ProbAt>
std::size_t draw_index(std::size_t count, ProbAt prob_at, double u) {
  double acc = 0.0;
  std::size_t last_positive = 0;
  for (std::size_t k = 0; k < count; ++k) {
    const double p = prob_at(k);
    if (p <= 0.0) continue;
    last_positive = k;
    acc += p;
    if (u < acc) return k;
  }
  return last_positive;
}

}  // namespace

void LinearGaussianSpec::validate() const {
  const auto d = x_mean.size();
  if (d < 1) throw DataError("linear-Gaussian spec needs d >= 1");
  if (beta.size() != d + 1) throw DataError("beta must have length d + 1 (intercept first)");
  if (x_cov.rows() != d || x_cov.cols() != d) throw DataError("x_cov must be d x d");
  if (!beta.allFinite() || !x_mean.allFinite() || !x_cov.allFinite()) throw DataError("non-finite generator spec");
  if (!(noise_sd >= 0.0) || !std::isfinite(noise_sd)) throw DataError("noise_sd must be >= 0");
  if ((x_cov - x_cov.transpose()).cwiseAbs().maxCoeff() > 1e-12) throw DataError("x_cov must be symmetric");
  if (n < 1) throw DataError("empty labeled set");
  covariance_factor(x_cov);
}

AffineMap LinearGaussianSpec::truth() const { return AffineMap{beta[0], beta.tail(beta.size() - 1)}; }

double LinearGaussianSpec::theta_star() const { return beta[0] + beta.tail(beta.size() - 1).dot(x_mean); }

double LinearGaussianSpec::explained_variance() const {
  const Vector s = beta.tail(beta.size() - 1);
  return s.dot(x_cov * s);
}

double LinearGaussianSpec::var_y() const { return explained_variance() + noise_sd * noise_sd; }

Matrix covariance_factor(const Matrix& cov, bool* repaired) {
  Eigen::SelfAdjointEigenSolver<Matrix> eig(cov);
  if (eig.info() != Eigen::Success) throw DataError("covariance eigendecomposition failed");
  Vector lambda = eig.eigenvalues();
  bool fixed = false;
  for (Eigen::Index i = 0; i < lambda.size(); ++i) {
    if (lambda[i] < -1e-10) throw DataError("covariance matrix is not positive semidefinite");
    if (lambda[i] < 0.0) {
      lambda[i] = 0.0;
      fixed = true;
    }
  }
  if (repaired != nullptr) *repaired = fixed;
  return eig.eigenvectors() * lambda.cwiseSqrt().asDiagonal();
}

SyntheticSample gen_linear_gaussian(const LinearGaussianSpec& spec) {
  spec.validate();
  bool repaired = false;
  const Matrix factor = covariance_factor(spec.x_cov, &repaired);
  const auto d = static_cast<Eigen::Index>(spec.dim());
  const auto total = static_cast<Eigen::Index>(spec.m + spec.n);

  CounterRng cov_rng(spec.seed, kCovariateStream);
  CounterRng noise_rng(spec.seed, kNoiseStream);
  RowMatrix x(total, d);
  std::vector<double> z(static_cast<std::size_t>(d));
  for (Eigen::Index i = 0; i < total; ++i) {
    for (auto& zj : z) zj = cov_rng.normal();
    for (Eigen::Index r = 0; r < d; ++r) {
      double v = spec.x_mean[r];
      for (Eigen::Index c = 0; c < d; ++c) v += factor(r, c) * z[static_cast<std::size_t>(c)];
      x(i, r) = v;
    }
  }

  const auto m = static_cast<Eigen::Index>(spec.m);
  const auto n = static_cast<Eigen::Index>(spec.n);
  const AffineMap truth = spec.truth();
  Vector y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Covariate xi(x.data() + static_cast<std::size_t>((m + i) * d), static_cast<std::size_t>(d));
    y[i] = truth(xi) + (spec.noise_sd > 0.0 ? spec.noise_sd * noise_rng.normal() : 0.0);
  }

  RowMatrix xu = x.topRows(m);
  RowMatrix xl = x.bottomRows(n);
  GroundTruth gt{spec.theta_star(), spec.beta, spec.x_mean, spec.x_cov, spec.noise_sd, repaired};
  return SyntheticSample{UnlabeledSet(std::move(xu)), LabeledSet(std::move(xl), std::move(y)), std::move(gt)};
}

Vector population_theta_star(const LinearGaussianSpec& spec, std::size_t p) {
  spec.validate();
  const auto d = static_cast<Eigen::Index>(spec.dim());
  const auto k = static_cast<Eigen::Index>(p) - 1;
  if (k > d) throw DataError("model has more features than the generator's covariates");
  const Vector slopes = spec.beta.tail(d);
  const double mean_y = spec.theta_star();

  // Moments of phi = [1, x_1..x_k] and of phi * Y.
  Matrix gram(k + 1, k + 1);
  Vector cross(k + 1);
  gram(0, 0) = 1.0;
  cross[0] = mean_y;
  for (Eigen::Index a = 0; a < k; ++a) {
    gram(0, a + 1) = gram(a + 1, 0) = spec.x_mean[a];
    for (Eigen::Index b = 0; b < k; ++b) gram(a + 1, b + 1) = spec.x_cov(a, b) + spec.x_mean[a] * spec.x_mean[b];
    cross[a + 1] = spec.x_mean[a] * mean_y + spec.x_cov.row(a).dot(slopes);
  }
  return gram.ldlt().solve(cross);
}

std::string_view to_string(TeacherSpec::Kind kind) {
  switch (kind) {
    case TeacherSpec::Kind::perfect: return "perfect";
    case TeacherSpec::Kind::biased: return "biased";
    case TeacherSpec::Kind::noisy: return "noisy";
    case TeacherSpec::Kind::constant: return "constant";
    case TeacherSpec::Kind::affine: return "affine";
    case TeacherSpec::Kind::ols: return "ols";
  }
  return "?";
}

TeacherSpec::Kind teacher_kind_from_string(std::string_view name) {
  using K = TeacherSpec::Kind;
  if (name == "perfect") return K::perfect;
  if (name == "biased") return K::biased;
  if (name == "noisy") return K::noisy;
  if (name == "constant") return K::constant;
  if (name == "affine") return K::affine;
  if (name == "ols") return K::ols;
  throw DataError("unknown teacher kind '" + std::string(name) + "'");
}

Teacher make_teacher(const TeacherSpec& spec, const std::optional<AffineMap>& truth, const LabeledSet* training) {
  using K = TeacherSpec::Kind;
  switch (spec.kind) {
    case K::perfect:
    case K::biased:
    case K::noisy: {
      if (!truth) throw DataError(std::string(to_string(spec.kind)) + " teacher needs the generator's truth function");
      const double bias = spec.kind == K::perfect ? 0.0 : spec.bias;
      const double noise = spec.kind == K::noisy ? spec.noise_sd : 0.0;
      return Teacher::noisy_oracle(*truth, bias, noise, spec.seed);
    }
    case K::constant:
      return Teacher::constant(spec.constant);
    case K::affine:
      return Teacher::affine(spec.intercept, spec.slope);
    case K::ols:
      if (training == nullptr) throw DataError("ols teacher needs training data");
      return fit_linear_teacher(*training, OlsOptions{spec.ridge});
  }
  throw DataError("unknown teacher kind");
}

MomentSummary population_moments(const LinearGaussianSpec& data, const TeacherSpec& teacher) {
  using K = TeacherSpec::Kind;
  data.validate();
  MomentSummary out;
  out.var_y = data.var_y();
  out.m = data.m;
  out.n = data.n;
  out.source = MomentSource::population;
  const double explained = data.explained_variance();
  const double noise2 = data.noise_sd * data.noise_sd;
  switch (teacher.kind) {
    case K::perfect:
    case K::biased:
    case K::noisy: {
      const double tn = teacher.kind == K::noisy ? teacher.noise_sd : 0.0;
      out.var_fhat = explained + tn * tn;
      out.var_resid = tn * tn + noise2;
      out.mean_resid = teacher.kind == K::perfect ? 0.0 : teacher.bias;
      break;
    }
    case K::constant:
      out.var_fhat = 0.0;
      out.var_resid = out.var_y;
      out.mean_resid = teacher.constant - data.theta_star();
      break;
    case K::affine: {
      const auto d = static_cast<Eigen::Index>(data.dim());
      if (teacher.slope.size() != d) throw DataError("affine teacher slope must have length d");
      const Vector diff = teacher.slope - data.beta.tail(d);
      out.var_fhat = teacher.slope.dot(data.x_cov * teacher.slope);
      out.var_resid = diff.dot(data.x_cov * diff) + noise2;
      out.mean_resid = teacher.intercept - data.beta[0] + diff.dot(data.x_mean);
      break;
    }
    case K::ols:
      throw DataError("an OLS teacher has no population moment summary");
  }
  return out;
}

void DiscreteMismatchSpec::validate() const {
  const std::size_t k = support.size();
  if (k == 0) throw DataError("discrete spec needs a non-empty support");
  if (p_x.size() != k || q_x.size() != k || y_given_x.size() != k) {
    throw DataError("p_x, q_x and y_given_x need one entry per support point");
  }
  const std::size_t d = support.front().size();
  if (d == 0) throw DataError("support points need dimension >= 1");
  for (std::size_t a = 0; a < k; ++a) {
    if (support[a].size() != d) throw DataError("support points have mixed dimensions");
    for (double v : support[a]) {
      if (!std::isfinite(v)) throw DataError("non-finite support point");
    }
    for (std::size_t b = 0; b < a; ++b) {
      if (support[a] == support[b]) throw DataError("duplicate support point");
    }
  }
  check_probabilities(p_x, "p_x");
  check_probabilities(q_x, "q_x");
  for (std::size_t a = 0; a < k; ++a) {
    if (p_x[a] > 0.0 && !(q_x[a] > 0.0)) {
      throw DataError("support violation: q_x is zero where p_x is positive (point " + std::to_string(a) + ")");
    }
    std::vector<double> probs;
    for (const auto& o : y_given_x[a]) {
      if (!std::isfinite(o.value)) throw DataError("non-finite response value");
      probs.push_back(o.prob);
    }
    if (probs.empty()) throw DataError("empty conditional response distribution");
    check_probabilities(probs, "y_given_x");
  }
}

ImportanceWeighter DiscreteMismatchSpec::exact_weighter() const {
  validate();
  std::vector<std::vector<double>> pts;
  std::vector<double> w;
  for (std::size_t a = 0; a < support.size(); ++a) {
    if (!(q_x[a] > 0.0)) continue;
    if (!(p_x[a] > 0.0)) {
      throw DataError("density ratio P/Q vanishes at labeled support point " + std::to_string(a));
    }
    pts.push_back(support[a]);
    w.push_back(p_x[a] / q_x[a]);
  }
  return ImportanceWeighter::table(std::move(pts), std::move(w));
}

MismatchSample gen_discrete_mismatch(const DiscreteMismatchSpec& spec, std::size_t m, std::size_t n,
                                     std::uint64_t seed) {
  spec.validate();
  if (m < 1 || n < 1) throw DataError("discrete mismatch sampling needs m, n >= 1");
  const std::size_t k = spec.support.size();
  const auto d = static_cast<Eigen::Index>(spec.dim());

  CounterRng urng(seed, kUnlabeledStream);
  RowMatrix xu(static_cast<Eigen::Index>(m), d);
  for (std::size_t i = 0; i < m; ++i) {
    const std::size_t a = draw_index(k, [&](std::size_t j) { return spec.p_x[j]; }, urng.uniform());
    for (Eigen::Index j = 0; j < d; ++j) xu(static_cast<Eigen::Index>(i), j) = spec.support[a][static_cast<std::size_t>(j)];
  }

  CounterRng lrng(seed, kLabeledStream);
  RowMatrix xl(static_cast<Eigen::Index>(n), d);
  Vector y(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t a = draw_index(k, [&](std::size_t j) { return spec.q_x[j]; }, lrng.uniform());
    for (Eigen::Index j = 0; j < d; ++j) xl(static_cast<Eigen::Index>(i), j) = spec.support[a][static_cast<std::size_t>(j)];
    const auto& cond = spec.y_given_x[a];
    const std::size_t b = draw_index(cond.size(), [&](std::size_t j) { return cond[j].prob; }, lrng.uniform());
    y[static_cast<Eigen::Index>(i)] = cond[b].value;
  }
  return MismatchSample{UnlabeledSet(std::move(xu)), LabeledSet(std::move(xl), std::move(y)), spec.exact_weighter()};
}

}  // namespace drst
