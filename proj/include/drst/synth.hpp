#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include "drst/closed_form.hpp"
#include "drst/data_model.hpp"

namespace drst {

// X ~ N(x_mean, x_cov), Y = beta_1 + beta_rest . X + N(0, noise_sd^2).
struct LinearGaussianSpec {
  Vector beta;      // length d + 1, intercept first
  double noise_sd = 0.0;
  Vector x_mean;    // length d
  Matrix x_cov;     // d x d, symmetric PSD
  std::size_t m = 0;
  std::size_t n = 1;
  std::uint64_t seed = 0;

  std::size_t dim() const { return static_cast<std::size_t>(x_mean.size()); }
  void validate() const;
  AffineMap truth() const;
  double theta_star() const;  // E[Y]
  double var_y() const;
  double explained_variance() const;  // beta_rest' Sigma beta_rest
};

struct GroundTruth {
  double theta_star = 0.0;
  Vector beta;
  Vector x_mean;
  Matrix x_cov;
  double noise_sd = 0.0;
  bool psd_repaired = false;
};

struct SyntheticSample {
  UnlabeledSet unlabeled;
  LabeledSet labeled;
  GroundTruth truth;
};

// First m draws are unlabeled, the next n are labeled. Streams: covariates
// use stream 0 and response noise stream 1 under spec.seed.
SyntheticSample gen_linear_gaussian(const LinearGaussianSpec& spec);

// Cholesky-like factor L with L L' = cov, from the symmetric eigendecomposition.
// Eigenvalues in [-1e-10, 0) are clamped to zero (reported via `repaired`);
// anything more negative is a DataError.
Matrix covariance_factor(const Matrix& cov, bool* repaired = nullptr);

// Population minimizer of E[(theta . phi(X) - Y)^2] for phi = [1, x_1..x_{p-1}].
Vector population_theta_star(const LinearGaussianSpec& spec, std::size_t p);

struct TeacherSpec {
  enum class Kind { perfect, biased, noisy, constant, affine, ols };

  Kind kind = Kind::perfect;
  double bias = 0.0;
  double noise_sd = 0.0;
  std::uint64_t seed = 0;
  double constant = 0.0;
  double intercept = 0.0;
  Vector slope;
  double ridge = 0.0;
};

std::string_view to_string(TeacherSpec::Kind kind);
TeacherSpec::Kind teacher_kind_from_string(std::string_view name);

// perfect/biased/noisy wrap `truth`; ols fits on `training`.
Teacher make_teacher(const TeacherSpec& spec, const std::optional<AffineMap>& truth,
                     const LabeledSet* training = nullptr);

// Population moments of Y and f(X) - Y for a teacher built from `teacher`
// against data from `data`. OLS teachers have no population summary.
MomentSummary population_moments(const LinearGaussianSpec& data, const TeacherSpec& teacher);

struct ResponseOutcome {
  double value = 0.0;
  double prob = 0.0;
};

struct DiscreteMismatchSpec {
  std::vector<std::vector<double>> support;
  std::vector<double> p_x;  // unlabeled covariate law
  std::vector<double> q_x;  // labeled covariate law
  std::vector<std::vector<ResponseOutcome>> y_given_x;

  std::size_t dim() const { return support.empty() ? 0 : support.front().size(); }
  void validate() const;
  // pi = P_X / Q_X on the points where Q_X > 0.
  ImportanceWeighter exact_weighter() const;
};

struct MismatchSample {
  UnlabeledSet unlabeled;
  LabeledSet labeled;
  ImportanceWeighter weighter;
};

MismatchSample gen_discrete_mismatch(const DiscreteMismatchSpec& spec, std::size_t m, std::size_t n,
                                     std::uint64_t seed);

}  // namespace drst
