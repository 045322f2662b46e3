#pragma once

#include <cstddef>
#include <vector>

#include "drst/data_model.hpp"

namespace drst {

// Minimizers of the losses under (theta - y)^2.
double theta_tl(const LabeledSet& labeled);
double theta_sl(const UnlabeledSet& unlabeled, const LabeledSet& labeled, const Teacher& teacher);
double theta_dr(const UnlabeledSet& unlabeled, const LabeledSet& labeled, const Teacher& teacher);
// Importance-weighted variant: mean_u f - (1/n) sum_l pi (f - y). Needs m >= 1.
double theta_dr2(const UnlabeledSet& unlabeled, const LabeledSet& labeled, const Teacher& teacher,
                 const ImportanceWeighter& weighter);

struct OlsOptions {
  double ridge = 0.0;          // penalty on slopes only; 0 disables the fallback
  double rank_tolerance = 1e-10;
};

// Least-squares affine teacher fitted on the labeled set. Solved by a
// column-pivoted QR; a rank-deficient design is an error unless ridge > 0,
// in which case the penalized normal equations are solved instead.
Teacher fit_linear_teacher(const LabeledSet& labeled, const OlsOptions& options = {});

enum class MomentSource { population, plug_in };

struct MomentSummary {
  double var_y = 0.0;       // Var[Y]
  double var_fhat = 0.0;    // Var[f(X)]
  double var_resid = 0.0;   // Var[f(X) - Y]
  double mean_resid = 0.0;  // E[f(X) - Y]
  std::size_t m = 0;
  std::size_t n = 1;
  MomentSource source = MomentSource::population;

  void validate() const;
};

// Plug-in moments from the labeled sample (unbiased variances).
MomentSummary estimate_moments(const UnlabeledSet& unlabeled, const LabeledSet& labeled, const Teacher& teacher);

struct MseBounds {
  double mse_tl;    // exact
  double bound_sl;
  double bound_dr;
};

MseBounds mse_bounds(const MomentSummary& moments);

struct SemiparametricSpec {
  Vector beta;       // [intercept, slopes...]
  Matrix sigma_x;    // Cov[X]
  double resid_var;  // E[(Y - beta . [1, X])^2]
  std::size_t m = 0;
  std::size_t n = 1;

  void validate() const;
};

// Limiting variances of sqrt(n) (theta_hat - theta*) with an OLS teacher.
struct AsymptoticVariances {
  double avar_tl;
  double avar_dr;
};

AsymptoticVariances asymptotic_variances(const SemiparametricSpec& spec);

}  // namespace drst
