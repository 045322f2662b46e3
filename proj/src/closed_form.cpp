#include "drst/closed_form.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "drst/errors.hpp"
#include "drst/numeric.hpp"

namespace drst {

double theta_tl(const LabeledSet& labeled) {
  const Vector& y = labeled.responses();
  return compensated_mean({y.data(), static_cast<std::size_t>(y.size())});
}

double theta_sl(const UnlabeledSet& unlabeled, const LabeledSet& labeled, const Teacher& teacher) {
  const DatasetView v = validate_datasets(unlabeled, labeled);
  CompensatedSum s;
  for (std::size_t i = 0; i < v.m; ++i) s.add(teacher.predict(unlabeled.covariate(i)));
  for (std::size_t i = 0; i < v.n; ++i) s.add(labeled.response(i));
  return s.value() / static_cast<double>(v.m + v.n);
}

double theta_dr(const UnlabeledSet& unlabeled, const LabeledSet& labeled, const Teacher& teacher) {
  const DatasetView v = validate_datasets(unlabeled, labeled);
  CompensatedSum all, resid;
  for (std::size_t i = 0; i < v.m; ++i) all.add(teacher.predict(unlabeled.covariate(i)));
  for (std::size_t i = 0; i < v.n; ++i) {
    const double f = teacher.predict(labeled.covariate(i));
    all.add(f);
    resid.add(f - labeled.response(i));
  }
  return all.value() / static_cast<double>(v.m + v.n) - resid.value() / static_cast<double>(v.n);
}

double theta_dr2(const UnlabeledSet& unlabeled, const LabeledSet& labeled, const Teacher& teacher,
                 const ImportanceWeighter& weighter) {
  const DatasetView v = validate_datasets(unlabeled, labeled);
  if (v.m == 0) throw DataError("DR2 estimator needs at least one unlabeled sample (m >= 1)");
  CompensatedSum u, resid;
  for (std::size_t i = 0; i < v.m; ++i) u.add(teacher.predict(unlabeled.covariate(i)));
  for (std::size_t i = 0; i < v.n; ++i) {
    const Covariate x = labeled.covariate(i);
    const double pi = weighter.weight(x);
    resid.add(pi * (teacher.predict(x) - labeled.response(i)));
  }
  return u.value() / static_cast<double>(v.m) - resid.value() / static_cast<double>(v.n);
}

Teacher fit_linear_teacher(const LabeledSet& labeled, const OlsOptions& options) {
  const auto n = static_cast<Eigen::Index>(labeled.size());
  const auto d = static_cast<Eigen::Index>(labeled.dim());
  Matrix design(n, d + 1);
  design.col(0).setOnes();
  design.rightCols(d) = labeled.covariates();
  const Vector& y = labeled.responses();

  Eigen::ColPivHouseholderQR<Matrix> qr(design);
  qr.setThreshold(options.rank_tolerance);
  Vector beta;
  double ridge_used = 0.0;
  const Eigen::Index rank = qr.rank();
  if (rank == d + 1) {
    beta = qr.solve(y);
  } else {
    if (!(options.ridge > 0.0)) {
      throw DataError("OLS design is rank deficient (rank " + std::to_string(rank) + " < " +
                      std::to_string(d + 1) + ") and no ridge penalty is set");
    }
    Matrix gram = design.transpose() * design;
    gram.diagonal().tail(d).array() += options.ridge;
    beta = gram.ldlt().solve(design.transpose() * y);
    ridge_used = options.ridge;
  }
  if (!beta.allFinite()) throw NumericalError("OLS fit produced non-finite coefficients");
  return Teacher(OlsTeacher{AffineMap{beta[0], beta.tail(d)}, ridge_used, rank});
}

void MomentSummary::validate() const {
  if (!(var_y >= 0.0) || !(var_fhat >= 0.0) || !(var_resid >= 0.0)) {
    throw DataError("moment summary variances must be non-negative");
  }
  if (!std::isfinite(mean_resid)) throw DataError("moment summary mean residual must be finite");
  if (n < 1) throw DataError("moment summary needs n >= 1");
}

MomentSummary estimate_moments(const UnlabeledSet& unlabeled, const LabeledSet& labeled, const Teacher& teacher) {
  const DatasetView v = validate_datasets(unlabeled, labeled);
  if (v.n < 2) throw DataError("plug-in moments need n >= 2");
  const auto var = [](const std::vector<double>& xs) {
    const double mean = compensated_mean(xs);
    CompensatedSum ss;
    for (double x : xs) ss.add((x - mean) * (x - mean));
    return ss.value() / static_cast<double>(xs.size() - 1);
  };
  std::vector<double> y, f_all, resid;
  for (std::size_t i = 0; i < v.m; ++i) f_all.push_back(teacher.predict(unlabeled.covariate(i)));
  for (std::size_t i = 0; i < v.n; ++i) {
    const double f = teacher.predict(labeled.covariate(i));
    f_all.push_back(f);
    y.push_back(labeled.response(i));
    resid.push_back(f - labeled.response(i));
  }
  MomentSummary out;
  out.var_y = var(y);
  out.var_fhat = var(f_all);
  out.var_resid = var(resid);
  out.mean_resid = compensated_mean(resid);
  out.m = v.m;
  out.n = v.n;
  out.source = MomentSource::plug_in;
  return out;
}

MseBounds mse_bounds(const MomentSummary& mo) {
  mo.validate();
  const double m = static_cast<double>(mo.m);
  const double n = static_cast<double>(mo.n);
  const double total = m + n;
  const double total2 = total * total;

  MseBounds out{};
  out.mse_tl = mo.var_y / n;
  out.bound_sl = 2.0 * m * m / total2 * mo.mean_resid * mo.mean_resid + 2.0 * m / total2 * mo.var_resid +
                 2.0 * n / total2 * mo.var_y;
  const double mix = (m + 2.0 * n) / (total * n);
  out.bound_dr = 2.0 * std::min(mo.var_y / n + mix * mo.var_fhat, mix * mo.var_resid + mo.var_y / total);
  return out;
}

void SemiparametricSpec::validate() const {
  if (beta.size() < 1) throw DataError("beta needs an intercept");
  const Eigen::Index d = beta.size() - 1;
  if (sigma_x.rows() != d || sigma_x.cols() != d) throw DataError("sigma_x must be d x d with d = len(beta) - 1");
  if (!sigma_x.isApprox(sigma_x.transpose(), 1e-12) && d > 0) throw DataError("sigma_x must be symmetric");
  if (d > 0) {
    Eigen::SelfAdjointEigenSolver<Matrix> eig(sigma_x, Eigen::EigenvaluesOnly);
    if (eig.eigenvalues().minCoeff() < -1e-10) throw DataError("sigma_x must be positive semidefinite");
  }
  if (!(resid_var >= 0.0)) throw DataError("resid_var must be non-negative");
  if (n < 1) throw DataError("semiparametric spec needs n >= 1");
}

AsymptoticVariances asymptotic_variances(const SemiparametricSpec& spec) {
  spec.validate();
  const Vector slopes = spec.beta.tail(spec.beta.size() - 1);
  const double explained = slopes.size() > 0 ? slopes.dot(spec.sigma_x * slopes) : 0.0;
  const double ratio = static_cast<double>(spec.n) / static_cast<double>(spec.m + spec.n);
  return {spec.resid_var + explained, spec.resid_var + ratio * explained};
}

}  // namespace drst
