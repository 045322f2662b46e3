#include "drst/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <mutex>
#include <string>
#include <thread>

#include "drst/errors.hpp"
#include "drst/numeric.hpp"

namespace drst::oracle {

double default_fd_step(const Parameter& theta) {
  return 1e-6 * (1.0 + theta.values().cwiseAbs().maxCoeff());
}

Vector fd_gradient(const LossFunction& loss, const Parameter& theta, double eps) {
  if (!(eps > 0.0)) throw DataError("finite-difference step must be > 0");
  const Vector& t = theta.values();
  Vector g(t.size());
  for (Eigen::Index i = 0; i < t.size(); ++i) {
    Vector up = t, down = t;
    up[i] += eps;
    down[i] -= eps;
    const double fu = loss(Parameter(up));
    const double fd = loss(Parameter(down));
    if (!std::isfinite(fu) || !std::isfinite(fd)) {
      throw NumericalError("non-finite loss in finite-difference stencil, component " + std::to_string(i));
    }
    g[i] = (fu - fd) / (2.0 * eps);
  }
  return g;
}

Vector fd_gradient(const LossFunction& loss, const Parameter& theta) {
  return fd_gradient(loss, theta, default_fd_step(theta));
}

double relative_error(const Vector& a, const Vector& b) {
  const double scale = std::max(a.norm(), b.norm());
  if (scale == 0.0) return 0.0;
  return (a - b).norm() / scale;
}

double exact_expected_loss(const DiscreteMismatchSpec& spec, const Parameter& theta, const LossModel& model) {
  spec.validate();
  CompensatedSum total;
  for (std::size_t a = 0; a < spec.support.size(); ++a) {
    const Covariate x(spec.support[a]);
    for (const auto& o : spec.y_given_x[a]) total.add(spec.p_x[a] * o.prob * model.value(theta, x, o.value));
  }
  return total.value();
}

double exact_expected_dr2(const DiscreteMismatchSpec& spec, const Parameter& theta, const LossModel& model,
                          const Teacher& teacher, const ImportanceWeighter& weighter) {
  spec.validate();
  CompensatedSum pseudo_p, pseudo_q, true_q;
  for (std::size_t a = 0; a < spec.support.size(); ++a) {
    const Covariate x(spec.support[a]);
    const double lf = model.value(theta, x, teacher.predict(x));
    pseudo_p.add(spec.p_x[a] * lf);
    if (spec.q_x[a] > 0.0) {
      const double pi = weighter.weight(x);
      if (!(pi > 0.0)) throw DataError("importance weight must be positive on the labeled support");
      pseudo_q.add(spec.q_x[a] * pi * lf);
      for (const auto& o : spec.y_given_x[a]) true_q.add(spec.q_x[a] * pi * o.prob * model.value(theta, x, o.value));
    }
  }
  return pseudo_p.value() - pseudo_q.value() + true_q.value();
}

McSummary summarize(std::span<const double> values, double theta_star) {
  const std::size_t count = values.size();
  if (count < 2) throw DataError("Monte Carlo summary needs at least 2 trials");
  const double nn = static_cast<double>(count);

  McSummary out;
  out.trials = count;

  // Mean and MSE are sample means; their jackknife SE is s / sqrt(N).
  const auto mean_and_se = [&](auto value_at) {
    CompensatedSum s;
    for (std::size_t i = 0; i < count; ++i) s.add(value_at(i));
    const double mean = s.value() / nn;
    CompensatedSum ss;
    for (std::size_t i = 0; i < count; ++i) {
      const double c = value_at(i) - mean;
      ss.add(c * c);
    }
    return std::pair{mean, std::sqrt(ss.value() / (nn - 1.0) / nn)};
  };
  std::tie(out.mean, out.mean_se) = mean_and_se([&](std::size_t i) { return values[i]; });
  std::tie(out.mse, out.mse_se) = mean_and_se([&](std::size_t i) {
    const double e = values[i] - theta_star;
    return e * e;
  });

  // Unbiased variance and its leave-one-out jackknife SE, on centered data.
  CompensatedSum s1, s2;
  for (double v : values) {
    const double c = v - out.mean;
    s1.add(c);
    s2.add(c * c);
  }
  const double S1 = s1.value();
  const double S2 = s2.value();
  out.variance = (S2 - S1 * S1 / nn) / (nn - 1.0);
  if (count < 3) {
    out.variance_se = std::numeric_limits<double>::quiet_NaN();
    return out;
  }
  std::vector<double> loo(count);
  CompensatedSum loo_sum;
  for (std::size_t i = 0; i < count; ++i) {
    const double c = values[i] - out.mean;
    const double r1 = S1 - c;
    const double r2 = S2 - c * c;
    loo[i] = (r2 - r1 * r1 / (nn - 1.0)) / (nn - 2.0);
    loo_sum.add(loo[i]);
  }
  const double loo_mean = loo_sum.value() / nn;
  CompensatedSum dev;
  for (double v : loo) dev.add((v - loo_mean) * (v - loo_mean));
  out.variance_se = std::sqrt((nn - 1.0) / nn * dev.value());
  return out;
}

std::vector<std::vector<double>> run_trials(std::size_t trials, unsigned threads,
                                            const std::function<std::vector<double>(std::size_t)>& fn) {
  if (trials < 2) throw DataError("Monte Carlo needs at least 2 trials");
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, trials));

  std::vector<std::vector<double>> results(trials);
  std::mutex failure_mutex;
  std::size_t failed_trial = trials;
  std::string failure;

  auto worker = [&](unsigned w) {
    for (std::size_t t = w; t < trials; t += threads) {
      {
        std::lock_guard lock(failure_mutex);
        if (failed_trial < t) return;
      }
      try {
        results[t] = fn(t);
      } catch (const std::exception& e) {
        std::lock_guard lock(failure_mutex);
        if (t < failed_trial) {
          failed_trial = t;
          failure = e.what();
        }
        return;
      }
    }
  };

  if (threads == 1) {
    worker(0);
  } else {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < threads; ++w) pool.emplace_back(worker, w);
  }
  if (failed_trial < trials) {
    throw NumericalError("trial " + std::to_string(failed_trial) + " failed: " + failure, failed_trial);
  }
  return results;
}

GradientCovarianceReport estimate_grad_covariances(const LabeledSet& samples, const Teacher& teacher,
                                                   const LossModel& model, const Parameter& theta) {
  model.check_parameter(theta);
  model.check_compatible(samples.dim());
  const std::size_t count = samples.size();
  const std::size_t p = model.param_dim();
  if (count < p + 1) throw DataError("gradient covariance needs sample_count >= d + 1");

  const auto rows = static_cast<Eigen::Index>(count);
  const auto cols = static_cast<Eigen::Index>(p);
  Matrix gf(rows, cols), gy(rows, cols);
  for (std::size_t i = 0; i < count; ++i) {
    const Covariate x = samples.covariate(i);
    gf.row(static_cast<Eigen::Index>(i)) = model.gradient(theta, x, teacher.predict(x)).transpose();
    gy.row(static_cast<Eigen::Index>(i)) = model.gradient(theta, x, samples.response(i)).transpose();
  }
  const auto cov = [&](const Matrix& g) -> Matrix {
    const Matrix centered = g.rowwise() - g.colwise().mean();
    Matrix c = centered.transpose() * centered / static_cast<double>(count - 1);
    return 0.5 * (c + c.transpose());
  };
  return GradientCovarianceReport{cov(gf), cov(gf - gy), cov(gy), count, p};
}

GradientCovarianceReport estimate_grad_covariances(const LinearGaussianSpec& generator, const Teacher& teacher,
                                                   const LossModel& model, const Parameter& theta,
                                                   std::size_t sample_count) {
  LinearGaussianSpec spec = generator;
  spec.m = 0;
  spec.n = sample_count;
  const SyntheticSample s = gen_linear_gaussian(spec);
  return estimate_grad_covariances(s.labeled, teacher, model, theta);
}

ScalingFit fit_scaling(std::span<const std::pair<double, double>> points) {
  if (points.size() < 3) throw DataError("scaling fit needs at least 3 points");
  std::vector<double> lx, ly;
  for (const auto& [size, stat] : points) {
    if (!(size > 0.0)) throw DataError("scaling fit sizes must be positive");
    if (!(stat > 0.0)) throw DataError("scaling fit statistics must be positive");
    lx.push_back(std::log(size));
    ly.push_back(std::log(stat));
  }
  const double mx = compensated_mean(lx);
  const double my = compensated_mean(ly);
  CompensatedSum sxx, sxy, syy;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sxx.add((lx[i] - mx) * (lx[i] - mx));
    sxy.add((lx[i] - mx) * (ly[i] - my));
    syy.add((ly[i] - my) * (ly[i] - my));
  }
  if (!(sxx.value() > 0.0)) throw DataError("scaling fit needs at least two distinct sizes");
  ScalingFit fit;
  fit.points.assign(points.begin(), points.end());
  fit.slope = sxy.value() / sxx.value();
  fit.intercept = my - fit.slope * mx;
  CompensatedSum ssr;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    const double r = ly[i] - (fit.intercept + fit.slope * lx[i]);
    ssr.add(r * r);
  }
  fit.r_squared = syy.value() > 0.0 ? std::clamp(1.0 - ssr.value() / syy.value(), 0.0, 1.0) : 1.0;
  return fit;
}

}  // namespace drst::oracle
