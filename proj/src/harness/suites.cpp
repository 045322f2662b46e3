#include <algorithm>
#include <cmath>
#include <cstdio>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "drst/closed_form.hpp"
#include "drst/errors.hpp"
#include "drst/harness.hpp"
#include "drst/numeric.hpp"
#include "drst/oracle.hpp"
#include "drst/rng.hpp"

namespace drst::harness {

namespace {

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

std::string indexed(const std::string& base, std::size_t j, std::size_t dim) {
  return dim == 1 ? base : base + "[" + std::to_string(j) + "]";
}

struct Cell {
  std::size_t n;
  std::size_t m;
};

std::vector<Cell> size_cells(const Grid& g) {
  std::vector<Cell> out;
  for (std::size_t n : g.n) {
    if (!g.m.empty()) {
      for (std::size_t m : g.m) out.push_back({n, m});
    } else {
      for (double r : g.m_over_n) out.push_back({n, static_cast<std::size_t>(std::llround(r * static_cast<double>(n)))});
    }
  }
  return out;
}

struct DataBundle {
  UnlabeledSet unlabeled;
  LabeledSet labeled;
  std::optional<AffineMap> truth;
  std::optional<ImportanceWeighter> weighter;
};

DataBundle make_data(const ExperimentConfig& c, const Cell& cell, std::uint64_t seed) {
  if (const auto* lg = std::get_if<LinearGaussianSpec>(&c.generator)) {
    LinearGaussianSpec spec = *lg;
    spec.m = cell.m;
    spec.n = cell.n;
    spec.seed = seed;
    auto s = gen_linear_gaussian(spec);
    return {std::move(s.unlabeled), std::move(s.labeled), spec.truth(), std::nullopt};
  }
  if (const auto* dm = std::get_if<DiscreteMismatchSpec>(&c.generator)) {
    auto s = gen_discrete_mismatch(*dm, cell.m, cell.n, seed);
    return {std::move(s.unlabeled), std::move(s.labeled), std::nullopt, std::move(s.weighter)};
  }
  const auto& fd = std::get<FixedData>(c.generator);
  return {fd.unlabeled, fd.labeled, std::nullopt, std::nullopt};
}

LossSpec loss_spec(LossKind kind, const ExperimentConfig& c, const ImportanceWeighter* weighter) {
  LossSpec s;
  s.kind = kind;
  s.alpha = kind == LossKind::curriculum ? c.alpha : 1.0;
  s.weighter = kind == LossKind::dr2 ? weighter : nullptr;
  return s;
}

class RowSink {
 public:
  RowSink(const ExperimentConfig& c, std::vector<ResultRow>& rows) : c_(c), rows_(rows) {}

  void add(std::size_t m, std::size_t n, std::string kind, std::string statistic, double value, double se,
           std::size_t trials, std::uint64_t seed) {
    rows_.push_back({std::string(to_string(c_.experiment)), c_.hash, m, n, std::move(kind), std::move(statistic), value,
                     se, trials, seed});
  }

 private:
  const ExperimentConfig& c_;
  std::vector<ResultRow>& rows_;
};

// TL, SL and DR mean estimates from precomputed predictions.
std::array<double, 3> mean_estimates(const Vector& f_u, const Vector& f_l, const Vector& y) {
  CompensatedSum su, sf, sy, sr;
  for (double v : f_u) su.add(v);
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    sf.add(f_l[i]);
    sy.add(y[i]);
    sr.add(f_l[i] - y[i]);
  }
  const double n = static_cast<double>(y.size());
  const double total = static_cast<double>(f_u.size()) + n;
  const double tl = sy.value() / n;
  const double sl = (su.value() + sy.value()) / total;
  const double dr = (su.value() + sf.value()) / total - sr.value() / n;
  return {tl, sl, dr};
}

// ---------------------------------------------------------------- estimate

void run_estimate(const ExperimentConfig& c, RowSink& out) {
  std::vector<Cell> cells = std::holds_alternative<FixedData>(c.generator)
                                ? std::vector<Cell>{{std::get<FixedData>(c.generator).labeled.size(),
                                                     std::get<FixedData>(c.generator).unlabeled.size()}}
                                : size_cells(c.grid);
  const std::size_t p = c.model.param_dim();
  for (std::size_t ci = 0; ci < cells.size(); ++ci) {
    const std::uint64_t seed = derive_seed(c.seed, ci);
    const DataBundle data = make_data(c, cells[ci], seed);
    const Teacher teacher = make_teacher(c.teacher, data.truth, &data.labeled);
    const ImportanceWeighter fallback = ImportanceWeighter::constant(c.weight);
    const ImportanceWeighter& weighter = data.weighter ? *data.weighter : fallback;
    const std::size_t m = data.unlabeled.size();
    const std::size_t n = data.labeled.size();

    if (const auto* lg = std::get_if<LinearGaussianSpec>(&c.generator)) {
      const Vector star = population_theta_star(*lg, p);
      for (std::size_t j = 0; j < p; ++j) {
        out.add(m, n, "truth", indexed("theta_star", j, p), star[static_cast<Eigen::Index>(j)], 0.0, 1, seed);
      }
    }
    for (LossKind kind : c.losses) {
      const std::string name(to_string(kind));
      const LossProblem problem(loss_spec(kind, c, &weighter), data.unlabeled, data.labeled, teacher, c.model);
      const MinimizeResult fit = minimize_batch(problem, Parameter::zeros(p), c.optimizer);
      for (std::size_t j = 0; j < p; ++j) out.add(m, n, name, indexed("theta_hat", j, p), fit.theta[j], 0.0, 1, seed);
      if (c.model.kind() == ModelKind::squared_error && p == 1) {
        std::optional<double> closed;
        switch (kind) {
          case LossKind::tl: closed = theta_tl(data.labeled); break;
          case LossKind::sl: closed = theta_sl(data.unlabeled, data.labeled, teacher); break;
          case LossKind::dr: closed = theta_dr(data.unlabeled, data.labeled, teacher); break;
          case LossKind::dr2: closed = theta_dr2(data.unlabeled, data.labeled, teacher, weighter); break;
          case LossKind::curriculum: break;
        }
        if (closed) out.add(m, n, name, "theta_closed_form", *closed, 0.0, 1, seed);
      }
      out.add(m, n, name, "loss_at_theta_hat", problem.value(fit.theta), 0.0, 1, seed);
      out.add(m, n, name, "grad_norm", fit.grad_norms.back(), 0.0, 1, seed);
      out.add(m, n, name, "iterations", fit.iterations, 0.0, 1, seed);
      out.add(m, n, name, "converged", fit.converged ? 1.0 : 0.0, 0.0, 1, seed);
      if (c.theta) {
        const Parameter theta(Eigen::Map<const Vector>(c.theta->data(), static_cast<Eigen::Index>(c.theta->size())));
        out.add(m, n, name, "loss_at_theta", problem.value(theta), 0.0, 1, seed);
      }
    }
  }
}

// --------------------------------------------------------------- mse-sweep

struct TeacherVariant {
  TeacherSpec spec;
  std::string suffix;
};

std::vector<TeacherVariant> teacher_variants(const ExperimentConfig& c) {
  if (c.grid.teacher_bias.empty() && c.grid.teacher_noise.empty()) return {{c.teacher, ""}};
  const std::vector<double> biases = c.grid.teacher_bias.empty() ? std::vector<double>{c.teacher.bias} : c.grid.teacher_bias;
  const std::vector<double> noises =
      c.grid.teacher_noise.empty() ? std::vector<double>{c.teacher.noise_sd} : c.grid.teacher_noise;
  std::vector<TeacherVariant> out;
  for (double b : biases) {
    for (double s : noises) {
      TeacherSpec t = c.teacher;
      t.bias = b;
      t.noise_sd = s;
      out.push_back({t, "|b=" + num(b) + "|sf=" + num(s)});
    }
  }
  return out;
}

void run_mse_sweep(const ExperimentConfig& c, const RunOptions& opts, RowSink& out) {
  const auto& base = std::get<LinearGaussianSpec>(c.generator);
  for (LossKind k : c.losses) {
    if (k != LossKind::tl && k != LossKind::sl && k != LossKind::dr) {
      throw ConfigError("mse-sweep compares the TL, SL and DR mean estimators only");
    }
  }
  const auto variants = teacher_variants(c);
  const AffineMap truth = base.truth();
  std::vector<Teacher> teachers;
  for (const auto& v : variants) teachers.push_back(make_teacher(v.spec, truth));
  const double theta_star = base.theta_star();

  std::size_t cell_index = 0;
  for (std::size_t trials : c.grid.trials) {
    for (const Cell& cell : size_cells(c.grid)) {
      const std::uint64_t master = derive_seed(c.seed, cell_index++);
      LinearGaussianSpec spec = base;
      spec.m = cell.m;
      spec.n = cell.n;
      const auto summaries = oracle::mc_statistic(
          [&](std::uint64_t seed) {
            LinearGaussianSpec s = spec;
            s.seed = seed;
            return gen_linear_gaussian(s);
          },
          [&](const SyntheticSample& sample) {
            std::vector<double> est;
            est.reserve(3 * teachers.size());
            for (const Teacher& t : teachers) {
              const auto e = mean_estimates(t.predict_all(sample.unlabeled.covariates()),
                                            t.predict_all(sample.labeled.covariates()), sample.labeled.responses());
              est.insert(est.end(), e.begin(), e.end());
            }
            return est;
          },
          theta_star, trials, master, opts.threads);

      out.add(cell.m, cell.n, "truth", "theta_star", theta_star, 0.0, trials, master);
      for (std::size_t v = 0; v < variants.size(); ++v) {
        const MseBounds bounds = mse_bounds(population_moments(spec, variants[v].spec));
        const std::array<std::pair<LossKind, double>, 3> est{
            {{LossKind::tl, bounds.mse_tl}, {LossKind::sl, bounds.bound_sl}, {LossKind::dr, bounds.bound_dr}}};
        for (std::size_t e = 0; e < 3; ++e) {
          if (std::find(c.losses.begin(), c.losses.end(), est[e].first) == c.losses.end()) continue;
          const auto& s = summaries[3 * v + e];
          const std::string kind(to_string(est[e].first));
          const std::string& sfx = variants[v].suffix;
          out.add(cell.m, cell.n, kind, "mse" + sfx, s.mse, s.mse_se, trials, master);
          out.add(cell.m, cell.n, kind, "mse_bound" + sfx, est[e].second, 0.0, trials, master);
          out.add(cell.m, cell.n, kind, "mean" + sfx, s.mean, s.mean_se, trials, master);
          out.add(cell.m, cell.n, kind, "variance" + sfx, s.variance, s.variance_se, trials, master);
        }
      }
    }
  }
}

// -------------------------------------------------------- gradient-scaling

void run_gradient_scaling(const ExperimentConfig& c, const RunOptions& opts, RowSink& out) {
  const auto& base = std::get<LinearGaussianSpec>(c.generator);
  const std::size_t p = c.model.param_dim();
  const Parameter theta_star(population_theta_star(base, p));
  const Teacher teacher = make_teacher(c.teacher, base.truth());
  const ImportanceWeighter weighter = ImportanceWeighter::constant(c.weight);

  std::size_t cell_index = 0;
  for (std::size_t trials : c.grid.trials) {
    const auto cells = size_cells(c.grid);
    std::vector<std::vector<double>> means(c.losses.size());
    for (const Cell& cell : cells) {
      const std::uint64_t master = derive_seed(c.seed, cell_index++);
      LinearGaussianSpec spec = base;
      spec.m = cell.m;
      spec.n = cell.n;
      const auto summaries = oracle::mc_statistic(
          [&](std::uint64_t seed) {
            LinearGaussianSpec s = spec;
            s.seed = seed;
            return gen_linear_gaussian(s);
          },
          [&](const SyntheticSample& sample) {
            std::vector<double> norms;
            for (LossKind kind : c.losses) {
              const LossProblem problem(loss_spec(kind, c, &weighter), sample.unlabeled, sample.labeled, teacher,
                                        c.model);
              norms.push_back(problem.gradient(theta_star).norm());
            }
            return norms;
          },
          0.0, trials, master, opts.threads);
      for (std::size_t k = 0; k < c.losses.size(); ++k) {
        out.add(cell.m, cell.n, std::string(to_string(c.losses[k])), "mean_grad_norm", summaries[k].mean,
                summaries[k].mean_se, trials, master);
        means[k].push_back(summaries[k].mean);
      }
    }
    if (cells.size() < 3) continue;
    for (std::size_t k = 0; k < c.losses.size(); ++k) {
      const std::string kind(to_string(c.losses[k]));
      std::vector<std::pair<double, double>> vs_n, vs_total;
      for (std::size_t i = 0; i < cells.size(); ++i) {
        vs_n.emplace_back(static_cast<double>(cells[i].n), means[k][i]);
        vs_total.emplace_back(static_cast<double>(cells[i].n + cells[i].m), means[k][i]);
      }
      for (const auto& [label, pts] : {std::pair{"n", &vs_n}, std::pair{"total", &vs_total}}) {
        const auto fit = oracle::fit_scaling(*pts);
        const std::string sfx = std::string("_vs_") + label;
        out.add(0, 0, kind, "slope" + sfx, fit.slope, 0.0, trials, c.seed);
        out.add(0, 0, kind, "intercept" + sfx, fit.intercept, 0.0, trials, c.seed);
        out.add(0, 0, kind, "r2" + sfx, fit.r_squared, 0.0, trials, c.seed);
      }
    }
  }
}

// ---------------------------------------------------------- mismatch-check

// A teacher matching E[Y|x] exactly on the support, when Y|x is deterministic
// and those values are affine in x.
std::optional<Teacher> derive_calibrated_teacher(const DiscreteMismatchSpec& spec) {
  const std::size_t k = spec.support.size();
  const std::size_t d = spec.dim();
  RowMatrix x(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(d));
  Vector y(static_cast<Eigen::Index>(k));
  for (std::size_t i = 0; i < k; ++i) {
    double mass = 0.0, value = 0.0;
    std::size_t atoms = 0;
    for (const auto& o : spec.y_given_x[i]) {
      if (o.prob > 0.0) {
        ++atoms;
        value = o.value;
        mass += o.prob;
      }
    }
    if (atoms != 1) return std::nullopt;
    for (std::size_t j = 0; j < d; ++j) x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = spec.support[i][j];
    y[static_cast<Eigen::Index>(i)] = value;
  }
  Teacher t = Teacher::constant(0.0);
  try {
    t = fit_linear_teacher(LabeledSet(x, y));
  } catch (const DataError&) {
    return std::nullopt;
  }
  for (std::size_t i = 0; i < k; ++i) {
    if (std::abs(t.predict(spec.support[i]) - y[static_cast<Eigen::Index>(i)]) > 1e-12) return std::nullopt;
  }
  return t;
}

void run_mismatch_check(const ExperimentConfig& c, const RunOptions& opts, RowSink& out) {
  const auto& spec = std::get<DiscreteMismatchSpec>(c.generator);
  const Parameter theta(Eigen::Map<const Vector>(c.theta->data(), static_cast<Eigen::Index>(c.theta->size())));
  const ImportanceWeighter exact = spec.exact_weighter();
  const ImportanceWeighter wrong = ImportanceWeighter::constant(c.weight);
  const Teacher teacher = make_teacher(c.teacher, std::nullopt);
  std::optional<Teacher> calibrated =
      c.calibrated_teacher ? std::optional<Teacher>(make_teacher(*c.calibrated_teacher, std::nullopt))
                           : derive_calibrated_teacher(spec);

  const std::string kind = "DR2";
  out.add(0, 0, kind, "target", oracle::exact_expected_loss(spec, theta, c.model), 0.0, 0, c.seed);
  out.add(0, 0, kind, "correct_pi", oracle::exact_expected_dr2(spec, theta, c.model, teacher, exact), 0.0, 0, c.seed);
  if (calibrated) {
    out.add(0, 0, kind, "calibrated_teacher", oracle::exact_expected_dr2(spec, theta, c.model, *calibrated, wrong), 0.0,
            0, c.seed);
  }
  out.add(0, 0, kind, "both_wrong", oracle::exact_expected_dr2(spec, theta, c.model, teacher, wrong), 0.0, 0, c.seed);

  std::size_t cell_index = 0;
  for (std::size_t trials : c.grid.trials) {
    for (const Cell& cell : size_cells(c.grid)) {
      const std::uint64_t master = derive_seed(c.seed, cell_index++);
      const auto summaries = oracle::mc_statistic(
          [&](std::uint64_t seed) { return gen_discrete_mismatch(spec, cell.m, cell.n, seed); },
          [&](const MismatchSample& s) {
            return std::vector<double>{
                loss_dr2(theta, s.unlabeled, s.labeled, teacher, c.model, exact),
                loss_dr2(theta, s.unlabeled, s.labeled, teacher, c.model, wrong),
            };
          },
          0.0, trials, master, opts.threads);
      out.add(cell.m, cell.n, kind, "mc_correct_pi", summaries[0].mean, summaries[0].mean_se, trials, master);
      out.add(cell.m, cell.n, kind, "mc_both_wrong", summaries[1].mean, summaries[1].mean_se, trials, master);
    }
  }
}

// ---------------------------------------------------------- variance-check

void run_variance_check(const ExperimentConfig& c, const RunOptions& opts, RowSink& out) {
  const auto& base = std::get<LinearGaussianSpec>(c.generator);
  const double theta_star = base.theta_star();
  const OlsOptions ols{c.teacher.ridge};
  const ImportanceWeighter unit = ImportanceWeighter::constant(1.0);
  const std::array<const char*, 4> names{"TL", "SL", "DR", "DR_split"};

  std::size_t cell_index = 0;
  for (std::size_t trials : c.grid.trials) {
    for (const Cell& cell : size_cells(c.grid)) {
      const std::uint64_t master = derive_seed(c.seed, cell_index++);
      LinearGaussianSpec spec = base;
      spec.m = cell.m;
      spec.n = cell.n;
      const auto summaries = oracle::mc_statistic(
          [&](std::uint64_t seed) {
            LinearGaussianSpec s = spec;
            s.seed = seed;
            return std::pair{gen_linear_gaussian(s), seed};
          },
          [&](const std::pair<SyntheticSample, std::uint64_t>& trial) {
            const auto& [sample, seed] = trial;
            const Teacher teacher = fit_linear_teacher(sample.labeled, ols);
            const auto e = mean_estimates(teacher.predict_all(sample.unlabeled.covariates()),
                                          teacher.predict_all(sample.labeled.covariates()),
                                          sample.labeled.responses());
            std::vector<double> est(e.begin(), e.end());
            if (cell.n >= 2 && cell.m >= 1) {
              const SplitRecord split = split_labeled(cell.n, derive_seed(seed, 0x5317));
              const Teacher half = fit_linear_teacher(sample.labeled.subset(split.training), ols);
              est.push_back(theta_dr2(sample.unlabeled, sample.labeled.subset(split.estimation), half, unit));
            } else {
              est.push_back(std::numeric_limits<double>::quiet_NaN());
            }
            return est;
          },
          theta_star, trials, master, opts.threads);

      const double n = static_cast<double>(cell.n);
      out.add(cell.m, cell.n, "truth", "theta_star", theta_star, 0.0, trials, master);
      for (std::size_t k = 0; k < names.size(); ++k) {
        const auto& s = summaries[k];
        if (!std::isfinite(s.mean)) continue;
        out.add(cell.m, cell.n, names[k], "mean", s.mean, s.mean_se, trials, master);
        out.add(cell.m, cell.n, names[k], "bias", s.mean - theta_star, s.mean_se, trials, master);
        out.add(cell.m, cell.n, names[k], "scaled_variance", n * s.variance, n * s.variance_se, trials, master);
        out.add(cell.m, cell.n, names[k], "scaled_mse", n * s.mse, n * s.mse_se, trials, master);
      }
      SemiparametricSpec sp{base.beta, base.x_cov, base.noise_sd * base.noise_sd, cell.m, cell.n};
      const AsymptoticVariances av = asymptotic_variances(sp);
      out.add(cell.m, cell.n, "TL", "avar_formula", av.avar_tl, 0.0, trials, master);
      out.add(cell.m, cell.n, "DR", "avar_formula", av.avar_dr, 0.0, trials, master);
    }
  }
}

// -------------------------------------------------------- curriculum-train

void run_curriculum_train(const ExperimentConfig& c, RowSink& out) {
  std::vector<Cell> cells = std::holds_alternative<FixedData>(c.generator)
                                ? std::vector<Cell>{{std::get<FixedData>(c.generator).labeled.size(),
                                                     std::get<FixedData>(c.generator).unlabeled.size()}}
                                : size_cells(c.grid);
  const std::size_t p = c.model.param_dim();
  for (std::size_t ci = 0; ci < cells.size(); ++ci) {
    const std::uint64_t seed = derive_seed(c.seed, ci);
    const DataBundle data = make_data(c, cells[ci], seed);
    const Teacher teacher = make_teacher(c.teacher, data.truth, &data.labeled);
    const std::size_t m = data.unlabeled.size();
    const std::size_t n = data.labeled.size();

    const CurriculumResult run = train_curriculum(data.unlabeled, data.labeled, teacher, c.model, c.schedule, c.optimizer);
    for (std::size_t t = 0; t < run.alphas.size(); ++t) {
      out.add(m, n, "CURR", "alpha[" + std::to_string(t + 1) + "]", run.alphas[t], 0.0, 1, seed);
      out.add(m, n, "CURR", "epoch_loss[" + std::to_string(t + 1) + "]", run.epoch_losses[t], 0.0, 1, seed);
    }
    const MinimizeResult batch = minimize_batch(LossSpec{LossKind::dr}, data.unlabeled, data.labeled, teacher, c.model,
                                                Parameter::zeros(p), c.optimizer);
    double max_diff = 0.0;
    for (std::size_t j = 0; j < p; ++j) {
      out.add(m, n, "CURR", indexed("theta_hat", j, p), run.theta[j], 0.0, 1, seed);
      out.add(m, n, "DR", indexed("theta_dr_batch", j, p), batch.theta[j], 0.0, 1, seed);
      max_diff = std::max(max_diff, std::abs(run.theta[j] - batch.theta[j]));
    }
    if (c.model.kind() == ModelKind::squared_error && p == 1) {
      const double closed = theta_dr(data.unlabeled, data.labeled, teacher);
      out.add(m, n, "DR", "theta_dr_closed_form", closed, 0.0, 1, seed);
      max_diff = std::abs(run.theta[0] - closed);
    }
    out.add(m, n, "CURR", "abs_diff_theta_dr", max_diff, 0.0, 1, seed);
  }
}

// ---------------------------------------------------------- gradient-check

struct RandomInstance {
  UnlabeledSet unlabeled;
  LabeledSet labeled;
  Teacher teacher;
  ImportanceWeighter weighter;
  Parameter theta;
  double alpha;
};

RandomInstance random_instance(std::uint64_t seed, ModelKind kind) {
  CounterRng rng(seed, 0);
  const std::size_t d = 1 + static_cast<std::size_t>(rng.below(3));
  const std::size_t m = 1 + static_cast<std::size_t>(rng.below(20));
  const std::size_t n = 1 + static_cast<std::size_t>(rng.below(20));
  const auto fill = [&](std::size_t rows) {
    RowMatrix x(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(d));
    for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = rng.normal();
    return x;
  };
  RowMatrix xu = fill(m);
  RowMatrix xl = fill(n);
  Vector y(static_cast<Eigen::Index>(n));
  for (auto& v : y) v = kind == ModelKind::logistic ? (rng.uniform() < 0.5 ? 0.0 : 1.0) : 2.0 * rng.normal();
  Vector slope(static_cast<Eigen::Index>(d));
  for (auto& v : slope) v = rng.normal();
  const double intercept = rng.normal();
  std::vector<std::vector<double>> support;
  std::vector<double> weights;
  for (Eigen::Index i = 0; i < xl.rows(); ++i) {
    support.emplace_back(xl.row(i).data(), xl.row(i).data() + d);
    weights.push_back(0.5 + 1.5 * rng.uniform());
  }
  Vector theta(static_cast<Eigen::Index>(d + 1));
  for (auto& v : theta) v = rng.normal();
  const double alpha = rng.uniform();
  return {UnlabeledSet(std::move(xu)),
          LabeledSet(std::move(xl), std::move(y)),
          Teacher::affine(intercept, std::move(slope)),
          ImportanceWeighter::table(std::move(support), std::move(weights)),
          Parameter(std::move(theta)),
          alpha};
}

void run_gradient_check(const ExperimentConfig& c, RowSink& out) {
  std::vector<LossKind> kinds = c.losses;
  const std::size_t count = c.grid.trials.front();
  for (ModelKind mk : {ModelKind::squared_error, ModelKind::logistic}) {
    const std::string model_name = mk == ModelKind::squared_error ? "squared_error" : "logistic";
    for (std::size_t k = 0; k < kinds.size(); ++k) {
      double worst = 0.0;
      CompensatedSum total;
      for (std::size_t i = 0; i < count; ++i) {
        const RandomInstance inst = random_instance(derive_seed(c.seed, i), mk);
        const LossModel model(mk, inst.theta.dim());
        LossSpec spec;
        spec.kind = kinds[k];
        spec.alpha = inst.alpha;
        spec.weighter = kinds[k] == LossKind::dr2 ? &inst.weighter : nullptr;
        const LossProblem problem(spec, inst.unlabeled, inst.labeled, inst.teacher, model);
        const Vector analytic = grad_loss(spec, inst.theta, inst.unlabeled, inst.labeled, inst.teacher, model);
        const Vector numeric = oracle::fd_gradient([&](const Parameter& t) { return problem.value(t); }, inst.theta);
        const double err = oracle::relative_error(analytic, numeric);
        worst = std::max(worst, err);
        total.add(err);
      }
      const std::string kind(to_string(kinds[k]));
      out.add(0, 0, kind, "max_rel_error|" + model_name, worst, 0.0, count, c.seed);
      out.add(0, 0, kind, "mean_rel_error|" + model_name, total.value() / static_cast<double>(count), 0.0, count, c.seed);
    }
  }
}

}  // namespace

std::vector<ResultRow> run_experiment(const ExperimentConfig& config, const RunOptions& options) {
  std::vector<ResultRow> rows;
  RowSink sink(config, rows);
  switch (config.experiment) {
    case Experiment::estimate: run_estimate(config, sink); break;
    case Experiment::mse_sweep: run_mse_sweep(config, options, sink); break;
    case Experiment::gradient_scaling: run_gradient_scaling(config, options, sink); break;
    case Experiment::mismatch_check: run_mismatch_check(config, options, sink); break;
    case Experiment::variance_check: run_variance_check(config, options, sink); break;
    case Experiment::curriculum_train: run_curriculum_train(config, sink); break;
    case Experiment::gradient_check: run_gradient_check(config, sink); break;
  }
  return rows;
}

}  // namespace drst::harness
