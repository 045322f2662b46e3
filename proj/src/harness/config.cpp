#include <algorithm>
#include <fstream>
#include <sstream>
#include <string>

#include "drst/csv_io.hpp"
#include "drst/errors.hpp"
#include "drst/harness.hpp"
#include "drst/rng.hpp"

namespace drst::harness {

using nlohmann::json;

namespace {

void check_keys(const json& obj, std::initializer_list<std::string_view> allowed, const std::string& where) {
  if (!obj.is_object()) throw ConfigError(where + " must be an object");
  for (const auto& [key, _] : obj.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      throw ConfigError("unknown key '" + key + "' in " + where);
    }
  }
}

const json& require(const json& obj, const char* key, const std::string& where) {
  if (!obj.contains(key)) throw ConfigError("missing required key '" + std::string(key) + "' in " + where);
  return obj.at(key);
}

double as_double(const json& v, const std::string& what) {
  if (!v.is_number()) throw ConfigError(what + " must be a number");
  return v.get<double>();
}

std::uint64_t as_uint(const json& v, const std::string& what) {
  if (!v.is_number_integer() || (v.is_number_integer() && !v.is_number_unsigned() && v.get<std::int64_t>() < 0)) {
    throw ConfigError(what + " must be a non-negative integer");
  }
  return v.get<std::uint64_t>();
}

std::string as_string(const json& v, const std::string& what) {
  if (!v.is_string()) throw ConfigError(what + " must be a string");
  return v.get<std::string>();
}

std::vector<double> as_doubles(const json& v, const std::string& what) {
  if (!v.is_array()) throw ConfigError(what + " must be an array of numbers");
  std::vector<double> out;
  for (const auto& e : v) out.push_back(as_double(e, what));
  return out;
}

Vector as_vector(const json& v, const std::string& what) {
  const auto xs = as_doubles(v, what);
  return Eigen::Map<const Vector>(xs.data(), static_cast<Eigen::Index>(xs.size()));
}

RowMatrix as_matrix(const json& v, const std::string& what) {
  if (!v.is_array() || v.empty()) throw ConfigError(what + " must be a non-empty array of rows");
  const std::size_t cols = v.front().is_array() ? v.front().size() : 0;
  if (cols == 0) throw ConfigError(what + " rows must be non-empty arrays");
  RowMatrix out(static_cast<Eigen::Index>(v.size()), static_cast<Eigen::Index>(cols));
  for (std::size_t i = 0; i < v.size(); ++i) {
    const auto row = as_doubles(v[i], what);
    if (row.size() != cols) throw ConfigError(what + " rows have different lengths");
    for (std::size_t j = 0; j < cols; ++j) out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = row[j];
  }
  return out;
}

std::vector<std::size_t> as_sizes(const json& v, const std::string& what) {
  if (!v.is_array()) throw ConfigError(what + " must be an array of integers");
  std::vector<std::size_t> out;
  for (const auto& e : v) out.push_back(static_cast<std::size_t>(as_uint(e, what)));
  return out;
}

template <class T>
std::vector<T> nonempty(std::vector<T> v, const std::string& what) {
  if (v.empty()) throw ConfigError("grid " + what + " must be non-empty");
  return v;
}

GeneratorConfig parse_generator(const json& g, const std::filesystem::path& base_dir) {
  const std::string type = as_string(require(g, "type", "generator"), "generator.type");
  if (type == "linear_gaussian") {
    check_keys(g, {"type", "beta", "noise_sd", "x_mean", "x_cov"}, "generator");
    LinearGaussianSpec s;
    s.beta = as_vector(require(g, "beta", "generator"), "generator.beta");
    if (s.beta.size() < 2) throw ConfigError("generator.beta needs an intercept and at least one slope");
    const auto d = s.beta.size() - 1;
    s.noise_sd = g.contains("noise_sd") ? as_double(g.at("noise_sd"), "generator.noise_sd") : 0.0;
    s.x_mean = g.contains("x_mean") ? as_vector(g.at("x_mean"), "generator.x_mean") : Vector::Zero(d);
    s.x_cov = g.contains("x_cov") ? Matrix(as_matrix(g.at("x_cov"), "generator.x_cov")) : Matrix::Identity(d, d);
    s.validate();
    return s;
  }
  if (type == "discrete_mismatch") {
    check_keys(g, {"type", "support", "p_x", "q_x", "y_given_x"}, "generator");
    DiscreteMismatchSpec s;
    const RowMatrix support = as_matrix(require(g, "support", "generator"), "generator.support");
    for (Eigen::Index i = 0; i < support.rows(); ++i) {
      s.support.emplace_back(support.row(i).data(), support.row(i).data() + support.cols());
    }
    s.p_x = as_doubles(require(g, "p_x", "generator"), "generator.p_x");
    s.q_x = as_doubles(require(g, "q_x", "generator"), "generator.q_x");
    const json& cond = require(g, "y_given_x", "generator");
    if (!cond.is_array()) throw ConfigError("generator.y_given_x must be an array");
    for (const auto& per_point : cond) {
      if (!per_point.is_array()) throw ConfigError("generator.y_given_x entries must be arrays of [value, prob]");
      std::vector<ResponseOutcome> outcomes;
      for (const auto& pair : per_point) {
        const auto vp = as_doubles(pair, "generator.y_given_x outcome");
        if (vp.size() != 2) throw ConfigError("generator.y_given_x outcomes must be [value, prob]");
        outcomes.push_back({vp[0], vp[1]});
      }
      s.y_given_x.push_back(std::move(outcomes));
    }
    s.validate();
    return s;
  }
  if (type == "inline") {
    check_keys(g, {"type", "unlabeled", "labeled"}, "generator");
    const json& lab = require(g, "labeled", "generator");
    check_keys(lab, {"x", "y"}, "generator.labeled");
    LabeledSet labeled(as_matrix(require(lab, "x", "generator.labeled"), "generator.labeled.x"),
                       as_vector(require(lab, "y", "generator.labeled"), "generator.labeled.y"));
    const json& unl = require(g, "unlabeled", "generator");
    UnlabeledSet unlabeled = unl.is_array() && unl.empty() ? UnlabeledSet(labeled.dim())
                                                           : UnlabeledSet(as_matrix(unl, "generator.unlabeled"));
    return FixedData{std::move(unlabeled), std::move(labeled)};
  }
  if (type == "csv") {
    check_keys(g, {"type", "unlabeled", "labeled"}, "generator");
    const auto resolve = [&](const json& v, const char* what) {
      std::filesystem::path p = as_string(v, what);
      return p.is_absolute() ? p : base_dir / p;
    };
    return FixedData{load_unlabeled_csv(resolve(require(g, "unlabeled", "generator"), "generator.unlabeled")),
                     load_labeled_csv(resolve(require(g, "labeled", "generator"), "generator.labeled"))};
  }
  throw ConfigError("unknown generator type '" + type + "'");
}

TeacherSpec parse_teacher(const json& t, const std::string& where) {
  check_keys(t, {"kind", "bias", "noise_sd", "seed", "value", "intercept", "slope", "ridge"}, where);
  TeacherSpec s;
  s.kind = teacher_kind_from_string(as_string(require(t, "kind", where), where + ".kind"));
  if (t.contains("bias")) s.bias = as_double(t.at("bias"), where + ".bias");
  if (t.contains("noise_sd")) s.noise_sd = as_double(t.at("noise_sd"), where + ".noise_sd");
  if (t.contains("seed")) s.seed = as_uint(t.at("seed"), where + ".seed");
  if (t.contains("value")) s.constant = as_double(t.at("value"), where + ".value");
  if (t.contains("intercept")) s.intercept = as_double(t.at("intercept"), where + ".intercept");
  if (t.contains("slope")) s.slope = as_vector(t.at("slope"), where + ".slope");
  if (t.contains("ridge")) s.ridge = as_double(t.at("ridge"), where + ".ridge");
  if (s.noise_sd < 0.0) throw ConfigError(where + ".noise_sd must be >= 0");
  if (s.ridge < 0.0) throw ConfigError(where + ".ridge must be >= 0");
  return s;
}

LossModel parse_model(const json& m) {
  check_keys(m, {"kind", "p"}, "model");
  const std::string kind = m.contains("kind") ? as_string(m.at("kind"), "model.kind") : "squared_error";
  const std::size_t p = m.contains("p") ? static_cast<std::size_t>(as_uint(m.at("p"), "model.p")) : 1;
  if (kind == "squared_error") return LossModel::squared_error(p);
  if (kind == "logistic") return LossModel::logistic(p);
  throw ConfigError("unknown model kind '" + kind + "'");
}

CurriculumSchedule parse_schedule(const json& s) {
  check_keys(s, {"kind", "total_epochs", "alpha"}, "schedule");
  CurriculumSchedule out;
  out.kind = schedule_kind_from_string(as_string(require(s, "kind", "schedule"), "schedule.kind"));
  out.total_epochs = static_cast<int>(as_uint(require(s, "total_epochs", "schedule"), "schedule.total_epochs"));
  if (out.total_epochs < 1) throw ConfigError("schedule.total_epochs must be >= 1");
  if (s.contains("alpha")) out.alpha = as_double(s.at("alpha"), "schedule.alpha");
  if (!(out.alpha >= 0.0 && out.alpha <= 1.0)) throw ConfigError("schedule.alpha must lie in [0, 1]");
  return out;
}

OptimSettings parse_optimizer(const json& o) {
  check_keys(o, {"step_rule", "step", "shrink", "armijo", "max_iters", "grad_tol", "batch_size", "labeled_fraction",
                 "decay", "stochastic_step"},
             "optimizer");
  OptimSettings s;
  if (o.contains("step_rule")) {
    const std::string rule = as_string(o.at("step_rule"), "optimizer.step_rule");
    if (rule == "fixed") {
      s.step.kind = StepRule::Kind::fixed;
    } else if (rule != "backtracking") {
      throw ConfigError("optimizer.step_rule must be 'fixed' or 'backtracking'");
    }
  }
  if (o.contains("step")) s.step.initial_step = as_double(o.at("step"), "optimizer.step");
  if (o.contains("shrink")) s.step.shrink = as_double(o.at("shrink"), "optimizer.shrink");
  if (o.contains("armijo")) s.step.armijo = as_double(o.at("armijo"), "optimizer.armijo");
  if (o.contains("max_iters")) s.max_iters = static_cast<int>(as_uint(o.at("max_iters"), "optimizer.max_iters"));
  if (o.contains("grad_tol")) s.grad_tol = as_double(o.at("grad_tol"), "optimizer.grad_tol");
  if (o.contains("batch_size")) s.batch_size = static_cast<std::size_t>(as_uint(o.at("batch_size"), "optimizer.batch_size"));
  if (o.contains("labeled_fraction")) s.labeled_fraction = as_double(o.at("labeled_fraction"), "optimizer.labeled_fraction");
  if (o.contains("decay")) {
    const std::string d = as_string(o.at("decay"), "optimizer.decay");
    if (d == "none") {
      s.decay = StepDecay::none;
    } else if (d != "harmonic") {
      throw ConfigError("optimizer.decay must be 'none' or 'harmonic'");
    }
  }
  if (o.contains("stochastic_step")) s.stochastic_step = as_double(o.at("stochastic_step"), "optimizer.stochastic_step");
  return s;
}

Grid parse_grid(const json& g) {
  check_keys(g, {"m", "m_over_n", "n", "trials", "teacher_bias", "teacher_noise"}, "grid");
  Grid out;
  if (g.contains("m")) out.m = nonempty(as_sizes(g.at("m"), "grid.m"), "m");
  if (g.contains("m_over_n")) out.m_over_n = nonempty(as_doubles(g.at("m_over_n"), "grid.m_over_n"), "m_over_n");
  if (g.contains("n")) out.n = nonempty(as_sizes(g.at("n"), "grid.n"), "n");
  if (g.contains("trials")) out.trials = nonempty(as_sizes(g.at("trials"), "grid.trials"), "trials");
  if (g.contains("teacher_bias")) out.teacher_bias = nonempty(as_doubles(g.at("teacher_bias"), "grid.teacher_bias"), "teacher_bias");
  if (g.contains("teacher_noise")) {
    out.teacher_noise = nonempty(as_doubles(g.at("teacher_noise"), "grid.teacher_noise"), "teacher_noise");
  }
  if (!out.m.empty() && !out.m_over_n.empty()) throw ConfigError("grid may set m or m_over_n, not both");
  for (double r : out.m_over_n) {
    if (!(r >= 0.0)) throw ConfigError("grid.m_over_n entries must be >= 0");
  }
  for (std::size_t n : out.n) {
    if (n < 1) throw ConfigError("grid.n entries must be >= 1");
  }
  for (std::size_t t : out.trials) {
    if (t < 2) throw ConfigError("grid.trials entries must be >= 2");
  }
  for (double s : out.teacher_noise) {
    if (!(s >= 0.0)) throw ConfigError("grid.teacher_noise entries must be >= 0");
  }
  return out;
}

bool is_lg(const GeneratorConfig& g) { return std::holds_alternative<LinearGaussianSpec>(g); }
bool is_discrete(const GeneratorConfig& g) { return std::holds_alternative<DiscreteMismatchSpec>(g); }
bool is_fixed(const GeneratorConfig& g) { return std::holds_alternative<FixedData>(g); }

void require_sizes(const ExperimentConfig& c, bool trials) {
  if (c.grid.n.empty()) throw ConfigError("grid.n is required for this experiment");
  if (c.grid.m.empty() && c.grid.m_over_n.empty()) throw ConfigError("grid.m or grid.m_over_n is required");
  if (trials && c.grid.trials.empty()) throw ConfigError("grid.trials is required for this experiment");
}

void validate_for_experiment(const ExperimentConfig& c, const json& doc) {
  using E = Experiment;
  const bool has_teacher = doc.contains("teacher");
  switch (c.experiment) {
    case E::estimate:
    case E::curriculum_train:
      if (std::holds_alternative<std::monostate>(c.generator)) throw ConfigError("generator is required");
      if (!is_fixed(c.generator)) require_sizes(c, false);
      if (!has_teacher) throw ConfigError("teacher is required");
      break;
    case E::mse_sweep:
    case E::gradient_scaling:
      if (!is_lg(c.generator)) throw ConfigError(std::string(to_string(c.experiment)) + " needs a linear_gaussian generator");
      require_sizes(c, true);
      if (!has_teacher) throw ConfigError("teacher is required");
      if (c.teacher.kind == TeacherSpec::Kind::ols) {
        throw ConfigError(std::string(to_string(c.experiment)) + " needs a teacher fixed independently of the data");
      }
      if (c.model.kind() != ModelKind::squared_error) throw ConfigError("this experiment needs the squared_error model");
      if (c.experiment == E::mse_sweep) {
        if (c.model.param_dim() != 1) throw ConfigError("mse-sweep estimates a mean: model.p must be 1");
        if ((!c.grid.teacher_bias.empty() || !c.grid.teacher_noise.empty()) &&
            c.teacher.kind != TeacherSpec::Kind::noisy) {
          throw ConfigError("grid.teacher_bias / grid.teacher_noise need a 'noisy' teacher");
        }
      }
      break;
    case E::mismatch_check:
      if (!is_discrete(c.generator)) throw ConfigError("mismatch-check needs a discrete_mismatch generator");
      if (!c.theta) throw ConfigError("mismatch-check needs theta");
      if (!has_teacher) throw ConfigError("teacher is required");
      if (!c.grid.trials.empty()) require_sizes(c, true);
      break;
    case E::variance_check:
      if (!is_lg(c.generator)) throw ConfigError("variance-check needs a linear_gaussian generator");
      require_sizes(c, true);
      if (!has_teacher || c.teacher.kind != TeacherSpec::Kind::ols) throw ConfigError("variance-check needs an ols teacher");
      if (c.model.kind() != ModelKind::squared_error || c.model.param_dim() != 1) {
        throw ConfigError("variance-check estimates a mean: squared_error model with p = 1");
      }
      break;
    case E::gradient_check:
      if (!std::holds_alternative<std::monostate>(c.generator)) {
        throw ConfigError("gradient-check draws its own random instances; remove 'generator'");
      }
      if (c.grid.trials.empty()) throw ConfigError("grid.trials (instances per loss kind) is required");
      break;
  }
  if (c.theta && c.theta->size() != c.model.param_dim()) throw ConfigError("theta length must equal model.p");
  std::size_t dim = 0;
  if (const auto* lg = std::get_if<LinearGaussianSpec>(&c.generator)) dim = lg->dim();
  if (const auto* dm = std::get_if<DiscreteMismatchSpec>(&c.generator)) dim = dm->dim();
  if (const auto* fd = std::get_if<FixedData>(&c.generator)) dim = fd->labeled.dim();
  if (dim > 0) c.model.check_compatible(dim);
}

}  // namespace

std::string_view to_string(Experiment e) {
  switch (e) {
    case Experiment::estimate: return "estimate";
    case Experiment::mse_sweep: return "mse-sweep";
    case Experiment::gradient_scaling: return "gradient-scaling";
    case Experiment::mismatch_check: return "mismatch-check";
    case Experiment::variance_check: return "variance-check";
    case Experiment::curriculum_train: return "curriculum-train";
    case Experiment::gradient_check: return "gradient-check";
  }
  return "?";
}

Experiment experiment_from_string(std::string_view name) {
  for (auto e : {Experiment::estimate, Experiment::mse_sweep, Experiment::gradient_scaling, Experiment::mismatch_check,
                 Experiment::variance_check, Experiment::curriculum_train, Experiment::gradient_check}) {
    if (to_string(e) == name) return e;
  }
  throw ConfigError("unknown experiment '" + std::string(name) + "'");
}

std::string config_hash(const json& canonical) {
  const std::string bytes = canonical.dump();
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001B3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

ExperimentConfig parse_config(const json& input, std::optional<std::string_view> experiment_override,
                              std::optional<std::uint64_t> seed_override, const std::filesystem::path& base_dir) {
  if (!input.is_object()) throw ConfigError("config must be a single object");
  json doc = input;
  if (experiment_override) {
    if (doc.contains("experiment") && doc.at("experiment") != std::string(*experiment_override)) {
      throw ConfigError("config experiment '" + doc.at("experiment").dump() + "' does not match command '" +
                        std::string(*experiment_override) + "'");
    }
    doc["experiment"] = std::string(*experiment_override);
  }
  if (seed_override) doc["seed"] = *seed_override;

  check_keys(doc, {"experiment", "seed", "output", "generator", "teacher", "calibrated_teacher", "model", "losses",
                   "grid", "schedule", "optimizer", "theta", "weight", "alpha"},
             "config");
  try {
    ExperimentConfig c;
    c.experiment = experiment_from_string(as_string(require(doc, "experiment", "config"), "experiment"));
    c.seed = as_uint(require(doc, "seed", "config"), "seed");
    if (doc.contains("output")) c.output = as_string(doc.at("output"), "output");
    if (doc.contains("generator")) c.generator = parse_generator(doc.at("generator"), base_dir);
    if (doc.contains("teacher")) c.teacher = parse_teacher(doc.at("teacher"), "teacher");
    if (doc.contains("calibrated_teacher")) c.calibrated_teacher = parse_teacher(doc.at("calibrated_teacher"), "calibrated_teacher");
    if (doc.contains("model")) c.model = parse_model(doc.at("model"));
    if (doc.contains("losses")) {
      const json& ls = doc.at("losses");
      if (!ls.is_array() || ls.empty()) throw ConfigError("losses must be a non-empty array");
      for (const auto& l : ls) c.losses.push_back(loss_kind_from_string(as_string(l, "losses entry")));
    } else {
      c.losses = {LossKind::tl, LossKind::sl, LossKind::dr};
    }
    if (doc.contains("grid")) c.grid = parse_grid(doc.at("grid"));
    if (doc.contains("schedule")) c.schedule = parse_schedule(doc.at("schedule"));
    if (doc.contains("optimizer")) c.optimizer = parse_optimizer(doc.at("optimizer"));
    c.optimizer.seed = derive_seed(c.seed, 0x0971);
    c.optimizer.validate();
    if (doc.contains("theta")) c.theta = as_doubles(doc.at("theta"), "theta");
    if (doc.contains("weight")) c.weight = as_double(doc.at("weight"), "weight");
    if (!(c.weight > 0.0)) throw ConfigError("weight must be > 0");
    if (doc.contains("alpha")) c.alpha = as_double(doc.at("alpha"), "alpha");
    if (!(c.alpha >= 0.0 && c.alpha <= 1.0)) throw ConfigError("alpha must lie in [0, 1]");

    validate_for_experiment(c, doc);
    c.canonical = std::move(doc);
    c.hash = config_hash(c.canonical);
    return c;
  } catch (const DataError& e) {
    throw ConfigError(e.what());
  }
}

ExperimentConfig parse_config_text(std::string_view text, std::optional<std::string_view> experiment_override,
                                   std::optional<std::uint64_t> seed_override, const std::filesystem::path& base_dir) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  return parse_config(doc, experiment_override, seed_override, base_dir);
}

}  // namespace drst::harness
