#include "drst/losses.hpp"

#include <cmath>
#include <string>

#include "drst/errors.hpp"
#include "drst/numeric.hpp"

namespace drst {

std::string_view to_string(LossKind kind) {
  switch (kind) {
    case LossKind::tl: return "TL";
    case LossKind::sl: return "SL";
    case LossKind::dr: return "DR";
    case LossKind::dr2: return "DR2";
    case LossKind::curriculum: return "CURR";
  }
  return "?";
}

LossKind loss_kind_from_string(std::string_view name) {
  if (name == "TL") return LossKind::tl;
  if (name == "SL") return LossKind::sl;
  if (name == "DR") return LossKind::dr;
  if (name == "DR2") return LossKind::dr2;
  if (name == "CURR") return LossKind::curriculum;
  throw DataError("unknown loss kind '" + std::string(name) + "' (expected TL, SL, DR, DR2 or CURR)");
}

LossProblem::LossProblem(LossSpec spec, const UnlabeledSet& unlabeled, const LabeledSet& labeled,
                         const Teacher& teacher, const LossModel& model)
    : spec_(spec), model_(&model) {
  const DatasetView view = validate_datasets(unlabeled, labeled);
  model.check_compatible(view.dim);

  const bool needs_pseudo = spec_.kind != LossKind::tl;
  unlabeled_.reserve(view.m);
  if (needs_pseudo) {
    for (std::size_t i = 0; i < view.m; ++i) {
      const Covariate x = unlabeled.covariate(i);
      unlabeled_.push_back({x, teacher.predict(x)});
    }
  }
  labeled_.reserve(view.n);
  for (std::size_t i = 0; i < view.n; ++i) {
    const Covariate x = labeled.covariate(i);
    double weight = 1.0;
    if (spec_.kind == LossKind::dr2 && spec_.weighter != nullptr) {
      const double pi = spec_.weighter->weight(x);
      if (!(pi >= spec_.weight_floor)) {
        throw DataError("importance weight " + std::to_string(pi) + " below floor at labeled sample " +
                        std::to_string(i));
      }
      weight = pi;
    }
    labeled_.push_back({x, needs_pseudo ? teacher.predict(x) : 0.0, labeled.response(i), weight});
  }
  // TL ignores the unlabeled pool but keeps its size for reporting.
  if (!needs_pseudo) {
    for (std::size_t i = 0; i < view.m; ++i) unlabeled_.push_back({unlabeled.covariate(i), 0.0});
  }
  check_structure();
}

void LossProblem::check_structure() const {
  if (labeled_.empty()) throw DataError("empty labeled set");
  if (spec_.kind == LossKind::dr2 && unlabeled_.empty()) {
    throw DataError("DR2 loss needs at least one unlabeled sample (m >= 1)");
  }
  if (spec_.kind == LossKind::curriculum && !(spec_.alpha >= 0.0 && spec_.alpha <= 1.0)) {
    throw DataError("curriculum alpha must lie in [0, 1]");
  }
}

LossProblem LossProblem::subsample(std::span<const std::size_t> unlabeled_idx,
                                   std::span<const std::size_t> labeled_idx) const {
  LossProblem sub(spec_, *model_);
  sub.unlabeled_.reserve(unlabeled_idx.size());
  for (std::size_t i : unlabeled_idx) sub.unlabeled_.push_back(unlabeled_.at(i));
  sub.labeled_.reserve(labeled_idx.size());
  for (std::size_t i : labeled_idx) sub.labeled_.push_back(labeled_.at(i));
  sub.check_structure();
  return sub;
}

LossProblem LossProblem::with_alpha(double alpha) const {
  LossProblem out = *this;
  out.spec_.alpha = alpha;
  out.check_structure();
  return out;
}

double LossProblem::value(const Parameter& theta) const {
  model_->check_parameter(theta);
  const Vector& t = theta.values();
  const double m = static_cast<double>(unlabeled_.size());
  const double n = static_cast<double>(labeled_.size());

  CompensatedSum s_u, s_lf, s_ly;
  if (spec_.kind != LossKind::tl) {
    for (const auto& u : unlabeled_) s_u.add(model_->value_from_score(model_->score(t, u.x), u.pseudo));
  }
  for (const auto& l : labeled_) {
    const double z = model_->score(t, l.x);
    s_ly.add(l.weight * model_->value_from_score(z, l.label));
    if (spec_.kind != LossKind::tl && spec_.kind != LossKind::sl) {
      s_lf.add(l.weight * model_->value_from_score(z, l.pseudo));
    }
  }

  const double u = s_u.value();
  const double lf = s_lf.value();
  const double ly = s_ly.value();
  double out = 0.0;
  switch (spec_.kind) {
    case LossKind::tl:
      out = ly / n;
      break;
    case LossKind::sl:
      out = (u + ly) / (m + n);
      break;
    case LossKind::dr:
    case LossKind::curriculum: {
      const double alpha = spec_.kind == LossKind::dr ? 1.0 : spec_.alpha;
      out = (u + lf) / (m + n) - alpha * (lf / n - ly / n);
      break;
    }
    case LossKind::dr2:
      out = u / m - (lf / n - ly / n);
      break;
  }
  return out;
}

Vector LossProblem::gradient(const Parameter& theta) const {
  model_->check_parameter(theta);
  const Vector& t = theta.values();
  const auto p = static_cast<Eigen::Index>(model_->param_dim());
  const double m = static_cast<double>(unlabeled_.size());
  const double n = static_cast<double>(labeled_.size());

  CompensatedVectorSum g_u(p), g_lf(p), g_ly(p);
  auto add = [&](CompensatedVectorSum& acc, Covariate x, double s) {
    for (Eigen::Index j = 0; j < p; ++j) acc.add(j, s * model_->feature(x, static_cast<std::size_t>(j)));
  };
  if (spec_.kind != LossKind::tl) {
    for (const auto& u : unlabeled_) add(g_u, u.x, model_->slope_from_score(model_->score(t, u.x), u.pseudo));
  }
  for (const auto& l : labeled_) {
    const double z = model_->score(t, l.x);
    add(g_ly, l.x, l.weight * model_->slope_from_score(z, l.label));
    if (spec_.kind != LossKind::tl && spec_.kind != LossKind::sl) {
      add(g_lf, l.x, l.weight * model_->slope_from_score(z, l.pseudo));
    }
  }

  const Vector u = g_u.value();
  const Vector lf = g_lf.value();
  const Vector ly = g_ly.value();
  Vector out;
  switch (spec_.kind) {
    case LossKind::tl:
      out = ly / n;
      break;
    case LossKind::sl:
      out = (u + ly) / (m + n);
      break;
    case LossKind::dr:
    case LossKind::curriculum: {
      const double alpha = spec_.kind == LossKind::dr ? 1.0 : spec_.alpha;
      out = (u + lf) / (m + n) - alpha * (lf / n - ly / n);
      break;
    }
    case LossKind::dr2:
      out = u / m - (lf / n - ly / n);
      break;
  }
  return out;
}

double loss_tl(const Parameter& theta, const LabeledSet& labeled, const LossModel& model) {
  const UnlabeledSet none(labeled.dim());
  return LossProblem({LossKind::tl}, none, labeled, Teacher::constant(0.0), model).value(theta);
}

double loss_sl(const Parameter& theta, const UnlabeledSet& unlabeled, const LabeledSet& labeled,
               const Teacher& teacher, const LossModel& model) {
  return LossProblem({LossKind::sl}, unlabeled, labeled, teacher, model).value(theta);
}

double loss_dr(const Parameter& theta, const UnlabeledSet& unlabeled, const LabeledSet& labeled,
               const Teacher& teacher, const LossModel& model) {
  return LossProblem({LossKind::dr}, unlabeled, labeled, teacher, model).value(theta);
}

double loss_dr2(const Parameter& theta, const UnlabeledSet& unlabeled, const LabeledSet& labeled,
                const Teacher& teacher, const LossModel& model, const ImportanceWeighter& weighter,
                double weight_floor) {
  LossSpec spec{LossKind::dr2, 1.0, &weighter, weight_floor};
  return LossProblem(spec, unlabeled, labeled, teacher, model).value(theta);
}

double curriculum_loss(const Parameter& theta, const UnlabeledSet& unlabeled, const LabeledSet& labeled,
                       const Teacher& teacher, const LossModel& model, double alpha) {
  LossSpec spec{LossKind::curriculum, alpha};
  return LossProblem(spec, unlabeled, labeled, teacher, model).value(theta);
}

Vector grad_loss(const LossSpec& spec, const Parameter& theta, const UnlabeledSet& unlabeled,
                 const LabeledSet& labeled, const Teacher& teacher, const LossModel& model) {
  return LossProblem(spec, unlabeled, labeled, teacher, model).gradient(theta);
}

std::string_view to_string(CurriculumSchedule::Kind kind) {
  switch (kind) {
    case CurriculumSchedule::Kind::constant: return "constant";
    case CurriculumSchedule::Kind::linear: return "linear";
    case CurriculumSchedule::Kind::quadratic: return "quadratic";
    case CurriculumSchedule::Kind::final_epoch_step: return "final_epoch_step";
  }
  return "?";
}

CurriculumSchedule::Kind schedule_kind_from_string(std::string_view name) {
  using K = CurriculumSchedule::Kind;
  if (name == "constant") return K::constant;
  if (name == "linear") return K::linear;
  if (name == "quadratic") return K::quadratic;
  if (name == "final_epoch_step") return K::final_epoch_step;
  throw DataError("unknown schedule kind '" + std::string(name) + "'");
}

double alpha_at(const CurriculumSchedule& schedule, int epoch) {
  if (schedule.total_epochs < 1) throw DataError("schedule needs total_epochs >= 1");
  if (epoch < 0 || epoch > schedule.total_epochs) {
    throw DataError("epoch " + std::to_string(epoch) + " outside [0, " + std::to_string(schedule.total_epochs) +
                    "]");
  }
  const double r = static_cast<double>(epoch) / static_cast<double>(schedule.total_epochs);
  switch (schedule.kind) {
    case CurriculumSchedule::Kind::constant:
      if (!(schedule.alpha >= 0.0 && schedule.alpha <= 1.0)) throw DataError("constant alpha must lie in [0, 1]");
      return schedule.alpha;
    case CurriculumSchedule::Kind::linear: return r;
    case CurriculumSchedule::Kind::quadratic: return r * r;
    case CurriculumSchedule::Kind::final_epoch_step: return epoch == schedule.total_epochs ? 1.0 : 0.0;
  }
  return r;
}

}  // namespace drst
