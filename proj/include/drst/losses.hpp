#pragma once

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include "drst/data_model.hpp"

namespace drst {

// TL: labeled-only.  SL: pooled self-training.  DR: doubly robust.
// DR2: importance-weighted doubly robust for covariate shift.
// curriculum: DR with the labeled correction scaled by alpha.
enum class LossKind { tl, sl, dr, dr2, curriculum };

std::string_view to_string(LossKind kind);
LossKind loss_kind_from_string(std::string_view name);

inline constexpr double kDefaultWeightFloor = 1e-12;

struct LossSpec {
  LossKind kind = LossKind::dr;
  double alpha = 1.0;                             // curriculum only
  const ImportanceWeighter* weighter = nullptr;   // dr2 only; null means pi = 1
  double weight_floor = kDefaultWeightFloor;      // dr2: pi(x) below this is an error
};

// A loss bound to its data. Teacher predictions and inverse importance weights
// are computed once at construction; the datasets must outlive the problem.
class LossProblem {
 public:
  LossProblem(LossSpec spec, const UnlabeledSet& unlabeled, const LabeledSet& labeled,
              const Teacher& teacher, const LossModel& model);

  double value(const Parameter& theta) const;
  Vector gradient(const Parameter& theta) const;

  // Same loss on a sub-sample (indices into the unlabeled and labeled sets).
  // Normalizers use the sub-sample sizes.
  LossProblem subsample(std::span<const std::size_t> unlabeled_idx,
                        std::span<const std::size_t> labeled_idx) const;
  LossProblem with_alpha(double alpha) const;

  const LossSpec& spec() const { return spec_; }
  const LossModel& model() const { return *model_; }
  std::size_t m() const { return unlabeled_.size(); }
  std::size_t n() const { return labeled_.size(); }

 private:
  struct UnlabeledTerm {
    Covariate x;
    double pseudo;
  };
  struct LabeledTerm {
    Covariate x;
    double pseudo;
    double label;
    double weight;  // pi(x) for dr2, else 1
  };

  LossProblem(LossSpec spec, const LossModel& model) : spec_(spec), model_(&model) {}

  void check_structure() const;

  LossSpec spec_;
  const LossModel* model_;
  std::vector<UnlabeledTerm> unlabeled_;
  std::vector<LabeledTerm> labeled_;
};

double loss_tl(const Parameter& theta, const LabeledSet& labeled, const LossModel& model);
double loss_sl(const Parameter& theta, const UnlabeledSet& unlabeled, const LabeledSet& labeled,
               const Teacher& teacher, const LossModel& model);
double loss_dr(const Parameter& theta, const UnlabeledSet& unlabeled, const LabeledSet& labeled,
               const Teacher& teacher, const LossModel& model);
double loss_dr2(const Parameter& theta, const UnlabeledSet& unlabeled, const LabeledSet& labeled,
                const Teacher& teacher, const LossModel& model, const ImportanceWeighter& weighter,
                double weight_floor = kDefaultWeightFloor);
double curriculum_loss(const Parameter& theta, const UnlabeledSet& unlabeled, const LabeledSet& labeled,
                       const Teacher& teacher, const LossModel& model, double alpha);

// Analytic gradient of the loss selected by spec.kind.
Vector grad_loss(const LossSpec& spec, const Parameter& theta, const UnlabeledSet& unlabeled,
                 const LabeledSet& labeled, const Teacher& teacher, const LossModel& model);

struct CurriculumSchedule {
  enum class Kind { constant, linear, quadratic, final_epoch_step };

  Kind kind = Kind::linear;
  int total_epochs = 1;
  double alpha = 1.0;  // constant only

  static CurriculumSchedule constant(double alpha, int total_epochs) {
    return {Kind::constant, total_epochs, alpha};
  }
  static CurriculumSchedule linear(int total_epochs) { return {Kind::linear, total_epochs, 1.0}; }
  static CurriculumSchedule quadratic(int total_epochs) { return {Kind::quadratic, total_epochs, 1.0}; }
  static CurriculumSchedule final_epoch_step(int total_epochs) {
    return {Kind::final_epoch_step, total_epochs, 1.0};
  }
};

std::string_view to_string(CurriculumSchedule::Kind kind);
CurriculumSchedule::Kind schedule_kind_from_string(std::string_view name);

// alpha_t for 0 <= t <= T.
double alpha_at(const CurriculumSchedule& schedule, int epoch);

}  // namespace drst
