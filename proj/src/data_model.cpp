#include "drst/data_model.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <type_traits>

#include "drst/errors.hpp"
#include "drst/rng.hpp"

namespace drst {

namespace {

bool all_finite(const auto& m) { return m.allFinite(); }

}  // namespace

UnlabeledSet::UnlabeledSet(std::size_t dim) : x_(0, static_cast<Eigen::Index>(dim)) {
  if (dim == 0) throw DataError("covariate dimension must be at least 1");
}

UnlabeledSet::UnlabeledSet(RowMatrix covariates) : x_(std::move(covariates)) {
  if (x_.cols() == 0) throw DataError("covariate dimension must be at least 1");
  if (!all_finite(x_)) throw DataError("non-finite covariate in unlabeled set");
}

LabeledSet::LabeledSet(RowMatrix covariates, Vector responses)
    : x_(std::move(covariates)), y_(std::move(responses)) {
  if (x_.rows() == 0 || y_.size() == 0) throw DataError("empty labeled set");
  if (x_.rows() != y_.size()) {
    throw DataError("labeled set has " + std::to_string(x_.rows()) + " covariates but " +
                    std::to_string(y_.size()) + " responses");
  }
  if (x_.cols() == 0) throw DataError("covariate dimension must be at least 1");
  if (!all_finite(x_)) throw DataError("non-finite covariate in labeled set");
  if (!all_finite(y_)) throw DataError("non-finite response in labeled set");
}

LabeledSet LabeledSet::subset(std::span<const std::size_t> indices) const {
  RowMatrix x(static_cast<Eigen::Index>(indices.size()), x_.cols());
  Vector y(static_cast<Eigen::Index>(indices.size()));
  for (std::size_t k = 0; k < indices.size(); ++k) {
    const auto i = static_cast<Eigen::Index>(indices[k]);
    if (i >= x_.rows()) throw DataError("subset index out of range");
    x.row(static_cast<Eigen::Index>(k)) = x_.row(i);
    y[static_cast<Eigen::Index>(k)] = y_[i];
  }
  return LabeledSet(std::move(x), std::move(y));
}

LabeledSet concat(const LabeledSet& a, const LabeledSet& b) {
  if (a.dim() != b.dim()) throw DataError("dimension mismatch");
  RowMatrix x(a.covariates().rows() + b.covariates().rows(), a.covariates().cols());
  x << a.covariates(), b.covariates();
  Vector y(a.responses().size() + b.responses().size());
  y << a.responses(), b.responses();
  return LabeledSet(std::move(x), std::move(y));
}

DatasetView validate_datasets(const UnlabeledSet& unlabeled, const LabeledSet& labeled) {
  if (unlabeled.dim() != labeled.dim()) {
    throw DataError("dimension mismatch: unlabeled d=" + std::to_string(unlabeled.dim()) +
                    ", labeled d=" + std::to_string(labeled.dim()));
  }
  return DatasetView{unlabeled, labeled, unlabeled.size(), labeled.size(), labeled.dim()};
}

Parameter::Parameter(Vector values) : v_(std::move(values)) {
  if (v_.size() == 0) throw DataError("parameter must have dimension at least 1");
  if (!v_.allFinite()) throw DataError("non-finite parameter");
}

Parameter::Parameter(std::initializer_list<double> values)
    : Parameter(Vector(Eigen::Map<const Vector>(values.begin(), static_cast<Eigen::Index>(values.size())))) {}

double AffineMap::operator()(Covariate x) const {
  double v = intercept;
  const auto d = std::min<std::size_t>(x.size(), static_cast<std::size_t>(slope.size()));
  for (std::size_t j = 0; j < d; ++j) v += slope[static_cast<Eigen::Index>(j)] * x[j];
  return v;
}

Teacher Teacher::noisy_oracle(AffineMap truth, double bias, double noise_sd, std::uint64_t seed) {
  if (!(noise_sd >= 0.0) || !std::isfinite(noise_sd)) throw DataError("teacher noise_sd must be >= 0");
  if (!std::isfinite(bias)) throw DataError("teacher bias must be finite");
  return Teacher(NoisyOracleTeacher{std::move(truth), bias, noise_sd, seed});
}

double Teacher::predict(Covariate x) const {
  return std::visit(
      [&](const auto& f) -> double {
        using T = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<T, ConstantTeacher>) {
          return f.value;
        } else if constexpr (std::is_same_v<T, AffineTeacher>) {
          return f.map(x);
        } else if constexpr (std::is_same_v<T, NoisyOracleTeacher>) {
          double v = f.truth(x) + f.bias;
          if (f.noise_sd > 0.0) v += f.noise_sd * hashed_normal(f.seed, x);
          return v;
        } else {
          return f.fit(x);
        }
      },
      family_);
}

Vector Teacher::predict_all(const RowMatrix& covariates) const {
  Vector out(covariates.rows());
  const auto d = static_cast<std::size_t>(covariates.cols());
  for (Eigen::Index i = 0; i < covariates.rows(); ++i) {
    out[i] = predict(Covariate(covariates.data() + static_cast<std::size_t>(i) * d, d));
  }
  return out;
}

std::string_view Teacher::family_name() const {
  switch (family_.index()) {
    case 0: return "constant";
    case 1: return "affine";
    case 2: return "noisy_oracle";
    default: return "ols_fit";
  }
}

LossModel::LossModel(ModelKind kind, std::size_t param_dim) : kind_(kind), p_(param_dim) {
  if (p_ == 0) throw DataError("loss model needs at least one parameter");
}

std::string_view LossModel::name() const {
  return kind_ == ModelKind::squared_error ? "squared_error" : "logistic";
}

void LossModel::check_compatible(std::size_t covariate_dim) const {
  if (p_ - 1 > covariate_dim) {
    throw DataError("loss model with p=" + std::to_string(p_) + " needs covariates of dimension >= " +
                    std::to_string(p_ - 1));
  }
}

void LossModel::check_parameter(const Parameter& theta) const {
  if (theta.dim() != p_) {
    throw DataError("parameter has dimension " + std::to_string(theta.dim()) + ", model expects " +
                    std::to_string(p_));
  }
}

double LossModel::score(const Vector& theta, Covariate x) const {
  double z = theta[0];
  for (std::size_t j = 1; j < p_; ++j) z += theta[static_cast<Eigen::Index>(j)] * x[j - 1];
  return z;
}

double LossModel::value_from_score(double z, double y) const {
  if (kind_ == ModelKind::squared_error) {
    const double r = z - y;
    return r * r;
  }
  // log(1 + e^z), stable for large |z|
  const double softplus = z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
  return softplus - y * z;
}

double LossModel::slope_from_score(double z, double y) const {
  if (kind_ == ModelKind::squared_error) return 2.0 * (z - y);
  const double sigmoid = z >= 0.0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
  return sigmoid - y;
}

double LossModel::value(const Parameter& theta, Covariate x, double y) const {
  check_parameter(theta);
  return value_from_score(score(theta.values(), x), y);
}

Vector LossModel::gradient(const Parameter& theta, Covariate x, double y) const {
  check_parameter(theta);
  const double s = slope_from_score(score(theta.values(), x), y);
  Vector g(static_cast<Eigen::Index>(p_));
  for (std::size_t j = 0; j < p_; ++j) g[static_cast<Eigen::Index>(j)] = s * feature(x, j);
  return g;
}

ImportanceWeighter ImportanceWeighter::constant(double w) {
  if (!(w > 0.0) || !std::isfinite(w)) throw DataError("importance weight must be positive and finite");
  ImportanceWeighter iw;
  iw.weights_ = {w};
  return iw;
}

ImportanceWeighter ImportanceWeighter::table(std::vector<std::vector<double>> support,
                                             std::vector<double> weights) {
  if (support.empty() || support.size() != weights.size()) {
    throw DataError("importance weight table needs one weight per support point");
  }
  for (double w : weights) {
    if (!(w > 0.0) || !std::isfinite(w)) throw DataError("importance weight must be positive and finite");
  }
  ImportanceWeighter iw;
  iw.support_ = std::move(support);
  iw.weights_ = std::move(weights);
  return iw;
}

double ImportanceWeighter::weight(Covariate x) const {
  if (support_.empty()) return weights_.front();
  for (std::size_t k = 0; k < support_.size(); ++k) {
    if (std::equal(x.begin(), x.end(), support_[k].begin(), support_[k].end())) return weights_[k];
  }
  throw DataError("covariate outside the importance weighter's support");
}

}  // namespace drst
