#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include <Eigen/Dense>

namespace drst {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// A single covariate x, viewed as a contiguous row of a dataset.
using Covariate = std::span<const double>;

class UnlabeledSet {
 public:
  // Empty set of dimension `dim`.
  explicit UnlabeledSet(std::size_t dim);
  explicit UnlabeledSet(RowMatrix covariates);

  std::size_t size() const { return static_cast<std::size_t>(x_.rows()); }
  std::size_t dim() const { return static_cast<std::size_t>(x_.cols()); }
  bool empty() const { return size() == 0; }

  Covariate covariate(std::size_t i) const {
    return {x_.data() + i * dim(), dim()};
  }
  const RowMatrix& covariates() const { return x_; }

 private:
  RowMatrix x_;
};

class LabeledSet {
 public:
  // Throws DataError on n = 0, row/response mismatch or non-finite entries.
  LabeledSet(RowMatrix covariates, Vector responses);

  std::size_t size() const { return static_cast<std::size_t>(x_.rows()); }
  std::size_t dim() const { return static_cast<std::size_t>(x_.cols()); }

  Covariate covariate(std::size_t i) const {
    return {x_.data() + i * dim(), dim()};
  }
  double response(std::size_t i) const { return y_[static_cast<Eigen::Index>(i)]; }
  const RowMatrix& covariates() const { return x_; }
  const Vector& responses() const { return y_; }

  LabeledSet subset(std::span<const std::size_t> indices) const;
  UnlabeledSet as_unlabeled() const { return UnlabeledSet(x_); }

 private:
  RowMatrix x_;
  Vector y_;
};

LabeledSet concat(const LabeledSet& a, const LabeledSet& b);

struct DatasetView {
  const UnlabeledSet& unlabeled;
  const LabeledSet& labeled;
  std::size_t m;
  std::size_t n;
  std::size_t dim;
};

// Checks that both sets share a dimension. The labeled set already guarantees
// n >= 1 and finiteness by construction.
DatasetView validate_datasets(const UnlabeledSet& unlabeled, const LabeledSet& labeled);

class Parameter {
 public:
  explicit Parameter(Vector values);
  Parameter(std::initializer_list<double> values);

  static Parameter zeros(std::size_t dim) { return Parameter(Vector::Zero(static_cast<Eigen::Index>(dim))); }

  std::size_t dim() const { return static_cast<std::size_t>(v_.size()); }
  double operator[](std::size_t i) const { return v_[static_cast<Eigen::Index>(i)]; }
  const Vector& values() const { return v_; }

 private:
  Vector v_;
};

// f(x) = intercept + slope . x
struct AffineMap {
  double intercept = 0.0;
  Vector slope;

  double operator()(Covariate x) const;
};

struct ConstantTeacher {
  double value = 0.0;
};

struct AffineTeacher {
  AffineMap map;
};

// truth(x) + bias + noise_sd * z(x), where z(x) is a standard normal drawn by
// hashing the covariate bytes with `seed`: the same x always gets the same z.
struct NoisyOracleTeacher {
  AffineMap truth;
  double bias = 0.0;
  double noise_sd = 0.0;
  std::uint64_t seed = 0;
};

struct OlsTeacher {
  AffineMap fit;
  double ridge = 0.0;
  Eigen::Index rank = 0;
};

class Teacher {
 public:
  using Family = std::variant<ConstantTeacher, AffineTeacher, NoisyOracleTeacher, OlsTeacher>;

  explicit Teacher(Family family) : family_(std::move(family)) {}

  static Teacher constant(double c) { return Teacher(ConstantTeacher{c}); }
  static Teacher affine(double intercept, Vector slope) {
    return Teacher(AffineTeacher{AffineMap{intercept, std::move(slope)}});
  }
  static Teacher noisy_oracle(AffineMap truth, double bias, double noise_sd, std::uint64_t seed);

  double predict(Covariate x) const;
  Vector predict_all(const RowMatrix& covariates) const;

  const Family& family() const { return family_; }
  std::string_view family_name() const;

 private:
  Family family_;
};

enum class ModelKind { squared_error, logistic };

// Generalized-linear per-sample loss on features phi(x) = [1, x_1, ..., x_{p-1}]:
//   squared_error: (theta . phi - y)^2
//   logistic:      log(1 + exp(theta . phi)) - y * theta . phi
// With p = 1 the squared error is (theta - y)^2, the mean-estimation loss.
class LossModel {
 public:
  LossModel(ModelKind kind, std::size_t param_dim);

  static LossModel squared_error(std::size_t p = 1) { return {ModelKind::squared_error, p}; }
  static LossModel logistic(std::size_t p = 1) { return {ModelKind::logistic, p}; }

  ModelKind kind() const { return kind_; }
  std::size_t param_dim() const { return p_; }
  std::string_view name() const;

  // Throws DataError unless p - 1 <= d.
  void check_compatible(std::size_t covariate_dim) const;
  void check_parameter(const Parameter& theta) const;

  double score(const Vector& theta, Covariate x) const;
  double value_from_score(double z, double y) const;
  // d loss / d score; the parameter gradient is this times phi(x).
  double slope_from_score(double z, double y) const;

  double value(const Parameter& theta, Covariate x, double y) const;
  Vector gradient(const Parameter& theta, Covariate x, double y) const;

  double feature(Covariate x, std::size_t j) const { return j == 0 ? 1.0 : x[j - 1]; }

 private:
  ModelKind kind_;
  std::size_t p_;
};

// pi(x) = P_X(x) / Q_X(x) > 0 on its declared support. The importance-weighted
// loss multiplies each labeled term by pi, moving labeled averages from Q_X to P_X.
class ImportanceWeighter {
 public:
  static ImportanceWeighter constant(double w);
  static ImportanceWeighter table(std::vector<std::vector<double>> support, std::vector<double> weights);

  // Throws DataError for a covariate outside a table's support.
  double weight(Covariate x) const;

  bool is_constant() const { return support_.empty(); }
  const std::vector<std::vector<double>>& support() const { return support_; }
  const std::vector<double>& weights() const { return weights_; }

 private:
  ImportanceWeighter() = default;

  std::vector<std::vector<double>> support_;
  std::vector<double> weights_;
};

}  // namespace drst
