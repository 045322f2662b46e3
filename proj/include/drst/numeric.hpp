#pragma once

#include <cmath>
#include <cstddef>
#include <span>

#include <Eigen/Dense>

namespace drst {

// Neumaier's variant of Kahan summation. Order of add() calls is the
// reduction order, so results are reproducible for a fixed input order.
class CompensatedSum {
 public:
  void add(double x) {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x)) {
      comp_ += (sum_ - t) + x;
    } else {
      comp_ += (x - t) + sum_;
    }
    sum_ = t;
  }

  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

// Componentwise compensated accumulation of scaled feature vectors.
class CompensatedVectorSum {
 public:
  explicit CompensatedVectorSum(Eigen::Index dim)
      : sum_(Eigen::VectorXd::Zero(dim)), comp_(Eigen::VectorXd::Zero(dim)) {}

  void add(Eigen::Index j, double x) {
    double& s = sum_[j];
    const double t = s + x;
    if (std::abs(s) >= std::abs(x)) {
      comp_[j] += (s - t) + x;
    } else {
      comp_[j] += (x - t) + s;
    }
    s = t;
  }

  Eigen::VectorXd value() const { return sum_ + comp_; }

 private:
  Eigen::VectorXd sum_;
  Eigen::VectorXd comp_;
};

inline double compensated_sum(std::span<const double> xs) {
  CompensatedSum s;
  for (double x : xs) s.add(x);
  return s.value();
}

inline double compensated_mean(std::span<const double> xs) {
  return compensated_sum(xs) / static_cast<double>(xs.size());
}

}  // namespace drst
