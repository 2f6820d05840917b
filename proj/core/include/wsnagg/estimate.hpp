#pragma once

#include <Eigen/Core>

#include <stdexcept>
#include <string>

namespace wsnagg {

inline constexpr int kMaxDim = 8;

using Vector = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, kMaxDim, 1>;
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, kMaxDim, kMaxDim>;

class FusionError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// (mean, covariance). The covariance must be symmetric positive definite;
// the constructor checks.
class Estimate {
public:
    Estimate(Vector mean, Matrix cov);

    static Estimate scalar(double mean, double variance);

    int dim() const { return static_cast<int>(mean_.size()); }
    const Vector& mean() const { return mean_; }
    const Matrix& cov() const { return cov_; }

    // Only meaningful when dim() == 1.
    double scalar_mean() const { return mean_(0); }
    double scalar_variance() const { return cov_(0, 0); }

    friend bool operator==(const Estimate& a, const Estimate& b) {
        return a.mean_ == b.mean_ && a.cov_ == b.cov_;
    }

private:
    Vector mean_;
    Matrix cov_;
};

class Omega {
public:
    explicit Omega(double value);
    double value() const { return value_; }

private:
    double value_;
};

enum class OmegaCriterion { trace, determinant };

// Closed form for d <= 3, LU beyond that. Throws FusionError when singular.
Matrix invert_spd(const Matrix& m);

// Size measure of a covariance under the given criterion.
double covariance_size(const Matrix& cov, OmegaCriterion criterion);

// Covariance intersection with a fixed weight: omega on a, 1 - omega on b.
Estimate ci_fuse(const Estimate& a, const Estimate& b, Omega w);

// Fused covariance for a given weight, without the mean. Used by the search.
Matrix ci_covariance(const Matrix& a_inv, const Matrix& b_inv, double omega);

Omega ci_optimal_omega(const Estimate& a, const Estimate& b,
                       OmegaCriterion criterion = OmegaCriterion::trace);

Estimate ci_fuse_optimal(const Estimate& a, const Estimate& b,
                         OmegaCriterion criterion = OmegaCriterion::trace);

std::string to_string(OmegaCriterion c);

}  // namespace wsnagg
