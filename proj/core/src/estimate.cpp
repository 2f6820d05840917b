#include "wsnagg/estimate.hpp"

#include <Eigen/Cholesky>
#include <Eigen/LU>

#include <cmath>

namespace wsnagg {

namespace {

constexpr double kSymmetryTol = 1e-12;
constexpr int kGridPoints = 101;
constexpr double kGoldenTol = 1e-12;

void validate(const Vector& mean, const Matrix& cov) {
    const auto d = mean.size();
    if (d < 1 || d > kMaxDim) {
        throw FusionError("estimate dimension must be in [1, " + std::to_string(kMaxDim) + "]");
    }
    if (cov.rows() != d || cov.cols() != d) {
        throw FusionError("mean and covariance dimensions disagree");
    }
    if (!mean.allFinite() || !cov.allFinite()) {
        throw FusionError("estimate contains non-finite values");
    }
    for (Eigen::Index i = 0; i < d; ++i) {
        for (Eigen::Index j = i + 1; j < d; ++j) {
            if (std::abs(cov(i, j) - cov(j, i)) > kSymmetryTol) {
                throw FusionError("covariance is not symmetric");
            }
        }
    }
    if (d == 1) {
        if (!(cov(0, 0) > 0.0)) throw FusionError("variance must be positive");
        return;
    }
    Eigen::LLT<Matrix> llt(cov);
    if (llt.info() != Eigen::Success) {
        throw FusionError("covariance is not positive definite");
    }
}

Matrix symmetrized(const Matrix& m) { return 0.5 * (m + m.transpose()); }

}  // namespace

Estimate::Estimate(Vector mean, Matrix cov) : mean_(std::move(mean)), cov_(std::move(cov)) {
    validate(mean_, cov_);
}

Estimate Estimate::scalar(double mean, double variance) {
    Vector m(1);
    m(0) = mean;
    Matrix c(1, 1);
    c(0, 0) = variance;
    return Estimate(std::move(m), std::move(c));
}

Omega::Omega(double value) : value_(value) {
    if (!(value >= 0.0 && value <= 1.0)) {
        throw FusionError("omega must lie in [0, 1]");
    }
}

Matrix invert_spd(const Matrix& m) {
    const auto d = m.rows();
    Matrix inv(d, d);
    switch (d) {
        case 1: {
            if (m(0, 0) == 0.0) throw FusionError("singular covariance");
            inv(0, 0) = 1.0 / m(0, 0);
            return inv;
        }
        case 2: {
            const double det = m(0, 0) * m(1, 1) - m(0, 1) * m(1, 0);
            if (det == 0.0 || !std::isfinite(det)) throw FusionError("singular covariance");
            inv(0, 0) = m(1, 1) / det;
            inv(1, 1) = m(0, 0) / det;
            inv(0, 1) = -m(0, 1) / det;
            inv(1, 0) = -m(1, 0) / det;
            return inv;
        }
        case 3: {
            // Cofactor expansion.
            const double c00 = m(1, 1) * m(2, 2) - m(1, 2) * m(2, 1);
            const double c01 = m(1, 2) * m(2, 0) - m(1, 0) * m(2, 2);
            const double c02 = m(1, 0) * m(2, 1) - m(1, 1) * m(2, 0);
            const double det = m(0, 0) * c00 + m(0, 1) * c01 + m(0, 2) * c02;
            if (det == 0.0 || !std::isfinite(det)) throw FusionError("singular covariance");
            inv(0, 0) = c00 / det;
            inv(1, 0) = c01 / det;
            inv(2, 0) = c02 / det;
            inv(0, 1) = (m(0, 2) * m(2, 1) - m(0, 1) * m(2, 2)) / det;
            inv(1, 1) = (m(0, 0) * m(2, 2) - m(0, 2) * m(2, 0)) / det;
            inv(2, 1) = (m(0, 1) * m(2, 0) - m(0, 0) * m(2, 1)) / det;
            inv(0, 2) = (m(0, 1) * m(1, 2) - m(0, 2) * m(1, 1)) / det;
            inv(1, 2) = (m(0, 2) * m(1, 0) - m(0, 0) * m(1, 2)) / det;
            inv(2, 2) = (m(0, 0) * m(1, 1) - m(0, 1) * m(1, 0)) / det;
            return inv;
        }
        default: {
            Eigen::FullPivLU<Matrix> lu(m);
            if (!lu.isInvertible()) throw FusionError("singular covariance");
            return lu.inverse();
        }
    }
}

double covariance_size(const Matrix& cov, OmegaCriterion criterion) {
    return criterion == OmegaCriterion::trace ? cov.trace() : cov.determinant();
}

Matrix ci_covariance(const Matrix& a_inv, const Matrix& b_inv, double omega) {
    return symmetrized(invert_spd(omega * a_inv + (1.0 - omega) * b_inv));
}

Estimate ci_fuse(const Estimate& a, const Estimate& b, Omega w) {
    if (a.dim() != b.dim()) throw FusionError("dimension mismatch in fusion");
    const double omega = w.value();
    // At the endpoints one information term vanishes entirely.
    if (omega == 0.0) return b;
    if (omega == 1.0) return a;

    const Matrix a_inv = invert_spd(a.cov());
    const Matrix b_inv = invert_spd(b.cov());
    Matrix cov = ci_covariance(a_inv, b_inv, omega);
    Vector mean = cov * (omega * (a_inv * a.mean()) + (1.0 - omega) * (b_inv * b.mean()));
    return Estimate(std::move(mean), std::move(cov));
}

Omega ci_optimal_omega(const Estimate& a, const Estimate& b, OmegaCriterion criterion) {
    if (a.dim() != b.dim()) throw FusionError("dimension mismatch in fusion");

    if (a.dim() == 1) {
        // The scalar objective is monotone in omega, so the optimum is an
        // endpoint. Equal variances keep the larger mean.
        const double va = a.scalar_variance();
        const double vb = b.scalar_variance();
        if (va < vb) return Omega(1.0);
        if (vb < va) return Omega(0.0);
        return Omega(a.scalar_mean() >= b.scalar_mean() ? 1.0 : 0.0);
    }

    const Matrix a_inv = invert_spd(a.cov());
    const Matrix b_inv = invert_spd(b.cov());
    auto objective = [&](double omega) {
        if (omega == 0.0) return covariance_size(b.cov(), criterion);
        if (omega == 1.0) return covariance_size(a.cov(), criterion);
        return covariance_size(ci_covariance(a_inv, b_inv, omega), criterion);
    };

    int best_k = 0;
    double best_f = objective(0.0);
    for (int k = 1; k < kGridPoints; ++k) {
        const double f = objective(static_cast<double>(k) / (kGridPoints - 1));
        if (f < best_f) {
            best_f = f;
            best_k = k;
        }
    }
    double best_omega = static_cast<double>(best_k) / (kGridPoints - 1);

    // Both objectives are convex in omega, so the minimum lies within one
    // grid step of the best grid point.
    double lo = std::max(0.0, static_cast<double>(best_k - 1) / (kGridPoints - 1));
    double hi = std::min(1.0, static_cast<double>(best_k + 1) / (kGridPoints - 1));
    const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double x1 = hi - inv_phi * (hi - lo);
    double x2 = lo + inv_phi * (hi - lo);
    double f1 = objective(x1);
    double f2 = objective(x2);
    while (hi - lo > kGoldenTol) {
        if (f1 < f2) {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = objective(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = objective(x2);
        }
    }
    const double golden = 0.5 * (lo + hi);
    const double f_golden = objective(golden);
    if (f_golden < best_f) best_omega = golden;
    return Omega(best_omega);
}

Estimate ci_fuse_optimal(const Estimate& a, const Estimate& b, OmegaCriterion criterion) {
    return ci_fuse(a, b, ci_optimal_omega(a, b, criterion));
}

std::string to_string(OmegaCriterion c) {
    return c == OmegaCriterion::trace ? "trace" : "determinant";
}

}  // namespace wsnagg
