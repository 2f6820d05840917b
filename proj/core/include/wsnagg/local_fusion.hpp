#pragma once

#include <optional>
#include <string>

#include "wsnagg/estimate.hpp"

namespace wsnagg {

// Scalar Gaussian with its 3-sigma support bounds.
class Gaussian1D {
public:
    Gaussian1D(double mean, double std);

    double mean() const { return mean_; }
    double std() const { return std_; }
    double variance() const { return std_ * std_; }
    double support_lo() const { return mean_ - 3.0 * std_; }
    double support_hi() const { return mean_ + 3.0 * std_; }

    Estimate to_estimate() const { return Estimate::scalar(mean_, variance()); }
    static Gaussian1D from_estimate(const Estimate& e);

    friend bool operator==(const Gaussian1D&, const Gaussian1D&) = default;

private:
    double mean_;
    double std_;
};

// w(x) = 0 for x <= threshold, 1 above it.
struct StepWeight {
    double threshold;

    double operator()(double x) const { return x > threshold ? 1.0 : 0.0; }
};

struct TruncatedMoments {
    double mass = 0.0;
    double mean = 0.0;
    double second_moment = 0.0;

    double variance() const { return second_moment - mean * mean; }
};

// How a reading is combined with the global estimate. `mixture` moment-matches
// the step-weighted sum of both densities; `replace` takes the distribution
// the mixture rule would weight by one (the HIGH side) as the new estimate.
enum class LocalFusionRule { mixture, replace };

struct FusionConfig {
    bool sharp_fall = true;
    // Previous local reading within this many global sigmas of the global
    // mean means the node still holds the maximum (sharp-fall rule).
    double sharp_fall_sigmas = 3.0;
    // Restrict both components to [mu - 3 sigma, mu + 3 sigma].
    bool hard_truncate = false;
    LocalFusionRule rule = LocalFusionRule::mixture;
};

StepWeight case1_threshold(const Gaussian1D& local);
StepWeight case2_threshold(const Gaussian1D& local, const Gaussian1D& global);

// Moments of g restricted to (t, +inf), with exact Gaussian tails.
TruncatedMoments truncated_moments(const Gaussian1D& g, double t);

// Moments of g restricted to (lo, hi). lo/hi may be infinite.
TruncatedMoments interval_moments(const Gaussian1D& g, double lo, double hi);

enum class FusionCase { local_high, global_high, sharp_fall };

struct LocalFusionPlan {
    FusionCase which;
    Gaussian1D high;
    Gaussian1D low;
    StepWeight weight;
};

// Chooses the HIGH/LOW roles and the step weight for one fusion.
LocalFusionPlan plan_local_fusion(const Gaussian1D& local, const Gaussian1D& global,
                                  const std::optional<Gaussian1D>& prev_local,
                                  const FusionConfig& cfg);

// Unnormalized density HIGH(x) + w(x) LOW(x) of a plan, honoring hard_truncate.
double mixture_density(const LocalFusionPlan& plan, double x, bool hard_truncate);

Gaussian1D fuse_local(const Gaussian1D& local, const Gaussian1D& global,
                      const std::optional<Gaussian1D>& prev_local, const FusionConfig& cfg);

// Min aggregation through the max path: negate, fuse, negate back.
Gaussian1D fuse_local_min(const Gaussian1D& local, const Gaussian1D& global,
                          const std::optional<Gaussian1D>& prev_local, const FusionConfig& cfg);

std::string to_string(LocalFusionRule r);

double normal_pdf(double z);
double normal_cdf(double z);
// 1 - normal_cdf(z), accurate in the upper tail.
double normal_sf(double z);

}  // namespace wsnagg
