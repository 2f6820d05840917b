#include "wsnagg/local_fusion.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace wsnagg {

namespace {

constexpr double kMinMixtureMass = 1e-12;

struct Central {
    double mass;
    double mean;
    double variance;
};

// Mass, mean and variance of N(mu, sigma^2) over (lo, hi).
Central central_interval_moments(double mu, double sigma, double lo, double hi) {
    const double a = (lo - mu) / sigma;
    const double b = (hi - mu) / sigma;
    if (!(a < b)) return {0.0, std::isfinite(lo) ? lo : hi, 0.0};

    // Differences taken on the side of the distribution where they are
    // computed from small numbers.
    const double z = a > 0.0 ? normal_sf(a) - normal_sf(b) : normal_cdf(b) - normal_cdf(a);
    const double pa = std::isfinite(a) ? normal_pdf(a) : 0.0;
    const double pb = std::isfinite(b) ? normal_pdf(b) : 0.0;
    const double apa = std::isfinite(a) ? a * pa : 0.0;
    const double bpb = std::isfinite(b) ? b * pb : 0.0;
    if (!(z > 0.0)) {
        const double edge = std::isfinite(lo) ? lo : hi;
        return {0.0, edge, 0.0};
    }
    const double r = (pa - pb) / z;
    const double mean = mu + sigma * r;
    const double var = std::max(0.0, sigma * sigma * (1.0 + (apa - bpb) / z - r * r));
    return {z, mean, var};
}

Central component(const Gaussian1D& g, double lo, double hi, bool hard_truncate) {
    if (hard_truncate) {
        lo = std::max(lo, g.support_lo());
        hi = std::min(hi, g.support_hi());
    }
    return central_interval_moments(g.mean(), g.std(), lo, hi);
}

}  // namespace

double normal_pdf(double z) { return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi); }

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

double normal_sf(double z) { return 0.5 * std::erfc(z / std::numbers::sqrt2); }

Gaussian1D::Gaussian1D(double mean, double std) : mean_(mean), std_(std) {
    if (!std::isfinite(mean) || !std::isfinite(std) || !(std > 0.0)) {
        throw FusionError("Gaussian1D requires a finite mean and a positive std");
    }
}

Gaussian1D Gaussian1D::from_estimate(const Estimate& e) {
    if (e.dim() != 1) throw FusionError("Gaussian1D needs a scalar estimate");
    return Gaussian1D(e.scalar_mean(), std::sqrt(e.scalar_variance()));
}

std::string to_string(LocalFusionRule r) { return r == LocalFusionRule::mixture ? "mixture" : "replace"; }

StepWeight case1_threshold(const Gaussian1D& local) { return StepWeight{local.support_lo()}; }

StepWeight case2_threshold(const Gaussian1D& local, const Gaussian1D& global) {
    return StepWeight{std::max(local.support_lo(), global.support_lo())};
}

TruncatedMoments interval_moments(const Gaussian1D& g, double lo, double hi) {
    const Central c = central_interval_moments(g.mean(), g.std(), lo, hi);
    return TruncatedMoments{c.mass, c.mean, c.variance + c.mean * c.mean};
}

TruncatedMoments truncated_moments(const Gaussian1D& g, double t) {
    return interval_moments(g, t, std::numeric_limits<double>::infinity());
}

LocalFusionPlan plan_local_fusion(const Gaussian1D& local, const Gaussian1D& global,
                                  const std::optional<Gaussian1D>& prev_local,
                                  const FusionConfig& cfg) {
    if (local.mean() >= global.mean()) {
        return {FusionCase::local_high, local, global, case1_threshold(local)};
    }
    if (cfg.sharp_fall && prev_local &&
        std::abs(prev_local->mean() - global.mean()) <= cfg.sharp_fall_sigmas * global.std()) {
        return {FusionCase::sharp_fall, local, global, case1_threshold(local)};
    }
    return {FusionCase::global_high, global, local, case2_threshold(local, global)};
}

double mixture_density(const LocalFusionPlan& plan, double x, bool hard_truncate) {
    auto dens = [&](const Gaussian1D& g) {
        if (hard_truncate && (x < g.support_lo() || x > g.support_hi())) return 0.0;
        return normal_pdf((x - g.mean()) / g.std()) / g.std();
    };
    return dens(plan.high) + plan.weight(x) * dens(plan.low);
}

Gaussian1D fuse_local(const Gaussian1D& local, const Gaussian1D& global,
                      const std::optional<Gaussian1D>& prev_local, const FusionConfig& cfg) {
    const LocalFusionPlan plan = plan_local_fusion(local, global, prev_local, cfg);
    if (cfg.rule == LocalFusionRule::replace) return plan.high;
    constexpr double inf = std::numeric_limits<double>::infinity();

    const Central high = component(plan.high, -inf, inf, cfg.hard_truncate);
    const Central low = component(plan.low, plan.weight.threshold, inf, cfg.hard_truncate);

    const double mass = high.mass + low.mass;
    if (!(mass >= kMinMixtureMass)) throw FusionError("local fusion mixture has no mass");

    const double mean = (high.mass * high.mean + low.mass * low.mean) / mass;
    const double dh = high.mean - mean;
    const double dl = low.mean - mean;
    const double var =
        (high.mass * (high.variance + dh * dh) + low.mass * (low.variance + dl * dl)) / mass;
    if (!(var > 0.0)) throw FusionError("local fusion produced a degenerate variance");
    return Gaussian1D(mean, std::sqrt(var));
}

Gaussian1D fuse_local_min(const Gaussian1D& local, const Gaussian1D& global,
                          const std::optional<Gaussian1D>& prev_local, const FusionConfig& cfg) {
    std::optional<Gaussian1D> prev;
    if (prev_local) prev = Gaussian1D(-prev_local->mean(), prev_local->std());
    const Gaussian1D r = fuse_local(Gaussian1D(-local.mean(), local.std()),
                                    Gaussian1D(-global.mean(), global.std()), prev, cfg);
    return Gaussian1D(-r.mean(), r.std());
}

}  // namespace wsnagg
