#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "oracles.hpp"
#include "wsnagg/local_fusion.hpp"

using namespace wsnagg;

namespace {

constexpr long kPanels = 100000;

void expect_rel(double got, double want, double rel) {
    EXPECT_LE(std::abs(got - want), rel * std::max(1.0, std::abs(want)))
        << "got " << got << " want " << want;
}

}  // namespace

TEST(Gaussian1D, SupportBounds) {
    const Gaussian1D g(25.0, 0.5);
    EXPECT_EQ(g.support_lo(), 23.5);
    EXPECT_EQ(g.support_hi(), 26.5);
    EXPECT_THROW(Gaussian1D(1.0, 0.0), FusionError);
    EXPECT_THROW(Gaussian1D(NAN, 1.0), FusionError);
}

TEST(Thresholds, Case1) {
    EXPECT_EQ(case1_threshold({26, 1}).threshold, 23.0);
    EXPECT_EQ(case1_threshold({25, 0.5}).threshold, 23.5);
    EXPECT_EQ(case1_threshold({0, 1}).threshold, -3.0);
}

TEST(Thresholds, Case2) {
    EXPECT_EQ(case2_threshold({24, 1}, {26, 1}).threshold, 23.0);
    EXPECT_EQ(case2_threshold({24, 1}, {24.5, 3}).threshold, 21.0);
    EXPECT_EQ(case2_threshold({25, 1}, {25, 1}).threshold, 22.0);
}

TEST(StepWeight, Edges) {
    const StepWeight w{2.0};
    EXPECT_EQ(w(2.0), 0.0);
    EXPECT_EQ(w(1.0), 0.0);
    EXPECT_EQ(w(2.0000001), 1.0);
}

TEST(TruncatedMoments, NoTruncation) {
    const auto m = truncated_moments({25, 1}, -1e6);
    EXPECT_NEAR(m.mass, 1.0, 1e-15);
    EXPECT_NEAR(m.mean, 25.0, 1e-12);
    EXPECT_NEAR(m.second_moment, 626.0, 1e-10);
}

TEST(TruncatedMoments, HalfNormal) {
    const auto m = truncated_moments({0, 1}, 0.0);
    EXPECT_NEAR(m.mass, 0.5, 1e-15);
    const double mean = std::sqrt(2.0 / std::numbers::pi);
    EXPECT_NEAR(m.mean, mean, 1e-12);
    EXPECT_NEAR(m.variance(), 1.0 - 2.0 / std::numbers::pi, 1e-12);

    // Same numbers from quadrature.
    auto f = [](double x) { return x > 0 ? oracle::gauss_pdf(x, 0, 1) : 0.0; };
    const auto q = oracle::density_moments(f, -9.0, 9.0, {0.0}, kPanels);
    EXPECT_NEAR(m.mass, q.mass, 1e-9);
    EXPECT_NEAR(m.mean, q.mean, 1e-9);
    EXPECT_NEAR(m.variance(), q.variance, 1e-9);
}

TEST(TruncatedMoments, FarTail) {
    EXPECT_LT(truncated_moments({25, 1}, 40).mass, 1e-10);
    const auto m = truncated_moments({25, 1}, 40);
    EXPECT_GT(m.mean, 40.0);
}

TEST(TruncatedMoments, BelowSupportIsUntruncated) {
    // Exact tails: the leftover below mu - 3 sigma is ~1.3e-3 of the mass, so
    // agreement to 1e-10 only starts several sigmas further out.
    for (double k : {7.0, 8.0, 10.0, 40.0}) {
        const Gaussian1D g(25, 2);
        const auto m = truncated_moments(g, g.mean() - k * g.std());
        EXPECT_NEAR(m.mass, 1.0, 1e-10);
        EXPECT_NEAR(m.mean, 25.0, 1e-10 * 25);
        EXPECT_NEAR(m.variance(), 4.0, 1e-9);
    }
    const auto at3 = truncated_moments({25, 1}, 22.0);
    EXPECT_NEAR(at3.mass, 1.0 - 1.3498980316e-3, 1e-12);
}

TEST(TruncatedMoments, Properties) {
    std::mt19937_64 rng(21);
    std::uniform_real_distribution<double> mu(-50, 50), sd(0.01, 10), z(-12, 12);
    for (int i = 0; i < 2000; ++i) {
        const Gaussian1D g(mu(rng), sd(rng));
        const auto m = truncated_moments(g, g.mean() + z(rng) * g.std());
        EXPECT_GE(m.mass, 0.0);
        EXPECT_LE(m.mass, 1.0);
        if (m.mass > 0) EXPECT_GE(m.second_moment - m.mean * m.mean, -1e-9 * m.second_moment);
    }
}

TEST(Plan, Cases) {
    const FusionConfig cfg;
    auto p = plan_local_fusion({26, 1}, {25, 1}, std::nullopt, cfg);
    EXPECT_EQ(p.which, FusionCase::local_high);
    EXPECT_EQ(p.weight.threshold, 23.0);

    p = plan_local_fusion({24, 1}, {26, 1}, std::nullopt, cfg);
    EXPECT_EQ(p.which, FusionCase::global_high);
    EXPECT_EQ(p.high.mean(), 26.0);
    EXPECT_EQ(p.weight.threshold, 23.0);

    // Equal means count as Case 1.
    p = plan_local_fusion({26, 1}, {26, 2}, std::nullopt, cfg);
    EXPECT_EQ(p.which, FusionCase::local_high);

    // Previous reading was the maximum: local becomes HIGH.
    p = plan_local_fusion({22, 1}, {27, 1}, Gaussian1D(27.5, 1), cfg);
    EXPECT_EQ(p.which, FusionCase::sharp_fall);
    EXPECT_EQ(p.high.mean(), 22.0);
    EXPECT_EQ(p.weight.threshold, 19.0);

    // Previous reading far below: ordinary Case 2.
    p = plan_local_fusion({22, 1}, {27, 1}, Gaussian1D(23, 1), cfg);
    EXPECT_EQ(p.which, FusionCase::global_high);

    FusionConfig off = cfg;
    off.sharp_fall = false;
    p = plan_local_fusion({22, 1}, {27, 1}, Gaussian1D(27.5, 1), off);
    EXPECT_EQ(p.which, FusionCase::global_high);
}

TEST(FuseLocal, EqualInputsMatchOracle) {
    const auto r = fuse_local({26, 1}, {26, 1}, std::nullopt, {});
    const auto q = oracle::fuse_local({26, 1}, {26, 1}, false, kPanels);
    expect_rel(r.mean(), q.mean, 1e-6);
    expect_rel(r.variance(), q.variance, 1e-6);
    EXPECT_GT(r.mean(), 26.0);  // the truncated copy sits above t = 23
}

TEST(FuseLocal, DisjointCase1IsLocal) {
    const auto r = fuse_local({30, 1}, {20, 1}, std::nullopt, {});
    EXPECT_NEAR(r.mean(), 30.0, 1e-6);
    EXPECT_NEAR(r.variance(), 1.0, 1e-6);
}

TEST(FuseLocal, Case2MatchesOracle) {
    const auto r = fuse_local({24, 1}, {26, 1}, std::nullopt, {});
    const auto q = oracle::fuse_local({24, 1}, {26, 1}, false, kPanels);
    expect_rel(r.mean(), q.mean, 1e-6);
    expect_rel(r.variance(), q.variance, 1e-6);
    EXPECT_GT(r.mean(), 24.0);
}

TEST(FuseLocal, RandomInstancesMatchOracle) {
    std::mt19937_64 rng(22);
    std::uniform_real_distribution<double> mu(15, 35), sd(0.2, 3);
    for (int i = 0; i < 60; ++i) {
        const Gaussian1D l(mu(rng), sd(rng)), g(mu(rng), sd(rng));
        for (bool hard : {false, true}) {
            FusionConfig cfg;
            cfg.hard_truncate = hard;
            const auto r = fuse_local(l, g, std::nullopt, cfg);
            const auto q = oracle::fuse_local({l.mean(), l.std()}, {g.mean(), g.std()}, hard, kPanels);
            expect_rel(r.mean(), q.mean, 1e-6);
            expect_rel(r.variance(), q.variance, 1e-6);
        }
    }
}

TEST(FuseLocal, DensityMatchesOracleDensity) {
    const Gaussian1D l(24, 1), g(26, 1.5);
    const auto plan = plan_local_fusion(l, g, std::nullopt, {});
    for (double x = 15; x < 35; x += 0.37) {
        double want = oracle::gauss_pdf(x, 26, 1.5);
        if (x > plan.weight.threshold) want += oracle::gauss_pdf(x, 24, 1);
        EXPECT_NEAR(mixture_density(plan, x, false), want, 1e-14);
    }
}

TEST(FuseLocal, MonotoneTowardMax) {
    std::mt19937_64 rng(23);
    std::uniform_real_distribution<double> mu(-20, 60), sd(0.05, 5);
    for (int i = 0; i < 3000; ++i) {
        const Gaussian1D l(mu(rng), sd(rng)), g(mu(rng), sd(rng));
        const auto r = fuse_local(l, g, std::nullopt, {});
        EXPECT_GE(r.mean(), std::min(l.mean(), g.mean()));
        EXPECT_LE(r.mean(), std::max(l.mean(), g.mean()) + 3 * std::max(l.std(), g.std()));
        EXPECT_GT(r.variance(), 0.0);
    }
}

TEST(FuseLocal, DisjointDominanceUnderHardTruncation) {
    std::mt19937_64 rng(24);
    std::uniform_real_distribution<double> mu(0, 50), sd(0.1, 3), gap(1e-3, 10);
    FusionConfig cfg;
    cfg.hard_truncate = true;
    for (int i = 0; i < 1000; ++i) {
        const Gaussian1D g(mu(rng), sd(rng));
        const double ls = sd(rng);
        const Gaussian1D l(g.support_hi() + gap(rng) + 3 * ls, ls);
        ASSERT_GT(l.support_lo(), g.support_hi());
        const auto r = fuse_local(l, g, std::nullopt, cfg);
        // Truncation to +-3 sigma shrinks the variance by a fixed factor.
        const auto m = interval_moments(l, l.support_lo(), l.support_hi());
        EXPECT_NEAR(r.mean(), l.mean(), 1e-9 * std::max(1.0, l.mean()));
        EXPECT_NEAR(r.variance(), m.second_moment - m.mean * m.mean, 1e-9);
    }
}

TEST(FuseLocal, DisjointDominanceWithExactTails) {
    // Without truncation the lower Gaussian keeps a sliver of mass above t;
    // the result is within that sliver of the local estimate.
    const auto r = fuse_local({30, 1}, {23, 1}, std::nullopt, {});
    EXPECT_NEAR(r.mean(), 30.0, 1e-4);
    EXPECT_NEAR(r.variance(), 1.0, 1e-3);
}

TEST(FuseLocal, ReplaceTakesHigh) {
    FusionConfig cfg;
    cfg.rule = LocalFusionRule::replace;
    EXPECT_EQ(fuse_local({26, 1}, {25, 2}, std::nullopt, cfg), Gaussian1D(26, 1));
    EXPECT_EQ(fuse_local({24, 1}, {25, 2}, std::nullopt, cfg), Gaussian1D(25, 2));
    EXPECT_EQ(fuse_local({22, 1}, {27, 1}, Gaussian1D(27, 1), cfg), Gaussian1D(22, 1));
}

TEST(FuseLocal, MinThroughNegation) {
    const auto r = fuse_local_min({24, 1}, {26, 1}, std::nullopt, {});
    const auto q = fuse_local({-24, 1}, {-26, 1}, std::nullopt, {});
    EXPECT_EQ(r.mean(), -q.mean());
    EXPECT_EQ(r.std(), q.std());
}

TEST(FuseLocal, BitIdentical) {
    const auto a = fuse_local({24.3, 0.9}, {26.2, 1.1}, Gaussian1D(25, 1), {});
    const auto b = fuse_local({24.3, 0.9}, {26.2, 1.1}, Gaussian1D(25, 1), {});
    EXPECT_EQ(a, b);
}
