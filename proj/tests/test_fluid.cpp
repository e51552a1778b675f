#include <gtest/gtest.h>

#include <cmath>

#include "erlang_s/fluid.hpp"
#include "erlang_s/validation.hpp"

using namespace erlangs;

namespace {

const ModelParams kUL{100, 5, 1, 0.1, 0.5, 100};
const ModelParams kOL{100, 1, 1, 0.5, 1, 100};
const ModelParams kCrit{100, 1, 1, 0.5, 1, 150};

}  // namespace

TEST(Drift, ZeroAtFixedPoint)
{
    const Drift d = drift({20, 80}, kUL);
    EXPECT_EQ(d.dq, 0.0);
    EXPECT_EQ(d.ds, 0.0);
}

TEST(Drift, EmptySystem)
{
    const Drift d = drift({0, kUL.c}, kUL);
    EXPECT_EQ(d.dq, kUL.lambda);
    EXPECT_EQ(d.ds, 0.0);
}

TEST(Drift, HandEvaluatedOverloadPoint)
{
    // q = 200, s = 50 under kOL: busy = 50, waiting = 150.
    const Drift d = drift({200, 50}, kOL);
    EXPECT_DOUBLE_EQ(d.dq, 100.0 - 1.0 * 50.0 - 1.0 * 150.0);
    EXPECT_DOUBLE_EQ(d.ds, 1.0 * (100.0 - 50.0) - 0.5 * 1.0 * 50.0);
}

TEST(FixedPoint, ReferenceSets)
{
    const FixedPoint ul = fixed_point(kUL);
    EXPECT_NEAR(ul.q_star, 20.0, 1e-9);
    EXPECT_NEAR(ul.s_star, 80.0, 1e-9);
    EXPECT_EQ(ul.regime.tag, RegimeTag::Underloaded);

    const FixedPoint ol = fixed_point(kOL);
    EXPECT_NEAR(ol.q_star, 100.0, 1e-9);
    EXPECT_NEAR(ol.s_star, 200.0 / 3.0, 1e-9);
    EXPECT_EQ(ol.regime.tag, RegimeTag::Overloaded);

    const FixedPoint cr = fixed_point(kCrit);
    EXPECT_NEAR(cr.q_star, 100.0, 1e-9);
    EXPECT_NEAR(cr.s_star, 100.0, 1e-9);
    EXPECT_EQ(cr.regime.tag, RegimeTag::Critical);
}

TEST(FixedPoint, DriftVanishesOnRandomDraws)
{
    Rng rng(5);
    for (RegimeTag regime : {RegimeTag::Underloaded, RegimeTag::Overloaded}) {
        for (int i = 0; i < 200; ++i) {
            const ModelParams m = random_params(rng, regime);
            const FixedPoint fp = fixed_point(m);
            EXPECT_EQ(fp.regime.tag, regime);
            const Drift d = drift({fp.q_star, fp.s_star}, m);
            EXPECT_LT(std::abs(d.dq) / m.lambda, 1e-9);
            EXPECT_LT(std::abs(d.ds) / m.lambda, 1e-9);
            if (regime == RegimeTag::Underloaded) {
                EXPECT_LE(fp.q_star, fp.s_star);
            } else {
                EXPECT_GE(fp.q_star, fp.s_star);
            }
        }
    }
}

TEST(FixedPoint, ContinuousAcrossBoundary)
{
    const Rates r{37, 1.3, 0.7, 0.4, 2.1};
    const double boundary = effective_load(r);
    const FixedPoint below = fixed_point(with_servers(r, boundary - 1e-6));
    const FixedPoint above = fixed_point(with_servers(r, boundary + 1e-6));
    EXPECT_EQ(below.regime.tag, RegimeTag::Overloaded);
    EXPECT_EQ(above.regime.tag, RegimeTag::Underloaded);
    EXPECT_NEAR(below.q_star, above.q_star, 1e-5);
    EXPECT_NEAR(below.s_star, above.s_star, 1e-5);
}

TEST(Integrate, UnderloadedConverges)
{
    const FluidTrajectory tr = integrate(kUL, {0, 100}, 50, default_step(kUL));
    const FluidState end = tr.states.back();
    EXPECT_NEAR(end.q, 20.0, 1e-6);
    EXPECT_NEAR(end.s, 80.0, 1e-6);
    EXPECT_DOUBLE_EQ(tr.times.back(), 50.0);
    EXPECT_EQ(tr.times.size(), tr.states.size());
    for (std::size_t i = 1; i < tr.times.size(); ++i) {
        ASSERT_GT(tr.times[i], tr.times[i - 1]);
    }
}

TEST(Integrate, OverloadedConverges)
{
    const FluidTrajectory tr = integrate(kOL, {0, 100}, 100, default_step(kOL));
    EXPECT_NEAR(tr.states.back().q, 100.0, 1e-4);
    EXPECT_NEAR(tr.states.back().s, 200.0 / 3.0, 1e-4);
}

TEST(Integrate, EquilibriumStaysPut)
{
    for (const ModelParams& m : {kUL, kOL}) {
        const FixedPoint fp = fixed_point(m);
        const FluidTrajectory tr = integrate(m, {fp.q_star, fp.s_star}, 20, default_step(m));
        for (const FluidState& x : tr.states) {
            ASSERT_NEAR(x.q, fp.q_star, 1e-9);
            ASSERT_NEAR(x.s, fp.s_star, 1e-9);
        }
    }
}

TEST(Integrate, FourthOrderAccuracy)
{
    // Halving the step should cut the error at T by about 16 on a smooth
    // stretch (no kink crossing: start inside the overloaded face).
    const ModelParams m{50, 2, 0.5, 0.3, 1.5, 20};
    const FluidState init{40, 20};
    const double ref = integrate(m, init, 2.0, 1e-4).states.back().q;
    const double e1 = std::abs(integrate(m, init, 2.0, 0.1).states.back().q - ref);
    const double e2 = std::abs(integrate(m, init, 2.0, 0.05).states.back().q - ref);
    EXPECT_GT(e1 / e2, 12.0);
    EXPECT_LT(e1 / e2, 20.0);
}

TEST(Integrate, RandomDrawsConverge)
{
    Rng rng(17);
    for (RegimeTag regime : {RegimeTag::Underloaded, RegimeTag::Overloaded}) {
        for (int i = 0; i < 25; ++i) {
            const ModelParams m = random_params(rng, regime);
            const FixedPoint fp = fixed_point(m);
            const double horizon = 50.0 / std::min({m.mu, m.theta, m.gamma});
            const FluidState end = integrate(m, {0, m.c}, horizon, default_step(m)).states.back();
            EXPECT_LT(std::hypot(end.q - fp.q_star, end.s - fp.s_star), 1e-4);
        }
    }
}

TEST(Integrate, RejectsBadStep)
{
    EXPECT_THROW((void)integrate(kUL, {0, 100}, 1.0, 0.0), std::invalid_argument);
    EXPECT_THROW((void)integrate(kUL, {0, 100}, 0.001, 0.01), std::invalid_argument);
}

TEST(Integrate, NonFiniteStateReported)
{
    const ModelParams m{1.7e308, 1, 1, 0.5, 1, 10};
    try {
        (void)integrate(m, {0, 10}, 10.0, 1.0);
        FAIL() << "expected FluidIntegrationError";
    } catch (const FluidIntegrationError& e) {
        EXPECT_GT(e.time(), 0.0);
    }
}
