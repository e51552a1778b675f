#include <gtest/gtest.h>

#include "erlang_s/model.hpp"

using namespace erlangs;

TEST(Validate, AcceptsFigureParameters)
{
    const ModelParams m = validate(100, 5, 1, 0.1, 0.5, 100);
    EXPECT_EQ(m.lambda, 100);
    EXPECT_EQ(m.c, 100);
}

TEST(Validate, RejectsProbabilityAboveOne)
{
    try {
        (void)validate(1, 1, 1, 1.5, 1, 1);
        FAIL() << "expected ParameterError";
    } catch (const ParameterError& e) {
        ASSERT_EQ(e.violations().size(), 1u);
        EXPECT_EQ(e.violations()[0].field, "p");
        EXPECT_DOUBLE_EQ(e.violations()[0].value, 1.5);
    }
}

TEST(Validate, RejectsZeroArrivalRate)
{
    try {
        (void)validate(0, 1, 1, 0, 1, 1);
        FAIL() << "expected ParameterError";
    } catch (const ParameterError& e) {
        ASSERT_EQ(e.violations().size(), 1u);
        EXPECT_EQ(e.violations()[0].field, "lambda");
    }
}

TEST(Validate, ReportsEveryViolation)
{
    try {
        (void)validate(-1, 0, -2, 2, 0, -3);
        FAIL();
    } catch (const ParameterError& e) {
        EXPECT_EQ(e.violations().size(), 6u);
    }
}

TEST(Validate, RejectsNonFinite)
{
    EXPECT_THROW((void)validate(std::nan(""), 1, 1, 0, 1, 1), ParameterError);
    EXPECT_THROW((void)validate(1, 1, 1, 0, 1, INFINITY), ParameterError);
    // Finite inputs whose load overflows.
    EXPECT_THROW((void)validate(1e308, 1e-308, 1, 0.5, 1, 1), ParameterError);
}

TEST(Validate, AcceptsBoundaryProbabilities)
{
    EXPECT_NO_THROW((void)validate(1, 1, 1, 0.0, 1, 1));
    EXPECT_NO_THROW((void)validate(1, 1, 1, 1.0, 1, 1));
}

TEST(Classify, ReferenceRegimes)
{
    const Regime ul = classify({100, 5, 1, 0.1, 0.5, 100});
    EXPECT_EQ(ul.tag, RegimeTag::Underloaded);
    EXPECT_DOUBLE_EQ(ul.load_margin, 60.0);

    const Regime ol = classify({100, 1, 1, 0.5, 1, 100});
    EXPECT_EQ(ol.tag, RegimeTag::Overloaded);
    EXPECT_DOUBLE_EQ(ol.load_margin, -50.0);

    const Regime cr = classify({100, 1, 1, 0.5, 1, 150});
    EXPECT_EQ(cr.tag, RegimeTag::Critical);
    EXPECT_EQ(cr.load_margin, 0.0);
    EXPECT_TRUE(cr.uses_underloaded_forms());
}

TEST(Classify, ScaleConsistent)
{
    const ModelParams base[] = {{100, 5, 1, 0.1, 0.5, 100}, {100, 1, 1, 0.5, 1, 100}, {7, 0.3, 2, 0.8, 4, 20}};
    for (const auto& m : base) {
        for (double n : {0.5, 2.0, 8.0, 1024.0}) {
            ModelParams s = m;
            s.lambda *= n;
            s.c *= n;
            EXPECT_EQ(classify(s).tag, classify(m).tag);
        }
    }
}

TEST(Kappa, Values)
{
    EXPECT_NEAR(kappa(Rates{1, 1, 1, 0.5, 1}).value, 1.0 / 1.5, 1e-15);
    EXPECT_EQ(kappa(Rates{3, 7, 1, 0.0, 0.2}).value, 1.0);
    EXPECT_NEAR(kappa(Rates{80, 1, 1, 0.5, 10}).value, 10.0 / 10.5, 1e-15);
}

TEST(Kappa, Monotone)
{
    const Rates r{10, 2, 1, 0.4, 3};
    auto k = [](Rates x) { return kappa(x).value; };
    Rates more_p = r;
    more_p.p = 0.6;
    Rates more_mu = r;
    more_mu.mu = 3;
    Rates more_gamma = r;
    more_gamma.gamma = 4;
    EXPECT_LT(k(more_p), k(r));
    EXPECT_LT(k(more_mu), k(r));
    EXPECT_GT(k(more_gamma), k(r));
    EXPECT_GT(k(r), 0.0);
    EXPECT_LE(k(r), 1.0);
}

TEST(Regime, Names)
{
    EXPECT_EQ(to_string(RegimeTag::Underloaded), "UL");
    EXPECT_EQ(to_string(RegimeTag::Overloaded), "OL");
    EXPECT_EQ(to_string(RegimeTag::Critical), "critical");
}
