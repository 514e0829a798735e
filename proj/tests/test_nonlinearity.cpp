#include <cmath>

#include <gtest/gtest.h>

#include "sphere_oep/error.hpp"
#include "sphere_oep/nonlinearity.hpp"

using namespace sphere_oep;

TEST(Nonlinearity, AffineEvaluation) {
    EXPECT_EQ(evaluate(Nonlinearity::affine(2, 0), 1.0), 2.0);
    EXPECT_EQ(evaluate(Nonlinearity::affine(2, 1), 0.0), 1.0);
    EXPECT_EQ(evaluate(Nonlinearity::affine(2, 0), 0.5), 1.0);
    EXPECT_EQ(Nonlinearity::affine(3, 0.5).derivative(7.0), 3.0);
}

TEST(Nonlinearity, DomainErrors) {
    const auto f = Nonlinearity::affine(2, 0, 4.0);
    EXPECT_THROW(f.evaluate(-0.1), DomainError);
    EXPECT_THROW(f.evaluate(4.5), DomainError);
    EXPECT_NO_THROW(f.evaluate(4.0));
    EXPECT_NO_THROW(f.extended_value(-0.1));
}

TEST(Nonlinearity, ParseAndJson) {
    const auto f = Nonlinearity::parse("affine:3,0.5");
    EXPECT_EQ(f.a(), 3.0);
    EXPECT_EQ(f.b(), 0.5);
    EXPECT_EQ(f.descriptor(), "affine:3,0.5");
    const auto g = Nonlinearity::from_json(nlohmann::json::parse(R"({"kind":"affine","a":2.0,"b":0.0})"));
    EXPECT_TRUE(g.is_homogeneous_linear());
    EXPECT_EQ(Nonlinearity::from_json(g.to_json()).descriptor(), g.descriptor());
    EXPECT_THROW(Nonlinearity::parse("cubic:1"), DomainError);
    EXPECT_THROW(Nonlinearity::parse("affine:2"), DomainError);
    EXPECT_THROW(Nonlinearity::parse("affine:2,x"), DomainError);
}

TEST(Conditions, LinearPassesWithEquality) {
    const auto r = validate_conditions(Nonlinearity::affine(2, 0), 10.0, 100);
    EXPECT_TRUE(r.cond_i);
    EXPECT_TRUE(r.cond_ii);
    EXPECT_TRUE(r.cond_nonneg);
    EXPECT_TRUE(r.f0_zero);
    EXPECT_FALSE(r.first_violation.has_value());
}

TEST(Conditions, SlopeOneFailsSecondCondition) {
    const auto r = validate_conditions(Nonlinearity::affine(1, 0), 1.0, 10);
    EXPECT_TRUE(r.cond_i);
    EXPECT_FALSE(r.cond_ii);
    ASSERT_TRUE(r.first_violation);
    EXPECT_EQ(r.first_violation->condition, "cond_ii");
}

TEST(Conditions, NegativeInterceptFails) {
    const auto r = validate_conditions(Nonlinearity::affine(2, -1), 2.0, 8);
    EXPECT_FALSE(r.cond_i);
    EXPECT_FALSE(r.cond_nonneg);
    EXPECT_FALSE(r.f0_nonneg);
}

TEST(Conditions, AffineAdmissibleForEveryCap) {
    for (double a : {2.0, 2.5, 7.0})
        for (double b : {0.0, 0.3, 4.0})
            for (double cap : {1e-3, 1.0, 1e4}) EXPECT_TRUE(validate_conditions(Nonlinearity::affine(a, b), cap, 5).all());
}

namespace {
Nonlinearity two_sinh() {
    return Nonlinearity::callable([](double x) { return 2.0 * std::sinh(x); },
                                  [](double x) { return 2.0 * std::cosh(x); }, 5.0, "2sinh");
}
}  // namespace

TEST(Conditions, SinhViolatesFirstCondition) {
    const auto f = two_sinh();
    // 2 sinh 1 and 2 cosh 1
    EXPECT_NEAR(f.evaluate(1.0), 2.35040238728760, 1e-13);
    EXPECT_NEAR(f.derivative(1.0) * 1.0, 3.08616126963049, 1e-13);

    const auto r = validate_conditions(f, 1.0, 10);
    EXPECT_FALSE(r.cond_i);
    EXPECT_TRUE(r.cond_ii);
    EXPECT_TRUE(r.cond_nonneg);
    ASSERT_TRUE(r.first_violation);
    EXPECT_EQ(r.first_violation->condition, "cond_i");
    EXPECT_NEAR(r.first_violation->x, 0.1, 1e-15);
}

TEST(Conditions, MonotoneInCap) {
    const auto f = two_sinh();
    // grid k/4 is contained in grid k/8 scaled to the doubled cap
    const auto small = validate_conditions(f, 0.5, 4);
    const auto large = validate_conditions(f, 1.0, 8);
    EXPECT_FALSE(small.cond_i);
    EXPECT_FALSE(large.cond_i);
}

TEST(Conditions, DerivativeConsistency) {
    EXPECT_LT(derivative_consistency(two_sinh(), 3.0, 50), 1e-8);
    const auto bad = Nonlinearity::callable([](double x) { return x * x; }, [](double x) { return x; }, 2.0, "bad");
    EXPECT_GT(derivative_consistency(bad, 2.0, 10), 0.5);
}

TEST(Conditions, BadArguments) {
    EXPECT_THROW(validate_conditions(Nonlinearity::affine(2, 0), 0.0, 10), DomainError);
    EXPECT_THROW(validate_conditions(Nonlinearity::affine(2, 0), 1.0, 1), DomainError);
}
