#include <chrono>
#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "sphere_oep/error.hpp"
#include "sphere_oep/model_profiles.hpp"

using namespace sphere_oep;

namespace {

// Root of r·artanh(r) = 1 and the closed-form slope there (mpmath, 30 digits).
constexpr double legendre_r2 = 0.833556559600965;
constexpr double legendre_gradient = 2.17162298088750;

const Nonlinearity lin = Nonlinearity::affine(2, 0);
const Nonlinearity lin1 = Nonlinearity::affine(2, 1);

double legendre_U(double r) { return 1.0 - r * std::atanh(r); }
double legendre_dU(double r) { return -(std::atanh(r) + r / (1.0 - r * r)); }

}  // namespace

TEST(AnnulusProfile, LegendreZeros) {
    const auto t0 = std::chrono::steady_clock::now();
    const auto p = solve_annulus_profile(lin, 0.0, 1.0, 1e-12);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    EXPECT_NEAR(p.r2(), legendre_r2, 1e-10);
    EXPECT_NEAR(p.r1(), -legendre_r2, 1e-10);
    EXPECT_LT(secs, 1.0);
    EXPECT_LT(p.zero_error_bound(), 1e-6);
}

TEST(AnnulusProfile, MatchesClosedForm) {
    const auto p = solve_annulus_profile(lin, 0.0, 1.0, 1e-12);
    for (double r = -0.83; r <= 0.83; r += 0.0137) {
        const auto q = p.at(r);
        EXPECT_NEAR(q.U, legendre_U(r), 1e-9) << r;
        EXPECT_NEAR(q.dU, legendre_dU(r), 1e-8) << r;
    }
}

TEST(AnnulusProfile, AffineShiftClosedForm) {
    // For f = 2x + 1, w = U + 1/2 solves the Legendre equation with w(0) = 3/2.
    const auto p = solve_annulus_profile(lin1, 0.0, 1.0, 1e-12);
    for (double r = -0.7; r <= 0.7; r += 0.05) EXPECT_NEAR(p.U(r), 1.5 * legendre_U(r) - 0.5, 1e-9);
}

TEST(AnnulusProfile, CauchyData) {
    for (const auto& f : {lin, lin1, Nonlinearity::affine(3, 0.5)}) {
        for (double R : {-0.4, 0.0, 0.35, 0.9}) {
            for (double M : {0.5, 1.0, 2.0}) {
                const auto p = solve_annulus_profile(f, R, M);
                const auto q = p.at(R);
                EXPECT_NEAR(q.U, M, 1e-12);
                EXPECT_NEAR(q.dU, 0.0, 1e-12);
                EXPECT_NEAR(q.Z, 0.0, 1e-12);
                EXPECT_NEAR(q.dZ, f.evaluate(M) / (1.0 - R * R), 1e-12);
                EXPECT_LT(std::abs(p.at(p.r1()).U), 1e-12);
                EXPECT_LT(std::abs(p.at(p.r2()).U), 1e-12);
                EXPECT_LT(p.r1(), R);
                EXPECT_GT(p.r2(), R);
            }
        }
    }
    EXPECT_NEAR(solve_annulus_profile(lin, 0.0, 1.0).at(0.0).dZ, 2.0, 1e-14);
}

TEST(AnnulusProfile, ZerosAreSimple) {
    const auto p = solve_annulus_profile(lin1, 0.2, 1.3, 1e-12);
    EXPECT_GT(std::abs(p.samples().back().dU), 0.1);
    EXPECT_GT(std::abs(p.samples().front().dU), 0.1);
}

TEST(AnnulusProfile, MirrorSymmetry) {
    const auto a = solve_annulus_profile(lin, 0.3, 1.0);
    const auto b = solve_annulus_profile(lin, -0.3, 1.0);
    EXPECT_NEAR(a.r2(), -b.r1(), 1e-10);
    for (double r = a.r1() + 1e-3; r < a.r2(); r += 0.01) EXPECT_NEAR(a.U(r), b.U(-r), 1e-10);
}

TEST(AnnulusProfile, ImplicitRepresentation) {
    // U'(r) = −(1/(1−r²))·∫_R^r f(U) by composite Simpson on the interpolant.
    const auto f = Nonlinearity::affine(3, 0.5);
    const auto p = solve_annulus_profile(f, 0.25, 1.2);
    for (double r : {p.r1() + 1e-6, -0.2, 0.1, 0.6, p.r2() - 1e-6}) {
        const int n = 2000;
        const double h = (r - p.R()) / n;
        double sum = 0.0;
        for (int k = 0; k <= n; ++k) {
            const double w = (k == 0 || k == n) ? 1.0 : (k % 2 ? 4.0 : 2.0);
            sum += w * f.extended_value(p.U(p.R() + k * h));
        }
        const double integral = sum * h / 3.0;
        EXPECT_NEAR(p.dU(r), -integral / (1.0 - r * r), 1e-9) << r;
    }
}

TEST(AnnulusProfile, VariationalFieldMatchesFiniteDifference) {
    const double R = 0.2;
    const double d = 1e-4;
    const auto p = solve_annulus_profile(lin1, R, 1.0);
    const auto plus = solve_annulus_profile(lin1, R + d, 1.0);
    const auto minus = solve_annulus_profile(lin1, R - d, 1.0);
    for (double r : {-0.5, -0.1, 0.15, 0.4, 0.6}) {
        const double fd = (plus.U(r) - minus.U(r)) / (2 * d);
        EXPECT_NEAR(p.at(r).Z, fd, 1e-7) << r;
    }
}

TEST(AnnulusProfile, ZerosMonotoneInR) {
    double r1 = -1.0;
    double r2 = -1.0;
    for (double R = -0.9; R <= 0.91; R += 0.1) {
        const auto p = solve_annulus_profile(lin1, R, 1.0);
        EXPECT_GE(p.r1(), r1);
        EXPECT_GE(p.r2(), r2);
        r1 = p.r1();
        r2 = p.r2();
    }
}

TEST(AnnulusProfile, ToleranceRefinementWithinBound) {
    const auto coarse = solve_annulus_profile(lin1, 0.4, 1.0, 1e-8);
    const auto fine = solve_annulus_profile(lin1, 0.4, 1.0, 1e-12);
    EXPECT_LT(std::abs(coarse.r2() - fine.r2()), coarse.zero_error_bound());
    EXPECT_LT(std::abs(coarse.r1() - fine.r1()), coarse.zero_error_bound());
}

TEST(AnnulusProfile, Errors) {
    EXPECT_THROW(solve_annulus_profile(lin, 1.0, 1.0), DomainError);
    EXPECT_THROW(solve_annulus_profile(lin, 0.0, -1.0), DomainError);
    EXPECT_THROW(solve_annulus_profile(lin, 0.0, 1.0, 0.0), DomainError);
    EXPECT_THROW(solve_annulus_profile(Nonlinearity::affine(2, 0, 0.5), 0.0, 1.0), DomainError);
    // f = −x pushes U away from zero: no zero before the poles.
    EXPECT_THROW(solve_annulus_profile(Nonlinearity::affine(-1, 0), 0.0, 1.0), Error);
    const auto p = solve_annulus_profile(lin, 0.0, 1.0);
    EXPECT_THROW(p.at(0.9), DomainError);
}

TEST(DiskProfile, LinearIdentity) {
    for (double M : {0.5, 1.0, 2.0}) {
        const auto d = solve_disk_profile(lin, M);
        EXPECT_NEAR(d.h(), M, 1e-10);
        EXPECT_NEAR(d.s_M(), std::numbers::pi / 2, 1e-10);
        for (double s = 0.0; s < d.s_M(); s += 0.05) EXPECT_NEAR(d.at(s).V, M * std::cos(s), 1e-10);
        EXPECT_NEAR(compute_h(lin, M), M, 1e-10);
    }
}

TEST(DiskProfile, ShiftedClosedForm) {
    // f = 2x + 1: V = 1.5·cos s − 0.5, s_M = arccos(1/3), h = √2.
    const auto d = solve_disk_profile(lin1, 1.0);
    EXPECT_NEAR(d.s_M(), 1.2309594173407747, 1e-10);
    EXPECT_NEAR(d.h(), 1.4142135623730951, 1e-10);
    EXPECT_NEAR(d.at(0.7).V, 1.5 * std::cos(0.7) - 0.5, 1e-10);
}

TEST(DiskProfile, PoleData) {
    for (const auto& f : {lin, lin1, Nonlinearity::affine(3, 0.5)}) {
        const auto d = solve_disk_profile(f, 1.0);
        const auto p = d.at(0.0);
        EXPECT_EQ(p.V, 1.0);
        EXPECT_EQ(p.dV, 0.0);
        EXPECT_DOUBLE_EQ(p.d2V, -f.evaluate(1.0) / 2);
        EXPECT_GT(d.h(), 0.0);
    }
    // cos s = 1 − s²/2 + …
    EXPECT_NEAR(disk_series_coefficient(lin, 1.0), -0.5, 1e-15);
    EXPECT_NEAR(solve_disk_profile(lin, 1.0).at(1e-3).d2V, -std::cos(1e-3), 1e-9);
}

TEST(DiskProfile, NoZero) {
    EXPECT_THROW(solve_disk_profile(Nonlinearity::affine(-1, 0), 1.0), NoZeroFound);
}

TEST(BoundaryGradient, Legendre) {
    const auto p = solve_annulus_profile(lin, 0.0, 1.0);
    EXPECT_NEAR(boundary_gradient(p, ZeroEnd::r2), legendre_gradient, 1e-9);
    EXPECT_NEAR(boundary_gradient(p, ZeroEnd::r1), legendre_gradient, 1e-9);
}

TEST(BoundaryGradient, DivergesTowardPole) {
    // Closed-form Legendre combination a·r + b·(r·artanh r − 1), zero located in log(1 − r)
    // with mpmath at 80 digits.
    struct Case {
        double R, pole_distance, gradient;
    };
    const Case cases[] = {{0.5, 0.2123396042, 3.64052480463069},
                          {0.9, 0.00147970033, 128.40456509941},
                          {0.95, 6.912194509e-6, 14105.5058389115},
                          {0.99, 1.293314352e-23, 1.53868237611951e21},
                          {0.999, 1.505622511e-219, 1.32769003174751e216}};
    double previous = 0.0;
    for (const auto& c : cases) {
        const auto p = solve_annulus_profile(lin, c.R, 1.0);
        const auto& b = p.boundary(ZeroEnd::r2);
        EXPECT_NEAR(b.pole_distance / c.pole_distance, 1.0, 1e-8) << c.R;
        EXPECT_NEAR(boundary_gradient(p, ZeroEnd::r2) / c.gradient, 1.0, 1e-7) << c.R;
        EXPECT_GT(b.gradient, previous);
        previous = b.gradient;
    }
}

TEST(AnnulusProfile, PinchedZeroKeepsTable) {
    const auto p = solve_annulus_profile(lin, 0.99, 1.0);
    EXPECT_TRUE(p.pinched());
    EXPECT_FALSE(p.boundary(ZeroEnd::r2).resolved);
    EXPECT_TRUE(p.boundary(ZeroEnd::r1).resolved);
    EXPECT_LT(p.samples().back().r, 1.0);
    EXPECT_GT(p.samples().back().U, 0.0);
    EXPECT_NEAR(p.U(0.99), 1.0, 1e-12);
    EXPECT_THROW(p.at(p.r2()), DomainError);
}

TEST(SignLemmas, LinearCase) {
    const auto p = solve_annulus_profile(lin, 0.0, 1.0);
    const auto r = check_sign_lemmas(p);
    EXPECT_TRUE(r.z_pattern.pass);
    EXPECT_TRUE(r.g_pattern.pass);
    EXPECT_TRUE(r.concavity.pass);
    EXPECT_GT(r.z_pattern.samples, 2000u);
}

TEST(SignLemmas, AffineFamilies) {
    for (const auto& f : {lin, lin1, Nonlinearity::affine(3, 0.5)}) {
        for (double R : {0.0, 0.3, 0.7, 0.95}) {
            const auto r = check_sign_lemmas(solve_annulus_profile(f, R, 1.0));
            EXPECT_TRUE(r.z_pattern.pass) << R;
            EXPECT_TRUE(r.g_upper.pass) << R;
            if (f.a() == 2.0) EXPECT_TRUE(r.concavity.pass) << R;
        }
    }
}

TEST(SignLemmas, ConvexNearPositiveLowerZero) {
    // At a zero r1 > 0 the equation gives (1 − r1²)U'' = 2·r1·U'(r1) − f(0), which is positive
    // for f = 3x + 1/2, R = 0.95 (scipy DOP853 at rtol 1e-13).
    const auto p = solve_annulus_profile(Nonlinearity::affine(3, 0.5), 0.95, 1.0);
    EXPECT_NEAR(p.r1(), 0.258333693717206, 1e-9);
    EXPECT_NEAR(p.at(p.r1()).d2U, 0.33702925912670256, 1e-7);
    const auto r = check_sign_lemmas(p);
    EXPECT_FALSE(r.concavity.pass);
    EXPECT_LT(r.concavity.worst_r, 0.45);
}

TEST(SignLemmas, LowerHalfOfGChangesSignOffCentre) {
    // G(R) = G'(R) = 0 and G''(R) = −2R·f(M)²/(1 − R²)³, so for R > 0 G is negative on
    // both sides of R. Closed form for f = 2x, R = 0.3: G(0.1) = −0.00492844172999165.
    const auto p = solve_annulus_profile(lin, 0.3, 1.0);
    EXPECT_NEAR(p.at(0.1).G, -0.00492844172999165, 1e-9);
    EXPECT_NEAR(p.at(0.0).G, 0.0366959515276806, 1e-9);
    const auto r = check_sign_lemmas(p);
    EXPECT_FALSE(r.g_lower.pass);
    EXPECT_FALSE(r.g_pattern.pass);
    EXPECT_LT(r.g_lower.worst_r, 0.3);
    EXPECT_TRUE(check_sign_lemmas(solve_annulus_profile(lin, 0.0, 1.0)).g_lower.pass);
}

TEST(SignLemmas, DetectsViolation) {
    // Without the collar, Z(R) = 0 itself registers as a failed strict sign.
    const auto p = solve_annulus_profile(lin, 0.0, 1.0);
    EXPECT_FALSE(check_sign_lemmas(p, 0.0).z_pattern.pass);
}
