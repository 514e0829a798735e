#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include <gtest/gtest.h>

#include "sphere_oep/annulus_pde.hpp"
#include "sphere_oep/error.hpp"

using namespace sphere_oep;

namespace {

const Nonlinearity lin = Nonlinearity::affine(2.0, 0.0);
const Nonlinearity lin1 = Nonlinearity::affine(2.0, 1.0);

// arccos of the positive root of r·artanh(r) = 1
constexpr double legendre_s1 = 0.585281588932581;

DomainSpec legendre_domain(std::size_t n_s, std::size_t n_theta = 16) {
    DomainSpec d;
    d.s1 = legendre_s1;
    d.s2 = std::numbers::pi - legendre_s1;
    d.n_s = n_s;
    d.n_theta = n_theta;
    return d;
}

DomainSpec profile_domain(const ModelProfile& p, std::size_t n_s, std::size_t n_theta = 16) {
    DomainSpec d;
    d.s1 = p.boundary(ZeroEnd::r2).pole_distance;
    d.s2 = std::numbers::pi - p.boundary(ZeroEnd::r1).pole_distance;
    d.n_s = n_s;
    d.n_theta = n_theta;
    return d;
}

double max_node_error(const GridSolution& u, const ModelProfile& p) {
    double err = 0.0;
    for (std::size_t i = 1; i < u.n_s(); ++i)
        for (std::size_t j = 0; j < u.n_theta(); ++j)
            err = std::max(err, std::abs(u.value(i, j) - p.U(std::cos(u.s_at(i, j)))));
    return err;
}

}  // namespace

TEST(DomainSpec, Validation) {
    auto d = legendre_domain(16);
    EXPECT_NO_THROW(d.validate());
    d.n_theta = 15;
    EXPECT_THROW(d.validate(), DomainError);
    d = legendre_domain(4);
    EXPECT_THROW(d.validate(), DomainError);
    d = legendre_domain(16);
    d.s2 = d.s1;
    EXPECT_THROW(d.validate(), DomainError);
    d = legendre_domain(16);
    d.inner = {0.6, 2};
    EXPECT_THROW(d.validate(), DomainError);
    d = legendre_domain(16);
    d.outer = {1.0, 3};
    EXPECT_THROW(d.validate(), DomainError);
}

TEST(DomainSpec, JsonRoundTrip) {
    auto d = legendre_domain(32, 24);
    d.inner = {0.01, 3};
    const nlohmann::json j = d;
    const auto back = j.get<DomainSpec>();
    EXPECT_EQ(back.n_s, 32u);
    EXPECT_EQ(back.n_theta, 24u);
    EXPECT_EQ(back.inner.mode, 3);
    EXPECT_DOUBLE_EQ(back.inner.amplitude, 0.01);
    EXPECT_DOUBLE_EQ(back.s2, d.s2);
}

TEST(SolveDirichlet, RotationalLegendreSecondOrder) {
    const auto p = solve_annulus_profile(lin, 0.0, 1.0, 1e-13);
    double errors[2];
    int k = 0;
    for (std::size_t n_s : {64u, 128u}) {
        const auto d = legendre_domain(n_s);
        const auto u = solve_dirichlet(d, lin, profile_guess(d, p), 1e-10);
        EXPECT_LE(u.residual(), 1e-10);
        EXPECT_LE(u.iterations(), 8);
        ASSERT_TRUE(u.spectral_factor().has_value());
        EXPECT_NEAR(*u.spectral_factor(), 1.0, 1e-3);
        errors[k++] = max_node_error(u, p);
    }
    const double ratio = errors[0] / errors[1];
    EXPECT_GT(ratio, 3.0);
    EXPECT_LT(ratio, 5.0);
}

TEST(SolveDirichlet, LinearCaseOneNewtonStep) {
    // the bordered eigen-system is quadratic in (u, μ); from the exact profile
    // the first step already lands within the discretization error
    const auto p = solve_annulus_profile(lin, 0.0, 1.0, 1e-13);
    const auto d = legendre_domain(64);
    const auto u = solve_dirichlet(d, lin, profile_guess(d, p), 1e-10);
    EXPECT_LE(u.iterations(), 4);
}

TEST(SolveDirichlet, AffineRotationalSecondOrder) {
    const auto p = solve_annulus_profile(lin1, 0.3, 1.2, 1e-13);
    double errors[2];
    int k = 0;
    for (std::size_t n_s : {64u, 128u}) {
        const auto d = profile_domain(p, n_s);
        const auto u = solve_dirichlet(d, lin1, profile_guess(d, p), 1e-10);
        EXPECT_LE(u.residual(), 1e-10);
        EXPECT_FALSE(u.spectral_factor().has_value());
        errors[k++] = max_node_error(u, p);
    }
    EXPECT_GT(errors[0] / errors[1], 3.0);
    EXPECT_LT(errors[0] / errors[1], 5.0);
}

TEST(SolveDirichlet, PositiveAndRotationallyInvariant) {
    const auto p = solve_annulus_profile(lin1, 0.3, 1.2, 1e-13);
    const auto d = profile_domain(p, 48, 32);
    const double tol = 1e-10;
    const auto u = solve_dirichlet(d, lin1, profile_guess(d, p), tol);
    for (std::size_t i = 0; i <= u.n_s(); ++i) {
        double lo = u.value(i, 0);
        double hi = lo;
        for (std::size_t j = 0; j < u.n_theta(); ++j) {
            lo = std::min(lo, u.value(i, j));
            hi = std::max(hi, u.value(i, j));
            if (i == 0 || i == u.n_s())
                EXPECT_EQ(u.value(i, j), 0.0);
            else
                EXPECT_GT(u.value(i, j), 0.0);
        }
        EXPECT_LE(hi - lo, tol);
    }
}

TEST(SolveDirichlet, ZeroGuessFallsBackToRamp) {
    const auto p = solve_annulus_profile(lin1, 0.0, 1.0, 1e-13);
    const auto d = profile_domain(p, 32);
    const std::vector<double> zeros((d.n_s + 1) * d.n_theta, 0.0);
    const auto u = solve_dirichlet(d, lin1, zeros, 1e-10);
    EXPECT_NEAR(u.u_max(), 1.0, 5e-3);
}

TEST(SolveDirichlet, JetMatchesProfileDerivatives) {
    const auto p = solve_annulus_profile(lin1, 0.2, 1.0, 1e-13);
    const auto d = profile_domain(p, 128);
    const auto u = solve_dirichlet(d, lin1, profile_guess(d, p), 1e-11);
    for (std::size_t i : {0u, 1u, 40u, 64u, 127u, 128u}) {
        const auto jet = u.jet(i, 3);
        const double r = std::cos(jet.s);
        const double sn = std::sin(jet.s);
        const auto q = p.at(std::clamp(r, p.r1(), p.r2()));
        // u(s) = U(cos s)
        EXPECT_NEAR(jet.u_s, -sn * q.dU, 2e-4) << i;
        EXPECT_NEAR(jet.u_ss, sn * sn * q.d2U - r * q.dU, 5e-3) << i;
        EXPECT_NEAR(jet.u_t, 0.0, 1e-9);
        EXPECT_NEAR(jet.laplacian(), -lin1(std::max(jet.u, 0.0)), 5e-3) << i;
    }
}

TEST(SolveDirichlet, PerturbedSolveConverges) {
    const auto p = solve_annulus_profile(lin1, 0.0, 1.0, 1e-13);
    auto d = profile_domain(p, 48, 48);
    d.inner = {0.01, 3};
    const auto u = solve_dirichlet(d, lin1, profile_guess(d, p), 1e-10);
    EXPECT_LE(u.residual(), 1e-10);
    EXPECT_NEAR(u.u_max(), 1.0, 0.05);
    // mode 3 symmetry: θ → θ + 2π/3
    for (std::size_t i = 1; i < u.n_s(); ++i)
        EXPECT_NEAR(u.value(i, 5), u.value(i, 5 + 16), 1e-9);
}

TEST(SolveDirichlet, Errors) {
    const auto d = legendre_domain(16);
    const std::vector<double> short_guess(10, 0.0);
    EXPECT_THROW(solve_dirichlet(d, lin1, short_guess, 1e-10), DomainError);
    const std::vector<double> guess((d.n_s + 1) * d.n_theta, 0.0);
    EXPECT_THROW(solve_dirichlet(d, lin1, guess, 0.0), DomainError);
    EXPECT_THROW(solve_dirichlet(d, lin1, guess, 1e-10, NewtonOptions{0, 8}), NonConvergence);
}

TEST(GridSolutionIo, RoundTrip) {
    const auto p = solve_annulus_profile(lin, 0.0, 1.0, 1e-13);
    auto d = legendre_domain(16, 8);
    const auto u = solve_dirichlet(d, lin, profile_guess(d, p), 1e-10);
    std::stringstream buffer;
    write_grid_solution(buffer, u);
    const auto back = read_grid_solution(buffer);
    ASSERT_EQ(back.values().size(), u.values().size());
    for (std::size_t k = 0; k < u.values().size(); ++k) EXPECT_EQ(back.values()[k], u.values()[k]);
    EXPECT_EQ(back.iterations(), u.iterations());
    EXPECT_EQ(back.spectral_factor(), u.spectral_factor());
    EXPECT_EQ(back.f().descriptor(), "affine:2,0");

    std::stringstream bad("{\"format\":\"other\"}\n");
    EXPECT_THROW(read_grid_solution(bad), DomainError);
}

TEST(FitModel, LegendreAnnulus) {
    const auto fit = fit_model_to_annulus(0.5857, 2.5559, lin, 1e-3);
    EXPECT_NEAR(fit.R, 0.0, 1e-3);
    EXPECT_TRUE(fit.M_pinned);
    EXPECT_EQ(fit.M, 1.0);
}

TEST(FitModel, SymmetricAnnulusGivesEquator) {
    const auto fit = fit_model_to_annulus(0.9, std::numbers::pi - 0.9, lin1, 1e-10);
    EXPECT_NEAR(fit.R, 0.0, 1e-9);
}

TEST(FitModel, RoundTrip) {
    for (auto [R, M] : {std::pair{0.3, 1.2}, std::pair{-0.5, 0.7}, std::pair{0.0, 2.0}}) {
        const auto p = solve_annulus_profile(lin1, R, M, 1e-13);
        const double s1 = p.boundary(ZeroEnd::r2).pole_distance;
        const double s2 = std::numbers::pi - p.boundary(ZeroEnd::r1).pole_distance;
        const auto fit = fit_model_to_annulus(s1, s2, lin1, 1e-11);
        EXPECT_NEAR(fit.R, R, 1e-6);
        EXPECT_NEAR(fit.M, M, 1e-6);
        EXPECT_FALSE(fit.M_pinned);
    }
}

TEST(FitModel, Errors) {
    EXPECT_THROW(fit_model_to_annulus(1.0, 0.5, lin, 1e-6), DomainError);
    // wider than any 2x annulus with M = 1 and thinner than the Legendre one
    EXPECT_THROW(fit_model_to_annulus(0.3, 0.6, lin, 1e-6), NoSolution);
}

TEST(MaxSet, RotationalParallel) {
    const auto p = solve_annulus_profile(lin1, 0.3, 1.0, 1e-13);
    const auto d = profile_domain(p, 64, 32);
    const auto u = solve_dirichlet(d, lin1, profile_guess(d, p), 1e-11);
    const auto set = max_set(u, 1e-9);
    ASSERT_EQ(set.components.size(), 1u);
    EXPECT_TRUE(set.components[0].encircles);
    const double cell = (d.s2 - d.s1) / static_cast<double>(d.n_s);
    for (const auto& node : set.components[0].nodes)
        EXPECT_LE(std::abs(u.s_at(node.i, node.j) - std::acos(0.3)), cell);
}

TEST(MaxSet, ZeroCollarIsArgmax) {
    const auto p = solve_annulus_profile(lin1, 0.0, 1.0, 1e-13);
    auto d = profile_domain(p, 48, 48);
    d.inner = {0.01, 3};
    const auto u = solve_dirichlet(d, lin1, profile_guess(d, p), 1e-10);
    const auto set = max_set(u, 0.0);
    ASSERT_GE(set.components.size(), 1u);
    for (const auto& c : set.components) {
        EXPECT_FALSE(c.encircles);
        for (const auto& node : c.nodes) EXPECT_EQ(u.value(node.i, node.j), u.u_max());
    }
    EXPECT_THROW(max_set(u, -1.0), DomainError);
}

TEST(MaxSet, PerturbedRidge) {
    // the mode-3 perturbation tilts the ridge: three isolated maxima, one
    // encircling band once the collar covers the ridge variation
    const auto p = solve_annulus_profile(lin1, 0.0, 1.0, 1e-13);
    for (std::size_t n : {48u, 96u}) {
        auto d = profile_domain(p, n, n);
        d.inner = {0.01, 3};
        const auto u = solve_dirichlet(d, lin1, profile_guess(d, p), 1e-10);
        double ridge_min = u.u_max();
        for (std::size_t j = 0; j < u.n_theta(); ++j) {
            double column = 0.0;
            for (std::size_t i = 0; i <= u.n_s(); ++i) column = std::max(column, u.value(i, j));
            ridge_min = std::min(ridge_min, column);
        }
        const auto tight = max_set(u, 1e-4);
        EXPECT_EQ(tight.components.size(), 3u) << n;
        const auto band = max_set(u, 2.0 * (u.u_max() - ridge_min));
        ASSERT_EQ(band.components.size(), 1u) << n;
        EXPECT_TRUE(band.components[0].encircles) << n;
    }
}
