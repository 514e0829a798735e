#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include <boost/math/tools/roots.hpp>
#include <gtest/gtest.h>

#include "sphere_oep/error.hpp"
#include "sphere_oep/levelset_geometry.hpp"

using namespace sphere_oep;

namespace {

const Nonlinearity lin = Nonlinearity::affine(2.0, 0.0);
const Nonlinearity lin1 = Nonlinearity::affine(2.0, 1.0);
constexpr double two_pi = 2.0 * std::numbers::pi;

DomainSpec profile_domain(const ModelProfile& p, std::size_t n_s, std::size_t n_theta) {
    DomainSpec d;
    d.s1 = p.boundary(ZeroEnd::r2).pole_distance;
    d.s2 = std::numbers::pi - p.boundary(ZeroEnd::r1).pole_distance;
    d.n_s = n_s;
    d.n_theta = n_theta;
    return d;
}

const ModelProfile& model() {
    static const ModelProfile p = solve_annulus_profile(lin1, 0.3, 1.2, 1e-13);
    return p;
}

GridSolution rotational(std::size_t n_s, std::size_t n_theta = 64) {
    const auto d = profile_domain(model(), n_s, n_theta);
    return solve_dirichlet(d, lin1, profile_guess(d, model()), 1e-11);
}

// height where the model profile takes the value c, on the given side of R
double height_of(double c, bool north) {
    const auto& p = model();
    const double lo = north ? p.R() : p.samples().front().r;
    const double hi = north ? p.samples().back().r : p.R();
    std::uintmax_t iters = 200;
    const auto root = boost::math::tools::toms748_solve([&](double r) { return p.U(r) - c; }, lo, hi,
                                                        boost::math::tools::eps_tolerance<double>(50), iters);
    return 0.5 * (root.first + root.second);
}

std::vector<double> parallel_s(double s, std::size_t n) { return std::vector<double>(n, s); }
std::vector<double> longitudes(std::size_t n, double sign = 1.0) {
    std::vector<double> t(n);
    for (std::size_t k = 0; k < n; ++k) t[k] = sign * two_pi * static_cast<double>(k) / static_cast<double>(n);
    return t;
}

}  // namespace

TEST(Polyline, ParallelLengthAndCurvature) {
    const double r = 0.4;
    const double s = std::acos(r);
    const auto ss = parallel_s(s, 200);
    const auto kappa = polyline_curvature(ss, longitudes(200), true);
    for (double k : kappa) EXPECT_NEAR(k, r / std::sqrt(1 - r * r), 1e-9);
    const auto reversed = polyline_curvature(ss, longitudes(200, -1.0), true);
    for (double k : reversed) EXPECT_NEAR(k, -r / std::sqrt(1 - r * r), 1e-9);
    EXPECT_NEAR(polyline_length(ss, longitudes(200), true), two_pi * std::sin(s), 1e-4);

    const auto equator = polyline_curvature(parallel_s(std::numbers::pi / 2, 50), longitudes(50), true);
    for (double k : equator) EXPECT_NEAR(k, 0.0, 1e-12);

    const auto open = polyline_curvature(ss, longitudes(200), false);
    EXPECT_EQ(open.front(), 0.0);
    EXPECT_EQ(open.back(), 0.0);
}

TEST(LevelCurves, RotationalParallels) {
    const double c = 0.6;
    const double s_north = std::acos(height_of(c, true));
    const double s_south = std::acos(height_of(c, false));
    double err[2];
    int k = 0;
    for (std::size_t n : {64u, 128u}) {
        const auto u = rotational(n);
        const auto set = extract_level_curve(u, c);
        ASSERT_EQ(set.curves.size(), 2u);
        EXPECT_EQ(set.saddle_cells, 0u);
        double e = 0.0;
        for (const auto& curve : set.curves) {
            EXPECT_TRUE(curve.closed);
            EXPECT_EQ(std::abs(curve.winding), 1);
            const double mean_s = std::accumulate(curve.s.begin(), curve.s.end(), 0.0) / curve.size();
            const bool north = mean_s < std::acos(0.3);
            const double sc = north ? s_north : s_south;
            for (double s : curve.s) EXPECT_NEAR(s, sc, 1e-3);
            e = std::max(e, std::abs(curve.length - two_pi * std::sin(sc)));
            // larger u on the left: south of the northern parallel, north of the southern one
            const double rc = std::cos(sc);
            const double expected = (north ? -1.0 : 1.0) * rc / std::sqrt(1 - rc * rc);
            for (double kappa : curve.curvature) EXPECT_NEAR(kappa, expected, 1e-3);
            EXPECT_EQ(curve.winding, north ? -1 : 1);
        }
        err[k++] = e;
    }
    EXPECT_GT(err[0] / err[1], 3.0);
}

TEST(LevelCurves, NearMaxParallelsMerge) {
    const auto u = rotational(128);
    const auto set = extract_level_curve(u, u.u_max() - 1e-4);
    ASSERT_EQ(set.curves.size(), 2u);
    for (const auto& curve : set.curves)
        for (double s : curve.s) EXPECT_NEAR(s, std::acos(0.3), 0.03);
    EXPECT_THROW(extract_level_curve(u, 0.0), DomainError);
    EXPECT_THROW(extract_level_curve(u, u.u_max()), DomainError);
}

TEST(LevelCurves, PerturbedCountStable) {
    const auto p = solve_annulus_profile(lin1, 0.0, 1.0, 1e-13);
    for (std::size_t n : {48u, 96u}) {
        auto d = profile_domain(p, n, n);
        d.inner = {0.01, 3};
        const auto u = solve_dirichlet(d, lin1, profile_guess(d, p), 1e-10);
        const auto set = extract_level_curve(u, 0.5 * u.u_max());
        EXPECT_EQ(set.curves.size(), 2u) << n;
        for (const auto& curve : set.curves) EXPECT_TRUE(curve.closed);
    }
}

TEST(LevelCurves, SaddleCellIsSplit) {
    DomainSpec d;
    d.s1 = 1.0;
    d.s2 = 2.0;
    d.n_s = 6;
    d.n_theta = 8;
    std::vector<double> v((d.n_s + 1) * d.n_theta, 0.0);
    // checkerboard cell at (i, j) = (2, 2): high on one diagonal
    v[2 * 8 + 2] = 0.8;
    v[3 * 8 + 3] = 0.8;
    const GridSolution u(d, lin1, v);
    const auto set = extract_level_curve(u, 0.5);
    EXPECT_EQ(set.saddle_cells, 1u);
    EXPECT_EQ(set.curves.size(), 2u);  // centre 0.4 < 0.5 keeps the peaks apart
    for (const auto& curve : set.curves) EXPECT_TRUE(curve.closed);
}

TEST(GeodesicCurvature, ProfileBoundaryEquality) {
    const auto& p = model();
    const double r2 = p.r2();
    const double s2 = p.boundary(ZeroEnd::r2).pole_distance;
    const auto jet = profile_jet(p, s2, 0.7);
    EXPECT_NEAR(geodesic_curvature(jet), -r2 / std::sqrt(1 - r2 * r2), 1e-9);
    EXPECT_NEAR(geodesic_curvature(jet, false), r2 / std::sqrt(1 - r2 * r2), 1e-9);
    const double r1 = p.r1();
    const auto south = profile_jet(p, std::numbers::pi - p.boundary(ZeroEnd::r1).pole_distance, 0.0);
    EXPECT_NEAR(geodesic_curvature(south), r1 / std::sqrt(1 - r1 * r1), 1e-9);
    EXPECT_THROW(geodesic_curvature(profile_jet(p, std::acos(p.R()))), NearCritical);
}

TEST(GeodesicCurvature, GridBoundaryExactForParallels) {
    // with u_θ = 0 the formula collapses to −sign(u_s)·cot s for any radial derivatives
    const auto& p = model();
    const double r2 = p.r2();
    const double exact = -r2 / std::sqrt(1 - r2 * r2);
    double err[2];
    int k = 0;
    for (std::size_t n : {32u, 64u}) {
        const auto u = rotational(n, 16);
        err[k++] = std::abs(geodesic_curvature(u, u.s_at(0, 3), u.theta_at(3)) - exact);
    }
    EXPECT_LT(err[0], 1e-12);
    EXPECT_LT(err[1], 1e-12);
}

TEST(MaxCurve, RotationalRidge) {
    const auto u = rotational(128);
    const auto ridge = extract_max_curve(u);
    ASSERT_EQ(ridge.size(), u.n_theta());
    EXPECT_TRUE(ridge.closed);
    EXPECT_EQ(ridge.winding, 1);
    const double R = 0.3;
    for (double s : ridge.s) EXPECT_NEAR(s, std::acos(R), 1e-3);
    for (double kappa : ridge.curvature) EXPECT_NEAR(kappa, R / std::sqrt(1 - R * R), 5e-3);
    EXPECT_NEAR(ridge.length, two_pi * std::sqrt(1 - R * R), 5e-3);
}

TEST(MaxCurve, TwoRidgesRejected) {
    DomainSpec d;
    d.s1 = 1.0;
    d.s2 = 2.0;
    d.n_s = 8;
    d.n_theta = 8;
    std::vector<double> v((d.n_s + 1) * d.n_theta, 0.0);
    for (std::size_t j = 0; j < 8; ++j) {
        v[2 * 8 + j] = 1.0;
        v[6 * 8 + j] = 1.0;
        v[4 * 8 + j] = 0.5;
    }
    const GridSolution u(d, lin1, v);
    EXPECT_THROW(extract_max_curve(u), NoMaxCurve);
}

TEST(BoundaryCurve, LengthIsParallel) {
    const auto u = rotational(32, 128);
    const auto north = boundary_curve(u, ZeroEnd::r2);
    EXPECT_NEAR(north.length, two_pi * std::sin(u.domain().s1), 1e-3);
    EXPECT_EQ(north.winding, 1);
    const auto south = boundary_curve(u, ZeroEnd::r1);
    EXPECT_NEAR(south.length, two_pi * std::sin(u.domain().s2), 1e-3);
}

TEST(RadialGraph, ProfileContactConstant) {
    const auto& p = model();
    const auto graph = radial_graph(p, 48);
    ASSERT_EQ(graph.stats.size(), 3u);
    for (const auto& st : graph.stats) {
        EXPECT_EQ(st.count, 48u);
        EXPECT_LT(st.stddev, 1e-12);
        if (st.curve == GraphCurve::max) {
            EXPECT_NEAR(st.mean, 1.0, 1e-14);
        } else {
            EXPECT_NEAR(st.mean, st.alpha_gradient_sq, 1e-12);
            EXPECT_LT(st.mean, 1.0);
        }
    }
    for (std::size_t k = 0; k < graph.points.size(); ++k) {
        const double radius = std::sqrt(graph.points[k][0] * graph.points[k][0] +
                                        graph.points[k][1] * graph.points[k][1] +
                                        graph.points[k][2] * graph.points[k][2]);
        EXPECT_NEAR(radius, graph.curve[k] == GraphCurve::max ? 1.0 : 1.0 + p.M(), 1e-10 * (1 + p.M()));
    }
}

TEST(RadialGraph, GridContactConstant) {
    const auto u = rotational(96, 32);
    const auto graph = radial_graph(u);
    for (const auto& st : graph.stats) {
        EXPECT_LT(st.stddev, 1e-6) << to_string(st.curve);
        if (st.curve == GraphCurve::max) EXPECT_NEAR(st.mean, 1.0, 1e-8);
    }
    const auto analytic = radial_graph(model(), 32);
    for (std::size_t c = 0; c < 2; ++c) EXPECT_NEAR(graph.stats[c].mean, analytic.stats[c].mean, 1e-4);
}

TEST(Killing, ClosedFormAndFlow) {
    const auto p = solve_annulus_profile(lin, 0.0, 1.0, 1e-13);
    // −√0.75·U'(0.5) with U'(0.5) = −(artanh 0.5 + 0.5/0.75)
    EXPECT_NEAR(killing_derivative(p, 0.5, 0.0), 1.05306334463780, 1e-9);
    EXPECT_NEAR(killing_derivative_fd(p, 0.5, 0.0), 1.05306334463780, 1e-8);
    EXPECT_NEAR(killing_derivative(p, 0.5, std::numbers::pi / 2), 0.0, 1e-15);
    EXPECT_NEAR(killing_derivative(p, 0.0, 0.3), 0.0, 1e-12);
    const auto& q = model();
    for (double r : {-0.4, 0.1, 0.6})
        for (double t : {0.0, 1.0, 2.5})
            EXPECT_NEAR(killing_derivative_fd(q, r, t), killing_derivative(q, r, t), 1e-7);
    EXPECT_THROW(killing_derivative(p, 0.95, 0.0), DomainError);
}
