#include "sphere_oep/comparison.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include <Eigen/Dense>
#include <boost/math/tools/roots.hpp>

#include "sphere_oep/error.hpp"
#include "sphere_oep/levelset_geometry.hpp"

namespace sphere_oep {

namespace {

constexpr double two_pi = 2.0 * std::numbers::pi;

// U and U' at any height of [r1, r2], using the boundary data past a pinched table end
std::pair<double, double> value_slope(const ModelProfile& p, double r) {
    const auto& table = p.samples();
    if (r > table.back().r) return {0.0, p.boundary(ZeroEnd::r2).dU};
    if (r < table.front().r) return {0.0, p.boundary(ZeroEnd::r1).dU};
    const auto q = p.at(r);
    return {q.U, q.dU};
}

// distance from the zero to its pole; √(1 − r̄²) = sin of it
double pole_distance(const ModelProfile& p, ZeroEnd end) { return p.boundary(end).pole_distance; }

// r̄/√(1 − r̄²) for the zero at `end`
double zero_cot(const ModelProfile& p, ZeroEnd end) {
    const double c = 1.0 / std::tan(pole_distance(p, end));
    return end == ZeroEnd::r2 ? c : -c;
}

double colatitude_of_zero(const ModelProfile& p, ZeroEnd end) {
    return end == ZeroEnd::r2 ? pole_distance(p, end) : std::numbers::pi - pole_distance(p, end);
}

double parallel_cot(double r) { return r / std::sqrt(1.0 - r * r); }

// least squares y ≈ Σ c_k x^k over the given powers
Eigen::VectorXd polyfit(const std::vector<double>& x, const std::vector<double>& y, const std::vector<int>& powers,
                        double scale) {
    Eigen::MatrixXd A(static_cast<Eigen::Index>(x.size()), static_cast<Eigen::Index>(powers.size()));
    Eigen::VectorXd b(static_cast<Eigen::Index>(x.size()));
    for (std::size_t i = 0; i < x.size(); ++i) {
        for (std::size_t k = 0; k < powers.size(); ++k)
            A(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = std::pow(x[i] / scale, powers[k]);
        b[static_cast<Eigen::Index>(i)] = y[i];
    }
    Eigen::VectorXd c = A.colPivHouseholderQr().solve(b);
    for (std::size_t k = 0; k < powers.size(); ++k) c[static_cast<Eigen::Index>(k)] /= std::pow(scale, powers[k]);
    return c;
}

}  // namespace

ComparisonTriple make_triple(ModelProfile profile, int branch, double tau_target) {
    if (branch != 1 && branch != 2) throw DomainError("branch must be 1 or 2");
    return ComparisonTriple{std::move(profile), branch, tau_target};
}

ComparisonTriple associated_triple(const TauCurve& curve, double tau, ZeroEnd side, double tol) {
    if (!(tau > 1.0)) throw DomainError("tau <= 1 has no annular comparison model");
    const CriticalHeight height = expected_critical_height(curve, tau);
    const bool two = height.branch == CriticalBranch::two;
    double R = 0.0;
    int branch = 2;
    if (side == ZeroEnd::r2) {
        R = two ? height.R : -height.R;
    } else {
        R = two ? -height.R : height.R;
        branch = 1;
    }
    return make_triple(solve_annulus_profile(curve.f, R, curve.M, tol), branch, tau);
}

Nonlinearity effective_nonlinearity(const GridSolution& solution) {
    const auto mu = solution.spectral_factor();
    if (!mu) return solution.f();
    const auto& f = solution.f();
    return Nonlinearity::affine(f.a() * *mu, f.b() * *mu, f.x_max());
}

double pseudo_radial(const ComparisonTriple& t, double u) {
    const auto& p = t.profile;
    const double M = p.M();
    if (!(u >= 0.0 && u <= M)) throw DomainError("pseudo-radial value outside [0, M]");
    if (u == M) return p.R();
    if (u == 0.0) return t.zero();
    const auto& table = p.samples();
    const double edge = t.branch == 2 ? table.back().r : table.front().r;
    const double u_edge = value_slope(p, edge).first;
    if (u <= u_edge) {
        // inside the last tabulated interval before a pinched zero
        return edge + (t.zero() - edge) * (u_edge - u) / u_edge;
    }
    const double lo = t.branch == 2 ? p.R() : edge;
    const double hi = t.branch == 2 ? edge : p.R();
    auto g = [&](double r) { return value_slope(p, r).first - u; };
    std::uintmax_t iters = 200;
    const auto root = boost::math::tools::toms748_solve(g, lo, hi, g(lo), g(hi),
                                                        boost::math::tools::eps_tolerance<double>(53), iters);
    return 0.5 * (root.first + root.second);
}

double wbar(const ComparisonTriple& t, double u) {
    if (u == 0.0) {
        const double g = t.profile.boundary(t.end()).gradient;
        return g * g;
    }
    const double psi = pseudo_radial(t, u);
    const double dU = value_slope(t.profile, psi).second;
    return (1.0 - psi * psi) * dU * dU;
}

std::vector<double> wbar_field(const ComparisonTriple& t, std::span<const double> u_values) {
    std::vector<double> out;
    out.reserve(u_values.size());
    for (double u : u_values) out.push_back(wbar(t, u));
    return out;
}

double wbar_derivative(const ComparisonTriple& t, double u) {
    const double psi = pseudo_radial(t, u);
    return 2.0 * (psi * value_slope(t.profile, psi).second - t.profile.f().evaluate(u));
}

std::optional<double> phi(const ComparisonTriple& t, double psi, double collar) {
    if (std::abs(psi - t.R()) < collar) return std::nullopt;
    const auto [U, dU] = value_slope(t.profile, psi);
    return (t.profile.f().evaluate(std::max(U, 0.0)) - 2.0 * psi * dU) / ((1.0 - psi * psi) * dU * dU);
}

// ---------------------------------------------------------------------------
// Gradient estimate

namespace {

void record(ComparisonReport& report, const ComparisonTriple& t, const GradientSample& sample,
            const ComparisonOptions& options) {
    const double v = sample.W - sample.Wbar;
    if (report.samples.empty() || v > report.max_violation) {
        report.max_violation = v;
        report.worst = sample;
    }
    report.max_abs_difference = std::max(report.max_abs_difference, std::abs(v));
    if (sample.u > 0.0) {
        const double psi = pseudo_radial(t, sample.u);
        if (std::abs(psi - t.R()) >= options.beta_collar) {
            const double dU = value_slope(t.profile, psi).second;
            const double F = sample.W / (dU * dU) - (1.0 - psi * psi);
            report.max_F_beta = std::max(report.max_F_beta, F);
        }
    }
    report.samples.push_back(sample);
}

ComparisonReport start_report(const ComparisonTriple& t, const ComparisonOptions& options) {
    ComparisonReport report;
    report.branch = t.branch;
    report.R = t.R();
    report.M = t.M();
    report.slack = options.slack;
    report.max_F_beta = -std::numeric_limits<double>::infinity();
    return report;
}

}  // namespace

ComparisonReport verify_gradient_estimate(const GridSolution& solution, const ComparisonTriple& t,
                                          const ComparisonOptions& options) {
    const double M = t.M();
    if (std::abs(solution.peak_value() - M) > options.mismatch_tol)
        throw MismatchError("solution maximum " + std::to_string(solution.peak_value()) + " differs from M = " +
                            std::to_string(M));
    const DomainSpec& d = solution.domain();
    const LevelCurve ridge = extract_max_curve(solution);
    ComparisonReport report = start_report(t, options);
    for (std::size_t j = 0; j < solution.n_theta(); ++j) {
        const double th = d.theta(j);
        const double a = d.inner_boundary(th);
        const double xi_ridge = (ridge.s[j] - a) / (d.outer_boundary(th) - a);
        for (std::size_t i = 1; i < solution.n_s(); ++i) {
            const double xi = d.xi(i);
            if (t.branch == 2 ? xi >= xi_ridge : xi <= xi_ridge) continue;
            const SphericalJet jet = solution.jet(i, j);
            const double u = std::clamp(jet.u, 0.0, M);
            record(report, t, {jet.s, th, u, jet.grad_sq(), wbar(t, u)}, options);
        }
    }
    if (report.samples.empty()) throw ExtractionError("component has no interior nodes");
    report.pass = report.max_violation <= options.slack;
    return report;
}

ComparisonReport verify_gradient_estimate(const ModelProfile& solution, const ComparisonTriple& t,
                                          const ComparisonOptions& options) {
    const double M = t.M();
    if (std::abs(solution.M() - M) > options.mismatch_tol)
        throw MismatchError("solution maximum differs from the model maximum");
    ComparisonReport report = start_report(t, options);
    for (const auto& row : solution.samples()) {
        if (t.branch == 2 ? row.r < solution.R() : row.r > solution.R()) continue;
        const double u = std::clamp(row.U, 0.0, M);
        const double W = (1.0 - row.r * row.r) * row.dU * row.dU;
        record(report, t, {std::acos(row.r), 0.0, u, W, wbar(t, u)}, options);
    }
    report.pass = report.max_violation <= options.slack;
    return report;
}

// ---------------------------------------------------------------------------
// Curvature and length

namespace {

CurvatureReport curvature_bounds(const ComparisonTriple& t, double slack) {
    CurvatureReport r;
    r.branch = t.branch;
    r.slack = slack;
    r.boundary_bound = t.branch == 2 ? -zero_cot(t.profile, ZeroEnd::r2) : zero_cot(t.profile, ZeroEnd::r1);
    r.max_curve_bound = (t.branch == 2 ? 1.0 : -1.0) * parallel_cot(t.R());
    return r;
}

void finish(CurvatureReport& r) {
    r.pass = r.boundary_margin() >= -r.slack && r.max_curve_margin() >= -r.slack;
}

}  // namespace

CurvatureReport verify_curvature_estimates(const GridSolution& solution, const ComparisonTriple& t, double slack) {
    CurvatureReport r = curvature_bounds(t, slack);
    const std::size_t i = t.branch == 2 ? 0 : solution.n_s();
    double best = -1.0;
    for (std::size_t j = 0; j < solution.n_theta(); ++j) {
        const SphericalJet jet = solution.jet(i, j);
        if (jet.grad_sq() > best) {
            best = jet.grad_sq();
            r.boundary_kappa = geodesic_curvature(jet, true);
            r.boundary_s = jet.s;
            r.boundary_theta = jet.theta;
        }
    }
    const LevelCurve ridge = extract_max_curve(solution);
    const double sign = t.branch == 2 ? 1.0 : -1.0;
    r.max_curve_kappa = -std::numeric_limits<double>::infinity();
    for (double k : ridge.curvature) r.max_curve_kappa = std::max(r.max_curve_kappa, sign * k);
    finish(r);
    return r;
}

CurvatureReport verify_curvature_estimates(const ModelProfile& solution, const ComparisonTriple& t, double slack) {
    CurvatureReport r = curvature_bounds(t, slack);
    r.boundary_s = colatitude_of_zero(solution, t.end());
    r.boundary_kappa = geodesic_curvature(profile_jet(solution, r.boundary_s), true);

    constexpr std::size_t n = 64;
    const std::vector<double> s(n, std::acos(solution.R()));
    std::vector<double> theta(n);
    for (std::size_t k = 0; k < n; ++k) theta[k] = two_pi * static_cast<double>(k) / static_cast<double>(n);
    const double sign = t.branch == 2 ? 1.0 : -1.0;
    r.max_curve_kappa = -std::numeric_limits<double>::infinity();
    for (double k : polyline_curvature(s, theta, true)) r.max_curve_kappa = std::max(r.max_curve_kappa, sign * k);
    finish(r);
    return r;
}

namespace {

LengthReport length_bounds(const ComparisonTriple& t, double slack) {
    LengthReport r;
    r.branch = t.branch;
    r.slack = slack;
    const double zero_sin = std::sin(pole_distance(t.profile, t.end()));
    r.factor = std::sqrt(1.0 - t.R() * t.R()) / zero_sin;
    r.boundary_bound_applies = t.profile.f().evaluate(0.0) == 0.0;
    r.boundary_bound = two_pi * zero_sin;
    return r;
}

void finish(LengthReport& r) {
    r.pass = r.margin() >= -r.slack;
    r.boundary_bound_pass = !r.boundary_bound_applies || r.boundary_bound_margin() >= -r.slack;
}

}  // namespace

LengthReport verify_length_estimate(const GridSolution& solution, const ComparisonTriple& t, double slack) {
    LengthReport r = length_bounds(t, slack);
    r.max_curve_length = extract_max_curve(solution).length;
    r.boundary_length = boundary_curve(solution, t.end()).length;
    finish(r);
    return r;
}

LengthReport verify_length_estimate(const ModelProfile& solution, const ComparisonTriple& t, double slack) {
    LengthReport r = length_bounds(t, slack);
    r.max_curve_length = two_pi * std::sqrt(1.0 - solution.R() * solution.R());
    r.boundary_length = two_pi * std::sin(pole_distance(solution, t.end()));
    finish(r);
    return r;
}

// ---------------------------------------------------------------------------
// Expansion fits

TaylorFit fit_taylor_at_max(const ModelProfile& p, double half_width) {
    const double R = p.R();
    const double fM = p.f().evaluate(p.M());
    const double q2 = 1.0 - R * R;
    std::vector<double> t;
    std::vector<double> y;
    for (int k = -100; k <= 100; ++k) {
        const double dt = half_width * k / 100.0;
        const double r = R + dt;
        if (r <= p.samples().front().r || r >= p.samples().back().r) continue;
        t.push_back(dt);
        y.push_back(p.M() - p.U(r));
    }
    const auto c = polyfit(t, y, {2, 3, 4, 5, 6}, half_width);
    return {c[0], fM / (2.0 * q2), c[1], 2.0 * R * fM / (3.0 * q2 * q2)};
}

WbarExpansionFit fit_wbar_expansion(const ComparisonTriple& t, double max_gap) {
    const double fM = t.profile.f().evaluate(t.M());
    std::vector<double> x;
    std::vector<double> y;
    for (int k = 0; k <= 60; ++k) {
        const double D = max_gap * std::pow(10.0, -4.0 * k / 60.0);
        x.push_back(std::sqrt(D));
        y.push_back(wbar(t, t.M() - D) / D);
    }
    const auto c = polyfit(x, y, {0, 1, 2}, std::sqrt(max_gap));
    const double R = t.R();
    const double expected = (t.branch == 2 ? 1.0 : -1.0) * 4.0 * R * std::sqrt(2.0 * fM) /
                            (3.0 * std::sqrt(1.0 - R * R));
    return {c[0], 2.0 * fM, c[1], expected};
}

ChrFit fit_chr_expansion(const ModelProfile& p, double half_width) {
    const double R = p.R();
    const double fM = p.f().evaluate(p.M());
    const double sR = std::acos(R);
    std::vector<double> rho;
    std::vector<double> y;
    for (int k = -100; k <= 100; ++k) {
        const double d = half_width * k / 100.0;
        const double r = std::cos(sR - d);
        if (r <= p.samples().front().r || r >= p.samples().back().r) continue;
        rho.push_back(d);
        y.push_back(p.U(r) - p.M());
    }
    const auto c = polyfit(rho, y, {2, 3, 4, 5, 6}, half_width);
    return {c[0], -0.5 * fM, c[1], -fM * parallel_cot(R) / 6.0};
}

// ---------------------------------------------------------------------------

void to_json(nlohmann::json& j, const ComparisonReport& r) {
    j = {{"branch", r.branch},
         {"R", r.R},
         {"M", r.M},
         {"slack", r.slack},
         {"max_violation", r.max_violation},
         {"max_abs_difference", r.max_abs_difference},
         {"worst", {{"s", r.worst.s}, {"theta", r.worst.theta}, {"u", r.worst.u}, {"W", r.worst.W}, {"Wbar", r.worst.Wbar}}},
         {"max_F_beta", r.max_F_beta},
         {"samples", r.samples.size()},
         {"pass", r.pass}};
}

void to_json(nlohmann::json& j, const CurvatureReport& r) {
    j = {{"branch", r.branch},
         {"boundary", {{"kappa", r.boundary_kappa}, {"bound", r.boundary_bound}, {"margin", r.boundary_margin()},
                       {"s", r.boundary_s}, {"theta", r.boundary_theta}}},
         {"max_curve", {{"kappa", r.max_curve_kappa}, {"bound", r.max_curve_bound}, {"margin", r.max_curve_margin()}}},
         {"slack", r.slack},
         {"pass", r.pass}};
}

void to_json(nlohmann::json& j, const LengthReport& r) {
    j = {{"branch", r.branch},
         {"max_curve_length", r.max_curve_length},
         {"boundary_length", r.boundary_length},
         {"factor", r.factor},
         {"rhs", r.rhs()},
         {"margin", r.margin()},
         {"slack", r.slack},
         {"pass", r.pass},
         {"boundary_bound", {{"applies", r.boundary_bound_applies}, {"bound", r.boundary_bound},
                             {"margin", r.boundary_bound_margin()}, {"pass", r.boundary_bound_pass}}}};
}

}  // namespace sphere_oep
