#include "sphere_oep/tau.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <boost/math/tools/roots.hpp>

#include "sphere_oep/detail/parallel.hpp"
#include "sphere_oep/error.hpp"
#include "sphere_oep/model_profiles.hpp"

namespace sphere_oep {

std::vector<double> default_tau_grid() {
    std::vector<double> grid;
    for (int k = 0; k < 20; ++k) grid.push_back(0.05 * k);
    return grid;
}

std::vector<double> pole_extension(int k_first, int k_last) {
    std::vector<double> out;
    for (int k = k_first; k <= k_last; ++k) out.push_back(1.0 - std::ldexp(1.0, -k));
    return out;
}

namespace {

struct Gradients {
    double g1;
    double g2;
};

Gradients gradients_at(const Nonlinearity& f, double R, double M, double tol) {
    const auto p = solve_annulus_profile(f, R, M, tol);
    return {boundary_gradient(p, ZeroEnd::r1), boundary_gradient(p, ZeroEnd::r2)};
}

}  // namespace

TauCurve build_tau_curve(const Nonlinearity& f, double M, std::vector<double> grid, double tol) {
    if (grid.empty()) throw DomainError("tau curve needs a non-empty grid");
    if (!std::is_sorted(grid.begin(), grid.end()) || std::adjacent_find(grid.begin(), grid.end()) != grid.end())
        throw DomainError("tau grid must be strictly ascending");
    if (grid.front() < 0.0 || grid.back() >= 1.0) throw DomainError("tau grid must lie in [0, 1)");

    TauCurve curve;
    curve.M = M;
    curve.f = f;
    curve.tol = tol;
    curve.h = compute_h(f, M, tol);
    curve.grid = std::move(grid);

    auto heights = curve.grid;
    const bool has_zero = heights.front() == 0.0;
    if (!has_zero) heights.insert(heights.begin(), 0.0);
    const auto grads = detail::parallel_map(heights, [&](double R) { return gradients_at(f, R, M, tol); });

    const double h2 = curve.h * curve.h;
    curve.tau0 = grads.front().g2 * grads.front().g2 / h2;
    for (std::size_t k = has_zero ? 0 : 1; k < grads.size(); ++k) {
        curve.grad1.push_back(grads[k].g1);
        curve.grad2.push_back(grads[k].g2);
        curve.tau1.push_back(grads[k].g1 * grads[k].g1 / h2);
        curve.tau2.push_back(grads[k].g2 * grads[k].g2 / h2);
    }
    for (std::size_t k = 1; k < curve.grid.size(); ++k) {
        if (!(curve.tau1[k] < curve.tau1[k - 1])) curve.tau1_decreasing = false;
        if (!(curve.tau2[k] > curve.tau2[k - 1])) curve.tau2_increasing = false;
    }
    return curve;
}

std::string to_string(CriticalBranch branch) {
    switch (branch) {
        case CriticalBranch::one: return "one";
        case CriticalBranch::two: return "two";
        case CriticalBranch::ball: return "ball";
    }
    return "ball";
}

CriticalHeight expected_critical_height(const TauCurve& curve, double tau_value) {
    if (!(tau_value >= 0.0)) throw DomainError("tau value must be non-negative");
    if (tau_value <= 1.0) return {1.0, CriticalBranch::ball};
    if (tau_value == curve.tau0) return {0.0, CriticalBranch::two};

    const bool upper = tau_value > curve.tau0;
    const auto& table = upper ? curve.tau2 : curve.tau1;
    const CriticalBranch branch = upper ? CriticalBranch::two : CriticalBranch::one;
    // orient so that `key` increases along the grid
    auto key = [upper](double tau) { return upper ? tau : -tau; };
    const double target = key(tau_value);

    // Bracket on the table, with τ₀ standing in for R = 0 when the grid starts later.
    std::vector<double> Rs;
    std::vector<double> keys;
    if (curve.grid.front() > 0.0) {
        Rs.push_back(0.0);
        keys.push_back(key(curve.tau0));
    }
    for (std::size_t k = 0; k < curve.grid.size(); ++k) {
        Rs.push_back(curve.grid[k]);
        keys.push_back(key(table[k]));
    }
    if (target > keys.back()) {
        std::ostringstream os;
        os << "tau value " << tau_value << " lies beyond the tabulated branch " << to_string(branch)
           << " (last height " << Rs.back() << "); extend the grid towards 1";
        throw OutOfRange(os.str());
    }
    const auto it = std::lower_bound(keys.begin(), keys.end(), target);
    const std::size_t hi = static_cast<std::size_t>(it - keys.begin());
    if (*it == target) return {Rs[hi], branch};
    const std::size_t lo = hi - 1;

    const double h2 = curve.h * curve.h;
    auto residual = [&](double R) {
        const auto g = gradients_at(curve.f, R, curve.M, curve.tol);
        const double grad = upper ? g.g2 : g.g1;
        return key(grad * grad / h2) - target;
    };
    boost::uintmax_t iters = 60;
    const auto bracket = boost::math::tools::toms748_solve(
        residual, Rs[lo], Rs[hi], keys[lo] - target, keys[hi] - target,
        [](double a, double b) { return std::abs(b - a) < 1e-11; }, iters);
    return {0.5 * (bracket.first + bracket.second), branch};
}

double tau_of_boundary(double max_grad_sq, double M, const Nonlinearity& f) {
    if (!(max_grad_sq >= 0.0)) throw DomainError("squared gradient must be non-negative");
    if (!(M > 0.0)) throw DomainError("tau needs a positive maximum");
    const double h = compute_h(f, M);
    return max_grad_sq / (h * h);
}

void to_json(nlohmann::json& j, const TauCurve& c) {
    j = {{"M", c.M},          {"f", c.f.to_json()}, {"h", c.h},       {"tau0", c.tau0},
         {"grid", c.grid},    {"tau1", c.tau1},     {"tau2", c.tau2}, {"tau1_decreasing", c.tau1_decreasing},
         {"tau2_increasing", c.tau2_increasing}};
}

}  // namespace sphere_oep
