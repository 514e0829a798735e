#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "sphere_oep/model_profiles.hpp"
#include "sphere_oep/nonlinearity.hpp"

namespace sphere_oep {

/// δ(θ) = amplitude·cos(mode·θ)
struct Perturbation {
    double amplitude = 0.0;
    int mode = 0;

    double value(double theta) const;
    double derivative(double theta) const;
    double second_derivative(double theta) const;
    bool active() const { return amplitude != 0.0; }
};

/// Annulus s1 + δ1(θ) < s < s2 + δ2(θ) in colatitude/longitude, with the
/// boundary-fitted grid s = a(θ) + ξ·L(θ), ξ_i = i/n_s, θ_j = 2πj/n_θ.
struct DomainSpec {
    double s1 = 0.0;
    double s2 = 0.0;
    Perturbation inner;  // on the s1 boundary
    Perturbation outer;  // on the s2 boundary
    std::size_t n_s = 64;
    std::size_t n_theta = 64;

    /// Throws DomainError when the boundaries cross, leave (0, π), n_θ is odd or
    /// the grid is too small for the derivative stencils.
    void validate() const;
    bool rotational() const { return !inner.active() && !outer.active(); }

    double inner_boundary(double theta) const { return s1 + inner.value(theta); }
    double outer_boundary(double theta) const { return s2 + outer.value(theta); }
    double xi(std::size_t i) const { return static_cast<double>(i) / static_cast<double>(n_s); }
    double theta(std::size_t j) const;
    double s_at(double xi, double theta) const;
};

void to_json(nlohmann::json& j, const DomainSpec& d);
void from_json(const nlohmann::json& j, DomainSpec& d);

struct NodeIndex {
    std::size_t i = 0;  // ξ index, 0..n_s
    std::size_t j = 0;  // θ index, 0..n_θ−1
    bool operator==(const NodeIndex&) const = default;
};

/// Partial derivatives of u in (s, θ) at one point, with the covariant
/// quantities of the round metric ds² + sin²s dθ².
struct SphericalJet {
    double s = 0.0;
    double theta = 0.0;
    double u = 0.0;
    double u_s = 0.0;
    double u_t = 0.0;
    double u_ss = 0.0;
    double u_st = 0.0;
    double u_tt = 0.0;

    double grad_sq() const;
    double laplacian() const;
    /// ∇²u(∇u, ∇u)
    double hessian_along_gradient() const;
};

class GridSolution {
public:
    GridSolution(DomainSpec domain, Nonlinearity f, std::vector<double> values);

    const DomainSpec& domain() const { return domain_; }
    const Nonlinearity& f() const { return f_; }
    std::size_t n_s() const { return domain_.n_s; }
    std::size_t n_theta() const { return domain_.n_theta; }
    std::size_t index(std::size_t i, std::size_t j) const { return i * domain_.n_theta + j; }

    double value(std::size_t i, std::size_t j) const { return values_[index(i, j)]; }
    std::span<const double> values() const { return values_; }
    double s_at(std::size_t i, std::size_t j) const { return s_[index(i, j)]; }
    double theta_at(std::size_t j) const { return domain_.theta(j); }

    double u_max() const { return u_max_; }
    NodeIndex argmax() const { return argmax_; }
    /// Maximum refined by parabolas through the argmax node and its neighbours
    /// in each grid direction. Equals u_max() when the argmax is on the boundary.
    double peak_value() const;

    double residual() const { return residual_; }
    int iterations() const { return iterations_; }
    /// Eigenvalue factor μ of Δu + μ·f(u) = 0 for homogeneous linear f.
    std::optional<double> spectral_factor() const { return spectral_factor_; }

    void set_solver_report(double residual, int iterations, std::optional<double> spectral_factor);

    /// Fourth-order derivative jet at a node, one-sided at the boundaries.
    SphericalJet jet(std::size_t i, std::size_t j) const;
    double grad_sq(std::size_t i, std::size_t j) const { return jet(i, j).grad_sq(); }

    nlohmann::json header() const;

private:
    DomainSpec domain_;
    Nonlinearity f_;
    std::vector<double> values_;
    std::vector<double> s_;
    double u_max_ = 0.0;
    NodeIndex argmax_;
    double residual_ = 0.0;
    int iterations_ = 0;
    std::optional<double> spectral_factor_;
};

/// JSON header line followed by `s,theta,u` rows, s outer.
void write_grid_solution(std::ostream& out, const GridSolution& solution);
GridSolution read_grid_solution(std::istream& in);

struct NewtonOptions {
    int max_iterations = 20;
    int max_halvings = 8;
};

/// Node values of U(cos s) for a model profile on the grid of `domain`
/// (zero outside the profile's tabulated range).
std::vector<double> profile_guess(const DomainSpec& domain, const ModelProfile& profile);

/// Damped Newton on the second-order discretization of Δu + f(u) = 0 with
/// u = 0 on both boundaries. Returns the solution in the basin of `guess`
/// (an all-zero guess is replaced by a sin(πξ) ramp).
///
/// For f(x) = a·x the continuum problem only has nonzero solutions on
/// eigen-annuli, so the solve is bordered: Δu + μ·a·u = 0 with u pinned to the
/// guess at its maximum node, and μ reported as the spectral factor.
GridSolution solve_dirichlet(const DomainSpec& domain, const Nonlinearity& f, std::span<const double> guess,
                             double tol, NewtonOptions options = {});

struct ModelFit {
    double R = 0.0;
    double M = 1.0;
    bool M_pinned = false;
    double residual = 0.0;
    int iterations = 0;
};

/// (R, M) with arccos r2(R, M) = s1 and arccos r1(R, M) = s2.
ModelFit fit_model_to_annulus(double s1, double s2, const Nonlinearity& f, double tol);

struct MaxComponent {
    std::vector<NodeIndex> nodes;
    bool encircles = false;  // winds once around the annulus
};

struct MaxSet {
    double u_max = 0.0;
    double collar = 0.0;
    std::vector<MaxComponent> components;
};

/// Nodes with u ≥ u_max − collar, grouped by 8-connectivity (periodic in θ).
MaxSet max_set(const GridSolution& solution, double collar);

void to_json(nlohmann::json& j, const ModelFit& fit);
void to_json(nlohmann::json& j, const MaxSet& set);

}  // namespace sphere_oep
