#pragma once

#include <optional>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

#include "sphere_oep/annulus_pde.hpp"
#include "sphere_oep/model_profiles.hpp"
#include "sphere_oep/tau.hpp"

namespace sphere_oep {

/// Comparison model Ū = U_{R̄,M} restricted to one monotone branch:
/// branch 1 covers [r̄₁, R̄] (south of the maximum), branch 2 covers [R̄, r̄₂].
struct ComparisonTriple {
    ModelProfile profile;
    int branch = 2;
    double tau_target = 0.0;

    double R() const { return profile.R(); }
    double M() const { return profile.M(); }
    /// r̄₁ or r̄₂, the zero bounding the branch.
    double zero() const { return profile.zero(branch == 1 ? ZeroEnd::r1 : ZeroEnd::r2); }
    ZeroEnd end() const { return branch == 1 ? ZeroEnd::r1 : ZeroEnd::r2; }
};

ComparisonTriple make_triple(ModelProfile profile, int branch, double tau_target = 0.0);

/// Model for a component adjacent to the given boundary with normalized
/// gradient τ̄: R̄ solves τ̄(R̄) = tau on the τ curve, mirrored through the
/// equator when the tabulated branch lies on the other side. Throws
/// OutOfRange beyond the tabulated heights and DomainError for τ ≤ 1.
ComparisonTriple associated_triple(const TauCurve& curve, double tau, ZeroEnd side, double tol = 1e-12);

/// f scaled by the spectral factor of a bordered solve (unchanged otherwise).
Nonlinearity effective_nonlinearity(const GridSolution& solution);

/// χ(u): the height on the branch where Ū = u. Exact at u = 0 and u = M.
double pseudo_radial(const ComparisonTriple& triple, double u);

/// W̄(u) = (1 − Ψ²)·Ū'(Ψ)² with Ψ = χ(u).
double wbar(const ComparisonTriple& triple, double u);
std::vector<double> wbar_field(const ComparisonTriple& triple, std::span<const double> u_values);

/// dW̄/du = 2(Ψ·Ū'(Ψ) − f(u)).
double wbar_derivative(const ComparisonTriple& triple, double u);

/// φ(Ψ) = (f(u) − 2ΨŪ'(Ψ)) / ((1 − Ψ²)Ū'(Ψ)²); empty within `collar` of R̄ where Ū' vanishes.
std::optional<double> phi(const ComparisonTriple& triple, double psi, double collar = 1e-6);

struct GradientSample {
    double s = 0.0;
    double theta = 0.0;
    double u = 0.0;
    double W = 0.0;
    double Wbar = 0.0;
};

struct ComparisonReport {
    int branch = 2;
    double R = 0.0;
    double M = 0.0;
    double slack = 0.0;
    double max_violation = 0.0;  // max(W − W̄)
    double max_abs_difference = 0.0;
    GradientSample worst;
    double max_F_beta = 0.0;  // max of W/Ū'(Ψ)² − (1 − Ψ²) away from R̄
    std::vector<GradientSample> samples;
    bool pass = false;
};

struct ComparisonOptions {
    double slack = 0.0;
    double mismatch_tol = 1e-2;  // allowed |u_max − M|
    double beta_collar = 1e-3;   // F_β skipped where |Ψ − R̄| is smaller
};

/// W = |∇u|² against W̄(u) at the interior nodes on the branch side of the
/// ridge. Throws MismatchError when u_max and M differ by more than the tolerance.
ComparisonReport verify_gradient_estimate(const GridSolution& solution, const ComparisonTriple& triple,
                                          const ComparisonOptions& options = {});
/// Same check along the tabulated heights of a model profile.
ComparisonReport verify_gradient_estimate(const ModelProfile& solution, const ComparisonTriple& triple,
                                          const ComparisonOptions& options = {});

struct CurvatureReport {
    int branch = 2;
    double boundary_kappa = 0.0;  // at the boundary point of largest |∇u|, inner orientation
    double boundary_bound = 0.0;
    double boundary_s = 0.0;
    double boundary_theta = 0.0;
    double max_curve_kappa = 0.0;  // largest inner-oriented curvature along the max curve
    double max_curve_bound = 0.0;
    double slack = 0.0;
    bool pass = false;

    double boundary_margin() const { return boundary_bound - boundary_kappa; }
    double max_curve_margin() const { return max_curve_bound - max_curve_kappa; }
};

/// Boundary: κ ≤ −r̄₂/√(1 − r̄₂²) (branch 2) or κ ≤ r̄₁/√(1 − r̄₁²) (branch 1).
/// Max curve: κ ≤ R̄/√(1 − R̄²) (branch 2) or κ ≤ −R̄/√(1 − R̄²) (branch 1).
CurvatureReport verify_curvature_estimates(const GridSolution& solution, const ComparisonTriple& triple,
                                           double slack = 0.0);
CurvatureReport verify_curvature_estimates(const ModelProfile& solution, const ComparisonTriple& triple,
                                           double slack = 0.0);

struct LengthReport {
    int branch = 2;
    double max_curve_length = 0.0;  // |γ|
    double boundary_length = 0.0;   // |Γ|
    double factor = 0.0;            // √((1 − R̄²)/(1 − r̄ᵢ²))
    double slack = 0.0;
    bool pass = false;
    // |Γ| ≤ 2π√(1 − r̄ᵢ²), meaningful when f(0) = 0
    bool boundary_bound_applies = false;
    double boundary_bound = 0.0;
    bool boundary_bound_pass = false;

    double rhs() const { return factor * boundary_length; }
    double margin() const { return rhs() - max_curve_length; }
    double boundary_bound_margin() const { return boundary_bound - boundary_length; }
};

LengthReport verify_length_estimate(const GridSolution& solution, const ComparisonTriple& triple,
                                    double slack = 0.0);
LengthReport verify_length_estimate(const ModelProfile& solution, const ComparisonTriple& triple,
                                    double slack = 0.0);

/// Least-squares coefficients of M − Ū in t = r − R̄ against the expansion
/// f(M)/(2(1 − R̄²))·t² + 2R̄f(M)/(3(1 − R̄²)²)·t³.
struct TaylorFit {
    double c2 = 0.0;
    double c2_expected = 0.0;
    double c3 = 0.0;
    double c3_expected = 0.0;
};
TaylorFit fit_taylor_at_max(const ModelProfile& profile, double half_width = 0.02);

/// Slope of W̄/(M − u) − 2f(M) against √(M − u) on the branch, expected
/// ±4R̄√(2f(M))/(3√(1 − R̄²)) (+ on branch 2).
struct WbarExpansionFit {
    double limit = 0.0;  // intercept, expected 2f(M)
    double limit_expected = 0.0;
    double c32 = 0.0;
    double c32_expected = 0.0;
};
WbarExpansionFit fit_wbar_expansion(const ComparisonTriple& triple, double max_gap = 1e-4);

/// Cubic coefficient of u in the geodesic distance ρ from the max curve
/// (ρ > 0 towards the north), expected −f(M)·κ/6 with κ = R̄/√(1 − R̄²).
struct ChrFit {
    double c2 = 0.0;
    double c2_expected = 0.0;
    double c3 = 0.0;
    double c3_expected = 0.0;
};
ChrFit fit_chr_expansion(const ModelProfile& profile, double half_width = 0.02);

void to_json(nlohmann::json& j, const ComparisonReport& r);
void to_json(nlohmann::json& j, const CurvatureReport& r);
void to_json(nlohmann::json& j, const LengthReport& r);

}  // namespace sphere_oep
