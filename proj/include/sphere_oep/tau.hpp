#pragma once

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "sphere_oep/nonlinearity.hpp"

namespace sphere_oep {

/// Normalized squared boundary gradients τ̄₁(R), τ̄₂(R) of the model family
/// at fixed maximum M, tabulated on an ascending grid of heights in [0, 1).
struct TauCurve {
    double M = 0.0;
    Nonlinearity f = Nonlinearity::affine(2, 0);
    double h = 0.0;    // h(M), the normalizer
    double tol = 1e-12;
    std::vector<double> grid;
    std::vector<double> grad1;  // boundary gradient on the r1 side
    std::vector<double> grad2;  // boundary gradient on the r2 side
    std::vector<double> tau1;
    std::vector<double> tau2;
    double tau0 = 0.0;
    bool tau1_decreasing = true;
    bool tau2_increasing = true;

    bool monotone() const { return tau1_decreasing && tau2_increasing; }
};

/// {0, 0.05, ..., 0.95}
std::vector<double> default_tau_grid();

/// Heights 1 − 2^-k for k = k_first..k_last, for extending τ̄₂ towards the pole.
std::vector<double> pole_extension(int k_first, int k_last);

/// Builds the curve, one profile solve per grid height (run in parallel).
/// Monotonicity is recorded, not enforced. Throws DomainError for a grid that
/// is empty, unsorted or leaves [0, 1).
TauCurve build_tau_curve(const Nonlinearity& f, double M, std::vector<double> grid = default_tau_grid(),
                         double tol = 1e-12);

enum class CriticalBranch { ball = 0, one = 1, two = 2 };

struct CriticalHeight {
    double R = 1.0;
    CriticalBranch branch = CriticalBranch::ball;
};

std::string to_string(CriticalBranch branch);

/// Inverts the curve: τ ≥ τ₀ uses τ̄₂, 1 < τ < τ₀ uses τ̄₁, τ ≤ 1 gives R̄ = 1.
/// The tabulated bracket is refined by fresh profile solves. Values outside
/// the tabulated range of the selected branch raise OutOfRange.
CriticalHeight expected_critical_height(const TauCurve& curve, double tau_value);

/// max|∇u|² / h(M)².
double tau_of_boundary(double max_grad_sq, double M, const Nonlinearity& f);

void to_json(nlohmann::json& j, const TauCurve& curve);

}  // namespace sphere_oep
