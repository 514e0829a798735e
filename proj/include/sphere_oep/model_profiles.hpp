#pragma once

#include <optional>
#include <vector>

#include <nlohmann/json.hpp>

#include "sphere_oep/nonlinearity.hpp"

namespace sphere_oep {

/// Which zero of an annular profile: r1 (south, Γ¹) or r2 (north, Γ²).
enum class ZeroEnd { r1 = 1, r2 = 2 };

/// One tabulated row of a model profile, as written to CSV.
struct ProfileSample {
    double r = 0.0;
    double U = 0.0;
    double dU = 0.0;
    double Z = 0.0;   // ∂U/∂R
    double dZ = 0.0;
    double G = 0.0;   // U''·Z − U'·Z'
};

/// A zero of the profile. Near the poles r_i can sit closer to ±1 than a
/// double resolves, so the geodesic distance to the nearest pole is kept too.
struct BoundaryPoint {
    double r = 0.0;
    double pole_distance = 0.0;  // arccos(|r|) measured from the pole on this side
    double gradient = 0.0;       // √(1 − r²)·|U'(r)|
    double dU = 0.0;             // may overflow to ±inf for pinched zeros
    bool resolved = true;        // false when r is not representable apart from ±1
};

/// Full local data at an arbitrary height.
struct ProfilePoint {
    double r = 0.0;
    double U = 0.0;
    double dU = 0.0;
    double d2U = 0.0;
    double Z = 0.0;
    double dZ = 0.0;
    double d2Z = 0.0;
    double G = 0.0;
};

/// Rotationally symmetric solution U_{R,M} of (1 − r²)U'' − 2rU' + f(U) = 0 with
/// U(R) = M, U'(R) = 0, restricted to [r1, r2] between its first zeros.
///
/// Values between samples use quintic Hermite interpolation from (U, U', U'')
/// with U'' read off the equation; Z = ∂U/∂R is handled the same way through
/// its variational equation.
///
/// When a zero lies within ~1e-14 of a pole the table stops short of it and
/// only the BoundaryPoint describes the end ("pinched" profile).
class ModelProfile {
public:
    ModelProfile(Nonlinearity f, double R, double M, double tol, std::vector<ProfileSample> samples,
                 BoundaryPoint lower, BoundaryPoint upper);

    const Nonlinearity& f() const { return f_; }
    double R() const { return R_; }
    double M() const { return M_; }
    double r1() const { return lower_.r; }
    double r2() const { return upper_.r; }
    double zero(ZeroEnd end) const { return boundary(end).r; }
    const BoundaryPoint& boundary(ZeroEnd end) const { return end == ZeroEnd::r1 ? lower_ : upper_; }
    bool pinched() const { return !lower_.resolved || !upper_.resolved; }
    double tol() const { return tol_; }
    const std::vector<ProfileSample>& samples() const { return samples_; }
    static constexpr int interpolation_order = 5;

    /// Throws DomainError for r outside the tabulated part of [r1, r2].
    ProfilePoint at(double r) const;
    double U(double r) const { return at(r).U; }
    double dU(double r) const { return at(r).dU; }

    double second_derivative(double r, double U, double dU) const;

    /// Conservative bound on the error of the located zeros.
    double zero_error_bound() const;

    nlohmann::json sidecar() const;

private:
    Nonlinearity f_;
    double R_;
    double M_;
    double tol_;
    std::vector<ProfileSample> samples_;
    BoundaryPoint lower_;
    BoundaryPoint upper_;
};

/// Geodesic-disk solution V_{0,M} of V'' + cot(s)V' + f(V) = 0, V(0) = M, V'(0) = 0.
class DiskProfile {
public:
    struct Sample {
        double s = 0.0;
        double V = 0.0;
        double dV = 0.0;
    };
    struct Point {
        double s = 0.0;
        double V = 0.0;
        double dV = 0.0;
        double d2V = 0.0;
    };

    DiskProfile(Nonlinearity f, double M, std::vector<Sample> samples);

    double M() const { return M_; }
    double s_M() const { return samples_.back().s; }
    /// Boundary slope −V'(s_M).
    double h() const { return -samples_.back().dV; }
    const std::vector<Sample>& samples() const { return samples_; }
    Point at(double s) const;

private:
    double second_derivative(double s, double V, double dV) const;

    Nonlinearity f_;
    double M_;
    std::vector<Sample> samples_;
};

/// Geographic radius where the series start of the disk solver hands over.
inline constexpr double disk_series_start = 1e-4;

ModelProfile solve_annulus_profile(const Nonlinearity& f, double R, double M, double tol = 1e-12);
DiskProfile solve_disk_profile(const Nonlinearity& f, double M, double tol = 1e-12);

/// h(M) = −V'_{0,M}(s_M), the boundary slope of the disk solution.
double compute_h(const Nonlinearity& f, double M, double tol = 1e-12);

/// Coefficient c of the start series V(s) = M + c·s² + O(s⁴), i.e. −f(M)/4.
double disk_series_coefficient(const Nonlinearity& f, double M);

/// √(1 − r_i²)·|U'(r_i)|, the gradient norm of u_{R,M} along the chosen boundary.
double boundary_gradient(const ModelProfile& profile, ZeroEnd end);

struct SignCheck {
    bool pass = true;
    double worst_margin = 0.0;  // smallest signed margin; positive means the sign holds
    double worst_r = 0.0;
    std::size_t samples = 0;
};

struct SignReport {
    SignCheck z_pattern;   // Z < 0 on (r1, R), Z > 0 on (R, r2)
    SignCheck g_pattern;   // G > 0 on [r1, R), G < 0 on (R, r2]
    SignCheck g_lower;     // the [r1, R) half of g_pattern
    SignCheck g_upper;     // the (R, r2] half
    SignCheck concavity;   // U'' < 0 on (r1, r2)
    double collar = 0.0;

    bool all() const { return z_pattern.pass && g_pattern.pass && concavity.pass; }
};

/// Samples the Z, G and U'' sign patterns over the tabulated range, skipping |r − R| < collar
/// (default 1e-3·(r2 − r1)). Samples are the tabulated heights plus a
/// uniform grid of `n_uniform` points.
SignReport check_sign_lemmas(const ModelProfile& profile, std::optional<double> collar = std::nullopt,
                             std::size_t n_uniform = 2001);

void to_json(nlohmann::json& j, const SignCheck& c);
void to_json(nlohmann::json& j, const SignReport& r);

}  // namespace sphere_oep
