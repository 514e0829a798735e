#pragma once

#include <array>
#include <cstddef>
#include <iosfwd>
#include <vector>

#include <nlohmann/json.hpp>

#include "sphere_oep/annulus_pde.hpp"
#include "sphere_oep/model_profiles.hpp"

namespace sphere_oep {

using Vec3 = std::array<double, 3>;

/// (sin s cos θ, sin s sin θ, cos s): colatitude s from the north pole.
Vec3 sphere_point(double s, double theta);

/// Polyline on the sphere. Vertices are (s, θ) with θ unwrapped along the
/// curve, so a curve winding once around the pole ends 2π away from its start.
///
/// `curvature` is the geodesic curvature at each vertex with respect to the
/// left normal p × T. Level curves are oriented with larger u on the left,
/// max curves and boundary curves run towards increasing θ (left = north).
struct LevelCurve {
    double level = 0.0;
    std::vector<double> s;
    std::vector<double> theta;
    bool closed = false;
    int winding = 0;  // net turns around the north pole
    double length = 0.0;
    std::vector<double> curvature;

    std::size_t size() const { return s.size(); }
};

struct LevelCurveSet {
    double level = 0.0;
    std::vector<LevelCurve> curves;
    std::size_t saddle_cells = 0;  // cells where both diagonals cross the level
};

/// Metric length Σ √(Δs² + sin²(s_mid)·Δθ²), closing segment included for closed curves.
double polyline_length(const std::vector<double>& s, const std::vector<double>& theta, bool closed);

/// Geodesic curvature at interior vertices (and all vertices of closed curves)
/// from the small circle through each vertex triple; 0 at open ends.
std::vector<double> polyline_curvature(const std::vector<double>& s, const std::vector<double>& theta,
                                       bool closed);

/// Marching squares in the (ξ, θ) computational plane with linear edge
/// interpolation. Saddle cells are split according to the bilinear centre value.
/// Nodes equal to c count as above it. Throws DomainError unless 0 < c < u_max.
LevelCurveSet extract_level_curve(const GridSolution& solution, double c);

/// Boundary nodes i = 0 (north, s1 side) or i = n_s as a closed curve.
LevelCurve boundary_curve(const GridSolution& solution, ZeroEnd end);

/// Ridge s*(θ) of u: per θ column the interior maximum refined by a parabola
/// through its neighbours. Throws NoMaxCurve when a column has no interior
/// maximum or more than one local maximum.
LevelCurve extract_max_curve(const GridSolution& solution);

/// Jet at an arbitrary point, bilinear in (ξ, θ) between the node jets.
SphericalJet interpolate_jet(const GridSolution& solution, double s, double theta);

/// κ = (∇²u(∇u, ∇u) − |∇u|²Δu)/|∇u|³, the curvature of the level set through
/// the point with respect to the normal ∇u/|∇u|; negated when
/// `along_gradient` is false. Throws NearCritical when |∇u| < threshold.
double geodesic_curvature(const SphericalJet& jet, bool along_gradient = true, double threshold = 1e-6);
double geodesic_curvature(const GridSolution& solution, double s, double theta, bool along_gradient = true,
                          double threshold = 1e-6);

/// Jet of u(s, θ) = U(cos s) from the profile.
SphericalJet profile_jet(const ModelProfile& profile, double s, double theta = 0.0);

enum class GraphCurve { boundary1, boundary2, max };

/// Contact cosines along one curve of the radial graph p ↦ (1 + M − u(p))·p.
struct ContactStats {
    GraphCurve curve = GraphCurve::max;
    std::size_t count = 0;
    double mean = 0.0;
    double stddev = 0.0;
    double min = 0.0;
    double max = 0.0;
    /// (1 + M)/√((1 + M)² + α) with α = |∇u|² and with α = −|∇u| (the Neumann
    /// value); NaN where the root is negative. Boundary curves only.
    double alpha_gradient_sq = 0.0;
    double alpha_neumann = 0.0;
};

struct RadialGraphSample {
    double M = 0.0;
    std::vector<Vec3> points;
    std::vector<Vec3> normals;
    std::vector<double> contact;  // ⟨N, X⟩/|X|
    std::vector<GraphCurve> curve;
    std::vector<ContactStats> stats;  // one entry per curve present
};

/// Samples both zero sets and the max curve at `n_theta` longitudes each.
RadialGraphSample radial_graph(const ModelProfile& profile, std::size_t n_theta = 64);
/// Boundary nodes and the extracted ridge of a grid solution (M = u_max).
RadialGraphSample radial_graph(const GridSolution& solution);

void write_radial_graph_csv(std::ostream& out, const RadialGraphSample& graph);

/// ⟨Ỹ, ∇u⟩ for the rotational solution, Ỹ(q) = ⟨n, q⟩Y − ⟨q, Y⟩n with
/// n the north pole and Y = e_x: −√(1 − r²)·U'(r)·cos θ.
double killing_derivative(const ModelProfile& profile, double r, double theta);
/// Central difference of u along the rotation generated by Ỹ.
double killing_derivative_fd(const ModelProfile& profile, double r, double theta, double delta = 1e-5);

void to_json(nlohmann::json& j, const LevelCurve& curve);
void to_json(nlohmann::json& j, const ContactStats& stats);
std::string to_string(GraphCurve curve);

}  // namespace sphere_oep
