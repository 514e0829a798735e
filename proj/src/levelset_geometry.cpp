#include "sphere_oep/levelset_geometry.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>
#include <ostream>
#include <unordered_map>

#include "sphere_oep/error.hpp"

namespace sphere_oep {

namespace {

constexpr double two_pi = 2.0 * std::numbers::pi;

Vec3 sub(const Vec3& a, const Vec3& b) { return {a[0] - b[0], a[1] - b[1], a[2] - b[2]}; }
double dot(const Vec3& a, const Vec3& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }
Vec3 cross(const Vec3& a, const Vec3& b) {
    return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
}
double norm(const Vec3& a) { return std::sqrt(dot(a, a)); }
Vec3 scale(const Vec3& a, double k) { return {a[0] * k, a[1] * k, a[2] * k}; }

// difference b − a reduced to (−π, π]
double wrapped_step(double a, double b) { return std::remainder(b - a, two_pi); }

}  // namespace

Vec3 sphere_point(double s, double theta) {
    return {std::sin(s) * std::cos(theta), std::sin(s) * std::sin(theta), std::cos(s)};
}

double polyline_length(const std::vector<double>& s, const std::vector<double>& theta, bool closed) {
    const std::size_t n = s.size();
    if (n < 2) return 0.0;
    auto segment = [&](std::size_t a, std::size_t b) {
        const double ds = s[b] - s[a];
        const double dt = wrapped_step(theta[a], theta[b]);
        const double sm = std::sin(0.5 * (s[a] + s[b]));
        return std::sqrt(ds * ds + sm * sm * dt * dt);
    };
    double total = 0.0;
    for (std::size_t k = 0; k + 1 < n; ++k) total += segment(k, k + 1);
    if (closed) total += segment(n - 1, 0);
    return total;
}

std::vector<double> polyline_curvature(const std::vector<double>& s, const std::vector<double>& theta,
                                       bool closed) {
    const std::size_t n = s.size();
    std::vector<double> kappa(n, 0.0);
    if (n < 3) return kappa;
    for (std::size_t k = 0; k < n; ++k) {
        if (!closed && (k == 0 || k + 1 == n)) continue;
        const std::size_t a = (k + n - 1) % n;
        const std::size_t b = (k + 1) % n;
        const Vec3 p0 = sphere_point(s[a], theta[a]);
        const Vec3 p1 = sphere_point(s[k], theta[k]);
        const Vec3 p2 = sphere_point(s[b], theta[b]);
        const Vec3 normal = cross(sub(p1, p0), sub(p2, p1));
        const double len = norm(normal);
        if (len == 0.0) continue;
        // the small circle through the triple lies in the plane ⟨n̂, x⟩ = d
        const double d = std::clamp(dot(normal, p1) / len, -1.0, 1.0);
        kappa[k] = d / std::sqrt(std::max(1.0 - d * d, std::numeric_limits<double>::min()));
    }
    return kappa;
}

// ---------------------------------------------------------------------------
// Marching squares

namespace {

struct Crossing {
    double xi;
    double eta;  // in [0, 2π]
};

struct Segment {
    std::size_t from_edge;
    std::size_t to_edge;
};

void finish_curve(LevelCurve& curve) {
    curve.length = polyline_length(curve.s, curve.theta, curve.closed);
    curve.curvature = polyline_curvature(curve.s, curve.theta, curve.closed);
    if (curve.closed && !curve.theta.empty()) {
        const double total = curve.theta.back() - curve.theta.front() +
                             wrapped_step(curve.theta.back(), curve.theta.front());
        curve.winding = static_cast<int>(std::lround(total / two_pi));
    }
}

}  // namespace

LevelCurveSet extract_level_curve(const GridSolution& solution, double c) {
    if (!(c > 0.0 && c < solution.u_max())) throw DomainError("level must lie strictly between 0 and u_max");
    const DomainSpec& d = solution.domain();
    const std::size_t n = d.n_s;
    const std::size_t m = d.n_theta;
    const double ht = two_pi / static_cast<double>(m);

    // edge keys: 2·(i·m + j) for the ξ-edge (i,j)–(i+1,j), +1 for the θ-edge (i,j)–(i,j+1)
    auto xi_edge = [m](std::size_t i, std::size_t j) { return 2 * (i * m + j); };
    auto theta_edge = [m](std::size_t i, std::size_t j) { return 2 * (i * m + j) + 1; };
    auto crossing = [&](std::size_t key) {
        const std::size_t node = key / 2;
        const std::size_t i = node / m;
        const std::size_t j = node % m;
        const double v0 = solution.value(i, j);
        if (key % 2 == 0) {
            const double t = (c - v0) / (solution.value(i + 1, j) - v0);
            return Crossing{(static_cast<double>(i) + t) / static_cast<double>(n), d.theta(j)};
        }
        const double t = (c - v0) / (solution.value(i, (j + 1) % m) - v0);
        return Crossing{d.xi(i), d.theta(j) + t * ht};
    };

    LevelCurveSet set;
    set.level = c;
    std::vector<Segment> segments;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < m; ++j) {
            const std::size_t j1 = (j + 1) % m;
            const std::array<double, 4> v{solution.value(i, j), solution.value(i + 1, j), solution.value(i + 1, j1),
                                          solution.value(i, j1)};
            const std::array<bool, 4> in{v[0] >= c, v[1] >= c, v[2] >= c, v[3] >= c};
            const std::array<std::size_t, 4> edge{xi_edge(i, j), theta_edge(i + 1, j), xi_edge(i, j1),
                                                  theta_edge(i, j)};
            std::array<int, 4> crossed{};
            int count = 0;
            for (int k = 0; k < 4; ++k)
                if (in[k] != in[(k + 1) % 4]) crossed[count++] = k;
            if (count == 0) continue;

            // local coordinates: a along ξ (corner 0 → 1), b along θ (corner 0 → 3)
            auto local = [&](int k) -> std::array<double, 2> {
                const Crossing x = crossing(edge[k]);
                const double a = x.xi * static_cast<double>(n) - static_cast<double>(i);
                double b = (x.eta - d.theta(j)) / ht;
                if (k == 2) b = 1.0;
                if (k == 0) b = 0.0;
                return {a, b};
            };
            auto add = [&](int ka, int kb) {
                const auto A = local(ka);
                const auto B = local(kb);
                const double a = 0.5 * (A[0] + B[0]);
                const double b = 0.5 * (A[1] + B[1]);
                const double ga = (v[1] - v[0]) * (1 - b) + (v[2] - v[3]) * b;
                const double gb = (v[3] - v[0]) * (1 - a) + (v[2] - v[1]) * a;
                const double turn = (B[0] - A[0]) * gb - (B[1] - A[1]) * ga;
                if (turn >= 0.0)
                    segments.push_back({edge[ka], edge[kb]});
                else
                    segments.push_back({edge[kb], edge[ka]});
            };
            if (count == 2) {
                add(crossed[0], crossed[1]);
                continue;
            }
            ++set.saddle_cells;
            const bool centre_in = 0.25 * (v[0] + v[1] + v[2] + v[3]) >= c;
            for (int k = 0; k < 4; ++k)
                if (in[k] != centre_in) add((k + 3) % 4, k);
        }
    }

    std::unordered_map<std::size_t, std::size_t> by_start;
    std::unordered_map<std::size_t, std::size_t> by_end;
    for (std::size_t k = 0; k < segments.size(); ++k) {
        by_start[segments[k].from_edge] = k;
        by_end[segments[k].to_edge] = k;
    }
    std::vector<bool> used(segments.size(), false);
    auto trace = [&](std::size_t first) {
        LevelCurve curve;
        curve.level = c;
        auto push = [&](std::size_t key) {
            const Crossing x = crossing(key);
            double theta = x.eta;
            if (!curve.theta.empty()) theta = curve.theta.back() + wrapped_step(curve.theta.back(), theta);
            curve.s.push_back(d.s_at(x.xi, x.eta));
            curve.theta.push_back(theta);
        };
        push(segments[first].from_edge);
        std::size_t cur = first;
        while (true) {
            used[cur] = true;
            const auto next = by_start.find(segments[cur].to_edge);
            if (next == by_start.end()) {
                push(segments[cur].to_edge);
                break;
            }
            if (next->second == first) {
                curve.closed = true;
                break;
            }
            if (used[next->second]) throw ExtractionError("level curve chaining revisited a segment");
            push(segments[cur].to_edge);
            cur = next->second;
        }
        finish_curve(curve);
        set.curves.push_back(std::move(curve));
    };
    // open chains first, starting where no segment ends
    for (std::size_t k = 0; k < segments.size(); ++k)
        if (!used[k] && !by_end.contains(segments[k].from_edge)) trace(k);
    for (std::size_t k = 0; k < segments.size(); ++k)
        if (!used[k]) trace(k);
    return set;
}

LevelCurve boundary_curve(const GridSolution& solution, ZeroEnd end) {
    const std::size_t i = end == ZeroEnd::r2 ? 0 : solution.n_s();
    LevelCurve curve;
    curve.closed = true;
    for (std::size_t j = 0; j < solution.n_theta(); ++j) {
        curve.s.push_back(solution.s_at(i, j));
        curve.theta.push_back(solution.theta_at(j));
    }
    finish_curve(curve);
    return curve;
}

LevelCurve extract_max_curve(const GridSolution& solution) {
    const std::size_t n = solution.n_s();
    const DomainSpec& d = solution.domain();
    LevelCurve curve;
    curve.level = solution.u_max();
    curve.closed = true;
    for (std::size_t j = 0; j < solution.n_theta(); ++j) {
        std::size_t peak = 0;
        int peaks = 0;
        for (std::size_t i = 1; i < n; ++i) {
            if (solution.value(i, j) >= solution.value(i - 1, j) && solution.value(i, j) > solution.value(i + 1, j)) {
                peak = i;
                ++peaks;
            }
        }
        if (peaks != 1) throw NoMaxCurve("column " + std::to_string(j) + " has " + std::to_string(peaks) +
                                         " interior maxima");
        const double um = solution.value(peak - 1, j);
        const double u0 = solution.value(peak, j);
        const double up = solution.value(peak + 1, j);
        const double denom = um - 2.0 * u0 + up;
        const double shift = denom < 0.0 ? std::clamp(0.5 * (um - up) / denom, -0.5, 0.5) : 0.0;
        const double xi = (static_cast<double>(peak) + shift) / static_cast<double>(n);
        curve.s.push_back(d.s_at(xi, d.theta(j)));
        curve.theta.push_back(d.theta(j));
    }
    finish_curve(curve);
    return curve;
}

// ---------------------------------------------------------------------------
// Jets and curvature

SphericalJet interpolate_jet(const GridSolution& solution, double s, double theta) {
    const DomainSpec& d = solution.domain();
    const std::size_t n = d.n_s;
    const std::size_t m = d.n_theta;
    double t = std::fmod(theta, two_pi);
    if (t < 0.0) t += two_pi;
    const double eta = t / (two_pi / static_cast<double>(m));
    const auto j0 = std::min(static_cast<std::size_t>(eta), m - 1);
    const double b = eta - static_cast<double>(j0);
    const std::size_t j1 = (j0 + 1) % m;

    const double a0 = d.inner_boundary(t);
    const double xi = std::clamp((s - a0) / (d.outer_boundary(t) - a0), 0.0, 1.0);
    const auto i0 = std::min(static_cast<std::size_t>(xi * static_cast<double>(n)), n - 1);
    const double a = xi * static_cast<double>(n) - static_cast<double>(i0);

    const SphericalJet q00 = solution.jet(i0, j0);
    const SphericalJet q10 = solution.jet(i0 + 1, j0);
    const SphericalJet q01 = solution.jet(i0, j1);
    const SphericalJet q11 = solution.jet(i0 + 1, j1);
    auto mix = [&](double SphericalJet::*field) {
        return (1 - a) * (1 - b) * q00.*field + a * (1 - b) * q10.*field + (1 - a) * b * q01.*field +
               a * b * q11.*field;
    };
    SphericalJet jet;
    jet.s = s;
    jet.theta = theta;
    jet.u = mix(&SphericalJet::u);
    jet.u_s = mix(&SphericalJet::u_s);
    jet.u_t = mix(&SphericalJet::u_t);
    jet.u_ss = mix(&SphericalJet::u_ss);
    jet.u_st = mix(&SphericalJet::u_st);
    jet.u_tt = mix(&SphericalJet::u_tt);
    return jet;
}

double geodesic_curvature(const SphericalJet& jet, bool along_gradient, double threshold) {
    const double g2 = jet.grad_sq();
    const double g = std::sqrt(g2);
    if (!(g >= threshold)) throw NearCritical("gradient below the curvature threshold");
    const double kappa = (jet.hessian_along_gradient() - g2 * jet.laplacian()) / (g2 * g);
    return along_gradient ? kappa : -kappa;
}

double geodesic_curvature(const GridSolution& solution, double s, double theta, bool along_gradient,
                          double threshold) {
    return geodesic_curvature(interpolate_jet(solution, s, theta), along_gradient, threshold);
}

SphericalJet profile_jet(const ModelProfile& profile, double s, double theta) {
    const double r = std::cos(s);
    const double sn = std::sin(s);
    double U = 0.0;
    double dU = 0.0;
    double d2U = 0.0;
    const auto& table = profile.samples();
    if (r < table.front().r || r > table.back().r) {
        // between the last tabulated row and a pinched zero
        const auto& bp = profile.boundary(r > profile.R() ? ZeroEnd::r2 : ZeroEnd::r1);
        dU = bp.dU;
        d2U = profile.second_derivative(r, 0.0, dU);
    } else {
        const auto q = profile.at(r);
        U = q.U;
        dU = q.dU;
        d2U = q.d2U;
    }
    SphericalJet jet;
    jet.s = s;
    jet.theta = theta;
    jet.u = U;
    jet.u_s = -sn * dU;
    jet.u_ss = sn * sn * d2U - r * dU;
    return jet;
}

// ---------------------------------------------------------------------------
// Radial graph

std::string to_string(GraphCurve curve) {
    switch (curve) {
        case GraphCurve::boundary1: return "boundary1";
        case GraphCurve::boundary2: return "boundary2";
        case GraphCurve::max: return "max";
    }
    return "unknown";
}

namespace {

void add_graph_point(RadialGraphSample& graph, const SphericalJet& jet, GraphCurve curve) {
    const double s = jet.s;
    const double t = jet.theta;
    const Vec3 p = sphere_point(s, t);
    const Vec3 p_s{std::cos(s) * std::cos(t), std::cos(s) * std::sin(t), -std::sin(s)};
    const Vec3 e_t{-std::sin(t), std::cos(t), 0.0};
    const double rho = 1.0 + graph.M - jet.u;
    // X_s and X_θ / sin s of X = ρ·p
    const Vec3 x_s = sub(scale(p_s, rho), scale(p, jet.u_s));
    const Vec3 x_t = sub(scale(e_t, rho), scale(p, jet.u_t / std::sin(s)));
    Vec3 normal = cross(x_s, x_t);
    normal = scale(normal, 1.0 / norm(normal));
    graph.points.push_back(scale(p, rho));
    graph.normals.push_back(normal);
    graph.contact.push_back(dot(normal, p));
    graph.curve.push_back(curve);
}

void summarize(RadialGraphSample& graph, GraphCurve curve, double mean_grad) {
    ContactStats st;
    st.curve = curve;
    st.min = std::numeric_limits<double>::infinity();
    st.max = -std::numeric_limits<double>::infinity();
    double sum = 0.0;
    for (std::size_t k = 0; k < graph.contact.size(); ++k) {
        if (graph.curve[k] != curve) continue;
        ++st.count;
        sum += graph.contact[k];
        st.min = std::min(st.min, graph.contact[k]);
        st.max = std::max(st.max, graph.contact[k]);
    }
    if (st.count == 0) return;
    st.mean = sum / static_cast<double>(st.count);
    double var = 0.0;
    for (std::size_t k = 0; k < graph.contact.size(); ++k)
        if (graph.curve[k] == curve) var += (graph.contact[k] - st.mean) * (graph.contact[k] - st.mean);
    st.stddev = std::sqrt(var / static_cast<double>(st.count));
    const double a = 1.0 + graph.M;
    if (curve == GraphCurve::max) {
        st.alpha_gradient_sq = st.alpha_neumann = std::numeric_limits<double>::quiet_NaN();
    } else {
        st.alpha_gradient_sq = a / std::sqrt(a * a + mean_grad * mean_grad);
        const double root = a * a - mean_grad;
        st.alpha_neumann = root > 0.0 ? a / std::sqrt(root) : std::numeric_limits<double>::quiet_NaN();
    }
    graph.stats.push_back(st);
}

}  // namespace

RadialGraphSample radial_graph(const ModelProfile& profile, std::size_t n_theta) {
    if (n_theta < 3) throw DomainError("radial graph needs at least 3 longitudes");
    RadialGraphSample graph;
    graph.M = profile.M();
    const double s_of[3] = {std::numbers::pi - profile.boundary(ZeroEnd::r1).pole_distance,
                            profile.boundary(ZeroEnd::r2).pole_distance, std::acos(profile.R())};
    const GraphCurve kinds[3] = {GraphCurve::boundary1, GraphCurve::boundary2, GraphCurve::max};
    for (int c = 0; c < 3; ++c) {
        for (std::size_t k = 0; k < n_theta; ++k) {
            const double t = two_pi * static_cast<double>(k) / static_cast<double>(n_theta);
            SphericalJet jet = profile_jet(profile, s_of[c], t);
            if (kinds[c] != GraphCurve::max) jet.u = 0.0;
            if (kinds[c] == GraphCurve::max) {
                jet.u = profile.M();
                jet.u_s = 0.0;
            }
            add_graph_point(graph, jet, kinds[c]);
        }
    }
    summarize(graph, GraphCurve::boundary1, profile.boundary(ZeroEnd::r1).gradient);
    summarize(graph, GraphCurve::boundary2, profile.boundary(ZeroEnd::r2).gradient);
    summarize(graph, GraphCurve::max, 0.0);
    return graph;
}

RadialGraphSample radial_graph(const GridSolution& solution) {
    RadialGraphSample graph;
    graph.M = solution.u_max();
    double grad[2] = {0.0, 0.0};
    for (std::size_t j = 0; j < solution.n_theta(); ++j) {
        const SphericalJet north = solution.jet(0, j);
        const SphericalJet south = solution.jet(solution.n_s(), j);
        add_graph_point(graph, north, GraphCurve::boundary2);
        add_graph_point(graph, south, GraphCurve::boundary1);
        grad[1] += std::sqrt(north.grad_sq());
        grad[0] += std::sqrt(south.grad_sq());
    }
    const auto ridge = extract_max_curve(solution);
    for (std::size_t k = 0; k < ridge.size(); ++k)
        add_graph_point(graph, interpolate_jet(solution, ridge.s[k], ridge.theta[k]), GraphCurve::max);
    const auto m = static_cast<double>(solution.n_theta());
    summarize(graph, GraphCurve::boundary1, grad[0] / m);
    summarize(graph, GraphCurve::boundary2, grad[1] / m);
    summarize(graph, GraphCurve::max, 0.0);
    return graph;
}

void write_radial_graph_csv(std::ostream& out, const RadialGraphSample& graph) {
    out << "x,y,z,nx,ny,nz,contact,curve\n";
    char line[256];
    for (std::size_t k = 0; k < graph.points.size(); ++k) {
        const auto& p = graph.points[k];
        const auto& nv = graph.normals[k];
        std::snprintf(line, sizeof line, "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,", p[0], p[1], p[2], nv[0],
                      nv[1], nv[2], graph.contact[k]);
        out << line << to_string(graph.curve[k]) << '\n';
    }
}

// ---------------------------------------------------------------------------
// Killing field

double killing_derivative(const ModelProfile& profile, double r, double theta) {
    if (!(r > profile.r1() && r < profile.r2())) throw DomainError("height outside (r1, r2)");
    return -std::sqrt(1.0 - r * r) * profile.dU(r) * std::cos(theta);
}

double killing_derivative_fd(const ModelProfile& profile, double r, double theta, double delta) {
    if (!(r > profile.r1() && r < profile.r2())) throw DomainError("height outside (r1, r2)");
    const Vec3 q = sphere_point(std::acos(r), theta);
    // the flow rotates the (x, z) plane: e_z → cos t·e_z + sin t·e_x
    auto u_at = [&](double t) { return profile.U(std::cos(t) * q[2] - std::sin(t) * q[0]); };
    return (u_at(delta) - u_at(-delta)) / (2.0 * delta);
}

// ---------------------------------------------------------------------------

void to_json(nlohmann::json& j, const LevelCurve& curve) {
    j = {{"level", curve.level},     {"closed", curve.closed}, {"winding", curve.winding},
         {"length", curve.length},   {"vertices", curve.size()}};
}

void to_json(nlohmann::json& j, const ContactStats& st) {
    auto num = [](double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); };
    j = {{"curve", to_string(st.curve)},
         {"count", st.count},
         {"mean", st.mean},
         {"stddev", st.stddev},
         {"min", st.min},
         {"max", st.max},
         {"alpha_gradient_sq", num(st.alpha_gradient_sq)},
         {"alpha_neumann", num(st.alpha_neumann)}};
}

}  // namespace sphere_oep
