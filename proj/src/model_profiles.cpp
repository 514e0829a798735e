#include "sphere_oep/model_profiles.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "sphere_oep/detail/shooting.hpp"
#include "sphere_oep/error.hpp"

namespace sphere_oep {

namespace {

constexpr double pole_margin = 1e-12;

detail::IntegratorSettings settings_for(double tol) {
    detail::IntegratorSettings s;
    s.rel_tol = std::clamp(tol, 1e-13, 1e-8);
    s.abs_tol = 0.1 * s.rel_tol;
    s.max_step = 0.01;
    return s;
}

void require_positive(double value, const char* what) {
    if (!(value > 0.0) || !std::isfinite(value)) {
        std::ostringstream os;
        os << what << " must be positive and finite, got " << value;
        throw DomainError(os.str());
    }
}

}  // namespace

// ---------------------------------------------------------------------------
// ModelProfile

ModelProfile::ModelProfile(Nonlinearity f, double R, double M, double tol, std::vector<ProfileSample> samples,
                           BoundaryPoint lower, BoundaryPoint upper)
    : f_(std::move(f)), R_(R), M_(M), tol_(tol), samples_(std::move(samples)), lower_(lower), upper_(upper) {
    if (samples_.size() < 2) throw DomainError("model profile needs at least two samples");
}

double ModelProfile::second_derivative(double r, double U, double dU) const {
    return (2.0 * r * dU - f_.extended_value(U)) / (1.0 - r * r);
}

ProfilePoint ModelProfile::at(double r) const {
    if (!(r >= r1() && r <= r2())) {
        std::ostringstream os;
        os << "profile evaluated at r = " << r << " outside [" << r1() << ", " << r2() << "]";
        throw DomainError(os.str());
    }
    if (r < samples_.front().r || r > samples_.back().r)
        throw DomainError("profile height lies beyond the resolvable part of a pinched profile");
    auto it = std::upper_bound(samples_.begin(), samples_.end(), r,
                               [](double value, const ProfileSample& s) { return value < s.r; });
    if (it == samples_.end()) --it;
    if (it == samples_.begin()) ++it;
    const ProfileSample& a = *(it - 1);
    const ProfileSample& b = *it;

    const double ddUa = second_derivative(a.r, a.U, a.dU);
    const double ddUb = second_derivative(b.r, b.U, b.dU);
    const auto [U, dU] = detail::hermite5(a.r, b.r, a.U, a.dU, ddUa, b.U, b.dU, ddUb, r);

    auto ddZ = [&](const ProfileSample& s) {
        return (2.0 * s.r * s.dZ - f_.extended_derivative(s.U) * s.Z) / (1.0 - s.r * s.r);
    };
    const auto [Z, dZ] = detail::hermite5(a.r, b.r, a.Z, a.dZ, ddZ(a), b.Z, b.dZ, ddZ(b), r);

    ProfilePoint p;
    p.r = r;
    p.U = U;
    p.dU = dU;
    p.d2U = second_derivative(r, U, dU);
    p.Z = Z;
    p.dZ = dZ;
    p.d2Z = (2.0 * r * dZ - f_.extended_derivative(U) * Z) / (1.0 - r * r);
    p.G = p.d2U * Z - dU * dZ;
    return p;
}

double ModelProfile::zero_error_bound() const {
    const double slope = std::min(std::abs(lower_.dU), std::abs(upper_.dU));
    const double integrator = 100.0 * std::clamp(tol_, 1e-13, 1e-8) * std::max(1.0, M_);
    return (tol_ + integrator) / slope;
}

nlohmann::json ModelProfile::sidecar() const {
    return {{"R", R_}, {"M", M_}, {"r1", r1()}, {"r2", r2()}, {"tol", tol_}, {"f", f_.to_json()}};
}

namespace {

// Past |r| = 1 − pole_switch the cylindrical form is abandoned for
// V(t) = U(σ·cos s), t = log s, with s the distance to the pole on that side:
//   V_tt + (s·cot s − 1)·V_t + s²·f(V) = 0,
// which is regular all the way down to s ~ 1e-300.
constexpr double pole_switch = 1e-3;
constexpr double tail_floor = 1e-300;
// Below this pole distance r no longer separates from ±1 in the table.
constexpr double table_floor = 1e-7;

double s_cot_s_minus_one(double s) {
    if (s < 1e-3) {
        const double s2 = s * s;
        return -s2 / 3.0 - s2 * s2 / 45.0;
    }
    return s * std::cos(s) / std::sin(s) - 1.0;
}

struct Branch {
    std::vector<ProfileSample> rows;  // ordered away from R
    BoundaryPoint boundary;
};

ProfileSample make_row(const Nonlinearity& f, double r, double U, double dU, double Z, double dZ) {
    ProfileSample s{r, U, dU, Z, dZ, 0.0};
    const double d2U = (2.0 * r * dU - f.extended_value(U)) / (1.0 - r * r);
    s.G = d2U * Z - dU * dZ;
    return s;
}

Branch shoot_branch(const Nonlinearity& f, double R, double M, double sigma,
                    const detail::IntegratorSettings& settings, double tol) {
    using State = detail::State<4>;
    Branch branch;
    const double fM = f.evaluate(M);
    State x{M, 0.0, 0.0, fM / (1.0 - R * R)};
    double pole_distance = std::acos(std::clamp(sigma * R, -1.0, 1.0));

    if (sigma * R < 1.0 - pole_switch) {
        // (U, U', Z, Z') in r
        auto system = [&f](const State& y, State& dydr, double r) {
            const double w = 1.0 - r * r;
            dydr[0] = y[1];
            dydr[1] = (2.0 * r * y[1] - f.extended_value(y[0])) / w;
            dydr[2] = y[3];
            dydr[3] = (2.0 * r * y[3] - f.extended_derivative(y[0]) * y[2]) / w;
        };
        const auto shot = detail::shoot_to_zero<4>(system, R, x, sigma * (1.0 - pole_switch), settings, tol);
        for (std::size_t k = 0; k < shot.t.size(); ++k) {
            const auto& y = shot.x[k];
            branch.rows.push_back(make_row(f, shot.t[k], y[0], y[1], y[2], y[3]));
        }
        if (shot.found) {
            branch.rows.back().U = 0.0;
            const double r = shot.zero;
            branch.boundary = {r, std::acos(sigma * r), std::sqrt(1.0 - r * r) * std::abs(shot.x.back()[1]),
                               shot.x.back()[1], true};
            return branch;
        }
        x = shot.x.back();
        pole_distance = std::acos(1.0 - pole_switch);
    } else {
        branch.rows.push_back(make_row(f, R, x[0], x[1], x[2], x[3]));
    }

    // (V, V_t, W, W_t) in t = log s
    auto tail = [&f](const State& y, State& dydt, double t) {
        const double s = std::exp(t);
        const double c = s_cot_s_minus_one(s);
        dydt[0] = y[1];
        dydt[1] = -c * y[1] - s * s * f.extended_value(y[0]);
        dydt[2] = y[3];
        dydt[3] = -c * y[3] - s * s * f.extended_derivative(y[0]) * y[2];
    };
    // dr/ds = −σ·sin s, so V_t = s·V_s = −σ·s·sin(s)·U'.
    const double s0 = pole_distance;
    const double to_t = -sigma * s0 * std::sin(s0);
    const State y0{x[0], to_t * x[1], x[2], to_t * x[3]};
    auto tail_settings = settings;
    tail_settings.max_step = 0.05;
    const auto shot = detail::shoot_to_zero<4>(tail, std::log(s0), y0, std::log(tail_floor), tail_settings, tol);
    if (!shot.found) {
        std::ostringstream os;
        os << "profile stays positive up to distance " << tail_floor << " from the pole";
        throw NoZeroFound(os.str());
    }

    bool zero_in_table = false;
    for (std::size_t k = 1; k < shot.t.size(); ++k) {
        const double s = std::exp(shot.t[k]);
        if (s < table_floor) break;
        const double r = sigma * std::cos(s);
        if (!(sigma * r > sigma * branch.rows.back().r)) break;
        const auto& y = shot.x[k];
        const double from_t = -1.0 / (sigma * s * std::sin(s));
        branch.rows.push_back(make_row(f, r, y[0], from_t * y[1], y[2], from_t * y[3]));
        zero_in_table = k + 1 == shot.t.size();
    }
    if (zero_in_table) branch.rows.back().U = 0.0;

    const double s = std::exp(shot.zero);
    const double V_t = shot.x.back()[1];
    branch.boundary = {sigma * std::cos(s), s, std::abs(V_t) / s, -V_t / (sigma * s * std::sin(s)), zero_in_table};
    return branch;
}

}  // namespace

ModelProfile solve_annulus_profile(const Nonlinearity& f, double R, double M, double tol) {
    if (!(R > -1.0 && R < 1.0)) throw DomainError("model profile needs R in (-1, 1)");
    require_positive(M, "M");
    require_positive(tol, "tol");
    f.evaluate(M);  // f must be trusted on [0, M]

    // Differentiating U_{R,M}(R) = M and U'_{R,M}(R) = 0 in R gives Z(R) = −U'(R) = 0
    // and Z'(R) = −U''(R); the equation at r = R turns the latter into f(M)/(1 − R²).
    const auto settings = settings_for(tol);
    Branch up = shoot_branch(f, R, M, 1.0, settings, tol);
    Branch down = shoot_branch(f, R, M, -1.0, settings, tol);

    std::vector<ProfileSample> samples;
    samples.reserve(up.rows.size() + down.rows.size());
    for (std::size_t k = down.rows.size(); k-- > 1;) samples.push_back(down.rows[k]);
    samples.insert(samples.end(), up.rows.begin(), up.rows.end());
    return ModelProfile(f, R, M, tol, std::move(samples), down.boundary, up.boundary);
}

// ---------------------------------------------------------------------------
// DiskProfile

DiskProfile::DiskProfile(Nonlinearity f, double M, std::vector<Sample> samples)
    : f_(std::move(f)), M_(M), samples_(std::move(samples)) {
    if (samples_.size() < 2) throw DomainError("disk profile needs at least two samples");
}

double DiskProfile::second_derivative(double s, double V, double dV) const {
    // At the pole cot(s)·V' → V''(0), so V''(0) = −f(M)/2.
    if (s == 0.0) return -0.5 * f_.extended_value(V);
    return -std::cos(s) / std::sin(s) * dV - f_.extended_value(V);
}

DiskProfile::Point DiskProfile::at(double s) const {
    if (!(s >= 0.0 && s <= s_M())) {
        std::ostringstream os;
        os << "disk profile evaluated at s = " << s << " outside [0, " << s_M() << "]";
        throw DomainError(os.str());
    }
    auto it = std::upper_bound(samples_.begin(), samples_.end(), s,
                               [](double value, const Sample& smp) { return value < smp.s; });
    if (it == samples_.end()) --it;
    if (it == samples_.begin()) ++it;
    const Sample& a = *(it - 1);
    const Sample& b = *it;
    const auto [V, dV] = detail::hermite5(a.s, b.s, a.V, a.dV, second_derivative(a.s, a.V, a.dV), b.V, b.dV,
                                          second_derivative(b.s, b.V, b.dV), s);
    return {s, V, dV, second_derivative(s, V, dV)};
}

double disk_series_coefficient(const Nonlinearity& f, double M) { return -0.25 * f.evaluate(M); }

DiskProfile solve_disk_profile(const Nonlinearity& f, double M, double tol) {
    require_positive(M, "M");
    require_positive(tol, "tol");
    f.evaluate(M);

    using State = detail::State<2>;  // (V, V')
    auto system = [&f](const State& x, State& dxdt, double s) {
        dxdt[0] = x[1];
        dxdt[1] = -std::cos(s) / std::sin(s) * x[1] - f.extended_value(x[0]);
    };

    const double s0 = disk_series_start;
    const double c = disk_series_coefficient(f, M);
    const State start{M + c * s0 * s0, 2.0 * c * s0};
    const auto shot = detail::shoot_to_zero<2>(system, s0, start, std::numbers::pi - 1e-9,
                                               settings_for(tol), tol);
    if (!shot.found) throw NoZeroFound("disk profile stays positive up to the antipode");

    std::vector<DiskProfile::Sample> samples;
    samples.reserve(shot.t.size() + 1);
    samples.push_back({0.0, M, 0.0});
    for (std::size_t k = 0; k < shot.t.size(); ++k) samples.push_back({shot.t[k], shot.x[k][0], shot.x[k][1]});
    samples.back().V = 0.0;
    return DiskProfile(f, M, std::move(samples));
}

double compute_h(const Nonlinearity& f, double M, double tol) { return solve_disk_profile(f, M, tol).h(); }

// ---------------------------------------------------------------------------
// Boundary gradient and sign lemmas

double boundary_gradient(const ModelProfile& profile, ZeroEnd end) { return profile.boundary(end).gradient; }

namespace {

void update(SignCheck& check, double margin, double r) {
    if (check.samples == 0 || margin < check.worst_margin) {
        check.worst_margin = margin;
        check.worst_r = r;
    }
    ++check.samples;
    if (!(margin > 0.0)) check.pass = false;
}

}  // namespace

SignReport check_sign_lemmas(const ModelProfile& profile, std::optional<double> collar, std::size_t n_uniform) {
    SignReport report;
    const double r1 = profile.samples().front().r;
    const double r2 = profile.samples().back().r;
    const double R = profile.R();
    report.collar = collar.value_or(1e-3 * (r2 - r1));

    std::vector<double> heights;
    heights.reserve(profile.samples().size() + n_uniform);
    for (const auto& s : profile.samples()) heights.push_back(s.r);
    for (std::size_t k = 0; k < n_uniform; ++k)
        heights.push_back(std::min(r2, r1 + (r2 - r1) * static_cast<double>(k) / static_cast<double>(n_uniform - 1)));
    std::sort(heights.begin(), heights.end());

    for (double r : heights) {
        if (std::abs(r - R) < report.collar) continue;
        const ProfilePoint p = profile.at(r);
        const bool below = r < R;
        const bool interior = r > r1 && r < r2;
        if (interior) {
            update(report.z_pattern, below ? -p.Z : p.Z, r);
            update(report.concavity, -p.d2U, r);
        }
        const double g_margin = below ? p.G : -p.G;
        update(report.g_pattern, g_margin, r);
        update(below ? report.g_lower : report.g_upper, g_margin, r);
    }
    return report;
}

void to_json(nlohmann::json& j, const SignCheck& c) {
    j = {{"pass", c.pass}, {"worst_margin", c.worst_margin}, {"worst_r", c.worst_r}, {"samples", c.samples}};
}

void to_json(nlohmann::json& j, const SignReport& r) {
    j = {{"z_pattern", r.z_pattern}, {"g_pattern", r.g_pattern}, {"g_lower", r.g_lower},
         {"g_upper", r.g_upper},     {"concavity", r.concavity}, {"collar", r.collar},
         {"pass", r.all()}};
}

}  // namespace sphere_oep
