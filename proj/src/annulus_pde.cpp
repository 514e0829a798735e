#include "sphere_oep/annulus_pde.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <deque>
#include <istream>
#include <numbers>
#include <ostream>
#include <sstream>

#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include "sphere_oep/error.hpp"

namespace sphere_oep {

namespace {
constexpr double two_pi = 2.0 * std::numbers::pi;
}

// ---------------------------------------------------------------------------
// Domain

double Perturbation::value(double theta) const { return amplitude * std::cos(mode * theta); }
double Perturbation::derivative(double theta) const { return -amplitude * mode * std::sin(mode * theta); }
double Perturbation::second_derivative(double theta) const {
    return -amplitude * mode * mode * std::cos(mode * theta);
}

double DomainSpec::theta(std::size_t j) const {
    return two_pi * static_cast<double>(j) / static_cast<double>(n_theta);
}

double DomainSpec::s_at(double xi, double theta) const {
    const double a = inner_boundary(theta);
    return a + xi * (outer_boundary(theta) - a);
}

void DomainSpec::validate() const {
    if (!(s1 > 0.0 && s1 < s2 && s2 < std::numbers::pi)) throw DomainError("annulus needs 0 < s1 < s2 < pi");
    if (n_theta < 8 || n_theta % 2 != 0) throw DomainError("n_theta must be even and at least 8");
    if (n_s < 6) throw DomainError("n_s must be at least 6");
    if (inner.mode < 0 || outer.mode < 0) throw DomainError("perturbation modes must be non-negative");
    const double lo = s1 - std::abs(inner.amplitude);
    const double hi = s2 + std::abs(outer.amplitude);
    if (!(lo > 0.0 && hi < std::numbers::pi)) throw DomainError("perturbed boundary leaves (0, pi)");
    if (!(s1 + std::abs(inner.amplitude) < s2 - std::abs(outer.amplitude)))
        throw DomainError("perturbed boundaries intersect");
}

void to_json(nlohmann::json& j, const DomainSpec& d) {
    j = {{"s1", d.s1},
         {"s2", d.s2},
         {"inner", {{"amplitude", d.inner.amplitude}, {"mode", d.inner.mode}}},
         {"outer", {{"amplitude", d.outer.amplitude}, {"mode", d.outer.mode}}},
         {"n_s", d.n_s},
         {"n_theta", d.n_theta}};
}

void from_json(const nlohmann::json& j, DomainSpec& d) {
    d.s1 = j.at("s1").get<double>();
    d.s2 = j.at("s2").get<double>();
    d.inner = {j.at("inner").at("amplitude").get<double>(), j.at("inner").at("mode").get<int>()};
    d.outer = {j.at("outer").at("amplitude").get<double>(), j.at("outer").at("mode").get<int>()};
    d.n_s = j.at("n_s").get<std::size_t>();
    d.n_theta = j.at("n_theta").get<std::size_t>();
}

namespace {

// Chain-rule data of s = a(θ) + ξ·L(θ) at one grid point.
struct Mapping {
    double s;
    double L;
    double dL;
    double xi_t;   // ∂ξ/∂θ at fixed s
    double xi_tt;  // ∂²ξ/∂θ² at fixed s
};

Mapping mapping_at(const DomainSpec& d, double xi, double theta) {
    const double a = d.inner_boundary(theta);
    const double da = d.inner.derivative(theta);
    const double dda = d.inner.second_derivative(theta);
    const double L = d.outer_boundary(theta) - a;
    const double dL = d.outer.derivative(theta) - da;
    const double ddL = d.outer.second_derivative(theta) - dda;
    Mapping m;
    m.s = a + xi * L;
    m.L = L;
    m.dL = dL;
    m.xi_t = -(da + xi * dL) / L;
    m.xi_tt = -(dda + xi * ddL + 2.0 * m.xi_t * dL) / L;
    return m;
}

// Fourth-order first/second derivative weights on a uniform grid of n+1 points,
// one-sided within two points of either end.
struct Stencil {
    std::size_t first;  // index of weights[0]
    std::array<double, 6> w{};
    std::size_t size;
};

Stencil d1_stencil(std::size_t i, std::size_t n) {
    if (i >= 2 && i + 2 <= n) return {i - 2, {1, -8, 0, 8, -1}, 5};
    if (i == 0) return {0, {-25, 48, -36, 16, -3}, 5};
    if (i == 1) return {0, {-3, -10, 18, -6, 1}, 5};
    if (i == n) return {n - 4, {3, -16, 36, -48, 25}, 5};
    return {n - 4, {-1, 6, -18, 10, 3}, 5};  // i == n − 1
}

Stencil d2_stencil(std::size_t i, std::size_t n) {
    if (i >= 2 && i + 2 <= n) return {i - 2, {-1, 16, -30, 16, -1}, 5};
    if (i == 0) return {0, {45, -154, 214, -156, 61, -10}, 6};
    if (i == 1) return {0, {10, -15, -4, 14, -6, 1}, 6};
    if (i == n) return {n - 5, {-10, 61, -156, 214, -154, 45}, 6};
    return {n - 5, {1, -6, 14, -4, -15, 10}, 6};  // i == n − 1
}

}  // namespace

// ---------------------------------------------------------------------------
// Jets

double SphericalJet::grad_sq() const {
    const double sn = std::sin(s);
    return u_s * u_s + u_t * u_t / (sn * sn);
}

double SphericalJet::laplacian() const {
    const double sn = std::sin(s);
    return u_ss + std::cos(s) / sn * u_s + u_tt / (sn * sn);
}

double SphericalJet::hessian_along_gradient() const {
    const double sn = std::sin(s);
    const double cs = std::cos(s);
    const double h_ss = u_ss;
    const double h_st = u_st - cs / sn * u_t;
    const double h_tt = u_tt + sn * cs * u_s;
    const double gs = u_s;
    const double gt = u_t / (sn * sn);
    return h_ss * gs * gs + 2.0 * h_st * gs * gt + h_tt * gt * gt;
}

// ---------------------------------------------------------------------------
// GridSolution

GridSolution::GridSolution(DomainSpec domain, Nonlinearity f, std::vector<double> values)
    : domain_(std::move(domain)), f_(std::move(f)), values_(std::move(values)) {
    domain_.validate();
    const std::size_t n = (domain_.n_s + 1) * domain_.n_theta;
    if (values_.size() != n) throw DomainError("grid solution has the wrong number of values");
    s_.resize(n);
    for (std::size_t i = 0; i <= domain_.n_s; ++i)
        for (std::size_t j = 0; j < domain_.n_theta; ++j) s_[index(i, j)] = domain_.s_at(domain_.xi(i), domain_.theta(j));
    const auto it = std::max_element(values_.begin(), values_.end());
    u_max_ = *it;
    const auto k = static_cast<std::size_t>(it - values_.begin());
    argmax_ = {k / domain_.n_theta, k % domain_.n_theta};
}

double GridSolution::peak_value() const {
    const auto [i, j] = argmax_;
    if (i == 0 || i == domain_.n_s) return u_max_;
    const std::size_t m = domain_.n_theta;
    double peak = u_max_;
    const auto lift = [&](double lo, double hi) {
        const double d1 = 0.5 * (hi - lo);
        const double d2 = hi - 2.0 * u_max_ + lo;
        if (d2 < 0.0) peak += -0.5 * d1 * d1 / d2;
    };
    lift(value(i - 1, j), value(i + 1, j));
    lift(value(i, (j + m - 1) % m), value(i, (j + 1) % m));
    return peak;
}

void GridSolution::set_solver_report(double residual, int iterations, std::optional<double> spectral_factor) {
    residual_ = residual;
    iterations_ = iterations;
    spectral_factor_ = spectral_factor;
}

SphericalJet GridSolution::jet(std::size_t i, std::size_t j) const {
    const std::size_t n = domain_.n_s;
    const std::size_t m = domain_.n_theta;
    const double hx = 1.0 / static_cast<double>(n);
    const double ht = two_pi / static_cast<double>(m);
    auto u = [&](std::size_t ii, std::ptrdiff_t jj) {
        const auto wrapped = static_cast<std::size_t>((jj % static_cast<std::ptrdiff_t>(m) + m) % m);
        return values_[index(ii, wrapped)];
    };
    const auto sj = static_cast<std::ptrdiff_t>(j);
    auto d_eta = [&](std::size_t ii) {
        return (u(ii, sj - 2) - 8.0 * u(ii, sj - 1) + 8.0 * u(ii, sj + 1) - u(ii, sj + 2)) / (12.0 * ht);
    };

    const Stencil s1 = d1_stencil(i, n);
    const Stencil s2 = d2_stencil(i, n);
    double u_x = 0.0;
    double u_xe = 0.0;
    for (std::size_t k = 0; k < s1.size; ++k) {
        u_x += s1.w[k] * u(s1.first + k, sj);
        u_xe += s1.w[k] * d_eta(s1.first + k);
    }
    u_x /= 12.0 * hx;
    u_xe /= 12.0 * hx;
    double u_xx = 0.0;
    for (std::size_t k = 0; k < s2.size; ++k) u_xx += s2.w[k] * u(s2.first + k, sj);
    u_xx /= 12.0 * hx * hx;
    const double u_e = d_eta(i);
    const double u_ee =
        (-u(i, sj - 2) + 16.0 * u(i, sj - 1) - 30.0 * u(i, sj) + 16.0 * u(i, sj + 1) - u(i, sj + 2)) /
        (12.0 * ht * ht);

    const Mapping mp = mapping_at(domain_, domain_.xi(i), domain_.theta(j));
    SphericalJet jt;
    jt.s = mp.s;
    jt.theta = domain_.theta(j);
    jt.u = u(i, sj);
    jt.u_s = u_x / mp.L;
    jt.u_ss = u_xx / (mp.L * mp.L);
    jt.u_t = u_e + mp.xi_t * u_x;
    jt.u_st = (u_xe + mp.xi_t * u_xx) / mp.L - u_x * mp.dL / (mp.L * mp.L);
    jt.u_tt = u_ee + 2.0 * mp.xi_t * u_xe + mp.xi_t * mp.xi_t * u_xx + mp.xi_tt * u_x;
    return jt;
}

nlohmann::json GridSolution::header() const {
    nlohmann::json j = {{"format", "sphere-oep-grid/1"},
                        {"domain", domain_},
                        {"f", f_.to_json()},
                        {"u_max", u_max_},
                        {"argmax", {argmax_.i, argmax_.j}},
                        {"residual", residual_},
                        {"iterations", iterations_}};
    j["spectral_factor"] = spectral_factor_ ? nlohmann::json(*spectral_factor_) : nlohmann::json(nullptr);
    return j;
}

void write_grid_solution(std::ostream& out, const GridSolution& solution) {
    out << solution.header().dump() << '\n';
    out << "s,theta,u\n";
    char line[96];
    for (std::size_t i = 0; i <= solution.n_s(); ++i) {
        for (std::size_t j = 0; j < solution.n_theta(); ++j) {
            std::snprintf(line, sizeof line, "%.17g,%.17g,%.17g\n", solution.s_at(i, j), solution.theta_at(j),
                          solution.value(i, j));
            out << line;
        }
    }
}

GridSolution read_grid_solution(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw DomainError("empty grid solution file");
    nlohmann::json header;
    try {
        header = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
        throw DomainError(std::string("bad grid solution header: ") + e.what());
    }
    if (header.value("format", "") != "sphere-oep-grid/1") throw DomainError("unknown grid solution format");
    const auto domain = header.at("domain").get<DomainSpec>();
    const auto f = Nonlinearity::from_json(header.at("f"));
    if (!std::getline(in, line) || line != "s,theta,u") throw DomainError("missing s,theta,u header row");

    std::vector<double> values;
    values.reserve((domain.n_s + 1) * domain.n_theta);
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto c2 = line.rfind(',');
        if (c2 == std::string::npos) throw DomainError("malformed grid row: " + line);
        values.push_back(std::stod(line.substr(c2 + 1)));
    }
    GridSolution solution(domain, f, std::move(values));
    std::optional<double> mu;
    if (header.contains("spectral_factor") && !header["spectral_factor"].is_null())
        mu = header["spectral_factor"].get<double>();
    solution.set_solver_report(header.value("residual", 0.0), header.value("iterations", 0), mu);
    return solution;
}

// ---------------------------------------------------------------------------
// Dirichlet solve

std::vector<double> profile_guess(const DomainSpec& domain, const ModelProfile& profile) {
    domain.validate();
    std::vector<double> guess((domain.n_s + 1) * domain.n_theta, 0.0);
    const double lo = profile.samples().front().r;
    const double hi = profile.samples().back().r;
    for (std::size_t i = 1; i < domain.n_s; ++i) {
        for (std::size_t j = 0; j < domain.n_theta; ++j) {
            const double r = std::cos(domain.s_at(domain.xi(i), domain.theta(j)));
            if (r > lo && r < hi) guess[i * domain.n_theta + j] = profile.U(r);
        }
    }
    return guess;
}

namespace {

using SparseMatrix = Eigen::SparseMatrix<double>;
using Vector = Eigen::VectorXd;

// Discrete Δ on interior unknowns k = (i − 1)·n_θ + j; boundary values are zero.
SparseMatrix assemble_laplacian(const DomainSpec& d) {
    const std::size_t n = d.n_s;
    const std::size_t m = d.n_theta;
    const double hx = 1.0 / static_cast<double>(n);
    const double ht = two_pi / static_cast<double>(m);
    const std::size_t unknowns = (n - 1) * m;

    std::vector<Eigen::Triplet<double>> entries;
    entries.reserve(unknowns * 9);
    auto key = [m](std::size_t i, std::size_t j) { return static_cast<int>((i - 1) * m + j); };
    for (std::size_t i = 1; i < n; ++i) {
        for (std::size_t j = 0; j < m; ++j) {
            const Mapping mp = mapping_at(d, d.xi(i), d.theta(j));
            const double sn2 = std::sin(mp.s) * std::sin(mp.s);
            const double c_xx = 1.0 / (mp.L * mp.L) + mp.xi_t * mp.xi_t / sn2;
            const double c_xe = 2.0 * mp.xi_t / sn2;
            const double c_ee = 1.0 / sn2;
            const double c_x = std::cos(mp.s) / std::sin(mp.s) / mp.L + mp.xi_tt / sn2;

            const std::size_t jp = (j + 1) % m;
            const std::size_t jm = (j + m - 1) % m;
            const int row = key(i, j);
            auto add = [&](std::size_t ii, std::size_t jj, double w) {
                if (ii == 0 || ii == n || w == 0.0) return;
                entries.emplace_back(row, key(ii, jj), w);
            };
            add(i, j, -2.0 * c_xx / (hx * hx) - 2.0 * c_ee / (ht * ht));
            entries.emplace_back(row, row, 0.0);  // keep the diagonal structurally present
            add(i + 1, j, c_xx / (hx * hx) + c_x / (2.0 * hx));
            add(i - 1, j, c_xx / (hx * hx) - c_x / (2.0 * hx));
            add(i, jp, c_ee / (ht * ht));
            add(i, jm, c_ee / (ht * ht));
            const double w = c_xe / (4.0 * hx * ht);
            add(i + 1, jp, w);
            add(i + 1, jm, -w);
            add(i - 1, jp, -w);
            add(i - 1, jm, w);
        }
    }
    SparseMatrix A(static_cast<int>(unknowns), static_cast<int>(unknowns));
    A.setFromTriplets(entries.begin(), entries.end());
    A.makeCompressed();
    return A;
}

double sup_norm(const Vector& v) { return v.size() == 0 ? 0.0 : v.cwiseAbs().maxCoeff(); }

class NewtonSystem {
public:
    NewtonSystem(const DomainSpec& d, const Nonlinearity& f, bool bordered, int pin, double pin_value)
        : f_(f), A_(assemble_laplacian(d)), bordered_(bordered), pin_(pin), pin_value_(pin_value) {
        n_ = static_cast<int>(A_.rows());
    }

    int size() const { return bordered_ ? n_ + 1 : n_; }

    // state = (u interior, μ if bordered)
    Vector residual(const Vector& x) const {
        const Vector u = x.head(n_);
        const double mu = bordered_ ? x[n_] : 1.0;
        Vector fu(n_);
        for (int k = 0; k < n_; ++k) fu[k] = f_.extended_value(u[k]);
        Vector r(size());
        r.head(n_) = A_ * u + mu * fu;
        if (bordered_) r[n_] = u[pin_] - pin_value_;
        return r;
    }

    SparseMatrix jacobian(const Vector& x) const {
        const double mu = bordered_ ? x[n_] : 1.0;
        std::vector<Eigen::Triplet<double>> entries;
        entries.reserve(A_.nonZeros() + 2 * n_ + 1);
        for (int c = 0; c < A_.outerSize(); ++c)
            for (SparseMatrix::InnerIterator it(A_, c); it; ++it) entries.emplace_back(it.row(), it.col(), it.value());
        for (int k = 0; k < n_; ++k) entries.emplace_back(k, k, mu * f_.extended_derivative(x[k]));
        if (bordered_) {
            for (int k = 0; k < n_; ++k) entries.emplace_back(k, n_, f_.extended_value(x[k]));
            entries.emplace_back(n_, pin_, 1.0);
        }
        SparseMatrix J(size(), size());
        J.setFromTriplets(entries.begin(), entries.end());
        J.makeCompressed();
        return J;
    }

private:
    const Nonlinearity& f_;
    SparseMatrix A_;
    bool bordered_;
    int pin_;
    double pin_value_;
    int n_ = 0;
};

}  // namespace

GridSolution solve_dirichlet(const DomainSpec& domain, const Nonlinearity& f, std::span<const double> guess,
                             double tol, NewtonOptions options) {
    domain.validate();
    if (!(tol > 0.0)) throw DomainError("tol must be positive");
    const std::size_t n = domain.n_s;
    const std::size_t m = domain.n_theta;
    if (guess.size() != (n + 1) * m) throw DomainError("guess has the wrong number of values");

    std::vector<double> start(guess.begin(), guess.end());
    const bool all_zero = std::all_of(start.begin(), start.end(), [](double v) { return v == 0.0; });
    if (all_zero) {
        for (std::size_t i = 1; i < n; ++i)
            for (std::size_t j = 0; j < m; ++j) start[i * m + j] = std::sin(std::numbers::pi * domain.xi(i));
    }

    const int unknowns = static_cast<int>((n - 1) * m);
    const bool bordered = f.is_homogeneous_linear();
    Vector x(bordered ? unknowns + 1 : unknowns);
    for (int k = 0; k < unknowns; ++k) x[k] = start[m + static_cast<std::size_t>(k)];
    int pin = 0;
    if (bordered) {
        x.head(unknowns).maxCoeff(&pin);
        x[unknowns] = 1.0;
    }
    const NewtonSystem system(domain, f, bordered, pin, x[pin]);

    Eigen::SparseLU<SparseMatrix, Eigen::COLAMDOrdering<int>> lu;
    bool analyzed = false;
    Vector r = system.residual(x);
    double norm = sup_norm(r);
    int iterations = 0;
    while (norm > tol) {
        if (iterations >= options.max_iterations) {
            std::ostringstream os;
            os << "Newton did not converge in " << options.max_iterations << " iterations (residual " << norm << ")";
            throw NonConvergence(os.str());
        }
        const SparseMatrix J = system.jacobian(x);
        if (!analyzed) {
            lu.analyzePattern(J);
            analyzed = true;
        }
        lu.factorize(J);
        if (lu.info() != Eigen::Success) throw SingularLinearization("linearized operator is numerically singular");
        const Vector step = lu.solve(-r);
        if (lu.info() != Eigen::Success || !step.allFinite())
            throw SingularLinearization("linear solve failed on the linearized operator");

        double lambda = 1.0;
        bool accepted = false;
        for (int halving = 0; halving <= options.max_halvings; ++halving, lambda *= 0.5) {
            const Vector trial = x + lambda * step;
            const Vector r_trial = system.residual(trial);
            const double trial_norm = sup_norm(r_trial);
            if (trial_norm < norm) {
                x = trial;
                r = r_trial;
                norm = trial_norm;
                accepted = true;
                break;
            }
        }
        ++iterations;
        if (!accepted) {
            std::ostringstream os;
            os << "damped Newton stalled at residual " << norm;
            throw NonConvergence(os.str());
        }
    }

    std::vector<double> values((n + 1) * m, 0.0);
    for (int k = 0; k < unknowns; ++k) values[m + static_cast<std::size_t>(k)] = x[k];
    GridSolution solution(domain, f, std::move(values));
    solution.set_solver_report(norm, iterations, bordered ? std::optional<double>(x[unknowns]) : std::nullopt);
    return solution;
}

// ---------------------------------------------------------------------------
// Model fit

namespace {

struct FitResidual {
    bool ok = false;
    std::array<double, 2> value{};
};

FitResidual fit_residual(const Nonlinearity& f, double R, double M, double s1, double s2) {
    if (!(R > -1.0 && R < 1.0 && M > 0.0)) return {};
    try {
        const auto p = solve_annulus_profile(f, R, M, 1e-12);
        // arccos(r2) is the north pole distance; arccos(r1) = π − south pole distance.
        const double inner = p.boundary(ZeroEnd::r2).pole_distance;
        const double outer = std::numbers::pi - p.boundary(ZeroEnd::r1).pole_distance;
        return {true, {inner - s1, outer - s2}};
    } catch (const Error&) {
        return {};
    }
}

double max_abs(const std::array<double, 2>& v) { return std::max(std::abs(v[0]), std::abs(v[1])); }

}  // namespace

ModelFit fit_model_to_annulus(double s1, double s2, const Nonlinearity& f, double tol) {
    if (!(s1 > 0.0 && s1 < s2 && s2 < std::numbers::pi)) throw DomainError("fit needs 0 < s1 < s2 < pi");
    if (!(tol > 0.0)) throw DomainError("tol must be positive");

    ModelFit fit;
    fit.M_pinned = f.is_homogeneous_linear();
    fit.R = std::cos(0.5 * (s1 + s2));
    fit.M = 1.0;
    FitResidual current = fit_residual(f, fit.R, fit.M, s1, s2);
    if (!current.ok) throw NoSolution("no model profile at the seed height");

    constexpr int max_iterations = 60;
    for (; fit.iterations < max_iterations && max_abs(current.value) > 0.01 * tol; ++fit.iterations) {
        const double dR = 1e-7;
        const double dM = 1e-7 * std::max(1.0, fit.M);
        const auto pR = fit_residual(f, fit.R + dR, fit.M, s1, s2);
        const auto mR = fit_residual(f, fit.R - dR, fit.M, s1, s2);
        if (!pR.ok || !mR.ok) break;
        double stepR = 0.0;
        double stepM = 0.0;
        const double jR0 = (pR.value[0] - mR.value[0]) / (2 * dR);
        const double jR1 = (pR.value[1] - mR.value[1]) / (2 * dR);
        if (fit.M_pinned) {
            const double jtj = jR0 * jR0 + jR1 * jR1;
            if (jtj == 0.0) break;
            stepR = -(jR0 * current.value[0] + jR1 * current.value[1]) / jtj;
        } else {
            const auto pM = fit_residual(f, fit.R, fit.M + dM, s1, s2);
            const auto mM = fit_residual(f, fit.R, fit.M - dM, s1, s2);
            if (!pM.ok || !mM.ok) break;
            const double jM0 = (pM.value[0] - mM.value[0]) / (2 * dM);
            const double jM1 = (pM.value[1] - mM.value[1]) / (2 * dM);
            const double det = jR0 * jM1 - jM0 * jR1;
            if (det == 0.0) break;
            stepR = -(jM1 * current.value[0] - jM0 * current.value[1]) / det;
            stepM = -(-jR1 * current.value[0] + jR0 * current.value[1]) / det;
        }

        // Gauss-Newton with backtracking on the sum of squares
        const double norm2 = current.value[0] * current.value[0] + current.value[1] * current.value[1];
        bool moved = false;
        for (double lambda = 1.0; lambda > 1e-6; lambda *= 0.5) {
            const auto trial = fit_residual(f, fit.R + lambda * stepR, fit.M + lambda * stepM, s1, s2);
            if (!trial.ok) continue;
            const double trial2 = trial.value[0] * trial.value[0] + trial.value[1] * trial.value[1];
            if (trial2 < norm2) {
                fit.R += lambda * stepR;
                fit.M += lambda * stepM;
                current = trial;
                moved = true;
                break;
            }
        }
        if (!moved) break;
    }
    fit.residual = max_abs(current.value);
    if (fit.residual > tol) {
        std::ostringstream os;
        os << "no model annulus matches (" << s1 << ", " << s2 << ") for " << f.descriptor() << ": residual "
           << fit.residual << " after " << fit.iterations << " iterations";
        throw NoSolution(os.str());
    }
    return fit;
}

void to_json(nlohmann::json& j, const ModelFit& fit) {
    j = {{"R", fit.R},
         {"M", fit.M},
         {"M_pinned", fit.M_pinned},
         {"residual", fit.residual},
         {"iterations", fit.iterations}};
}

// ---------------------------------------------------------------------------
// Max set

MaxSet max_set(const GridSolution& solution, double collar) {
    if (!(collar >= 0.0)) throw DomainError("collar must be non-negative");
    MaxSet set;
    set.u_max = solution.u_max();
    set.collar = collar;
    const std::size_t n = solution.n_s();
    const auto m = static_cast<std::ptrdiff_t>(solution.n_theta());
    const double threshold = solution.u_max() - collar;

    // visited nodes carry their unwrapped column so winding can be detected
    constexpr std::ptrdiff_t unvisited = std::numeric_limits<std::ptrdiff_t>::min();
    std::vector<std::ptrdiff_t> unwrapped((n + 1) * static_cast<std::size_t>(m), unvisited);
    auto in_set = [&](std::size_t i, std::size_t j) { return solution.value(i, j) >= threshold; };

    for (std::size_t i0 = 0; i0 <= n; ++i0) {
        for (std::size_t j0 = 0; j0 < static_cast<std::size_t>(m); ++j0) {
            if (!in_set(i0, j0) || unwrapped[solution.index(i0, j0)] != unvisited) continue;
            MaxComponent component;
            std::deque<std::pair<std::size_t, std::ptrdiff_t>> queue{{i0, static_cast<std::ptrdiff_t>(j0)}};
            unwrapped[solution.index(i0, j0)] = static_cast<std::ptrdiff_t>(j0);
            while (!queue.empty()) {
                const auto [i, ju] = queue.front();
                queue.pop_front();
                component.nodes.push_back({i, static_cast<std::size_t>(((ju % m) + m) % m)});
                for (int di = -1; di <= 1; ++di) {
                    for (int dj = -1; dj <= 1; ++dj) {
                        if (di == 0 && dj == 0) continue;
                        const auto ii = static_cast<std::ptrdiff_t>(i) + di;
                        if (ii < 0 || ii > static_cast<std::ptrdiff_t>(n)) continue;
                        const std::ptrdiff_t nju = ju + dj;
                        const auto jj = static_cast<std::size_t>(((nju % m) + m) % m);
                        if (!in_set(static_cast<std::size_t>(ii), jj)) continue;
                        auto& mark = unwrapped[solution.index(static_cast<std::size_t>(ii), jj)];
                        if (mark == unvisited) {
                            mark = nju;
                            queue.emplace_back(static_cast<std::size_t>(ii), nju);
                        } else if (mark != nju) {
                            component.encircles = true;
                        }
                    }
                }
            }
            set.components.push_back(std::move(component));
        }
    }
    return set;
}

void to_json(nlohmann::json& j, const MaxSet& set) {
    nlohmann::json components = nlohmann::json::array();
    for (const auto& c : set.components)
        components.push_back({{"size", c.nodes.size()}, {"encircles", c.encircles}});
    j = {{"u_max", set.u_max}, {"collar", set.collar}, {"components", components}};
}

}  // namespace sphere_oep
