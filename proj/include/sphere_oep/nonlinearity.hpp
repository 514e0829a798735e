#pragma once

#include <cstddef>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

namespace sphere_oep {

enum class NonlinearityKind { affine, callable };

/// Source term f of the semilinear equation Δu + f(u) = 0, with its derivative.
///
/// Two kinds are supported: affine f(x) = a·x + b, evaluated exactly, and a
/// callable pair (f, f') supplied by the caller. Evaluation is trusted on
/// [0, x_max]; `evaluate` and `derivative` reject arguments outside it.
///
/// Integrators step slightly past a zero of the solution before it is
/// located, so `extended_value` / `extended_derivative` continue f below 0
/// (exactly for the affine kind, by the tangent line at 0 otherwise).
class Nonlinearity {
public:
    using Function = std::function<double(double)>;

    static Nonlinearity affine(double a, double b,
                               double x_max = std::numeric_limits<double>::infinity());
    static Nonlinearity callable(Function f, Function df, double x_max, std::string name);

    /// Parses the CLI form `affine:a,b`.
    static Nonlinearity parse(std::string_view descriptor);
    /// Parses the config form `{"kind":"affine","a":2.0,"b":0.0}`.
    static Nonlinearity from_json(const nlohmann::json& j);

    double evaluate(double x) const;
    double derivative(double x) const;
    double operator()(double x) const { return evaluate(x); }

    double extended_value(double x) const;
    double extended_derivative(double x) const;

    NonlinearityKind kind() const { return kind_; }
    double a() const { return a_; }
    double b() const { return b_; }
    double x_max() const { return x_max_; }

    /// True for f(x) = a·x: the Dirichlet problem is then an eigenvalue problem.
    bool is_homogeneous_linear() const { return kind_ == NonlinearityKind::affine && b_ == 0.0; }

    /// Canonical text form, `affine:a,b` or `callable:<name>`.
    std::string descriptor() const;
    nlohmann::json to_json() const;

private:
    Nonlinearity() = default;
    void check_domain(double x) const;

    NonlinearityKind kind_ = NonlinearityKind::affine;
    double a_ = 0.0;
    double b_ = 0.0;
    double x_max_ = std::numeric_limits<double>::infinity();
    Function f_;
    Function df_;
    std::string name_;
};

double evaluate(const Nonlinearity& f, double x);

struct ConditionViolation {
    std::string condition;  // "cond_i", "cond_ii" or "cond_nonneg"
    double x = 0.0;
    double lhs = 0.0;
    double rhs = 0.0;
};

/// Outcome of sampling the structural conditions f(x) >= f'(x)·x, f'(x) >= 2 and f >= 0.
struct ConditionReport {
    bool cond_i = true;
    bool cond_ii = true;
    bool cond_nonneg = true;
    bool f0_nonneg = true;  // f(0) >= 0
    bool f0_zero = true;    // f(0) == 0
    std::optional<ConditionViolation> first_violation;

    bool all() const { return cond_i && cond_ii && cond_nonneg; }
};

/// Checks the conditions on the grid x_k = k·x_max/n_samples, k = 1..n_samples
/// (plus x = 0 for non-negativity). Affine f is decided symbolically.
ConditionReport validate_conditions(const Nonlinearity& f, double x_max, std::size_t n_samples);

/// Largest |central difference of f - f'| over a uniform grid on [h, x_max - h].
double derivative_consistency(const Nonlinearity& f, double x_max, std::size_t n_samples,
                              double h = 1e-5);

void to_json(nlohmann::json& j, const ConditionReport& r);

}  // namespace sphere_oep
