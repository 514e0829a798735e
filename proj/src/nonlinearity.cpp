#include "sphere_oep/nonlinearity.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <utility>

#include "sphere_oep/error.hpp"

namespace sphere_oep {

Nonlinearity Nonlinearity::affine(double a, double b, double x_max) {
    if (!std::isfinite(a) || !std::isfinite(b))
        throw DomainError("affine nonlinearity needs finite coefficients");
    if (!(x_max > 0.0)) throw DomainError("x_max must be positive");
    Nonlinearity f;
    f.kind_ = NonlinearityKind::affine;
    f.a_ = a;
    f.b_ = b;
    f.x_max_ = x_max;
    return f;
}

Nonlinearity Nonlinearity::callable(Function fn, Function dfn, double x_max, std::string name) {
    if (!fn || !dfn) throw DomainError("callable nonlinearity needs both f and f'");
    if (!(x_max > 0.0) || !std::isfinite(x_max))
        throw DomainError("callable nonlinearity needs a finite positive x_max");
    Nonlinearity f;
    f.kind_ = NonlinearityKind::callable;
    f.x_max_ = x_max;
    f.f_ = std::move(fn);
    f.df_ = std::move(dfn);
    f.name_ = std::move(name);
    return f;
}

Nonlinearity Nonlinearity::parse(std::string_view descriptor) {
    constexpr std::string_view prefix = "affine:";
    if (descriptor.substr(0, prefix.size()) != prefix)
        throw DomainError("unsupported nonlinearity descriptor '" + std::string(descriptor) +
                          "' (expected affine:a,b)");
    std::string rest(descriptor.substr(prefix.size()));
    const auto comma = rest.find(',');
    if (comma == std::string::npos)
        throw DomainError("affine descriptor needs two coefficients: affine:a,b");
    try {
        std::size_t pos_a = 0;
        std::size_t pos_b = 0;
        const std::string sa = rest.substr(0, comma);
        const std::string sb = rest.substr(comma + 1);
        const double a = std::stod(sa, &pos_a);
        const double b = std::stod(sb, &pos_b);
        if (pos_a != sa.size() || pos_b != sb.size()) throw std::invalid_argument("trailing");
        return affine(a, b);
    } catch (const std::logic_error&) {
        throw DomainError("malformed affine descriptor '" + std::string(descriptor) + "'");
    }
}

Nonlinearity Nonlinearity::from_json(const nlohmann::json& j) {
    const auto kind = j.at("kind").get<std::string>();
    if (kind != "affine") throw DomainError("only affine nonlinearities can be read from config");
    const double x_max =
        j.contains("x_max") ? j.at("x_max").get<double>() : std::numeric_limits<double>::infinity();
    return affine(j.at("a").get<double>(), j.value("b", 0.0), x_max);
}

void Nonlinearity::check_domain(double x) const {
    if (!(x >= 0.0) || x > x_max_) {
        std::ostringstream os;
        os << "nonlinearity evaluated at x = " << x << " outside [0, " << x_max_ << "]";
        throw DomainError(os.str());
    }
}

double Nonlinearity::evaluate(double x) const {
    check_domain(x);
    return extended_value(x);
}

double Nonlinearity::derivative(double x) const {
    check_domain(x);
    return extended_derivative(x);
}

double Nonlinearity::extended_value(double x) const {
    if (kind_ == NonlinearityKind::affine) return a_ * x + b_;
    if (x < 0.0) return f_(0.0) + df_(0.0) * x;
    return f_(std::min(x, x_max_));
}

double Nonlinearity::extended_derivative(double x) const {
    if (kind_ == NonlinearityKind::affine) return a_;
    return df_(std::clamp(x, 0.0, x_max_));
}

std::string Nonlinearity::descriptor() const {
    if (kind_ == NonlinearityKind::callable) return "callable:" + name_;
    std::ostringstream os;
    os.precision(17);
    os << "affine:" << a_ << ',' << b_;
    return os.str();
}

nlohmann::json Nonlinearity::to_json() const {
    if (kind_ == NonlinearityKind::callable)
        return {{"kind", "callable"}, {"name", name_}, {"x_max", x_max_}};
    nlohmann::json j = {{"kind", "affine"}, {"a", a_}, {"b", b_}};
    if (std::isfinite(x_max_)) j["x_max"] = x_max_;
    return j;
}

double evaluate(const Nonlinearity& f, double x) { return f.evaluate(x); }

namespace {

void record(ConditionReport& report, std::string name, double x, double lhs, double rhs) {
    if (!report.first_violation) report.first_violation = ConditionViolation{std::move(name), x, lhs, rhs};
}

ConditionReport validate_affine(const Nonlinearity& f, double x_max, std::size_t n_samples) {
    ConditionReport report;
    const double a = f.a();
    const double b = f.b();
    const double x_first = x_max / static_cast<double>(n_samples);

    report.f0_nonneg = b >= 0.0;
    report.f0_zero = b == 0.0;

    // a·x + b >= a·x  <=>  b >= 0, independent of x.
    if (b < 0.0) {
        report.cond_i = false;
        record(report, "cond_i", x_first, a * x_first + b, a * x_first);
    }
    if (a < 2.0) {
        report.cond_ii = false;
        record(report, "cond_ii", x_first, a, 2.0);
    }
    // An affine function is non-negative on [0, x_max] iff it is at both ends.
    if (b < 0.0) {
        report.cond_nonneg = false;
        record(report, "cond_nonneg", 0.0, b, 0.0);
    } else if (a * x_max + b < 0.0) {
        report.cond_nonneg = false;
        // first grid sample where the line goes negative
        const double k = std::ceil((-b / a) / x_first);
        const double x = std::max(k, 1.0) * x_first;
        record(report, "cond_nonneg", x, a * x + b, 0.0);
    }
    return report;
}

}  // namespace

ConditionReport validate_conditions(const Nonlinearity& f, double x_max, std::size_t n_samples) {
    if (!(x_max > 0.0)) throw DomainError("validate_conditions: x_max must be positive");
    if (n_samples < 2) throw DomainError("validate_conditions: need at least two samples");
    if (f.kind() == NonlinearityKind::affine) return validate_affine(f, x_max, n_samples);

    ConditionReport report;
    const double f0 = f.evaluate(0.0);
    report.f0_nonneg = f0 >= 0.0;
    report.f0_zero = f0 == 0.0;
    if (f0 < 0.0) {
        report.cond_nonneg = false;
        record(report, "cond_nonneg", 0.0, f0, 0.0);
    }
    for (std::size_t k = 1; k <= n_samples; ++k) {
        const double x = x_max * static_cast<double>(k) / static_cast<double>(n_samples);
        const double fx = f.evaluate(x);
        const double dfx = f.derivative(x);
        if (fx < dfx * x) {
            if (report.cond_i) record(report, "cond_i", x, fx, dfx * x);
            report.cond_i = false;
        }
        if (dfx < 2.0) {
            if (report.cond_ii) record(report, "cond_ii", x, dfx, 2.0);
            report.cond_ii = false;
        }
        if (fx < 0.0) {
            if (report.cond_nonneg) record(report, "cond_nonneg", x, fx, 0.0);
            report.cond_nonneg = false;
        }
    }
    return report;
}

double derivative_consistency(const Nonlinearity& f, double x_max, std::size_t n_samples, double h) {
    if (n_samples < 2 || !(x_max > 2.0 * h)) throw DomainError("derivative_consistency: bad grid");
    double worst = 0.0;
    for (std::size_t k = 0; k < n_samples; ++k) {
        const double x = h + (x_max - 2.0 * h) * static_cast<double>(k) / static_cast<double>(n_samples - 1);
        const double fd = (f.evaluate(x + h) - f.evaluate(x - h)) / (2.0 * h);
        worst = std::max(worst, std::abs(fd - f.derivative(x)));
    }
    return worst;
}

void to_json(nlohmann::json& j, const ConditionReport& r) {
    j = {{"cond_i", r.cond_i},         {"cond_ii", r.cond_ii}, {"cond_nonneg", r.cond_nonneg},
         {"f0_nonneg", r.f0_nonneg},   {"f0_zero", r.f0_zero}, {"pass", r.all()}};
    if (r.first_violation) {
        const auto& v = *r.first_violation;
        j["first_violation"] = {{"condition", v.condition}, {"x", v.x}, {"lhs", v.lhs}, {"rhs", v.rhs}};
    }
}

}  // namespace sphere_oep
