#pragma once

// Shooting helpers shared by the annulus and disk profile solvers.

#include <array>
#include <cmath>
#include <cstddef>
#include <sstream>
#include <utility>
#include <vector>

#include <boost/math/tools/roots.hpp>
#include <boost/numeric/odeint.hpp>

#include "sphere_oep/error.hpp"

namespace sphere_oep::detail {

template <std::size_t N>
using State = std::array<double, N>;

struct IntegratorSettings {
    double abs_tol = 1e-13;
    double rel_tol = 1e-12;
    double max_step = 0.01;
    double first_step = 1e-4;
    double min_step = 1e-15;
};

template <std::size_t N>
struct Shot {
    std::vector<double> t;         // accepted step ends, starting with t0, ending at the zero
    std::vector<State<N>> x;       // states at t
    double zero = 0.0;             // located zero of component 0
    bool found = false;            // false: t_limit reached first, last entry is the state there
};

/// Integrates `system` from (t0, x0) towards `t_limit` until component 0 (which
/// must start positive) first changes sign, then locates that zero.
///
/// The zero is bracketed on the dense output, solved there with TOMS 748 and
/// then polished by Newton steps using fresh integrations from the last
/// accepted state (component 1 must be the derivative of component 0). The
/// polish stops once |x0(zero)| <= zero_tol. Without a sign change the shot
/// ends at t_limit with `found == false`.
template <std::size_t N, class System>
Shot<N> shoot_to_zero(System system, double t0, const State<N>& x0, double t_limit,
                      const IntegratorSettings& settings, double zero_tol) {
    namespace odeint = boost::numeric::odeint;
    using Stepper = odeint::runge_kutta_dopri5<State<N>>;

    // odeint clamps steps to a positive max_dt, so integrate in the forward
    // parameter τ = direction·(t − t0) and map back.
    const double direction = t_limit > t0 ? 1.0 : -1.0;
    auto to_t = [&](double tau) { return t0 + direction * tau; };
    auto forward = [&](const State<N>& x, State<N>& dxdt, double tau) {
        system(x, dxdt, to_t(tau));
        for (auto& v : dxdt) v *= direction;
    };
    const double tau_limit = std::abs(t_limit - t0);

    auto dense = odeint::make_dense_output(settings.abs_tol, settings.rel_tol, settings.max_step, Stepper());
    dense.initialize(x0, 0.0, settings.first_step);

    Shot<N> shot;
    shot.t.push_back(t0);
    shot.x.push_back(x0);
    double tau_base = 0.0;

    while (true) {
        const auto [tau_old, tau_new] = dense.do_step(forward);
        const State<N>& x_new = dense.current_state();
        for (double v : x_new) {
            if (!std::isfinite(v)) throw StepFailure("integrator produced a non-finite state");
        }
        if (tau_new - tau_old < settings.min_step) {
            std::ostringstream os;
            os << "integrator step underflow near t = " << to_t(tau_new);
            throw StepFailure(os.str());
        }
        if (x_new[0] <= 0.0) {
            State<N> tmp{};
            auto on_dense = [&](double tau) {
                dense.calc_state(tau, tmp);
                return tmp[0];
            };
            boost::uintmax_t iters = 100;
            double zero = tau_new;
            const double f_lo = on_dense(tau_old);
            const double f_hi = x_new[0];
            if (f_lo * f_hi < 0.0) {
                auto bracket = boost::math::tools::toms748_solve(
                    on_dense, tau_old, tau_new, f_lo, f_hi, boost::math::tools::eps_tolerance<double>(52), iters);
                zero = 0.5 * (bracket.first + bracket.second);
            } else if (f_lo == 0.0) {
                zero = tau_old;
            }

            // Newton polish with exact integrations from the last accepted state.
            const State<N> x_base = shot.x.back();
            State<N> x_at{};
            auto integrate_to = [&](double tau_target) {
                x_at = x_base;
                if (tau_target > tau_base) {
                    auto controlled =
                        odeint::make_controlled(settings.abs_tol * 1e-2, settings.rel_tol * 1e-2, Stepper());
                    odeint::integrate_adaptive(controlled, forward, x_at, tau_base, tau_target,
                                               (tau_target - tau_base) * 0.25);
                }
            };
            integrate_to(zero);
            for (int k = 0; k < 8 && std::abs(x_at[0]) > zero_tol; ++k) {
                // component 1 is d/dt, so d/dτ carries the direction
                const double slope = direction * x_at[1];
                if (slope == 0.0) break;
                const double next = zero - x_at[0] / slope;
                if (!(next > tau_base)) break;
                zero = next;
                integrate_to(zero);
            }
            shot.zero = to_t(zero);
            shot.found = true;
            shot.t.push_back(shot.zero);
            shot.x.push_back(x_at);
            return shot;
        }
        if (tau_new >= tau_limit) {
            State<N> last{};
            dense.calc_state(tau_limit, last);
            shot.t.push_back(t_limit);
            shot.x.push_back(last);
            return shot;
        }
        tau_base = tau_new;
        shot.t.push_back(to_t(tau_new));
        shot.x.push_back(x_new);
    }
}

/// Quintic Hermite interpolation on [t0, t1] from value, first and second
/// derivative at both ends. Returns (value, first derivative) at t.
inline std::pair<double, double> hermite5(double t0, double t1, double f0, double d0, double dd0,
                                          double f1, double d1, double dd1, double t) {
    const double h = t1 - t0;
    const double s = (t - t0) / h;
    const double s2 = s * s;
    const double s3 = s2 * s;
    const double s4 = s3 * s;
    const double s5 = s4 * s;

    const double h0 = 1.0 - 10.0 * s3 + 15.0 * s4 - 6.0 * s5;
    const double h1 = s - 6.0 * s3 + 8.0 * s4 - 3.0 * s5;
    const double h2 = 0.5 * (s2 - 3.0 * s3 + 3.0 * s4 - s5);
    const double h3 = 0.5 * (s3 - 2.0 * s4 + s5);
    const double h4 = -4.0 * s3 + 7.0 * s4 - 3.0 * s5;
    const double h5 = 10.0 * s3 - 15.0 * s4 + 6.0 * s5;

    const double g0 = -30.0 * s2 + 60.0 * s3 - 30.0 * s4;
    const double g1 = 1.0 - 18.0 * s2 + 32.0 * s3 - 15.0 * s4;
    const double g2 = 0.5 * (2.0 * s - 9.0 * s2 + 12.0 * s3 - 5.0 * s4);
    const double g3 = 0.5 * (3.0 * s2 - 8.0 * s3 + 5.0 * s4);
    const double g4 = -12.0 * s2 + 28.0 * s3 - 15.0 * s4;
    const double g5 = 30.0 * s2 - 60.0 * s3 + 30.0 * s4;

    const double value = f0 * h0 + h * d0 * h1 + h * h * dd0 * h2 + h * h * dd1 * h3 + h * d1 * h4 + f1 * h5;
    const double slope =
        (f0 * g0 + f1 * g5) / h + d0 * g1 + d1 * g4 + h * (dd0 * g2 + dd1 * g3);
    return {value, slope};
}

}  // namespace sphere_oep::detail
