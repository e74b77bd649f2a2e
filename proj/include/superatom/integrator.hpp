#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <string>

#include "superatom/errors.hpp"

namespace superatom {

struct IntegratorOptions {
    double rel_tol = 1e-9;
    double abs_tol = 1e-12;
    double max_step = std::numeric_limits<double>::infinity();
    double initial_step = 0.0;  // 0 = choose automatically
    std::int64_t max_steps = 50'000'000;
};

namespace detail {

// Dormand-Prince 5(4) tableau plus the order-4 continuous extension.
inline constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
inline constexpr double a21 = 1.0 / 5;
inline constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
inline constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
inline constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187,
                        a53 = 64448.0 / 6561, a54 = -212.0 / 729;
inline constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33,
                        a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                        a65 = -5103.0 / 18656;
inline constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                        b5 = -2187.0 / 6784, b6 = 11.0 / 84;
inline constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                        e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;
inline constexpr double d1 = -12715105075.0 / 11282082432.0,
                        d3 = 87487479700.0 / 32700410799.0,
                        d4 = -10690763975.0 / 1880347072.0,
                        d5 = 701980252875.0 / 199316789632.0,
                        d6 = -1453857185.0 / 822651844.0,
                        d7 = 69997945.0 / 29380423.0;

template <class State>
double scaled_error_norm(const State& err, const State& y0, const State& y1,
                         double abs_tol, double rel_tol) {
    const auto scale =
        (abs_tol + rel_tol * y0.cwiseAbs().cwiseMax(y1.cwiseAbs()).array());
    const double sq =
        (err.cwiseAbs().array() / scale).square().sum() /
        static_cast<double>(err.size());
    return std::sqrt(sq);
}

}  // namespace detail

// Integrates dy/dt = rhs(t, y) from t0 to t1 (t1 >= t0).  output_times must be
// ascending and lie inside [t0, t1]; observe(i, t, y) receives the dense-output
// state for each.  Returns the state at t1.
template <class Rhs, class State, class Observer>
State integrate_dopri5(Rhs&& rhs, State y, double t0, double t1,
                       std::span<const double> output_times, Observer&& observe,
                       const IntegratorOptions& opt = {}) {
    using namespace detail;
    if (!(t1 >= t0)) throw_invalid("integrate_dopri5: t1 must be >= t0");
    for (std::size_t i = 0; i < output_times.size(); ++i) {
        const bool ordered = i == 0 || output_times[i] >= output_times[i - 1];
        if (!ordered || output_times[i] < t0 || output_times[i] > t1)
            throw_invalid("integrate_dopri5: output times must ascend within "
                          "[t0, t1]");
    }

    std::size_t oi = 0;
    while (oi < output_times.size() && output_times[oi] <= t0) {
        observe(oi, t0, y);
        ++oi;
    }
    if (t1 == t0) return y;

    State k1 = y, k2 = y, k3 = y, k4 = y, k5 = y, k6 = y, k7 = y;
    State ytmp = y, ynew = y, yerr = y;
    State rcont1 = y, rcont2 = y, rcont3 = y, rcont4 = y, rcont5 = y;

    double t = t0;
    rhs(t, y, k1);

    double h = opt.initial_step;
    if (h <= 0.0) {
        // small trial step from the magnitude of the initial derivative
        const double d0 = scaled_error_norm(y, y, y, opt.abs_tol, opt.rel_tol);
        const double d1 = scaled_error_norm(k1, y, y, opt.abs_tol, opt.rel_tol);
        h = (d1 > 1e-10) ? 0.01 * d0 / d1 : 1e-6 * (t1 - t0);
        h = std::clamp(h, 1e-12 * (t1 - t0), 0.1 * (t1 - t0));
    }
    h = std::min(h, opt.max_step);

    std::int64_t steps = 0;
    bool previous_rejected = false;
    while (t < t1) {
        if (++steps > opt.max_steps)
            throw_numerical("integrate_dopri5: step budget exhausted at t=" +
                            std::to_string(t));
        bool last = false;
        if (t + h >= t1) {
            h = t1 - t;
            last = true;
        }
        const double tiny = 16.0 * std::numeric_limits<double>::epsilon() *
                            std::max(std::abs(t), 1.0);
        if (h < tiny)
            throw_numerical(
                "integrate_dopri5: step size underflow at t=" +
                std::to_string(t) + " (stiff or discontinuous system)");

        ytmp = y + h * (a21 * k1);
        rhs(t + c2 * h, ytmp, k2);
        ytmp = y + h * (a31 * k1 + a32 * k2);
        rhs(t + c3 * h, ytmp, k3);
        ytmp = y + h * (a41 * k1 + a42 * k2 + a43 * k3);
        rhs(t + c4 * h, ytmp, k4);
        ytmp = y + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4);
        rhs(t + c5 * h, ytmp, k5);
        ytmp = y + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5);
        rhs(t + h, ytmp, k6);
        ynew = y + h * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
        rhs(t + h, ynew, k7);
        yerr = h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);

        const double err =
            scaled_error_norm(yerr, y, ynew, opt.abs_tol, opt.rel_tol);
        if (err <= 1.0) {
            const double t_new = last ? t1 : t + h;
            if (oi < output_times.size() && output_times[oi] <= t_new) {
                rcont1 = y;
                rcont2 = ynew - y;                       // ydiff
                rcont3 = h * k1 - rcont2;                // bspl
                rcont4 = rcont2 - h * k7 - rcont3;
                rcont5 = h * (d1 * k1 + d3 * k3 + d4 * k4 + d5 * k5 + d6 * k6 +
                              d7 * k7);
                while (oi < output_times.size() && output_times[oi] <= t_new) {
                    const double th =
                        std::clamp((output_times[oi] - t) / h, 0.0, 1.0);
                    const double th1 = 1.0 - th;
                    ytmp = rcont1 +
                           th * (rcont2 +
                                 th1 * (rcont3 +
                                        th * (rcont4 + th1 * rcont5)));
                    observe(oi, output_times[oi], ytmp);
                    ++oi;
                }
            }
            t = t_new;
            std::swap(y, ynew);
            std::swap(k1, k7);
            double fac = 0.9 * std::pow(err > 0 ? err : 1e-16, -0.2);
            fac = std::clamp(fac, 0.2, 5.0);
            if (previous_rejected) fac = std::min(fac, 1.0);
            h = std::min(h * fac, opt.max_step);
            previous_rejected = false;
        } else {
            const double fac =
                std::max(0.2, std::min(0.9 * std::pow(err, -0.2), 0.9));
            h *= fac;
            previous_rejected = true;
        }
    }
    return y;
}

}  // namespace superatom
