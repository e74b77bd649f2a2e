#include "superatom/chebyshev.hpp"

#include <cmath>
#include <complex>

#include "superatom/errors.hpp"

namespace superatom {

std::vector<double> bessel_j_sequence(double x, int kmax) {
    if (!std::isfinite(x) || x < 0.0) {
        throw_invalid("bessel_j_sequence: x must be finite and >= 0");
    }
    if (kmax < 0) {
        throw_invalid("bessel_j_sequence: kmax must be >= 0");
    }
    std::vector<double> out(static_cast<std::size_t>(kmax) + 1, 0.0);
    if (x == 0.0) {
        out[0] = 1.0;
        return out;
    }

    // Start the recurrence well above both the requested order and the
    // turning point k ~ x, where J_k has already collapsed; the seed error
    // then damps out long before k reaches kmax.
    const int start = std::max(kmax, static_cast<int>(std::ceil(x))) + 50 +
                      static_cast<int>(12.0 * std::cbrt(x + 1.0));
    std::vector<double> b(static_cast<std::size_t>(start) + 2, 0.0);
    b[static_cast<std::size_t>(start)] = 1e-280;
    for (int k = start; k >= 1; --k) {
        const std::size_t ku = static_cast<std::size_t>(k);
        b[ku - 1] = (2.0 * k / x) * b[ku] - b[ku + 1];
        if (std::abs(b[ku - 1]) > 1e250) {
            for (std::size_t m = ku - 1; m < b.size(); ++m) b[m] *= 1e-250;
        }
    }

    double norm = b[0];
    for (int k = 2; k <= start; k += 2) {
        norm += 2.0 * b[static_cast<std::size_t>(k)];
    }
    if (norm == 0.0 || !std::isfinite(norm)) {
        throw_numerical("bessel_j_sequence: normalization sum degenerate");
    }
    for (int k = 0; k <= kmax; ++k) {
        out[static_cast<std::size_t>(k)] = b[static_cast<std::size_t>(k)] / norm;
    }
    return out;
}

int chebyshev_exp_apply(
    const std::function<void(const Eigen::VectorXcd&, Eigen::VectorXcd&)>&
        apply_h,
    double radius, double dt_us, Eigen::VectorXcd& state) {
    if (!std::isfinite(radius) || radius <= 0.0) {
        throw_invalid("chebyshev_exp_apply: radius must be finite and > 0");
    }
    if (!std::isfinite(dt_us) || dt_us < 0.0) {
        throw_invalid("chebyshev_exp_apply: dt_us must be finite and >= 0");
    }
    if (state.size() == 0) {
        throw_invalid("chebyshev_exp_apply: empty state");
    }
    const double a = radius * dt_us;
    if (a == 0.0) return 0;

    const int kmax =
        static_cast<int>(std::ceil(a + 12.0 * std::cbrt(a + 1.0) + 20.0));
    const std::vector<double> j = bessel_j_sequence(a, kmax);
    double tail = 0.0;
    for (int k = kmax - 4; k <= kmax; ++k) {
        tail = std::max(tail, std::abs(j[static_cast<std::size_t>(k)]));
    }
    if (tail > 1e-12) {
        throw_numerical("chebyshev_exp_apply: coefficient tail did not decay");
    }

    const double norm_in = state.norm();
    using C = std::complex<double>;
    // exp(-i*a*mu) = sum_k (2 - delta_k0) (-i)^k J_k(a) T_k(mu), mu in [-1,1]
    Eigen::VectorXcd t_prev = state;
    Eigen::VectorXcd t_cur(state.size());
    Eigen::VectorXcd tmp(state.size());
    Eigen::VectorXcd acc = j[0] * t_prev;
    apply_h(t_prev, t_cur);
    t_cur /= radius;
    acc += C(0.0, -2.0 * j[1]) * t_cur;

    int applies = 1;
    static const C phase[4] = {C(1, 0), C(0, -1), C(-1, 0), C(0, 1)};
    for (int k = 2; k <= kmax; ++k) {
        apply_h(t_cur, tmp);
        ++applies;
        t_prev = (2.0 / radius) * tmp - t_prev;
        t_prev.swap(t_cur);
        acc += (2.0 * j[static_cast<std::size_t>(k)] * phase[k & 3]) * t_cur;
        if (k > a && j[static_cast<std::size_t>(k)] == 0.0) break;
        if (k > a && std::abs(j[static_cast<std::size_t>(k)]) < 1e-17) break;
    }
    state.swap(acc);

    const double norm_out = state.norm();
    if (!(std::abs(norm_out - norm_in) <= 1e-9 * (norm_in + 1e-300))) {
        throw_numerical(
            "chebyshev_exp_apply: norm drifted; spectral radius bound likely "
            "violated");
    }
    return applies;
}

}  // namespace superatom
