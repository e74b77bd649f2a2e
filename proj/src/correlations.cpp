#include "superatom/correlations.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>

#include "superatom/errors.hpp"

namespace superatom {

namespace {

Matrix3cd jump_operator(Complex alpha, double kappa) {
    Matrix3cd e = alpha * Matrix3cd::Identity();
    e(kG, kW) -= Complex(0.0, std::sqrt(kappa));
    return e;
}

}  // namespace

Matrix3cd conditional_state(const Matrix3cd& rho, Complex alpha, double kappa) {
    if (!(kappa >= 0.0) || !std::isfinite(kappa)) {
        throw_invalid("conditional_state: kappa must be finite and >= 0");
    }
    if (!rho.allFinite() || !std::isfinite(alpha.real()) || !std::isfinite(alpha.imag())) {
        throw_invalid("conditional_state: non-finite state or drive amplitude");
    }
    const Matrix3cd e = jump_operator(alpha, kappa);
    return e * rho * e.adjoint();
}

CorrelationGrid g2_matrix(const SuperatomParams& p, const PulseSpec& pulse,
                          std::span<const double> times, const G2Options& opt) {
    p.validate();
    if (times.size() < 2) throw_invalid("g2_matrix: need at least two grid times");
    if (!(opt.denominator_floor > 0.0)) {
        throw_invalid("g2_matrix: denominator_floor must be > 0");
    }
    const auto n = static_cast<Eigen::Index>(times.size());

    CorrelationGrid out;
    out.times_us.assign(times.begin(), times.end());
    out.numerator = Eigen::MatrixXd::Zero(n, n);
    out.g2 = Eigen::MatrixXd::Constant(n, n, std::numeric_limits<double>::quiet_NaN());
    out.valid.setZero(n, n);

    // Unconditional evolution supplies rho(s_i) and the drive at each grid time.
    Trajectory traj = evolve(p, pulse, times, {opt.rel_tol, opt.abs_tol, true});

    // E^dag E at each grid time (depends on the drive there).
    std::vector<Matrix3cd> meas(times.size());
    out.intensity.resize(times.size());
    for (std::size_t i = 0; i < times.size(); ++i) {
        const Matrix3cd e = jump_operator(traj.drive[i], p.kappa);
        meas[i] = e.adjoint() * e;
        out.intensity[i] = std::max(0.0, (meas[i] * traj.states[i]).trace().real());
    }

    double imag_max = 0.0;
    double real_max = 0.0;
    auto record = [&](Eigen::Index i, Eigen::Index j, const Matrix3cd& lambda) {
        const Complex tr =
            (meas[static_cast<std::size_t>(j)] * lambda).trace();
        out.numerator(i, j) = tr.real();
        imag_max = std::max(imag_max, std::abs(tr.imag()));
        real_max = std::max(real_max, std::abs(tr.real()));
    };

    // One conditional propagation per grid point, each run under the same
    // generator (and the same splitting at pulse breakpoints) as `evolve`.
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto ui = static_cast<std::size_t>(i);
        Matrix3cd lambda = conditional_state(traj.states[ui], traj.drive[ui], p.kappa);
        record(i, i, lambda);

        std::span<const double> later = times.subspan(ui + 1);
        Eigen::Index j = i + 1;
        integrate_master(
            lambda, times[ui], times.back(), p, pulse, later,
            [&](std::size_t, double, const Matrix3cd& lam) { record(i, j++, lam); },
            opt.rel_tol, opt.abs_tol);
        ++out.propagation_count;
    }

    out.hermiticity_defect =
        real_max > 0.0 ? imag_max / real_max : imag_max;

    // Mirror the upper triangle; the generator gives symmetric numerators.
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < i; ++j) out.numerator(i, j) = out.numerator(j, i);
    }

    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) {
            const double den = out.intensity[static_cast<std::size_t>(i)] *
                               out.intensity[static_cast<std::size_t>(j)];
            if (den >= opt.denominator_floor) {
                out.g2(i, j) = out.numerator(i, j) / den;
                out.valid(i, j) = 1;
            }
        }
    }
    return out;
}

}  // namespace superatom
