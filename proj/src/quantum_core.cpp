#include "superatom/quantum_core.hpp"

#include <cmath>
#include <string>

#include "superatom/errors.hpp"

namespace superatom {

void SuperatomParams::validate() const {
    if (!std::isfinite(kappa) || !std::isfinite(gamma) ||
        !std::isfinite(gamma_d))
        throw_invalid("rates must be finite");
    if (kappa < 0 || gamma < 0 || gamma_d < 0)
        throw_invalid("rates must be >= 0");
}

void lindblad_apply(const Matrix3cd& rho, Complex alpha,
                    const SuperatomParams& p, Matrix3cd& out) noexcept {
    const double g = std::sqrt(p.kappa);
    const Complex a = g * alpha;          // sqrt(kappa) * alpha
    const Complex ac = std::conj(a);
    const Complex i(0.0, 1.0);

    const double k_gw = p.kappa + p.gamma;  // W -> G
    const double k_dw = p.gamma_d;          // W -> D
    const double k_gd = p.gamma;            // D -> G
    const double half_w = 0.5 * (k_gw + k_dw);
    const double half_d = 0.5 * k_gd;

    const Complex r00 = rho(0, 0), r01 = rho(0, 1), r02 = rho(0, 2);
    const Complex r10 = rho(1, 0), r11 = rho(1, 1), r12 = rho(1, 2);
    const Complex r20 = rho(2, 0), r21 = rho(2, 1), r22 = rho(2, 2);

    // -i [H, rho] with H = ac |G><W| + a |W><G|
    out(0, 0) = -i * (ac * r10 - a * r01) + k_gw * r11 + k_gd * r22;
    out(0, 1) = -i * (ac * (r11 - r00)) - half_w * r01;
    out(0, 2) = -i * (ac * r12) - half_d * r02;
    out(1, 0) = -i * (a * (r00 - r11)) - half_w * r10;
    out(1, 1) = -i * (a * r01 - ac * r10) - (k_gw + k_dw) * r11;
    out(1, 2) = -i * (a * r02) - (half_w + half_d) * r12;
    out(2, 0) = -i * (-a * r21) - half_d * r20;
    out(2, 1) = -i * (-ac * r20) - (half_w + half_d) * r21;
    out(2, 2) = k_dw * r11 - k_gd * r22;
}

Matrix3cd lindblad_rhs(const Matrix3cd& rho, Complex alpha,
                       const SuperatomParams& p) {
    p.validate();
    if (!std::isfinite(alpha.real()) || !std::isfinite(alpha.imag()))
        throw_invalid("alpha must be finite");
    if (!rho.allFinite()) throw_invalid("rho must be finite");
    Matrix3cd out;
    lindblad_apply(rho, alpha, p, out);
    return out;
}

DensityCheck check_density(const Matrix3cd& rho) {
    DensityCheck c;
    c.hermiticity_dev = (rho - rho.adjoint()).cwiseAbs().maxCoeff();
    c.trace_dev = std::abs(rho.trace() - Complex(1.0, 0.0));
    Eigen::SelfAdjointEigenSolver<Matrix3cd> es(
        Matrix3cd(0.5 * (rho + rho.adjoint())), Eigen::EigenvaluesOnly);
    c.min_eigenvalue = es.eigenvalues().minCoeff();
    return c;
}

void require_density(const Matrix3cd& rho) {
    if (!rho.allFinite()) throw_invalid("density matrix must be finite");
    const DensityCheck c = check_density(rho);
    if (!c.ok())
        throw_invalid("density matrix invariants violated: |rho-rho^dag|=" +
                      std::to_string(c.hermiticity_dev) +
                      ", |tr-1|=" + std::to_string(c.trace_dev) +
                      ", min eig=" + std::to_string(c.min_eigenvalue));
}

Trajectory evolve(const SuperatomParams& p, const PulseSpec& pulse,
                  std::span<const double> grid, const EvolveOptions& opt) {
    p.validate();
    if (grid.empty()) throw_invalid("evolve: empty time grid");
    for (std::size_t i = 1; i < grid.size(); ++i)
        if (!(grid[i] > grid[i - 1]))
            throw_invalid("evolve: grid must ascend strictly");
    if (pulse.support_begin() < grid.front() - 1e-12 &&
        pulse.photon_count() > 0)
        throw_invalid("evolve: grid must start at or before pulse onset");

    Trajectory traj;
    traj.times_us.assign(grid.begin(), grid.end());
    traj.states.resize(grid.size());
    traj.drive.resize(grid.size());

    Matrix3cd rho0 = Matrix3cd::Zero();
    rho0(kG, kG) = 1.0;

    integrate_master(
        rho0, grid.front(), grid.back(), p, pulse, grid,
        [&](std::size_t i, double t, const Matrix3cd& y) {
            traj.states[i] = y;
            traj.drive[i] = pulse.amplitude_at(t);
        },
        opt.rel_tol, opt.abs_tol);

    if (opt.validate_states) {
        for (std::size_t i = 0; i < traj.states.size(); ++i) {
            const DensityCheck c = check_density(traj.states[i]);
            if (!c.ok(1e-10, 1e-9, -1e-9))
                throw_numerical(
                    "evolve: integrator drift broke density invariants at t=" +
                    std::to_string(traj.times_us[i]) +
                    " (trace dev " + std::to_string(c.trace_dev) + ")");
        }
    }
    return traj;
}

double output_rate(const Matrix3cd& rho, Complex alpha, double in_rate,
                   double kappa) {
    const double g = std::sqrt(kappa);
    return in_rate + kappa * rho(kW, kW).real() +
           2.0 * g * std::imag(std::conj(alpha) * rho(kW, kG));
}

ObservableTrace observables(const Trajectory& traj, const SuperatomParams& p,
                            const PulseSpec& pulse) {
    const std::size_t n = traj.times_us.size();
    if (traj.states.size() != n || traj.drive.size() != n)
        throw_invalid("observables: inconsistent trajectory");
    ObservableTrace tr;
    tr.times_us = traj.times_us;
    tr.in_rate.resize(n);
    tr.out_rate.resize(n);
    tr.delta_rate.resize(n);
    tr.rho_ww.resize(n);
    tr.rho_dd.resize(n);
    tr.rydberg_population.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double t = traj.times_us[i];
        const Matrix3cd& rho = traj.states[i];
        const double in = pulse.rate_at(t);
        const double out =
            output_rate(rho, Complex(traj.drive[i], 0.0), in, p.kappa);
        tr.in_rate[i] = in;
        tr.out_rate[i] = out;
        tr.delta_rate[i] = in - out;
        tr.rho_ww[i] = rho(kW, kW).real();
        tr.rho_dd[i] = rho(kD, kD).real();
        tr.rydberg_population[i] = tr.rho_ww[i] + tr.rho_dd[i];
        if (tr.rydberg_population[i] < -1e-9 ||
            tr.rydberg_population[i] > 1.0 + 1e-9)
            throw_numerical("observables: population outside [0, 1] at t=" +
                            std::to_string(t));
    }
    return tr;
}

}  // namespace superatom
