#pragma once

#include <Eigen/Dense>
#include <complex>
#include <span>
#include <vector>

#include "superatom/pulses.hpp"

namespace superatom {

// Basis order everywhere: |G> (ground), |W> (bright collective excitation),
// |D> (dephased dark manifold).
inline constexpr int kG = 0;
inline constexpr int kW = 1;
inline constexpr int kD = 2;

using Matrix3cd = Eigen::Matrix3cd;
using Complex = std::complex<double>;

// All rates in 1/us.  kappa: W->G decay into the forward mode, gamma: residual
// loss W->G and D->G, gamma_d: dephasing W->D.
struct SuperatomParams {
    double kappa = 0.0;
    double gamma = 0.0;
    double gamma_d = 0.0;

    void validate() const;
};

// Generator of the master equation
//   drho/dt = -i[H, rho] + (kappa+gamma) L[s_GW] + gamma_d L[s_DW]
//             + gamma L[s_GD],
//   H = sqrt(kappa) (conj(alpha) s_GW + alpha s_GW^dag),
// written out entrywise.  The same linear map propagates density matrices and
// conditional (non-unit-trace) Hermitian matrices; no second code path.
void lindblad_apply(const Matrix3cd& rho, Complex alpha,
                    const SuperatomParams& p, Matrix3cd& out) noexcept;

// Validating wrapper around lindblad_apply.
Matrix3cd lindblad_rhs(const Matrix3cd& rho, Complex alpha,
                       const SuperatomParams& p);

struct DensityCheck {
    double hermiticity_dev = 0.0;  // max |rho - rho^dag|
    double trace_dev = 0.0;        // |tr rho - 1|
    double min_eigenvalue = 0.0;
    bool ok(double herm_tol = 1e-12, double trace_tol = 1e-9,
            double eig_floor = -1e-9) const {
        return hermiticity_dev <= herm_tol && trace_dev <= trace_tol &&
               min_eigenvalue >= eig_floor;
    }
};

DensityCheck check_density(const Matrix3cd& rho);
void require_density(const Matrix3cd& rho);  // throws invalid_input

struct Trajectory {
    std::vector<double> times_us;
    std::vector<Matrix3cd> states;
    std::vector<double> drive;  // alpha(t) samples, 1/sqrt(us)
};

struct EvolveOptions {
    double rel_tol = 1e-9;
    double abs_tol = 1e-12;
    bool validate_states = true;  // assert (not correct) invariant drift
};

// Evolves rho(grid.front()) = |G><G| under the pulsed master equation and
// samples on `grid` via dense interpolation.  Integration restarts at pulse
// breakpoints so envelope kinks never sit inside a step.  The grid must start
// at or before pulse onset and ascend strictly.
Trajectory evolve(const SuperatomParams& p, const PulseSpec& pulse,
                  std::span<const double> grid, const EvolveOptions& opt = {});

// Output photon rate of the input-output field E = alpha - i sqrt(kappa) s_GW:
//   <E^dag E> = |alpha|^2 + kappa rho_WW + 2 sqrt(kappa) Im(conj(alpha) rho_WG)
// with |alpha|^2 supplied as in_rate so that kappa = 0 gives out == in exactly.
double output_rate(const Matrix3cd& rho, Complex alpha, double in_rate,
                   double kappa);

struct ObservableTrace {
    std::vector<double> times_us;
    std::vector<double> in_rate;
    std::vector<double> out_rate;
    std::vector<double> delta_rate;  // in - out
    std::vector<double> rho_ww;
    std::vector<double> rho_dd;
    std::vector<double> rydberg_population;  // rho_ww + rho_dd
};

ObservableTrace observables(const Trajectory& traj, const SuperatomParams& p,
                            const PulseSpec& pulse);

// Shared driver: integrates an arbitrary Hermitian matrix state under the
// pulsed generator from t0 to t1, emitting dense output on output_times.
// Both evolve() and the conditional-state propagation in correlations use it.
template <class Observer>
Matrix3cd integrate_master(Matrix3cd state, double t0, double t1,
                           const SuperatomParams& p, const PulseSpec& pulse,
                           std::span<const double> output_times,
                           Observer&& observe, double rel_tol, double abs_tol);

}  // namespace superatom

#include "superatom/integrator.hpp"

namespace superatom {

template <class Observer>
Matrix3cd integrate_master(Matrix3cd state, double t0, double t1,
                           const SuperatomParams& p, const PulseSpec& pulse,
                           std::span<const double> output_times,
                           Observer&& observe, double rel_tol, double abs_tol) {
    IntegratorOptions opt;
    opt.rel_tol = rel_tol;
    opt.abs_tol = abs_tol;

    auto rhs = [&p, &pulse](double t, const Matrix3cd& rho, Matrix3cd& out) {
        lindblad_apply(rho, Complex(pulse.amplitude_at(t), 0.0), p, out);
    };

    // Split at envelope breakpoints; dense output indices stay global.
    std::vector<double> cuts{t0};
    for (double b : pulse.breakpoints())
        if (b > t0 && b < t1) cuts.push_back(b);
    cuts.push_back(t1);

    std::size_t emitted = 0;
    for (std::size_t s = 0; s + 1 < cuts.size(); ++s) {
        const double a = cuts[s], b = cuts[s + 1];
        const std::size_t first = emitted;
        while (emitted < output_times.size() &&
               (output_times[emitted] < b ||
                (s + 2 == cuts.size() && output_times[emitted] <= b)))
            ++emitted;
        auto seg = output_times.subspan(first, emitted - first);
        state = integrate_dopri5(
            rhs, std::move(state), a, b, seg,
            [&](std::size_t i, double t, const Matrix3cd& y) {
                observe(first + i, t, y);
            },
            opt);
    }
    return state;
}

}  // namespace superatom
