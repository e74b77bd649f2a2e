#pragma once

#include <Eigen/Dense>
#include <complex>
#include <vector>

#include "superatom/quantum_core.hpp"

namespace superatom {

// Closed-form upper-level population of the ideal atom (gamma = gamma_d = 0)
// under constant resonant drive alpha from the ground state:
//   rho_WW(t) = P_inf * (1 - (cos(W t) + (3k/4W) sin(W t)) exp(-3kt/4)),
//   W = sqrt(4 k a^2 - (k/4)^2),  P_inf = 4 a^2 / (k + 8 a^2).
// Continued analytically (cos->cosh, sin->sinh) when the radicand is negative;
// the function is smooth across the boundary.
double rho_ww_ideal(double kappa, double alpha, double t_us);

// Long-time limit of the above.
double steady_state_ideal(double kappa, double rate);

// Effective Rabi frequency of the ideal atom: sqrt(4 k R - (k/4)^2), returned
// as a complex number (positive imaginary part when overdamped).  Exactly zero
// on the boundary R = k/64.
std::complex<double> omega_eff_ideal(double kappa, double rate);

// Dimensionless pulse-bandwidth parameter kappa * tau.
double lambda_parameter(double kappa, double tau_us);

// Rabi-oscillation visibility of the ideal atom for a square pulse of unit
// length: max over t in [0,1] of rho_WW minus the steady-state value, clipped
// at zero.  Only (lambda, nph) = (kappa*tau, rate*tau) matter, so tau = 1.
double visibility(double lambda, double nph);

struct PhaseDiagramSpec {
    std::vector<double> lambda_grid;  // > 0, ascending
    std::vector<double> nph_grid;     // >= 0, ascending
    double tau_us = 1.0;              // scale-setting only
};

struct VisibilityMap {
    PhaseDiagramSpec spec;
    // row-major [i_lambda * n_nph + j_nph], values in [0, 1)
    std::vector<double> values;
    // attached curves, one entry per lambda
    std::vector<double> overdamped_nph;  // lambda / 64
    std::vector<double> crossover_nph;   // smallest nph with visibility > 0
};

VisibilityMap phase_diagram(const PhaseDiagramSpec& spec);

// Population-sector generator of the constant-drive master equation in the
// real coordinates (rho_GG, rho_WW, rho_DD, Re rho_GW, Im rho_GW).  These five
// close among themselves; the dark-coherence sector never feeds rho_WW.
Eigen::Matrix<double, 5, 5> bloch_population_generator(
    const SuperatomParams& p, double rate);

struct RabiMaxima {
    std::vector<double> times_us;       // refined maxima of rho_WW(t)
    std::complex<double> omega_eff;     // dominant oscillatory eigenvalue pair
    bool overdamped = false;
};

// Locates the maxima of rho_WW under constant drive sqrt(rate) by dense
// evolution plus quadratic peak refinement; maxima with prominence below 1e-6
// are discarded.  omega_eff is |Im| of the generator eigenvalue pair with the
// largest imaginary part; without such a pair the result is flagged
// overdamped and the list is empty.
RabiMaxima rabi_maxima(const SuperatomParams& p, double rate);

}  // namespace superatom
