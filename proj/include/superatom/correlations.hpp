#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <span>
#include <vector>

#include "superatom/quantum_core.hpp"

namespace superatom {

// Unnormalized conditional state after a detection event at the output:
//   Lambda = (alpha I - i sqrt(kappa) s_GW) rho (conj(alpha) I + i sqrt(kappa) s_GW^dag).
// tr Lambda equals the output photon rate; Lambda is Hermitian and PSD but not
// unit trace.
Matrix3cd conditional_state(const Matrix3cd& rho, Complex alpha, double kappa);

struct G2Options {
    double denominator_floor = 1e-12;  // on I(s1)*I(s2), (1/us)^2
    double rel_tol = 1e-9;
    double abs_tol = 1e-12;
};

struct CorrelationGrid {
    std::vector<double> times_us;      // shared grid for both axes
    std::vector<double> intensity;     // <E^dag E>(s_i)
    Eigen::MatrixXd numerator;         // G2(s_i, s_j)
    Eigen::MatrixXd g2;                // NaN where masked
    Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic> valid;
    // max |Im tr(M Lambda)| over entries relative to the numerator scale;
    // the matrix is mirrored from the upper triangle, so this is the honest
    // symmetry/Hermiticity error indicator
    double hermiticity_defect = 0.0;
    std::size_t propagation_count = 0;
};

// Two-time normalized intensity correlation on a square grid of retarded
// times.  For each grid point the conditional state is propagated forward
// under the same master-equation generator as the unconditional evolution
// (one propagation per grid point), and
//   g2(s1, s2) = tr[E^dag E(s2) Lambda(s2)] / (I(s1) I(s2)).
// Entries with denominator below the floor are masked (NaN + valid = 0).
CorrelationGrid g2_matrix(const SuperatomParams& p, const PulseSpec& pulse,
                          std::span<const double> times,
                          const G2Options& opt = {});

}  // namespace superatom
