#pragma once

#include <Eigen/Dense>

#include <functional>
#include <vector>

namespace superatom {

// J_0(x)..J_kmax(x) by downward recurrence, normalized against
// J_0 + 2*sum_{k even} J_k = 1.  Entries whose true magnitude is below
// ~1e-250 may flush to zero; callers here only consume coefficients far
// above that floor.  x must be finite and >= 0.
std::vector<double> bessel_j_sequence(double x, int kmax);

// In-place state <- exp(-i*H*dt_us)*state for Hermitian H given through
// apply_h(in, out) computing out = H*in.  The spectrum of H must lie inside
// [-radius, radius]; the polynomial order grows linearly with radius*dt, so
// the bound should be tight.  Norm preservation is checked afterwards and a
// violation (radius bound broken, or an unconverged expansion) throws a
// numerical error.  Returns the number of apply_h invocations.
int chebyshev_exp_apply(
    const std::function<void(const Eigen::VectorXcd&, Eigen::VectorXcd&)>&
        apply_h,
    double radius, double dt_us, Eigen::VectorXcd& state);

}  // namespace superatom
