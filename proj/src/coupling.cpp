#include "superatom/coupling.hpp"

#include <cmath>
#include <numbers>

#include "superatom/errors.hpp"

namespace superatom {

namespace {

constexpr double kPi = std::numbers::pi;

void require_positive(double v, const char* what) {
    if (!std::isfinite(v) || !(v > 0.0)) {
        throw_invalid(std::string(what) + " must be finite and > 0");
    }
}

// 64-point Gauss-Legendre nodes/weights on [-1, 1], generated on first use by
// Newton iteration on the Legendre polynomial.
struct GaussLegendre64 {
    double x[64];
    double w[64];
    GaussLegendre64() {
        const int n = 64;
        for (int i = 0; i < n / 2; ++i) {
            double z = std::cos(kPi * (i + 0.75) / (n + 0.5));
            double pp = 0.0;
            for (int it = 0; it < 100; ++it) {
                double p0 = 1.0, p1 = 0.0;
                for (int j = 0; j < n; ++j) {
                    const double p2 = p1;
                    p1 = p0;
                    p0 = ((2.0 * j + 1.0) * z * p1 - j * p2) / (j + 1.0);
                }
                pp = n * (z * p0 - p1) / (z * z - 1.0);
                const double dz = p0 / pp;
                z -= dz;
                if (std::abs(dz) < 1e-15) break;
            }
            x[i] = -z;
            x[n - 1 - i] = z;
            w[i] = w[n - 1 - i] = 2.0 / ((1.0 - z * z) * pp * pp);
        }
    }
};

}  // namespace

void CloudGeometry::validate() const {
    require_positive(peak_density, "cloud peak_density");
    require_positive(sigma_z, "cloud sigma_z");
    require_positive(sigma_r, "cloud sigma_r");
}

CloudGeometry CloudGeometry::from_total_atoms(double total_atoms, double sigma_z,
                                              double sigma_r) {
    require_positive(total_atoms, "total_atoms");
    require_positive(sigma_z, "cloud sigma_z");
    require_positive(sigma_r, "cloud sigma_r");
    const double norm = std::pow(2.0 * kPi, 1.5) * sigma_z * sigma_r * sigma_r;
    return {total_atoms / norm, sigma_z, sigma_r};
}

double CloudGeometry::total_atoms() const {
    validate();
    return peak_density * std::pow(2.0 * kPi, 1.5) * sigma_z * sigma_r * sigma_r;
}

void BeamAndLasers::validate() const {
    require_positive(waist, "beam waist");
    require_positive(wavelength, "beam wavelength");
    require_positive(gamma_e, "gamma_e");
    require_positive(blockade_radius, "blockade_radius");
    if (!std::isfinite(control_rabi) || control_rabi < 0.0) {
        throw_invalid("control_rabi must be finite and >= 0");
    }
    if (!std::isfinite(control_detuning) || control_detuning == 0.0) {
        throw_invalid("control_detuning must be finite and nonzero");
    }
    if (wavelength >= kPi * waist) {
        throw_invalid("beam is not paraxial: wavelength must be < pi * waist");
    }
}

double BeamAndLasers::mode_area() const {
    validate();
    return kPi * waist * waist / 2.0;
}

MeanAtomNumber mean_atom_number(const CloudGeometry& cloud, const BeamAndLasers& beam) {
    cloud.validate();
    beam.validate();

    MeanAtomNumber out{};
    out.closed_form = std::sqrt(2.0 * kPi) * cloud.sigma_z * beam.mode_area() *
                      cloud.peak_density;

    // N = integral n(r) |u(r)|^2 dV with a diverging Gaussian beam
    //   |u(x,y,z)|^2 = (w0 / w(z))^2 exp(-2 (x^2+y^2) / w(z)^2),
    //   w(z)^2 = w0^2 (1 + (z/zR)^2), zR = pi w0^2 / lambda.
    // The transverse integral is analytic, leaving a 1D integral over z:
    //   N = n0 * int dz exp(-z^2 / (2 sz^2)) (w0/w(z))^2 * pi / q(z),
    //   q(z) = 2 / w(z)^2 + 1 / (2 sr^2).
    static const GaussLegendre64 gl;
    const double z_r = kPi * beam.waist * beam.waist / beam.wavelength;
    const double half = 10.0 * cloud.sigma_z;
    const int panels = 8;
    double total = 0.0;
    for (int p = 0; p < panels; ++p) {
        const double a = -half + 2.0 * half * p / panels;
        const double b = -half + 2.0 * half * (p + 1) / panels;
        const double c = 0.5 * (a + b), h = 0.5 * (b - a);
        for (int i = 0; i < 64; ++i) {
            const double z = c + h * gl.x[i];
            const double w2 = beam.waist * beam.waist * (1.0 + (z / z_r) * (z / z_r));
            const double q = 2.0 / w2 + 1.0 / (2.0 * cloud.sigma_r * cloud.sigma_r);
            const double f = std::exp(-z * z / (2.0 * cloud.sigma_z * cloud.sigma_z)) *
                             (beam.waist * beam.waist / w2) * kPi / q;
            total += h * gl.w[i] * f;
        }
    }
    out.quadrature = cloud.peak_density * total;

    const bool tight_waist = beam.waist <= 0.75 * cloud.sigma_r;
    const bool long_rayleigh = z_r >= 3.0 * cloud.sigma_z;
    out.closed_form_reliable = tight_waist && long_rayleigh;
    return out;
}

CollectiveCoupling collective_coupling(double n_bar, const BeamAndLasers& beam) {
    require_positive(n_bar, "n_bar");
    beam.validate();
    const double g2 = 3.0 * n_bar * beam.gamma_e * beam.wavelength * beam.wavelength /
                      (2.0 * kPi * beam.mode_area());
    CollectiveCoupling out{};
    out.g_collective = std::sqrt(g2);
    out.kappa_forward = g2 / 4.0;
    return out;
}

TwoPhotonRates effective_two_photon(double kappa_forward, const BeamAndLasers& beam) {
    if (!std::isfinite(kappa_forward) || kappa_forward < 0.0) {
        throw_invalid("kappa_forward must be finite and >= 0");
    }
    beam.validate();
    const double r = beam.control_rabi / (2.0 * beam.control_detuning);
    TwoPhotonRates out{};
    out.reduction = r * r;
    out.kappa = kappa_forward * out.reduction;
    out.gamma_raman = beam.gamma_e * out.reduction;
    return out;
}

Directionality directionality(const CloudGeometry& cloud, const BeamAndLasers& beam) {
    cloud.validate();
    beam.validate();
    Directionality out{};
    out.theta_max_rad = std::asin(beam.wavelength / (kPi * beam.waist));
    // Phase-mismatch suppression of backward emission, exp(-8 pi^2 sz^2 / lam^2),
    // reported in log10 because it underflows for any realistic cloud.
    const double ratio = cloud.sigma_z / beam.wavelength;
    out.backscatter_log10 =
        -8.0 * kPi * kPi * ratio * ratio / std::log(10.0);
    return out;
}

double beta_factor(double kappa, double gamma) {
    if (!std::isfinite(kappa) || kappa < 0.0 || !std::isfinite(gamma) || gamma < 0.0) {
        throw_invalid("beta_factor: rates must be finite and >= 0");
    }
    if (kappa + gamma <= 0.0) {
        throw_invalid("beta_factor: kappa + gamma must be > 0");
    }
    return kappa / (kappa + gamma);
}

BlockadeCheck blockade_check(const CloudGeometry& cloud, const BeamAndLasers& beam) {
    cloud.validate();
    beam.validate();
    BlockadeCheck out{};
    out.margin_z = beam.blockade_radius - 2.0 * cloud.sigma_z;
    out.margin_r = beam.blockade_radius - 2.0 * beam.waist;
    out.single_excitation = out.margin_z > 0.0 && out.margin_r > 0.0;
    return out;
}

DerivedCoupling derive_coupling(const CloudGeometry& cloud, const BeamAndLasers& beam) {
    DerivedCoupling out{};
    out.mode_area = beam.mode_area();
    out.n_bar = mean_atom_number(cloud, beam);
    if (!out.n_bar.closed_form_reliable) {
        out.warnings.push_back(
            "closed-form atom number unreliable for this waist/cloud geometry; "
            "using quadrature value");
    }
    const double n_used = out.n_bar.closed_form_reliable ? out.n_bar.closed_form
                                                         : out.n_bar.quadrature;
    out.coupling = collective_coupling(n_used, beam);
    out.rates = effective_two_photon(out.coupling.kappa_forward, beam);
    out.beta_predicted = beta_factor(out.rates.kappa, out.rates.gamma_raman);
    out.direction = directionality(cloud, beam);
    out.blockade = blockade_check(cloud, beam);
    if (!out.blockade.single_excitation) {
        out.warnings.push_back(
            "cloud extent exceeds the blockade radius; single-excitation "
            "description may not hold");
    }
    return out;
}

}  // namespace superatom
