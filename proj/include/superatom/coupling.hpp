#pragma once

#include <string>
#include <vector>

namespace superatom {

// Gaussian atom cloud, lengths in um, density in um^-3.
struct CloudGeometry {
    double peak_density;  // n0
    double sigma_z;       // along the beam
    double sigma_r;       // transverse
    void validate() const;

    static CloudGeometry from_total_atoms(double total_atoms, double sigma_z,
                                          double sigma_r);
    double total_atoms() const;
};

// Probe beam and excitation-laser settings.  Rates in us^-1, lengths in um.
struct BeamAndLasers {
    double waist;              // w0 of the probe
    double wavelength;         // probe optical wavelength
    double gamma_e;            // intermediate-state decay rate
    double control_rabi;       // Omega_c
    double control_detuning;   // Delta (single-photon detuning)
    double blockade_radius;    // r_b
    void validate() const;

    double mode_area() const;  // pi w0^2 / 2
};

struct MeanAtomNumber {
    double closed_form;        // sqrt(2pi) sigma_z A n0
    double quadrature;         // beam-profile-weighted integral with divergence
    // closed form assumes waist << sigma_r and negligible divergence over the
    // cloud; false when those assumptions are violated
    bool closed_form_reliable;
};

MeanAtomNumber mean_atom_number(const CloudGeometry& cloud, const BeamAndLasers& beam);

struct CollectiveCoupling {
    double g_collective;   // sqrt(3 N Gamma_e lambda^2 / (2 pi A))
    double kappa_forward;  // g^2 / 4, single-photon forward emission rate
};

CollectiveCoupling collective_coupling(double n_bar, const BeamAndLasers& beam);

struct TwoPhotonRates {
    double reduction;     // (Omega_c / (2 Delta))^2
    double kappa;         // kappa_forward * reduction
    double gamma_raman;   // gamma_e * reduction
};

TwoPhotonRates effective_two_photon(double kappa_forward, const BeamAndLasers& beam);

struct Directionality {
    double theta_max_rad;      // asin(lambda / (pi w0)), emission cone half-angle
    double backscatter_log10;  // log10 of the backward/forward emission ratio
};

Directionality directionality(const CloudGeometry& cloud, const BeamAndLasers& beam);

// Fraction of the total decay that goes into the forward mode.
double beta_factor(double kappa, double gamma);

struct BlockadeCheck {
    bool single_excitation;  // cloud extent fits within one blockade radius
    double margin_z;         // r_b - 2 sigma_z
    double margin_r;         // r_b - 2 w0
};

BlockadeCheck blockade_check(const CloudGeometry& cloud, const BeamAndLasers& beam);

struct DerivedCoupling {
    double mode_area;
    MeanAtomNumber n_bar;
    CollectiveCoupling coupling;
    TwoPhotonRates rates;
    // forward-emission fraction predicted from the geometry chain alone,
    // kappa_eff / (kappa_eff + gamma_raman); fitted decay rates may differ
    double beta_predicted;
    Directionality direction;
    BlockadeCheck blockade;
    std::vector<std::string> warnings;
};

// Full chain from geometry to effective two-photon rates.
DerivedCoupling derive_coupling(const CloudGeometry& cloud, const BeamAndLasers& beam);

}  // namespace superatom
