#pragma once

#include <Eigen/Dense>

#include <string>
#include <vector>

#include "superatom/pulses.hpp"

namespace superatom {

// Independent cross-check for the master-equation model at gamma = gamma_d
// = 0: the drive pulse is quantized into at most two photons on a ring of
// chiral modes (spacing 2*pi/span_us) coupled to a two-level emitter with
// uniform strength sqrt(kappa/span_us), and the joint state is propagated
// exactly within each excitation sector.  Until light wraps around the
// ring, the finite ring reproduces the open line with no discretization
// error beyond the spectral cutoff pi*mode_count/span_us applied to the
// input envelope, so agreement probes the master-equation path end to end.

struct FewPhotonInput {
    enum class Kind { weak_coherent, single_photon, photon_pair };
    Kind kind = Kind::weak_coherent;
    double mean_photons = 0.1;  // weak_coherent only
};

struct FockOracleConfig {
    int mode_count = 640;       // even, in [64, 4096]
    double span_us = 40.0;      // ring period; bounds the usable time window
    double kappa_per_us = 1.0;  // emitter linewidth; 0 decouples the emitter
    double final_time_us = 6.0;
    std::vector<double> grid_times_us;      // readout times in [0, final)
    std::vector<double> snapshot_times_us;  // extra invariant checks, optional
    double extra_bandwidth_per_us = 0.0;    // raises the resolution demand
};

struct FockOracleResult {
    std::vector<double> grid_times_us;

    // Readout for unit-norm inputs occupying the pulse temporal mode.  The
    // flux crossing the emitter at time s is read off the final state at
    // ring position final_time_us - s; free flight after the interaction
    // makes that identification exact.
    Eigen::VectorXd intensity_single;  // one-photon input
    Eigen::VectorXd intensity_pair;    // two-photon input
    Eigen::MatrixXd pair_flux;         // normally ordered two-point flux of
                                       // the two-photon input

    // Weighted per FewPhotonInput.  For weak_coherent the surviving Poisson
    // weights are rescaled so the first and second factorial moments of the
    // photon number stay exact; an unscattered drive then gives g2 = 1 at
    // any mean_photons, and the truncation bias enters only through the
    // shape difference of the dropped >= 3 photon sectors.
    Eigen::VectorXd intensity;
    Eigen::MatrixXd g2;

    Eigen::VectorXd mode_frequencies;  // rad/us
    Eigen::VectorXcd modes_in;         // projected envelope, unit norm
    Eigen::VectorXcd modes_out;        // one-photon sector at final time
    double excited_amplitude_final = 0.0;

    double envelope_deficit = 0.0;       // spectral weight beyond the cutoff
    double truncated_probability = 0.0;  // dropped >= 3 photon weight
    double norm_drift_max = 0.0;
    double boundary_share_max = 0.0;
    std::vector<std::string> warnings;
};

FockOracleResult run_fock_oracle(const FockOracleConfig& config,
                                 const PulseSpec& pulse,
                                 const FewPhotonInput& input);

}  // namespace superatom
