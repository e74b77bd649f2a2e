#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "superatom/pulses.hpp"
#include "superatom/quantum_core.hpp"

namespace superatom {

enum class TraceKind { photon_rate, rydberg_population };

// One measured time trace together with the pulse that produced it.  values
// are rates in 1/us for photon_rate and dimensionless occupations for
// rydberg_population; sem holds the per-point standard error.
struct TraceData {
    TraceKind kind = TraceKind::photon_rate;
    std::vector<double> times_us;
    std::vector<double> values;
    std::vector<double> sem;
    PulseSpec pulse = PulseSpec::square(0.0, 0.0);

    // equal lengths, at least one point, finite entries, sem > 0, times
    // strictly increasing
    void validate() const;
};

enum class FitParam : int { kappa = 0, gamma = 1, gamma_d = 2 };

struct ParamBounds {
    double lower = 0.0;
    double upper = 0.0;
};

struct FitOptions {
    int starts = 5;              // multi-start count, at least 5
    std::uint64_t seed = 1;      // placement of the log-uniform starts
    int max_evaluations = 4000;  // forward-model budget per start
    double rel_tol = 1e-9;       // ODE tolerances inside the objective
    double abs_tol = 1e-12;
};

// Weighted least-squares problem over (kappa, gamma, gamma_d).  Each
// parameter is either free inside positive bounds or pinned to a fixed
// value, and every trace shares the single parameter vector.  Detection
// efficiencies rescale the model per trace kind and are never fitted: a
// free overall scale on the photon rate is degenerate with kappa.
struct FitProblem {
    std::vector<TraceData> traces;
    std::array<std::optional<ParamBounds>, 3> free;  // indexed by FitParam
    std::array<std::optional<double>, 3> fixed;
    double photon_scale = 1.0;
    double population_scale = 1.0;
    FitOptions options;

    void set_free(FitParam p, double lower, double upper);
    void set_fixed(FitParam p, double value);
    int free_count() const;

    // every parameter exactly one of free/fixed, at least one free,
    // 0 < lower < upper, fixed values >= 0, positive scales, >= 5 starts,
    // and at least 10 data points per free parameter
    void validate() const;
};

struct FitResult {
    SuperatomParams params;
    double chi2 = 0.0;
    int dof = 0;  // data points minus free parameters
    // Twice the inverse curvature of chi2 at the optimum, embedded in the
    // full 3x3 parameter space with zero rows for fixed parameters.  Only
    // meaningful when covariance_ok is set; degenerate curvature leaves the
    // matrix zero with the flag cleared.
    Eigen::Matrix3d covariance = Eigen::Matrix3d::Zero();
    bool covariance_ok = false;
    bool converged = false;      // the winning start met the convergence test
    long long evaluations = 0;   // forward-model evaluations across all starts
    std::vector<double> start_objectives;  // chi2 at each initial point
    std::vector<std::vector<double>> per_trace_residuals;  // (value-model)/sem
};

// Model prediction sampled at times_us: master-equation evolution from the
// ground state, then the output photon rate or the Rydberg population,
// multiplied by detection_scale.  kappa = 0 leaves the drive untouched, so
// photon_rate returns the bare pulse rate exactly.
std::vector<double> forward_model(const SuperatomParams& params, TraceKind kind,
                                  const PulseSpec& pulse,
                                  std::span<const double> times_us,
                                  double detection_scale = 1.0,
                                  const EvolveOptions& opt = {});

// Minimizes sum over traces of (value_i - model_i)^2 / sem_i^2 with a
// Nelder-Mead simplex over log-parameters, restarted from `starts`
// log-uniform draws inside the bounds; the lowest final objective wins.  A
// start counts as converged once an iteration improves the best chi2 by
// less than 1e-8 relative while the simplex diameter is below 1e-6 in log
// space; exhausting max_evaluations instead returns the best point found
// with `converged` cleared.  Traces sharing a pulse and time grid reuse one
// evolution per objective call.
FitResult fit(const FitProblem& problem);

}  // namespace superatom
