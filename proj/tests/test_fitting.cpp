#include "superatom/fitting.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "doctest.h"
#include "superatom/errors.hpp"
#include "test_util.hpp"

using namespace superatom;
using testutil::thrown_kind;

namespace {

std::vector<double> steps(double t0, double dt, int n) {
    std::vector<double> t(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) t[static_cast<std::size_t>(i)] = t0 + dt * i;
    return t;
}

// Noiseless two-trace problem (photon rate + Rydberg population of the same
// pulse) generated by the forward model itself.
FitProblem synthetic_problem(const SuperatomParams& truth) {
    const PulseSpec pulse = PulseSpec::tukey(0.8, 5.0, 12.4);
    const std::vector<double> times = steps(0.2, 0.2, 40);

    TraceData photons;
    photons.kind = TraceKind::photon_rate;
    photons.times_us = times;
    photons.values = forward_model(truth, TraceKind::photon_rate, pulse, times);
    photons.sem.assign(times.size(), 0.25);
    photons.pulse = pulse;

    TraceData ions;
    ions.kind = TraceKind::rydberg_population;
    ions.times_us = times;
    ions.values =
        forward_model(truth, TraceKind::rydberg_population, pulse, times);
    ions.sem.assign(times.size(), 0.01);
    ions.pulse = pulse;

    FitProblem prob;
    prob.traces = {photons, ions};
    prob.set_free(FitParam::kappa, 0.1, 2.0);
    prob.set_free(FitParam::gamma, 0.01, 0.5);
    prob.set_free(FitParam::gamma_d, 0.2, 5.0);
    prob.options.seed = 7;
    return prob;
}

void add_noise(FitProblem& prob, double frac, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> n(0.0, 1.0);
    for (TraceData& t : prob.traces) {
        const double top =
            *std::max_element(t.values.begin(), t.values.end());
        const double sigma = frac * top;
        for (std::size_t i = 0; i < t.values.size(); ++i) {
            t.values[i] += sigma * n(rng);
            t.sem[i] = sigma;
        }
    }
}

}  // namespace

TEST_CASE("decoupled emitter leaves the drive untouched") {
    const PulseSpec pulse = PulseSpec::tukey(0.5, 3.0, 4.0);
    const std::vector<double> times = steps(0.0, 0.25, 20);
    const SuperatomParams p{0.0, 0.3, 0.8};

    const auto rate =
        forward_model(p, TraceKind::photon_rate, pulse, times);
    for (std::size_t i = 0; i < times.size(); ++i)
        CHECK(rate[i] == pulse.rate_at(times[i]));

    const auto pop =
        forward_model(p, TraceKind::rydberg_population, pulse, times);
    for (double v : pop) CHECK(v == 0.0);
}

TEST_CASE("strong drive keeps the Rydberg population below one") {
    const SuperatomParams p{0.428, 0.069, 1.397};
    const PulseSpec pulse = PulseSpec::tukey(0.8, 5.0, 12.4);
    const std::vector<double> times = steps(0.05, 0.05, 160);
    const auto pop =
        forward_model(p, TraceKind::rydberg_population, pulse, times);
    const double top = *std::max_element(pop.begin(), pop.end());
    CHECK(top < 1.0);
    CHECK(top > 0.1);  // the drive does populate the emitter
}

TEST_CASE("zero-duration pulse predicts nothing") {
    const SuperatomParams p{0.4, 0.07, 1.3};
    const PulseSpec pulse = PulseSpec::square(0.0, 5.0);
    const std::vector<double> times = steps(0.0, 0.5, 10);
    for (const TraceKind kind :
         {TraceKind::photon_rate, TraceKind::rydberg_population}) {
        const auto v = forward_model(p, kind, pulse, times);
        for (double x : v) CHECK(x == 0.0);
    }
}

TEST_CASE("detection scale multiplies the prediction") {
    const SuperatomParams p{0.4, 0.07, 1.3};
    const PulseSpec pulse = PulseSpec::tukey(0.5, 2.0, 6.0);
    const std::vector<double> times = steps(0.2, 0.4, 10);
    const auto bare = forward_model(p, TraceKind::photon_rate, pulse, times);
    const auto scaled =
        forward_model(p, TraceKind::photon_rate, pulse, times, 0.29);
    for (std::size_t i = 0; i < times.size(); ++i)
        CHECK(scaled[i] == doctest::Approx(0.29 * bare[i]).epsilon(1e-14));
}

TEST_CASE("sampling after pulse onset matches a full-grid evolution") {
    const SuperatomParams p{0.4, 0.07, 1.3};
    const PulseSpec pulse = PulseSpec::tukey(0.5, 2.0, 6.0);
    const std::vector<double> full = steps(0.0, 0.5, 9);   // from onset
    const std::vector<double> late(full.begin() + 2, full.end());
    const auto a = forward_model(p, TraceKind::photon_rate, pulse, full);
    const auto b = forward_model(p, TraceKind::photon_rate, pulse, late);
    for (std::size_t i = 0; i < late.size(); ++i)
        CHECK(b[i] == doctest::Approx(a[i + 2]).epsilon(1e-8));
}

TEST_CASE("noiseless traces return the generating parameters") {
    const SuperatomParams truth{0.40, 0.07, 1.30};
    const FitProblem prob = synthetic_problem(truth);
    const FitResult res = fit(prob);

    CHECK(res.converged);
    CHECK(res.params.kappa == doctest::Approx(truth.kappa).epsilon(1e-4));
    CHECK(res.params.gamma == doctest::Approx(truth.gamma).epsilon(1e-4));
    CHECK(res.params.gamma_d == doctest::Approx(truth.gamma_d).epsilon(1e-4));
    CHECK(res.chi2 >= 0.0);
    CHECK(res.chi2 < 1e-6);
    CHECK(res.dof == 80 - 3);

    // the winner can be no worse than any multi-start launch point
    CHECK(res.start_objectives.size() == 5);
    for (double f0 : res.start_objectives) CHECK(res.chi2 <= f0);

    CHECK(res.per_trace_residuals.size() == 2);
    for (const auto& r : res.per_trace_residuals)
        CHECK(r.size() == prob.traces[0].times_us.size());

    CHECK(res.covariance_ok);
    const Eigen::Matrix3d& cov = res.covariance;
    CHECK((cov - cov.transpose()).cwiseAbs().maxCoeff() < 1e-12);
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(cov);
    CHECK(es.eigenvalues().minCoeff() >=
          -1e-12 * es.eigenvalues().cwiseAbs().maxCoeff());
}

TEST_CASE("scaling every sem leaves the argmin in place") {
    const SuperatomParams truth{0.40, 0.07, 1.30};
    FitProblem prob = synthetic_problem(truth);
    add_noise(prob, 0.02, 11);
    const FitResult base = fit(prob);

    FitProblem wide = prob;
    for (TraceData& t : wide.traces)
        for (double& s : t.sem) s *= 3.0;
    const FitResult scaled = fit(wide);

    CHECK(scaled.chi2 == doctest::Approx(base.chi2 / 9.0).epsilon(1e-6));
    CHECK(scaled.params.kappa ==
          doctest::Approx(base.params.kappa).epsilon(1e-5));
    CHECK(scaled.params.gamma ==
          doctest::Approx(base.params.gamma).epsilon(1e-5));
    CHECK(scaled.params.gamma_d ==
          doctest::Approx(base.params.gamma_d).epsilon(1e-5));
}

TEST_CASE("trace order does not matter") {
    const SuperatomParams truth{0.40, 0.07, 1.30};
    FitProblem prob = synthetic_problem(truth);
    add_noise(prob, 0.02, 11);
    const FitResult ab = fit(prob);

    FitProblem flipped = prob;
    std::swap(flipped.traces[0], flipped.traces[1]);
    const FitResult ba = fit(flipped);

    CHECK(ba.params.kappa == doctest::Approx(ab.params.kappa).epsilon(1e-5));
    CHECK(ba.params.gamma == doctest::Approx(ab.params.gamma).epsilon(1e-5));
    CHECK(ba.params.gamma_d ==
          doctest::Approx(ab.params.gamma_d).epsilon(1e-5));
    CHECK(ba.chi2 == doctest::Approx(ab.chi2).epsilon(1e-9));
    // residual blocks follow their traces
    CHECK(ba.per_trace_residuals[0].size() == ab.per_trace_residuals[1].size());
}

TEST_CASE("exhausting the evaluation budget reports non-convergence") {
    const SuperatomParams truth{0.40, 0.07, 1.30};
    FitProblem prob = synthetic_problem(truth);
    prob.options.max_evaluations = 50;
    const FitResult res = fit(prob);
    CHECK(!res.converged);
    CHECK(std::isfinite(res.chi2));
    CHECK(res.chi2 >= 0.0);
    CHECK(res.params.kappa >= 0.1);
    CHECK(res.params.kappa <= 2.0);
}

TEST_CASE("single free parameter embeds into the full covariance") {
    const SuperatomParams truth{0.40, 0.07, 1.30};
    FitProblem prob = synthetic_problem(truth);
    prob.set_fixed(FitParam::gamma, truth.gamma);
    prob.set_fixed(FitParam::gamma_d, truth.gamma_d);
    const FitResult res = fit(prob);

    CHECK(res.converged);
    CHECK(res.params.kappa == doctest::Approx(truth.kappa).epsilon(1e-5));
    CHECK(res.params.gamma == truth.gamma);
    CHECK(res.params.gamma_d == truth.gamma_d);
    CHECK(res.dof == 80 - 1);
    CHECK(res.covariance_ok);
    CHECK(res.covariance(0, 0) > 0.0);
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            if (i != 0 || j != 0) CHECK(res.covariance(i, j) == 0.0);
}

TEST_CASE("malformed problems are rejected") {
    const SuperatomParams truth{0.40, 0.07, 1.30};
    const FitProblem good = synthetic_problem(truth);
    CHECK_NOTHROW(good.validate());

    {
        FitProblem p = good;
        p.traces.clear();
        CHECK(thrown_kind([&] { p.validate(); }) ==
              ErrorKind::invalid_input);
    }
    {
        FitProblem p = good;
        p.traces[0].sem[3] = 0.0;
        CHECK(thrown_kind([&] { p.validate(); }) ==
              ErrorKind::invalid_input);
    }
    {
        FitProblem p = good;
        p.traces[0].times_us[5] = p.traces[0].times_us[4];
        CHECK(thrown_kind([&] { p.validate(); }) ==
              ErrorKind::invalid_input);
    }
    {
        FitProblem p = good;
        p.traces[0].values.pop_back();
        CHECK(thrown_kind([&] { p.validate(); }) ==
              ErrorKind::invalid_input);
    }
    {
        FitProblem p = good;
        p.fixed[0] = 0.4;  // kappa now both free and fixed
        CHECK(thrown_kind([&] { p.validate(); }) ==
              ErrorKind::invalid_input);
    }
    {
        FitProblem p = good;
        p.free[0].reset();  // kappa now neither free nor fixed
        CHECK(thrown_kind([&] { p.validate(); }) ==
              ErrorKind::invalid_input);
    }
    {
        FitProblem p = good;
        p.set_free(FitParam::kappa, 0.0, 2.0);  // lower bound not positive
        CHECK(thrown_kind([&] { p.validate(); }) ==
              ErrorKind::invalid_input);
    }
    {
        FitProblem p = good;
        p.set_free(FitParam::kappa, 2.0, 0.1);  // inverted bounds
        CHECK(thrown_kind([&] { p.validate(); }) ==
              ErrorKind::invalid_input);
    }
    {
        FitProblem p = good;
        p.set_fixed(FitParam::kappa, -0.1);
        CHECK(thrown_kind([&] { p.validate(); }) ==
              ErrorKind::invalid_input);
    }
    {
        FitProblem p = good;
        p.set_fixed(FitParam::kappa, 0.4);
        p.set_fixed(FitParam::gamma, 0.07);
        p.set_fixed(FitParam::gamma_d, 1.3);
        CHECK(thrown_kind([&] { p.validate(); }) ==
              ErrorKind::invalid_input);
    }
    {
        FitProblem p = good;
        p.options.starts = 3;
        CHECK(thrown_kind([&] { p.validate(); }) ==
              ErrorKind::invalid_input);
    }
    {
        FitProblem p = good;
        p.photon_scale = 0.0;
        CHECK(thrown_kind([&] { p.validate(); }) ==
              ErrorKind::invalid_input);
    }
    {
        // 3 free parameters want 30 points; offer 24
        FitProblem p = good;
        const std::vector<double> t = steps(0.5, 0.5, 12);
        for (TraceData& tr : p.traces) {
            tr.times_us = t;
            tr.values.assign(t.size(), 1.0);
            tr.sem.assign(t.size(), 0.1);
        }
        CHECK(thrown_kind([&] { p.validate(); }) ==
              ErrorKind::invalid_input);
    }
}
