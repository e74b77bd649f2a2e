#include "superatom/analytics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "superatom/errors.hpp"
#include "superatom/pulses.hpp"

namespace superatom {

namespace {

// cos(sqrt(r) t) and sin(sqrt(r) t)/sqrt(r) as entire functions of r; valid
// for r of either sign (cosh/sinh branch) with a series fallback near r = 0.
struct TrigPair {
    double c;
    double s_over_w;
};

TrigPair trig_pair(double radicand, double t) {
    const double x = radicand * t * t;
    if (std::abs(x) < 1e-8) {
        const double c = 1.0 - x / 2.0 + x * x / 24.0;
        const double s = t * (1.0 - x / 6.0 + x * x / 120.0);
        return {c, s};
    }
    if (radicand > 0) {
        const double w = std::sqrt(radicand);
        return {std::cos(w * t), std::sin(w * t) / w};
    }
    const double w = std::sqrt(-radicand);
    return {std::cosh(w * t), std::sinh(w * t) / w};
}

}  // namespace

double rho_ww_ideal(double kappa, double alpha, double t_us) {
    if (!(kappa > 0)) throw_invalid("rho_ww_ideal: kappa must be > 0");
    if (!std::isfinite(alpha) || !std::isfinite(t_us))
        throw_invalid("rho_ww_ideal: arguments must be finite");
    const double a2 = alpha * alpha;
    const double p_inf = 4.0 * a2 / (kappa + 8.0 * a2);
    const double radicand = kappa * (4.0 * a2 - 0.0625 * kappa);
    const TrigPair tp = trig_pair(radicand, t_us);
    const double damp = std::exp(-0.75 * kappa * t_us);
    return p_inf * (1.0 - (tp.c + 0.75 * kappa * tp.s_over_w) * damp);
}

double steady_state_ideal(double kappa, double rate) {
    if (!(kappa > 0)) throw_invalid("steady_state_ideal: kappa must be > 0");
    if (!(rate >= 0)) throw_invalid("steady_state_ideal: rate must be >= 0");
    return 4.0 * rate / (kappa + 8.0 * rate);
}

std::complex<double> omega_eff_ideal(double kappa, double rate) {
    if (!(kappa > 0)) throw_invalid("omega_eff_ideal: kappa must be > 0");
    if (!(rate >= 0)) throw_invalid("omega_eff_ideal: rate must be >= 0");
    // 4*kappa*rate - (kappa/4)^2, factored so the critically damped point
    // rate = kappa/64 cancels exactly: both operands of the subtraction are
    // power-of-two multiples, which no fused contraction can perturb.
    const double radicand = kappa * (4.0 * rate - 0.0625 * kappa);
    if (radicand >= 0) return {std::sqrt(radicand), 0.0};
    return {0.0, std::sqrt(-radicand)};
}

double lambda_parameter(double kappa, double tau_us) { return kappa * tau_us; }

double visibility(double lambda, double nph) {
    if (!(lambda > 0)) throw_invalid("visibility: lambda must be > 0");
    if (!(nph >= 0)) throw_invalid("visibility: nph must be >= 0");
    const double alpha = std::sqrt(nph);
    constexpr int n = 2001;
    double best = 0.0;
    int best_i = 0;
    for (int i = 0; i < n; ++i) {
        const double t = static_cast<double>(i) / (n - 1);
        const double v = rho_ww_ideal(lambda, alpha, t);
        if (v > best) {
            best = v;
            best_i = i;
        }
    }
    if (best_i > 0 && best_i < n - 1) {
        // one parabolic refinement step around the best sample
        const double dt = 1.0 / (n - 1);
        const double t0 = best_i * dt;
        const double ym = rho_ww_ideal(lambda, alpha, t0 - dt);
        const double yp = rho_ww_ideal(lambda, alpha, t0 + dt);
        const double denom = ym - 2.0 * best + yp;
        if (denom < 0) {
            const double shift = 0.5 * dt * (ym - yp) / denom;
            const double t_ref = std::clamp(t0 + shift, 0.0, 1.0);
            best = std::max(best, rho_ww_ideal(lambda, alpha, t_ref));
        }
    }
    return std::max(0.0, best - steady_state_ideal(lambda, nph));
}

VisibilityMap phase_diagram(const PhaseDiagramSpec& spec) {
    if (spec.lambda_grid.empty() || spec.nph_grid.empty())
        throw_invalid("phase_diagram: empty grid");
    if (!(spec.tau_us > 0)) throw_invalid("phase_diagram: tau must be > 0");
    for (std::size_t i = 0; i < spec.lambda_grid.size(); ++i) {
        if (!(spec.lambda_grid[i] > 0))
            throw_invalid("phase_diagram: lambda values must be > 0");
        if (i > 0 && !(spec.lambda_grid[i] > spec.lambda_grid[i - 1]))
            throw_invalid("phase_diagram: lambda grid must ascend");
    }
    for (std::size_t j = 0; j < spec.nph_grid.size(); ++j) {
        if (!(spec.nph_grid[j] >= 0))
            throw_invalid("phase_diagram: nph values must be >= 0");
        if (j > 0 && !(spec.nph_grid[j] > spec.nph_grid[j - 1]))
            throw_invalid("phase_diagram: nph grid must ascend");
    }

    VisibilityMap map;
    map.spec = spec;
    map.values.resize(spec.lambda_grid.size() * spec.nph_grid.size());
    map.overdamped_nph.resize(spec.lambda_grid.size());
    map.crossover_nph.resize(spec.lambda_grid.size());

    for (std::size_t i = 0; i < spec.lambda_grid.size(); ++i) {
        const double lam = spec.lambda_grid[i];
        for (std::size_t j = 0; j < spec.nph_grid.size(); ++j)
            map.values[i * spec.nph_grid.size() + j] =
                visibility(lam, spec.nph_grid[j]);
        map.overdamped_nph[i] = lam / 64.0;

        // smallest photon number whose in-pulse maximum overshoots the steady
        // state; bisected in log space above the overdamped boundary
        double lo = lam / 64.0;
        double hi = lo;
        bool found = false;
        for (int k = 0; k < 60 && !found; ++k) {
            hi *= 2.0;
            found = visibility(lam, hi) > 0.0;
        }
        if (!found) {
            map.crossover_nph[i] = std::numeric_limits<double>::quiet_NaN();
            continue;
        }
        for (int k = 0; k < 80; ++k) {
            const double mid = std::sqrt(lo * hi);
            (visibility(lam, mid) > 0.0 ? hi : lo) = mid;
            if (hi / lo < 1.0 + 1e-9) break;
        }
        map.crossover_nph[i] = hi;
    }
    return map;
}

Eigen::Matrix<double, 5, 5> bloch_population_generator(
    const SuperatomParams& p, double rate) {
    p.validate();
    if (!(rate >= 0) || !std::isfinite(rate))
        throw_invalid("bloch_population_generator: rate must be >= 0");
    const double ga = std::sqrt(p.kappa) * std::sqrt(rate);  // sqrt(k) alpha
    const double k_gw = p.kappa + p.gamma;
    const double gw_total = k_gw + p.gamma_d;
    const double coh = 0.5 * gw_total;

    Eigen::Matrix<double, 5, 5> m = Eigen::Matrix<double, 5, 5>::Zero();
    // columns/rows: rho_GG, rho_WW, rho_DD, Re rho_GW, Im rho_GW
    m(0, 1) = k_gw;
    m(0, 2) = p.gamma;
    m(0, 4) = -2.0 * ga;
    m(1, 1) = -gw_total;
    m(1, 4) = 2.0 * ga;
    m(2, 1) = p.gamma_d;
    m(2, 2) = -p.gamma;
    m(3, 3) = -coh;
    m(4, 0) = ga;
    m(4, 1) = -ga;
    m(4, 4) = -coh;
    return m;
}

RabiMaxima rabi_maxima(const SuperatomParams& p, double rate) {
    p.validate();
    if (!(p.kappa > 0)) throw_invalid("rabi_maxima: kappa must be > 0");
    if (!(rate >= 0) || !std::isfinite(rate))
        throw_invalid("rabi_maxima: rate must be >= 0");

    RabiMaxima result;
    const auto gen = bloch_population_generator(p, rate);
    Eigen::EigenSolver<Eigen::Matrix<double, 5, 5>> es(gen);
    const auto ev = es.eigenvalues();
    double max_im = 0.0;
    double re_at_max = 0.0;
    double scale = 1.0;
    for (int i = 0; i < ev.size(); ++i) {
        scale = std::max(scale, std::abs(ev[i]));
        if (std::abs(ev[i].imag()) > max_im) {
            max_im = std::abs(ev[i].imag());
            re_at_max = ev[i].real();
        }
    }
    if (max_im <= 1e-9 * scale) {
        result.overdamped = true;
        result.omega_eff = {0.0, 0.0};
        return result;
    }
    result.omega_eff = {max_im, 0.0};

    const double period = 2.0 * std::numbers::pi / max_im;
    const double decay = std::max(std::abs(re_at_max), 1e-3 * max_im);
    const double t_end = std::min(8.0 * period + 2.0 / decay, 2000.0 / p.kappa);
    const int n = 4097;
    std::vector<double> grid(n);
    for (int i = 0; i < n; ++i)
        grid[i] = t_end * static_cast<double>(i) / (n - 1);

    const auto pulse = PulseSpec::square(2.0 * t_end, rate);
    const Trajectory traj = evolve(p, pulse, grid);
    std::vector<double> y(n);
    for (int i = 0; i < n; ++i) y[i] = traj.states[i](kW, kW).real();

    for (int i = 1; i + 1 < n; ++i) {
        if (!(y[i] > y[i - 1] && y[i] >= y[i + 1])) continue;
        // prominence: drop to the lowest valley before a higher sample
        double left_base = y[i];
        for (int k = i - 1; k >= 0; --k) {
            left_base = std::min(left_base, y[k]);
            if (y[k] > y[i]) break;
        }
        double right_base = y[i];
        for (int k = i + 1; k < n; ++k) {
            right_base = std::min(right_base, y[k]);
            if (y[k] > y[i]) break;
        }
        if (y[i] - std::max(left_base, right_base) < 1e-6) continue;

        const double dt = grid[1] - grid[0];
        const double denom = y[i - 1] - 2.0 * y[i] + y[i + 1];
        double t_peak = grid[i];
        if (denom < 0)
            t_peak += 0.5 * dt * (y[i - 1] - y[i + 1]) / denom;
        result.times_us.push_back(t_peak);
    }
    return result;
}

}  // namespace superatom
