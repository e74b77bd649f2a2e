#include "superatom/fock_oracle.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <sstream>

#include "superatom/chebyshev.hpp"
#include "superatom/errors.hpp"

namespace superatom {

namespace {

using C = std::complex<double>;
using Eigen::MatrixXcd;
using Eigen::MatrixXd;
using Eigen::VectorXcd;
using Eigen::VectorXd;

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double ring_margin(double span) { return std::max(1.0, 0.02 * span); }

void validate(const FockOracleConfig& cfg, const PulseSpec& pulse,
              const FewPhotonInput& input) {
    if (cfg.mode_count < 64 || cfg.mode_count > 4096 || cfg.mode_count % 2) {
        throw_invalid("fock oracle: mode_count must be even and in [64, 4096]");
    }
    if (!std::isfinite(cfg.span_us) || cfg.span_us <= 0.0) {
        throw_invalid("fock oracle: span_us must be finite and > 0");
    }
    if (!std::isfinite(cfg.kappa_per_us) || cfg.kappa_per_us < 0.0) {
        throw_invalid("fock oracle: kappa_per_us must be finite and >= 0");
    }
    if (!std::isfinite(cfg.final_time_us) || cfg.final_time_us <= 0.0) {
        throw_invalid("fock oracle: final_time_us must be finite and > 0");
    }
    if (cfg.kappa_per_us > 0.0 && cfg.kappa_per_us * cfg.span_us < 20.0) {
        throw_invalid(
            "fock oracle: kappa_per_us*span_us must be >= 20 so the emitter "
            "response fits the ring");
    }
    const double demand =
        std::max(cfg.kappa_per_us,
                 std::max(pulse.bandwidth_hint(), cfg.extra_bandwidth_per_us));
    if (static_cast<double>(cfg.mode_count) / cfg.span_us < 10.0 * demand) {
        std::ostringstream os;
        os << "fock oracle: mode_count/span_us = "
           << static_cast<double>(cfg.mode_count) / cfg.span_us
           << " under-resolves the spectral demand " << demand
           << " (need >= 10x)";
        throw_invalid(os.str());
    }
    if (pulse.support_begin() < 0.0) {
        throw_invalid("fock oracle: pulse support must start at t >= 0");
    }
    if (!(pulse.photon_count() > 0.0)) {
        throw_invalid("fock oracle: pulse carries no photons");
    }
    const double margin = ring_margin(cfg.span_us);
    if (pulse.support_end() + cfg.final_time_us + 2.0 * margin > cfg.span_us) {
        std::ostringstream os;
        os << "fock oracle: span_us too small: support_end + final_time + "
              "2*margin = "
           << pulse.support_end() + cfg.final_time_us + 2.0 * margin << " > "
           << cfg.span_us;
        throw_invalid(os.str());
    }
    if (cfg.grid_times_us.empty()) {
        throw_invalid("fock oracle: grid_times_us must not be empty");
    }
    for (std::size_t i = 0; i < cfg.grid_times_us.size(); ++i) {
        const double s = cfg.grid_times_us[i];
        if (!std::isfinite(s) || s < 0.0 || s >= cfg.final_time_us) {
            throw_invalid(
                "fock oracle: grid times must lie in [0, final_time_us)");
        }
        if (i > 0 && s <= cfg.grid_times_us[i - 1]) {
            throw_invalid("fock oracle: grid times must be strictly ascending");
        }
    }
    for (std::size_t i = 0; i < cfg.snapshot_times_us.size(); ++i) {
        const double s = cfg.snapshot_times_us[i];
        if (!std::isfinite(s) || s <= 0.0 || s > cfg.final_time_us) {
            throw_invalid(
                "fock oracle: snapshot times must lie in (0, final_time_us]");
        }
        if (i > 0 && s <= cfg.snapshot_times_us[i - 1]) {
            throw_invalid(
                "fock oracle: snapshot times must be strictly ascending");
        }
    }
    if (input.kind == FewPhotonInput::Kind::weak_coherent &&
        (!std::isfinite(input.mean_photons) || input.mean_photons <= 0.0)) {
        throw_invalid("fock oracle: mean_photons must be finite and > 0");
    }
}

// c_q = (1/sqrt(T)) int amp(t) exp(i w_q t) dt, then unit-normalized; the
// deficit is the envelope weight lost beyond the spectral cutoff.
VectorXcd project_envelope(const PulseSpec& pulse, const VectorXd& omega,
                           double span, double* deficit_out) {
    const int m = static_cast<int>(omega.size());
    const double inv_sqrt_span = 1.0 / std::sqrt(span);
    VectorXcd craw = VectorXcd::Zero(m);
    double norm_target = 0.0;

    const std::vector<double> bp = pulse.breakpoints();
    const double dw = kTwoPi / span;
    for (std::size_t seg = 0; seg + 1 < bp.size(); ++seg) {
        const double a = bp[seg];
        const double b = bp[seg + 1];
        if (!(b > a)) continue;
        const int n = std::max(4096, 16 * m);
        const double h = (b - a) / n;
        for (int jj = 0; jj <= n; ++jj) {
            double t = a + h * jj;
            // evaluate one-sided limits so edge discontinuities do not leak
            // the zero outside the support into the quadrature
            if (jj == 0) t = a + 1e-9 * h;
            if (jj == n) t = b - 1e-9 * h;
            const double w = (jj == 0 || jj == n) ? 0.5 * h : h;
            const double amp = pulse.amplitude_at(t);
            if (amp == 0.0) continue;
            norm_target += w * amp * amp;
            const double s = w * amp * inv_sqrt_span;
            C p = std::polar(1.0, omega[0] * t);
            const C step = std::polar(1.0, dw * t);
            for (int q = 0; q < m; ++q) {
                craw[q] += s * p;
                p *= step;
            }
        }
    }

    const double captured = craw.squaredNorm();
    if (!(norm_target > 0.0) || !std::isfinite(captured)) {
        throw_numerical("fock oracle: envelope projection degenerate");
    }
    const double deficit = 1.0 - captured / norm_target;
    if (deficit > 0.05) {
        std::ostringstream os;
        os << "fock oracle: envelope loses " << deficit * 100.0
           << "% beyond the mode cutoff; raise mode_count/span_us";
        throw_numerical(os.str());
    }
    *deficit_out = deficit;
    return craw / std::sqrt(captured);
}

struct SectorOne {
    // [c(m); eps]: one photon and ground state, or no photon and excited
    VectorXcd s;
};

struct SectorTwo {
    // [vec(phi)(m*m); e(m)]: symmetric two-photon amplitudes, or one photon
    // alongside the excited emitter
    VectorXcd s;
};

}  // namespace

FockOracleResult run_fock_oracle(const FockOracleConfig& cfg,
                                 const PulseSpec& pulse,
                                 const FewPhotonInput& input) {
    validate(cfg, pulse, input);

    const int m = cfg.mode_count;
    const double span = cfg.span_us;
    const double g =
        cfg.kappa_per_us > 0.0 ? std::sqrt(cfg.kappa_per_us / span) : 0.0;

    VectorXd omega(m);
    for (int q = 0; q < m; ++q) omega[q] = kTwoPi * (q - m / 2) / span;
    const VectorXcd omega_c = omega.cast<C>();
    const double omega_max = -omega[0];

    FockOracleResult res;
    res.grid_times_us = cfg.grid_times_us;
    res.mode_frequencies = omega;
    res.modes_in = project_envelope(pulse, omega, span, &res.envelope_deficit);
    if (res.envelope_deficit > 0.005) {
        std::ostringstream os;
        os << "envelope projection loses "
           << res.envelope_deficit * 100.0 << "% beyond the mode cutoff";
        res.warnings.push_back(os.str());
    }

    const bool want_one = input.kind != FewPhotonInput::Kind::photon_pair;
    const bool want_two = input.kind != FewPhotonInput::Kind::single_photon;

    SectorOne one;
    SectorTwo two;
    if (want_one) {
        one.s = VectorXcd::Zero(m + 1);
        one.s.head(m) = res.modes_in;
    }
    if (want_two) {
        two.s = VectorXcd::Zero(static_cast<std::ptrdiff_t>(m) * m + m);
        Eigen::Map<MatrixXcd>(two.s.data(), m, m).noalias() =
            res.modes_in * res.modes_in.transpose();
    }

    auto apply_one = [&](const VectorXcd& in, VectorXcd& out) {
        out.head(m).array() = omega_c.array() * in.head(m).array();
        if (g != 0.0) {
            out.head(m).array() += g * in[m];
            out[m] = g * in.head(m).sum();
        } else {
            out[m] = C(0.0, 0.0);
        }
    };
    auto apply_two = [&](const VectorXcd& in, VectorXcd& out) {
        Eigen::Map<const MatrixXcd> p(in.data(), m, m);
        Eigen::Map<const VectorXcd> ev(in.data() + static_cast<std::ptrdiff_t>(m) * m, m);
        Eigen::Map<MatrixXcd> q(out.data(), m, m);
        Eigen::Map<VectorXcd> qe(out.data() + static_cast<std::ptrdiff_t>(m) * m, m);
        q.noalias() = omega_c.asDiagonal() * p;
        q.noalias() += p * omega_c.asDiagonal();
        qe.array() = omega_c.array() * ev.array();
        if (g != 0.0) {
            const VectorXcd scaled = (g / std::numbers::sqrt2) * ev;
            q.colwise() += scaled;
            q.rowwise() += scaled.transpose();
            qe.noalias() +=
                (g * std::numbers::sqrt2) * p.colwise().sum().transpose();
        }
    };

    const double sqrt_m = std::sqrt(static_cast<double>(m));
    const double radius_one = omega_max + 2.0 * g * sqrt_m + 1e-9;
    const double radius_two = 2.0 * omega_max + 4.0 * g * sqrt_m + 1e-9;

    // evolution stops: requested snapshots plus the final readout time
    std::vector<double> stops = cfg.snapshot_times_us;
    if (stops.empty() ||
        std::abs(stops.back() - cfg.final_time_us) > 1e-12 * cfg.final_time_us) {
        stops.push_back(cfg.final_time_us);
    }

    const double support_end = pulse.support_end();
    auto run_checks = [&](double t_now) {
        if (want_one) {
            const double drift = std::abs(one.s.squaredNorm() - 1.0);
            res.norm_drift_max = std::max(res.norm_drift_max, drift);
        }
        if (want_two) {
            const double drift = std::abs(two.s.squaredNorm() - 1.0);
            res.norm_drift_max = std::max(res.norm_drift_max, drift);
        }
        if (res.norm_drift_max > 1e-9) {
            std::ostringstream os;
            os << "fock oracle: sector norm drifted by " << res.norm_drift_max
               << " at t = " << t_now;
            throw_numerical(os.str());
        }

        // photon density integrated over the middle third of the empty arc
        // must stay negligible, otherwise light has wrapped around the ring
        const double gap = span - t_now - support_end;
        const int nb = 64;
        const double dx = gap / (3.0 * nb);
        MatrixXcd f(nb, m);
        for (int i = 0; i < nb; ++i) {
            const double x = t_now + gap / 3.0 + (i + 0.5) * dx;
            for (int qd = 0; qd < m; ++qd) {
                f(i, qd) = std::polar(1.0 / std::sqrt(span), omega[qd] * x);
            }
        }
        double share = 0.0;
        if (want_one) {
            const VectorXcd a1 = f * one.s.head(m);
            const double tot = one.s.head(m).squaredNorm();
            if (tot > 1e-300) share = std::max(share, a1.squaredNorm() * dx / tot);
        }
        if (want_two) {
            Eigen::Map<const MatrixXcd> p(two.s.data(), m, m);
            Eigen::Map<const VectorXcd> ev(
                two.s.data() + static_cast<std::ptrdiff_t>(m) * m, m);
            const MatrixXcd fp = f * p;
            const VectorXcd fe = f * ev;
            const double local =
                (2.0 * fp.rowwise().squaredNorm().sum() + fe.squaredNorm()) * dx;
            const double tot = 2.0 * p.squaredNorm() + ev.squaredNorm();
            if (tot > 1e-300) share = std::max(share, local / tot);
        }
        res.boundary_share_max = std::max(res.boundary_share_max, share);
        if (share > 0.01) {
            std::ostringstream os;
            os << "fock oracle: " << share * 100.0
               << "% of the field reached the far side of the ring at t = "
               << t_now << "; enlarge span_us";
            throw_numerical(os.str());
        }
    };

    double t_prev = 0.0;
    for (double t_stop : stops) {
        const double dt = t_stop - t_prev;
        if (want_one) chebyshev_exp_apply(apply_one, radius_one, dt, one.s);
        if (want_two) chebyshev_exp_apply(apply_two, radius_two, dt, two.s);
        t_prev = t_stop;
        run_checks(t_stop);
    }

    // flux readout: position final_time - s holds the light that crossed the
    // emitter at time s
    const int n = static_cast<int>(cfg.grid_times_us.size());
    MatrixXcd f(n, m);
    for (int i = 0; i < n; ++i) {
        const double x = cfg.final_time_us - cfg.grid_times_us[i];
        for (int qd = 0; qd < m; ++qd) {
            f(i, qd) = std::polar(1.0 / std::sqrt(span), omega[qd] * x);
        }
    }

    res.intensity_single = VectorXd::Zero(n);
    res.intensity_pair = VectorXd::Zero(n);
    res.pair_flux = MatrixXd::Zero(n, n);
    res.modes_out = VectorXcd::Zero(m);

    if (want_one) {
        res.modes_out = one.s.head(m);
        res.excited_amplitude_final = std::abs(one.s[m]);
        const VectorXcd a1 = f * one.s.head(m);
        res.intensity_single = a1.cwiseAbs2();
    }
    if (want_two) {
        Eigen::Map<const MatrixXcd> p(two.s.data(), m, m);
        Eigen::Map<const VectorXcd> ev(
            two.s.data() + static_cast<std::ptrdiff_t>(m) * m, m);
        const MatrixXcd fp = f * p;
        const VectorXcd fe = f * ev;
        res.intensity_pair =
            2.0 * fp.rowwise().squaredNorm() + fe.cwiseAbs2();
        const MatrixXcd pair_amp =
            std::numbers::sqrt2 * (fp * f.transpose());
        res.pair_flux = pair_amp.cwiseAbs2();
    }

    const double nan = std::numeric_limits<double>::quiet_NaN();
    res.intensity = VectorXd::Zero(n);
    res.g2 = MatrixXd::Zero(n, n);
    switch (input.kind) {
        case FewPhotonInput::Kind::single_photon:
            res.intensity = res.intensity_single;
            break;
        case FewPhotonInput::Kind::photon_pair:
            res.intensity = res.intensity_pair;
            for (int i = 0; i < n; ++i) {
                for (int jj = 0; jj < n; ++jj) {
                    const double den =
                        res.intensity_pair[i] * res.intensity_pair[jj];
                    res.g2(i, jj) = den > 1e-300 ? res.pair_flux(i, jj) / den : nan;
                }
            }
            break;
        case FewPhotonInput::Kind::weak_coherent: {
            // Truncating a coherent state at two photons loses flux, and a
            // probability renormalization would bias every rate low by
            // O(nbar^2).  Rescaling the surviving weights so the first and
            // second factorial moments stay exact removes that bias:
            //   <n>   -> nbar   (intensity)
            //   <n(n-1)> -> nbar^2  (pair flux)
            // and makes g2 of an unscattered drive exactly 1 at any nbar.
            const double b2 = input.mean_photons;
            const double w = std::exp(-b2);
            res.intensity = (b2 / (1.0 + b2)) *
                            (res.intensity_single +
                             0.5 * b2 * res.intensity_pair);
            res.truncated_probability = 1.0 - w * (1.0 + b2 + 0.5 * b2 * b2);
            const double pair_share =
                0.5 * b2 * b2 / (1.0 + b2 + 0.5 * b2 * b2);
            if (pair_share > 0.05) {
                std::ostringstream os;
                os << "two-photon weight share " << pair_share
                   << " exceeds 0.05; the two-excitation truncation is "
                      "unreliable, reduce mean_photons";
                res.warnings.push_back(os.str());
            }
            const double num_scale = 0.5 * b2 * b2;
            for (int i = 0; i < n; ++i) {
                for (int jj = 0; jj < n; ++jj) {
                    const double den = res.intensity[i] * res.intensity[jj];
                    res.g2(i, jj) = den > 1e-300
                                        ? num_scale * res.pair_flux(i, jj) / den
                                        : nan;
                }
            }
            break;
        }
    }
    return res;
}

}  // namespace superatom
