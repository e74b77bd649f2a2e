#pragma once

#include <variant>
#include <vector>

namespace superatom {

// Drive envelopes are specified as photon *rates* R(t) in 1/us; the coherent
// drive amplitude entering the Hamiltonian is alpha(t) = sqrt(R(t)), real and
// non-negative.  Shaping acts on the rate, not on the amplitude.

// Cosine-tapered flat-top: ramp up over rise_us, hold for uptime_us, ramp
// down over rise_us.  The taper is 0.5*(1 - cos(pi*u/rise)) on each edge, so
// the integrated photon number is peak_rate * (uptime_us + rise_us).
struct TukeyPulse {
    double rise_us = 0.0;
    double uptime_us = 0.0;
    double peak_rate = 0.0;  // 1/us
    friend bool operator==(const TukeyPulse&, const TukeyPulse&) = default;
};

struct SquarePulse {
    double duration_us = 0.0;
    double rate = 0.0;  // 1/us
    friend bool operator==(const SquarePulse&, const SquarePulse&) = default;
};

// Piecewise-linear rate samples; zero outside [times.front(), times.back()].
struct SampledPulse {
    std::vector<double> times_us;
    std::vector<double> rates;
    friend bool operator==(const SampledPulse&, const SampledPulse&) = default;
};

class PulseSpec {
public:
    static PulseSpec tukey(double rise_us, double uptime_us, double peak_rate,
                           double start_time_us = 0.0);
    static PulseSpec square(double duration_us, double rate,
                            double start_time_us = 0.0);
    static PulseSpec sampled(std::vector<double> times_us,
                             std::vector<double> rates,
                             double start_time_us = 0.0);

    double rate_at(double t_us) const;       // >= 0
    double amplitude_at(double t_us) const;  // sqrt(rate), 1/sqrt(us)
    double photon_count() const;             // closed form; trapezoid for sampled

    // Absolute times where the rate law changes branch.  Integrators restart
    // here so that edge kinks never sit inside a step.
    std::vector<double> breakpoints() const;

    double support_begin() const;  // earliest time with possibly nonzero rate
    double support_end() const;

    // Heuristic spectral width in rad/us (shortest envelope feature), used
    // for discretized-continuum resolution checks.
    double bandwidth_hint() const;

    double start_time_us() const { return start_; }
    const std::variant<TukeyPulse, SquarePulse, SampledPulse>& shape() const {
        return shape_;
    }

    friend bool operator==(const PulseSpec&, const PulseSpec&) = default;

private:
    PulseSpec(std::variant<TukeyPulse, SquarePulse, SampledPulse> shape,
              double start);

    std::variant<TukeyPulse, SquarePulse, SampledPulse> shape_;
    double start_ = 0.0;
};

}  // namespace superatom
