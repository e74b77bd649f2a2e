#include "superatom/pulses.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "superatom/errors.hpp"

namespace superatom {

namespace {

void require_finite(double v, const char* what) {
    if (!std::isfinite(v)) throw_invalid(std::string(what) + " must be finite");
}

}  // namespace

PulseSpec::PulseSpec(std::variant<TukeyPulse, SquarePulse, SampledPulse> shape,
                     double start)
    : shape_(std::move(shape)), start_(start) {}

PulseSpec PulseSpec::tukey(double rise_us, double uptime_us, double peak_rate,
                           double start_time_us) {
    require_finite(rise_us, "rise_us");
    require_finite(uptime_us, "uptime_us");
    require_finite(peak_rate, "peak_rate");
    require_finite(start_time_us, "start_time_us");
    if (rise_us < 0) throw_invalid("rise_us must be >= 0");
    if (uptime_us < 0) throw_invalid("uptime_us must be >= 0");
    if (peak_rate < 0) throw_invalid("peak_rate must be >= 0");
    return PulseSpec(TukeyPulse{rise_us, uptime_us, peak_rate}, start_time_us);
}

PulseSpec PulseSpec::square(double duration_us, double rate,
                            double start_time_us) {
    require_finite(duration_us, "duration_us");
    require_finite(rate, "rate");
    require_finite(start_time_us, "start_time_us");
    if (duration_us < 0) throw_invalid("duration_us must be >= 0");
    if (rate < 0) throw_invalid("rate must be >= 0");
    return PulseSpec(SquarePulse{duration_us, rate}, start_time_us);
}

PulseSpec PulseSpec::sampled(std::vector<double> times_us,
                             std::vector<double> rates,
                             double start_time_us) {
    require_finite(start_time_us, "start_time_us");
    if (times_us.size() != rates.size())
        throw_invalid("sampled pulse: times and rates differ in length");
    if (times_us.size() < 2)
        throw_invalid("sampled pulse: need at least two samples");
    for (std::size_t i = 0; i < times_us.size(); ++i) {
        require_finite(times_us[i], "sample time");
        require_finite(rates[i], "sample rate");
        if (rates[i] < 0) throw_invalid("sample rates must be >= 0");
        if (i > 0 && times_us[i] <= times_us[i - 1])
            throw_invalid("sample times must be strictly increasing");
    }
    return PulseSpec(SampledPulse{std::move(times_us), std::move(rates)},
                     start_time_us);
}

double PulseSpec::rate_at(double t_us) const {
    const double u = t_us - start_;
    if (std::holds_alternative<TukeyPulse>(shape_)) {
        const auto& p = std::get<TukeyPulse>(shape_);
        const double total = 2 * p.rise_us + p.uptime_us;
        if (u <= 0 || u >= total) return 0.0;
        if (p.rise_us > 0 && u < p.rise_us)
            return p.peak_rate * 0.5 *
                   (1.0 - std::cos(std::numbers::pi * u / p.rise_us));
        if (p.rise_us > 0 && u > p.rise_us + p.uptime_us)
            return p.peak_rate * 0.5 *
                   (1.0 - std::cos(std::numbers::pi * (total - u) / p.rise_us));
        return p.peak_rate;
    }
    if (std::holds_alternative<SquarePulse>(shape_)) {
        const auto& p = std::get<SquarePulse>(shape_);
        return (u >= 0 && u < p.duration_us) ? p.rate : 0.0;
    }
    const auto& p = std::get<SampledPulse>(shape_);
    if (u < p.times_us.front() || u > p.times_us.back()) return 0.0;
    auto it = std::upper_bound(p.times_us.begin(), p.times_us.end(), u);
    if (it == p.times_us.begin()) return p.rates.front();
    if (it == p.times_us.end()) return p.rates.back();
    const auto hi = static_cast<std::size_t>(it - p.times_us.begin());
    const auto lo = hi - 1;
    const double w = (u - p.times_us[lo]) / (p.times_us[hi] - p.times_us[lo]);
    return p.rates[lo] + w * (p.rates[hi] - p.rates[lo]);
}

double PulseSpec::amplitude_at(double t_us) const {
    return std::sqrt(rate_at(t_us));
}

double PulseSpec::photon_count() const {
    if (std::holds_alternative<TukeyPulse>(shape_)) {
        const auto& p = std::get<TukeyPulse>(shape_);
        // each cosine edge integrates to rise/2
        return p.peak_rate * (p.uptime_us + p.rise_us);
    }
    if (std::holds_alternative<SquarePulse>(shape_)) {
        const auto& p = std::get<SquarePulse>(shape_);
        return p.rate * p.duration_us;
    }
    const auto& p = std::get<SampledPulse>(shape_);
    double sum = 0.0;
    for (std::size_t i = 1; i < p.times_us.size(); ++i)
        sum += 0.5 * (p.rates[i] + p.rates[i - 1]) *
               (p.times_us[i] - p.times_us[i - 1]);
    return sum;
}

std::vector<double> PulseSpec::breakpoints() const {
    std::vector<double> out;
    if (std::holds_alternative<TukeyPulse>(shape_)) {
        const auto& p = std::get<TukeyPulse>(shape_);
        out = {0.0, p.rise_us, p.rise_us + p.uptime_us,
               2 * p.rise_us + p.uptime_us};
    } else if (std::holds_alternative<SquarePulse>(shape_)) {
        const auto& p = std::get<SquarePulse>(shape_);
        out = {0.0, p.duration_us};
    } else {
        out = std::get<SampledPulse>(shape_).times_us;
    }
    for (double& t : out) t += start_;
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

double PulseSpec::support_begin() const { return breakpoints().front(); }

double PulseSpec::support_end() const { return breakpoints().back(); }

double PulseSpec::bandwidth_hint() const {
    constexpr double two_pi = 2.0 * std::numbers::pi;
    if (std::holds_alternative<TukeyPulse>(shape_)) {
        const auto& p = std::get<TukeyPulse>(shape_);
        const double feature =
            p.rise_us > 0 ? p.rise_us : std::max(p.uptime_us, 1e-12);
        return two_pi / feature;
    }
    if (std::holds_alternative<SquarePulse>(shape_)) {
        const auto& p = std::get<SquarePulse>(shape_);
        return two_pi / std::max(p.duration_us, 1e-12);
    }
    const auto& p = std::get<SampledPulse>(shape_);
    const double span = p.times_us.back() - p.times_us.front();
    return 4.0 * two_pi / span;  // coarse: envelopes are smooth on span/4
}

}  // namespace superatom
