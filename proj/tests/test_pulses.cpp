#include "superatom/pulses.hpp"

#include <cmath>

#include "doctest.h"
#include "superatom/errors.hpp"
#include "test_util.hpp"

using superatom::ErrorKind;
using superatom::PulseSpec;

TEST_CASE("tukey photon count equals quadrature of the rate") {
    const double rise = 0.8, uptime = 5.0;
    for (double peak : {12.4, 2.6, 1.5, 0.05}) {
        auto p = PulseSpec::tukey(rise, uptime, peak);
        const double numeric = testutil::adaptive_simpson(
            [&](double t) { return p.rate_at(t); }, -1.0, rise + uptime + rise + 1.0,
            1e-13);
        CHECK(p.photon_count() == doctest::Approx(peak * (uptime + rise)).epsilon(1e-12));
        CHECK(numeric == doctest::Approx(p.photon_count()).epsilon(1e-9));
    }
}

TEST_CASE("tukey reference photon numbers") {
    // peak rates used throughout: N_ph = peak * 5.8 for rise 0.8, uptime 5
    CHECK(PulseSpec::tukey(0.8, 5.0, 12.4).photon_count() ==
          doctest::Approx(71.92).epsilon(1e-12));
    CHECK(PulseSpec::tukey(0.8, 5.0, 2.6).photon_count() ==
          doctest::Approx(15.08).epsilon(1e-12));
    CHECK(PulseSpec::tukey(0.8, 5.0, 1.5).photon_count() ==
          doctest::Approx(8.7).epsilon(1e-12));
}

TEST_CASE("tukey envelope: edges, plateau, and continuity") {
    auto p = PulseSpec::tukey(0.8, 5.0, 2.0);
    CHECK(p.rate_at(-0.1) == 0.0);
    CHECK(p.rate_at(0.0) == 0.0);
    CHECK(p.rate_at(0.4) == doctest::Approx(1.0));  // half height mid-ramp
    CHECK(p.rate_at(0.8) == doctest::Approx(2.0));
    CHECK(p.rate_at(3.0) == 2.0);
    CHECK(p.rate_at(5.8) == doctest::Approx(2.0));
    CHECK(p.rate_at(6.6) == doctest::Approx(0.0).epsilon(1e-14));
    CHECK(p.rate_at(7.0) == 0.0);
    // continuity at the four breakpoints
    for (double b : p.breakpoints()) {
        CHECK(p.rate_at(b - 1e-9) == doctest::Approx(p.rate_at(b + 1e-9)).scale(2.0).epsilon(1e-7));
    }
    CHECK(p.support_begin() == 0.0);
    CHECK(p.support_end() == doctest::Approx(6.6));
}

TEST_CASE("square pulse") {
    auto p = PulseSpec::square(6.0, 0.05, 1.0);
    CHECK(p.rate_at(0.99) == 0.0);
    CHECK(p.rate_at(1.01) == 0.05);
    CHECK(p.rate_at(6.99) == 0.05);
    CHECK(p.rate_at(7.01) == 0.0);
    CHECK(p.photon_count() == doctest::Approx(0.3));
    CHECK(p.amplitude_at(3.0) == doctest::Approx(std::sqrt(0.05)));
    CHECK(p.support_begin() == doctest::Approx(1.0));
    CHECK(p.support_end() == doctest::Approx(7.0));
}

TEST_CASE("sampled pulse interpolates and integrates by trapezoid") {
    auto p = PulseSpec::sampled({0.0, 1.0, 3.0}, {0.0, 2.0, 0.0});
    CHECK(p.rate_at(0.5) == doctest::Approx(1.0));
    CHECK(p.rate_at(2.0) == doctest::Approx(1.0));
    CHECK(p.photon_count() == doctest::Approx(3.0));
    CHECK(p.rate_at(-0.1) == 0.0);
    CHECK(p.rate_at(3.1) == 0.0);
}

TEST_CASE("start time shifts support and breakpoints") {
    auto p = PulseSpec::tukey(0.8, 5.0, 2.0, 10.0);
    CHECK(p.rate_at(10.4) == doctest::Approx(1.0));
    CHECK(p.support_begin() == doctest::Approx(10.0));
    auto bps = p.breakpoints();
    REQUIRE(bps.size() >= 2);
    for (std::size_t i = 1; i < bps.size(); ++i) CHECK(bps[i] > bps[i - 1]);
    CHECK(bps.front() == doctest::Approx(10.0));
}

TEST_CASE("amplitude is the square root of the rate") {
    auto p = PulseSpec::tukey(0.8, 5.0, 12.4);
    for (double t : {0.1, 0.5, 2.0, 6.0, 6.5}) {
        CHECK(p.amplitude_at(t) * p.amplitude_at(t) ==
              doctest::Approx(p.rate_at(t)).epsilon(1e-12));
    }
}

TEST_CASE("validation rejects bad shapes") {
    CHECK(testutil::thrown_kind([] { PulseSpec::tukey(-0.1, 5.0, 1.0); }) ==
          ErrorKind::invalid_input);
    CHECK(testutil::thrown_kind([] { PulseSpec::tukey(0.8, 5.0, -1.0); }) ==
          ErrorKind::invalid_input);
    CHECK(testutil::thrown_kind([] { PulseSpec::square(-1.0, 1.0); }) ==
          ErrorKind::invalid_input);
    CHECK(testutil::thrown_kind([] { PulseSpec::sampled({0.0, 0.0}, {1.0, 1.0}); }) ==
          ErrorKind::invalid_input);
    CHECK(testutil::thrown_kind([] { PulseSpec::sampled({0.0}, {1.0}); }) ==
          ErrorKind::invalid_input);
    CHECK(testutil::thrown_kind([] { PulseSpec::sampled({0.0, 1.0}, {1.0, -1.0}); }) ==
          ErrorKind::invalid_input);
    const double nan = std::nan("");
    CHECK(testutil::thrown_kind([&] { PulseSpec::square(1.0, nan); }) ==
          ErrorKind::invalid_input);
}

TEST_CASE("bandwidth hint tracks the sharpest envelope feature") {
    const double tukey_bw = PulseSpec::tukey(0.8, 5.0, 1.0).bandwidth_hint();
    const double square_bw = PulseSpec::square(6.0, 1.0).bandwidth_hint();
    CHECK(tukey_bw > 0.0);
    CHECK(square_bw > 0.0);
    // a slow ramp is spectrally narrower than a hard edge of comparable length
    CHECK(tukey_bw < PulseSpec::tukey(0.1, 5.7, 1.0).bandwidth_hint());
}
