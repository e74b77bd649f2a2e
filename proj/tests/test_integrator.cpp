#include "superatom/integrator.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <complex>
#include <vector>

#include "doctest.h"
#include "test_util.hpp"

using superatom::ErrorKind;
using superatom::IntegratorOptions;
using superatom::integrate_dopri5;

namespace {

std::vector<double> linspace(double a, double b, int n) {
    std::vector<double> v(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i)
        v[static_cast<std::size_t>(i)] = a + (b - a) * i / (n - 1);
    return v;
}

}  // namespace

TEST_CASE("exponential decay matches the closed form at dense output times") {
    auto rhs = [](double, const Eigen::Vector2d& y, Eigen::Vector2d& dy) {
        dy = -y;
    };
    const auto grid = linspace(0.0, 10.0, 137);
    IntegratorOptions opt;
    opt.rel_tol = 1e-10;
    opt.abs_tol = 1e-14;
    double worst = 0.0;
    Eigen::Vector2d y0(1.0, 2.0);
    auto yend = integrate_dopri5(
        rhs, y0, 0.0, 10.0, grid,
        [&](std::size_t, double t, const Eigen::Vector2d& y) {
            worst = std::max(worst, std::abs(y[0] - std::exp(-t)));
            worst = std::max(worst, std::abs(y[1] - 2.0 * std::exp(-t)));
        },
        opt);
    CHECK(worst < 1e-9);
    CHECK(yend[0] == doctest::Approx(std::exp(-10.0)).epsilon(1e-8));
}

TEST_CASE("harmonic oscillator holds phase over many periods") {
    auto rhs = [](double, const Eigen::Vector2d& y, Eigen::Vector2d& dy) {
        dy[0] = y[1];
        dy[1] = -y[0];
    };
    const double t_end = 200.0 * M_PI;  // 100 periods
    IntegratorOptions opt;
    opt.rel_tol = 1e-11;
    opt.abs_tol = 1e-13;
    Eigen::Vector2d y0(1.0, 0.0);
    auto y = integrate_dopri5(rhs, y0, 0.0, t_end, {}, [](std::size_t, double,
                                                          const Eigen::Vector2d&) {},
                              opt);
    CHECK(y[0] == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(std::abs(y[1]) < 1e-6);
}

TEST_CASE("complex matrix states integrate componentwise") {
    using M = Eigen::Matrix2cd;
    const std::complex<double> i1(0.0, 1.0);
    auto rhs = [&](double, const M& y, M& dy) { dy = i1 * y; };
    M y0;
    y0 << 1.0, 2.0, 3.0, 4.0;
    auto y = integrate_dopri5(rhs, y0, 0.0, 1.0, {},
                              [](std::size_t, double, const M&) {}, {});
    const std::complex<double> rot = std::exp(i1);
    CHECK(std::abs(y(0, 0) - rot) < 1e-8);
    CHECK(std::abs(y(1, 1) - 4.0 * rot) < 1e-8);
}

TEST_CASE("output times at the endpoints are emitted once each") {
    auto rhs = [](double, const Eigen::Vector2d& y, Eigen::Vector2d& dy) {
        dy = -y;
    };
    std::vector<double> grid{0.0, 0.5, 1.0};
    std::vector<double> seen;
    Eigen::Vector2d y0(1.0, 1.0);
    integrate_dopri5(rhs, y0, 0.0, 1.0, grid,
                     [&](std::size_t i, double t, const Eigen::Vector2d&) {
                         CHECK(i == seen.size());
                         seen.push_back(t);
                     },
                     {});
    REQUIRE(seen.size() == 3);
    CHECK(seen[0] == 0.0);
    CHECK(seen[1] == 0.5);
    CHECK(seen[2] == 1.0);
}

TEST_CASE("zero-span integration emits coincident outputs and returns y0") {
    auto rhs = [](double, const Eigen::Vector2d& y, Eigen::Vector2d& dy) {
        dy = -y;
    };
    std::vector<double> grid{2.0};
    int count = 0;
    Eigen::Vector2d y0(3.0, -1.0);
    auto y = integrate_dopri5(rhs, y0, 2.0, 2.0, grid,
                              [&](std::size_t, double, const Eigen::Vector2d&) {
                                  ++count;
                              },
                              {});
    CHECK(count == 1);
    CHECK((y - y0).norm() == 0.0);
}

TEST_CASE("invalid output grids are rejected") {
    auto rhs = [](double, const Eigen::Vector2d& y, Eigen::Vector2d& dy) {
        dy = -y;
    };
    Eigen::Vector2d y0(1.0, 1.0);
    std::vector<double> outside{-0.5};
    CHECK(testutil::thrown_kind([&] {
              integrate_dopri5(rhs, y0, 0.0, 1.0, outside,
                               [](std::size_t, double, const Eigen::Vector2d&) {},
                               {});
          }) == ErrorKind::invalid_input);
    std::vector<double> unordered{0.5, 0.2};
    CHECK(testutil::thrown_kind([&] {
              integrate_dopri5(rhs, y0, 0.0, 1.0, unordered,
                               [](std::size_t, double, const Eigen::Vector2d&) {},
                               {});
          }) == ErrorKind::invalid_input);
    CHECK(testutil::thrown_kind([&] {
              integrate_dopri5(rhs, y0, 1.0, 0.0, {},
                               [](std::size_t, double, const Eigen::Vector2d&) {},
                               {});
          }) == ErrorKind::invalid_input);
}

TEST_CASE("step budget exhaustion raises a numerical error") {
    auto rhs = [](double, const Eigen::Vector2d& y, Eigen::Vector2d& dy) {
        dy[0] = y[1];
        dy[1] = -y[0];
    };
    IntegratorOptions opt;
    opt.max_steps = 3;
    Eigen::Vector2d y0(1.0, 0.0);
    CHECK(testutil::thrown_kind([&] {
              integrate_dopri5(rhs, y0, 0.0, 1000.0, {},
                               [](std::size_t, double, const Eigen::Vector2d&) {},
                               opt);
          }) == ErrorKind::numerical);
}

TEST_CASE("moderately stiff linear problem still converges") {
    const double lam = -2000.0;
    auto rhs = [&](double, const Eigen::Vector2d& y, Eigen::Vector2d& dy) {
        dy = lam * y;
    };
    Eigen::Vector2d y0(1.0, 1.0);
    auto y = integrate_dopri5(rhs, y0, 0.0, 0.01, {},
                              [](std::size_t, double, const Eigen::Vector2d&) {},
                              {});
    CHECK(y[0] == doctest::Approx(std::exp(lam * 0.01)).epsilon(1e-6));
}

TEST_CASE("dense output error stays at interpolation order between steps") {
    // y'' + y = 2 cos t from rest has the exact solution y = t sin t
    auto rhs = [](double t, const Eigen::Vector2d& y, Eigen::Vector2d& dy) {
        dy[0] = y[1];
        dy[1] = -y[0] + 2.0 * std::cos(t);
    };
    const auto grid = linspace(0.1234, 9.876, 61);
    IntegratorOptions opt;
    opt.rel_tol = 1e-10;
    opt.abs_tol = 1e-12;
    double worst = 0.0;
    Eigen::Vector2d y0(0.0, 0.0);
    integrate_dopri5(rhs, y0, 0.0, 10.0, grid,
                     [&](std::size_t, double t, const Eigen::Vector2d& y) {
                         worst = std::max(worst, std::abs(y[0] - t * std::sin(t)));
                     },
                     opt);
    CHECK(worst < 1e-7);
}
