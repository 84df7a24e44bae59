#include <doctest.h>

#include <cmath>

#include "nobleqm/pulses.hpp"

using namespace nobleqm;

TEST_CASE("amplitude constant integrates the rising exponential to N")
{
    for (double T : {1e-6, 1.0, 15e-3}) {
        const double A = exponential_amplitude_constant(T, 2.5);
        // integral over [-2T, T] of A sqrt(2/T) exp((t-T)/T)
        CHECK(A * std::sqrt(2.0 / T) * T * (1.0 - std::exp(-3.0)) == doctest::Approx(2.5).epsilon(1e-12));
    }
}

TEST_CASE("exponential input window, normalization and shape")
{
    const double T = 2.0;
    const Envelope e = exponential_input(T, 1.0, T / 300.0);
    CHECK(e.t0 == doctest::Approx(-2.0 * T));
    CHECK(e.t_end() == doctest::Approx(T).epsilon(1e-12));
    CHECK(photon_number(e) == doctest::Approx(1.0).epsilon(1e-12));
    // intensity ratio across one T is e
    const std::size_t i = 100, j = 400;
    CHECK(std::norm(e.samples[j]) / std::norm(e.samples[i]) == doctest::Approx(std::exp(1.0)).epsilon(1e-12));
    for (auto v : e.samples) {
        CHECK(v.imag() == 0.0);
        CHECK(v.real() > 0.0);
    }
}

TEST_CASE("grid step is shrunk to cover the window exactly")
{
    const Envelope e = exponential_input(1.0, 1.0, 0.0071);
    CHECK(e.dt <= 0.0071);
    CHECK(e.t_end() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK_THROWS_AS(exponential_input(1.0, 1.0, 0.011), ResolutionError);
    CHECK_THROWS_AS(exponential_input(-1.0, 1.0, 0.001), ResolutionError);
}

TEST_CASE("trapezoidal photon number converges to the closed form")
{
    // N of A e^{(t-T)/T} on [-2T, T] from samples of a fixed amplitude
    const double T = 1.0;
    const std::size_t n = 30001;
    Envelope e = Envelope::zeros(-2.0, 3.0 / (n - 1), n);
    for (std::size_t i = 0; i < n; ++i) e.samples[i] = std::exp((e.time(i) - T) / (2.0 * T));
    CHECK(photon_number(e) == doctest::Approx(T * (1.0 - std::exp(-3.0))).epsilon(1e-8));
    CHECK(photon_number(Envelope::zeros(0.0, 1.0, 1)) == 0.0);
}

TEST_CASE("overlap of the pulse with its time reverse")
{
    const Envelope e = exponential_input(1.0, 1.0, 1e-3);
    const Envelope r = time_reverse(e);
    // product of the two amplitudes is constant: N e^{-3/2} / (T (1 - e^{-3})) over 3T
    const double expect = 3.0 * std::exp(-1.5) / (1.0 - std::exp(-3.0));
    CHECK(std::abs(mode_overlap(e, r) - expect) < 1e-6);
    CHECK(mode_overlap(e, e).real() == doctest::Approx(photon_number(e)));
}

TEST_CASE("time reversal is an involution and fixes symmetric real pulses")
{
    const Envelope e = exponential_input(1.0, 1.0, 1e-2);
    Envelope c = scaled(e, cplx(0.3, 0.4));
    const Envelope rr = time_reverse(time_reverse(c));
    CHECK(rr.t0 == c.t0);
    for (std::size_t i = 0; i < c.size(); ++i) CHECK(rr.samples[i] == c.samples[i]);

    Envelope g = Envelope::zeros(-1.0, 0.01, 201);
    for (std::size_t i = 0; i < g.size(); ++i) g.samples[i] = std::exp(-g.time(i) * g.time(i) * 8.0);
    const Envelope gr = time_reverse(g);
    for (std::size_t i = 0; i < g.size(); ++i) CHECK(std::abs(gr.samples[i] - g.samples[i]) < 1e-15);
    CHECK(photon_number(scaled(e, 2.0)) == doctest::Approx(4.0));
}

TEST_CASE("overlap on different grids is rejected")
{
    const Envelope a = Envelope::zeros(0.0, 0.1, 10);
    CHECK_THROWS_AS(mode_overlap(a, Envelope::zeros(0.0, 0.1, 11)), GridMismatch);
    CHECK_THROWS_AS(mode_overlap(a, Envelope::zeros(0.0, 0.2, 10)), GridMismatch);
}
