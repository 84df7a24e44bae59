#include <doctest.h>

#include <cmath>
#include <random>

#include "nobleqm/model.hpp"

using namespace nobleqm;

namespace {

PhysicalParams cell()
{
    PhysicalParams q;
    q.gamma_p = 200.0;
    q.gamma_s = 0.3;
    q.gamma_k = 0.05;
    q.cooperativity = 4.0;
    q.exchange_J = 2.0;
    return q;
}

ControlSchedule random_schedule(std::mt19937_64 &rng, double t0, double dt, std::size_t n, double om_max,
                                double d_max)
{
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    ControlSchedule c = ControlSchedule::constant(t0, dt, n, cplx{}, 0.0, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        c.omega[i] = cplx(u(rng), u(rng)) * om_max;
        c.delta_s[i] = u(rng) * d_max;
        c.delta_k[i] = u(rng) * d_max;
    }
    return c;
}

Envelope random_input(std::mt19937_64 &rng, double t0, double dt, std::size_t n)
{
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    Envelope e = Envelope::zeros(t0, dt, n);
    for (auto &v : e.samples) v = cplx(u(rng), u(rng));
    return e;
}

} // namespace

TEST_CASE("rhs_full follows the three-mode equations")
{
    PhysicalParams q = cell();
    q.delta_cav = 1.5;
    const ModeState x{cplx(0.1, -0.2), cplx(0.3, 0.4), cplx(-0.5, 0.25)};
    const ControlSample u{cplx(2.0, -1.0), 0.7, -0.4};
    const cplx e(0.6, 0.1);
    const ModeState d = rhs_full(x, u, e, q);

    const cplx kappa = std::sqrt(2.0 * q.gamma_p * q.cooperativity);
    const cplx dp = -(q.gamma_p * (1.0 + q.cooperativity) + I * q.delta_cav) * x.p + I * u.omega * x.s + I * kappa * e;
    const cplx ds = -(q.gamma_s + I * u.delta_s) * x.s + I * std::conj(u.omega) * x.p - I * q.exchange_J * x.k;
    const cplx dk = -(q.gamma_k + I * u.delta_k) * x.k - I * q.exchange_J * x.s;
    CHECK(std::abs(d.p - dp) < 1e-13);
    CHECK(std::abs(d.s - ds) < 1e-13);
    CHECK(std::abs(d.k - dk) < 1e-13);
}

TEST_CASE("eliminated dipole is the steady state of the dipole equation")
{
    PhysicalParams q = cell();
    q.delta_cav = -3.0;
    const ControlSample u{cplx(1.2, 0.4), 0.0, 0.0};
    const cplx s(0.2, -0.7), e(0.3, 0.3);
    const cplx p = eliminated_dipole(s, u.omega, e, q);
    const ModeState d = rhs_full({p, s, cplx{}}, u, e, q);
    CHECK(std::abs(d.p) < 1e-12);
    const ModeState r = rhs_reduced(s, cplx{}, u, e, q);
    CHECK(std::abs(r.p - p) < 1e-15);
}

TEST_CASE("free alkali decay matches exp(-gamma_s t)")
{
    PhysicalParams q = cell();
    q.exchange_J = 0.0;
    const ControlSchedule c = ControlSchedule::constant(0.0, 0.01, 201, cplx{}, 0.0, 0.0);
    const Envelope in = Envelope::zeros(0.0, 0.01, 201);
    const Trajectory tr = propagate_reduced(q, c, in, 1.0, 0.0);
    for (std::size_t i = 0; i < tr.size(); i += 50)
        CHECK(std::abs(tr.s[i] - std::exp(-q.gamma_s * tr.time(i))) < 1e-10);
}

TEST_CASE("lossless resonant exchange oscillates as cos(Jt), -i sin(Jt)")
{
    PhysicalParams q;
    q.exchange_J = 3.0;
    const double T = PI / q.exchange_J;
    const std::size_t n = 401;
    const ControlSchedule c = ControlSchedule::constant(0.0, T / (n - 1), n, cplx{}, 0.0, 0.0);
    const Envelope in = Envelope::zeros(0.0, T / (n - 1), n);
    const Trajectory tr = propagate_reduced(q, c, in, 1.0, 0.0);
    for (std::size_t i = 0; i < n; i += 40) {
        const double t = tr.time(i);
        CHECK(std::abs(tr.s[i] - std::cos(q.exchange_J * t)) < 1e-9);
        CHECK(std::abs(tr.k[i] + I * std::sin(q.exchange_J * t)) < 1e-9);
    }
}

TEST_CASE("empty cavity reflects a slow input with the Lorentzian response")
{
    PhysicalParams q = cell();
    q.delta_cav = 150.0;
    const std::size_t n = 2001;
    const double dt = 1e-4;
    const ControlSchedule c = ControlSchedule::constant(0.0, dt, n, cplx{}, 0.0, 0.0);
    Envelope in = Envelope::zeros(0.0, dt, n);
    for (auto &v : in.samples) v = cplx(0.8, 0.0);
    const Trajectory tr = propagate_full(q, c, in);
    const cplx r = 1.0 - 2.0 * q.gamma_p * q.cooperativity / cplx(q.dipole_rate(), q.delta_cav);
    CHECK(std::abs(tr.e_out.samples.back() - 0.8 * r) < 1e-9);
    const Envelope out = output_field(tr, in, q);
    CHECK(std::abs(out.samples.back() - tr.e_out.samples.back()) < 1e-15);
}

TEST_CASE("flux balance closes on random runs for both models")
{
    std::mt19937_64 rng(7);
    const PhysicalParams q = cell();
    for (int run = 0; run < 10; ++run) {
        const ControlSchedule c = random_schedule(rng, 0.0, 0.01, 101, 20.0, 5.0);
        const Envelope in = random_input(rng, 0.0, 0.01, 101);
        const Trajectory full = propagate_full(q, c, in, {cplx(0.1), cplx(0.2, 0.1), cplx(0.0, -0.3)});
        const Trajectory red = propagate_reduced(q, c, in, cplx(0.2, 0.1), cplx(0.0, -0.3));
        const double n_in = full.n_in.back();
        CHECK(std::abs(flux_balance(full, in)) <= 1e-6 * n_in);
        CHECK(std::abs(flux_balance(red, in)) <= 1e-6 * n_in);
        for (std::size_t i = 1; i < full.size(); ++i) {
            CHECK(full.loss_p[i] >= full.loss_p[i - 1]);
            CHECK(full.loss_s[i] >= full.loss_s[i - 1]);
            CHECK(full.loss_k[i] >= full.loss_k[i - 1]);
        }
    }
}

TEST_CASE("reduced model approaches the full model for a fast dipole")
{
    std::mt19937_64 rng(11);
    PhysicalParams q = cell();
    q.gamma_p = 1e4;
    q.cooperativity = 50.0;
    const std::size_t n = 201;
    ControlSchedule c = ControlSchedule::constant(0.0, 0.01, n, cplx(300.0, 0.0), 0.0, 0.0);
    Envelope in = Envelope::zeros(0.0, 0.01, n);
    for (std::size_t i = 0; i < n; ++i) in.samples[i] = std::sin(PI * in.time(i) / 2.0);
    IntegratorOptions io;
    io.max_substeps = 1 << 12;
    const Trajectory f = propagate_full(q, c, in, {}, io);
    const Trajectory r = propagate_reduced(q, c, in);
    // elimination error scales as rate / (gamma_p (1 + C)) ~ 1e-3
    CHECK(std::abs(f.k.back() - r.k.back()) < 5e-3 * std::abs(f.k.back()));
    CHECK(std::abs(f.s.back() - r.s.back()) < 5e-3 * std::abs(f.s.back()));
}

TEST_CASE("RK4 error drops by about 16 when the step halves")
{
    std::mt19937_64 rng(3);
    const PhysicalParams q = cell();
    const ControlSchedule c = random_schedule(rng, 0.0, 0.05, 21, 5.0, 3.0);
    Envelope in = Envelope::zeros(0.0, 0.05, 21);
    for (std::size_t i = 0; i < in.size(); ++i) in.samples[i] = std::exp(-in.time(i));
    const double g1 = convergence_gap(ModelKind::Reduced, q, c, in, {}, 2);
    const double g2 = convergence_gap(ModelKind::Reduced, q, c, in, {}, 4);
    CHECK(g1 > 0.0);
    CHECK(g1 / g2 > 10.0);
    CHECK(g1 / g2 < 24.0);
}

TEST_CASE("full model refuses an unresolved step")
{
    const PhysicalParams q = cell();
    const ControlSchedule c = ControlSchedule::constant(0.0, 1.0, 11, cplx{}, 0.0, 0.0);
    const Envelope in = Envelope::zeros(0.0, 1.0, 11);
    IntegratorOptions opts;
    opts.max_substeps = 4;
    CHECK_THROWS_AS(propagate_full(q, c, in, {}, opts), StiffnessError);
    CHECK_NOTHROW(propagate_reduced(q, c, in, 1.0, 0.0, opts));
}

TEST_CASE("mismatched grids are rejected")
{
    const PhysicalParams q = cell();
    const ControlSchedule c = ControlSchedule::constant(0.0, 0.1, 11, cplx{}, 0.0, 0.0);
    CHECK_THROWS_AS(propagate_reduced(q, c, Envelope::zeros(0.0, 0.1, 12)), GridMismatch);
    CHECK_THROWS_AS(propagate_reduced(q, c, Envelope::zeros(0.5, 0.1, 11)), GridMismatch);
    ControlSchedule bad = c;
    bad.delta_k.pop_back();
    CHECK_THROWS_AS(propagate_reduced(q, bad, Envelope::zeros(0.0, 0.1, 11)), GridMismatch);
}

TEST_CASE("reduced model warns when elimination is marginal")
{
    PhysicalParams q = cell();
    q.gamma_p = 1.0;
    q.cooperativity = 1.0;
    const ControlSchedule c = ControlSchedule::constant(0.0, 0.1, 11, cplx{}, 0.0, 0.0);
    std::vector<std::string> w;
    propagate_reduced(q, c, Envelope::zeros(0.0, 0.1, 11), 1.0, 0.0, {}, &w);
    CHECK(w.size() == 1);
}

TEST_CASE("parameter validation")
{
    PhysicalParams q = cell();
    CHECK(q.validate());
    q.gamma_k = 1.0;
    CHECK_FALSE(q.validate());
    q.gamma_s = -1.0;
    CHECK_THROWS_AS(q.validate(), ConfigError);
    PhysicalParams z = cell();
    z.gamma_p = 0.0;
    CHECK_THROWS_AS(z.validate(), ConfigError);
    CHECK(exchange_rate_from_microscopic(2e-3, 4.0, 9.0) == doctest::Approx(1.2e-2));
}
