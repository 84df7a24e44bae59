#include "nobleqm/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "nobleqm/pulses.hpp"

namespace nobleqm {

const char *to_string(Scheme s)
{
    return s == Scheme::Sequential ? "sequential" : "adiabatic";
}

double KernelSeries::norm2() const
{
    if (h.size() < 2) return 0.0;
    double acc = 0.5 * (std::norm(h.front()) + std::norm(h.back()));
    for (std::size_t i = 1; i + 1 < h.size(); ++i) acc += std::norm(h[i]);
    return acc * dt;
}

double gamma_omega(cplx omega, const PhysicalParams &params)
{
    return std::norm(omega) / params.dipole_rate();
}

double gamma_j(const PhysicalParams &params, double gamma_om)
{
    const double denom = gamma_om + params.gamma_s;
    if (!(denom > 0.0)) {
        if (params.exchange_J == 0.0) return 0.0;
        throw DegenerateRates("gamma_J undefined: gamma_Omega + gamma_s = 0");
    }
    return params.exchange_J * params.exchange_J / denom;
}

double omega_for_gamma(double gamma_om, const PhysicalParams &params)
{
    return std::sqrt(std::max(gamma_om, 0.0) * params.dipole_rate());
}

cplx alkali_prefactor(cplx omega, const PhysicalParams &params, Normalization norm)
{
    const double coupling = norm == Normalization::Ideal
                                ? std::sqrt(2.0 * params.dipole_rate())
                                : params.io_coupling();
    return -coupling * std::conj(omega) / params.dipole_rate();
}

KernelSeries build_kernel(KernelKind kind, const ControlSchedule &schedule,
                          const PhysicalParams &params, Normalization norm,
                          std::vector<std::string> *warnings)
{
    schedule.check();
    const std::size_t n = schedule.size();
    KernelSeries ker;
    ker.t0 = schedule.t0;
    ker.dt = schedule.dt;
    ker.kind = kind;
    ker.h.assign(n, cplx{});
    if (n == 0) return ker;

    const double J = params.exchange_J;
    std::vector<double> rate(n);
    std::vector<cplx> prefactor(n);
    double min_gamma_om = std::numeric_limits<double>::infinity();
    bool detuned = false;
    for (std::size_t i = 0; i < n; ++i) {
        const double g_om = gamma_omega(schedule.omega[i], params);
        const cplx a_om = alkali_prefactor(schedule.omega[i], params, norm);
        if (kind == KernelKind::AlkaliStorage) {
            rate[i] = params.gamma_s + g_om;
            prefactor[i] = a_om;
        } else {
            const double denom = g_om + params.gamma_s;
            if (!(denom > 0.0) && J > 0.0)
                throw DegenerateRates("noble kernel: gamma_Omega + gamma_s = 0 at t = " +
                                      std::to_string(schedule.time(i)));
            const double ratio = denom > 0.0 ? J / denom : 0.0; // gamma_J / J
            rate[i] = params.gamma_k + J * ratio;
            prefactor[i] = I * a_om * ratio;
            min_gamma_om = std::min(min_gamma_om, g_om);
            detuned = detuned || std::abs(schedule.mismatch(i)) > 1e-12 * std::max(J, 1.0);
        }
    }
    if (warnings && kind == KernelKind::NobleStorage) {
        if (detuned) warnings->push_back("noble kernel assumes delta = 0; schedule is detuned");
        if (min_gamma_om < 10.0 * J)
            warnings->push_back("noble kernel assumes gamma_Omega >> J; min gamma_Omega = " +
                                std::to_string(min_gamma_om));
    }

    // decay = integral from t_i to the window end, trapezoidal
    double decay = 0.0;
    ker.h[n - 1] = prefactor[n - 1];
    for (std::size_t i = n - 1; i-- > 0;) {
        decay += 0.5 * (rate[i] + rate[i + 1]) * schedule.dt;
        ker.h[i] = prefactor[i] * std::exp(-decay);
    }
    return ker;
}

double kernel_efficiency(const KernelSeries &kernel, const Envelope &input)
{
    if (!same_grid(kernel.t0, kernel.dt, kernel.size(), input.t0, input.dt, input.size()))
        throw GridMismatch("kernel_efficiency: kernel and input are on different grids");
    const double n = photon_number(input);
    if (std::abs(n - 1.0) > 1e-6) {
        std::ostringstream os;
        os << "kernel_efficiency expects a one-photon input, got N = " << n;
        throw NotNormalized(os.str());
    }
    const std::size_t m = input.size();
    if (m < 2) return 0.0;
    cplx acc = 0.5 * (kernel.h.front() * input.samples.front() + kernel.h.back() * input.samples.back());
    for (std::size_t i = 1; i + 1 < m; ++i) acc += kernel.h[i] * input.samples[i];
    return std::norm(acc * input.dt);
}

namespace {

struct MatchedProfile {
    double efficiency = 0.0;         // ideal kernel efficiency reached
    std::vector<double> gamma_om;    // stimulated alkali rate per sample
};

// Alkali storage: |h|^2 = 2 gamma_Omega F with F = exp(-2 int_t^T (gamma_s + gamma_Omega)).
// Requiring |h|^2 = eta w(t) makes F linear in eta and solvable in closed form.
MatchedProfile match_alkali(const Envelope &in, const std::vector<double> &w, double gs,
                            const MatchOptions &opts)
{
    const std::size_t n = in.size();
    const double damp = std::exp(-2.0 * gs * in.dt);
    std::vector<double> G(n), Iw(n);
    G[n - 1] = 1.0;
    Iw[n - 1] = 0.0;
    for (std::size_t i = n - 1; i-- > 0;) {
        G[i] = G[i + 1] * damp;
        Iw[i] = damp * Iw[i + 1] + 0.5 * in.dt * (w[i] + w[i + 1] * damp);
    }
    if (!(Iw[0] > 0.0)) throw Unreachable("matched shaping: input carries no photons", in.t0, in.t_end());

    const double eta = opts.target ? *opts.target : (1.0 - opts.residual) * G[0] / Iw[0];
    MatchedProfile out;
    out.efficiency = eta;
    out.gamma_om.resize(n);
    std::size_t last_bad = n;
    for (std::size_t i = 0; i < n; ++i) {
        const double F = G[i] - eta * Iw[i];
        if (!(F > 0.0)) {
            last_bad = i;
            continue;
        }
        out.gamma_om[i] = eta * w[i] / (2.0 * F);
    }
    if (last_bad != n) {
        std::ostringstream os;
        os << "matched alkali storage of efficiency " << eta << " needs gamma_Omega < 0";
        throw Unreachable(os.str(), in.t0, in.time(last_bad));
    }
    return out;
}

// Noble storage: |h|^2 = 2 q (1 - gamma_s q / J^2) F with q = gamma_J and
// F = exp(-2 int_t^T (gamma_k + q)). Integrated backwards with Heun steps;
// the efficiency is found by bisection on the start-of-window residual.
struct NobleSweep {
    bool ok = true;
    std::size_t bad_index = 0;
    double f_start = 0.0;
    std::vector<double> q;
};

NobleSweep sweep_noble(const Envelope &in, const std::vector<double> &w, const PhysicalParams &p,
                       double eta)
{
    const std::size_t n = in.size();
    const double J2 = p.exchange_J * p.exchange_J;
    const double c = p.gamma_s / J2;
    NobleSweep s;
    s.q.assign(n, 0.0);
    auto solve_q = [&](double F, double wi, double &q) {
        const double rhs = eta * wi / (2.0 * F); // q - c q^2
        if (c == 0.0) {
            q = rhs;
            return true;
        }
        const double disc = 1.0 - 4.0 * c * rhs;
        if (disc < 0.0) return false;
        q = 2.0 * rhs / (1.0 + std::sqrt(disc)); // smaller root, large gamma_Omega
        return true;
    };
    double F = 1.0;
    if (!solve_q(F, w[n - 1], s.q[n - 1])) {
        s.ok = false;
        s.bad_index = n - 1;
        return s;
    }
    for (std::size_t i = n - 1; i-- > 0;) {
        const double Fp = F * std::exp(-2.0 * (p.gamma_k + s.q[i + 1]) * in.dt);
        double qp = 0.0;
        if (!(Fp > 0.0) || !solve_q(Fp, w[i], qp)) {
            s.ok = false;
            s.bad_index = i;
            return s;
        }
        const double Fc = F * std::exp(-(2.0 * p.gamma_k + s.q[i + 1] + qp) * in.dt);
        if (!(Fc > 0.0) || !solve_q(Fc, w[i], s.q[i])) {
            s.ok = false;
            s.bad_index = i;
            return s;
        }
        F = Fc;
    }
    s.f_start = F;
    return s;
}

MatchedProfile match_noble(const Envelope &in, const std::vector<double> &w, const PhysicalParams &p,
                           const MatchOptions &opts)
{
    if (!(p.exchange_J > 0.0))
        throw Unreachable("matched noble storage needs J > 0", in.t0, in.t_end());
    const std::size_t n = in.size();
    const double window = in.t_end() - in.t0;
    const double floor_f = opts.residual * std::exp(-2.0 * p.gamma_k * window);

    NobleSweep best;
    double eta = 0.0;
    if (opts.target) {
        eta = *opts.target;
        best = sweep_noble(in, w, p, eta);
        if (!best.ok) {
            std::ostringstream os;
            os << "matched noble storage of efficiency " << eta << " is not attainable";
            throw Unreachable(os.str(), in.t0, in.time(best.bad_index));
        }
    } else {
        double lo = 0.0, hi = 1.0;
        best = sweep_noble(in, w, p, 0.0);
        for (int it = 0; it < 80; ++it) {
            const double mid = 0.5 * (lo + hi);
            NobleSweep s = sweep_noble(in, w, p, mid);
            if (s.ok && s.f_start >= floor_f) {
                lo = mid;
                best = std::move(s);
            } else {
                hi = mid;
            }
        }
        eta = lo;
    }

    MatchedProfile out;
    out.efficiency = eta;
    out.gamma_om.resize(n);
    const double J2 = p.exchange_J * p.exchange_J;
    // where the input vanishes q -> 0; cap gamma_Omega well above the largest useful value
    double cap = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        if (best.q[i] > 0.0) cap = std::max(cap, J2 / best.q[i]);
    cap = std::max(cap, 1.0) * 10.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double g = best.q[i] > 0.0 ? J2 / best.q[i] - p.gamma_s : cap;
        if (g < 0.0) {
            std::ostringstream os;
            os << "matched noble storage needs gamma_Omega < 0 at t = " << in.time(i);
            throw Unreachable(os.str(), in.time(i), in.time(i));
        }
        out.gamma_om[i] = std::min(g, cap);
    }
    return out;
}

MatchedProfile match(const Envelope &input, const PhysicalParams &params, KernelKind kind,
                     const MatchOptions &opts)
{
    if (input.size() < 2) throw Unreachable("matched shaping needs at least two samples", input.t0, input.t0);
    if (!(opts.residual > 0.0 && opts.residual < 1.0) && !opts.target)
        throw Unreachable("matched shaping residual must lie in (0, 1)", input.t0, input.t_end());
    const double n_in = photon_number(input);
    if (!(n_in > 0.0)) throw Unreachable("matched shaping: input carries no photons", input.t0, input.t_end());
    std::vector<double> w(input.size());
    for (std::size_t i = 0; i < w.size(); ++i) w[i] = std::norm(input.samples[i]) / n_in;
    return kind == KernelKind::AlkaliStorage ? match_alkali(input, w, params.gamma_s, opts)
                                             : match_noble(input, w, params, opts);
}

} // namespace

ControlSchedule shape_control_matched(const Envelope &input, const PhysicalParams &params,
                                      KernelKind kind, const MatchOptions &opts)
{
    const MatchedProfile prof = match(input, params, kind, opts);
    const std::size_t n = input.size();
    const double dk = kind == KernelKind::AlkaliStorage ? opts.decouple_ratio * params.exchange_J : 0.0;
    ControlSchedule c = ControlSchedule::constant(input.t0, input.dt, n, cplx{}, 0.0, dk);
    for (std::size_t i = 0; i < n; ++i) {
        const double mag = omega_for_gamma(prof.gamma_om[i], params);
        const double phase = std::abs(input.samples[i]) > 0.0 ? std::arg(input.samples[i]) : 0.0;
        c.omega[i] = std::polar(mag, phase);
    }
    return c;
}

double matched_efficiency(const Envelope &input, const PhysicalParams &params, KernelKind kind,
                          const MatchOptions &opts)
{
    return match(input, params, kind, opts).efficiency;
}

double swap_transfer_efficiency(const PhysicalParams &params)
{
    if (!(params.exchange_J > 0.0)) throw InvalidRegime("swap needs J > 0");
    return std::exp(-PI * params.gamma_s / (2.0 * params.exchange_J));
}

double decoupled_relaxation(const PhysicalParams &params, double delta)
{
    const double J = params.exchange_J, gs = params.gamma_s;
    const double denom = gs * gs + delta * delta;
    const double induced = denom > 0.0 ? J * J * gs / denom : 0.0;
    return induced + params.gamma_k;
}

double prescribed_gamma_omega(Scheme scheme, const PhysicalParams &params, double T)
{
    const double g = scheme == Scheme::Sequential
                         ? 1.0 / T - params.gamma_s
                         : T * params.exchange_J * params.exchange_J - params.gamma_s;
    if (!(g > 0.0)) {
        std::ostringstream os;
        os << to_string(scheme) << " prescription gives gamma_Omega = " << g << " <= 0";
        throw InvalidRegime(os.str());
    }
    return g;
}

double analytic_efficiency(Scheme scheme, const PhysicalParams &params, double T, double dt_over_T)
{
    const double g_om = prescribed_gamma_omega(scheme, params, T);
    const Envelope in = exponential_input(T, 1.0, dt_over_T * T);
    const double omega = omega_for_gamma(g_om, params);
    if (scheme == Scheme::Sequential) {
        const double swap = swap_transfer_efficiency(params);
        const ControlSchedule c = ControlSchedule::constant(in.t0, in.dt, in.size(), omega, 0.0,
                                                            100.0 * params.exchange_J);
        const KernelSeries ker = build_kernel(KernelKind::AlkaliStorage, c, params, Normalization::Ideal);
        return kernel_efficiency(ker, in) * swap;
    }
    const ControlSchedule c = ControlSchedule::constant(in.t0, in.dt, in.size(), omega, 0.0, 0.0);
    const KernelSeries ker = build_kernel(KernelKind::NobleStorage, c, params, Normalization::Ideal);
    return kernel_efficiency(ker, in);
}

} // namespace nobleqm
