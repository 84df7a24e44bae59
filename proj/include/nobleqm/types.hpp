#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <string>
#include <vector>

#include "nobleqm/errors.hpp"

namespace nobleqm {

using cplx = std::complex<double>;
inline constexpr cplx I{0.0, 1.0};
inline constexpr double PI = 3.14159265358979323846;

/// Rate and coupling constants of one alkali / noble-gas memory cell.
/// All rates are amplitude decay rates in s^-1.
struct PhysicalParams {
    double gamma_p = 1.0;       ///< optical-dipole dephasing
    double gamma_s = 0.0;       ///< alkali spin relaxation
    double gamma_k = 0.0;       ///< noble-gas spin relaxation
    double cooperativity = 0.0; ///< optical cooperativity C
    double exchange_J = 0.0;    ///< collective spin-exchange rate
    double delta_cav = 0.0;     ///< optical detuning from cavity resonance

    /// Throws ConfigError on a hard invariant violation. Returns false
    /// (without throwing) when gamma_k > gamma_s, which is allowed but
    /// outside the intended regime.
    bool validate() const;

    /// gamma_p (1 + C), the total optical-dipole decay rate.
    double dipole_rate() const { return gamma_p * (1.0 + cooperativity); }
    /// sqrt(2 gamma_p C), the cavity input/output coupling.
    double io_coupling() const { return std::sqrt(2.0 * gamma_p * cooperativity); }
    /// C / (C + 1), the finite-cooperativity efficiency ceiling.
    double cooperativity_factor() const { return cooperativity / (cooperativity + 1.0); }
};

/// Uniformly sampled complex field amplitude in s^-1/2.
struct Envelope {
    double t0 = 0.0;
    double dt = 1.0;
    std::vector<cplx> samples;

    Envelope() = default;
    Envelope(double t0, double dt, std::vector<cplx> samples)
        : t0(t0), dt(dt), samples(std::move(samples)) {}
    static Envelope zeros(double t0, double dt, std::size_t n)
    {
        return Envelope(t0, dt, std::vector<cplx>(n, cplx{}));
    }

    std::size_t size() const { return samples.size(); }
    double time(std::size_t i) const { return t0 + dt * static_cast<double>(i); }
    double t_end() const { return samples.empty() ? t0 : time(samples.size() - 1); }
    double duration() const { return t_end() - t0; }
};

/// Linear: controls interpolate between samples. Hold: sample i applies on
/// [t_i, t_{i+1}) and the last sample is unused.
enum class Interpolation { Linear, Hold };

/// Time-sampled control waveforms sharing the envelope grid.
struct ControlSchedule {
    double t0 = 0.0;
    double dt = 1.0;
    std::vector<cplx> omega;      ///< Rabi frequency, s^-1
    std::vector<double> delta_s;  ///< Raman detuning, s^-1
    std::vector<double> delta_k;  ///< overall detuning, s^-1
    Interpolation interp = Interpolation::Linear;

    static ControlSchedule constant(double t0, double dt, std::size_t n, cplx omega,
                                    double delta_s, double delta_k)
    {
        return ControlSchedule{t0, dt, std::vector<cplx>(n, omega),
                               std::vector<double>(n, delta_s),
                               std::vector<double>(n, delta_k)};
    }

    std::size_t size() const { return omega.size(); }
    double time(std::size_t i) const { return t0 + dt * static_cast<double>(i); }
    double t_end() const { return omega.empty() ? t0 : time(omega.size() - 1); }
    /// S-K frequency mismatch delta_k - delta_s at sample i.
    double mismatch(std::size_t i) const { return delta_k[i] - delta_s[i]; }
    /// Throws GridMismatch if the channels have different lengths.
    void check() const;
};

/// Complex amplitudes of the optical dipole P, alkali spin S and noble-gas spin K.
struct ModeState {
    cplx p{};
    cplx s{};
    cplx k{};
};

enum class ModelKind { Full, Reduced };

/// Sampled solution of one propagation run. loss_* and n_in/n_out are
/// running integrals accumulated by the integrator alongside the state.
struct Trajectory {
    ModelKind model = ModelKind::Full;
    double t0 = 0.0;
    double dt = 1.0;
    std::vector<cplx> p, s, k;
    Envelope e_out;
    std::vector<double> loss_p, loss_s, loss_k;
    std::vector<double> n_in, n_out;

    std::size_t size() const { return s.size(); }
    double time(std::size_t i) const { return t0 + dt * static_cast<double>(i); }
    ModeState final_state() const { return {p.back(), s.back(), k.back()}; }
};

/// Grid equality up to rounding of t0 and dt.
bool same_grid(double t0a, double dta, std::size_t na, double t0b, double dtb, std::size_t nb);

inline void require_same_grid(const Envelope &a, const Envelope &b, const char *what)
{
    if (!same_grid(a.t0, a.dt, a.size(), b.t0, b.dt, b.size()))
        throw GridMismatch(std::string(what) + ": envelopes are on different grids");
}

} // namespace nobleqm
