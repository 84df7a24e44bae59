#pragma once

#include "nobleqm/types.hpp"

namespace nobleqm {

enum class PulseShape { ExponentialRising, Custom };

struct PulseSpec {
    PulseShape shape = PulseShape::ExponentialRising;
    double duration_T = 1.0;
    double photons = 1.0;
    double t_start = -2.0; ///< window start, relative to T for ExponentialRising
    double t_end = 1.0;
};

/// Closed-form prefactor A making A sqrt(2/T) exp((t-T)/T) integrate to
/// `photons` over [-2T, T].
double exponential_amplitude_constant(double T, double photons);

/// Rising exponential with intensity proportional to exp((t-T)/T) on
/// [-2T, T], real positive amplitude, normalized so the trapezoidal photon
/// number equals `photons`. The grid step is shrunk (never grown) so that
/// the window is covered exactly. Throws ResolutionError if dt > T/100.
Envelope exponential_input(double T, double photons, double dt);

/// Trapezoidal integral of |e|^2.
double photon_number(const Envelope &env);

/// Trapezoidal integral of conj(a) b. Throws GridMismatch.
cplx mode_overlap(const Envelope &a, const Envelope &b);

/// Samples reversed and conjugated about the window midpoint.
Envelope time_reverse(const Envelope &env);

Envelope scaled(const Envelope &env, cplx factor);

} // namespace nobleqm
