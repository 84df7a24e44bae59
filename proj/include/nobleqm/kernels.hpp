#pragma once

#include <optional>
#include <string>
#include <vector>

#include "nobleqm/types.hpp"

namespace nobleqm {

enum class KernelKind { AlkaliStorage, NobleStorage };
enum class Scheme { Sequential, Adiabatic };

/// Physical kernels carry the finite-cooperativity factor C/(C+1); Ideal
/// kernels are the C -> infinity limit used for eta_inf.
enum class Normalization { Physical, Ideal };

const char *to_string(Scheme s);

/// Linear storage map: stored amplitude = integral of h(t) e_in(t) dt.
struct KernelSeries {
    double t0 = 0.0;
    double dt = 1.0;
    std::vector<cplx> h;
    KernelKind kind = KernelKind::AlkaliStorage;

    std::size_t size() const { return h.size(); }
    /// Trapezoidal integral of |h|^2, the best efficiency any input can reach.
    double norm2() const;
};

/// Stimulated alkali rate |Omega|^2 / [gamma_p (C + 1)].
double gamma_omega(cplx omega, const PhysicalParams &params);

/// Stimulated noble-gas rate J^2 / (gamma_omega + gamma_s).
/// Throws DegenerateRates when the denominator vanishes.
double gamma_j(const PhysicalParams &params, double gamma_om);

/// Rabi frequency magnitude producing the stimulated rate gamma_om.
double omega_for_gamma(double gamma_om, const PhysicalParams &params);

/// a_Omega in the form -sqrt(2 gamma_p C) Omega* / [gamma_p (C + 1)], finite at Omega = 0.
cplx alkali_prefactor(cplx omega, const PhysicalParams &params, Normalization norm);

KernelSeries build_kernel(KernelKind kind, const ControlSchedule &schedule,
                          const PhysicalParams &params,
                          Normalization norm = Normalization::Physical,
                          std::vector<std::string> *warnings = nullptr);

/// |integral h e_in dt|^2 for a one-photon input. Throws NotNormalized
/// when the input photon number differs from 1 by more than 1e-6.
double kernel_efficiency(const KernelSeries &kernel, const Envelope &input);

struct MatchOptions {
    /// Fraction of the attainable efficiency left unused at the window
    /// start. Zero would need an unbounded control there.
    double residual = 1e-3;
    /// Requested ideal efficiency; overrides `residual` when set.
    std::optional<double> target;
    /// Alkali storage decouples K with delta_k = ratio * J.
    double decouple_ratio = 100.0;
};

/// Control whose kernel h*(t) follows the input amplitude. The schedule is
/// on the input grid. Throws Unreachable with the offending interval when
/// the requested kernel would need an unattainable stimulated rate.
ControlSchedule shape_control_matched(const Envelope &input, const PhysicalParams &params,
                                      KernelKind kind, const MatchOptions &opts = {});

/// Ideal kernel efficiency the matched control reaches (before C/(C+1)).
double matched_efficiency(const Envelope &input, const PhysicalParams &params, KernelKind kind,
                          const MatchOptions &opts = {});

/// Intensity transferred S -> K by a resonant pi/(2J) exchange stage,
/// exp(-pi gamma_s / (2 J)). Throws InvalidRegime for J <= 0.
double swap_transfer_efficiency(const PhysicalParams &params);

/// Noble-gas decay rate while detuned by delta from the alkali spin:
/// J^2 gamma_s / (gamma_s^2 + delta^2) + gamma_k.
double decoupled_relaxation(const PhysicalParams &params, double delta);

/// Constant gamma_Omega prescribed for an exponential pulse of duration T:
/// 1/T - gamma_s (sequential) or T J^2 - gamma_s (adiabatic).
/// Throws InvalidRegime if not positive.
double prescribed_gamma_omega(Scheme scheme, const PhysicalParams &params, double T);

/// eta_inf of the scheme with the prescribed constant control on the
/// exponential test pulse, evaluated as a kernel overlap integral.
double analytic_efficiency(Scheme scheme, const PhysicalParams &params, double T,
                           double dt_over_T = 1e-3);

} // namespace nobleqm
