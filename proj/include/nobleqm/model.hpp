#pragma once

#include <string>
#include <vector>

#include "nobleqm/types.hpp"

namespace nobleqm {

/// Collective exchange rate J = zeta * sqrt(n_a n_b) from the per-pair
/// collision constant and the atom numbers of both species.
double exchange_rate_from_microscopic(double zeta, double n_a, double n_b);

/// Control values at one instant.
struct ControlSample {
    cplx omega{};
    double delta_s = 0.0;
    double delta_k = 0.0;
};

/// Right-hand side of the three-mode equations of motion.
ModeState rhs_full(const ModeState &state, const ControlSample &u, cplx e_in,
                   const PhysicalParams &params);

/// Optical dipole slaved to the alkali spin and the input field once its
/// time derivative is set to zero.
cplx eliminated_dipole(cplx s, cplx omega, cplx e_in, const PhysicalParams &params);

/// Right-hand side of the two-mode (S, K) system with P eliminated. The
/// p member of the result carries the slaved dipole value, not a derivative.
ModeState rhs_reduced(cplx s, cplx k, const ControlSample &u, cplx e_in,
                      const PhysicalParams &params);

struct IntegratorOptions {
    /// RK4 substeps per grid interval; 0 picks the count from the fastest rate
    /// and from how much the sampled controls and input change per step.
    int substeps = 0;
    /// Target h * rate when the substep count is chosen automatically.
    double step_rate = 0.1;
    /// Full model only: largest admissible h * rate before StiffnessError.
    double stiffness_bound = 2.5;
    /// Full model only: automatic substepping gives up beyond this count.
    int max_substeps = 64;
    /// Reduced model warns when gamma_p C times the window is below this.
    double elimination_warn = 10.0;
};

/// Fastest rate the integrator has to resolve for the given controls.
double fastest_rate(const PhysicalParams &params, const ControlSchedule &schedule, ModelKind model);

/// RK4 integration of the full three-mode model. The output field and the
/// dissipated-excitation integrals are accumulated with the state.
Trajectory propagate_full(const PhysicalParams &params, const ControlSchedule &schedule,
                          const Envelope &input, const ModeState &init = {},
                          const IntegratorOptions &opts = {},
                          std::vector<std::string> *warnings = nullptr);

/// RK4 integration of the two-mode model with the dipole eliminated.
Trajectory propagate_reduced(const PhysicalParams &params, const ControlSchedule &schedule,
                             const Envelope &input, cplx s0 = {}, cplx k0 = {},
                             const IntegratorOptions &opts = {},
                             std::vector<std::string> *warnings = nullptr);

/// e_out = e_in + i sqrt(2 gamma_p C) p, pointwise.
Envelope output_field(const Trajectory &trajectory, const Envelope &input,
                      const PhysicalParams &params);

/// N_in + E(0) - [N_out + E(t_end) + losses], where E is the stored
/// excitation number (|P|^2 counted only for the full model). Zero for the
/// exact dynamics; the returned value is the integration error.
double flux_balance(const Trajectory &trajectory, const Envelope &input);

/// Largest change of the final (S, K) amplitudes when the substep count is
/// doubled from `substeps`.
double convergence_gap(ModelKind model, const PhysicalParams &params,
                       const ControlSchedule &schedule, const Envelope &input,
                       const ModeState &init, int substeps);

} // namespace nobleqm
