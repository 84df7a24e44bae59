#pragma once

#include <optional>
#include <string>
#include <vector>

#include "nobleqm/kernels.hpp"
#include "nobleqm/model.hpp"
#include "nobleqm/types.hpp"

namespace nobleqm {

struct Stage {
    std::string label;
    ControlSchedule schedule;
    double expected_duration = 0.0;

    double t_begin() const { return schedule.t0; }
    double t_end() const { return schedule.t_end(); }
};

/// Ordered stages of a storage (or retrieval) sequence. The hold between
/// storage and retrieval is not a stage: K decays analytically at
/// decoupled_relaxation(hold_delta).
struct ProtocolPlan {
    std::vector<Stage> stages;
    Scheme scheme = Scheme::Sequential;
    double hold_delta = 0.0;
    double hold_duration = 0.0;
    bool retrieval = false;

    /// Throws GridMismatch if consecutive stages leave a gap or overlap.
    void check() const;
    double t_begin() const { return stages.front().t_begin(); }
    double t_end() const { return stages.back().t_end(); }
};

enum class ControlShape { Constant, Matched };

struct PlanOptions {
    ControlShape shape = ControlShape::Constant;
    /// K is decoupled during alkali storage by delta_k = ratio * J.
    double decouple_ratio = 100.0;
    std::size_t swap_intervals = 256;
    /// Hold detuning in units of J sqrt(gamma_s / gamma_k); 1e3 * J when gamma_k = 0.
    double hold_delta_factor = 10.0;
    /// Used when shape == Matched.
    MatchOptions match;
};

/// Storage stage on the input grid with gamma_omega (Constant) or the
/// matched alkali kernel, then a resonant pi/(2J) swap with Omega = 0.
/// Throws InvalidRegime for gamma_omega <= 0 or J <= 0.
ProtocolPlan build_sequential(const PhysicalParams &params, const Envelope &input, double T,
                              double gamma_omega, const PlanOptions &opts = {},
                              std::vector<std::string> *warnings = nullptr);

/// Single resonant storage stage, gamma_Omega = T J^2 - gamma_s or the
/// matched noble-gas kernel. Throws InvalidRegime.
ProtocolPlan build_adiabatic(const PhysicalParams &params, const Envelope &input, double T,
                             const PlanOptions &opts = {},
                             std::vector<std::string> *warnings = nullptr);

/// Stages in reverse order, each schedule reflected in time about the plan
/// span: Omega conjugated and reversed, detunings reversed.
ProtocolPlan build_retrieval(const ProtocolPlan &plan);

double default_hold_delta(const PhysicalParams &params, double factor = 10.0);

struct StageRun {
    std::string label;
    Trajectory trajectory;
};

struct MemoryOptions {
    ModelKind model = ModelKind::Reduced;
    IntegratorOptions integrator;
};

struct MemoryResult {
    double photons_in = 0.0;
    double eta_store = 0.0;     ///< |K|^2 / N after the storage stages
    double eta_retrieve = 0.0;  ///< emitted photons / excitations at retrieval start
    double eta_total = 0.0;     ///< emitted photons / N
    double eta_matched = 0.0;   ///< |<reversed input mode, output>|^2 / N
    double hold_factor = 1.0;   ///< amplitude factor applied to K during the hold
    cplx stored_k{};
    Envelope output;            ///< field emitted during the last retrieval stage
    std::vector<StageRun> storage;
    std::vector<StageRun> retrieval;
    std::vector<std::string> warnings;
};

/// Runs storage, the analytic hold and time-reversed retrieval. Throws
/// NotNormalized for an input without photons.
MemoryResult run_memory(const PhysicalParams &params, const Envelope &input,
                        const ProtocolPlan &plan, double hold_duration,
                        const MemoryOptions &opts = {});

} // namespace nobleqm
