#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>

#include "nobleqm/control.hpp"
#include "nobleqm/kernels.hpp"
#include "nobleqm/model.hpp"
#include "nobleqm/protocols.hpp"
#include "nobleqm/pulses.hpp"

namespace nobleqm {

/// Everything one CLI run needs. Loaded from flat "key = value" text where
/// every dimensional key carries its unit (gamma_s_per_s, pulse_T_s, ...).
struct ScenarioConfig {
    PhysicalParams params;
    PulseSpec pulse;
    Scheme scheme = Scheme::Sequential;
    ControlShape shape = ControlShape::Constant;
    double gamma_omega = 1e4;   ///< constant-shape stimulated rate, s^-1
    double dt = 0.0;            ///< grid step, s; 0 picks T / 1000
    double hold_duration = 0.0; ///< s
    double hold_delta = 0.0;    ///< s^-1; 0 picks the default decoupling
    ModelKind model = ModelKind::Reduced;

    // optimize
    double opt_gs_T = 0.1;
    double opt_J_over_gs = 10.0;
    int random_starts = 0;

    MapConfig map;
    double map_gs_T_min = 1e-2, map_gs_T_max = 1e2;
    std::size_t map_gs_T_n = 21;
    double map_J_over_gs_min = 1e-1, map_J_over_gs_max = 1e2;
    std::size_t map_J_over_gs_n = 21;

    std::string out_dir = "out";
    std::uint64_t seed = 1;

    // Bookkeeping only: species densities in cm^-3.
    double n_alkali_per_cm3 = 0.0;
    double n_noble_per_cm3 = 0.0;

    MapGrid grid() const
    {
        return MapGrid::log_spaced(map_gs_T_min, map_gs_T_max, map_gs_T_n, map_J_over_gs_min,
                                   map_J_over_gs_max, map_J_over_gs_n);
    }
    double grid_dt() const { return dt > 0.0 ? dt : pulse.duration_T / 1000.0; }

    /// Throws ConfigError.
    void validate() const;
};

/// Throws ConfigError on unknown or repeated keys and malformed values.
ScenarioConfig parse_config(std::istream &is);
ScenarioConfig load_config(const std::string &path);
void write_config(std::ostream &os, const ScenarioConfig &cfg);

/// Helium-3 / potassium cell: J = 1000 s^-1, gamma_s = 17 s^-1, C = 100,
/// 1/gamma_k = 100 h, T = 15 us (sequential) or 15 ms (adiabatic).
ScenarioConfig preset_helium(Scheme scheme);

/// Input pulse of the scenario on its grid.
Envelope scenario_input(const ScenarioConfig &cfg);

} // namespace nobleqm
