#pragma once

#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "nobleqm/control.hpp"
#include "nobleqm/protocols.hpp"
#include "nobleqm/types.hpp"

namespace nobleqm {

/// Shortest text that parses back to the same double.
std::string format_double(double v);

// Every reader throws ConfigError on malformed input.

void write_envelope(std::ostream &os, const Envelope &env);
Envelope read_envelope(std::istream &is);

/// One "# stage" block; a plain schedule is a plan with one stage.
void write_schedule(std::ostream &os, const ControlSchedule &c, const std::string &label = "control",
                    double expected_duration = 0.0);
void write_plan(std::ostream &os, const ProtocolPlan &plan);
ProtocolPlan read_plan(std::istream &is);

void write_trajectory(std::ostream &os, const Trajectory &tr);
void write_history(std::ostream &os, const std::vector<std::pair<int, double>> &history);

enum class MapTable { Optimized, Analytic, Difference };
void write_map_table(std::ostream &os, const EfficiencyMap &map, MapTable which);

/// key = value report. A null result reports every efficiency as undefined.
void write_memory_summary(std::ostream &os, const MemoryResult *result, Scheme scheme);

} // namespace nobleqm
