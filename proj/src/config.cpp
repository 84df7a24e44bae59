#include "nobleqm/config.hpp"

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include "nobleqm/textio.hpp"

namespace nobleqm {

namespace {

std::string trim(const std::string &s)
{
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

double to_double(const std::string &key, const std::string &v)
{
    char *end = nullptr;
    const double d = std::strtod(v.c_str(), &end);
    if (v.empty() || *end != '\0' || !std::isfinite(d))
        throw ConfigError("key '" + key + "': '" + v + "' is not a finite number");
    return d;
}

long long to_int(const std::string &key, const std::string &v)
{
    char *end = nullptr;
    const long long i = std::strtoll(v.c_str(), &end, 10);
    if (v.empty() || *end != '\0') throw ConfigError("key '" + key + "': '" + v + "' is not an integer");
    return i;
}

std::size_t to_count(const std::string &key, const std::string &v)
{
    const long long i = to_int(key, v);
    if (i < 1) throw ConfigError("key '" + key + "' must be at least 1");
    return static_cast<std::size_t>(i);
}

bool to_bool(const std::string &key, const std::string &v)
{
    if (v == "true" || v == "1") return true;
    if (v == "false" || v == "0") return false;
    throw ConfigError("key '" + key + "': expected true or false, got '" + v + "'");
}

using Setter = std::function<void(ScenarioConfig &, const std::string &key, const std::string &value)>;

const std::map<std::string, Setter> &setters()
{
    static const std::map<std::string, Setter> table = {
        {"gamma_p_per_s", [](auto &c, auto &k, auto &v) { c.params.gamma_p = to_double(k, v); }},
        {"gamma_s_per_s", [](auto &c, auto &k, auto &v) { c.params.gamma_s = to_double(k, v); }},
        {"gamma_k_per_s", [](auto &c, auto &k, auto &v) { c.params.gamma_k = to_double(k, v); }},
        {"cooperativity", [](auto &c, auto &k, auto &v) { c.params.cooperativity = to_double(k, v); }},
        {"exchange_J_per_s", [](auto &c, auto &k, auto &v) { c.params.exchange_J = to_double(k, v); }},
        {"delta_cav_per_s", [](auto &c, auto &k, auto &v) { c.params.delta_cav = to_double(k, v); }},
        {"scheme",
         [](auto &c, auto &k, auto &v) {
             if (v == "sequential") c.scheme = Scheme::Sequential;
             else if (v == "adiabatic") c.scheme = Scheme::Adiabatic;
             else throw ConfigError("key '" + k + "': expected sequential or adiabatic, got '" + v + "'");
         }},
        {"control_shape",
         [](auto &c, auto &k, auto &v) {
             if (v == "constant") c.shape = ControlShape::Constant;
             else if (v == "matched") c.shape = ControlShape::Matched;
             else throw ConfigError("key '" + k + "': expected constant or matched, got '" + v + "'");
         }},
        {"model",
         [](auto &c, auto &k, auto &v) {
             if (v == "full") c.model = ModelKind::Full;
             else if (v == "reduced") c.model = ModelKind::Reduced;
             else throw ConfigError("key '" + k + "': expected full or reduced, got '" + v + "'");
         }},
        {"gamma_omega_per_s", [](auto &c, auto &k, auto &v) { c.gamma_omega = to_double(k, v); }},
        {"pulse_T_s", [](auto &c, auto &k, auto &v) { c.pulse.duration_T = to_double(k, v); }},
        {"pulse_photons", [](auto &c, auto &k, auto &v) { c.pulse.photons = to_double(k, v); }},
        {"dt_s", [](auto &c, auto &k, auto &v) { c.dt = to_double(k, v); }},
        {"hold_duration_s", [](auto &c, auto &k, auto &v) { c.hold_duration = to_double(k, v); }},
        {"hold_delta_per_s", [](auto &c, auto &k, auto &v) { c.hold_delta = to_double(k, v); }},
        {"opt_gs_T", [](auto &c, auto &k, auto &v) { c.opt_gs_T = to_double(k, v); }},
        {"opt_J_over_gs", [](auto &c, auto &k, auto &v) { c.opt_J_over_gs = to_double(k, v); }},
        {"opt_max_iter", [](auto &c, auto &k, auto &v) { c.map.ascent.max_iter = static_cast<int>(to_count(k, v)); }},
        {"opt_tol", [](auto &c, auto &k, auto &v) { c.map.ascent.tol = to_double(k, v); }},
        {"opt_free_delta_s", [](auto &c, auto &k, auto &v) { c.map.free_delta_s = to_bool(k, v); }},
        {"opt_random_starts",
         [](auto &c, auto &k, auto &v) { c.random_starts = static_cast<int>(to_int(k, v)); }},
        {"map_gs_T_min", [](auto &c, auto &k, auto &v) { c.map_gs_T_min = to_double(k, v); }},
        {"map_gs_T_max", [](auto &c, auto &k, auto &v) { c.map_gs_T_max = to_double(k, v); }},
        {"map_gs_T_n", [](auto &c, auto &k, auto &v) { c.map_gs_T_n = to_count(k, v); }},
        {"map_J_over_gs_min", [](auto &c, auto &k, auto &v) { c.map_J_over_gs_min = to_double(k, v); }},
        {"map_J_over_gs_max", [](auto &c, auto &k, auto &v) { c.map_J_over_gs_max = to_double(k, v); }},
        {"map_J_over_gs_n", [](auto &c, auto &k, auto &v) { c.map_J_over_gs_n = to_count(k, v); }},
        {"map_pulse_intervals", [](auto &c, auto &k, auto &v) { c.map.pulse_intervals = to_count(k, v); }},
        {"map_tail_intervals", [](auto &c, auto &k, auto &v) { c.map.tail_intervals = to_count(k, v); }},
        {"workers", [](auto &c, auto &k, auto &v) { c.map.workers = static_cast<int>(to_count(k, v)); }},
        {"out_dir", [](auto &c, auto &, auto &v) { c.out_dir = v; }},
        {"seed",
         [](auto &c, auto &k, auto &v) {
             char *end = nullptr;
             c.seed = std::strtoull(v.c_str(), &end, 10);
             if (v.empty() || *end != '\0' || v[0] == '-') throw ConfigError("key '" + k + "': bad seed '" + v + "'");
         }},
        {"n_alkali_per_cm3", [](auto &c, auto &k, auto &v) { c.n_alkali_per_cm3 = to_double(k, v); }},
        {"n_noble_per_cm3", [](auto &c, auto &k, auto &v) { c.n_noble_per_cm3 = to_double(k, v); }},
    };
    return table;
}

} // namespace

void ScenarioConfig::validate() const
{
    params.validate();
    auto positive = [](const char *name, double v) {
        if (!(v > 0.0)) {
            std::ostringstream os;
            os << name << " must be positive, got " << v;
            throw ConfigError(os.str());
        }
    };
    positive("pulse_T_s", pulse.duration_T);
    if (!(pulse.photons >= 0.0)) throw ConfigError("pulse_photons must be non-negative");
    if (dt < 0.0) throw ConfigError("dt_s must be non-negative");
    if (dt > pulse.duration_T / 100.0 * (1.0 + 1e-12))
        throw ConfigError("dt_s must resolve the pulse (dt <= T/100)");
    if (hold_duration < 0.0) throw ConfigError("hold_duration_s must be non-negative");
    if (hold_delta < 0.0) throw ConfigError("hold_delta_per_s must be non-negative");
    if (shape == ControlShape::Constant && scheme == Scheme::Sequential) positive("gamma_omega_per_s", gamma_omega);
    positive("opt_gs_T", opt_gs_T);
    positive("opt_J_over_gs", opt_J_over_gs);
    positive("opt_tol", map.ascent.tol);
    if (random_starts < 0) throw ConfigError("opt_random_starts must be non-negative");
    positive("map_gs_T_min", map_gs_T_min);
    positive("map_gs_T_max", map_gs_T_max);
    positive("map_J_over_gs_min", map_J_over_gs_min);
    positive("map_J_over_gs_max", map_J_over_gs_max);
    if (map.pulse_intervals < 300) throw ConfigError("map_pulse_intervals must be at least 300 (dt <= T/100)");
    if (n_alkali_per_cm3 < 0.0 || n_noble_per_cm3 < 0.0) throw ConfigError("densities must be non-negative");
}

ScenarioConfig parse_config(std::istream &is)
{
    ScenarioConfig cfg;
    std::set<std::string> seen;
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.resize(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            std::ostringstream os;
            os << "line " << lineno << ": expected 'key = value'";
            throw ConfigError(os.str());
        }
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        auto it = setters().find(key);
        if (it == setters().end()) {
            std::ostringstream os;
            os << "line " << lineno << ": unknown key '" << key << "'";
            throw ConfigError(os.str());
        }
        if (!seen.insert(key).second) {
            std::ostringstream os;
            os << "line " << lineno << ": key '" << key << "' given twice";
            throw ConfigError(os.str());
        }
        it->second(cfg, key, value);
    }
    cfg.validate();
    return cfg;
}

ScenarioConfig load_config(const std::string &path)
{
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    return parse_config(in);
}

void write_config(std::ostream &os, const ScenarioConfig &c)
{
    auto d = [](double v) { return format_double(v); };
    os << "gamma_p_per_s = " << d(c.params.gamma_p) << "\n"
       << "gamma_s_per_s = " << d(c.params.gamma_s) << "\n"
       << "gamma_k_per_s = " << d(c.params.gamma_k) << "\n"
       << "cooperativity = " << d(c.params.cooperativity) << "\n"
       << "exchange_J_per_s = " << d(c.params.exchange_J) << "\n"
       << "delta_cav_per_s = " << d(c.params.delta_cav) << "\n"
       << "scheme = " << to_string(c.scheme) << "\n"
       << "control_shape = " << (c.shape == ControlShape::Matched ? "matched" : "constant") << "\n"
       << "model = " << (c.model == ModelKind::Full ? "full" : "reduced") << "\n"
       << "gamma_omega_per_s = " << d(c.gamma_omega) << "\n"
       << "pulse_T_s = " << d(c.pulse.duration_T) << "\n"
       << "pulse_photons = " << d(c.pulse.photons) << "\n"
       << "dt_s = " << d(c.dt) << "\n"
       << "hold_duration_s = " << d(c.hold_duration) << "\n"
       << "hold_delta_per_s = " << d(c.hold_delta) << "\n"
       << "opt_gs_T = " << d(c.opt_gs_T) << "\n"
       << "opt_J_over_gs = " << d(c.opt_J_over_gs) << "\n"
       << "opt_max_iter = " << c.map.ascent.max_iter << "\n"
       << "opt_tol = " << d(c.map.ascent.tol) << "\n"
       << "opt_free_delta_s = " << (c.map.free_delta_s ? "true" : "false") << "\n"
       << "opt_random_starts = " << c.random_starts << "\n"
       << "map_gs_T_min = " << d(c.map_gs_T_min) << "\n"
       << "map_gs_T_max = " << d(c.map_gs_T_max) << "\n"
       << "map_gs_T_n = " << c.map_gs_T_n << "\n"
       << "map_J_over_gs_min = " << d(c.map_J_over_gs_min) << "\n"
       << "map_J_over_gs_max = " << d(c.map_J_over_gs_max) << "\n"
       << "map_J_over_gs_n = " << c.map_J_over_gs_n << "\n"
       << "map_pulse_intervals = " << c.map.pulse_intervals << "\n"
       << "map_tail_intervals = " << c.map.tail_intervals << "\n"
       << "workers = " << c.map.workers << "\n"
       << "out_dir = " << c.out_dir << "\n"
       << "seed = " << c.seed << "\n"
       << "n_alkali_per_cm3 = " << d(c.n_alkali_per_cm3) << "\n"
       << "n_noble_per_cm3 = " << d(c.n_noble_per_cm3) << "\n";
}

ScenarioConfig preset_helium(Scheme scheme)
{
    ScenarioConfig c;
    c.params.exchange_J = 1000.0;
    c.params.gamma_s = 17.0;
    c.params.cooperativity = 100.0;
    c.params.gamma_k = 1.0 / (100.0 * 3600.0);
    // Not quoted for the cell; any value with gamma_p C T >> 1 gives the same result.
    c.params.gamma_p = 1e7;
    c.gamma_omega = 1e4;
    c.scheme = scheme;
    c.shape = ControlShape::Matched;
    c.model = ModelKind::Reduced;
    c.pulse.duration_T = scheme == Scheme::Sequential ? 15e-6 : 15e-3;
    c.pulse.photons = 1.0;
    c.n_alkali_per_cm3 = 3.5e14; // potassium
    c.n_noble_per_cm3 = 2e20;    // helium-3
    return c;
}

Envelope scenario_input(const ScenarioConfig &cfg)
{
    return exponential_input(cfg.pulse.duration_T, cfg.pulse.photons, cfg.grid_dt());
}

} // namespace nobleqm
