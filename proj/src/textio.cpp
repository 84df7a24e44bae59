#include "nobleqm/textio.hpp"

#include <cstdio>
#include <cstdlib>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

namespace nobleqm {

std::string format_double(double v)
{
    char buf[32];
    for (int prec = 15; prec <= 17; ++prec) {
        std::snprintf(buf, sizeof buf, "%.*g", prec, v);
        if (std::strtod(buf, nullptr) == v) break;
    }
    return buf;
}

namespace {

double parse_double(const std::string &s, const std::string &what)
{
    char *end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (s.empty() || *end != '\0') throw ConfigError("cannot parse " + what + " '" + s + "' as a number");
    return v;
}

// "# tag k1=v1 k2=v2" -> {k1: v1, ...}; returns false if the tag differs.
bool parse_meta(const std::string &line, const std::string &tag, std::map<std::string, std::string> &out)
{
    std::istringstream ss(line);
    std::string hash, word;
    ss >> hash >> word;
    if (hash != "#" || word != tag) return false;
    out.clear();
    std::string tok;
    bool first = true;
    while (ss >> tok) {
        const auto eq = tok.find('=');
        if (eq == std::string::npos) {
            if (first && tag == "stage") {
                out["label"] = tok;
                first = false;
                continue;
            }
            throw ConfigError("malformed header token '" + tok + "'");
        }
        out[tok.substr(0, eq)] = tok.substr(eq + 1);
        first = false;
    }
    return true;
}

const std::string &need(const std::map<std::string, std::string> &m, const std::string &key)
{
    auto it = m.find(key);
    if (it == m.end()) throw ConfigError("header is missing '" + key + "'");
    return it->second;
}

std::size_t parse_count(const std::string &s)
{
    const double v = parse_double(s, "count");
    if (v < 0 || v != static_cast<double>(static_cast<std::size_t>(v))) throw ConfigError("bad count '" + s + "'");
    return static_cast<std::size_t>(v);
}

std::vector<double> row_values(const std::string &line, std::size_t expect)
{
    std::istringstream ss(line);
    std::vector<double> v;
    std::string tok;
    while (ss >> tok) v.push_back(parse_double(tok, "column"));
    if (v.size() != expect) {
        std::ostringstream os;
        os << "expected " << expect << " columns, got " << v.size() << ": '" << line << "'";
        throw ConfigError(os.str());
    }
    return v;
}

bool next_line(std::istream &is, std::string &line)
{
    while (std::getline(is, line)) {
        if (!line.empty() && line.find_first_not_of(" \t\r") != std::string::npos) return true;
    }
    return false;
}

} // namespace

void write_envelope(std::ostream &os, const Envelope &env)
{
    os << "# envelope t0=" << format_double(env.t0) << " dt=" << format_double(env.dt)
       << " n=" << env.size() << "\n";
    os << "# time_s re_amp im_amp\n";
    for (std::size_t i = 0; i < env.size(); ++i)
        os << format_double(env.time(i)) << ' ' << format_double(env.samples[i].real()) << ' '
           << format_double(env.samples[i].imag()) << '\n';
}

Envelope read_envelope(std::istream &is)
{
    std::string line;
    std::map<std::string, std::string> meta;
    if (!next_line(is, line) || !parse_meta(line, "envelope", meta))
        throw ConfigError("envelope file must start with '# envelope t0= dt= n='");
    Envelope env;
    env.t0 = parse_double(need(meta, "t0"), "t0");
    env.dt = parse_double(need(meta, "dt"), "dt");
    const std::size_t n = parse_count(need(meta, "n"));
    while (env.samples.size() < n && next_line(is, line)) {
        if (line[0] == '#') continue;
        const auto v = row_values(line, 3);
        env.samples.emplace_back(v[1], v[2]);
    }
    if (env.samples.size() != n) throw ConfigError("envelope file ends early");
    return env;
}

void write_schedule(std::ostream &os, const ControlSchedule &c, const std::string &label,
                    double expected)
{
    os << "# stage " << label << " t0=" << format_double(c.t0) << " dt=" << format_double(c.dt)
       << " n=" << c.size() << " expected=" << format_double(expected)
       << " interp=" << (c.interp == Interpolation::Hold ? "hold" : "linear") << "\n";
    os << "# time_s omega_re omega_im delta_s delta_k\n";
    for (std::size_t i = 0; i < c.size(); ++i)
        os << format_double(c.time(i)) << ' ' << format_double(c.omega[i].real()) << ' '
           << format_double(c.omega[i].imag()) << ' ' << format_double(c.delta_s[i]) << ' '
           << format_double(c.delta_k[i]) << '\n';
}

void write_plan(std::ostream &os, const ProtocolPlan &plan)
{
    os << "# plan scheme=" << to_string(plan.scheme) << " hold_delta=" << format_double(plan.hold_delta)
       << " hold_duration=" << format_double(plan.hold_duration) << " retrieval=" << (plan.retrieval ? 1 : 0)
       << "\n";
    for (const Stage &s : plan.stages) write_schedule(os, s.schedule, s.label, s.expected_duration);
}

ProtocolPlan read_plan(std::istream &is)
{
    std::string line;
    std::map<std::string, std::string> meta;
    ProtocolPlan plan;
    if (!next_line(is, line)) throw ConfigError("empty schedule file");
    if (parse_meta(line, "plan", meta)) {
        const std::string &sch = need(meta, "scheme");
        if (sch == "sequential") plan.scheme = Scheme::Sequential;
        else if (sch == "adiabatic") plan.scheme = Scheme::Adiabatic;
        else throw ConfigError("unknown scheme '" + sch + "'");
        plan.hold_delta = parse_double(need(meta, "hold_delta"), "hold_delta");
        plan.hold_duration = parse_double(need(meta, "hold_duration"), "hold_duration");
        plan.retrieval = need(meta, "retrieval") == "1";
        if (!next_line(is, line)) throw ConfigError("plan has no stages");
    }
    do {
        if (!parse_meta(line, "stage", meta)) {
            if (line[0] == '#') continue;
            throw ConfigError("expected a '# stage' header, got '" + line + "'");
        }
        Stage st;
        st.label = need(meta, "label");
        st.schedule.t0 = parse_double(need(meta, "t0"), "t0");
        st.schedule.dt = parse_double(need(meta, "dt"), "dt");
        st.expected_duration = meta.count("expected") ? parse_double(meta["expected"], "expected") : 0.0;
        if (meta.count("interp")) {
            const std::string &m = meta["interp"];
            if (m == "hold") st.schedule.interp = Interpolation::Hold;
            else if (m != "linear") throw ConfigError("unknown interpolation '" + m + "'");
        }
        const std::size_t n = parse_count(need(meta, "n"));
        while (st.schedule.size() < n && next_line(is, line)) {
            if (line[0] == '#') continue;
            const auto v = row_values(line, 5);
            st.schedule.omega.emplace_back(v[1], v[2]);
            st.schedule.delta_s.push_back(v[3]);
            st.schedule.delta_k.push_back(v[4]);
        }
        if (st.schedule.size() != n) throw ConfigError("stage '" + st.label + "' ends early");
        plan.stages.push_back(std::move(st));
    } while (next_line(is, line));
    if (plan.stages.empty()) throw ConfigError("schedule file holds no stages");
    return plan;
}

void write_trajectory(std::ostream &os, const Trajectory &tr)
{
    os << "# time_s p_re p_im s_re s_im k_re k_im eout_re eout_im loss_p loss_s loss_k n_in n_out\n";
    for (std::size_t i = 0; i < tr.size(); ++i) {
        os << format_double(tr.time(i));
        for (cplx v : {tr.p[i], tr.s[i], tr.k[i], tr.e_out.samples[i]})
            os << ' ' << format_double(v.real()) << ' ' << format_double(v.imag());
        for (double v : {tr.loss_p[i], tr.loss_s[i], tr.loss_k[i], tr.n_in[i], tr.n_out[i]})
            os << ' ' << format_double(v);
        os << '\n';
    }
}

void write_history(std::ostream &os, const std::vector<std::pair<int, double>> &history)
{
    os << "# iteration eta_inf\n";
    for (const auto &[it, eta] : history) os << it << ' ' << format_double(eta) << '\n';
}

void write_map_table(std::ostream &os, const EfficiencyMap &map, MapTable which)
{
    switch (which) {
    case MapTable::Optimized:
        os << "# gsT J/gs eta_inf class iterations gradient_norm\n";
        break;
    case MapTable::Analytic:
        os << "# gsT J/gs eta_analytic eta_seq eta_adi\n";
        break;
    case MapTable::Difference:
        os << "# gsT J/gs optimized_minus_analytic\n";
        break;
    }
    for (const MapCell &c : map.cells) {
        os << format_double(c.gs_T) << ' ' << format_double(c.J_over_gs) << ' ';
        switch (which) {
        case MapTable::Optimized:
            os << format_double(c.eta_opt) << ' ' << to_string(c.classification) << ' ' << c.iterations << ' '
               << format_double(c.gradient_norm);
            break;
        case MapTable::Analytic:
            os << format_double(c.eta_analytic()) << ' ' << format_double(c.eta_seq) << ' '
               << format_double(c.eta_adi);
            break;
        case MapTable::Difference:
            os << format_double(c.eta_opt - c.eta_analytic());
            break;
        }
        os << '\n';
    }
}

void write_memory_summary(std::ostream &os, const MemoryResult *r, Scheme scheme)
{
    auto val = [&](double v) { return r ? format_double(v) : std::string("undefined"); };
    os << "scheme = " << to_string(scheme) << "\n";
    os << "photons_in = " << (r ? format_double(r->photons_in) : std::string("0")) << "\n";
    os << "eta_store = " << val(r ? r->eta_store : 0) << "\n";
    os << "eta_retrieve = " << val(r ? r->eta_retrieve : 0) << "\n";
    os << "eta_total = " << val(r ? r->eta_total : 0) << "\n";
    os << "eta_matched = " << val(r ? r->eta_matched : 0) << "\n";
    os << "hold_factor = " << val(r ? r->hold_factor : 0) << "\n";
    if (r) {
        os << "stored_k_re = " << format_double(r->stored_k.real()) << "\n";
        os << "stored_k_im = " << format_double(r->stored_k.imag()) << "\n";
        for (const std::string &w : r->warnings) os << "warning = " << w << "\n";
    }
}

} // namespace nobleqm
