// nobleqm command-line driver: simulate / optimize / map / analytic / retrieve.
// Exit codes: 0 ok, 2 configuration error, 3 numerical failure.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include "nobleqm/config.hpp"
#include "nobleqm/textio.hpp"

using namespace nobleqm;
namespace fs = std::filesystem;

namespace {

struct Common {
    std::string config_path;
    std::string preset;
    std::optional<std::string> out;
    std::optional<std::uint64_t> seed;
    std::optional<int> workers;
    std::optional<double> dt;
    std::string plan_path; // retrieve only
};

ScenarioConfig resolve(const Common &o)
{
    ScenarioConfig cfg;
    if (!o.config_path.empty()) {
        cfg = load_config(o.config_path);
    } else if (o.preset == "helium-sequential") {
        cfg = preset_helium(Scheme::Sequential);
    } else if (o.preset == "helium-adiabatic") {
        cfg = preset_helium(Scheme::Adiabatic);
    } else if (!o.preset.empty()) {
        throw ConfigError("unknown preset '" + o.preset + "'");
    }
    if (o.out) cfg.out_dir = *o.out;
    if (o.seed) cfg.seed = *o.seed;
    if (o.workers) {
        if (*o.workers < 1) throw ConfigError("--workers must be at least 1");
        cfg.map.workers = *o.workers;
    }
    if (o.dt) cfg.dt = *o.dt;
    cfg.validate();
    return cfg;
}

std::ofstream open_out(const ScenarioConfig &cfg, const std::string &name)
{
    fs::create_directories(cfg.out_dir);
    const fs::path p = fs::path(cfg.out_dir) / name;
    std::ofstream f(p);
    if (!f) throw ConfigError("cannot write '" + p.string() + "'");
    return f;
}

PlanOptions plan_options(const ScenarioConfig &cfg)
{
    PlanOptions po;
    po.shape = cfg.shape;
    return po;
}

ProtocolPlan make_plan(const ScenarioConfig &cfg, const Envelope &input, std::vector<std::string> *warnings)
{
    ProtocolPlan plan = cfg.scheme == Scheme::Sequential
                            ? build_sequential(cfg.params, input, cfg.pulse.duration_T, cfg.gamma_omega,
                                               plan_options(cfg), warnings)
                            : build_adiabatic(cfg.params, input, cfg.pulse.duration_T, plan_options(cfg),
                                              warnings);
    if (cfg.hold_delta > 0.0) plan.hold_delta = cfg.hold_delta;
    plan.hold_duration = cfg.hold_duration;
    return plan;
}

MemoryOptions memory_options(const ScenarioConfig &cfg)
{
    MemoryOptions mo;
    mo.model = cfg.model;
    if (cfg.model == ModelKind::Full) mo.integrator.max_substeps = 1 << 24;
    return mo;
}

int cmd_simulate(const ScenarioConfig &cfg)
{
    const Envelope input = scenario_input(cfg);
    {
        auto f = open_out(cfg, "input.env");
        write_envelope(f, input);
    }
    if (!(photon_number(input) > 0.0)) {
        auto f = open_out(cfg, "summary.txt");
        write_memory_summary(f, nullptr, cfg.scheme);
        write_memory_summary(std::cout, nullptr, cfg.scheme);
        return 0;
    }
    std::vector<std::string> warnings;
    const ProtocolPlan plan = make_plan(cfg, input, &warnings);
    {
        auto f = open_out(cfg, "plan.sched");
        write_plan(f, plan);
    }
    MemoryResult r = run_memory(cfg.params, input, plan, cfg.hold_duration, memory_options(cfg));
    r.warnings.insert(r.warnings.begin(), warnings.begin(), warnings.end());
    for (const StageRun &s : r.storage) {
        auto f = open_out(cfg, "storage_" + s.label + ".traj");
        write_trajectory(f, s.trajectory);
    }
    for (const StageRun &s : r.retrieval) {
        auto f = open_out(cfg, "retrieval_" + s.label + ".traj");
        write_trajectory(f, s.trajectory);
    }
    {
        auto f = open_out(cfg, "output.env");
        write_envelope(f, r.output);
    }
    auto f = open_out(cfg, "summary.txt");
    write_memory_summary(f, &r, cfg.scheme);
    write_memory_summary(std::cout, &r, cfg.scheme);
    return 0;
}

int cmd_retrieve(const ScenarioConfig &cfg, const std::string &plan_path)
{
    const Envelope input = scenario_input(cfg);
    ProtocolPlan storage;
    if (!plan_path.empty()) {
        std::ifstream in(plan_path);
        if (!in) throw ConfigError("cannot open plan file '" + plan_path + "'");
        storage = read_plan(in);
        if (storage.retrieval) storage = build_retrieval(storage);
    } else {
        storage = make_plan(cfg, input, nullptr);
    }
    const ProtocolPlan rp = build_retrieval(storage);
    {
        auto f = open_out(cfg, "retrieval.sched");
        write_plan(f, rp);
    }
    // Emission from one excitation in K under the reversed sequence.
    ModeState x{};
    x.k = 1.0;
    const MemoryOptions mo = memory_options(cfg);
    double emitted = 0.0;
    Envelope out;
    for (const Stage &st : rp.stages) {
        const ControlSchedule &c = st.schedule;
        const Envelope zero = Envelope::zeros(c.t0, c.dt, c.size());
        Trajectory tr = mo.model == ModelKind::Full
                            ? propagate_full(cfg.params, c, zero, x, mo.integrator)
                            : propagate_reduced(cfg.params, c, zero, x.s, x.k, mo.integrator);
        x = tr.final_state();
        emitted += tr.n_out.back();
        out = tr.e_out;
        auto f = open_out(cfg, "retrieval_" + st.label + ".traj");
        write_trajectory(f, tr);
    }
    {
        auto f = open_out(cfg, "output.env");
        write_envelope(f, out);
    }
    double matched = 0.0;
    const double n_in = photon_number(input);
    if (out.size() == input.size() && n_in > 0.0) {
        Envelope target = out;
        for (std::size_t i = 0; i < input.size(); ++i)
            target.samples[i] = std::conj(input.samples[input.size() - 1 - i]);
        matched = std::norm(mode_overlap(target, out)) / n_in;
    }
    auto f = open_out(cfg, "summary.txt");
    for (std::ostream *os : {static_cast<std::ostream *>(&f), static_cast<std::ostream *>(&std::cout)}) {
        *os << "scheme = " << to_string(storage.scheme) << "\n"
            << "emitted_per_excitation = " << format_double(emitted) << "\n"
            << "matched_per_excitation = "
            << (n_in > 0.0 ? format_double(matched) : std::string("undefined")) << "\n";
    }
    return 0;
}

int cmd_optimize(const ScenarioConfig &cfg)
{
    MapConfig mc = cfg.map;
    const PointResult p = optimize_point(cfg.opt_gs_T, cfg.opt_J_over_gs, mc, nullptr, cfg.random_starts, cfg.seed);
    {
        auto f = open_out(cfg, "controls.sched");
        const auto segs = to_schedules(p.problem, p.result.controls);
        const char *labels[] = {"pulse", "tail"};
        for (std::size_t i = 0; i < segs.size(); ++i) write_schedule(f, segs[i], labels[i]);
    }
    {
        auto f = open_out(cfg, "history.dat");
        write_history(f, p.result.history);
    }
    auto f = open_out(cfg, "summary.txt");
    for (std::ostream *os : {static_cast<std::ostream *>(&f), static_cast<std::ostream *>(&std::cout)}) {
        *os << "gs_T = " << format_double(cfg.opt_gs_T) << "\n"
            << "J_over_gs = " << format_double(cfg.opt_J_over_gs) << "\n"
            << "eta_inf = " << format_double(p.result.eta_inf) << "\n"
            << "eta_analytic_sequential = " << format_double(p.eta_seq) << "\n"
            << "eta_analytic_adiabatic = " << format_double(p.eta_adi) << "\n"
            << "classification = " << to_string(p.result.classification) << "\n"
            << "iterations = " << p.result.iterations << "\n"
            << "gradient_norm = " << format_double(p.result.gradient_norm_final) << "\n"
            << "converged = " << (p.converged ? "true" : "false") << "\n";
    }
    if (!p.converged) {
        std::cerr << "nobleqm: " << p.error << "\n";
        return 3;
    }
    return 0;
}

int cmd_map(const ScenarioConfig &cfg)
{
    const EfficiencyMap m = efficiency_map(cfg.grid(), cfg.map);
    {
        auto f = open_out(cfg, "map_optimized.dat");
        write_map_table(f, m, MapTable::Optimized);
    }
    {
        auto f = open_out(cfg, "map_analytic.dat");
        write_map_table(f, m, MapTable::Analytic);
    }
    {
        auto f = open_out(cfg, "map_difference.dat");
        write_map_table(f, m, MapTable::Difference);
    }
    int unconverged = 0;
    for (const MapCell &c : m.cells)
        if (!c.converged) {
            ++unconverged;
            std::cerr << "cell gsT=" << c.gs_T << " J/gs=" << c.J_over_gs << ": " << c.error << "\n";
        }
    std::cout << "cells = " << m.cells.size() << "\nunconverged = " << unconverged << "\n";
    return 0;
}

int cmd_analytic(const ScenarioConfig &cfg)
{
    const double T = cfg.pulse.duration_T;
    auto f = open_out(cfg, "analytic.txt");
    auto line = [&](const std::string &k, const std::string &v) {
        f << k << " = " << v << "\n";
        std::cout << k << " = " << v << "\n";
    };
    for (Scheme s : {Scheme::Sequential, Scheme::Adiabatic}) {
        const std::string name = to_string(s);
        try {
            line("gamma_omega_" + name + "_per_s", format_double(prescribed_gamma_omega(s, cfg.params, T)));
            line("eta_inf_" + name, format_double(analytic_efficiency(s, cfg.params, T)));
        } catch (const InvalidRegime &e) {
            line("eta_inf_" + name, "undefined");
            std::cerr << "nobleqm: " << name << ": " << e.what() << "\n";
        }
    }
    line("cooperativity_factor", format_double(cfg.params.cooperativity_factor()));
    if (cfg.params.exchange_J > 0.0) line("swap_transfer", format_double(swap_transfer_efficiency(cfg.params)));
    const double hd = cfg.hold_delta > 0.0 ? cfg.hold_delta : default_hold_delta(cfg.params);
    line("hold_delta_per_s", format_double(hd));
    line("hold_relaxation_per_s", format_double(decoupled_relaxation(cfg.params, hd)));
    return 0;
}

} // namespace

int main(int argc, char **argv)
{
    CLI::App app{"Noble-gas quantum memory simulator and optimal-control toolkit"};
    app.require_subcommand(1);
    app.fallthrough();
    Common o;
    auto *cfg_opt = app.add_option("--config", o.config_path, "scenario file (key = value)");
    app.add_option("--preset", o.preset, "helium-sequential | helium-adiabatic")->excludes(cfg_opt);
    app.add_option("--out", o.out, "output directory");
    app.add_option("--seed", o.seed, "random seed");
    app.add_option("--workers", o.workers, "map worker threads");
    app.add_option("--dt", o.dt, "grid step in seconds");

    auto *sim = app.add_subcommand("simulate", "storage, hold and retrieval of the scenario pulse");
    auto *opt = app.add_subcommand("optimize", "gradient ascent at one (gamma_s T, J/gamma_s) point");
    auto *map = app.add_subcommand("map", "optimized and analytic efficiency maps");
    auto *ana = app.add_subcommand("analytic", "closed-form efficiencies and rates");
    auto *ret = app.add_subcommand("retrieve", "time-reversed retrieval from a stored excitation");
    ret->add_option("--plan", o.plan_path, "storage plan file (default: build from the scenario)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError &e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        const ScenarioConfig cfg = resolve(o);
        if (sim->parsed()) return cmd_simulate(cfg);
        if (opt->parsed()) return cmd_optimize(cfg);
        if (map->parsed()) return cmd_map(cfg);
        if (ana->parsed()) return cmd_analytic(cfg);
        if (ret->parsed()) return cmd_retrieve(cfg, o.plan_path);
    } catch (const ConfigError &e) {
        std::cerr << "nobleqm: config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception &e) {
        std::cerr << "nobleqm: " << e.what() << "\n";
        return 3;
    }
    return 2;
}
