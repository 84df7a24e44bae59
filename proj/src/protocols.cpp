#include "nobleqm/protocols.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "nobleqm/pulses.hpp"

namespace nobleqm {

void ProtocolPlan::check() const
{
    if (stages.empty()) throw GridMismatch("protocol plan has no stages");
    for (const Stage &s : stages) s.schedule.check();
    for (std::size_t i = 1; i < stages.size(); ++i) {
        const double gap = stages[i].t_begin() - stages[i - 1].t_end();
        const double scale = std::max(stages[i].schedule.dt, stages[i - 1].schedule.dt);
        if (std::abs(gap) > 1e-6 * scale) {
            std::ostringstream os;
            os << "stage '" << stages[i].label << "' starts " << gap << " s after the previous stage ends";
            throw GridMismatch(os.str());
        }
    }
}

double default_hold_delta(const PhysicalParams &q, double factor)
{
    if (q.gamma_k > 0.0) return factor * q.exchange_J * std::sqrt(q.gamma_s / q.gamma_k);
    return 1e3 * q.exchange_J;
}

namespace {

Stage swap_stage(const PhysicalParams &q, double t0, std::size_t intervals)
{
    const double duration = PI / (2.0 * q.exchange_J);
    const std::size_t n = std::max<std::size_t>(intervals, 1);
    Stage s;
    s.label = "swap";
    s.schedule = ControlSchedule::constant(t0, duration / static_cast<double>(n), n + 1, cplx{}, 0.0, 0.0);
    s.expected_duration = duration;
    return s;
}

void warn(std::vector<std::string> *w, const std::string &msg)
{
    if (w) w->push_back(msg);
}

} // namespace

ProtocolPlan build_sequential(const PhysicalParams &q, const Envelope &input, double T,
                              double gamma_om, const PlanOptions &opts,
                              std::vector<std::string> *warnings)
{
    if (!(q.exchange_J > 0.0)) throw InvalidRegime("sequential scheme needs J > 0");
    if (opts.shape == ControlShape::Constant && !(gamma_om > 0.0)) {
        std::ostringstream os;
        os << "sequential scheme needs gamma_Omega > 0, got " << gamma_om;
        throw InvalidRegime(os.str());
    }
    if (q.gamma_s * T > 0.1) {
        std::ostringstream os;
        os << "sequential scheme: gamma_s T = " << q.gamma_s * T << " is not small";
        warn(warnings, os.str());
    }

    Stage store;
    store.label = "store";
    store.expected_duration = input.duration();
    if (opts.shape == ControlShape::Matched) {
        MatchOptions mo = opts.match;
        mo.decouple_ratio = opts.decouple_ratio;
        store.schedule = shape_control_matched(input, q, KernelKind::AlkaliStorage, mo);
    } else {
        store.schedule = ControlSchedule::constant(input.t0, input.dt, input.size(),
                                                   omega_for_gamma(gamma_om, q), 0.0,
                                                   opts.decouple_ratio * q.exchange_J);
    }
    // The detuned K mode light-shifts S by J^2/mismatch; cancel it so the
    // stored phase follows the kernel over long windows.
    for (std::size_t i = 0; i < store.schedule.size(); ++i) {
        const double m = store.schedule.mismatch(i);
        if (m == 0.0) continue;
        const double shift = q.exchange_J * q.exchange_J / m;
        store.schedule.delta_s[i] += shift;
        store.schedule.delta_k[i] += shift;
    }

    ProtocolPlan plan;
    plan.scheme = Scheme::Sequential;
    plan.hold_delta = default_hold_delta(q, opts.hold_delta_factor);
    plan.stages.push_back(std::move(store));
    plan.stages.push_back(swap_stage(q, input.t_end(), opts.swap_intervals));
    return plan;
}

ProtocolPlan build_adiabatic(const PhysicalParams &q, const Envelope &input, double T,
                             const PlanOptions &opts, std::vector<std::string> *warnings)
{
    if (!(q.exchange_J > 0.0)) throw InvalidRegime("adiabatic scheme needs J > 0");
    if (q.exchange_J * T < 10.0) {
        std::ostringstream os;
        os << "adiabatic scheme: J T = " << q.exchange_J * T << " is not large";
        warn(warnings, os.str());
    }

    Stage store;
    store.label = "store";
    store.expected_duration = input.duration();
    if (opts.shape == ControlShape::Matched) {
        store.schedule = shape_control_matched(input, q, KernelKind::NobleStorage, opts.match);
    } else {
        const double g = prescribed_gamma_omega(Scheme::Adiabatic, q, T);
        store.schedule = ControlSchedule::constant(input.t0, input.dt, input.size(),
                                                   omega_for_gamma(g, q), 0.0, 0.0);
    }

    ProtocolPlan plan;
    plan.scheme = Scheme::Adiabatic;
    plan.hold_delta = default_hold_delta(q, opts.hold_delta_factor);
    plan.stages.push_back(std::move(store));
    return plan;
}

ProtocolPlan build_retrieval(const ProtocolPlan &plan)
{
    ProtocolPlan out = plan;
    out.retrieval = !plan.retrieval;
    out.stages.clear();
    const double span = plan.t_begin() + plan.t_end();
    for (auto it = plan.stages.rbegin(); it != plan.stages.rend(); ++it) {
        Stage s = *it;
        ControlSchedule &c = s.schedule;
        c.t0 = span - it->t_end();
        // held samples belong to intervals, so the unused last one stays put
        const std::ptrdiff_t keep = c.interp == Interpolation::Hold && c.size() > 0 ? 1 : 0;
        std::reverse(c.omega.begin(), c.omega.end() - keep);
        std::reverse(c.delta_s.begin(), c.delta_s.end() - keep);
        std::reverse(c.delta_k.begin(), c.delta_k.end() - keep);
        for (auto &w : c.omega) w = std::conj(w);
        out.stages.push_back(std::move(s));
    }
    return out;
}

namespace {

Trajectory run_stage(ModelKind model, const PhysicalParams &q, const ControlSchedule &c,
                     const Envelope &input, const ModeState &init, const IntegratorOptions &io,
                     std::vector<std::string> *warnings)
{
    if (model == ModelKind::Full) return propagate_full(q, c, input, init, io, warnings);
    return propagate_reduced(q, c, input, init.s, init.k, io, warnings);
}

double stored_excitations(const ModeState &x, ModelKind model)
{
    const double p = model == ModelKind::Full ? std::norm(x.p) : 0.0;
    return p + std::norm(x.s) + std::norm(x.k);
}

} // namespace

MemoryResult run_memory(const PhysicalParams &q, const Envelope &input, const ProtocolPlan &plan,
                        double hold, const MemoryOptions &opts)
{
    plan.check();
    MemoryResult res;
    res.photons_in = photon_number(input);
    if (!(res.photons_in > 0.0)) throw NotNormalized("run_memory: input carries no photons");
    const double N = res.photons_in;

    ModeState x{};
    for (std::size_t i = 0; i < plan.stages.size(); ++i) {
        const ControlSchedule &c = plan.stages[i].schedule;
        const Envelope drive = i == 0 ? input : Envelope::zeros(c.t0, c.dt, c.size());
        Trajectory tr = run_stage(opts.model, q, c, drive, x, opts.integrator, &res.warnings);
        x = tr.final_state();
        res.storage.push_back({plan.stages[i].label, std::move(tr)});
    }
    res.stored_k = x.k;
    res.eta_store = std::norm(x.k) / N;

    // Hold: K decays at the decoupled rate, S at its own rate.
    if (hold > 0.0) {
        res.hold_factor = std::exp(-decoupled_relaxation(q, plan.hold_delta) * hold);
        x.k *= res.hold_factor;
        x.s *= std::exp(-q.gamma_s * hold);
        x.p = 0.0;
    }
    const double excitations = stored_excitations(x, opts.model);

    const ProtocolPlan rp = build_retrieval(plan);
    double emitted = 0.0;
    for (const Stage &st : rp.stages) {
        const ControlSchedule &c = st.schedule;
        Trajectory tr = run_stage(opts.model, q, c, Envelope::zeros(c.t0, c.dt, c.size()), x,
                                  opts.integrator, &res.warnings);
        x = tr.final_state();
        emitted += tr.n_out.back();
        res.retrieval.push_back({st.label, std::move(tr)});
    }
    res.output = res.retrieval.back().trajectory.e_out;
    res.eta_total = emitted / N;
    res.eta_retrieve = excitations > 0.0 ? emitted / excitations : 0.0;

    // Overlap with the time-reversed input, placed on the output grid.
    if (res.output.size() == input.size()) {
        Envelope target = res.output;
        for (std::size_t i = 0; i < input.size(); ++i)
            target.samples[i] = std::conj(input.samples[input.size() - 1 - i]);
        res.eta_matched = std::norm(mode_overlap(target, res.output)) / (N * N);
    }
    return res;
}

} // namespace nobleqm
