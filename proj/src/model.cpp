#include "nobleqm/model.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace nobleqm {

bool PhysicalParams::validate() const
{
    auto bad = [](const char *name, double v) {
        std::ostringstream os;
        os << "invalid " << name << " = " << v;
        throw ConfigError(os.str());
    };
    if (!(gamma_p > 0.0) || !std::isfinite(gamma_p)) bad("gamma_p", gamma_p);
    if (!(gamma_s >= 0.0) || !std::isfinite(gamma_s)) bad("gamma_s", gamma_s);
    if (!(gamma_k >= 0.0) || !std::isfinite(gamma_k)) bad("gamma_k", gamma_k);
    if (!(cooperativity >= 0.0) || !std::isfinite(cooperativity)) bad("cooperativity", cooperativity);
    if (!(exchange_J >= 0.0) || !std::isfinite(exchange_J)) bad("exchange_J", exchange_J);
    if (!std::isfinite(delta_cav)) bad("delta_cav", delta_cav);
    return gamma_k <= gamma_s;
}

void ControlSchedule::check() const
{
    if (delta_s.size() != omega.size() || delta_k.size() != omega.size())
        throw GridMismatch("control schedule channels differ in length");
    if (!(dt > 0.0)) throw GridMismatch("control schedule needs dt > 0");
}

bool same_grid(double t0a, double dta, std::size_t na, double t0b, double dtb, std::size_t nb)
{
    if (na != nb) return false;
    const double scale = std::max(std::abs(dta), std::abs(dtb));
    return std::abs(dta - dtb) <= 1e-9 * scale && std::abs(t0a - t0b) <= 1e-6 * scale;
}

double exchange_rate_from_microscopic(double zeta, double n_a, double n_b)
{
    return zeta * std::sqrt(n_a * n_b);
}

ModeState rhs_full(const ModeState &x, const ControlSample &u, cplx e_in, const PhysicalParams &q)
{
    ModeState d;
    d.p = -cplx(q.dipole_rate(), q.delta_cav) * x.p + I * u.omega * x.s + I * q.io_coupling() * e_in;
    d.s = -cplx(q.gamma_s, u.delta_s) * x.s + I * std::conj(u.omega) * x.p - I * q.exchange_J * x.k;
    d.k = -cplx(q.gamma_k, u.delta_k) * x.k - I * q.exchange_J * x.s;
    return d;
}

cplx eliminated_dipole(cplx s, cplx omega, cplx e_in, const PhysicalParams &q)
{
    return (I * omega * s + I * q.io_coupling() * e_in) / cplx(q.dipole_rate(), q.delta_cav);
}

ModeState rhs_reduced(cplx s, cplx k, const ControlSample &u, cplx e_in, const PhysicalParams &q)
{
    ModeState d;
    d.p = eliminated_dipole(s, u.omega, e_in, q);
    d.s = -cplx(q.gamma_s, u.delta_s) * s + I * std::conj(u.omega) * d.p - I * q.exchange_J * k;
    d.k = -cplx(q.gamma_k, u.delta_k) * k - I * q.exchange_J * s;
    return d;
}

namespace {

// Mode amplitudes plus the running integrals that share the RK4 stages.
struct Augmented {
    cplx p{}, s{}, k{};
    double loss_p = 0, loss_s = 0, loss_k = 0, n_in = 0, n_out = 0;

    Augmented &operator+=(const Augmented &o)
    {
        p += o.p; s += o.s; k += o.k;
        loss_p += o.loss_p; loss_s += o.loss_s; loss_k += o.loss_k;
        n_in += o.n_in; n_out += o.n_out;
        return *this;
    }
    friend Augmented operator*(double h, Augmented a)
    {
        a.p *= h; a.s *= h; a.k *= h;
        a.loss_p *= h; a.loss_s *= h; a.loss_k *= h;
        a.n_in *= h; a.n_out *= h;
        return a;
    }
    friend Augmented operator+(Augmented a, const Augmented &b) { return a += b; }
};

ControlSample control_at(const ControlSchedule &c, std::size_t i, double theta)
{
    if (i + 1 >= c.size() || c.interp == Interpolation::Hold) return {c.omega[i], c.delta_s[i], c.delta_k[i]};
    const double w = 1.0 - theta;
    return {w * c.omega[i] + theta * c.omega[i + 1],
            w * c.delta_s[i] + theta * c.delta_s[i + 1],
            w * c.delta_k[i] + theta * c.delta_k[i + 1]};
}

cplx input_at(const Envelope &e, std::size_t i, double theta)
{
    if (i + 1 >= e.size()) return e.samples[i];
    return (1.0 - theta) * e.samples[i] + theta * e.samples[i + 1];
}

Augmented derivative(ModelKind model, const Augmented &x, const ControlSample &u, cplx e,
                     const PhysicalParams &q)
{
    Augmented d;
    cplx p;
    if (model == ModelKind::Full) {
        const ModeState r = rhs_full({x.p, x.s, x.k}, u, e, q);
        d.p = r.p; d.s = r.s; d.k = r.k;
        p = x.p;
    } else {
        const ModeState r = rhs_reduced(x.s, x.k, u, e, q);
        d.s = r.s; d.k = r.k;
        p = r.p;
    }
    d.loss_p = 2.0 * q.gamma_p * std::norm(p);
    d.loss_s = 2.0 * q.gamma_s * std::norm(x.s);
    d.loss_k = 2.0 * q.gamma_k * std::norm(x.k);
    d.n_in = std::norm(e);
    d.n_out = std::norm(e + I * q.io_coupling() * p);
    return d;
}

// Relative change per unit time of the sampled controls and input. Rough
// samples need substeps even when every decay rate is slow.
double variation_rate(const ControlSchedule &c, const Envelope &e)
{
    double om = 0.0, in = 0.0, dom = 0.0, din = 0.0;
    for (std::size_t i = 0; i < c.size(); ++i) {
        om = std::max(om, std::abs(c.omega[i]));
        in = std::max(in, std::abs(e.samples[i]));
        if (i + 1 < c.size() && c.interp == Interpolation::Linear) {
            dom = std::max(dom, std::abs(c.omega[i + 1] - c.omega[i]));
            din = std::max(din, std::abs(e.samples[i + 1] - e.samples[i]));
        }
    }
    double v = 0.0;
    if (om > 0.0) v = std::max(v, dom / om);
    if (in > 0.0) v = std::max(v, din / in);
    return v / c.dt;
}

int pick_substeps(ModelKind model, const PhysicalParams &q, const ControlSchedule &c,
                  const Envelope &input, const IntegratorOptions &opts)
{
    const double rate = fastest_rate(q, c, model);
    const double smooth = std::max(rate, variation_rate(c, input));
    if (model == ModelKind::Full) {
        int n = opts.substeps > 0 ? opts.substeps
                                  : std::max(1, static_cast<int>(std::ceil(c.dt * smooth / opts.step_rate)));
        if (opts.substeps <= 0 && n > opts.max_substeps) n = opts.max_substeps;
        const double h = c.dt / n;
        if (h * rate > opts.stiffness_bound) {
            std::ostringstream os;
            os << "full model step " << h << " s does not resolve rate " << rate
               << " s^-1 (h*rate = " << h * rate << " > " << opts.stiffness_bound
               << "); refine the grid or use the reduced model";
            throw StiffnessError(os.str());
        }
        return n;
    }
    if (opts.substeps > 0) return opts.substeps;
    return std::max(1, static_cast<int>(std::ceil(c.dt * smooth / opts.step_rate)));
}

Trajectory propagate(ModelKind model, const PhysicalParams &q, const ControlSchedule &c,
                     const Envelope &input, const ModeState &init, const IntegratorOptions &opts)
{
    c.check();
    if (!same_grid(c.t0, c.dt, c.size(), input.t0, input.dt, input.size()))
        throw GridMismatch("control schedule and input envelope are on different grids");
    const std::size_t n = c.size();
    if (n == 0) throw GridMismatch("empty grid");

    const int m = pick_substeps(model, q, c, input, opts);
    const double h = c.dt / m;

    Trajectory tr;
    tr.model = model;
    tr.t0 = c.t0;
    tr.dt = c.dt;
    tr.p.resize(n); tr.s.resize(n); tr.k.resize(n);
    tr.loss_p.resize(n); tr.loss_s.resize(n); tr.loss_k.resize(n);
    tr.n_in.resize(n); tr.n_out.resize(n);
    tr.e_out = Envelope::zeros(c.t0, c.dt, n);

    Augmented x;
    x.s = init.s;
    x.k = init.k;
    x.p = model == ModelKind::Full ? init.p : eliminated_dipole(init.s, c.omega[0], input.samples[0], q);

    auto record = [&](std::size_t i) {
        cplx p = x.p;
        if (model == ModelKind::Reduced) p = eliminated_dipole(x.s, c.omega[i], input.samples[i], q);
        tr.p[i] = p; tr.s[i] = x.s; tr.k[i] = x.k;
        tr.loss_p[i] = x.loss_p; tr.loss_s[i] = x.loss_s; tr.loss_k[i] = x.loss_k;
        tr.n_in[i] = x.n_in; tr.n_out[i] = x.n_out;
        tr.e_out.samples[i] = input.samples[i] + I * q.io_coupling() * p;
    };
    record(0);

    for (std::size_t i = 0; i + 1 < n; ++i) {
        for (int j = 0; j < m; ++j) {
            const double th0 = static_cast<double>(j) / m;
            const double thm = (j + 0.5) / m;
            const double th1 = static_cast<double>(j + 1) / m;
            const ControlSample u0 = control_at(c, i, th0), um = control_at(c, i, thm),
                                u1 = control_at(c, i, th1);
            const cplx e0 = input_at(input, i, th0), em = input_at(input, i, thm),
                       e1 = input_at(input, i, th1);
            const Augmented k1 = derivative(model, x, u0, e0, q);
            const Augmented k2 = derivative(model, x + (0.5 * h) * k1, um, em, q);
            const Augmented k3 = derivative(model, x + (0.5 * h) * k2, um, em, q);
            const Augmented k4 = derivative(model, x + h * k3, u1, e1, q);
            x += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        }
        record(i + 1);
    }
    return tr;
}

} // namespace

double fastest_rate(const PhysicalParams &q, const ControlSchedule &c, ModelKind model)
{
    double rate = std::max({q.exchange_J, q.gamma_s, q.gamma_k});
    for (std::size_t i = 0; i < c.size(); ++i) {
        const double om = std::abs(c.omega[i]);
        rate = std::max({rate, std::abs(c.delta_s[i]), std::abs(c.delta_k[i]),
                         std::abs(c.mismatch(i))});
        if (model == ModelKind::Full)
            rate = std::max({rate, om, std::abs(cplx(q.dipole_rate(), q.delta_cav))});
        else
            rate = std::max(rate, q.gamma_s + om * om / q.dipole_rate());
    }
    return rate;
}

Trajectory propagate_full(const PhysicalParams &params, const ControlSchedule &schedule,
                          const Envelope &input, const ModeState &init,
                          const IntegratorOptions &opts, std::vector<std::string> *)
{
    return propagate(ModelKind::Full, params, schedule, input, init, opts);
}

Trajectory propagate_reduced(const PhysicalParams &params, const ControlSchedule &schedule,
                             const Envelope &input, cplx s0, cplx k0,
                             const IntegratorOptions &opts, std::vector<std::string> *warnings)
{
    const double window = schedule.t_end() - schedule.t0;
    if (warnings && window > 0.0 &&
        params.gamma_p * params.cooperativity * window < opts.elimination_warn) {
        std::ostringstream os;
        os << "dipole elimination marginal: gamma_p C T = "
           << params.gamma_p * params.cooperativity * window << " < " << opts.elimination_warn;
        warnings->push_back(os.str());
    }
    return propagate(ModelKind::Reduced, params, schedule, input, {cplx{}, s0, k0}, opts);
}

Envelope output_field(const Trajectory &tr, const Envelope &input, const PhysicalParams &params)
{
    if (!same_grid(tr.t0, tr.dt, tr.size(), input.t0, input.dt, input.size()))
        throw GridMismatch("output_field: trajectory and input are on different grids");
    Envelope out = Envelope::zeros(input.t0, input.dt, input.size());
    const double kappa = params.io_coupling();
    for (std::size_t i = 0; i < input.size(); ++i)
        out.samples[i] = input.samples[i] + I * kappa * tr.p[i];
    return out;
}

double flux_balance(const Trajectory &tr, const Envelope &input)
{
    if (!same_grid(tr.t0, tr.dt, tr.size(), input.t0, input.dt, input.size()))
        throw GridMismatch("flux_balance: trajectory and input are on different grids");
    const std::size_t e = tr.size() - 1;
    const bool full = tr.model == ModelKind::Full;
    auto stored = [&](std::size_t i) {
        return (full ? std::norm(tr.p[i]) : 0.0) + std::norm(tr.s[i]) + std::norm(tr.k[i]);
    };
    const double in = tr.n_in[e] + stored(0);
    const double out = tr.n_out[e] + stored(e) + tr.loss_p[e] + tr.loss_s[e] + tr.loss_k[e];
    return in - out;
}

double convergence_gap(ModelKind model, const PhysicalParams &params, const ControlSchedule &schedule,
                       const Envelope &input, const ModeState &init, int substeps)
{
    IntegratorOptions a;
    a.substeps = substeps;
    a.max_substeps = 2 * substeps;
    IntegratorOptions b = a;
    b.substeps = 2 * substeps;
    const Trajectory ta = propagate(model, params, schedule, input, init, a);
    const Trajectory tb = propagate(model, params, schedule, input, init, b);
    return std::max(std::abs(ta.s.back() - tb.s.back()), std::abs(ta.k.back() - tb.k.back()));
}

} // namespace nobleqm
