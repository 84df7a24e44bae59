#include "nobleqm/control.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <sstream>

namespace nobleqm {

const char *to_string(Classification c)
{
    switch (c) {
    case Classification::Sequential: return "sequential";
    case Classification::Adiabatic: return "adiabatic";
    default: return "mixed";
    }
}

ControlVector ControlVector::zeros(std::size_t nodes)
{
    ControlVector c;
    c.omega.assign(nodes, cplx{});
    c.delta_s.assign(nodes, 0.0);
    c.delta.assign(nodes, 0.0);
    return c;
}

double ControlVector::value(std::size_t node, int channel) const
{
    switch (channel) {
    case OmegaRe: return omega[node].real();
    case OmegaIm: return omega[node].imag();
    case DeltaS: return delta_s[node];
    default: return delta[node];
    }
}

void ControlVector::set(std::size_t node, int channel, double v)
{
    switch (channel) {
    case OmegaRe: omega[node].real(v); break;
    case OmegaIm: omega[node].imag(v); break;
    case DeltaS: delta_s[node] = v; break;
    default: delta[node] = v; break;
    }
}

void ControlVector::project()
{
    for (auto &w : omega) {
        const double a = std::abs(w);
        if (a > omega_max) w *= omega_max / a;
    }
    for (auto &d : delta_s) d = std::clamp(d, -delta_max, delta_max);
    for (auto &d : delta) d = std::clamp(d, -delta_max, delta_max);
}

bool ControlVector::within_bounds(double slack) const
{
    for (auto w : omega)
        if (!std::isfinite(std::abs(w)) || std::abs(w) > omega_max * (1.0 + slack)) return false;
    for (auto d : delta_s)
        if (!std::isfinite(d) || std::abs(d) > delta_max * (1.0 + slack)) return false;
    for (auto d : delta)
        if (!std::isfinite(d) || std::abs(d) > delta_max * (1.0 + slack)) return false;
    return true;
}

std::vector<ControlSchedule> to_schedules(const StorageProblem &p, const ControlVector &c)
{
    const double unit = std::sqrt(p.params.dipole_rate());
    auto segment = [&](std::size_t first, std::size_t last) {
        ControlSchedule s;
        s.interp = Interpolation::Hold;
        s.t0 = p.times[first];
        s.dt = last > first ? (p.times[last] - p.times[first]) / static_cast<double>(last - first) : 1.0;
        for (std::size_t i = first; i <= last; ++i) {
            s.omega.push_back(c.omega[i] * unit);
            s.delta_s.push_back(c.delta_s[i]);
            s.delta_k.push_back(c.delta[i] + c.delta_s[i]);
        }
        return s;
    };
    std::vector<ControlSchedule> out{segment(0, p.pulse_end)};
    if (p.pulse_end + 1 < p.nodes()) out.push_back(segment(p.pulse_end, p.nodes() - 1));
    return out;
}

ControlVector from_schedules(const StorageProblem &p, const std::vector<ControlSchedule> &segments)
{
    ControlVector c = ControlVector::zeros(p.nodes());
    const double unit = std::sqrt(p.params.dipole_rate());
    std::size_t node = 0;
    for (std::size_t si = 0; si < segments.size(); ++si) {
        const ControlSchedule &s = segments[si];
        // Segments share their boundary node; the next segment's first
        // sample is the one that holds over the following interval.
        const std::size_t end = si + 1 < segments.size() ? s.size() - 1 : s.size();
        for (std::size_t i = 0; i < end; ++i, ++node) {
            if (node >= p.nodes()) throw GridMismatch("schedules hold more samples than the problem");
            c.omega[node] = s.omega[i] / unit;
            c.delta_s[node] = s.delta_s[i];
            c.delta[node] = s.delta_k[i] - s.delta_s[i];
        }
    }
    if (node != p.nodes()) throw GridMismatch("schedules hold fewer samples than the problem");
    return c;
}

namespace {

double window_length(const StorageProblem &p)
{
    return p.times[p.pulse_end] - p.times.front();
}

} // namespace

namespace {

// Flattened view of the unmasked channels, in scaled units.
// Packed coordinates carry the L2 metric of the control functions: node i
// is weighted by its quadrature share, so step sizes and curvature pairs do
// not depend on how finely a segment is sampled.
struct Packing {
    std::array<double, 4> scale;
    std::array<bool, 4> mask;
    std::vector<double> root_w;

    Packing(const StorageProblem &p, std::array<double, 4> sc, std::array<bool, 4> m)
        : scale(sc), mask(m), root_w(p.nodes(), 1.0)
    {
        const std::size_t n = p.nodes();
        if (n < 2) return;
        const double span = p.times.back() - p.times.front();
        for (std::size_t i = 0; i < n; ++i) {
            const double lo = p.times[i > 0 ? i - 1 : 0], hi = p.times[i + 1 < n ? i + 1 : n - 1];
            root_w[i] = std::sqrt(0.5 * (hi - lo) / span * static_cast<double>(n));
        }
    }

    std::vector<double> pack(const ControlVector &c) const
    {
        std::vector<double> v;
        v.reserve(root_w.size() * 4);
        for (std::size_t i = 0; i < root_w.size(); ++i)
            for (int ch = 0; ch < 4; ++ch)
                if (mask[ch]) v.push_back(c.value(i, ch) * root_w[i] / scale[ch]);
        return v;
    }
    // Gradients transform with the inverse map.
    std::vector<double> pack_gradient(const ControlVector &g) const
    {
        std::vector<double> v;
        v.reserve(root_w.size() * 4);
        for (std::size_t i = 0; i < root_w.size(); ++i)
            for (int ch = 0; ch < 4; ++ch)
                if (mask[ch]) v.push_back(g.value(i, ch) * scale[ch] / root_w[i]);
        return v;
    }
    void unpack(const std::vector<double> &v, ControlVector &c) const
    {
        std::size_t j = 0;
        for (std::size_t i = 0; i < root_w.size(); ++i)
            for (int ch = 0; ch < 4; ++ch)
                if (mask[ch]) c.set(i, ch, v[j++] * scale[ch] / root_w[i]);
    }
};

double dot(const std::vector<double> &a, const std::vector<double> &b)
{
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

double norm_inf(const std::vector<double> &a)
{
    double m = 0.0;
    for (double v : a) m = std::max(m, std::abs(v));
    return m;
}

// Two-loop recursion on the stored pairs, for ascent on f.
std::vector<double> lbfgs_direction(const std::vector<double> &g,
                                    const std::deque<std::vector<double>> &S,
                                    const std::deque<std::vector<double>> &Y)
{
    std::vector<double> q = g;
    const std::size_t m = S.size();
    std::vector<double> alpha(m), rho(m);
    for (std::size_t j = m; j-- > 0;) {
        rho[j] = 1.0 / dot(Y[j], S[j]);
        alpha[j] = rho[j] * dot(S[j], q);
        for (std::size_t i = 0; i < q.size(); ++i) q[i] -= alpha[j] * Y[j][i];
    }
    if (m > 0) {
        const double gamma = dot(S[m - 1], Y[m - 1]) / dot(Y[m - 1], Y[m - 1]);
        for (double &v : q) v *= gamma;
    }
    for (std::size_t j = 0; j < m; ++j) {
        const double beta = rho[j] * dot(Y[j], q);
        for (std::size_t i = 0; i < q.size(); ++i) q[i] += (alpha[j] - beta) * S[j][i];
    }
    return q;
}

} // namespace

OptResult gradient_ascent(const StorageProblem &problem, const ControlVector &init,
                          const AscentConfig &cfg)
{
    ControlVector x = init;
    x.project();
    const std::size_t n = x.nodes();

    const double Tw = std::max(window_length(problem) / 3.0, 1e-300);
    double om_scale = cfg.omega_scale;
    if (!(om_scale > 0.0)) {
        om_scale = 1.0 / std::sqrt(Tw);
        for (auto w : x.omega) om_scale = std::max(om_scale, std::abs(w));
    }
    const double dl_scale = cfg.delta_scale > 0.0 ? cfg.delta_scale
                                                  : std::max(problem.params.exchange_J, 1.0 / Tw);
    const Packing pk(problem, {om_scale, om_scale, dl_scale, dl_scale}, x.mask);

    OptResult res;
    double f = 0.0;
    ControlVector gx = gradient_adjoint(problem, x, &f);
    std::vector<double> y = pk.pack(x);
    std::vector<double> g = pk.pack_gradient(gx);
    res.history.emplace_back(0, f);

    // Curvature pairs for the quasi-Newton direction. The objective is
    // maximized, so Y stores -(g_new - g_old).
    std::deque<std::vector<double>> S, Y;
    const std::size_t memory = static_cast<std::size_t>(std::max(cfg.memory, 1));
    bool converged = false;
    int it = 0;
    int small_steps = 0; // consecutive accepted steps below tol
    ControlVector trial = x;

    for (it = 1; it <= cfg.max_iter; ++it) {
        const double gmax = norm_inf(g);
        if (gmax == 0.0) {
            converged = true;
            break;
        }
        std::vector<double> d = lbfgs_direction(g, S, Y);
        double slope = dot(g, d);
        if (S.empty() || !(slope > 0.0)) {
            S.clear();
            Y.clear();
            d = g;
            for (double &v : d) v *= cfg.initial_step / gmax;
            slope = dot(g, d);
        }

        bool accepted = false;
        double ft = f, step = 1.0;
        std::vector<double> yt(y.size());
        for (int b = 0; b <= cfg.max_backtracks; ++b, step *= 0.5) {
            for (std::size_t i = 0; i < y.size(); ++i) yt[i] = y[i] + step * d[i];
            pk.unpack(yt, trial);
            trial.project();
            yt = pk.pack(trial);
            ft = objective(problem, trial);
            std::vector<double> dy(y.size());
            for (std::size_t i = 0; i < y.size(); ++i) dy[i] = yt[i] - y[i];
            if (ft > f && ft - f >= 1e-4 * std::min(dot(g, dy), step * slope)) {
                accepted = true;
                break;
            }
        }
        if (!accepted) {
            if (!S.empty()) {
                // quasi-Newton model went stale; retry along the gradient
                S.clear();
                Y.clear();
                --it;
                continue;
            }
            converged = true;
            break;
        }

        double fn = 0.0;
        const ControlVector gxn = gradient_adjoint(problem, trial, &fn);
        const std::vector<double> gn = pk.pack_gradient(gxn);
        std::vector<double> s(y.size()), yk(y.size());
        for (std::size_t i = 0; i < y.size(); ++i) {
            s[i] = yt[i] - y[i];
            yk[i] = g[i] - gn[i];
        }
        if (dot(s, yk) > 1e-12 * std::sqrt(dot(s, s) * dot(yk, yk))) {
            S.push_back(std::move(s));
            Y.push_back(std::move(yk));
            if (S.size() > memory) {
                S.pop_front();
                Y.pop_front();
            }
        }

        const double rel = (ft - f) / std::max(f, 1e-300);
        x = trial;
        y = yt;
        g = gn;
        gx = gxn;
        f = ft;
        res.history.emplace_back(it, f);
        small_steps = rel < cfg.tol ? small_steps + 1 : 0;
        if (small_steps >= 3) {
            converged = true;
            break;
        }
    }

    res.controls = x;
    res.eta_inf = f;
    res.iterations = std::min(it, cfg.max_iter);
    res.converged = converged;
    res.classification = classify(problem, x);
    {
        double acc = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            for (int ch = 0; ch < 4; ++ch)
                if (x.mask[ch]) acc += gx.value(i, ch) * gx.value(i, ch);
        res.gradient_norm_final = std::sqrt(acc);
    }
    if (!converged) {
        std::ostringstream os;
        os << "gradient ascent did not converge in " << cfg.max_iter << " iterations (eta = " << f << ")";
        throw NonConvergence(os.str(), std::move(res));
    }
    return res;
}

Classification classify_nodes(std::span<const cplx> s, std::size_t mark, double photons)
{
    if (s.empty() || !(photons > 0.0)) return Classification::Mixed;
    mark = std::min(mark, s.size() - 1);
    if (std::norm(s[mark]) / photons >= 0.95) return Classification::Sequential;
    double peak = 0.0;
    for (auto v : s) peak = std::max(peak, std::norm(v));
    if (peak / photons <= 0.05) return Classification::Adiabatic;
    return Classification::Mixed;
}

Classification classify_solution(const Trajectory &tr, double t_mark, double photons)
{
    if (tr.size() == 0) return Classification::Mixed;
    const double pos = std::round((t_mark - tr.t0) / tr.dt);
    const auto mark = static_cast<std::size_t>(std::clamp(pos, 0.0, static_cast<double>(tr.size() - 1)));
    return classify_nodes(tr.s, mark, photons);
}

Classification classify(const StorageProblem &problem, const ControlVector &controls)
{
    NodeTrajectory rec;
    objective(problem, controls, &rec);
    return classify_nodes(rec.s, problem.pulse_end, problem.photons);
}

void apply_default_bounds(ControlVector &c, const PhysicalParams &q, double T)
{
    const double J = q.exchange_J;
    c.omega_max = std::sqrt(1e3 * std::max({1.0 / T, q.gamma_s, J * J * T}));
    c.delta_max = 1e3 * std::max(J, 1.0 / T);
}

namespace {

void fill_tail(const StorageProblem &p, ControlVector &c, double delta)
{
    for (std::size_t i = p.pulse_end + 1; i < p.nodes(); ++i) {
        c.omega[i] = 0.0;
        c.delta[i] = delta;
    }
}

} // namespace

ControlVector analytic_controls(const StorageProblem &p, Scheme scheme, double T)
{
    const double g_om = prescribed_gamma_omega(scheme, p.params, T);
    const double J = p.params.exchange_J;
    ControlVector c = ControlVector::zeros(p.nodes());
    apply_default_bounds(c, p.params, T);
    const bool seq = scheme == Scheme::Sequential;
    for (std::size_t i = 0; i <= p.pulse_end; ++i) {
        c.omega[i] = std::sqrt(g_om);
        c.delta[i] = seq ? 100.0 * J : 0.0;
    }
    fill_tail(p, c, seq ? 0.0 : 100.0 * J);
    c.project();
    return c;
}

ControlVector matched_controls(const StorageProblem &p, Scheme scheme, const Envelope &input)
{
    const bool seq = scheme == Scheme::Sequential;
    MatchOptions mo;
    const ControlSchedule s = shape_control_matched(
        input, p.params, seq ? KernelKind::AlkaliStorage : KernelKind::NobleStorage, mo);
    const double unit = std::sqrt(p.params.dipole_rate());
    const double J = p.params.exchange_J;
    ControlVector c = ControlVector::zeros(p.nodes());
    apply_default_bounds(c, p.params, input.t_end() > input.t0 ? (input.t_end() - input.t0) / 3.0 : 1.0);
    for (std::size_t i = 0; i <= p.pulse_end && i < s.size(); ++i) {
        c.omega[i] = s.omega[i] / unit;
        c.delta[i] = seq ? 100.0 * J : 0.0;
    }
    fill_tail(p, c, seq ? 0.0 : 100.0 * J);
    c.project();
    return c;
}

} // namespace nobleqm
