#include "nobleqm/control.hpp"
#include "nobleqm/errors.hpp"
#include "nobleqm/pulses.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace nobleqm {

MapGrid MapGrid::log_spaced(double gmin, double gmax, std::size_t gn, double rmin, double rmax,
                            std::size_t rn)
{
    auto axis = [](double lo, double hi, std::size_t n) {
        std::vector<double> v(n);
        for (std::size_t i = 0; i < n; ++i) {
            const double f = n > 1 ? static_cast<double>(i) / static_cast<double>(n - 1) : 0.0;
            v[i] = std::pow(10.0, std::log10(lo) + f * (std::log10(hi) - std::log10(lo)));
        }
        return v;
    };
    return {axis(gmin, gmax, gn), axis(rmin, rmax, rn)};
}

PhysicalParams cell_params(double gs_T, double J_over_gs)
{
    PhysicalParams q;
    q.gamma_p = 1.0; // eta_inf does not depend on gamma_p or C
    q.cooperativity = 1.0;
    q.gamma_s = gs_T;
    q.gamma_k = 0.0;
    q.exchange_J = J_over_gs * gs_T;
    return q;
}

namespace {

double analytic_or_zero(Scheme s, const PhysicalParams &q)
{
    try {
        return analytic_efficiency(s, q, 1.0);
    } catch (const InvalidRegime &) {
        return 0.0;
    }
}

} // namespace

PointResult optimize_point(double gs_T, double J_over_gs, const MapConfig &cfg, const ControlVector *warm,
                           int random_starts, std::uint64_t seed)
{
    PointResult out;
    const PhysicalParams q = cell_params(gs_T, J_over_gs);
    out.eta_seq = analytic_or_zero(Scheme::Sequential, q);
    out.eta_adi = analytic_or_zero(Scheme::Adiabatic, q);

    const Envelope input = exponential_input(1.0, 1.0, 3.0 / static_cast<double>(cfg.pulse_intervals));
    out.problem = make_storage_problem(q, input, cfg.tail_swaps * PI / (2.0 * q.exchange_J), cfg.tail_intervals);
    const StorageProblem &problem = out.problem;

    // Every start gets a short screening ascent and only the best one runs
    // on. The landscape is not concave and the start with the best initial
    // value is often not the one that ascends furthest; the neighbour's
    // optimum keeps rows consistent when the static starts lead elsewhere.
    std::vector<ControlVector> starts;
    for (Scheme s : {Scheme::Sequential, Scheme::Adiabatic}) {
        try {
            starts.push_back(analytic_controls(problem, s, 1.0));
        } catch (const Error &) {
        }
        try {
            starts.push_back(matched_controls(problem, s, input));
        } catch (const Error &) {
        }
    }
    if (starts.empty()) {
        ControlVector c = ControlVector::zeros(problem.nodes());
        for (std::size_t i = 0; i <= problem.pulse_end; ++i) c.omega[i] = 1.0;
        starts.push_back(c);
    }
    std::size_t best_start = 0;
    double best_eta = -1.0;
    for (std::size_t j = 0; j < starts.size(); ++j) {
        apply_default_bounds(starts[j], q, 1.0);
        starts[j].project();
        const double eta = objective(problem, starts[j]);
        if (eta > best_eta) {
            best_eta = eta;
            best_start = j;
        }
    }
    const ControlVector seed_point = starts[best_start];
    if (warm && warm->nodes() == problem.nodes()) {
        ControlVector w = *warm;
        apply_default_bounds(w, q, 1.0);
        w.project();
        starts.push_back(std::move(w));
    }
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> noise(0.0, 1.0);
    for (int k = 0; k < random_starts; ++k) {
        ControlVector c = seed_point;
        for (std::size_t i = 0; i < c.nodes(); ++i) {
            c.omega[i] *= std::polar(1.0 + 0.2 * noise(rng), 0.2 * noise(rng));
            c.delta_s[i] += 0.1 * q.exchange_J * noise(rng);
        }
        c.project();
        starts.push_back(std::move(c));
    }

    auto ascend = [&](const ControlVector &start, int iterations, OptResult &r, std::string &err) {
        AscentConfig ac = cfg.ascent;
        ac.max_iter = iterations;
        try {
            r = gradient_ascent(problem, start, ac);
            return true;
        } catch (const NonConvergence &e) {
            r = e.best;
            err = e.what();
            return false;
        }
    };

    const int screen = std::clamp(cfg.screen_iter, 0, cfg.ascent.max_iter);
    bool have = false;
    for (ControlVector &start : starts) {
        start.mask[ControlVector::DeltaS] = cfg.free_delta_s;
        if (!cfg.free_delta_s) std::fill(start.delta_s.begin(), start.delta_s.end(), 0.0);
        OptResult r;
        std::string err;
        const bool ok = ascend(start, screen, r, err);
        if (!have || r.eta_inf > out.result.eta_inf) {
            out.result = std::move(r);
            out.converged = ok;
            out.error = err;
            have = true;
        }
    }

    const int rest = cfg.ascent.max_iter - out.result.iterations;
    if (rest > 0) {
        OptResult r;
        std::string err;
        out.converged = ascend(out.result.controls, rest, r, err);
        out.error = err;
        const int done = out.result.iterations;
        for (std::size_t j = 1; j < r.history.size(); ++j)
            out.result.history.emplace_back(done + r.history[j].first, r.history[j].second);
        r.history = std::move(out.result.history);
        r.iterations += done;
        out.result = std::move(r);
    }
    return out;
}

MapCell optimize_cell(double gs_T, double J_over_gs, const MapConfig &cfg, const ControlVector *warm,
                      ControlVector *out_controls)
{
    PointResult p = optimize_point(gs_T, J_over_gs, cfg, warm);
    MapCell cell;
    cell.gs_T = gs_T;
    cell.J_over_gs = J_over_gs;
    cell.eta_seq = p.eta_seq;
    cell.eta_adi = p.eta_adi;
    cell.converged = p.converged;
    cell.error = p.error;
    cell.eta_opt = p.result.eta_inf;
    cell.classification = p.result.classification;
    cell.iterations = p.result.iterations;
    cell.gradient_norm = p.result.gradient_norm_final;
    if (out_controls) *out_controls = std::move(p.result.controls);
    return cell;
}

namespace {

void run_row(const MapGrid &grid, const MapConfig &cfg, std::size_t g, std::vector<MapCell> &cells)
{
    const std::size_t nr = grid.J_over_gs.size();
    ControlVector warm;
    bool have_warm = false;
    for (std::size_t r = 0; r < nr; ++r) {
        ControlVector out;
        cells[g * nr + r] =
            optimize_cell(grid.gs_T[g], grid.J_over_gs[r], cfg, have_warm ? &warm : nullptr, &out);
        warm = std::move(out);
        have_warm = true;
    }
}

} // namespace

EfficiencyMap efficiency_map_serial(const MapGrid &grid, const MapConfig &cfg)
{
    EfficiencyMap m;
    m.grid = grid;
    m.cells.resize(grid.gs_T.size() * grid.J_over_gs.size());
    for (std::size_t g = 0; g < grid.gs_T.size(); ++g) run_row(grid, cfg, g, m.cells);
    return m;
}

EfficiencyMap efficiency_map(const MapGrid &grid, const MapConfig &cfg)
{
    EfficiencyMap m;
    m.grid = grid;
    m.cells.resize(grid.gs_T.size() * grid.J_over_gs.size());
    const auto rows = static_cast<long>(grid.gs_T.size());
#ifdef _OPENMP
    const int workers = cfg.workers > 0 ? cfg.workers : omp_get_max_threads();
#pragma omp parallel for schedule(dynamic, 1) num_threads(workers)
#endif
    for (long g = 0; g < rows; ++g) run_row(grid, cfg, static_cast<std::size_t>(g), m.cells);
    return m;
}

} // namespace nobleqm
