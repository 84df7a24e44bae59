#pragma once

#include <array>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "nobleqm/kernels.hpp"
#include "nobleqm/types.hpp"

namespace nobleqm {

enum class Classification { Sequential, Adiabatic, Mixed };
const char *to_string(Classification c);

/// Storage problem seen by the optimizer: controls and input live on the
/// same nodes. Nodes cover the input window and an optional tail in which
/// the input is zero (room for the S -> K swap).
struct StorageProblem {
    PhysicalParams params;
    Normalization norm = Normalization::Ideal;
    std::vector<double> times;
    std::vector<cplx> input;
    double photons = 1.0;
    std::size_t pulse_end = 0; ///< node index at the end of the input window

    std::size_t nodes() const { return times.size(); }
};

/// Builds the optimizer problem for `input`, appending `tail_intervals`
/// equal intervals of total length `tail_duration`. gamma_k is set to zero
/// for Normalization::Ideal, matching the eta_inf convention.
StorageProblem make_storage_problem(const PhysicalParams &params, const Envelope &input,
                                    double tail_duration, std::size_t tail_intervals,
                                    Normalization norm = Normalization::Ideal);

/// Channels are (Re omega, Im omega, delta_s, delta) per node, where omega is
/// the Rabi frequency in units of sqrt(gamma_p (C + 1)), so |omega|^2 is the
/// stimulated rate gamma_Omega, and delta = delta_k - delta_s. Node i holds
/// over [t_i, t_{i+1}); the last node has no interval and no gradient.
struct ControlVector {
    enum Channel { OmegaRe = 0, OmegaIm = 1, DeltaS = 2, Delta = 3 };

    std::vector<cplx> omega;
    std::vector<double> delta_s;
    std::vector<double> delta;
    double omega_max = std::numeric_limits<double>::infinity();
    double delta_max = std::numeric_limits<double>::infinity();
    std::array<bool, 4> mask{true, true, true, true};

    static ControlVector zeros(std::size_t nodes);
    std::size_t nodes() const { return omega.size(); }
    double value(std::size_t node, int channel) const;
    void set(std::size_t node, int channel, double v);
    /// Clamps |omega| and |delta_s|, |delta| onto the box.
    void project();
    bool within_bounds(double slack = 1e-12) const;
};

/// Physical schedules (pulse window, tail) for a control vector. Both use
/// Interpolation::Hold, matching the piecewise-constant optimizer controls.
std::vector<ControlSchedule> to_schedules(const StorageProblem &problem, const ControlVector &c);
/// Inverse of to_schedules on the problem nodes.
ControlVector from_schedules(const StorageProblem &problem, const std::vector<ControlSchedule> &segments);

/// Node samples of S and K along the horizon.
struct NodeTrajectory {
    std::vector<cplx> s, k;
};

/// Stored efficiency |K(t_end)|^2 / N.
double objective(const StorageProblem &problem, const ControlVector &controls,
                 NodeTrajectory *record = nullptr);

/// Exact gradient of `objective` with respect to every unmasked channel,
/// by one forward and one adjoint sweep. Masked channels are zero.
ControlVector gradient_adjoint(const StorageProblem &problem, const ControlVector &controls,
                               double *value = nullptr);

struct AscentConfig {
    int max_iter = 500;
    double tol = 1e-6;
    double initial_step = 0.05; ///< first step, in scaled units
    int max_backtracks = 40;
    double omega_scale = 0.0;   ///< 0 picks from the bounds/controls
    double delta_scale = 0.0;
    int memory = 8;             ///< L-BFGS curvature pairs
};

struct OptResult {
    ControlVector controls;
    double eta_inf = 0.0;
    std::vector<std::pair<int, double>> history;
    Classification classification = Classification::Mixed;
    double gradient_norm_final = 0.0;
    int iterations = 0;
    bool converged = false;
};

class NonConvergence : public Error {
public:
    NonConvergence(const std::string &what, OptResult best) : Error(what), best(std::move(best)) {}
    OptResult best;
};

/// Projected gradient ascent with backtracking. Stops when the relative
/// improvement of an accepted step drops below tol, or when no ascent step
/// can be found. Throws NonConvergence (carrying the best result) when
/// max_iter is exhausted first.
OptResult gradient_ascent(const StorageProblem &problem, const ControlVector &init,
                          const AscentConfig &config = {});

/// Sequential if |S(t_mark)|^2/N >= 0.95, Adiabatic if max |S|^2/N <= 0.05.
Classification classify_solution(const Trajectory &trajectory, double t_mark, double photons);
Classification classify_nodes(std::span<const cplx> s, std::size_t mark, double photons);
Classification classify(const StorageProblem &problem, const ControlVector &controls);

/// Initial controls for a problem following the analytic protocol of the
/// given scheme (constant prescribed rate). Throws InvalidRegime.
ControlVector analytic_controls(const StorageProblem &problem, Scheme scheme, double T);
/// Matched-kernel controls for the given scheme. Throws Unreachable.
ControlVector matched_controls(const StorageProblem &problem, Scheme scheme, const Envelope &input);

/// Default box: gamma_Omega <= 1e3 max(1/T, gamma_s, J^2 T), |delta| <= 1e3 max(J, 1/T).
void apply_default_bounds(ControlVector &c, const PhysicalParams &params, double T);

// ---------------------------------------------------------------------------
// Efficiency map over (gamma_s T, J / gamma_s)

struct MapGrid {
    std::vector<double> gs_T;
    std::vector<double> J_over_gs;
    static MapGrid log_spaced(double gmin, double gmax, std::size_t gn, double rmin, double rmax,
                              std::size_t rn);
    static MapGrid defaults() { return log_spaced(1e-2, 1e2, 21, 1e-1, 1e2, 21); }
};

struct MapConfig {
    AscentConfig ascent{1500, 1e-7, 0.05, 40, 0.0, 0.0, 30}; ///< max_iter is the per-cell total
    int screen_iter = 150; ///< iterations given to every start before the best runs on
    std::size_t pulse_intervals = 300;
    std::size_t tail_intervals = 32;
    double tail_swaps = 1.0; ///< window after the pulse, in resonant swap times pi/(2J)
    int workers = 1;
    bool free_delta_s = true;
};

struct MapCell {
    double gs_T = 0.0;
    double J_over_gs = 0.0;
    double eta_opt = 0.0;
    double eta_seq = 0.0; ///< analytic, 0 outside its regime
    double eta_adi = 0.0;
    Classification classification = Classification::Mixed;
    int iterations = 0;
    double gradient_norm = 0.0;
    bool converged = false;
    std::string error;

    double eta_analytic() const { return std::max(eta_seq, eta_adi); }
};

/// Rows of constant gamma_s T; row-major [g][r].
struct EfficiencyMap {
    MapGrid grid;
    std::vector<MapCell> cells;
    const MapCell &at(std::size_t g, std::size_t r) const { return cells[g * grid.J_over_gs.size() + r]; }
};

/// Full outcome of one map-point optimization.
struct PointResult {
    StorageProblem problem;
    OptResult result;
    double eta_seq = 0.0;
    double eta_adi = 0.0;
    bool converged = false;
    std::string error;
};

/// Optimizes the point (gs_T, J_over_gs) with T = 1. The analytic and
/// matched starts (constant drive if neither exists), `warm`, and
/// `random_starts` perturbed copies of the best initial start drawn from
/// `seed` are each ascended for `screen_iter` iterations; the best continues
/// up to `ascent.max_iter` iterations in total.
PointResult optimize_point(double gs_T, double J_over_gs, const MapConfig &config,
                           const ControlVector *warm = nullptr, int random_starts = 0,
                           std::uint64_t seed = 1);

/// Optimizes one cell (T = 1). `warm` may hold the controls of a neighbour.
MapCell optimize_cell(double gs_T, double J_over_gs, const MapConfig &config,
                      const ControlVector *warm = nullptr, ControlVector *out_controls = nullptr);

/// Serial reference sweep.
EfficiencyMap efficiency_map_serial(const MapGrid &grid, const MapConfig &config);
/// OpenMP sweep: rows in parallel, warm starts along J / gamma_s within a row.
/// Identical output to the serial sweep for any worker count.
EfficiencyMap efficiency_map(const MapGrid &grid, const MapConfig &config);

/// Physical parameters of a map cell in units where T = 1.
PhysicalParams cell_params(double gs_T, double J_over_gs);

} // namespace nobleqm
