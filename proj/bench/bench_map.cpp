// Serial reference map vs the OpenMP map on a small grid.
// usage: bench_map [cells per axis] [workers]

#include <chrono>
#include <cstdio>
#include <cstdlib>

#include <omp.h>

#include "nobleqm/control.hpp"

using namespace nobleqm;

int main(int argc, char **argv)
{
    const std::size_t n = argc > 1 ? std::strtoul(argv[1], nullptr, 10) : 5;
    MapConfig cfg;
    cfg.ascent.max_iter = 60;
    cfg.workers = argc > 2 ? std::atoi(argv[2]) : omp_get_num_procs();
    const MapGrid grid = MapGrid::log_spaced(1e-2, 1e2, n, 1e-1, 1e2, n);

    using clock = std::chrono::steady_clock;
    auto t0 = clock::now();
    const EfficiencyMap s = efficiency_map_serial(grid, cfg);
    auto t1 = clock::now();
    const EfficiencyMap p = efficiency_map(grid, cfg);
    auto t2 = clock::now();

    std::size_t differ = 0;
    for (std::size_t i = 0; i < s.cells.size(); ++i)
        if (s.cells[i].eta_opt != p.cells[i].eta_opt) ++differ;
    const double ts = std::chrono::duration<double>(t1 - t0).count();
    const double tp = std::chrono::duration<double>(t2 - t1).count();
    std::printf("grid %zux%zu, %d iterations max\n", n, n, cfg.ascent.max_iter);
    std::printf("serial   %.2f s\n", ts);
    std::printf("openmp   %.2f s (%d workers, speedup %.2f)\n", tp, cfg.workers, ts / tp);
    std::printf("cells differing: %zu\n", differ);
    return differ == 0 ? 0 : 1;
}
