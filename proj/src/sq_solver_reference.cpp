#include <algorithm>

#include "qaoi/sq_solver.hpp"
#include "sq_solver_internal.hpp"

namespace qaoi {

namespace {

// G_R(b, d) straight from its definition: deliveries that land before the query
// continue from G_D, otherwise the query sees age b + d.
double request_value(const SolverSolution& sol, const Penalty& g, std::int64_t b, std::int64_t d) {
    const auto& gr = sol.grids;
    double s = 0, p = 0;
    for (std::int64_t y = gr.y_lo; y <= gr.y_hi; ++y) {
        const double py = sol.pmf[static_cast<std::size_t>(y - gr.y_lo)];
        if (y <= b)
            s += py * sol.gd(b - y, y);
        else
            p += py;
    }
    if (b >= gr.y_hi) return s;
    return s + g(static_cast<double>(b + d) * gr.step()) * p;
}

}  // namespace

SolverSolution value_tables_reference(const QuantizedDelay& qd, const Penalty& g, const GridSets& grids) {
    SolverSolution sol;
    detail::prepare(sol, qd, g, grids);
    const std::int64_t n = grids.n_intervals;
    const std::int64_t ny = sol.ny();
    for (std::int64_t a = 0; a <= n; ++a) {
        double s = 0, p = 0;
        for (std::int64_t y = grids.y_lo; y <= grids.y_hi; ++y) {
            const double py = sol.pmf[static_cast<std::size_t>(y - grids.y_lo)];
            if (y <= a)
                s += py * sol.gd(a - y, y);
            else
                p += py;
        }
        sol.delivery_sum[a] = s;
        sol.pending_prob[a] = p;
        for (std::int64_t y = grids.y_lo; y <= grids.y_hi; ++y) {
            detail::LargestArgmin m;
            for (std::int64_t z = 0; z <= std::min(grids.z_max, a); ++z) {
                ++sol.evaluations;
                m.consider(request_value(sol, g, a - z, y + z), z);
            }
            // Waiting past the query: no further request, the query sees age a + y.
            if (grids.z_max > a) m.consider(g(static_cast<double>(a + y) * grids.step()), grids.z_max);
            const auto cell = static_cast<std::size_t>(a * ny + (y - grids.y_lo));
            sol.gd_table[cell] = m.best;
            sol.decision[cell] = static_cast<std::int32_t>(m.arg);
        }
    }
    detail::finalize(sol);
    return sol;
}

}  // namespace qaoi
