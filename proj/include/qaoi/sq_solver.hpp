#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "qaoi/delay_model.hpp"
#include "qaoi/penalty.hpp"

namespace qaoi {

/**
 * Value tables of the single-query problem on one quantized grid.
 *
 * Indices are grid indices: a in 0..N, y in y_lo..y_hi, z in 0..z_max.
 * G_D(a', y) is the optimal expected penalty at a delivery with a' steps left
 * before the query and age y steps. G_R(a, d) is the value right after a request
 * with a steps left and age d at the request; for a >= y_hi it does not depend on d.
 */
struct SolverSolution {
    GridSets grids;
    QuantDirection direction = QuantDirection::Upper;
    Penalty penalty = Penalty::identity();
    std::string delay_spec;

    std::vector<double> pmf;               // pmf[y - y_lo]
    std::vector<double> gd_table;          // [a * ny + (y - y_lo)]
    std::vector<std::int32_t> decision;    // same layout, z index
    std::vector<double> delivery_sum;      // sum_{y <= a} p(y) G_D(a - y, y)
    std::vector<double> pending_prob;      // Pr(Y_q > a)

    std::int64_t anchor_index = 0;         // delivery state used to read off the border point
    std::int64_t border_index = 0;         // Q - Q_BP in steps
    double h_one = 0;
    std::int64_t evaluations = 0;
    bool far_field = true;                 // anchor reached 3 * y_hi without clamping at N
    bool zero_atom_promoted = false;

    double step() const { return grids.step(); }
    std::int64_t n() const { return grids.n_intervals; }
    std::int64_t ny() const { return grids.y_hi - grids.y_lo + 1; }
    double gd(std::int64_t a, std::int64_t y) const { return gd_table[a * ny() + (y - grids.y_lo)]; }
    std::int64_t decision_z(std::int64_t y, std::int64_t a) const { return decision[a * ny() + (y - grids.y_lo)]; }
    /// G_R(a) for a >= y_hi.
    double gr_tail(std::int64_t a) const { return delivery_sum[a]; }
    double border_offset() const { return static_cast<double>(border_index) * step(); }
    double b_upper_grid() const { return static_cast<double>(grids.y_hi) * step(); }
};

/// Ascending-a dynamic program; the (y, z) minimizations of each a-slice run in parallel.
SolverSolution value_tables(const QuantizedDelay& qd, const Penalty& g, const GridSets& grids);

/// Single-threaded literal evaluation of the same recursion, G_R recomputed from its
/// definition at every candidate. Produces bit-identical tables; kept for testing.
SolverSolution value_tables_reference(const QuantizedDelay& qd, const Penalty& g, const GridSets& grids);

/// G_R(a, delta) with a a grid index and delta a time.
double g_r(const SolverSolution& sol, std::int64_t a, double delta);
/// Same with a given as a time; throws ConfigError when a is not on the grid.
double g_r_at(const SolverSolution& sol, double a, double delta);
double border_offset(const SolverSolution& sol);

/// Quantizes for the solver. A lower-quantized atom at zero delay is moved to one step,
/// since a zero-delay delivery would make the recursion cyclic.
QuantizedDelay solver_quantize(const DelayDistribution& dist, double step, QuantDirection dir);

struct BoundsPair {
    SolverSolution lower;
    SolverSolution upper;
    double gap() const { return upper.h_one - lower.h_one; }
    std::int64_t evaluations() const { return lower.evaluations + upper.evaluations; }
};

/// Both quantization directions at N intervals of [0, Q], wait cap M.
BoundsPair solve_pair(const DelayDistribution& dist, const Penalty& g, double q, std::int64_t n, double m);

struct RefinementStep {
    std::int64_t n;
    double step;
    double lower;
    double upper;
    std::int64_t evaluations;
};

struct RefinedSolution {
    SolverSolution upper_solution;
    SolverSolution lower_solution;
    double lower_bound = 0;
    double upper_bound = 0;
    std::int64_t n_final = 0;
    double tolerance = 0;
    std::int64_t evaluations = 0;  // summed over all refinement rounds and both directions
    bool converged = false;
    std::vector<RefinementStep> history;
};

/// Doubles N from n0 until the bound gap drops below eps or max_doublings is reached.
RefinedSolution solve_refined(const DelayDistribution& dist, const Penalty& g, double q, double m, double eps,
                              std::int64_t n0, int max_doublings = 8);

/// N = max(1, round(q / step)).
std::int64_t intervals_for_step(double q, double step);

}  // namespace qaoi
