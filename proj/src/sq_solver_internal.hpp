#pragma once

#include <cmath>
#include <vector>

#include "qaoi/sq_solver.hpp"

namespace qaoi::detail {

constexpr double kTieTol = 1e-12;

/// Running argmin that keeps the largest index among values equal up to kTieTol.
struct LargestArgmin {
    double best = 0;
    std::int64_t arg = -1;

    void consider(double v, std::int64_t z) {
        if (arg < 0) {
            best = v;
            arg = z;
            return;
        }
        const double tol = kTieTol * std::abs(best);
        if (v < best - tol) {
            best = v;
            arg = z;
        } else if (v <= best + tol) {
            arg = z;
        }
    }
};

/// Validates inputs, fills pmf and allocates tables. Returns g on the grid k * step.
std::vector<double> prepare(SolverSolution& sol, const QuantizedDelay& qd, const Penalty& g, const GridSets& grids);

/// Reads the border point and h_one off the finished tables.
void finalize(SolverSolution& sol);

}  // namespace qaoi::detail
