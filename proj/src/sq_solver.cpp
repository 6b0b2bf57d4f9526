#include "qaoi/sq_solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "qaoi/error.hpp"
#include "qaoi/text.hpp"
#include "sq_solver_internal.hpp"

namespace qaoi {

namespace detail {

std::vector<double> prepare(SolverSolution& sol, const QuantizedDelay& qd, const Penalty& g, const GridSets& grids) {
    const double step = grids.step();
    if (qd.atoms.empty()) throw ConfigError("quantized delay has no atoms");
    if (std::abs(qd.step - step) > 1e-9 * step)
        throw ConfigError("grid step " + format_double(step) + " differs from quantization step " +
                          format_double(qd.step));
    if (grids.y_lo != qd.min_index() || grids.y_hi != qd.max_index())
        throw ConfigError("y-grid does not span the quantized delay atoms");
    if (grids.y_lo < 1) throw ConfigError("quantized delay has an atom at zero delay");
    if (grids.n_intervals <= grids.y_hi)
        throw ConfigError("query horizon " + format_double(grids.q_horizon) +
                          " must exceed the largest quantized delay " + format_double(grids.y_hi * step));
    if (grids.z_max < 0) throw ConfigError("wait cap must be nonnegative");

    const std::int64_t n = grids.n_intervals;
    const double age_hi = static_cast<double>(n + grids.y_hi) * step;
    if (auto v = g.validate(age_hi)) throw ConfigError("invalid penalty: " + v->message);

    sol.grids = grids;
    sol.direction = qd.direction;
    sol.penalty = g;
    const std::int64_t ny = sol.ny();
    sol.pmf.assign(static_cast<std::size_t>(ny), 0.0);
    for (const auto& [idx, p] : qd.atoms) sol.pmf[static_cast<std::size_t>(idx - grids.y_lo)] = p;
    sol.gd_table.assign(static_cast<std::size_t>((n + 1) * ny), 0.0);
    sol.decision.assign(static_cast<std::size_t>((n + 1) * ny), 0);
    sol.delivery_sum.assign(static_cast<std::size_t>(n + 1), 0.0);
    sol.pending_prob.assign(static_cast<std::size_t>(n + 1), 0.0);
    sol.evaluations = 0;

    std::vector<double> gtab(static_cast<std::size_t>(n + grids.y_hi + 1));
    for (std::size_t k = 0; k < gtab.size(); ++k) gtab[k] = g(static_cast<double>(k) * step);
    for (double v : gtab)
        if (!std::isfinite(v)) throw NumericError("penalty is not finite on the age range of the grid");
    return gtab;
}

void finalize(SolverSolution& sol) {
    const auto& gr = sol.grids;
    std::int64_t anchor = 3 * gr.y_hi;
    sol.far_field = anchor <= gr.n_intervals;
    anchor = std::min(anchor, gr.n_intervals);
    sol.anchor_index = anchor;
    sol.h_one = sol.gd(anchor, gr.y_lo);
    const std::int64_t z = sol.decision_z(gr.y_lo, anchor);
    if (z <= anchor) {
        sol.border_index = anchor - z;
        return;
    }
    // Skipping ties with requesting (e.g. a constant penalty): report the earliest
    // request point in the flat region that attains the optimum.
    std::int64_t best_b = gr.y_hi;
    for (std::int64_t b = gr.y_hi; b <= anchor; ++b) {
        if (sol.delivery_sum[b] <= sol.h_one + kTieTol * std::abs(sol.h_one)) {
            best_b = b;
            break;
        }
        if (sol.delivery_sum[b] < sol.delivery_sum[best_b]) best_b = b;
    }
    sol.border_index = best_b;
}

}  // namespace detail

SolverSolution value_tables(const QuantizedDelay& qd, const Penalty& g, const GridSets& grids) {
    SolverSolution sol;
    const std::vector<double> gtab = detail::prepare(sol, qd, g, grids);
    const std::int64_t n = grids.n_intervals;
    const std::int64_t ny = sol.ny();
    const std::int64_t y_lo = grids.y_lo;
    const std::int64_t y_hi = grids.y_hi;
    const std::int64_t z_max = grids.z_max;
    const double* pmf = sol.pmf.data();
    const double* gt = gtab.data();
    double* gd = sol.gd_table.data();
    std::int32_t* dec = sol.decision.data();
    double* S = sol.delivery_sum.data();
    double* P = sol.pending_prob.data();

#pragma omp parallel
    for (std::int64_t a = 0; a <= n; ++a) {
#pragma omp single
        {
            double s = 0, p = 0;
            for (std::int64_t j = 0; j < ny; ++j) {
                const std::int64_t y = y_lo + j;
                if (y <= a)
                    s += pmf[j] * gd[(a - y) * ny + j];
                else
                    p += pmf[j];
            }
            S[a] = s;
            P[a] = p;
        }
        const std::int64_t zt = std::min(z_max, a);
#pragma omp for schedule(static)
        for (std::int64_t j = 0; j < ny; ++j) {
            const std::int64_t y = y_lo + j;
            detail::LargestArgmin m;
            for (std::int64_t z = 0; z <= zt; ++z) {
                const std::int64_t b = a - z;
                m.consider(b >= y_hi ? S[b] : S[b] + gt[a + y] * P[b], z);
            }
            if (z_max > a) m.consider(gt[a + y], z_max);
            gd[a * ny + j] = m.best;
            dec[a * ny + j] = static_cast<std::int32_t>(m.arg);
        }
    }
    for (std::int64_t a = 0; a <= n; ++a) sol.evaluations += ny * (std::min(z_max, a) + 1);
    detail::finalize(sol);
    return sol;
}

double g_r(const SolverSolution& sol, std::int64_t a, double delta) {
    if (a < 0 || a > sol.n()) throw ConfigError("G_R index " + std::to_string(a) + " is outside the a-grid");
    if (a >= sol.grids.y_hi) return sol.delivery_sum[a];
    return sol.delivery_sum[a] + sol.penalty(static_cast<double>(a) * sol.step() + delta) * sol.pending_prob[a];
}

double g_r_at(const SolverSolution& sol, double a, double delta) {
    const std::int64_t k = snap_index(a, sol.step());
    if (std::abs(static_cast<double>(k) * sol.step() - a) > 1e-9 * std::max(1.0, std::abs(a)))
        throw ConfigError("time " + format_double(a) + " is not on the a-grid");
    return g_r(sol, k, delta);
}

double border_offset(const SolverSolution& sol) { return sol.border_offset(); }

QuantizedDelay solver_quantize(const DelayDistribution& dist, double step, QuantDirection dir) {
    QuantizedDelay qd = quantize(dist, step, dir);
    if (!qd.atoms.empty() && qd.atoms.front().first == 0) {
        double p0 = qd.atoms.front().second;
        qd.atoms.erase(qd.atoms.begin());
        if (!qd.atoms.empty() && qd.atoms.front().first == 1)
            qd.atoms.front().second += p0;
        else
            qd.atoms.insert(qd.atoms.begin(), {1, p0});
    }
    return qd;
}

BoundsPair solve_pair(const DelayDistribution& dist, const Penalty& g, double q, std::int64_t n, double m) {
    if (n < 1) throw ConfigError("number of grid intervals must be >= 1");
    const double step = q / static_cast<double>(n);
    auto solve_dir = [&](QuantDirection dir) {
        QuantizedDelay qd = solver_quantize(dist, step, dir);
        SolverSolution sol = value_tables(qd, g, build_grids(q, n, m, qd));
        sol.delay_spec = dist.spec();
        sol.zero_atom_promoted = dir == QuantDirection::Lower && quantize(dist, step, dir).min_index() == 0;
        return sol;
    };
    BoundsPair out{solve_dir(QuantDirection::Lower), solve_dir(QuantDirection::Upper)};
    return out;
}

std::int64_t intervals_for_step(double q, double step) {
    if (!(step > 0)) throw ConfigError("grid step must be positive");
    return std::max<std::int64_t>(1, std::llround(q / step));
}

RefinedSolution solve_refined(const DelayDistribution& dist, const Penalty& g, double q, double m, double eps,
                              std::int64_t n0, int max_doublings) {
    if (!(eps > 0)) throw ConfigError("tolerance must be positive");
    if (n0 < 4) throw ConfigError("initial grid must have at least 4 intervals");
    if (max_doublings < 0) throw ConfigError("doubling cap must be nonnegative");
    if (!(q > dist.b_hi()))
        throw ConfigError("query horizon " + format_double(q) + " must exceed the delay bound " +
                          format_double(dist.b_hi()));
    RefinedSolution out;
    out.tolerance = eps;
    std::int64_t n = n0;
    for (int k = 0; k <= max_doublings; ++k, n *= 2) {
        BoundsPair pair = solve_pair(dist, g, q, n, m);
        out.history.push_back({n, q / static_cast<double>(n), pair.lower.h_one, pair.upper.h_one, pair.evaluations()});
        out.evaluations += pair.evaluations();
        out.lower_bound = pair.lower.h_one;
        out.upper_bound = pair.upper.h_one;
        out.n_final = n;
        out.lower_solution = std::move(pair.lower);
        out.upper_solution = std::move(pair.upper);
        if (out.upper_bound - out.lower_bound < eps) {
            out.converged = true;
            break;
        }
    }
    return out;
}

}  // namespace qaoi
