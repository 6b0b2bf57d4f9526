#pragma once

#include <limits>
#include <memory>
#include <optional>
#include <string>

#include "qaoi/delay_model.hpp"
#include "qaoi/penalty.hpp"
#include "qaoi/sq_solver.hpp"

namespace qaoi {

enum class PolicyKind { PowGrid, ZeroWait, UowThreshold };

/// What the destination knows right after delivery j.
struct DecisionContext {
    double delivery_time = 0;   // D_j
    double realized_delay = 0;  // Y_j; 0 for the virtual delivery at start-up
    double next_query = 0;      // first query strictly after D_j
    double following_query = 0;
};

class Policy {
public:
    /// Periodic-query policy built from a single-query solution and the query period.
    static Policy pow_grid(std::shared_ptr<const SolverSolution> sol, double period);
    static Policy zero_wait();
    /// Wait Z = min(max(0, beta - Y), wait_cap) after each delivery.
    static Policy uow_threshold(double beta, double wait_cap);

    PolicyKind kind() const { return kind_; }
    double beta() const { return beta_; }
    double wait_cap() const { return wait_cap_; }
    double period() const { return period_; }
    const SolverSolution* solution() const { return sol_.get(); }
    std::string name() const;

    /// Absolute request time of the next update, never before ctx.delivery_time.
    double next_request(const DecisionContext& ctx) const;

private:
    Policy() = default;
    double pow_request(const DecisionContext& ctx) const;

    PolicyKind kind_ = PolicyKind::ZeroWait;
    double beta_ = 0;
    double wait_cap_ = 0;
    double period_ = 0;
    std::shared_ptr<const SolverSolution> sol_;
};

/// Long-run time average of g(age) under the threshold policy, by renewal reward:
/// E[integral of g from Y to Y + Z + Y'] / E[Z + Y'].
double uow_time_average(const DelayDistribution& dist, const Penalty& g, double beta,
                        double wait_cap = std::numeric_limits<double>::infinity(), int panels = 64);

/// E[Y + Z] for the threshold policy: the mean time between requests.
double uow_mean_cycle(const DelayDistribution& dist, double beta,
                      double wait_cap = std::numeric_limits<double>::infinity(), int panels = 64);

struct UowOptimum {
    Policy policy;
    double beta;
    double value;
    double mean_cycle;
    bool constraint_active;
};

/// Best threshold on [B_L, B_U + M]; with min_mean_cycle, only thresholds whose mean
/// cycle reaches it are admissible. wait_cap defaults to 4 B_U.
UowOptimum uow_optimal_policy(const DelayDistribution& dist, const Penalty& g,
                              std::optional<double> min_mean_cycle = std::nullopt,
                              std::optional<double> wait_cap = std::nullopt);

/// Golden-section minimization of f on [lo, hi] to absolute tolerance tol.
template <class F>
double golden_section_min(F&& f, double lo, double hi, double tol) {
    const double inv_phi = 0.6180339887498949;
    double x1 = hi - inv_phi * (hi - lo), x2 = lo + inv_phi * (hi - lo);
    double f1 = f(x1), f2 = f(x2);
    while (hi - lo > tol) {
        if (f1 <= f2) {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = f(x2);
        }
    }
    return f1 <= f2 ? x1 : x2;
}

}  // namespace qaoi
