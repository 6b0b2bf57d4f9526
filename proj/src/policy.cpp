#include "qaoi/policy.hpp"

#include <algorithm>
#include <cmath>

#include "qaoi/error.hpp"
#include "qaoi/text.hpp"

namespace qaoi {

Policy Policy::pow_grid(std::shared_ptr<const SolverSolution> sol, double period) {
    if (!sol) throw ConfigError("pow policy needs a solver solution");
    if (!(period > 0)) throw ConfigError("query period must be positive");
    // The border point of the next query must lie after the channel has cleared.
    const double needed = sol->border_offset() + sol->b_upper_grid();
    if (period < needed - 1e-9 * needed)
        throw ConfigError("query period " + format_double(period) + " is shorter than border offset plus delay bound (" +
                          format_double(needed) + ")");
    Policy p;
    p.kind_ = PolicyKind::PowGrid;
    p.period_ = period;
    p.wait_cap_ = sol->grids.wait_cap;
    p.sol_ = std::move(sol);
    return p;
}

Policy Policy::zero_wait() {
    return Policy{};
}

Policy Policy::uow_threshold(double beta, double wait_cap) {
    if (!(beta >= 0) || !std::isfinite(beta)) throw ConfigError("threshold must be finite and nonnegative");
    if (!(wait_cap >= 0)) throw ConfigError("wait cap must be nonnegative");
    Policy p;
    p.kind_ = PolicyKind::UowThreshold;
    p.beta_ = beta;
    p.wait_cap_ = wait_cap;
    return p;
}

std::string Policy::name() const {
    switch (kind_) {
        case PolicyKind::PowGrid: return "pow";
        case PolicyKind::ZeroWait: return "zero-wait";
        case PolicyKind::UowThreshold: return "uow";
    }
    return "?";
}

double Policy::next_request(const DecisionContext& ctx) const {
    switch (kind_) {
        case PolicyKind::ZeroWait: return ctx.delivery_time;
        case PolicyKind::UowThreshold:
            return ctx.delivery_time + std::min(wait_cap_, std::max(0.0, beta_ - ctx.realized_delay));
        case PolicyKind::PowGrid: return pow_request(ctx);
    }
    return ctx.delivery_time;
}

double Policy::pow_request(const DecisionContext& ctx) const {
    const SolverSolution& sol = *sol_;
    const double s = sol.step();
    const double d = ctx.delivery_time;
    const double bo = sol.border_offset();
    double target = ctx.next_query;

    if (ctx.realized_delay <= 0) {
        // Start-up state: no delivery to mirror, go for the first reachable border point.
        while (target - bo < d) target += period_;
        return target - bo;
    }

    const double r = d - ctx.realized_delay;
    const std::int64_t yq = std::clamp(ceil_index(ctx.realized_delay, s), sol.grids.y_lo, sol.grids.y_hi);
    double request = target - bo;
    for (int attempt = 0; attempt < 3; ++attempt) {
        // Remaining steps to the target query in the upper-quantized mirror process,
        // which requested at the same instant and delivered at r + yq * s.
        const std::int64_t aq = std::llround((target - r) / s) - yq;
        if (aq <= 0) {
            target += period_;
            request = target - bo;
            continue;
        }
        if (aq > sol.n()) {
            request = target - bo;
            break;
        }
        const std::int64_t rem = aq - sol.decision_z(yq, aq);
        if (rem <= 0) {
            // No further request before this query.
            target += period_;
            request = target - bo;
            continue;
        }
        request = target - static_cast<double>(rem) * s;
        break;
    }
    return std::max(request, d);
}

// --- update-or-wait evaluation -------------------------------------------------

namespace {

double wait_for(double y, double beta, double cap) {
    return std::min(std::max(0.0, beta - y), cap);
}

}  // namespace

double uow_mean_cycle(const DelayDistribution& dist, double beta, double wait_cap, int panels) {
    double m = 0;
    for (const auto& n : expectation_nodes(dist, panels)) m += n.prob * (n.value + wait_for(n.value, beta, wait_cap));
    return m;
}

double uow_time_average(const DelayDistribution& dist, const Penalty& g, double beta, double wait_cap, int panels) {
    if (!(beta >= 0)) throw ConfigError("threshold must be nonnegative");
    const auto nodes = expectation_nodes(dist, panels);
    double reward = 0, cycle = 0, mean_y = 0;
    for (const auto& outer : nodes) {
        const double x = outer.value + wait_for(outer.value, beta, wait_cap);
        double inner = 0;
        for (const auto& next : nodes) inner += next.prob * g.integral(outer.value, x + next.value);
        reward += outer.prob * inner;
        cycle += outer.prob * (x - outer.value);
        mean_y += outer.prob * outer.value;
    }
    const double value = reward / (cycle + mean_y);
    if (!std::isfinite(value)) throw NumericError("time-average evaluation is not finite at beta=" + format_double(beta));
    return value;
}

UowOptimum uow_optimal_policy(const DelayDistribution& dist, const Penalty& g, std::optional<double> min_mean_cycle,
                              std::optional<double> wait_cap) {
    const double cap = wait_cap.value_or(4.0 * dist.b_hi());
    if (!(cap > 0)) throw ConfigError("wait cap must be positive");
    const int panels = 32;
    double lo = dist.b_lo();
    const double hi = dist.b_hi() + cap;
    bool constrained = false;
    if (min_mean_cycle) {
        const double c = *min_mean_cycle;
        if (uow_mean_cycle(dist, hi, cap, panels) < c)
            throw ConfigError("no threshold reaches mean cycle " + format_double(c));
        if (uow_mean_cycle(dist, lo, cap, panels) < c) {
            // Mean cycle is nondecreasing in beta: bisect for the smallest admissible threshold.
            double a = lo, b = hi;
            for (int i = 0; i < 200 && b - a > 1e-12 * std::max(1.0, b); ++i) {
                const double mid = 0.5 * (a + b);
                (uow_mean_cycle(dist, mid, cap, panels) >= c ? b : a) = mid;
            }
            lo = b;
            constrained = true;
        }
    }
    auto f = [&](double beta) { return uow_time_average(dist, g, beta, cap, panels); };

    constexpr int kScan = 256;
    std::vector<double> values(kScan + 1);
    std::size_t best = 0;
    for (int i = 0; i <= kScan; ++i) {
        values[i] = f(lo + (hi - lo) * i / kScan);
        if (values[i] < values[best]) best = static_cast<std::size_t>(i);
    }
    const double h = (hi - lo) / kScan;
    const double a = std::max(lo, lo + h * (static_cast<double>(best) - 1));
    const double b = std::min(hi, lo + h * (static_cast<double>(best) + 1));
    double beta = golden_section_min(f, a, b, 1e-6);
    double value = f(beta);
    if (values[best] < value) {
        beta = lo + h * static_cast<double>(best);
        value = values[best];
    }
    // Prefer the left end (zero-wait when unconstrained) when it is as good.
    if (values[0] <= value + 1e-12 * std::abs(value)) {
        beta = lo;
        value = values[0];
    }
    UowOptimum out{Policy::uow_threshold(beta, cap), beta, value, uow_mean_cycle(dist, beta, cap, panels), false};
    out.constraint_active = constrained && beta == lo;
    return out;
}

}  // namespace qaoi
