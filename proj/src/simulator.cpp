#include "qaoi/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <random>

#include <boost/math/distributions/students_t.hpp>

#include "qaoi/error.hpp"
#include "qaoi/text.hpp"

namespace qaoi {

QuerySchedule make_schedule(ScheduleKind kind, double param, double horizon, Rng* rng) {
    if (!(param > 0)) throw ConfigError("schedule parameter must be positive");
    if (!(horizon > 0)) throw ConfigError("horizon must be positive");
    QuerySchedule s;
    s.kind = kind;
    s.param = param;
    s.horizon = horizon;
    if (kind == ScheduleKind::Periodic) {
        for (std::int64_t k = 1;; ++k) {
            const double t = static_cast<double>(k) * param;
            if (t > horizon) break;
            s.instants.push_back(t);
        }
    } else {
        if (!rng) throw ConfigError("a Poisson schedule needs a random state");
        double t = 0;
        while (true) {
            t += -std::log1p(-uniform01(*rng)) / param;
            if (t > horizon) break;
            s.instants.push_back(t);
        }
    }
    return s;
}

double default_warmup(const Policy& policy, const DelayDistribution& dist, const QuerySchedule& schedule) {
    double cap = 0;
    if (policy.kind() != PolicyKind::ZeroWait) cap = policy.wait_cap();
    if (!std::isfinite(cap)) cap = 0;
    return std::max(3.0 * dist.b_hi(), cap) + schedule.mean_gap();
}

TrajectoryMetrics run(const Policy& policy, const DelayDistribution& dist, const Penalty& g,
                      const QuerySchedule& schedule, std::uint64_t seed, const RunOptions& opts) {
    if (policy.kind() == PolicyKind::PowGrid) {
        if (schedule.kind != ScheduleKind::Periodic ||
            std::abs(schedule.param - policy.period()) > 1e-9 * policy.period())
            throw ConfigError("pow policy needs a periodic schedule with its own period " +
                              format_double(policy.period()));
    }
    const double warmup = opts.warmup >= 0 ? opts.warmup : default_warmup(policy, dist, schedule);
    const auto& qs = schedule.instants;
    std::ostream* out = opts.trajectory;
    if (out) *out << "event_time,event_kind,age_after_event\n";

    Rng rng(seed);
    TrajectoryMetrics m;
    double u = 0;          // generation time of the freshest delivered update
    double d = 0;          // time of the latest delivery
    double y = 0;          // its delay (0 for the virtual start)
    std::size_t qi = 0;    // next query to score
    double qsum = 0;
    double t_first = -1;   // first delivery at or after warm-up
    double t_last = -1;
    double integral = 0;
    std::int64_t deliveries = 0;

    auto next_query_after = [&](double t) {
        if (schedule.kind == ScheduleKind::Periodic) {
            double k = std::floor(t / schedule.param) + 1;
            return k * schedule.param;
        }
        auto it = std::upper_bound(qs.begin(), qs.end(), t);
        return it != qs.end() ? *it : std::max(t, qs.empty() ? 0.0 : qs.back()) + schedule.mean_gap();
    };

    while (true) {
        DecisionContext ctx;
        ctx.delivery_time = d;
        ctx.realized_delay = y;
        ctx.next_query = next_query_after(d);
        ctx.following_query = schedule.kind == ScheduleKind::Periodic ? ctx.next_query + schedule.param
                                                                       : next_query_after(ctx.next_query);
        double r = policy.next_request(ctx);
        if (!(r >= d - 1e-9 * std::max(1.0, d)))
            throw NumericError("policy '" + policy.name() + "' requested at " + format_double(r) +
                               " before the pending delivery at " + format_double(d));
        r = std::max(r, d);
        const double delay = dist.sample(rng);
        const double d_next = r + delay;
        if (out) *out << format_double(r) << ",request," << format_double(r - u) << '\n';

        // Queries strictly before the delivery still see the old update.
        while (qi < qs.size() && qs[qi] < d_next) {
            const double age = qs[qi] - u;
            if (qs[qi] > warmup) {
                qsum += g(age);
                ++m.n_queries;
            } else {
                ++m.warmup_queries_dropped;
            }
            if (out) *out << format_double(qs[qi]) << ",query," << format_double(age) << '\n';
            ++qi;
        }
        if (d_next > schedule.horizon) break;

        if (t_first >= 0) {
            integral += g.integral(d - u, d_next - u);
            ++deliveries;
            t_last = d_next;
        } else if (d_next >= warmup) {
            t_first = d_next;
            t_last = d_next;
        }
        if (out) *out << format_double(d_next) << ",delivery," << format_double(delay) << '\n';
        u = r;
        d = d_next;
        y = delay;
    }

    if (m.n_queries == 0) throw ConfigError("no queries remain after the warm-up period");
    m.qaoi_mean = qsum / static_cast<double>(m.n_queries);
    const double span = t_last - t_first;
    if (t_first >= 0 && span > 0) {
        m.time_avg = integral / span;
        m.tx_count = deliveries;
        m.tx_rate = static_cast<double>(deliveries) / span;
    } else {
        m.time_avg = std::nan("");
        m.tx_rate = std::nan("");
    }
    return m;
}

Estimate summarize(const std::vector<double>& xs) {
    Estimate e;
    const auto n = xs.size();
    if (n == 0) return e;
    double sum = 0;
    for (double x : xs) sum += x;
    e.mean = sum / static_cast<double>(n);
    if (n < 2) return e;
    double ss = 0;
    for (double x : xs) ss += (x - e.mean) * (x - e.mean);
    e.std_error = std::sqrt(ss / static_cast<double>(n - 1) / static_cast<double>(n));
    boost::math::students_t t(static_cast<double>(n - 1));
    e.ci_half = boost::math::quantile(boost::math::complement(t, 0.025)) * e.std_error;
    return e;
}

AggregateMetrics replicate(const Policy& policy, const DelayDistribution& dist, const Penalty& g, ScheduleKind kind,
                           double param, double horizon, int n_reps, std::uint64_t base_seed) {
    if (n_reps < 2) throw ConfigError("replication needs at least 2 runs");
    AggregateMetrics agg;
    agg.reps.resize(static_cast<std::size_t>(n_reps));
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(n_reps));
    const QuerySchedule periodic =
        kind == ScheduleKind::Periodic ? make_schedule(kind, param, horizon) : QuerySchedule{};

#pragma omp parallel for schedule(dynamic)
    for (int i = 0; i < n_reps; ++i) {
        const std::uint64_t seed = base_seed + static_cast<std::uint64_t>(i);
        try {
            if (kind == ScheduleKind::Periodic) {
                agg.reps[i] = run(policy, dist, g, periodic, seed);
            } else {
                std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32), 0x5eedu};
                Rng schedule_rng(seq);
                agg.reps[i] = run(policy, dist, g, make_schedule(kind, param, horizon, &schedule_rng), seed);
            }
        } catch (...) {
            errors[i] = std::current_exception();
        }
    }
    for (const auto& e : errors)
        if (e) std::rethrow_exception(e);

    std::vector<double> q, t, r, diff;
    for (const auto& m : agg.reps) {
        q.push_back(m.qaoi_mean);
        t.push_back(m.time_avg);
        r.push_back(m.tx_rate);
        diff.push_back(m.qaoi_mean - m.time_avg);
    }
    agg.qaoi = summarize(q);
    agg.time_avg = summarize(t);
    agg.tx_rate = summarize(r);
    agg.qaoi_minus_time = summarize(diff);
    return agg;
}

}  // namespace qaoi
