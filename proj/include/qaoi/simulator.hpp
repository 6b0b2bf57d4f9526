#pragma once

#include <cstdint>
#include <ostream>
#include <vector>

#include "qaoi/delay_model.hpp"
#include "qaoi/penalty.hpp"
#include "qaoi/policy.hpp"

namespace qaoi {

enum class ScheduleKind { Periodic, Poisson };

struct QuerySchedule {
    ScheduleKind kind = ScheduleKind::Periodic;
    double param = 0;  // period T or rate lambda_q
    double horizon = 0;
    std::vector<double> instants;

    /// T for periodic schedules, 1 / lambda_q for Poisson ones.
    double mean_gap() const { return kind == ScheduleKind::Periodic ? param : 1.0 / param; }
    bool empty() const { return instants.empty(); }
};

/// Periodic: k T for k >= 1 up to the horizon. Poisson: exponential gaps drawn from rng.
QuerySchedule make_schedule(ScheduleKind kind, double param, double horizon, Rng* rng = nullptr);

struct TrajectoryMetrics {
    double qaoi_mean = 0;
    double time_avg = 0;
    std::int64_t tx_count = 0;
    double tx_rate = 0;
    std::int64_t n_queries = 0;
    std::int64_t warmup_queries_dropped = 0;
};

struct RunOptions {
    double warmup = -1;                // queries at or before this time are dropped; < 0 picks the default
    std::ostream* trajectory = nullptr;  // CSV event_time,event_kind,age_after_event
};

/// Default warm-up: max(3 B_U, M) + T.
double default_warmup(const Policy& policy, const DelayDistribution& dist, const QuerySchedule& schedule);

/// One sample path of request, delay, delivery, wait. Deterministic given seed.
TrajectoryMetrics run(const Policy& policy, const DelayDistribution& dist, const Penalty& g,
                      const QuerySchedule& schedule, std::uint64_t seed, const RunOptions& opts = {});

struct Estimate {
    double mean = 0;
    double std_error = 0;
    double ci_half = 0;  // 95% Student-t
};

Estimate summarize(const std::vector<double>& xs);

struct AggregateMetrics {
    std::vector<TrajectoryMetrics> reps;
    Estimate qaoi;
    Estimate time_avg;
    Estimate tx_rate;
    Estimate qaoi_minus_time;  // paired per replication
};

/// n_reps independent runs with seeds base_seed + i, executed in parallel. Poisson
/// schedules are redrawn per replication.
AggregateMetrics replicate(const Policy& policy, const DelayDistribution& dist, const Penalty& g, ScheduleKind kind,
                           double param, double horizon, int n_reps, std::uint64_t base_seed);

}  // namespace qaoi
