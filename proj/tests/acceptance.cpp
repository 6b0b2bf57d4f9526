// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "oracle.hpp"
#include "qaoi/experiments.hpp"
#include "qaoi/policy.hpp"
#include "qaoi/simulator.hpp"
#include "qaoi/sq_solver.hpp"
#include "solver_fixtures.hpp"

using namespace qaoi;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Outcome {
    bool pass = true;
    std::ostringstream detail;
    void require(bool ok, const std::string& what) {
        if (!ok) {
            if (pass) detail << "first failure: " << what << "; ";
            pass = false;
        }
    }
};

int failures = 0;

void report(int id, const std::string& name, const std::function<void(Outcome&)>& body) {
    Outcome o;
    auto t0 = Clock::now();
    try {
        body(o);
    } catch (const std::exception& e) {
        o.pass = false;
        o.detail << "exception: " << e.what() << "; ";
    }
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.2fs", seconds_since(t0));
    std::printf("%s %d %s: %s(%s)\n", o.pass ? "PASS" : "FAIL", id, name.c_str(), o.detail.str().c_str(), buf);
    std::fflush(stdout);
    if (!o.pass) ++failures;
}

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

const std::vector<std::string> kFourLaws = {"exp:lambda=1", "beta:a=1,b=1", "lognormal:mu=0,sigma=1",
                                            "pareto:xm=1,alpha=3"};

struct LawRun {
    std::string dist;
    std::string penalty;
    RefinedSolution solution;
    std::vector<CompareRow> rows;
    const CompareRow& row(const std::string& name) const {
        for (const auto& r : rows)
            if (r.policy == name) return r;
        throw std::runtime_error("missing policy row " + name);
    }
};

LawRun run_law(const std::string& dist, const std::string& penalty) {
    ExperimentConfig cfg;
    cfg.dist = dist;
    cfg.penalty = penalty;
    cfg.step = 0.05;
    cfg.reps = 32;
    cfg.seed = 20240601;
    auto rc = resolve(cfg);
    rc.horizon = 2000 * rc.q;
    LawRun out{dist, penalty, solve_config(rc), {}};
    out.rows = compare_policies(rc, {"pow", "zero-wait", "uow", "uow-constrained"},
                                std::make_shared<SolverSolution>(out.solution.upper_solution));
    return out;
}

std::vector<LawRun>& law_runs() {
    static std::vector<LawRun> runs = [] {
        std::vector<LawRun> r;
        for (const char* g : {"identity", "exp:alpha=2"})
            for (const auto& d : kFourLaws) r.push_back(run_law(d, g));
        return r;
    }();
    return runs;
}

void criterion_example() {
    report(1, "constant-delay example", [](Outcome& o) {
        auto t0 = Clock::now();
        auto det = DelayDistribution::deterministic(1.5);
        auto g = Penalty::identity();
        auto pair = solve_pair(det, g, 4, intervals_for_step(4, 0.5), 4);
        o.require(pair.upper.h_one == 1.5 && pair.lower.h_one == 1.5, "h_one = 1.5");
        o.require(pair.upper.border_offset() == 1.5, "border offset 1.5");
        auto sched = make_schedule(ScheduleKind::Periodic, 4, 8000);
        auto pow = run(Policy::pow_grid(std::make_shared<SolverSolution>(pair.upper), 4), det, g, sched, 1);
        auto zw = run(Policy::zero_wait(), det, g, sched, 1);
        o.require(pow.qaoi_mean == 1.5, "pow qaoi 1.5");
        o.require(std::abs(zw.time_avg - 2.25) <= 1e-12, "zero-wait time average 2.25");
        o.require(std::abs(pow.tx_rate - 0.25) <= 1e-12, "pow tx rate 0.25");
        const double elapsed = seconds_since(t0);
        o.require(elapsed < 1.0, "runtime < 1 s");
        o.detail << "h_one=" << fmt(pair.upper.h_one) << " border=" << fmt(pair.upper.border_offset())
                 << " pow_qaoi=" << fmt(pow.qaoi_mean) << " zw_time=" << fmt(zw.time_avg)
                 << " pow_tx=" << fmt(pow.tx_rate) << " ";
    });
}

void criteria_tables() {
    std::vector<BoundsCell> cells;
    double elapsed = 0;
    report(2, "truncated-exponential bounds tables", [&](Outcome& o) {
        auto t0 = Clock::now();
        cells = truncated_exp_bounds();
        elapsed = seconds_since(t0);
        const auto& lambdas = table_lambdas();
        const auto& steps = table_steps();
        const std::size_t nl = lambdas.size(), ns = steps.size();
        double worst = 0;
        for (std::size_t s = 0; s < ns; ++s)
            for (std::size_t l = 0; l < nl; ++l) {
                const auto& c = cells[s * nl + l];
                worst = std::max({worst, std::abs(c.lower - reference_lower_bound(s, l)),
                                  std::abs(c.upper - reference_upper_bound(s, l))});
                if (s > 0) {
                    const auto& prev = cells[(s - 1) * nl + l];
                    o.require(c.lower >= prev.lower, "lower bounds increase with finer steps");
                    o.require(c.upper <= prev.upper, "upper bounds decrease with finer steps");
                }
            }
        o.require(worst <= 0.05, "all 48 cells within 0.05");
        for (std::size_t l = 0; l < nl; ++l) {
            const auto& coarse = cells[l];
            const auto& fine = cells[(ns - 1) * nl + l];
            o.require(fine.upper - fine.lower < coarse.upper - coarse.lower, "gap shrinks");
        }
        o.require(elapsed < 600, "runtime < 10 min");
        o.detail << "max |deviation|=" << fmt(worst) << " lambda=1 step 0.16: (" << fmt(cells[0].lower) << ", "
                 << fmt(cells[0].upper) << ") lambda=2 step 0.02: (" << fmt(cells.back().lower) << ", "
                 << fmt(cells.back().upper) << ") ";
    });
    report(3, "evaluation-count scaling", [&](Outcome& o) {
        if (cells.empty()) throw std::runtime_error("bounds tables unavailable");
        const std::size_t nl = table_lambdas().size(), ns = table_steps().size();
        double lo = INFINITY, hi = 0, glo = INFINITY, ghi = 0;
        for (std::size_t s = 0; s < ns; ++s)
            for (std::size_t l = 0; l < nl; ++l) {
                const auto& c = cells[s * nl + l];
                const double r = double(c.evaluations) / reference_evaluations(s, l);
                lo = std::min(lo, r);
                hi = std::max(hi, r);
                if (s > 0) {
                    const double growth = double(c.evaluations) / double(cells[(s - 1) * nl + l].evaluations);
                    glo = std::min(glo, growth);
                    ghi = std::max(ghi, growth);
                }
            }
        o.require(lo >= 0.5 && hi <= 2.0, "counts within a factor of 2");
        o.require(glo >= 6 && ghi <= 10, "growth about 8x per halving");
        o.detail << "count ratio in [" << fmt(lo) << ", " << fmt(hi) << "], growth per halving in [" << fmt(glo)
                 << ", " << fmt(ghi) << "] ";
    });
}

void criterion_sandwich() {
    report(4, "sandwich of simulated pow between the bounds", [](Outcome& o) {
        for (const auto& r : law_runs()) {
            if (r.penalty != "identity") continue;
            const auto& pow = r.row("pow").sim.qaoi;
            const double lo = r.solution.lower_bound, hi = r.solution.upper_bound;
            o.require(pow.mean >= lo - pow.ci_half && pow.mean <= hi + pow.ci_half, r.dist);
            o.detail << r.dist << " " << fmt(lo) << "<=" << fmt(pow.mean) << "+-" << fmt(pow.ci_half)
                     << "<=" << fmt(hi) << "; ";
        }
    });
}

void criterion_dominance() {
    report(5, "pow dominates the time-average optimum", [](Outcome& o) {
        for (const auto& r : law_runs()) {
            const auto& pow = r.row("pow").sim.qaoi;
            for (const char* base : {"uow", "uow-constrained"}) {
                const auto& u = r.row(base).sim.time_avg;
                const double slack = pow.ci_half + u.ci_half;
                o.require(pow.mean <= u.mean + slack, r.dist + " " + r.penalty + " vs " + base);
                o.detail << r.dist << "/" << r.penalty << "/" << base << " " << fmt(pow.mean) << "<=" << fmt(u.mean)
                         << "; ";
            }
        }
    });
}

void criterion_poisson() {
    report(6, "query average equals time average under Poisson queries", [](Outcome& o) {
        for (const auto& d : kFourLaws) {
            auto dist = parse_distribution(d);
            auto g = Penalty::identity();
            const double t = 4 * dist.b_hi();
            auto opt = uow_optimal_policy(dist, g);
            for (const Policy& p : {Policy::zero_wait(), opt.policy}) {
                auto agg = replicate(p, dist, g, ScheduleKind::Poisson, 1 / t, 2000 * t, 32, 777);
                const auto& diff = agg.qaoi_minus_time;
                o.require(std::abs(diff.mean) < 3 * diff.std_error, d + " " + p.name());
                o.detail << d << "/" << p.name() << " diff=" << fmt(diff.mean) << " se=" << fmt(diff.std_error)
                         << "; ";
            }
        }
    });
}

bool matches_oracle(const std::vector<std::pair<int, double>>& atoms, int q, int zmax) {
    std::vector<Atom> law;
    for (auto [v, p] : atoms) law.push_back({double(v), p});
    auto qd = quantize(DelayDistribution::discrete(law), 1.0, QuantDirection::Upper);
    auto sol = value_tables(qd, Penalty::identity(), build_grids(q, q, zmax, qd));
    ExhaustiveOracle oracle(atoms, [](double x) { return x; }, q, zmax);
    for (int a = 0; a <= q; ++a)
        for (auto y = sol.grids.y_lo; y <= sol.grids.y_hi; ++y) {
            if (sol.gd(a, y) != oracle.value(q - a, int(y))) return false;
            const int r = oracle.best_request(q - a, int(y));
            if (sol.decision_z(y, a) != (r > q ? sol.grids.z_max : r - (q - a))) return false;
        }
    if (sol.h_one != oracle.value(q - int(sol.anchor_index), int(sol.grids.y_lo))) return false;
    return true;
}

void criterion_oracle() {
    report(7, "dynamic program equals exhaustive enumeration", [](Outcome& o) {
        auto qd = quantize(parse_distribution("disc:1@0.5,2@0.5"), 1.0, QuantDirection::Upper);
        auto two = value_tables(qd, Penalty::identity(), build_grids(8, 8, 8, qd));
        o.require(two.h_one == 1.75 && two.border_offset() == 2, "two-point example");
        const std::vector<std::vector<double>> weights = {
            {1.0}, {0.5, 0.5}, {0.25, 0.75}, {0.25, 0.25, 0.5}, {0.5, 0.125, 0.375}};
        int cases = 0;
        for (int a = 1; a <= 4; ++a)
            for (int b = a; b <= 4; ++b)
                for (int c = b; c <= 4; ++c) {
                    std::vector<int> support{a};
                    if (b > a) support.push_back(b);
                    if (c > b) support.push_back(c);
                    for (const auto& w : weights) {
                        if (w.size() != support.size()) continue;
                        std::vector<std::pair<int, double>> atoms;
                        for (std::size_t i = 0; i < w.size(); ++i) atoms.push_back({support[i], w[i]});
                        for (int q = support.back() + 1; q <= 12; ++q)
                            for (int zmax : {q, 2, 1}) {
                                ++cases;
                                std::string tag = "support ending " + std::to_string(support.back()) + " q=" +
                                                  std::to_string(q) + " zmax=" + std::to_string(zmax);
                                o.require(matches_oracle(atoms, q, zmax), tag);
                            }
                    }
                }
        o.detail << "two-point h_one=" << fmt(two.h_one) << " border=" << fmt(two.border_offset()) << ", " << cases
                 << " exhaustive instances ";
    });
}

void criterion_invariants() {
    report(8, "structural invariants", [](Outcome& o) {
        int instances = 0;
        for (const auto& c : solver_cases()) {
            auto pair = solve_case(c);
            for (const SolverSolution* s : {&pair.lower, &pair.upper}) {
                ++instances;
                const auto& gr = s->grids;
                const std::string tag = c.dist + " " + c.penalty + " " + std::string(direction_name(s->direction));
                o.require(s->border_index >= gr.y_hi && s->border_index <= 3 * gr.y_hi, tag + " border range");
                for (std::int64_t a = gr.y_hi; a <= s->n(); ++a)
                    for (double d : {0.0, 0.7, 3.1})
                        o.require(g_r(*s, a, d) == s->gr_tail(a), tag + " tail independence");
                for (std::int64_t a = 0; a < gr.y_hi; ++a)
                    for (double d = 0; d < gr.wait_cap; d += 0.37)
                        o.require(g_r(*s, a, d + 0.01) >= g_r(*s, a, d), tag + " monotone in delta");
                if (s->far_field)
                    for (std::int64_t a = s->anchor_index; a <= s->n(); ++a)
                        for (std::int64_t y = gr.y_lo; y <= gr.y_hi; ++y)
                            o.require(a - s->decision_z(y, a) == s->border_index, tag + " far states hit border");
            }
        }
        o.detail << instances << " solved instances ";
    });
}

void criterion_pareto() {
    report(9, "zero-wait is time-average optimal for Pareto delays", [](Outcome& o) {
        for (int alpha = 3; alpha <= 10; ++alpha) {
            auto d = parse_distribution("pareto:xm=1,alpha=" + std::to_string(alpha));
            auto opt = uow_optimal_policy(d, Penalty::identity());
            o.require(opt.beta <= d.b_lo(), "alpha=" + std::to_string(alpha));
            o.detail << "a=" << alpha << ":beta=" << fmt(opt.beta) << " ";
        }
    });
}

}  // namespace

int main() {
    criterion_example();
    criteria_tables();
    criterion_sandwich();
    criterion_dominance();
    criterion_poisson();
    criterion_oracle();
    criterion_invariants();
    criterion_pareto();
    return failures == 0 ? 0 : 1;
}
