#include <algorithm>
#include <fstream>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "qaoi/error.hpp"
#include "qaoi/experiments.hpp"
#include "qaoi/solution_io.hpp"
#include "qaoi/text.hpp"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitNumeric = 3;
constexpr int kExitCheck = 4;

struct Flags {
    qaoi::ExperimentConfig cfg;
    double q = 0;
    double step = 0;
    std::int64_t n = 0;
    double eps = 0;
    double wait_cap = 0;
    std::string out;
    std::string config;
    bool check = false;
};

void add_common(CLI::App* cmd, Flags& f) {
    cmd->add_option("--config", f.config, "flat key=value file mirroring the flags");
    cmd->add_option("--dist", f.cfg.dist, "delay law, e.g. exp:lambda=1 or disc:1@0.5,2@0.5");
    cmd->add_option("--penalty", f.cfg.penalty, "identity | affine:a=,b= | exp:alpha= | table:file.csv");
    cmd->add_option("--q", f.q, "query period and single-query horizon (default period-mult * B_U)");
    cmd->add_option("--period-mult", f.cfg.period_mult, "T = period-mult * B_U when --q is absent");
    auto* step = cmd->add_option("--step", f.step, "grid step Q/N (default 0.05)");
    auto* n = cmd->add_option("--n", f.n, "number of grid intervals");
    step->excludes(n);
    cmd->add_option("--eps", f.eps, "refine by doubling N until upper - lower < eps");
    cmd->add_option("--max-doublings", f.cfg.max_doublings, "refinement cap");
    cmd->add_option("--wait-cap", f.wait_cap, "maximum wait M (default Q)");
    cmd->add_option("--horizon", f.cfg.horizon, "simulated time (default 2000 periods)");
    cmd->add_option("--reps", f.cfg.reps, "replications");
    cmd->add_option("--seed", f.cfg.seed, "base seed");
    cmd->add_option("--schedule", f.cfg.schedule, "periodic | poisson");
    cmd->add_option("--out", f.out, "output file");
    cmd->add_flag("--check", f.check, "exit with code 4 when a check fails");
}

qaoi::ExperimentConfig finish(CLI::App* cmd, Flags& f) {
    qaoi::ExperimentConfig c = f.cfg;
    if (cmd->count("--q")) c.q = f.q;
    if (cmd->count("--step")) c.step = f.step;
    if (cmd->count("--n")) c.n = f.n;
    if (cmd->count("--eps")) c.eps = f.eps;
    if (cmd->count("--wait-cap")) c.wait_cap = f.wait_cap;
    return c;
}

// Splices "--config FILE" into the command line as the flags it lists, placed right after
// the subcommand so that flags given explicitly take precedence.
std::vector<std::string> expand_config(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    std::string path;
    for (std::size_t i = 0; i < args.size(); ++i) {
        if (args[i] == "--config" && i + 1 < args.size()) {
            path = args[i + 1];
            args.erase(args.begin() + i, args.begin() + i + 2);
            break;
        }
        if (args[i].rfind("--config=", 0) == 0) {
            path = args[i].substr(9);
            args.erase(args.begin() + i);
            break;
        }
    }
    if (path.empty() || args.empty()) return args;
    std::ifstream in(path);
    if (!in) throw qaoi::ConfigError("cannot read config file '" + path + "'");
    std::vector<std::string> extra;
    std::string line;
    while (std::getline(in, line)) {
        auto t = qaoi::trim(line);
        if (t.empty() || t[0] == '#' || t[0] == ';' || t[0] == '[') continue;
        auto eq = t.find('=');
        if (eq == std::string_view::npos) throw qaoi::ConfigError("config line without '=': " + std::string(t));
        std::string key(qaoi::trim(t.substr(0, eq)));
        std::string value(qaoi::trim(t.substr(eq + 1)));
        while (!key.empty() && key[0] == '-') key.erase(0, 1);
        std::replace(key.begin(), key.end(), '_', '-');
        if (value.size() >= 2 && value.front() == '"' && value.back() == '"') value = value.substr(1, value.size() - 2);
        if (key == "check") {
            if (value == "true" || value == "1") extra.push_back("--check");
            continue;
        }
        extra.push_back("--" + key);
        extra.push_back(value);
    }
    args.insert(args.begin() + 1, extra.begin(), extra.end());
    return args;
}

void emit(const qaoi::CsvTable& t, const std::string& path) {
    if (path.empty()) {
        t.write(std::cout);
        return;
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw qaoi::ConfigError("cannot write '" + path + "'");
    t.write(out);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Pull-based age-of-information policies: solve, simulate, compare, reproduce"};
    app.require_subcommand(1);
    app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);

    Flags solve_f, sim_f, cmp_f;
    auto* solve = app.add_subcommand("solve", "solve the single-query problem and write the solution");
    add_common(solve, solve_f);

    auto* simulate = app.add_subcommand("simulate", "simulate one policy");
    add_common(simulate, sim_f);
    std::string policy = "pow", solution_path, trajectory_path;
    simulate->add_option("--policy", policy, "pow | zero-wait | uow | uow-constrained");
    simulate->add_option("--solution", solution_path, "solution document for the pow policy");
    simulate->add_option("--trajectory", trajectory_path, "write the event trajectory of one run as CSV");

    auto* compare = app.add_subcommand("compare", "simulate several policies on the same setup");
    add_common(compare, cmp_f);
    std::vector<std::string> policies{"pow", "zero-wait", "uow", "uow-constrained"};
    std::string cmp_solution;
    compare->add_option("--policies", policies, "policies to compare")
        ->delimiter(',')
        ->multi_option_policy(CLI::MultiOptionPolicy::TakeAll);
    compare->add_option("--solution", cmp_solution, "solution document for the pow policy");

    auto* repro = app.add_subcommand("reproduce", "regenerate a published table or figure as CSV");
    std::string target;
    qaoi::ReproduceOptions ropts;
    std::string repro_out;
    bool repro_check = false;
    repro->add_option("target", target, "table1 table2 table3 fig3 fig4 fig5 fig6 fig7 fig-lognormal")->required();
    repro->add_option("--reps", ropts.reps, "replications per simulated cell");
    repro->add_option("--horizon-periods", ropts.horizon_periods, "simulated query periods per replication");
    repro->add_option("--seed", ropts.seed, "base seed");
    repro->add_option("--out", repro_out, "output CSV (default stdout)");
    repro->add_flag("--check", repro_check, "exit with code 4 when the reference check fails");

    try {
        auto args = expand_config(argc, argv);
        std::reverse(args.begin(), args.end());
        app.parse(args);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : kExitConfig;
    } catch (const qaoi::ConfigError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitConfig;
    }

    try {
        if (*solve) {
            auto rc = qaoi::resolve(finish(solve, solve_f));
            auto ref = qaoi::solve_config(rc);
            if (!solve_f.out.empty()) qaoi::write_json(solve_f.out, qaoi::to_json(ref));
            std::cout << qaoi::solve_summary(ref) << '\n';
            if (solve_f.check && !ref.converged) return kExitCheck;
        } else if (*simulate) {
            auto rc = qaoi::resolve(finish(simulate, sim_f));
            std::shared_ptr<const qaoi::SolverSolution> sol;
            if (!solution_path.empty()) sol = std::make_shared<qaoi::SolverSolution>(qaoi::load_policy_solution(solution_path));
            std::vector<std::string> names{policy};
            if (policy == "uow-constrained") names = {"pow", "uow-constrained"};
            auto rows = qaoi::compare_policies(rc, names, sol);
            if (policy == "uow-constrained") rows.erase(rows.begin());
            if (!trajectory_path.empty()) {
                std::ofstream traj(trajectory_path);
                if (!traj) throw qaoi::ConfigError("cannot write '" + trajectory_path + "'");
                const auto& r = rows.front();
                std::shared_ptr<const qaoi::SolverSolution> s = sol;
                qaoi::Policy p = qaoi::Policy::zero_wait();
                if (r.policy == "pow") {
                    if (!s) s = std::make_shared<qaoi::SolverSolution>(qaoi::solve_config(rc).upper_solution);
                    p = qaoi::Policy::pow_grid(s, rc.q);
                } else if (r.policy != "zero-wait") {
                    p = qaoi::Policy::uow_threshold(r.beta, 4.0 * rc.dist.b_hi());
                }
                qaoi::Rng srng(rc.raw.seed);
                auto kind = rc.raw.schedule == "poisson" ? qaoi::ScheduleKind::Poisson : qaoi::ScheduleKind::Periodic;
                auto sched = qaoi::make_schedule(kind, kind == qaoi::ScheduleKind::Poisson ? 1.0 / rc.q : rc.q,
                                                 rc.horizon, &srng);
                qaoi::RunOptions ro;
                ro.trajectory = &traj;
                qaoi::run(p, rc.dist, rc.g, sched, rc.raw.seed, ro);
            }
            emit(qaoi::compare_table(rows), sim_f.out);
        } else if (*compare) {
            auto rc = qaoi::resolve(finish(compare, cmp_f));
            std::shared_ptr<const qaoi::SolverSolution> sol;
            if (!cmp_solution.empty()) sol = std::make_shared<qaoi::SolverSolution>(qaoi::load_policy_solution(cmp_solution));
            auto rows = qaoi::compare_policies(rc, policies, sol);
            emit(qaoi::compare_table(rows), cmp_f.out);
            if (cmp_f.check) {
                const qaoi::CompareRow* pow = nullptr;
                for (const auto& r : rows)
                    if (r.policy == "pow") pow = &r;
                if (pow)
                    for (const auto& r : rows) {
                        if (r.policy == "pow" || std::isnan(r.analytic_time_avg)) continue;
                        if (pow->sim.qaoi.mean > r.analytic_time_avg + pow->sim.qaoi.ci_half) {
                            std::cerr << "check failed: pow qaoi " << pow->sim.qaoi.mean << " exceeds " << r.policy
                                      << " time average " << r.analytic_time_avg << '\n';
                            return kExitCheck;
                        }
                    }
            }
        } else if (*repro) {
            auto res = qaoi::reproduce(target, ropts);
            emit(res.table, repro_out);
            std::cerr << target << ": " << res.report << '\n';
            if (repro_check && !res.within_tolerance) return kExitCheck;
        }
    } catch (const qaoi::ConfigError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const qaoi::NumericError& e) {
        std::cerr << "numeric failure: " << e.what() << '\n';
        return kExitNumeric;
    } catch (const std::exception& e) {
        std::cerr << "numeric failure: " << e.what() << '\n';
        return kExitNumeric;
    }
    return 0;
}
