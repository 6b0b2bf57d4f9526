#pragma once

#include <cmath>
#include <cstdint>
#include <memory>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "qaoi/delay_model.hpp"
#include "qaoi/penalty.hpp"
#include "qaoi/policy.hpp"
#include "qaoi/simulator.hpp"
#include "qaoi/sq_solver.hpp"

namespace qaoi {

/// Flat experiment settings shared by every command.
struct ExperimentConfig {
    std::string dist = "exp:lambda=1";
    std::string penalty = "identity";
    std::optional<double> q;         // query period / horizon; defaults to period_mult * B_U
    double period_mult = 4;
    std::optional<double> step;
    std::optional<std::int64_t> n;
    std::optional<double> eps;
    std::optional<double> wait_cap;  // defaults to Q
    double horizon = 0;              // 0: 2000 query periods
    int reps = 8;
    std::uint64_t seed = 1;
    int max_doublings = 8;
    std::string schedule = "periodic";
};

/// Config with parsed specs and the derived Q = T, N and M.
struct ResolvedConfig {
    ExperimentConfig raw;
    DelayDistribution dist;
    Penalty g;
    double q;
    std::int64_t n;
    double wait_cap;
    double horizon;
};

ResolvedConfig resolve(const ExperimentConfig& cfg);

/// Single grid unless eps is set, in which case N doubles until the gap is below eps.
RefinedSolution solve_config(const ResolvedConfig& rc);

std::string solve_summary(const RefinedSolution& ref);

struct CompareRow {
    std::string policy;
    double beta = 0;             // threshold policies only
    double analytic_time_avg = std::nan("");
    AggregateMetrics sim;
};

/// Builds and simulates each named policy ("pow", "zero-wait", "uow", "uow-constrained").
/// A solution is computed on demand unless one is given.
std::vector<CompareRow> compare_policies(const ResolvedConfig& rc, const std::vector<std::string>& policies,
                                         std::shared_ptr<const SolverSolution> pow_solution = nullptr);

/// RFC 4180 table.
struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
    void write(std::ostream& out) const;
};

CsvTable compare_table(const std::vector<CompareRow>& rows);

struct ReproduceOptions {
    int reps = 8;
    double horizon_periods = 2000;
    std::uint64_t seed = 1;
};

struct ReproduceResult {
    CsvTable table;
    bool has_reference = false;
    double max_deviation = 0;  // against embedded reference values
    bool within_tolerance = true;
    std::string report;        // human-readable summary
};

/// One cell of the truncated-exponential bounds tables.
struct BoundsCell {
    double lambda;
    double nominal_step;
    double step;  // effective Q / N
    std::int64_t n;
    double lower;
    double upper;
    std::int64_t evaluations;
};

/// Lambdas (columns) and nominal steps (rows) of the bounds tables.
const std::vector<double>& table_lambdas();
const std::vector<double>& table_steps();
/// Published reference values, indexed [step][lambda].
double reference_lower_bound(std::size_t step_i, std::size_t lambda_i);
double reference_upper_bound(std::size_t step_i, std::size_t lambda_i);
double reference_evaluations(std::size_t step_i, std::size_t lambda_i);

/// Q = T = 4 B_U, N = round(Q / 0.16) doubled per row. Row-major [step][lambda].
std::vector<BoundsCell> truncated_exp_bounds();

std::vector<std::string> reproduce_targets();
ReproduceResult reproduce(const std::string& target, const ReproduceOptions& opts);

}  // namespace qaoi
