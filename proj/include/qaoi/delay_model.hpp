#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace qaoi {

using Rng = std::mt19937_64;

enum class DelayFamily {
    Deterministic,
    Discrete,
    Exponential,
    LogNormal,
    Pareto,
    Beta,
    Uniform,
};

std::string_view family_name(DelayFamily f);

/// A point mass of a discrete delay law.
struct Atom {
    double value;
    double prob;
};

/// Truncation protocol applied to unbounded (or left-open) base laws.
struct Truncation {
    double lower_start = 0.01;
    double upper_mass = 0.95;
};

/**
 * Bounded-support transmission-delay law Y with Pr(Y in [b_lo, b_hi]) = 1, b_lo > 0.
 *
 * Continuous families are the base law conditioned on [b_lo, b_hi]; discrete and
 * deterministic families carry their atoms unchanged. Immutable after construction.
 */
class DelayDistribution {
public:
    /// Builds a truncated law from a family and named parameters.
    ///   det: d             disc: atoms          exp: lambda
    ///   lognormal: mu, sigma                    pareto: xm, alpha
    ///   beta: a, b (on [0,1])                   uniform: lo, hi
    static DelayDistribution truncated(DelayFamily family,
                                       std::vector<std::pair<std::string, double>> params,
                                       Truncation trunc = {});
    static DelayDistribution deterministic(double d);
    static DelayDistribution discrete(std::vector<Atom> atoms);

    DelayFamily family() const { return family_; }
    const std::vector<std::pair<std::string, double>>& params() const { return params_; }
    double param(std::string_view name) const;
    double b_lo() const { return b_lo_; }
    double b_hi() const { return b_hi_; }
    bool has_atoms() const { return !atoms_.empty(); }
    const std::vector<Atom>& atoms() const { return atoms_; }

    /// Pr(Y <= x).
    double cdf(double x) const;
    /// Pr(Y < x).
    double cdf_left(double x) const;
    /// Generalized inverse: smallest y with cdf(y) >= u, u in [0, 1].
    double quantile(double u) const;
    double sample(Rng& rng) const;
    double mean() const;

    /// Canonical spec string, parseable by parse_distribution().
    std::string spec() const;

private:
    DelayDistribution() = default;

    double base_cdf(double x) const;
    double base_quantile(double p) const;

    DelayFamily family_ = DelayFamily::Deterministic;
    std::vector<std::pair<std::string, double>> params_;
    std::vector<Atom> atoms_;  // sorted by value, discrete families only
    double b_lo_ = 0;
    double b_hi_ = 0;
    double f_lo_ = 0;  // base cdf at b_lo
    double f_hi_ = 1;  // base cdf at b_hi
};

/// Parses `family:param=value,...` (e.g. `exp:lambda=1`, `pareto:xm=1,alpha=3`,
/// `det:d=1.5`, `disc:1@0.5,2@0.5`) and applies the truncation protocol.
DelayDistribution parse_distribution(std::string_view spec, Truncation trunc = {});

/// Uniform double in [0, 1) from 53 random bits; identical on every platform.
double uniform01(Rng& rng);

enum class QuantDirection { Upper, Lower };

std::string_view direction_name(QuantDirection d);

/// Probability mass function on the grid {index * step}.
struct QuantizedDelay {
    double step = 0;
    QuantDirection direction = QuantDirection::Upper;
    std::vector<std::pair<std::int64_t, double>> atoms;  // ascending index, positive mass

    std::int64_t min_index() const { return atoms.front().first; }
    std::int64_t max_index() const { return atoms.back().first; }
    double total_mass() const;
    /// Pr(Y_q <= x).
    double cdf(double x) const;
};

/// Upper: mass of ((m-1)s, m s] moves to m s. Lower: mass of [(m-1)s, m s) moves to (m-1)s.
QuantizedDelay quantize(const DelayDistribution& dist, double step, QuantDirection direction);

/// Coarsens a quantized law to step * factor in the same direction.
QuantizedDelay requantize(const QuantizedDelay& qd, std::int64_t factor);

/// Nodes and weights with sum w h(v) ~= E[h(Y)]. Atoms for discrete laws,
/// Gauss-Legendre panels in quantile space otherwise.
std::vector<Atom> expectation_nodes(const DelayDistribution& dist, int panels = 64);

/// Uniform grids with a common step Q/N, held as index ranges.
struct GridSets {
    double q_horizon = 0;        // Q
    double wait_cap = 0;         // M
    std::int64_t n_intervals = 0;  // N; a-grid is 0..N
    std::int64_t y_lo = 0;       // y-grid index range
    std::int64_t y_hi = 0;
    std::int64_t z_max = 0;      // z-grid is 0..z_max

    double step() const { return q_horizon / static_cast<double>(n_intervals); }
    std::vector<double> a_grid() const;
    std::vector<double> y_grid() const;
    std::vector<double> z_grid() const;
};

GridSets build_grids(double q_horizon, std::int64_t n_intervals, double wait_cap,
                     const QuantizedDelay& qd);

/// Index of the grid point nearest x when x is within a relative 1e-9 of it.
/// Used wherever a time is known to be on the grid up to rounding.
std::int64_t snap_index(double x, double step);
/// ceil(x / step) treating values within 1e-9 (relative) of a grid point as on it.
std::int64_t ceil_index(double x, double step);
/// floor(x / step) with the same snapping.
std::int64_t floor_index(double x, double step);

}  // namespace qaoi
