#include "qaoi/delay_model.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <map>
#include <numeric>
#include <sstream>

#include <boost/math/distributions/normal.hpp>
#include <boost/math/special_functions/beta.hpp>

#include "qaoi/error.hpp"
#include "qaoi/text.hpp"

namespace qaoi {

namespace {

constexpr double kSnapTol = 1e-9;

const std::map<std::string, DelayFamily, std::less<>>& family_names() {
    static const std::map<std::string, DelayFamily, std::less<>> names = {
        {"det", DelayFamily::Deterministic},  {"disc", DelayFamily::Discrete},
        {"exp", DelayFamily::Exponential},    {"lognormal", DelayFamily::LogNormal},
        {"lognorm", DelayFamily::LogNormal},  {"pareto", DelayFamily::Pareto},
        {"beta", DelayFamily::Beta},          {"uniform", DelayFamily::Uniform},
        {"unif", DelayFamily::Uniform},
    };
    return names;
}

double lookup(const std::vector<std::pair<std::string, double>>& params, std::string_view name,
              std::string_view family) {
    for (const auto& [k, v] : params)
        if (k == name) return v;
    throw ConfigError("distribution '" + std::string(family) + "' requires parameter '" +
                      std::string(name) + "'");
}

bool has_param(const std::vector<std::pair<std::string, double>>& params, std::string_view name) {
    return std::any_of(params.begin(), params.end(), [&](const auto& kv) { return kv.first == name; });
}

std::vector<Atom> normalize_atoms(std::vector<Atom> atoms) {
    if (atoms.empty()) throw ConfigError("discrete distribution needs at least one atom");
    double total = 0;
    for (const auto& a : atoms) {
        if (!(a.value > 0) || !std::isfinite(a.value))
            throw ConfigError("discrete delay values must be positive and finite");
        if (!(a.prob >= 0)) throw ConfigError("discrete probabilities must be nonnegative");
        total += a.prob;
    }
    if (std::abs(total - 1.0) > 1e-9)
        throw ConfigError("discrete probabilities sum to " + format_double(total) + ", expected 1");
    std::sort(atoms.begin(), atoms.end(), [](const Atom& x, const Atom& y) { return x.value < y.value; });
    std::vector<Atom> merged;
    for (const auto& a : atoms) {
        if (a.prob == 0) continue;
        if (!merged.empty() && merged.back().value == a.value)
            merged.back().prob += a.prob / total;
        else
            merged.push_back({a.value, a.prob / total});
    }
    return merged;
}

}  // namespace

std::string_view family_name(DelayFamily f) {
    switch (f) {
        case DelayFamily::Deterministic: return "det";
        case DelayFamily::Discrete: return "disc";
        case DelayFamily::Exponential: return "exp";
        case DelayFamily::LogNormal: return "lognormal";
        case DelayFamily::Pareto: return "pareto";
        case DelayFamily::Beta: return "beta";
        case DelayFamily::Uniform: return "uniform";
    }
    return "?";
}

std::string_view direction_name(QuantDirection d) {
    return d == QuantDirection::Upper ? "upper" : "lower";
}

double uniform01(Rng& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

DelayDistribution DelayDistribution::deterministic(double d) {
    if (!(d > 0) || !std::isfinite(d)) throw ConfigError("deterministic delay must be positive");
    DelayDistribution out;
    out.family_ = DelayFamily::Deterministic;
    out.params_ = {{"d", d}};
    out.atoms_ = {{d, 1.0}};
    out.b_lo_ = out.b_hi_ = d;
    return out;
}

DelayDistribution DelayDistribution::discrete(std::vector<Atom> atoms) {
    DelayDistribution out;
    out.family_ = DelayFamily::Discrete;
    out.atoms_ = normalize_atoms(std::move(atoms));
    out.b_lo_ = out.atoms_.front().value;
    out.b_hi_ = out.atoms_.back().value;
    return out;
}

DelayDistribution DelayDistribution::truncated(DelayFamily family,
                                               std::vector<std::pair<std::string, double>> params,
                                               Truncation trunc) {
    if (family == DelayFamily::Deterministic)
        return deterministic(lookup(params, "d", "det"));
    if (family == DelayFamily::Discrete)
        throw ConfigError("discrete laws are built from atoms, not named parameters");
    if (!(trunc.lower_start > 0)) throw ConfigError("truncation start must be positive");
    if (!(trunc.upper_mass > 0 && trunc.upper_mass < 1))
        throw ConfigError("truncation mass must lie in (0, 1); the requested quantile is unbounded");

    DelayDistribution out;
    out.family_ = family;
    out.params_ = std::move(params);
    auto fam = family_name(family);
    auto p = [&](std::string_view n) { return lookup(out.params_, n, fam); };

    // Natural support of the base law; bounded families are only cut from below.
    double natural_lo = 0;
    bool bounded_above = false;
    switch (family) {
        case DelayFamily::Exponential:
            if (!(p("lambda") > 0)) throw ConfigError("exp: lambda must be positive");
            break;
        case DelayFamily::LogNormal:
            if (!has_param(out.params_, "mu")) out.params_.insert(out.params_.begin(), {"mu", 0.0});
            if (!(p("sigma") > 0)) throw ConfigError("lognormal: sigma must be positive");
            if (!std::isfinite(p("mu"))) throw ConfigError("lognormal: mu must be finite");
            break;
        case DelayFamily::Pareto:
            if (!(p("xm") > 0) || !(p("alpha") > 0))
                throw ConfigError("pareto: xm and alpha must be positive");
            natural_lo = p("xm");
            break;
        case DelayFamily::Beta:
            if (!(p("a") > 0) || !(p("b") > 0)) throw ConfigError("beta: a and b must be positive");
            bounded_above = true;
            break;
        case DelayFamily::Uniform:
            if (!(p("lo") >= 0) || !(p("hi") > p("lo")))
                throw ConfigError("uniform: need 0 <= lo < hi");
            natural_lo = p("lo");
            bounded_above = true;
            break;
        default:
            break;
    }
    if (trunc.lower_start != Truncation{}.lower_start) out.params_.push_back({"start", trunc.lower_start});
    if (!bounded_above && trunc.upper_mass != Truncation{}.upper_mass)
        out.params_.push_back({"mass", trunc.upper_mass});

    out.f_lo_ = 0;
    out.f_hi_ = 1;
    out.b_lo_ = std::max(trunc.lower_start, natural_lo);
    if (bounded_above) {
        out.b_hi_ = family == DelayFamily::Beta ? 1.0 : p("hi");
    } else {
        out.b_hi_ = out.base_quantile(trunc.upper_mass);
    }
    if (!(out.b_lo_ < out.b_hi_))
        throw ConfigError("truncation start " + format_double(out.b_lo_) +
                          " is not below the upper truncation point " + format_double(out.b_hi_));
    out.f_lo_ = out.base_cdf(out.b_lo_);
    out.f_hi_ = out.base_cdf(out.b_hi_);
    if (!(out.f_hi_ > out.f_lo_)) throw ConfigError("truncated interval carries no probability");
    return out;
}

double DelayDistribution::param(std::string_view name) const {
    return lookup(params_, name, family_name(family_));
}

double DelayDistribution::base_cdf(double x) const {
    switch (family_) {
        case DelayFamily::Exponential:
            return x <= 0 ? 0.0 : -std::expm1(-param("lambda") * x);
        case DelayFamily::LogNormal: {
            if (x <= 0) return 0.0;
            boost::math::normal_distribution<double> n(param("mu"), param("sigma"));
            return boost::math::cdf(n, std::log(x));
        }
        case DelayFamily::Pareto: {
            double xm = param("xm");
            return x <= xm ? 0.0 : 1.0 - std::pow(xm / x, param("alpha"));
        }
        case DelayFamily::Beta:
            if (x <= 0) return 0.0;
            if (x >= 1) return 1.0;
            return boost::math::ibeta(param("a"), param("b"), x);
        case DelayFamily::Uniform: {
            double lo = param("lo"), hi = param("hi");
            return std::clamp((x - lo) / (hi - lo), 0.0, 1.0);
        }
        default:
            return 0.0;
    }
}

double DelayDistribution::base_quantile(double p) const {
    switch (family_) {
        case DelayFamily::Exponential:
            return -std::log1p(-p) / param("lambda");
        case DelayFamily::LogNormal: {
            boost::math::normal_distribution<double> n(param("mu"), param("sigma"));
            return std::exp(boost::math::quantile(n, std::clamp(p, 1e-300, 1.0 - 1e-16)));
        }
        case DelayFamily::Pareto:
            return param("xm") * std::pow(1.0 - p, -1.0 / param("alpha"));
        case DelayFamily::Beta:
            if (p <= 0) return 0.0;
            if (p >= 1) return 1.0;
            return boost::math::ibeta_inv(param("a"), param("b"), p);
        case DelayFamily::Uniform:
            return param("lo") + p * (param("hi") - param("lo"));
        default:
            return 0.0;
    }
}

double DelayDistribution::cdf(double x) const {
    if (has_atoms()) {
        double c = 0;
        for (const auto& a : atoms_) {
            if (a.value > x) break;
            c += a.prob;
        }
        return std::min(c, 1.0);
    }
    if (x < b_lo_) return 0.0;
    if (x >= b_hi_) return 1.0;
    return std::clamp((base_cdf(x) - f_lo_) / (f_hi_ - f_lo_), 0.0, 1.0);
}

double DelayDistribution::cdf_left(double x) const {
    if (has_atoms()) {
        double c = 0;
        for (const auto& a : atoms_) {
            if (a.value >= x) break;
            c += a.prob;
        }
        return std::min(c, 1.0);
    }
    return cdf(x);
}

double DelayDistribution::quantile(double u) const {
    u = std::clamp(u, 0.0, 1.0);
    if (has_atoms()) {
        double c = 0;
        for (const auto& a : atoms_) {
            c += a.prob;
            if (c >= u) return a.value;
        }
        return atoms_.back().value;
    }
    double y = base_quantile(f_lo_ + u * (f_hi_ - f_lo_));
    return std::clamp(y, b_lo_, b_hi_);
}

double DelayDistribution::sample(Rng& rng) const {
    double u = uniform01(rng);
    if (has_atoms()) {
        double c = 0;
        for (const auto& a : atoms_) {
            c += a.prob;
            if (u < c) return a.value;
        }
        return atoms_.back().value;
    }
    return quantile(u);
}

double DelayDistribution::mean() const {
    double m = 0;
    for (const auto& n : expectation_nodes(*this)) m += n.prob * n.value;
    return m;
}

std::string DelayDistribution::spec() const {
    std::ostringstream os;
    os << family_name(family_) << ':';
    if (family_ == DelayFamily::Discrete) {
        for (std::size_t i = 0; i < atoms_.size(); ++i) {
            if (i) os << ',';
            os << format_double(atoms_[i].value) << '@' << format_double(atoms_[i].prob);
        }
        return os.str();
    }
    for (std::size_t i = 0; i < params_.size(); ++i) {
        if (i) os << ',';
        os << params_[i].first << '=' << format_double(params_[i].second);
    }
    return os.str();
}

std::vector<Atom> expectation_nodes(const DelayDistribution& dist, int panels) {
    if (dist.has_atoms()) return dist.atoms();
    // Gauss-Legendre panels in quantile space: E[h(Y)] = int_0^1 h(F^-1(u)) du.
    static constexpr double x8[4] = {0.1834346424956498, 0.5255324099163290, 0.7966664774136267,
                                     0.9602898564975363};
    static constexpr double w8[4] = {0.3626837833783620, 0.3137066458778873, 0.2223810344533745,
                                     0.1012285362903763};
    std::vector<Atom> nodes;
    nodes.reserve(static_cast<std::size_t>(panels) * 8);
    const double h = 1.0 / panels;
    for (int k = 0; k < panels; ++k) {
        const double mid = (k + 0.5) * h;
        for (int i = 3; i >= 0; --i) nodes.push_back({dist.quantile(mid - 0.5 * h * x8[i]), 0.5 * h * w8[i]});
        for (int i = 0; i < 4; ++i) nodes.push_back({dist.quantile(mid + 0.5 * h * x8[i]), 0.5 * h * w8[i]});
    }
    return nodes;
}

DelayDistribution parse_distribution(std::string_view spec, Truncation trunc) {
    auto colon = spec.find(':');
    std::string_view name = trim(spec.substr(0, colon));
    std::string_view body = colon == std::string_view::npos ? std::string_view{} : spec.substr(colon + 1);
    auto it = family_names().find(name);
    if (it == family_names().end())
        throw ConfigError("unknown delay family '" + std::string(name) + "' in '" + std::string(spec) + "'");
    DelayFamily family = it->second;

    if (family == DelayFamily::Discrete) {
        std::vector<Atom> atoms;
        for (auto item : split(body, ',')) {
            auto at = item.find('@');
            if (at == std::string_view::npos)
                throw ConfigError("discrete atom '" + std::string(item) + "' must be value@prob");
            atoms.push_back({parse_double(item.substr(0, at)), parse_double(item.substr(at + 1))});
        }
        return DelayDistribution::discrete(std::move(atoms));
    }

    std::vector<std::pair<std::string, double>> params;
    for (auto item : split(body, ',')) {
        auto eq = item.find('=');
        if (eq == std::string_view::npos)
            throw ConfigError("parameter '" + std::string(item) + "' must be name=value");
        std::string key(trim(item.substr(0, eq)));
        double value = parse_double(item.substr(eq + 1));
        if (key == "start") {
            trunc.lower_start = value;
        } else if (key == "mass") {
            trunc.upper_mass = value;
        } else {
            if (family == DelayFamily::Beta && key == "alpha") key = "a";
            if (family == DelayFamily::Beta && key == "beta") key = "b";
            params.emplace_back(std::move(key), value);
        }
    }
    return DelayDistribution::truncated(family, std::move(params), trunc);
}

// --- quantization ----------------------------------------------------------

double QuantizedDelay::total_mass() const {
    double s = 0;
    for (const auto& a : atoms) s += a.second;
    return s;
}

double QuantizedDelay::cdf(double x) const {
    double c = 0;
    for (const auto& [idx, p] : atoms) {
        if (static_cast<double>(idx) * step > x) break;
        c += p;
    }
    return std::min(c, 1.0);
}

std::int64_t snap_index(double x, double step) {
    const double r = x / step;
    const double n = std::round(r);
    if (std::abs(r - n) <= kSnapTol * std::max(1.0, std::abs(r))) return static_cast<std::int64_t>(n);
    return static_cast<std::int64_t>(std::floor(r));
}

std::int64_t ceil_index(double x, double step) {
    const double r = x / step;
    const double n = std::round(r);
    if (std::abs(r - n) <= kSnapTol * std::max(1.0, std::abs(r))) return static_cast<std::int64_t>(n);
    return static_cast<std::int64_t>(std::ceil(r));
}

std::int64_t floor_index(double x, double step) {
    return snap_index(x, step);
}

QuantizedDelay quantize(const DelayDistribution& dist, double step, QuantDirection direction) {
    if (!(step > 0) || !std::isfinite(step)) throw ConfigError("quantization step must be positive");
    QuantizedDelay out;
    out.step = step;
    out.direction = direction;

    std::map<std::int64_t, double> mass;
    if (dist.has_atoms()) {
        for (const auto& a : dist.atoms()) {
            auto idx = direction == QuantDirection::Upper ? ceil_index(a.value, step) : floor_index(a.value, step);
            mass[idx] += a.prob;
        }
    } else {
        // Bin edges are cdf values at grid points; edges within snapping distance of the
        // support ends are pinned to 0 / 1 so no sliver bins appear.
        const std::int64_t lo_edge = floor_index(dist.b_lo(), step);
        const std::int64_t hi_edge = ceil_index(dist.b_hi(), step);
        auto edge = [&](std::int64_t m) {
            if (m <= lo_edge) return 0.0;
            if (m >= hi_edge) return 1.0;
            return dist.cdf(static_cast<double>(m) * step);
        };
        for (std::int64_t m = lo_edge + 1; m <= hi_edge; ++m) {
            double p = edge(m) - edge(m - 1);
            if (p <= 0) continue;
            // Upper: ((m-1)s, m s] -> m.  Lower: [(m-1)s, m s) -> m-1.
            mass[direction == QuantDirection::Upper ? m : m - 1] += p;
        }
    }
    double total = 0;
    for (const auto& [idx, p] : mass) total += p;
    for (const auto& [idx, p] : mass)
        if (p > 0) out.atoms.emplace_back(idx, p / total);
    return out;
}

QuantizedDelay requantize(const QuantizedDelay& qd, std::int64_t factor) {
    if (factor < 1) throw ConfigError("requantization factor must be >= 1");
    QuantizedDelay out;
    out.step = qd.step * static_cast<double>(factor);
    out.direction = qd.direction;
    std::map<std::int64_t, double> mass;
    for (const auto& [idx, p] : qd.atoms) {
        // Exact integer ceil / floor for nonnegative indices.
        auto k = qd.direction == QuantDirection::Upper ? (idx + factor - 1) / factor : idx / factor;
        mass[k] += p;
    }
    for (const auto& [idx, p] : mass) out.atoms.emplace_back(idx, p);
    return out;
}

// --- grids -------------------------------------------------------------------

std::vector<double> GridSets::a_grid() const {
    std::vector<double> v;
    for (std::int64_t i = 0; i <= n_intervals; ++i) v.push_back(static_cast<double>(i) * step());
    return v;
}

std::vector<double> GridSets::y_grid() const {
    std::vector<double> v;
    for (std::int64_t i = y_lo; i <= y_hi; ++i) v.push_back(static_cast<double>(i) * step());
    return v;
}

std::vector<double> GridSets::z_grid() const {
    std::vector<double> v;
    for (std::int64_t i = 0; i <= z_max; ++i) v.push_back(static_cast<double>(i) * step());
    return v;
}

GridSets build_grids(double q_horizon, std::int64_t n_intervals, double wait_cap, const QuantizedDelay& qd) {
    if (n_intervals < 1) throw ConfigError("number of grid intervals must be >= 1");
    if (!(q_horizon > 0)) throw ConfigError("query horizon must be positive");
    if (!(wait_cap > 0)) throw ConfigError("wait cap must be positive");
    if (qd.atoms.empty()) throw ConfigError("quantized delay has no atoms");
    GridSets g;
    g.q_horizon = q_horizon;
    g.wait_cap = wait_cap;
    g.n_intervals = n_intervals;
    const double step = g.step();
    if (std::abs(qd.step - step) > kSnapTol * step)
        throw ConfigError("quantization step " + format_double(qd.step) + " does not match Q/N = " +
                          format_double(step));
    g.y_lo = qd.min_index();
    g.y_hi = qd.max_index();
    g.z_max = floor_index(wait_cap, step);
    return g;
}

}  // namespace qaoi
