#include "qaoi/penalty.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "qaoi/error.hpp"
#include "qaoi/text.hpp"

namespace qaoi {

Penalty Penalty::identity() { return Penalty{}; }

Penalty Penalty::affine(double a, double b) {
    if (!std::isfinite(a) || !std::isfinite(b)) throw ConfigError("affine penalty needs finite a, b");
    Penalty p;
    p.kind_ = PenaltyKind::Affine;
    p.a_ = a;
    p.b_ = b;
    return p;
}

Penalty Penalty::exponential(double alpha) {
    if (!(alpha > 0) || !std::isfinite(alpha)) throw ConfigError("exp penalty needs alpha > 0");
    Penalty p;
    p.kind_ = PenaltyKind::Exponential;
    p.a_ = alpha;
    p.b_ = 0;
    return p;
}

Penalty Penalty::table(std::vector<double> xs, std::vector<double> gs) {
    if (xs.size() != gs.size() || xs.empty()) throw ConfigError("penalty table needs matching, nonempty columns");
    for (std::size_t i = 0; i < xs.size(); ++i) {
        if (!std::isfinite(xs[i]) || !std::isfinite(gs[i])) throw ConfigError("penalty table has non-finite entries");
        if (i > 0 && !(xs[i] > xs[i - 1])) throw ConfigError("penalty table x column must be strictly increasing");
    }
    Penalty p;
    p.kind_ = PenaltyKind::Table;
    p.xs_ = std::move(xs);
    p.gs_ = std::move(gs);
    p.cum_.assign(p.xs_.size(), 0.0);
    for (std::size_t i = 1; i < p.xs_.size(); ++i)
        p.cum_[i] = p.cum_[i - 1] + 0.5 * (p.gs_[i] + p.gs_[i - 1]) * (p.xs_[i] - p.xs_[i - 1]);
    return p;
}

double Penalty::operator()(double x) const {
    if (x < 0) {
        if (x > -1e-12) x = 0;
        else throw ConfigError("penalty evaluated at negative age " + format_double(x));
    }
    switch (kind_) {
        case PenaltyKind::Identity: return x;
        case PenaltyKind::Affine: return a_ * x + b_;
        case PenaltyKind::Exponential: return std::expm1(a_ * x);
        case PenaltyKind::Table: {
            if (x <= xs_.front()) return gs_.front();
            if (x >= xs_.back()) return gs_.back();
            auto it = std::upper_bound(xs_.begin(), xs_.end(), x);
            auto i = static_cast<std::size_t>(it - xs_.begin());
            double t = (x - xs_[i - 1]) / (xs_[i] - xs_[i - 1]);
            return gs_[i - 1] + t * (gs_[i] - gs_[i - 1]);
        }
    }
    return 0;
}

double Penalty::antiderivative(double x) const {
    switch (kind_) {
        case PenaltyKind::Identity: return 0.5 * x * x;
        case PenaltyKind::Affine: return 0.5 * a_ * x * x + b_ * x;
        case PenaltyKind::Exponential: return std::expm1(a_ * x) / a_ - x;
        case PenaltyKind::Table: {
            if (x <= xs_.front()) return gs_.front() * (x - xs_.front());
            if (x >= xs_.back()) return cum_.back() + gs_.back() * (x - xs_.back());
            auto it = std::upper_bound(xs_.begin(), xs_.end(), x);
            auto i = static_cast<std::size_t>(it - xs_.begin());
            return cum_[i - 1] + 0.5 * ((*this)(x) + gs_[i - 1]) * (x - xs_[i - 1]);
        }
    }
    return 0;
}

double Penalty::integral(double lo, double hi) const {
    if (kind_ == PenaltyKind::Exponential) {
        // e^{a lo} (e^{a (hi-lo)} - 1) / a - (hi - lo), stable for short segments
        double w = hi - lo;
        return std::exp(a_ * lo) * std::expm1(a_ * w) / a_ - w;
    }
    if (kind_ == PenaltyKind::Identity) return 0.5 * (hi - lo) * (hi + lo);
    return antiderivative(hi) - antiderivative(lo);
}

std::optional<PenaltyViolation> Penalty::validate(double domain_hi) const {
    using K = PenaltyViolation::Kind;
    auto report = [](K k, double x) {
        std::string what = k == K::Negative ? "negative" : k == K::Decreasing ? "decreasing" : "non-finite";
        return PenaltyViolation{k, x, "penalty is " + what + " at x=" + format_double(x)};
    };
    if (kind_ == PenaltyKind::Table) {
        // Piecewise linear: the knots inside the domain (plus the endpoints) decide everything.
        std::vector<double> pts{0.0};
        for (double x : xs_)
            if (x > 0 && x < domain_hi) pts.push_back(x);
        pts.push_back(domain_hi);
        double prev = 0;
        for (std::size_t i = 0; i < pts.size(); ++i) {
            double v = (*this)(pts[i]);
            if (v < 0) return report(K::Negative, pts[i]);
            if (i > 0 && v < prev) return report(K::Decreasing, pts[i]);
            prev = v;
        }
        return std::nullopt;
    }
    constexpr int kPoints = 10000;
    double prev = 0;
    for (int i = 0; i < kPoints; ++i) {
        double x = domain_hi * i / (kPoints - 1);
        double v = (*this)(x);
        if (!std::isfinite(v)) return report(K::NonFinite, x);
        if (v < 0) return report(K::Negative, x);
        if (i > 0 && v < prev) return report(K::Decreasing, x);
        prev = v;
    }
    return std::nullopt;
}

std::string Penalty::spec() const {
    switch (kind_) {
        case PenaltyKind::Identity: return "identity";
        case PenaltyKind::Affine: return "affine:a=" + format_double(a_) + ",b=" + format_double(b_);
        case PenaltyKind::Exponential: return "exp:alpha=" + format_double(a_);
        case PenaltyKind::Table: {
            std::string s = "table:";
            for (std::size_t i = 0; i < xs_.size(); ++i)
                s += (i ? ";" : "") + format_double(xs_[i]) + "=" + format_double(gs_[i]);
            return s;
        }
    }
    return "";
}

namespace {

Penalty load_table_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open penalty table '" + path + "'");
    std::vector<double> xs, gs;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        auto t = trim(line);
        if (t.empty() || t.front() == '#') continue;
        auto cols = split(t, ',');
        if (cols.size() != 2) throw ConfigError(path + ":" + std::to_string(lineno) + ": expected two columns");
        try {
            double x = parse_double(cols[0]);
            double g = parse_double(cols[1]);
            xs.push_back(x);
            gs.push_back(g);
        } catch (const ConfigError&) {
            if (xs.empty() && lineno == 1) continue;  // header row
            throw ConfigError(path + ":" + std::to_string(lineno) + ": non-numeric entry");
        }
    }
    return Penalty::table(std::move(xs), std::move(gs));
}

}  // namespace

Penalty parse_penalty(std::string_view spec) {
    spec = trim(spec);
    auto colon = spec.find(':');
    auto name = trim(spec.substr(0, colon));
    auto body = colon == std::string_view::npos ? std::string_view{} : spec.substr(colon + 1);
    if (name == "identity" || name == "id") return Penalty::identity();
    if (name == "table") {
        // Inline form `table:0=0;1=2;2=1` (as produced by spec()) or a CSV path.
        if (body.find('=') != std::string_view::npos && body.find(';') != std::string_view::npos) {
            std::vector<double> xs, gs;
            for (auto item : split(body, ';')) {
                auto eq = item.find('=');
                if (eq == std::string_view::npos) throw ConfigError("bad inline table entry '" + std::string(item) + "'");
                xs.push_back(parse_double(item.substr(0, eq)));
                gs.push_back(parse_double(item.substr(eq + 1)));
            }
            return Penalty::table(std::move(xs), std::move(gs));
        }
        return load_table_csv(std::string(trim(body)));
    }
    double a = 1, b = 0, alpha = NAN;
    for (auto item : split(body, ',')) {
        auto eq = item.find('=');
        if (eq == std::string_view::npos) throw ConfigError("parameter '" + std::string(item) + "' must be name=value");
        auto key = trim(item.substr(0, eq));
        double v = parse_double(item.substr(eq + 1));
        if (key == "a") a = v;
        else if (key == "b") b = v;
        else if (key == "alpha") alpha = v;
        else throw ConfigError("unknown penalty parameter '" + std::string(key) + "'");
    }
    if (name == "affine") return Penalty::affine(a, b);
    if (name == "exp") {
        if (std::isnan(alpha)) throw ConfigError("exp penalty requires alpha");
        return Penalty::exponential(alpha);
    }
    throw ConfigError("unknown penalty '" + std::string(name) + "'");
}

}  // namespace qaoi
