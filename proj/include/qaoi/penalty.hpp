#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace qaoi {

enum class PenaltyKind { Identity, Affine, Exponential, Table };

/// A violation found by Penalty::validate().
struct PenaltyViolation {
    enum class Kind { Negative, Decreasing, NonFinite } kind;
    double x;
    std::string message;
};

/**
 * Age penalty g(x) for x >= 0.
 *   identity        g(x) = x
 *   affine(a, b)    g(x) = a x + b
 *   exp(alpha)      g(x) = exp(alpha x) - 1
 *   table           piecewise-linear through the knots, constant outside them
 */
class Penalty {
public:
    static Penalty identity();
    static Penalty affine(double a, double b);
    static Penalty exponential(double alpha);
    /// Knots must have strictly increasing x.
    static Penalty table(std::vector<double> xs, std::vector<double> gs);

    PenaltyKind kind() const { return kind_; }
    double a() const { return a_; }
    double b() const { return b_; }
    double alpha() const { return a_; }
    const std::vector<double>& knots_x() const { return xs_; }
    const std::vector<double>& knots_g() const { return gs_; }

    double operator()(double x) const;
    /// Exact integral of g over [lo, hi], 0 <= lo <= hi.
    double integral(double lo, double hi) const;
    std::optional<PenaltyViolation> validate(double domain_hi) const;
    std::string spec() const;

private:
    Penalty() = default;
    double antiderivative(double x) const;

    PenaltyKind kind_ = PenaltyKind::Identity;
    double a_ = 1, b_ = 0;
    std::vector<double> xs_, gs_;
    std::vector<double> cum_;  // table only: integral from xs_[0] to xs_[i]
};

/// `identity`, `affine:a=1,b=0`, `exp:alpha=2`, `table:file.csv` (x,g rows, optional header).
Penalty parse_penalty(std::string_view spec);

}  // namespace qaoi
