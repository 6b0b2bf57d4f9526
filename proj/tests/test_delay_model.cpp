#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "qaoi/delay_model.hpp"
#include "qaoi/error.hpp"

using namespace qaoi;

namespace {

// Root of f on [lo, hi] by plain bisection; an independent inversion oracle.
template <class F>
double bisect(F f, double lo, double hi) {
    for (int i = 0; i < 200; ++i) {
        double mid = 0.5 * (lo + hi);
        (f(mid) < 0 ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

std::vector<DelayDistribution> continuous_laws() {
    return {parse_distribution("exp:lambda=1"),          parse_distribution("exp:lambda=2"),
            parse_distribution("lognormal:mu=0,sigma=1"), parse_distribution("pareto:xm=1,alpha=3"),
            parse_distribution("beta:a=1,b=1"),          parse_distribution("beta:a=0.3,b=0.3"),
            parse_distribution("uniform:lo=0.5,hi=1")};
}

std::vector<DelayDistribution> all_laws() {
    auto v = continuous_laws();
    v.push_back(DelayDistribution::deterministic(1.5));
    v.push_back(parse_distribution("disc:1@0.5,2@0.5"));
    v.push_back(parse_distribution("disc:0.3@0.2,1.05@0.5,2.2@0.3"));
    return v;
}

}  // namespace

TEST_CASE("truncated exponential upper end is the 0.95 quantile") {
    auto d = DelayDistribution::truncated(DelayFamily::Exponential, {{"lambda", 1.0}}, {0.01, 0.95});
    double oracle = bisect([](double x) { return (1 - std::exp(-x)) - 0.95; }, 0, 10);
    CHECK(d.b_hi() == doctest::Approx(oracle).epsilon(1e-12));
    CHECK(d.b_hi() == doctest::Approx(std::log(20.0)).epsilon(1e-12));
    CHECK(d.b_lo() == 0.01);
}

TEST_CASE("truncated pareto upper end") {
    auto d = parse_distribution("pareto:xm=1,alpha=3");
    double oracle = bisect([](double x) { return (1 - std::pow(1 / x, 3)) - 0.95; }, 1, 10);
    CHECK(d.b_hi() == doctest::Approx(oracle).epsilon(1e-12));
    CHECK(d.b_hi() == doctest::Approx(std::cbrt(20.0)).epsilon(1e-12));
    CHECK(d.b_lo() == 1.0);
}

TEST_CASE("deterministic law is unchanged by truncation") {
    auto d = DelayDistribution::truncated(DelayFamily::Deterministic, {{"d", 1.5}});
    CHECK(d.b_lo() == 1.5);
    CHECK(d.b_hi() == 1.5);
    CHECK(d.cdf(1.4) == 0.0);
    CHECK(d.cdf(1.5) == 1.0);
    CHECK(d.cdf_left(1.5) == 0.0);
}

TEST_CASE("cdf boundary values and monotonicity") {
    for (const auto& d : all_laws()) {
        CAPTURE(d.spec());
        CHECK(d.b_lo() > 0);
        CHECK(d.b_hi() >= d.b_lo());
        CHECK(d.cdf(d.b_hi()) == 1.0);
        CHECK(d.cdf_left(d.b_lo()) == 0.0);
        CHECK(d.cdf(d.b_lo() * 0.999) == 0.0);
        double prev = 0;
        for (int i = 0; i <= 1000; ++i) {
            double x = d.b_hi() * 1.1 * i / 1000;
            double c = d.cdf(x);
            CHECK(c >= prev);
            prev = c;
        }
    }
}

TEST_CASE("truncated exponential cdf matches the conditioned closed form") {
    auto d = parse_distribution("exp:lambda=1.4");
    const double lo = 0.01, hi = -std::log(0.05) / 1.4;
    for (double x : {0.02, 0.3, 1.0, 2.0}) {
        double f = [&](double t) { return 1 - std::exp(-1.4 * t); }(x);
        double expected = (f - (1 - std::exp(-1.4 * lo))) / ((1 - std::exp(-1.4 * hi)) - (1 - std::exp(-1.4 * lo)));
        CHECK(d.cdf(x) == doctest::Approx(expected).epsilon(1e-12));
    }
}

TEST_CASE("truncation errors") {
    CHECK_THROWS_AS(parse_distribution("exp:lambda=1", {0.01, 1.0}), ConfigError);
    CHECK_THROWS_AS(parse_distribution("exp:lambda=1", {0.0, 0.95}), ConfigError);
    CHECK_THROWS_AS(parse_distribution("exp:lambda=1,start=5"), ConfigError);
    CHECK_THROWS_AS(parse_distribution("exp:lambda=-1"), ConfigError);
    CHECK_THROWS_AS(parse_distribution("pareto:xm=1"), ConfigError);
    CHECK_THROWS_AS(parse_distribution("weibull:k=1"), ConfigError);
    CHECK_THROWS_AS(parse_distribution("disc:1@0.5,2@0.6"), ConfigError);
    CHECK_THROWS_AS(parse_distribution("det:d=0"), ConfigError);
    CHECK_THROWS_AS(parse_distribution("exp:lambda=abc"), ConfigError);
}

TEST_CASE("spec strings round-trip") {
    for (const auto& d : all_laws()) {
        auto e = parse_distribution(d.spec());
        CHECK(e.spec() == d.spec());
        CHECK(e.b_lo() == d.b_lo());
        CHECK(e.b_hi() == d.b_hi());
    }
    CHECK(parse_distribution("exp:lambda=1,mass=0.9").spec() == "exp:lambda=1,mass=0.9");
}

TEST_CASE("sampling") {
    Rng rng(7);
    auto det = DelayDistribution::deterministic(1.5);
    for (int i = 0; i < 10; ++i) CHECK(det.sample(rng) == 1.5);

    auto disc = parse_distribution("disc:1@0.5,2@0.5");
    double sum = 0;
    const int n = 1000000;
    for (int i = 0; i < n; ++i) sum += disc.sample(rng);
    CHECK(std::abs(sum / n - 1.5) < 0.005);

    auto exp = parse_distribution("exp:lambda=1");
    Rng a(42), b(42);
    for (int i = 0; i < 100; ++i) CHECK(exp.sample(a) == exp.sample(b));
}

TEST_CASE("samples stay in the support and pass a KS test") {
    for (const auto& d : continuous_laws()) {
        CAPTURE(d.spec());
        Rng rng(2024);
        const int n = 100000;
        std::vector<double> xs(n);
        for (auto& x : xs) {
            x = d.sample(rng);
            REQUIRE(x >= d.b_lo());
            REQUIRE(x <= d.b_hi());
        }
        std::sort(xs.begin(), xs.end());
        double ks = 0;
        for (int i = 0; i < n; ++i) {
            double c = d.cdf(xs[i]);
            ks = std::max({ks, std::abs(c - double(i) / n), std::abs(c - double(i + 1) / n)});
        }
        CHECK(ks < 0.01);
    }
}

TEST_CASE("quantization examples") {
    auto u = parse_distribution("uniform:lo=0.5,hi=1");
    auto q = quantize(u, 0.25, QuantDirection::Upper);
    REQUIRE(q.atoms.size() == 2);
    CHECK(q.atoms[0].first == 3);
    CHECK(q.atoms[0].second == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(q.atoms[1].first == 4);
    CHECK(q.atoms[1].second == doctest::Approx(0.5).epsilon(1e-14));

    auto det = DelayDistribution::deterministic(1.5);
    for (auto dir : {QuantDirection::Upper, QuantDirection::Lower}) {
        auto qd = quantize(det, 0.5, dir);
        REQUIRE(qd.atoms.size() == 1);
        CHECK(qd.atoms[0].first == 3);
        CHECK(qd.atoms[0].second == 1.0);
    }

    auto disc = parse_distribution("disc:1@0.5,2@0.5");
    auto qd = quantize(disc, 1.0, QuantDirection::Upper);
    REQUIRE(qd.atoms.size() == 2);
    CHECK(qd.atoms[0] == std::pair<std::int64_t, double>{1, 0.5});
    CHECK(qd.atoms[1] == std::pair<std::int64_t, double>{2, 0.5});
}

TEST_CASE("quantized masses, ranges and stochastic ordering") {
    Rng rng(5);
    for (const auto& d : all_laws()) {
        for (double step : {0.5, 0.16, 0.05, 0.013}) {
            CAPTURE(d.spec());
            CAPTURE(step);
            auto up = quantize(d, step, QuantDirection::Upper);
            auto lo = quantize(d, step, QuantDirection::Lower);
            CHECK(std::abs(up.total_mass() - 1) < 1e-12);
            CHECK(std::abs(lo.total_mass() - 1) < 1e-12);
            const auto imin = static_cast<std::int64_t>(std::floor(d.b_lo() / step + 1e-9));
            const auto imax = static_cast<std::int64_t>(std::ceil(d.b_hi() / step - 1e-9));
            for (const auto* q : {&up, &lo})
                for (auto [idx, p] : q->atoms) {
                    CHECK(idx >= imin);
                    CHECK(idx <= imax);
                    CHECK(p > 0);
                }
            for (int i = 0; i < 200; ++i) {
                double x = uniform01(rng) * (d.b_hi() + 2 * step);
                CHECK(up.cdf(x) <= d.cdf(x) + 1e-12);
                CHECK(d.cdf(x) <= lo.cdf(x) + 1e-12);
            }
        }
    }
}

TEST_CASE("requantizing at twice the step equals quantizing directly") {
    for (const auto& d : all_laws()) {
        for (double step : {0.08, 0.05, 0.02}) {
            for (auto dir : {QuantDirection::Upper, QuantDirection::Lower}) {
                CAPTURE(d.spec());
                CAPTURE(step);
                auto twice = requantize(quantize(d, step, dir), 2);
                auto direct = quantize(d, 2 * step, dir);
                REQUIRE(twice.atoms.size() == direct.atoms.size());
                for (std::size_t i = 0; i < direct.atoms.size(); ++i) {
                    CHECK(twice.atoms[i].first == direct.atoms[i].first);
                    CHECK(twice.atoms[i].second == doctest::Approx(direct.atoms[i].second).epsilon(1e-10));
                }
            }
        }
    }
}

TEST_CASE("grid construction") {
    auto disc = parse_distribution("disc:1@0.5,2@0.5");
    auto g = build_grids(8, 8, 8, quantize(disc, 1.0, QuantDirection::Upper));
    CHECK(g.a_grid() == std::vector<double>{0, 1, 2, 3, 4, 5, 6, 7, 8});
    CHECK(g.y_grid() == std::vector<double>{1, 2});
    CHECK(g.z_grid().size() == 9);

    auto det = DelayDistribution::deterministic(1.5);
    auto g2 = build_grids(4, 8, 4, quantize(det, 0.5, QuantDirection::Upper));
    CHECK(g2.step() == 0.5);
    CHECK(g2.y_grid() == std::vector<double>{1.5});

    auto g3 = build_grids(8, 8, 3.5, quantize(disc, 1.0, QuantDirection::Upper));
    CHECK(g3.z_grid() == std::vector<double>{0, 1, 2, 3});
    CHECK(g3.z_grid().back() <= 3.5);
    CHECK(3.5 < g3.z_grid().back() + g3.step());

    CHECK_THROWS_AS(build_grids(8, 16, 8, quantize(disc, 1.0, QuantDirection::Upper)), ConfigError);
    CHECK_THROWS_AS(build_grids(8, 0, 8, quantize(disc, 1.0, QuantDirection::Upper)), ConfigError);
}

TEST_CASE("grid index snapping") {
    CHECK(ceil_index(1.5, 0.5) == 3);
    CHECK(ceil_index(1.5 * (1 + 1e-13), 0.5) == 3);
    CHECK(ceil_index(1.51, 0.5) == 4);
    CHECK(floor_index(1.49, 0.5) == 2);
    CHECK(floor_index(0.3 / 0.1 * 0.1, 0.1) == 3);
}
