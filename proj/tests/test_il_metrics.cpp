#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "amm_lab/il_metrics.hpp"

#include <cmath>
#include <random>

using namespace ammlab;

TEST_CASE("value_pool") {
    CHECK(il::value_pool(10000.0, {1.0, 1.0, 0}) == doctest::Approx(200.0).epsilon(1e-12));
    CHECK(il::value_pool(10000.0, {4.0, 1.0, 0}) == doctest::Approx(400.0).epsilon(1e-12));
    CHECK(il::value_pool(1.0, {1.0, 1.0, 0}) == doctest::Approx(2.0).epsilon(1e-12));
    CHECK_THROWS_AS(il::value_pool(0.0, {1.0, 1.0, 0}), std::domain_error);
    CHECK_THROWS_AS(il::value_pool(-1.0, {1.0, 1.0, 0}), std::domain_error);
}

TEST_CASE("value_hodl") {
    CHECK(il::value_hodl(100.0, 100.0, {1.0, 1.0, 0}) == 200.0);
    CHECK(il::value_hodl(100.0, 100.0, {4.0, 1.0, 0}) == 500.0);
    CHECK(il::value_hodl(1.0, 0.0, {7.0, 123.0, 0}) == 7.0);
    CHECK_THROWS_AS(il::value_hodl(0.0, 0.0, {1.0, 1.0, 0}), std::domain_error);
}

TEST_CASE("lvh") {
    CHECK(il::lvh({200.0, 200.0}) == 0.0);
    CHECK(il::lvh({400.0, 500.0}) == doctest::Approx(-0.2).epsilon(1e-12));
    CHECK(il::lvh({190.0, 200.0}) == doctest::Approx(-0.05).epsilon(1e-12));
    CHECK_THROWS_AS(il::lvh({1.0, 0.0}), std::domain_error);
}

TEST_CASE("lvh_v2") {
    CHECK(il::lvh_v2(1.0) == 0.0);
    CHECK(il::lvh_v2(4.0) == doctest::Approx(-0.2).epsilon(1e-12));
    CHECK(il::lvh_v2(0.25) == doctest::Approx(-0.2).epsilon(1e-12));
    CHECK_THROWS_AS(il::lvh_v2(0.0), std::domain_error);
    CHECK_THROWS_AS(il::lvh_v2(-1.0), std::domain_error);
}

TEST_CASE("lvh_v2 non-positivity and symmetry") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> log_d(std::log(1e-4), std::log(1e4));
    for (int i = 0; i < 10000; ++i) {
        const double d = std::exp(log_d(rng));
        const double value = il::lvh_v2(d);
        CHECK(value <= 0.0);
        if (std::abs(d - 1.0) > 1e-9) {
            CHECK(value < 0.0);
        }
        CHECK(std::abs(value - il::lvh_v2(1.0 / d)) <= 1e-12);
    }
    CHECK(std::abs(il::lvh_v2(1.0)) <= 1e-12);
}

TEST_CASE("il_v3 examples") {
    CHECK(il::il_v3({1.0, 1.0, amm::range_from_prices(0.25, 4.0)}) == 0.0);
    CHECK(il::il_v3({4.0, 1.0, amm::range_from_prices(0.25, 4.0)}) ==
          doctest::Approx(-0.4).epsilon(1e-12));
    CHECK(il::il_v3({4.0, 1.0, amm::range_from_prices(0.5, 2.0)}) ==
          doctest::Approx(-0.517157).epsilon(1e-6));
    CHECK_THROWS_AS(il::il_v3({0.0, 1.0, amm::range_from_prices(0.5, 2.0)}), std::domain_error);
}

TEST_CASE("il_v3 branch selection") {
    const auto range = amm::range_from_prices(0.5, 2.0);
    // p = 1: thresholds at d = 0.5 and d = 2
    CHECK(il::il_v3({2.0, 1.0, range}) ==
          doctest::Approx(il::il_v3_within(2.0, 1.0, range)).epsilon(1e-15));
    CHECK(il::il_v3({0.5, 1.0, range}) ==
          doctest::Approx(il::il_v3_within(0.5, 1.0, range)).epsilon(1e-15));
    CHECK(il::il_v3({2.1, 1.0, range}) ==
          doctest::Approx(il::il_v3_above(2.1, 1.0, range)).epsilon(1e-15));
    CHECK(il::il_v3({0.4, 1.0, range}) ==
          doctest::Approx(il::il_v3_below(0.4, 1.0, range)).epsilon(1e-15));
}

TEST_CASE("il_v3 branch continuity") {
    std::mt19937_64 rng(21);
    std::uniform_real_distribution<double> log_p(std::log(1e-3), std::log(1e3));
    std::uniform_real_distribution<double> factor(1.1, 100.0);
    for (int i = 0; i < 1000; ++i) {
        const double p = std::exp(log_p(rng));
        const auto range = amm::range_from_prices(p / factor(rng), p * factor(rng));
        const double d_lower = range.lower / p;
        const double d_upper = range.upper / p;
        const double at_lower_within = il::il_v3_within(d_lower, p, range);
        const double at_lower_below = il::il_v3_below(d_lower, p, range);
        const double at_upper_within = il::il_v3_within(d_upper, p, range);
        const double at_upper_above = il::il_v3_above(d_upper, p, range);
        const double scale_lower =
            std::max({std::abs(at_lower_within), std::abs(at_lower_below), 1e-30});
        const double scale_upper =
            std::max({std::abs(at_upper_within), std::abs(at_upper_above), 1e-30});
        CHECK(std::abs(at_lower_within - at_lower_below) / scale_lower <= 1e-9);
        CHECK(std::abs(at_upper_within - at_upper_above) / scale_upper <= 1e-9);
    }
}

TEST_CASE("il_v3 approaches lvh_v2 as the range widens") {
    // convergence is O(sqrt(eps)): halving the exponent of eps quarters the
    // gap, and eps = 1e-12 is already inside a 1e-6 agreement band
    for (double d : {0.1, 0.5, 1.0, 2.0, 10.0}) {
        double previous = std::numeric_limits<double>::infinity();
        for (double eps : {1e-6, 1e-9, 1e-12}) {
            const double p = 1.7;
            const double value = il::il_v3({d, p, amm::range_from_prices(eps * p, p / eps)});
            const double gap = std::abs(value - il::lvh_v2(d));
            CHECK(gap <= previous * (1.0 + 1e-9));
            previous = gap;
        }
        const double p = 1.7;
        const double tight =
            il::il_v3({d, p, amm::range_from_prices(1e-12 * p, p / 1e-12)});
        CHECK(std::abs(tight - il::lvh_v2(d)) <= 1e-6);
    }
}

TEST_CASE("il_v3 is non-positive whenever the deposit price is in range") {
    std::mt19937_64 rng(47);
    std::uniform_real_distribution<double> log_p(std::log(0.01), std::log(100.0));
    std::uniform_real_distribution<double> factor(1.01, 50.0);
    std::uniform_real_distribution<double> log_d(std::log(1e-3), std::log(1e3));
    for (int i = 0; i < 3000; ++i) {
        const double p = std::exp(log_p(rng));
        const auto range = amm::range_from_prices(p / factor(rng), p * factor(rng));
        const double d = std::exp(log_d(rng));
        CHECK(il::il_v3({d, p, range}) <= 1e-15);
    }
}

TEST_CASE("concentration never loses less than full range") {
    std::mt19937_64 rng(31);
    std::uniform_real_distribution<double> log_p(std::log(0.01), std::log(100.0));
    std::uniform_real_distribution<double> factor(1.01, 50.0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (int i = 0; i < 2000; ++i) {
        const double p = std::exp(log_p(rng));
        const auto range = amm::range_from_prices(p / factor(rng), p * factor(rng));
        // d inside the middle branch, away from 1
        const double lo = range.lower / p;
        const double hi = range.upper / p;
        const double d = lo + unit(rng) * (hi - lo);
        if (!(d > lo && d < hi) || std::abs(d - 1.0) < 1e-6) continue;
        CHECK(il::il_v3({d, p, range}) <= il::lvh_v2(d) + 1e-15);
    }
}

TEST_CASE("realized_il") {
    SUBCASE("nothing changed") {
        il::PositionSnapshot dep{100.0, 100.0, {1.0, 1.0, 1000}};
        il::PositionSnapshot wd{100.0, 100.0, {1.0, 1.0, 2000}};
        CHECK(il::realized_il(dep, wd) == 0.0);
    }
    SUBCASE("constant-product rebalance to p=4") {
        il::PositionSnapshot dep{100.0, 100.0, {1.0, 1.0, 1000}};
        il::PositionSnapshot wd{50.0, 200.0, {4.0, 1.0, 2000}};
        CHECK(il::realized_il(dep, wd) == doctest::Approx(-0.2).epsilon(1e-12));
    }
    SUBCASE("range position moved to the upper bound") {
        il::PositionSnapshot dep{0.5, 0.5, {1.0, 1.0, 1000}};
        il::PositionSnapshot wd{0.0, 1.5, {4.0, 1.0, 2000}};
        CHECK(il::realized_il(dep, wd) == doctest::Approx(-0.4).epsilon(1e-12));
    }
    SUBCASE("ordering") {
        il::PositionSnapshot dep{100.0, 100.0, {1.0, 1.0, 2000}};
        il::PositionSnapshot wd{100.0, 100.0, {1.0, 1.0, 1000}};
        CHECK_THROWS_AS(il::realized_il(dep, wd), std::invalid_argument);
    }
    SUBCASE("deposit-value normalization") {
        il::PositionSnapshot dep{100.0, 100.0, {1.0, 1.0, 1000}};
        il::PositionSnapshot wd{50.0, 200.0, {4.0, 1.0, 2000}};
        // (400 - 500) / 200
        CHECK(il::realized_il(dep, wd, il::IlNormalization::deposit_value) ==
              doctest::Approx(-0.5).epsilon(1e-12));
    }
}

TEST_CASE("realized_il on a fee-free full-range constant-product position equals lvh_v2") {
    std::mt19937_64 rng(41);
    std::uniform_real_distribution<double> reserve(1.0, 1000.0);
    std::uniform_real_distribution<double> log_d(std::log(0.05), std::log(20.0));
    for (int i = 0; i < 1000; ++i) {
        const double x0 = reserve(rng);
        const double y0 = reserve(rng);
        const double p0 = y0 / x0;
        const double d = std::exp(log_d(rng));
        const double p1 = d * p0;
        const double k = x0 * y0;
        // pool rebalances along x*y = k to the new price
        const double x1 = std::sqrt(k / p1);
        const double y1 = std::sqrt(k * p1);
        const double p_y = 1.0;
        il::PositionSnapshot dep{x0, y0, {p0 * p_y, p_y, 0}};
        il::PositionSnapshot wd{x1, y1, {p1 * p_y, p_y, 1}};
        CHECK(std::abs(il::realized_il(dep, wd) - il::lvh_v2(d)) <= 1e-9);
    }
}
