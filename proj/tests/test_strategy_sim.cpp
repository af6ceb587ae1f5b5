#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "amm_lab/strategy_sim.hpp"

#include "amm_lab/il_metrics.hpp"

#include <cmath>

using namespace ammlab;

namespace {

sim::PricePath linear_path(double p_from, double p_to, std::size_t n_steps,
                           double volume_per_step = 0.0, std::int64_t dt = 3600) {
    sim::PricePath path;
    for (std::size_t i = 0; i <= n_steps; ++i) {
        const double f = static_cast<double>(i) / static_cast<double>(n_steps);
        path.points.push_back({static_cast<std::int64_t>(i) * dt, p_from + f * (p_to - p_from),
                               i == 0 ? 0.0 : volume_per_step, 1.0});
    }
    return path;
}

sim::SimConfig config_with(amm::PriceRange range, double duration_days,
                           double deposit = 10'000.0, std::uint32_t fee_ppm = 0,
                           double other = 0.0) {
    sim::SimConfig config;
    config.range = range;
    config.duration_days = duration_days;
    config.deposit_usd = deposit;
    config.fee_ppm = fee_ppm;
    config.pool_liquidity_other = other;
    return config;
}

}  // namespace

TEST_CASE("gbm_path degenerate and deterministic cases") {
    SUBCASE("zero volatility, zero drift is constant") {
        sim::GbmParams params;
        params.p0 = 2.5;
        params.n_steps = 100;
        const auto path = sim::gbm_path(1, params);
        REQUIRE(path.points.size() == 101);
        for (const auto& pt : path.points) {
            CHECK(pt.price == doctest::Approx(2.5).epsilon(1e-12));
        }
    }
    SUBCASE("zero volatility with drift follows the closed form") {
        sim::GbmParams params;
        params.p0 = 1.0;
        params.mu = 0.8;
        params.dt_seconds = 86400.0;
        params.n_steps = 50;
        const auto path = sim::gbm_path(1, params);
        const double dt_years = 86400.0 / (365.0 * 86400.0);
        for (std::size_t i = 0; i <= 50; ++i) {
            const double expected = std::exp(0.8 * dt_years * static_cast<double>(i));
            CHECK(path.points[i].price == doctest::Approx(expected).epsilon(1e-9));
        }
    }
    SUBCASE("identical seeds give bit-identical paths") {
        sim::GbmParams params;
        params.p0 = 1.0;
        params.sigma = 1.5;
        params.n_steps = 500;
        const auto a = sim::gbm_path(42, params);
        const auto b = sim::gbm_path(42, params);
        REQUIRE(a.points.size() == b.points.size());
        for (std::size_t i = 0; i < a.points.size(); ++i) {
            CHECK(a.points[i].price == b.points[i].price);
        }
        const auto c = sim::gbm_path(43, params);
        CHECK(c.points.back().price != a.points.back().price);
    }
    SUBCASE("parameter validation") {
        sim::GbmParams params;
        params.p0 = 0.0;
        CHECK_THROWS_AS(static_cast<void>(sim::gbm_path(1, params)), std::domain_error);
        params.p0 = 1.0;
        params.sigma = -1.0;
        CHECK_THROWS_AS(static_cast<void>(sim::gbm_path(1, params)), std::domain_error);
        params.sigma = 0.0;
        params.n_steps = 0;
        CHECK_THROWS_AS(static_cast<void>(sim::gbm_path(1, params)), std::domain_error);
    }
}

TEST_CASE("simulate_position degenerate cases") {
    SUBCASE("flat price, no volume: nothing happens") {
        const auto path = linear_path(1.0, 1.0, 24);
        const auto result =
            sim::simulate_position(path, config_with(amm::range_from_prices(0.5, 2.0), 1.0));
        CHECK(result.realized_il == 0.0);
        CHECK(result.rewards == 0.0);
        CHECK(result.lp_return == 0.0);
        CHECK(result.time_in_range == 1.0);
        CHECK_FALSE(result.opened_out_of_range);
    }
    SUBCASE("pro-rata fee share: equal liquidity takes half the fees") {
        auto path = linear_path(1.0, 1.0, 100, 10'000.0);  // 1,000,000 USD total volume
        auto config = config_with(amm::range_from_prices(0.5, 2.0), 100.0 * 3600.0 / 86400.0,
                                  10'000.0, 3000, 0.0);
        // make the competing liquidity exactly equal to the position's
        const auto unit = amm::amounts_in_range({1.0}, 1.0, config.range);
        const double liquidity = 10'000.0 / (unit.amount0 * 1.0 + unit.amount1 * 1.0);
        config.pool_liquidity_other = liquidity;
        const auto result = sim::simulate_position(path, config);
        const double v_hodl = 10'000.0;  // price unchanged
        CHECK(result.rewards == doctest::Approx(1'000'000.0 * 0.003 * 0.5 / v_hodl).epsilon(1e-9));
        CHECK(result.time_in_range == 1.0);
    }
    SUBCASE("price walks to the upper bound of [0.25, 4]") {
        const auto path = linear_path(1.0, 4.0, 1000);
        const auto result = sim::simulate_position(
            path, config_with(amm::range_from_prices(0.25, 4.0), 1000.0 * 3600.0 / 86400.0));
        CHECK(result.realized_il == doctest::Approx(-0.4).epsilon(1e-12));
        CHECK(result.rewards == 0.0);
    }
    SUBCASE("range excluding the opening price is flagged") {
        const auto path = linear_path(1.0, 1.2, 10);
        const auto result =
            sim::simulate_position(path, config_with(amm::range_from_prices(2.0, 4.0), 0.1));
        CHECK(result.opened_out_of_range);
        CHECK(result.time_in_range == 0.0);
        CHECK(result.rewards == 0.0);
    }
    SUBCASE("duration longer than the path span") {
        const auto path = linear_path(1.0, 1.0, 10);
        CHECK_THROWS_AS(static_cast<void>(sim::simulate_position(
                            path, config_with(amm::range_from_prices(0.5, 2.0), 10.0))),
                        std::domain_error);
    }
    SUBCASE("malformed path") {
        sim::PricePath bad;
        bad.points = {{0, 1.0, 0.0, 1.0}, {0, 1.0, 0.0, 1.0}};
        CHECK_THROWS_AS(static_cast<void>(sim::simulate_position(
                            bad, config_with(amm::range_from_prices(0.5, 2.0), 0.01))),
                        std::domain_error);
    }
}

TEST_CASE("oracle_replay spot values") {
    SUBCASE("d = 1 with zero volume gives zero") {
        const auto path = linear_path(1.0, 1.0, 50);
        const auto result =
            sim::oracle_replay(path, config_with(amm::range_from_prices(0.5, 2.0), 1.0));
        CHECK(std::abs(result.realized_il) <= 1e-12);
    }
    SUBCASE("1 to 4 in [0.25, 4]") {
        const auto path = linear_path(1.0, 4.0, 1000);
        const auto result = sim::oracle_replay(
            path, config_with(amm::range_from_prices(0.25, 4.0), 1000.0 * 3600.0 / 86400.0));
        CHECK(result.realized_il == doctest::Approx(-0.4).epsilon(1e-9));
    }
    SUBCASE("1 to 4 in [0.5, 2] crosses the upper bound") {
        const auto path = linear_path(1.0, 4.0, 1000);
        const auto result = sim::oracle_replay(
            path, config_with(amm::range_from_prices(0.5, 2.0), 1000.0 * 3600.0 / 86400.0));
        CHECK(result.realized_il == doctest::Approx(-0.517157).epsilon(1e-6));
    }
}

TEST_CASE("oracle equivalence across all three branches") {
    const sim::GridConfig grid_config;
    std::size_t above = 0, within = 0, below = 0;
    for (std::uint64_t seed = 0; seed < 60; ++seed) {
        sim::GbmParams params;
        params.p0 = 1.0;
        params.sigma = 2.5;
        params.mu = (seed % 3 == 0) ? 6.0 : (seed % 3 == 1) ? -6.0 : 0.0;
        params.dt_seconds = 3600.0;
        params.n_steps = 24 * 30;
        const auto path = sim::gbm_path(seed, params);
        const auto config =
            config_with(sim::range_for_size(0.5, 1.0), 30.0, grid_config.deposit_usd);
        const auto closed = sim::simulate_position(path, config);
        const auto oracle = sim::oracle_replay(path, config);
        CHECK(std::abs(closed.realized_il - oracle.realized_il) <= 1e-6);
        CHECK(closed.rewards == oracle.rewards);
        const double d = path.points.back().price / 1.0;
        if (d > config.range.upper) ++above;
        else if (d < config.range.lower) ++below;
        else ++within;
    }
    // the drift cohorts must actually reach all three terminal branches
    CHECK(above > 0);
    CHECK(within > 0);
    CHECK(below > 0);
}

TEST_CASE("rewards monotonicity and time_in_range") {
    const auto range = amm::range_from_prices(0.5, 2.0);
    const double duration = 100.0 * 3600.0 / 86400.0;
    double previous = -1.0;
    for (double volume : {0.0, 100.0, 1000.0, 10'000.0}) {
        const auto path = linear_path(1.0, 1.0, 100, volume);
        const auto result =
            sim::simulate_position(path, config_with(range, duration, 1e4, 3000, 1e5));
        CHECK(result.rewards >= previous);
        previous = result.rewards;
    }
    previous = -1.0;
    for (std::uint32_t fee : {0u, 500u, 3000u, 10000u}) {
        const auto path = linear_path(1.0, 1.0, 100, 1000.0);
        const auto result =
            sim::simulate_position(path, config_with(range, duration, 1e4, fee, 1e5));
        CHECK(result.rewards >= previous);
        previous = result.rewards;
    }
    // out of range the whole time: no rewards
    const auto path = linear_path(10.0, 12.0, 100, 1000.0);
    const auto result = sim::simulate_position(path, config_with(range, duration, 1e4, 3000, 1e5));
    CHECK(result.time_in_range == 0.0);
    CHECK(result.rewards == 0.0);
}

TEST_CASE("simulate determinism") {
    sim::GbmParams params;
    params.p0 = 1.0;
    params.sigma = 1.0;
    params.n_steps = 200;
    params.volume.usd_per_step = 500.0;
    const auto path = sim::gbm_path(7, params);
    const auto config = config_with(amm::range_from_prices(0.8, 1.25),
                                    200.0 * 3600.0 / 86400.0, 1e4, 3000, 1e5);
    const auto a = sim::simulate_position(path, config);
    const auto b = sim::simulate_position(path, config);
    CHECK(a.realized_il == b.realized_il);
    CHECK(a.rewards == b.rewards);
    CHECK(a.lp_return == b.lp_return);
    CHECK(a.time_in_range == b.time_in_range);
    CHECK(a.lp_return == a.realized_il + a.rewards);
}

TEST_CASE("range_for_size inverts the range-size definition") {
    for (double r : {0.01, 0.0467, 0.2756, 0.5, 2.0}) {
        for (double p0 : {0.001, 1.0, 1800.0}) {
            const auto range = sim::range_for_size(r, p0);
            const double recovered =
                (range.upper - range.lower) / std::sqrt(range.lower * range.upper);
            CHECK(recovered == doctest::Approx(r).epsilon(1e-9));
            CHECK(range.lower < p0);
            CHECK(p0 < range.upper);
        }
    }
}

TEST_CASE("run_strategy_grid") {
    SUBCASE("one path, one strategy") {
        std::vector<sim::PricePath> paths{linear_path(1.0, 1.1, 48)};
        std::vector<sim::StrategySpec> strategies{{"wide", 1.0, 0.5}};
        const auto cohorts = sim::run_strategy_grid(paths, strategies, "risky_risky");
        REQUIRE(cohorts.size() == 1);
        CHECK(cohorts[0].n == 1);
        CHECK(cohorts[0].strategy == "wide");
        CHECK(cohorts[0].pool_type_tag == "risky_risky");
        CHECK(cohorts[0].metrics.at("realized_il").n == 1);
        CHECK(cohorts[0].max_oracle_deviation <= 1e-6);
    }
    SUBCASE("low volatility: narrow long ranges out-earn wide ones") {
        sim::GbmParams params;
        params.p0 = 1.0;
        params.sigma = 0.05;
        params.dt_seconds = 3600.0;
        params.n_steps = 24 * 60;
        params.volume.usd_per_step = 10'000.0;
        const auto paths = sim::make_paths(100, 1000, params);
        std::vector<sim::StrategySpec> strategies{{"long_narrow", 60.0, 0.02},
                                                  {"long_wide", 60.0, 0.5}};
        const auto cohorts = sim::run_strategy_grid(paths, strategies, "risky_risky");
        CHECK(cohorts[0].metrics.at("rewards").mean > cohorts[1].metrics.at("rewards").mean);
    }
    SUBCASE("high volatility: wide short ranges lose less than narrow ones") {
        sim::GbmParams params;
        params.p0 = 1.0;
        params.sigma = 3.0;
        params.dt_seconds = 3600.0;
        params.n_steps = 24;
        const auto paths = sim::make_paths(100, 2000, params);
        std::vector<sim::StrategySpec> strategies{{"short_narrow", 1.0, 0.02},
                                                  {"short_wide", 1.0, 0.5}};
        const auto cohorts = sim::run_strategy_grid(paths, strategies, "risky_risky");
        CHECK(cohorts[1].metrics.at("realized_il").mean >
              cohorts[0].metrics.at("realized_il").mean);
    }
    SUBCASE("empty inputs") {
        std::vector<sim::PricePath> no_paths;
        std::vector<sim::StrategySpec> strategies{{"s", 1.0, 0.5}};
        CHECK_THROWS_AS(
            static_cast<void>(sim::run_strategy_grid(no_paths, strategies, "risky_risky")),
            std::domain_error);
    }
}

TEST_CASE("default strategy grid stays inside the published threshold bands") {
    const auto grid = sim::default_strategy_grid();
    REQUIRE(grid.size() == 4);
    for (const auto& spec : grid) {
        const bool is_short = spec.duration_days < 1.12;
        const bool is_long = spec.duration_days > 26.90;
        const bool is_narrow = spec.range_size < 0.0467;
        const bool is_wide = spec.range_size > 0.2756;
        CHECK((is_short || is_long));
        CHECK((is_narrow || is_wide));
    }
}
