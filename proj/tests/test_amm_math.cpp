#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "amm_lab/amm_math.hpp"

#include <cmath>
#include <random>

using namespace ammlab;

TEST_CASE("invariant_k") {
    CHECK(amm::invariant_k(100.0, 100.0) == doctest::Approx(10000.0).epsilon(1e-12));
    CHECK(amm::invariant_k(250.0, 40.0) == doctest::Approx(10000.0).epsilon(1e-12));
    // identity case: (1, k') -> k'
    for (double k : {0.5, 1.0, 3.25, 1e9}) {
        CHECK(amm::invariant_k(1.0, k) == k);
    }
    CHECK_THROWS_AS(amm::invariant_k(0.0, 1.0), std::domain_error);
    CHECK_THROWS_AS(amm::invariant_k(1.0, -2.0), std::domain_error);
}

TEST_CASE("spot_price") {
    CHECK(amm::spot_price(amm::make_pool(100.0, 100.0)) == 1.0);
    CHECK(amm::spot_price(amm::make_pool(100.0, 400.0)) == 4.0);
    CHECK(amm::spot_price(amm::make_pool(400.0, 100.0)) == 0.25);
}

TEST_CASE("pool state validation") {
    amm::PoolState inconsistent{100.0, 100.0, 9000.0};
    CHECK_THROWS_AS(amm::validate(inconsistent), std::domain_error);
    CHECK_NOTHROW(amm::validate(amm::make_pool(3.0, 7.0)));
}

TEST_CASE("tick_to_price") {
    CHECK(amm::tick_to_price(0) == 1.0);
    CHECK(amm::tick_to_price(6931) == doctest::Approx(1.99986).epsilon(1e-4));
    CHECK(amm::tick_to_price(-6931) == doctest::Approx(0.50004).epsilon(1e-4));
    CHECK_THROWS_AS(amm::tick_to_price(887273), std::domain_error);
    CHECK_THROWS_AS(amm::tick_to_price(-887273), std::domain_error);
    CHECK_NOTHROW(amm::tick_to_price(887272));
}

TEST_CASE("tick reciprocal property") {
    std::mt19937_64 rng(1234);
    std::uniform_int_distribution<int> ticks(-887272, 887272);
    for (int i = 0; i < 2000; ++i) {
        const int t = ticks(rng);
        const double product = amm::tick_to_price(t) * amm::tick_to_price(-t);
        CHECK(std::abs(product - 1.0) <= 1e-12);
    }
}

TEST_CASE("amounts_in_range") {
    const amm::PriceRange range = amm::range_from_prices(0.25, 4.0);

    SUBCASE("zero liquidity") {
        const auto amounts = amm::amounts_in_range({0.0}, 1.0, range);
        CHECK(amounts.amount0 == 0.0);
        CHECK(amounts.amount1 == 0.0);
    }
    SUBCASE("in range") {
        const auto amounts = amm::amounts_in_range({1.0}, 1.0, range);
        CHECK(amounts.amount0 == doctest::Approx(0.5).epsilon(1e-12));
        CHECK(amounts.amount1 == doctest::Approx(0.5).epsilon(1e-12));
    }
    SUBCASE("above range") {
        const auto amounts = amm::amounts_in_range({1.0}, 9.0, range);
        CHECK(amounts.amount0 == 0.0);
        CHECK(amounts.amount1 == doctest::Approx(1.5).epsilon(1e-12));
    }
    SUBCASE("below range") {
        const auto amounts = amm::amounts_in_range({1.0}, 0.1, range);
        CHECK(amounts.amount0 == doctest::Approx(1.5).epsilon(1e-12));
        CHECK(amounts.amount1 == 0.0);
    }
}

TEST_CASE("amounts_in_range continuity at the bounds") {
    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> price(0.01, 100.0);
    for (int i = 0; i < 500; ++i) {
        const double pa = price(rng);
        const double pb = pa * (1.0 + price(rng));
        const auto range = amm::range_from_prices(pa, pb);
        for (double boundary : {pa, pb}) {
            const auto below = amm::amounts_in_range({1.0}, boundary * (1.0 - 1e-12), range);
            const auto above = amm::amounts_in_range({1.0}, boundary * (1.0 + 1e-12), range);
            const double scale0 = std::max({std::abs(below.amount0), std::abs(above.amount0), 1.0});
            const double scale1 = std::max({std::abs(below.amount1), std::abs(above.amount1), 1.0});
            CHECK(std::abs(below.amount0 - above.amount0) / scale0 <= 1e-9);
            CHECK(std::abs(below.amount1 - above.amount1) / scale1 <= 1e-9);
        }
    }
}

TEST_CASE("liquidity_from_amounts") {
    const amm::PriceRange range = amm::range_from_prices(0.25, 4.0);
    CHECK(amm::liquidity_from_amounts({0.5, 0.5}, 1.0, range).value ==
          doctest::Approx(1.0).epsilon(1e-12));
    CHECK(amm::liquidity_from_amounts({0.0, 0.0}, 1.0, range).value == 0.0);
    CHECK(amm::liquidity_from_amounts({0.0, 1.5}, 9.0, range).value ==
          doctest::Approx(1.0).epsilon(1e-12));
    // wrong-side amounts
    CHECK_THROWS_AS(amm::liquidity_from_amounts({0.5, 0.5}, 9.0, range), std::domain_error);
    CHECK_THROWS_AS(amm::liquidity_from_amounts({0.5, 0.5}, 0.1, range), std::domain_error);
}

TEST_CASE("liquidity round-trip property") {
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> log_l(std::log(1e-6), std::log(1e6));
    std::uniform_real_distribution<double> price(0.01, 100.0);
    std::uniform_real_distribution<double> unit(0.05, 0.95);
    for (int i = 0; i < 2000; ++i) {
        const double pa = price(rng);
        const double pb = pa * (1.0 + price(rng));
        const double p = pa + unit(rng) * (pb - pa);
        if (p <= pa || p >= pb) continue;
        const auto range = amm::range_from_prices(pa, pb);
        const double l = std::exp(log_l(rng));
        const auto amounts = amm::amounts_in_range({l}, p, range);
        const double round_trip = amm::liquidity_from_amounts(amounts, p, range).value;
        CHECK(std::abs(round_trip - l) <= 1e-9 * l);
    }
}

TEST_CASE("execute_swap examples") {
    const auto pool = amm::make_pool(100.0, 100.0);

    SUBCASE("zero input is rejected") {
        CHECK_THROWS_AS(amm::execute_swap(pool, 0.0, amm::SwapSide::token0_in, 0),
                        std::domain_error);
    }
    SUBCASE("tiny input gives tiny output") {
        const auto result = amm::execute_swap(pool, 1e-9, amm::SwapSide::token0_in, 0);
        CHECK(result.amount_out > 0.0);
        CHECK(result.amount_out < 2e-9);
    }
    SUBCASE("fee-free swap") {
        const auto result = amm::execute_swap(pool, 100.0, amm::SwapSide::token0_in, 0);
        CHECK(result.amount_out == doctest::Approx(50.0).epsilon(1e-12));
        CHECK(result.new_state.x == doctest::Approx(200.0).epsilon(1e-12));
        CHECK(result.new_state.y == doctest::Approx(50.0).epsilon(1e-12));
        CHECK(result.fee_paid == 0.0);
    }
    SUBCASE("0.3% fee") {
        const auto result = amm::execute_swap(pool, 100.0, amm::SwapSide::token0_in, 3000);
        CHECK(result.fee_paid == doctest::Approx(0.3).epsilon(1e-12));
        CHECK(result.amount_out == doctest::Approx(100.0 - 10000.0 / 199.7).epsilon(1e-12));
        CHECK(result.amount_out == doctest::Approx(49.9248).epsilon(1e-5));
        CHECK(result.new_state.x == doctest::Approx(199.7).epsilon(1e-12));
        CHECK(result.new_state.y == doctest::Approx(50.0752).epsilon(1e-5));
    }
    SUBCASE("token1 side mirrors token0") {
        const auto result = amm::execute_swap(pool, 100.0, amm::SwapSide::token1_in, 0);
        CHECK(result.amount_out == doctest::Approx(50.0).epsilon(1e-12));
        CHECK(result.new_state.y == doctest::Approx(200.0).epsilon(1e-12));
    }
    SUBCASE("fee domain") {
        CHECK_THROWS_AS(amm::execute_swap(pool, 1.0, amm::SwapSide::token0_in, 1'000'000),
                        std::domain_error);
    }
}

TEST_CASE("fee-free swaps preserve the invariant") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> reserve(0.5, 1e6);
    std::uniform_real_distribution<double> fraction(1e-6, 10.0);
    for (int i = 0; i < 2000; ++i) {
        const auto pool = amm::make_pool(reserve(rng), reserve(rng));
        const auto side = (i % 2 == 0) ? amm::SwapSide::token0_in : amm::SwapSide::token1_in;
        const auto result = amm::execute_swap(pool, fraction(rng) * pool.x, side, 0);
        const double k = result.new_state.x * result.new_state.y;
        CHECK(std::abs(k - pool.k) <= 1e-9 * pool.k);
    }
}

TEST_CASE("swap monotonicity") {
    const auto pool = amm::make_pool(1000.0, 2000.0);
    double previous = 0.0;
    for (double amount : {1.0, 2.0, 5.0, 10.0, 100.0, 1000.0}) {
        const auto result = amm::execute_swap(pool, amount, amm::SwapSide::token0_in, 500);
        CHECK(result.amount_out > previous);
        previous = result.amount_out;
    }
    previous = std::numeric_limits<double>::infinity();
    for (std::uint32_t fee : {0u, 100u, 3000u, 10000u, 100000u}) {
        const auto result = amm::execute_swap(pool, 50.0, amm::SwapSide::token0_in, fee);
        CHECK(result.amount_out < previous);
        previous = result.amount_out;
    }
}

TEST_CASE("price range from ticks") {
    const auto range = amm::range_from_ticks(-6931, 6931);
    CHECK(range.lower == doctest::Approx(0.50004).epsilon(1e-4));
    CHECK(range.upper == doctest::Approx(1.99986).epsilon(1e-4));
    CHECK(range.tick_lower.value() == -6931);
    CHECK_THROWS_AS(amm::range_from_ticks(10, 10), std::domain_error);
    CHECK_THROWS_AS(amm::range_from_prices(-1.0, 2.0), std::domain_error);
    // inconsistent tick/price pair
    amm::PriceRange bad = amm::range_from_ticks(-6931, 6931);
    bad.lower = 0.6;
    CHECK_THROWS_AS(amm::validate(bad), std::domain_error);
}
