#include "amm_lab/amm_math.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace ammlab::amm {

namespace {

bool close_rel(double a, double b, double tol) {
    double scale = std::max(std::abs(a), std::abs(b));
    return std::abs(a - b) <= tol * std::max(scale, 1e-300);
}

}  // namespace

PoolState make_pool(double x, double y) {
    PoolState state{x, y, invariant_k(x, y)};
    return state;
}

void validate(const PoolState& state) {
    if (!(state.x > 0.0) || !(state.y > 0.0)) {
        throw std::domain_error("PoolState: reserves must be positive");
    }
    if (!close_rel(state.k, state.x * state.y, 1e-12)) {
        throw std::domain_error("PoolState: k inconsistent with x*y");
    }
}

PriceRange range_from_prices(double lower, double upper) {
    PriceRange range{lower, upper, std::nullopt, std::nullopt};
    validate(range);
    return range;
}

PriceRange range_from_ticks(int tick_lower, int tick_upper) {
    PriceRange range{tick_to_price(tick_lower), tick_to_price(tick_upper), tick_lower, tick_upper};
    validate(range);
    return range;
}

void validate(const PriceRange& range) {
    if (!(range.lower > 0.0) || !(range.lower < range.upper)) {
        throw std::domain_error("PriceRange: requires 0 < lower < upper");
    }
    if (range.tick_lower && !close_rel(range.lower, tick_to_price(*range.tick_lower), 1e-9)) {
        throw std::domain_error("PriceRange: lower bound inconsistent with tick_lower");
    }
    if (range.tick_upper && !close_rel(range.upper, tick_to_price(*range.tick_upper), 1e-9)) {
        throw std::domain_error("PriceRange: upper bound inconsistent with tick_upper");
    }
}

double invariant_k(double x, double y) {
    if (!(x > 0.0) || !(y > 0.0)) {
        throw std::domain_error("invariant_k: reserves must be positive");
    }
    return x * y;
}

double spot_price(const PoolState& state) {
    validate(state);
    return state.y / state.x;
}

double tick_to_price(int tick) {
    if (tick < kMinTick || tick > kMaxTick) {
        throw std::domain_error("tick_to_price: tick " + std::to_string(tick) +
                                " outside [" + std::to_string(kMinTick) + ", " +
                                std::to_string(kMaxTick) + "]");
    }
    return std::pow(1.0001, static_cast<double>(tick));
}

TokenAmounts amounts_in_range(Liquidity liquidity, double p, const PriceRange& range) {
    validate(range);
    if (!(liquidity.value >= 0.0)) {
        throw std::domain_error("amounts_in_range: liquidity must be non-negative");
    }
    if (!(p > 0.0)) {
        throw std::domain_error("amounts_in_range: price must be positive");
    }
    const double l = liquidity.value;
    const double sqrt_a = std::sqrt(range.lower);
    const double sqrt_b = std::sqrt(range.upper);
    if (p <= range.lower) {
        return {l * (1.0 / sqrt_a - 1.0 / sqrt_b), 0.0};
    }
    if (p >= range.upper) {
        return {0.0, l * (sqrt_b - sqrt_a)};
    }
    const double sqrt_p = std::sqrt(p);
    return {l * (1.0 / sqrt_p - 1.0 / sqrt_b), l * (sqrt_p - sqrt_a)};
}

Liquidity liquidity_from_amounts(const TokenAmounts& amounts, double p, const PriceRange& range) {
    validate(range);
    if (!(p > 0.0)) {
        throw std::domain_error("liquidity_from_amounts: price must be positive");
    }
    if (amounts.amount0 < 0.0 || amounts.amount1 < 0.0) {
        throw std::domain_error("liquidity_from_amounts: amounts must be non-negative");
    }
    if (amounts.amount0 == 0.0 && amounts.amount1 == 0.0) {
        return {0.0};
    }
    const double sqrt_a = std::sqrt(range.lower);
    const double sqrt_b = std::sqrt(range.upper);
    if (p <= range.lower) {
        if (amounts.amount1 > 0.0) {
            throw std::domain_error(
                "liquidity_from_amounts: token1 amount inconsistent with price below range");
        }
        return {amounts.amount0 / (1.0 / sqrt_a - 1.0 / sqrt_b)};
    }
    if (p >= range.upper) {
        if (amounts.amount0 > 0.0) {
            throw std::domain_error(
                "liquidity_from_amounts: token0 amount inconsistent with price above range");
        }
        return {amounts.amount1 / (sqrt_b - sqrt_a)};
    }
    const double sqrt_p = std::sqrt(p);
    const double from_x = amounts.amount0 / (1.0 / sqrt_p - 1.0 / sqrt_b);
    const double from_y = amounts.amount1 / (sqrt_p - sqrt_a);
    return {std::min(from_x, from_y)};
}

SwapResult execute_swap(const PoolState& state, double amount_in, SwapSide side,
                        std::uint32_t fee_ppm) {
    validate(state);
    if (!(amount_in > 0.0)) {
        throw std::domain_error("execute_swap: amount_in must be positive");
    }
    if (fee_ppm >= 1'000'000) {
        throw std::domain_error("execute_swap: fee_ppm must be below 1,000,000");
    }
    const double fee_paid = amount_in * static_cast<double>(fee_ppm) / 1e6;
    const double net = amount_in - fee_paid;

    SwapResult result;
    result.fee_paid = fee_paid;
    if (side == SwapSide::token0_in) {
        const double new_x = state.x + net;
        const double new_y = state.k / new_x;
        result.amount_out = state.y - new_y;
        result.new_state = PoolState{new_x, new_y, new_x * new_y};
    } else {
        const double new_y = state.y + net;
        const double new_x = state.k / new_y;
        result.amount_out = state.x - new_x;
        result.new_state = PoolState{new_x, new_y, new_x * new_y};
    }
    if (!(result.new_state.x > 0.0) || !(result.new_state.y > 0.0) ||
        !std::isfinite(result.amount_out) || result.amount_out < 0.0) {
        throw std::domain_error("execute_swap: swap would drain a reserve");
    }
    return result;
}

}  // namespace ammlab::amm
