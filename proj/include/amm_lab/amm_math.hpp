#pragma once

#include <cstdint>
#include <optional>

namespace ammlab::amm {

// Uniswap v3 tick domain: price(tick) = 1.0001^tick stays within sqrt-price bounds.
inline constexpr int kMinTick = -887272;
inline constexpr int kMaxTick = 887272;

/// Constant-product pool reserves. Prices are quoted as token1 per token0.
struct PoolState {
    double x = 0.0;  ///< token0 reserve
    double y = 0.0;  ///< token1 reserve
    double k = 0.0;  ///< conservation constant, x*y
};

/// Builds a validated PoolState with k = x*y. Throws std::domain_error on
/// non-positive reserves.
PoolState make_pool(double x, double y);

/// Checks x > 0, y > 0 and k = x*y within 1e-12 relative.
void validate(const PoolState& state);

/// A concentrated-liquidity price range [lower, upper], token1 per token0.
/// Ticks are kept when the range came from tick indices.
struct PriceRange {
    double lower = 0.0;  ///< p_a
    double upper = 0.0;  ///< p_b
    std::optional<int> tick_lower;
    std::optional<int> tick_upper;
};

PriceRange range_from_prices(double lower, double upper);
PriceRange range_from_ticks(int tick_lower, int tick_upper);

/// Checks 0 < lower < upper and, when ticks are present, that the prices
/// match tick_to_price within 1e-9 relative.
void validate(const PriceRange& range);

/// Concentrated-liquidity magnitude (sqrt-price units, >= 0).
struct Liquidity {
    double value = 0.0;
};

struct TokenAmounts {
    double amount0 = 0.0;
    double amount1 = 0.0;
};

/// Eq-style conservation constant of a constant-product pool: k = x*y.
double invariant_k(double x, double y);

/// Marginal price of the pool, token1 per token0: y/x.
double spot_price(const PoolState& state);

/// price = 1.0001^tick. Throws std::domain_error outside the tick domain.
double tick_to_price(int tick);

/// Token amounts held by a position of liquidity L at price p:
///   p <= lower:        x = L(1/sqrt(p_a) - 1/sqrt(p_b)), y = 0
///   p >= upper:        x = 0, y = L(sqrt(p_b) - sqrt(p_a))
///   otherwise:         x = L(1/sqrt(p) - 1/sqrt(p_b)), y = L(sqrt(p) - sqrt(p_a))
TokenAmounts amounts_in_range(Liquidity liquidity, double p, const PriceRange& range);

/// Inverse of amounts_in_range: the largest L whose required amounts at price
/// p do not exceed (amount0, amount1). Both amounts zero gives L = 0. An
/// amount on the wrong side of an out-of-range price is a domain error.
Liquidity liquidity_from_amounts(const TokenAmounts& amounts, double p, const PriceRange& range);

enum class SwapSide { token0_in, token1_in };

struct SwapResult {
    double amount_out = 0.0;
    PoolState new_state;
    double fee_paid = 0.0;
};

/// Executes a constant-product swap. The fee (fee_ppm parts per million,
/// e.g. 3000 = 0.3%) is skimmed from the input and held outside the
/// reserves, so the invariant is preserved on the net amount.
SwapResult execute_swap(const PoolState& state, double amount_in, SwapSide side,
                        std::uint32_t fee_ppm);

}  // namespace ammlab::amm
