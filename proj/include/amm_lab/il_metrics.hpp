#pragma once

#include "amm_lab/amm_math.hpp"

#include <cstdint>

namespace ammlab::il {

/// USD prices of the two pool tokens at a point in time.
struct PriceQuote {
    double token0_usd = 0.0;  ///< p_x
    double token1_usd = 0.0;  ///< p_y
    std::int64_t t = 0;       ///< unix seconds
};

/// Inputs of the concentrated-liquidity IL formula.
struct ILQuery {
    double d = 1.0;  ///< relative pool-price change since deposit
    double p = 1.0;  ///< pool price at deposit, token1 per token0
    amm::PriceRange range;
};

struct ValueSnapshot {
    double v_pool = 0.0;
    double v_hodl = 0.0;
};

/// Token amounts plus the quote in force when they were observed.
struct PositionSnapshot {
    double amount0 = 0.0;
    double amount1 = 0.0;
    PriceQuote quote;
};

/// Denominator convention for realized IL. hodl_at_close follows the
/// loss-versus-holding definition; deposit_value divides by the USD value of
/// the deposit at open instead.
enum class IlNormalization { hodl_at_close, deposit_value };

/// USD value of a full-range constant-product position: 2*sqrt(k*p_y*p_x).
double value_pool(double k, const PriceQuote& quote);

/// USD value of holding the initial amounts untouched: x0*p_x + y0*p_y.
double value_hodl(double amount0, double amount1, const PriceQuote& quote);

/// Loss-versus-holding: v_pool/v_hodl - 1.
double lvh(const ValueSnapshot& snapshot);

/// Closed-form full-range IL for a relative price change d:
/// 2*sqrt(d)/(1+d) - 1. Always in (-1, 0], zero only at d = 1.
double lvh_v2(double d);

/// Piecewise IL of a range-bound position. Branch selection compares d
/// against p_a/p and p_b/p; ties go to the middle branch (the formula is
/// continuous across branch boundaries, so the choice does not change the
/// value).
double il_v3(const ILQuery& query);

// Individual branch evaluators, exposed so boundary agreement can be
// checked directly.
double il_v3_above(double d, double p, const amm::PriceRange& range);
double il_v3_within(double d, double p, const amm::PriceRange& range);
double il_v3_below(double d, double p, const amm::PriceRange& range);

/// Realized IL of a matched deposit/withdrawal pair: withdrawn amounts
/// valued at withdrawal prices versus the deposit amounts held (HODL) to the
/// same prices. Collected fees are not part of v_pool; rewards are accounted
/// separately.
double realized_il(const PositionSnapshot& deposit, const PositionSnapshot& withdrawal,
                   IlNormalization norm = IlNormalization::hodl_at_close);

}  // namespace ammlab::il
