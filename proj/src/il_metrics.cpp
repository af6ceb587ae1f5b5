#include "amm_lab/il_metrics.hpp"

#include <cmath>
#include <stdexcept>

namespace ammlab::il {

double value_pool(double k, const PriceQuote& quote) {
    if (!(k > 0.0)) {
        throw std::domain_error("value_pool: invariant k must be positive");
    }
    if (!(quote.token0_usd > 0.0) || !(quote.token1_usd > 0.0)) {
        throw std::domain_error("value_pool: token prices must be positive");
    }
    return 2.0 * std::sqrt(k * quote.token1_usd * quote.token0_usd);
}

double value_hodl(double amount0, double amount1, const PriceQuote& quote) {
    if (amount0 < 0.0 || amount1 < 0.0) {
        throw std::domain_error("value_hodl: amounts must be non-negative");
    }
    if (amount0 == 0.0 && amount1 == 0.0) {
        throw std::domain_error("value_hodl: empty portfolio");
    }
    return amount0 * quote.token0_usd + amount1 * quote.token1_usd;
}

double lvh(const ValueSnapshot& snapshot) {
    if (!(snapshot.v_hodl > 0.0)) {
        throw std::domain_error("lvh: HODL value must be positive");
    }
    return snapshot.v_pool / snapshot.v_hodl - 1.0;
}

double lvh_v2(double d) {
    if (!(d > 0.0)) {
        throw std::domain_error("lvh_v2: price change d must be positive");
    }
    return 2.0 * std::sqrt(d) / (1.0 + d) - 1.0;
}

double il_v3_above(double d, double p, const amm::PriceRange& range) {
    const double sqrt_pb_p = std::sqrt(range.upper / p);
    const double sqrt_p_pb = std::sqrt(p / range.upper);
    const double sqrt_pa_p = std::sqrt(range.lower / p);
    const double numer = sqrt_pb_p - d * (1.0 - sqrt_p_pb) - 1.0;
    const double denom = d * (1.0 - sqrt_p_pb) + 1.0 - sqrt_pa_p;
    return numer / denom;
}

double il_v3_within(double d, double p, const amm::PriceRange& range) {
    const double sqrt_pa_p = std::sqrt(range.lower / p);
    const double sqrt_p_pb = std::sqrt(p / range.upper);
    const double numer = 2.0 * std::sqrt(d) - 1.0 - d;
    const double denom = 1.0 + d - sqrt_pa_p - d * sqrt_p_pb;
    return numer / denom;
}

double il_v3_below(double d, double p, const amm::PriceRange& range) {
    const double sqrt_p_pa = std::sqrt(p / range.lower);
    const double sqrt_pa_p = std::sqrt(range.lower / p);
    const double sqrt_p_pb = std::sqrt(p / range.upper);
    const double numer = d * (sqrt_p_pa - 1.0) - 1.0 + sqrt_pa_p;
    const double denom = d * (1.0 - sqrt_p_pb) + 1.0 - sqrt_pa_p;
    return numer / denom;
}

double il_v3(const ILQuery& query) {
    amm::validate(query.range);
    if (!(query.d > 0.0)) {
        throw std::domain_error("il_v3: price change d must be positive");
    }
    if (!(query.p > 0.0)) {
        throw std::domain_error("il_v3: deposit price must be positive");
    }
    const double lower_ratio = query.range.lower / query.p;
    const double upper_ratio = query.range.upper / query.p;
    if (query.d > upper_ratio) {
        return il_v3_above(query.d, query.p, query.range);
    }
    if (query.d < lower_ratio) {
        return il_v3_below(query.d, query.p, query.range);
    }
    return il_v3_within(query.d, query.p, query.range);
}

double realized_il(const PositionSnapshot& deposit, const PositionSnapshot& withdrawal,
                   IlNormalization norm) {
    if (withdrawal.quote.t < deposit.quote.t) {
        throw std::invalid_argument("realized_il: withdrawal precedes deposit");
    }
    const double v_pool = withdrawal.amount0 * withdrawal.quote.token0_usd +
                          withdrawal.amount1 * withdrawal.quote.token1_usd;
    const double v_hodl = value_hodl(deposit.amount0, deposit.amount1, withdrawal.quote);
    if (norm == IlNormalization::hodl_at_close) {
        return lvh({v_pool, v_hodl});
    }
    const double v_deposit = value_hodl(deposit.amount0, deposit.amount1, deposit.quote);
    if (!(v_deposit > 0.0)) {
        throw std::domain_error("realized_il: deposit value must be positive");
    }
    return (v_pool - v_hodl) / v_deposit;
}

}  // namespace ammlab::il
