#pragma once

#include "amm_lab/amm_math.hpp"
#include "amm_lab/il_metrics.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace ammlab::ledger {

enum class EventKind { deposit, withdraw, collect };

/// One liquidity event of a position. Events of a position are totally
/// ordered by (block, log_index). Collect events carry the USD value of the
/// fees only and have liquidity_delta = 0.
struct LiquidityEvent {
    EventKind kind = EventKind::deposit;
    std::string position_id;
    std::string pool_id;
    std::uint64_t block = 0;
    std::uint32_t log_index = 0;
    std::int64_t t = 0;
    double amount0 = 0.0;
    double amount1 = 0.0;
    double usd_value = 0.0;
    il::PriceQuote quote;
    double liquidity_delta = 0.0;
    std::optional<amm::PriceRange> range;  ///< required on deposits
};

/// Amounts, USD value and quote of one side of a matched slice. pool_price
/// is the pool price implied by the quote (token0_usd / token1_usd).
struct PositionSide {
    double amount0 = 0.0;
    double amount1 = 0.0;
    double usd_value = 0.0;
    il::PriceQuote quote;
    double pool_price = 0.0;
};

/// A deposit tranche matched against a withdrawal, first-in-first-out.
/// Partial matches pro-rate amounts by the consumed liquidity fraction.
struct ClosedPosition {
    std::string position_id;
    std::string pool_id;
    std::int64_t open_t = 0;
    std::int64_t close_t = 0;
    PositionSide deposit;
    PositionSide withdrawal;
    double fees_usd = 0.0;
    double liquidity = 0.0;  ///< matched liquidity of this slice
    amm::PriceRange range;
};

struct PositionMetrics {
    double duration_days = 0.0;
    double size_usd = 0.0;    ///< V^LP: USD value of the deposit
    double range_size = 0.0;  ///< r = (p_b - p_a) / sqrt(p_a * p_b)
    double realized_il = 0.0;
    double rewards = 0.0;
    double lp_return = 0.0;  ///< realized_il + rewards
    /// False when the pool price at open fell outside the position's range;
    /// such positions are flagged, not rejected.
    bool opened_in_range = true;
};

/// How collect events are attributed to tranches. pro_rata_liquidity_time
/// splits each collect by liquidity x open-time over the accrual interval
/// (since the previous collect, or since deposit); closing_tranche assigns
/// it wholly to the most recently closed slice, falling back to the oldest
/// open tranche when nothing closed yet.
enum class CollectAttribution { pro_rata_liquidity_time, closing_tranche };

using Ledger = std::map<std::string, std::vector<LiquidityEvent>>;

/// Groups events by position id and sorts each group by (block, log_index).
/// The result is independent of arrival order. Duplicate
/// (position_id, block, log_index) keys raise std::invalid_argument.
Ledger build_ledger(std::span<const LiquidityEvent> events);

/// Matches the withdrawals of one ordered event group against its deposits
/// first-in-first-out and emits one ClosedPosition per matched
/// (tranche, withdrawal) slice. A withdrawal exceeding the open liquidity
/// raises std::runtime_error naming the position and block.
std::vector<ClosedPosition> match_fifo(
    std::span<const LiquidityEvent> group,
    CollectAttribution attribution = CollectAttribution::pro_rata_liquidity_time);

PositionMetrics compute_metrics(const ClosedPosition& position,
                                il::IlNormalization norm = il::IlNormalization::hodl_at_close);

/// Deterministic JSON rendering of matched slices, used for golden-file
/// comparisons.
std::string to_json(std::span<const ClosedPosition> positions);

}  // namespace ammlab::ledger
