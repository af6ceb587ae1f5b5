#include "amm_lab/position_ledger.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <stdexcept>

#include <json.hpp>

namespace ammlab::ledger {

namespace {

constexpr double kLiquidityTol = 1e-9;

struct Tranche {
    std::int64_t open_t = 0;
    double orig_liquidity = 0.0;
    double remaining = 0.0;
    double amount0 = 0.0;  // as deposited
    double amount1 = 0.0;
    double usd_value = 0.0;
    il::PriceQuote quote;
    double pool_price = 0.0;
    double fees_accrued = 0.0;  // on the remaining part
    amm::PriceRange range;
};

// A slice closed since the last collect; still eligible for the next
// collect's pro-rata distribution.
struct PendingSlice {
    std::size_t emitted_index;
    std::int64_t open_t;
    std::int64_t close_t;
    double liquidity;
};

double pool_price_of(const il::PriceQuote& quote) {
    if (!(quote.token0_usd > 0.0) || !(quote.token1_usd > 0.0)) {
        throw std::domain_error("pool price requires positive token prices");
    }
    return quote.token0_usd / quote.token1_usd;
}

[[noreturn]] void imbalance(const LiquidityEvent& ev, const std::string& what) {
    throw std::runtime_error("position " + ev.position_id + " at block " +
                             std::to_string(ev.block) + ": " + what);
}

}  // namespace

Ledger build_ledger(std::span<const LiquidityEvent> events) {
    Ledger ledger;
    for (const auto& ev : events) {
        ledger[ev.position_id].push_back(ev);
    }
    for (auto& [id, group] : ledger) {
        std::stable_sort(group.begin(), group.end(),
                         [](const LiquidityEvent& a, const LiquidityEvent& b) {
                             return std::tie(a.block, a.log_index) < std::tie(b.block, b.log_index);
                         });
        auto dup = std::adjacent_find(group.begin(), group.end(),
                                      [](const LiquidityEvent& a, const LiquidityEvent& b) {
                                          return a.block == b.block && a.log_index == b.log_index;
                                      });
        if (dup != group.end()) {
            throw std::invalid_argument("duplicate event for position " + id + " at block " +
                                        std::to_string(dup->block) + ", log index " +
                                        std::to_string(dup->log_index));
        }
    }
    return ledger;
}

std::vector<ClosedPosition> match_fifo(std::span<const LiquidityEvent> group,
                                       CollectAttribution attribution) {
    std::vector<ClosedPosition> closed;
    if (group.empty()) {
        return closed;
    }
    std::deque<Tranche> open;
    std::vector<PendingSlice> pending;
    std::optional<std::int64_t> last_collect_t;

    for (const auto& ev : group) {
        switch (ev.kind) {
            case EventKind::deposit: {
                if (!(ev.liquidity_delta > 0.0)) {
                    imbalance(ev, "deposit with non-positive liquidity");
                }
                if (!ev.range) {
                    imbalance(ev, "deposit without a price range");
                }
                Tranche tr;
                tr.open_t = ev.t;
                tr.orig_liquidity = ev.liquidity_delta;
                tr.remaining = ev.liquidity_delta;
                tr.amount0 = ev.amount0;
                tr.amount1 = ev.amount1;
                tr.usd_value = ev.usd_value;
                tr.quote = ev.quote;
                tr.pool_price = pool_price_of(ev.quote);
                tr.range = *ev.range;
                open.push_back(tr);
                break;
            }
            case EventKind::withdraw: {
                const double wanted = ev.liquidity_delta;
                if (!(wanted > 0.0)) {
                    imbalance(ev, "withdrawal with non-positive liquidity");
                }
                double total_open = 0.0;
                for (const auto& tr : open) total_open += tr.remaining;
                if (wanted > total_open * (1.0 + kLiquidityTol)) {
                    imbalance(ev, "withdrawal of " + std::to_string(wanted) +
                                      " exceeds open liquidity " + std::to_string(total_open));
                }
                const double withdraw_price = pool_price_of(ev.quote);
                double needed = wanted;
                std::size_t first_emitted = closed.size();
                while (needed > 0.0 && !open.empty()) {
                    Tranche& tr = open.front();
                    const double take = std::min(needed, tr.remaining);
                    if (!(ev.t > tr.open_t)) {
                        imbalance(ev, "withdrawal does not postdate its deposit");
                    }
                    const double dep_frac = take / tr.orig_liquidity;
                    const double wd_frac = take / wanted;
                    const double fee_share = tr.fees_accrued * (take / tr.remaining);

                    ClosedPosition cp;
                    cp.position_id = ev.position_id;
                    cp.pool_id = ev.pool_id;
                    cp.open_t = tr.open_t;
                    cp.close_t = ev.t;
                    cp.deposit = PositionSide{tr.amount0 * dep_frac, tr.amount1 * dep_frac,
                                              tr.usd_value * dep_frac, tr.quote, tr.pool_price};
                    cp.withdrawal = PositionSide{ev.amount0 * wd_frac, ev.amount1 * wd_frac,
                                                 ev.usd_value * wd_frac, ev.quote, withdraw_price};
                    cp.fees_usd = fee_share;
                    cp.liquidity = take;
                    cp.range = tr.range;

                    pending.push_back(PendingSlice{closed.size(), tr.open_t, ev.t, take});
                    closed.push_back(cp);

                    tr.fees_accrued -= fee_share;
                    tr.remaining -= take;
                    needed -= take;
                    if (tr.remaining <= kLiquidityTol * tr.orig_liquidity) {
                        open.pop_front();
                    }
                }
                if (needed > 0.0) {
                    // rounding residue admitted by the tolerance pre-check;
                    // fold it into the last slice so matched == withdrawn
                    if (closed.size() == first_emitted) {
                        imbalance(ev, "withdrawal matched no open tranche");
                    }
                    closed.back().liquidity += needed;
                    pending.back().liquidity += needed;
                }
                break;
            }
            case EventKind::collect: {
                if (ev.liquidity_delta != 0.0) {
                    imbalance(ev, "collect with non-zero liquidity delta");
                }
                const double fees = ev.usd_value;
                if (attribution == CollectAttribution::closing_tranche) {
                    if (!closed.empty()) {
                        closed.back().fees_usd += fees;
                    } else if (!open.empty()) {
                        open.front().fees_accrued += fees;
                    } else {
                        imbalance(ev, "collect with no position to attribute to");
                    }
                    break;
                }
                // pro-rata by liquidity-time over the accrual interval
                // (since the previous collect, or since deposit)
                auto interval_start = [&](std::int64_t open_t) {
                    return last_collect_t ? std::max(*last_collect_t, open_t) : open_t;
                };
                std::vector<double> open_w(open.size(), 0.0);
                std::vector<double> pending_w(pending.size(), 0.0);
                double total = 0.0;
                for (std::size_t i = 0; i < open.size(); ++i) {
                    open_w[i] = open[i].remaining *
                                static_cast<double>(ev.t - interval_start(open[i].open_t));
                    total += open_w[i];
                }
                for (std::size_t i = 0; i < pending.size(); ++i) {
                    pending_w[i] = pending[i].liquidity *
                                   static_cast<double>(pending[i].close_t -
                                                       interval_start(pending[i].open_t));
                    total += pending_w[i];
                }
                if (total <= 0.0) {
                    // zero elapsed time: fall back to liquidity-only weights
                    total = 0.0;
                    for (std::size_t i = 0; i < open.size(); ++i) {
                        open_w[i] = open[i].remaining;
                        total += open_w[i];
                    }
                    for (std::size_t i = 0; i < pending.size(); ++i) {
                        pending_w[i] = pending[i].liquidity;
                        total += pending_w[i];
                    }
                }
                if (total <= 0.0) {
                    imbalance(ev, "collect with no position to attribute to");
                }
                for (std::size_t i = 0; i < open.size(); ++i) {
                    open[i].fees_accrued += fees * (open_w[i] / total);
                }
                for (std::size_t i = 0; i < pending.size(); ++i) {
                    closed[pending[i].emitted_index].fees_usd += fees * (pending_w[i] / total);
                }
                last_collect_t = ev.t;
                pending.clear();
                break;
            }
        }
    }
    return closed;
}

PositionMetrics compute_metrics(const ClosedPosition& position, il::IlNormalization norm) {
    if (!(position.close_t > position.open_t)) {
        throw std::domain_error("compute_metrics: close must postdate open");
    }
    PositionMetrics m;
    m.duration_days = static_cast<double>(position.close_t - position.open_t) / 86400.0;
    m.size_usd = position.deposit.usd_value;
    m.range_size = (position.range.upper - position.range.lower) /
                   std::sqrt(position.range.lower * position.range.upper);

    const il::PositionSnapshot dep{position.deposit.amount0, position.deposit.amount1,
                                   position.deposit.quote};
    const il::PositionSnapshot wd{position.withdrawal.amount0, position.withdrawal.amount1,
                                  position.withdrawal.quote};
    m.realized_il = il::realized_il(dep, wd, norm);

    const double denom = norm == il::IlNormalization::hodl_at_close
                             ? il::value_hodl(dep.amount0, dep.amount1, wd.quote)
                             : il::value_hodl(dep.amount0, dep.amount1, dep.quote);
    if (!(denom > 0.0)) {
        throw std::domain_error("compute_metrics: zero HODL value");
    }
    m.rewards = position.fees_usd / denom;
    m.lp_return = m.realized_il + m.rewards;
    m.opened_in_range = position.deposit.pool_price >= position.range.lower &&
                        position.deposit.pool_price <= position.range.upper;
    return m;
}

std::string to_json(std::span<const ClosedPosition> positions) {
    nlohmann::ordered_json arr = nlohmann::ordered_json::array();
    for (const auto& cp : positions) {
        nlohmann::ordered_json side0{{"amount0", cp.deposit.amount0},
                                     {"amount1", cp.deposit.amount1},
                                     {"usd_value", cp.deposit.usd_value},
                                     {"price_token0_usd", cp.deposit.quote.token0_usd},
                                     {"price_token1_usd", cp.deposit.quote.token1_usd},
                                     {"timestamp", cp.deposit.quote.t},
                                     {"pool_price", cp.deposit.pool_price}};
        nlohmann::ordered_json side1{{"amount0", cp.withdrawal.amount0},
                                     {"amount1", cp.withdrawal.amount1},
                                     {"usd_value", cp.withdrawal.usd_value},
                                     {"price_token0_usd", cp.withdrawal.quote.token0_usd},
                                     {"price_token1_usd", cp.withdrawal.quote.token1_usd},
                                     {"timestamp", cp.withdrawal.quote.t},
                                     {"pool_price", cp.withdrawal.pool_price}};
        nlohmann::ordered_json item{{"position_id", cp.position_id},
                                    {"pool_id", cp.pool_id},
                                    {"open_t", cp.open_t},
                                    {"close_t", cp.close_t},
                                    {"liquidity", cp.liquidity},
                                    {"fees_usd", cp.fees_usd},
                                    {"price_lower", cp.range.lower},
                                    {"price_upper", cp.range.upper},
                                    {"deposit", side0},
                                    {"withdrawal", side1}};
        arr.push_back(item);
    }
    return arr.dump(2) + "\n";
}

}  // namespace ammlab::ledger
