#pragma once

#include "amm_lab/position_ledger.hpp"

#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

namespace ammlab::cohort {

enum class PoolType { stable_stable, stable_risky, risky_risky };

enum class StrategyClass { short_narrow, long_narrow, short_wide, long_wide, unclassified };

std::string to_string(PoolType type);
std::string to_string(StrategyClass strategy);

struct CohortStats {
    std::size_t n = 0;
    double mean = 0.0;
    double median = 0.0;
    double std_dev = 0.0;
    double ci95_lo = 0.0;
    double ci95_hi = 0.0;
};

struct Thresholds {
    double lo = 0.0;
    double hi = 0.0;
};

/// Published 30th/70th-percentile cutoffs for strategy classification:
/// short < 1.12 days, long > 26.90 days; narrow r < 0.0467, wide r > 0.2756.
Thresholds default_duration_thresholds();
Thresholds default_range_thresholds();

/// Both tokens in the stable set -> stable_stable, exactly one ->
/// stable_risky, none -> risky_risky.
PoolType classify_pool_type(const std::string& token0, const std::string& token1,
                            const std::set<std::string>& stable_set);

/// Half-open duration buckets [lo, hi): <1h, 1h-1d, 1-28d, 28-90d, 90-360d, 360d+.
std::string duration_bucket(double duration_days);

/// Nearest-rank percentiles: the ceil(q*n)-th smallest value.
Thresholds percentile_thresholds(std::vector<double> values, double lo_q = 0.30,
                                 double hi_q = 0.70);

/// Strict-inequality band classification on (duration, range size); anything
/// between the two thresholds of either dimension is unclassified.
StrategyClass classify_strategy(const ledger::PositionMetrics& metrics,
                                const Thresholds& duration_thresholds,
                                const Thresholds& range_thresholds);

/// Mean, median (middle-two average for even n), sample standard deviation
/// (n-1 denominator, 0 for n = 1) and a normal-approximation confidence
/// interval mean +/- z*std/sqrt(n).
CohortStats cohort_stats(std::vector<double> values, double ci_z = 1.96);

double daily_normalize(double metric, double duration_days);

/// One analyzed position: its metrics plus the pool context needed for
/// grouping.
struct AnalyzedPosition {
    ledger::PositionMetrics metrics;
    std::string pool_id;
    PoolType pool_type = PoolType::risky_risky;
};

enum class Grouping { pool, pool_type, duration_bucket, size_bucket, range_bucket, strategy_by_pool_type };

std::string to_string(Grouping grouping);
std::optional<Grouping> grouping_from_string(const std::string& name);

struct ReportConfig {
    std::vector<double> size_bucket_bounds{1e3, 1e4, 1e5};      // USD
    std::vector<double> range_bucket_bounds{0.02, 0.1, 0.5};    // range size r
    std::optional<Thresholds> duration_thresholds;  // absent: 30/70 percentiles of the input
    std::optional<Thresholds> range_thresholds;     // absent: 30/70 percentiles of the input
    double ci_z = 1.96;
};

struct CohortRow {
    std::string group;  ///< stable label, e.g. "duration:1h-1d"
    std::map<std::string, CohortStats> metrics;
};

struct CohortTable {
    std::string grouping;
    std::vector<CohortRow> rows;
};

std::string size_bucket(double size_usd, std::span<const double> bounds);
std::string range_bucket(double range_size, std::span<const double> bounds);

/// Per-group cohort statistics for realized_il, rewards, lp_return plus the
/// per-day normalized daily_il and daily_rewards. Rows are emitted in a
/// fixed deterministic order. The strategy_by_pool_type grouping excludes
/// stable-stable pools and unclassified positions; every other grouping
/// partitions the input.
std::vector<CohortTable> aggregate_report(std::span<const AnalyzedPosition> positions,
                                          std::span<const Grouping> groupings,
                                          const ReportConfig& config = {});

}  // namespace ammlab::cohort
