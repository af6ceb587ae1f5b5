#include "amm_lab/cohort_analytics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace ammlab::cohort {

namespace {

const char* kDurationLabels[] = {"<1h", "1h-1d", "1-28d", "28-90d", "90-360d", "360d+"};

std::string format_bound(double v) {
    // compact label fragment: 1000 -> "1k", 0.02 -> "0.02"
    if (v >= 1000.0 && std::fmod(v, 1000.0) == 0.0) {
        double thousands = v / 1000.0;
        if (thousands >= 1000.0 && std::fmod(thousands, 1000.0) == 0.0) {
            return std::to_string(static_cast<long long>(thousands / 1000.0)) + "m";
        }
        return std::to_string(static_cast<long long>(thousands)) + "k";
    }
    std::string s = std::to_string(v);
    while (!s.empty() && s.back() == '0') s.pop_back();
    if (!s.empty() && s.back() == '.') s.pop_back();
    return s;
}

std::string bucket_of(double value, std::span<const double> bounds) {
    if (bounds.empty()) {
        throw std::domain_error("bucket bounds must be non-empty");
    }
    if (value < bounds.front()) {
        return "<" + format_bound(bounds.front());
    }
    for (std::size_t i = 0; i + 1 < bounds.size(); ++i) {
        if (value < bounds[i + 1]) {
            return format_bound(bounds[i]) + "-" + format_bound(bounds[i + 1]);
        }
    }
    return ">" + format_bound(bounds.back());
}

std::vector<std::string> bucket_labels(std::span<const double> bounds) {
    std::vector<std::string> labels;
    labels.push_back("<" + format_bound(bounds.front()));
    for (std::size_t i = 0; i + 1 < bounds.size(); ++i) {
        labels.push_back(format_bound(bounds[i]) + "-" + format_bound(bounds[i + 1]));
    }
    labels.push_back(">" + format_bound(bounds.back()));
    return labels;
}

}  // namespace

std::string to_string(PoolType type) {
    switch (type) {
        case PoolType::stable_stable: return "stable_stable";
        case PoolType::stable_risky: return "stable_risky";
        case PoolType::risky_risky: return "risky_risky";
    }
    return "unknown";
}

std::string to_string(StrategyClass strategy) {
    switch (strategy) {
        case StrategyClass::short_narrow: return "short_narrow";
        case StrategyClass::long_narrow: return "long_narrow";
        case StrategyClass::short_wide: return "short_wide";
        case StrategyClass::long_wide: return "long_wide";
        case StrategyClass::unclassified: return "unclassified";
    }
    return "unknown";
}

std::string to_string(Grouping grouping) {
    switch (grouping) {
        case Grouping::pool: return "pool";
        case Grouping::pool_type: return "pool_type";
        case Grouping::duration_bucket: return "duration_bucket";
        case Grouping::size_bucket: return "size_bucket";
        case Grouping::range_bucket: return "range_bucket";
        case Grouping::strategy_by_pool_type: return "strategy_by_pool_type";
    }
    return "unknown";
}

std::optional<Grouping> grouping_from_string(const std::string& name) {
    if (name == "pool") return Grouping::pool;
    if (name == "pool_type") return Grouping::pool_type;
    if (name == "duration_bucket" || name == "duration") return Grouping::duration_bucket;
    if (name == "size_bucket" || name == "size") return Grouping::size_bucket;
    if (name == "range_bucket" || name == "range") return Grouping::range_bucket;
    if (name == "strategy_by_pool_type" || name == "strategy") {
        return Grouping::strategy_by_pool_type;
    }
    return std::nullopt;
}

Thresholds default_duration_thresholds() { return {1.12, 26.90}; }
Thresholds default_range_thresholds() { return {0.0467, 0.2756}; }

PoolType classify_pool_type(const std::string& token0, const std::string& token1,
                            const std::set<std::string>& stable_set) {
    if (token0.empty() || token1.empty()) {
        throw std::domain_error("classify_pool_type: empty token symbol");
    }
    const int stables = (stable_set.count(token0) ? 1 : 0) + (stable_set.count(token1) ? 1 : 0);
    if (stables == 2) return PoolType::stable_stable;
    if (stables == 1) return PoolType::stable_risky;
    return PoolType::risky_risky;
}

std::string duration_bucket(double duration_days) {
    if (!(duration_days > 0.0)) {
        throw std::domain_error("duration_bucket: duration must be positive");
    }
    if (duration_days < 1.0 / 24.0) return kDurationLabels[0];
    if (duration_days < 1.0) return kDurationLabels[1];
    if (duration_days < 28.0) return kDurationLabels[2];
    if (duration_days < 90.0) return kDurationLabels[3];
    if (duration_days < 360.0) return kDurationLabels[4];
    return kDurationLabels[5];
}

Thresholds percentile_thresholds(std::vector<double> values, double lo_q, double hi_q) {
    if (values.empty()) {
        throw std::domain_error("percentile_thresholds: empty input");
    }
    if (!(lo_q > 0.0) || !(hi_q > 0.0) || lo_q > 1.0 || hi_q > 1.0 || lo_q > hi_q) {
        throw std::domain_error("percentile_thresholds: quantiles must satisfy 0 < lo <= hi <= 1");
    }
    std::sort(values.begin(), values.end());
    const auto n = values.size();
    auto nearest_rank = [n](double q) {
        // guard the ceil against q*n landing a hair above an integer
        auto rank = static_cast<std::size_t>(std::ceil(q * static_cast<double>(n) - 1e-9));
        return std::clamp<std::size_t>(rank, 1, n);
    };
    return {values[nearest_rank(lo_q) - 1], values[nearest_rank(hi_q) - 1]};
}

StrategyClass classify_strategy(const ledger::PositionMetrics& metrics,
                                const Thresholds& duration_thresholds,
                                const Thresholds& range_thresholds) {
    if (duration_thresholds.lo > duration_thresholds.hi ||
        range_thresholds.lo > range_thresholds.hi) {
        throw std::domain_error("classify_strategy: thresholds must satisfy lo <= hi");
    }
    const bool is_short = metrics.duration_days < duration_thresholds.lo;
    const bool is_long = metrics.duration_days > duration_thresholds.hi;
    const bool is_narrow = metrics.range_size < range_thresholds.lo;
    const bool is_wide = metrics.range_size > range_thresholds.hi;
    if (is_short && is_narrow) return StrategyClass::short_narrow;
    if (is_long && is_narrow) return StrategyClass::long_narrow;
    if (is_short && is_wide) return StrategyClass::short_wide;
    if (is_long && is_wide) return StrategyClass::long_wide;
    return StrategyClass::unclassified;
}

CohortStats cohort_stats(std::vector<double> values, double ci_z) {
    if (values.empty()) {
        throw std::domain_error("cohort_stats: empty input");
    }
    CohortStats stats;
    stats.n = values.size();

    double sum = 0.0;
    for (double v : values) sum += v;
    stats.mean = sum / static_cast<double>(stats.n);

    std::sort(values.begin(), values.end());
    if (stats.n % 2 == 1) {
        stats.median = values[stats.n / 2];
    } else {
        stats.median = (values[stats.n / 2 - 1] + values[stats.n / 2]) / 2.0;
    }

    if (stats.n > 1) {
        double ss = 0.0;
        for (double v : values) {
            const double dev = v - stats.mean;
            ss += dev * dev;
        }
        stats.std_dev = std::sqrt(ss / static_cast<double>(stats.n - 1));
    }
    const double half_width = ci_z * stats.std_dev / std::sqrt(static_cast<double>(stats.n));
    stats.ci95_lo = stats.mean - half_width;
    stats.ci95_hi = stats.mean + half_width;
    return stats;
}

double daily_normalize(double metric, double duration_days) {
    if (!(duration_days > 0.0)) {
        throw std::domain_error("daily_normalize: duration must be positive");
    }
    return metric / duration_days;
}

std::string size_bucket(double size_usd, std::span<const double> bounds) {
    return bucket_of(size_usd, bounds);
}

std::string range_bucket(double range_size, std::span<const double> bounds) {
    return bucket_of(range_size, bounds);
}

std::vector<CohortTable> aggregate_report(std::span<const AnalyzedPosition> positions,
                                          std::span<const Grouping> groupings,
                                          const ReportConfig& config) {
    if (positions.empty()) {
        throw std::domain_error("aggregate_report: no positions");
    }

    Thresholds duration_thr;
    Thresholds range_thr;
    {
        std::vector<double> durations, ranges;
        durations.reserve(positions.size());
        ranges.reserve(positions.size());
        for (const auto& p : positions) {
            durations.push_back(p.metrics.duration_days);
            ranges.push_back(p.metrics.range_size);
        }
        duration_thr = config.duration_thresholds ? *config.duration_thresholds
                                                  : percentile_thresholds(durations);
        range_thr =
            config.range_thresholds ? *config.range_thresholds : percentile_thresholds(ranges);
    }

    std::vector<CohortTable> tables;
    for (Grouping grouping : groupings) {
        // group label -> metric values, insertion into std::map keeps label order
        std::map<std::string, std::vector<const AnalyzedPosition*>> groups;
        for (const auto& p : positions) {
            std::string label;
            switch (grouping) {
                case Grouping::pool:
                    label = "pool:" + p.pool_id;
                    break;
                case Grouping::pool_type:
                    label = "pool_type:" + to_string(p.pool_type);
                    break;
                case Grouping::duration_bucket:
                    label = "duration:" + duration_bucket(p.metrics.duration_days);
                    break;
                case Grouping::size_bucket:
                    label = "size:" + size_bucket(p.metrics.size_usd, config.size_bucket_bounds);
                    break;
                case Grouping::range_bucket:
                    label =
                        "range:" + range_bucket(p.metrics.range_size, config.range_bucket_bounds);
                    break;
                case Grouping::strategy_by_pool_type: {
                    if (p.pool_type == PoolType::stable_stable) continue;
                    const StrategyClass sc =
                        classify_strategy(p.metrics, duration_thr, range_thr);
                    if (sc == StrategyClass::unclassified) continue;
                    label = "strategy:" + to_string(sc) + "|pool_type:" + to_string(p.pool_type);
                    break;
                }
            }
            groups[label].push_back(&p);
        }

        CohortTable table;
        table.grouping = to_string(grouping);

        // bucketed groupings are emitted in bucket order, everything else
        // in lexicographic label order
        std::vector<std::string> order;
        if (grouping == Grouping::duration_bucket) {
            for (const char* l : kDurationLabels) order.push_back(std::string("duration:") + l);
        } else if (grouping == Grouping::size_bucket) {
            for (const auto& l : bucket_labels(config.size_bucket_bounds)) {
                order.push_back("size:" + l);
            }
        } else if (grouping == Grouping::range_bucket) {
            for (const auto& l : bucket_labels(config.range_bucket_bounds)) {
                order.push_back("range:" + l);
            }
        } else {
            for (const auto& [label, _] : groups) order.push_back(label);
        }

        for (const auto& label : order) {
            auto it = groups.find(label);
            if (it == groups.end()) continue;
            CohortRow row;
            row.group = label;
            auto collect = [&](const char* name, auto getter) {
                std::vector<double> values;
                values.reserve(it->second.size());
                for (const AnalyzedPosition* p : it->second) values.push_back(getter(*p));
                row.metrics[name] = cohort_stats(std::move(values), config.ci_z);
            };
            collect("realized_il",
                    [](const AnalyzedPosition& p) { return p.metrics.realized_il; });
            collect("rewards", [](const AnalyzedPosition& p) { return p.metrics.rewards; });
            collect("lp_return", [](const AnalyzedPosition& p) { return p.metrics.lp_return; });
            collect("daily_il", [](const AnalyzedPosition& p) {
                return daily_normalize(p.metrics.realized_il, p.metrics.duration_days);
            });
            collect("daily_rewards", [](const AnalyzedPosition& p) {
                return daily_normalize(p.metrics.rewards, p.metrics.duration_days);
            });
            table.rows.push_back(std::move(row));
        }
        tables.push_back(std::move(table));
    }
    return tables;
}

}  // namespace ammlab::cohort
