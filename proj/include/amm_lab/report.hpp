#pragma once

#include "amm_lab/cohort_analytics.hpp"
#include "amm_lab/ingest.hpp"
#include "amm_lab/strategy_sim.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace ammlab::report {

/// Sparse histogram: bin i covers [i*bin_width, (i+1)*bin_width).
struct HistogramBin {
    long index = 0;
    std::uint64_t count = 0;
};

struct Histogram {
    std::string pool;
    std::string metric;
    double bin_width = 0.0;
    std::vector<HistogramBin> bins;
};

struct BundleMeta {
    std::string tool_version;
    std::string dataset_hash;
    std::size_t positions = 0;
    std::optional<std::string> generated_at;  ///< omitted under --no-timestamp
};

struct ReportBundle {
    BundleMeta meta;
    std::vector<cohort::CohortTable> tables;
    std::vector<Histogram> histograms;
};

struct AnalyzeConfig {
    std::set<std::string> stable_set{"DAI", "USDC", "USDT"};
    cohort::ReportConfig cohort;
    double histogram_bin_width = 0.005;  ///< 0.5 percentage points
    ledger::CollectAttribution attribution = ledger::CollectAttribution::pro_rata_liquidity_time;
    il::IlNormalization normalization = il::IlNormalization::hodl_at_close;
    std::vector<cohort::Grouping> groupings{
        cohort::Grouping::pool,          cohort::Grouping::pool_type,
        cohort::Grouping::duration_bucket, cohort::Grouping::size_bucket,
        cohort::Grouping::range_bucket,  cohort::Grouping::strategy_by_pool_type};
};

/// Loads an AnalyzeConfig from a versioned JSON config file; absent keys
/// keep their defaults.
AnalyzeConfig load_analyze_config(const std::filesystem::path& path);

/// Runs ledger reconstruction and per-position metrics over a dataset.
/// Positions come out grouped by position id (sorted), slices in match
/// order.
std::vector<cohort::AnalyzedPosition> analyze_positions(const ingest::Dataset& dataset,
                                                        const AnalyzeConfig& config);

ReportBundle build_report(const ingest::Dataset& dataset, const AnalyzeConfig& config,
                          const std::string& dataset_hash, const std::string& tool_version,
                          std::optional<std::string> generated_at);

std::string to_json(const ReportBundle& bundle);
std::string to_csv(const ReportBundle& bundle);
ReportBundle bundle_from_json(const std::string& text);

/// Strategy-grid output: per-strategy cohorts plus the worst closed-form vs
/// oracle disagreement.
struct SimReport {
    std::string tool_version;
    std::uint64_t base_seed = 0;
    std::string engine;  ///< "closed_form" or "oracle"
    std::string pool_type_tag;
    std::vector<sim::StrategyCohort> cohorts;
    double max_oracle_deviation = 0.0;
    std::optional<std::string> generated_at;
};

std::string to_json(const SimReport& report);
std::string to_csv(const SimReport& report);

/// Concatenates the tables (by grouping) and histograms of several bundles;
/// rows keep their labels, so identical groups from different bundles appear
/// as separate rows.
ReportBundle merge_bundles(std::span<const ReportBundle> bundles);

std::uint64_t fnv1a64(std::span<const unsigned char> bytes);
std::string file_hash(const std::filesystem::path& path);

}  // namespace ammlab::report
