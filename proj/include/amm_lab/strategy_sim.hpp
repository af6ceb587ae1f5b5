#pragma once

#include "amm_lab/amm_math.hpp"
#include "amm_lab/cohort_analytics.hpp"

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace ammlab::sim {

struct PricePoint {
    std::int64_t t = 0;        ///< unix seconds, strictly increasing
    double price = 0.0;        ///< pool price, token1 per token0
    double volume_usd = 0.0;   ///< USD traded in the step ending here
    double token1_usd = 1.0;   ///< USD price of token1
};

struct PricePath {
    std::vector<PricePoint> points;
};

/// Per-step traded volume attached to generated paths.
struct VolumeModel {
    double usd_per_step = 0.0;
};

struct GbmParams {
    double p0 = 1.0;
    double mu = 0.0;           ///< drift per year
    double sigma = 0.0;        ///< volatility per sqrt-year
    double dt_seconds = 3600.0;
    std::size_t n_steps = 1;
    VolumeModel volume;
    double token1_usd = 1.0;
    std::int64_t t0 = 0;
};

/// Geometric Brownian motion path from a seeded deterministic generator
/// (mt19937_64 + Box-Muller): p_{i+1} = p_i * exp((mu - sigma^2/2) dt +
/// sigma sqrt(dt) z_i). Identical seeds produce bit-identical paths.
PricePath gbm_path(std::uint64_t seed, const GbmParams& params);

struct SimConfig {
    amm::PriceRange range;
    double duration_days = 0.0;
    double deposit_usd = 0.0;
    std::uint32_t fee_ppm = 0;
    double pool_liquidity_other = 0.0;  ///< competing liquidity, constant
    std::uint64_t seed = 0;
};

struct SimResult {
    double realized_il = 0.0;
    double rewards = 0.0;
    double lp_return = 0.0;      ///< realized_il + rewards
    double time_in_range = 0.0;  ///< fraction of steps with p in [p_a, p_b]
    bool opened_out_of_range = false;
};

/// Closed-form backtest: the deposit is converted to liquidity at the first
/// sample, fees accrue pro-rata to L/(L + other) on every in-range step, and
/// realized IL comes from the piecewise concentrated-liquidity formula at
/// the closing price.
SimResult simulate_position(const PricePath& path, const SimConfig& config);

/// Brute-force oracle: replays the price path as fee-free constant-product
/// swaps against the position's virtual reserves, tracks the explicit token
/// holdings, and values the final holdings directly. Independent of the
/// closed-form IL expression; the two must agree.
SimResult oracle_replay(const PricePath& path, const SimConfig& config);

struct StrategySpec {
    std::string name;
    double duration_days = 0.0;
    double range_size = 0.0;  ///< r; converted to a geometric range around p0
};

/// Representative short/long-duration x narrow/wide-range configurations.
std::vector<StrategySpec> default_strategy_grid();

/// Price range of size r = (p_b - p_a)/sqrt(p_a p_b) centered geometrically
/// on p0.
amm::PriceRange range_for_size(double range_size, double p0);

struct GridConfig {
    double deposit_usd = 10'000.0;
    std::uint32_t fee_ppm = 3000;
    double pool_liquidity_other = 1'000'000.0;
};

struct StrategyCohort {
    std::string strategy;
    std::string pool_type_tag;
    std::size_t n = 0;
    std::map<std::string, cohort::CohortStats> metrics;
    double max_oracle_deviation = 0.0;  ///< max |closed-form IL - oracle IL|
};

/// Runs every strategy over every path and aggregates per-strategy cohort
/// statistics. Both engines run on each position; the closed form populates
/// the cohorts and the oracle bound is reported alongside.
std::vector<StrategyCohort> run_strategy_grid(std::span<const PricePath> paths,
                                              std::span<const StrategySpec> strategies,
                                              const std::string& pool_type_tag,
                                              const GridConfig& config = {},
                                              bool use_oracle_results = false);

/// n paths with per-path seed = base_seed + index, so parallel and serial
/// generation agree.
std::vector<PricePath> make_paths(std::size_t n, std::uint64_t base_seed, const GbmParams& params);

}  // namespace ammlab::sim
