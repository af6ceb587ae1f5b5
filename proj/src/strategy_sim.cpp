#include "amm_lab/strategy_sim.hpp"

#include "amm_lab/il_metrics.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

namespace ammlab::sim {

namespace {

constexpr double kSecondsPerYear = 365.0 * 86400.0;

// Uniform in [0, 1) from the top 53 bits; Box-Muller for normals. Pinned to
// mt19937_64 output so paths are reproducible across standard libraries.
class NormalGenerator {
  public:
    explicit NormalGenerator(std::uint64_t seed) : rng_(seed) {}

    double next() {
        const double u1 = 1.0 - uniform();  // (0, 1]
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
    }

  private:
    double uniform() { return static_cast<double>(rng_() >> 11) * 0x1.0p-53; }
    std::mt19937_64 rng_;
};

void validate_path(const PricePath& path) {
    if (path.points.empty()) {
        throw std::domain_error("price path is empty");
    }
    for (std::size_t i = 0; i < path.points.size(); ++i) {
        const auto& pt = path.points[i];
        if (!(pt.price > 0.0) || !(pt.token1_usd > 0.0) || pt.volume_usd < 0.0) {
            throw std::domain_error("price path sample " + std::to_string(i) + " is malformed");
        }
        if (i > 0 && pt.t <= path.points[i - 1].t) {
            throw std::domain_error("price path timestamps must be strictly increasing");
        }
    }
}

struct OpenedPosition {
    double liquidity = 0.0;
    double amount0 = 0.0;
    double amount1 = 0.0;
    std::size_t close_index = 0;
};

OpenedPosition open_position(const PricePath& path, const SimConfig& config) {
    validate_path(path);
    amm::validate(config.range);
    if (!(config.deposit_usd > 0.0)) {
        throw std::domain_error("deposit_usd must be positive");
    }
    if (!(config.duration_days > 0.0)) {
        throw std::domain_error("duration_days must be positive");
    }
    if (config.fee_ppm >= 1'000'000) {
        throw std::domain_error("fee_ppm must be below 1,000,000");
    }
    if (config.pool_liquidity_other < 0.0) {
        throw std::domain_error("pool_liquidity_other must be non-negative");
    }
    const auto& points = path.points;
    const double span_days =
        static_cast<double>(points.back().t - points.front().t) / 86400.0;
    if (config.duration_days > span_days * (1.0 + 1e-12)) {
        throw std::domain_error("duration exceeds the path span");
    }

    OpenedPosition pos;
    const double p0 = points.front().price;
    const double p_y0 = points.front().token1_usd;
    const double p_x0 = p0 * p_y0;
    const amm::TokenAmounts unit = amm::amounts_in_range({1.0}, p0, config.range);
    const double unit_value = unit.amount0 * p_x0 + unit.amount1 * p_y0;
    pos.liquidity = config.deposit_usd / unit_value;
    pos.amount0 = pos.liquidity * unit.amount0;
    pos.amount1 = pos.liquidity * unit.amount1;

    const double close_t =
        static_cast<double>(points.front().t) + config.duration_days * 86400.0;
    pos.close_index = 0;
    for (std::size_t i = 0; i < points.size(); ++i) {
        if (static_cast<double>(points[i].t) <= close_t * (1.0 + 1e-15)) {
            pos.close_index = i;
        }
    }
    return pos;
}

struct FeeAccrual {
    double fees_usd = 0.0;
    double time_in_range = 0.0;
};

FeeAccrual accrue_fees(const PricePath& path, const SimConfig& config,
                       const OpenedPosition& pos) {
    FeeAccrual acc;
    std::size_t in_range = 0;
    const double fee_rate = static_cast<double>(config.fee_ppm) / 1e6;
    const double share =
        pos.liquidity / (pos.liquidity + config.pool_liquidity_other);
    for (std::size_t i = 1; i <= pos.close_index; ++i) {
        const double p = path.points[i].price;
        if (p >= config.range.lower && p <= config.range.upper) {
            acc.fees_usd += path.points[i].volume_usd * fee_rate * share;
            ++in_range;
        }
    }
    if (pos.close_index > 0) {
        acc.time_in_range =
            static_cast<double>(in_range) / static_cast<double>(pos.close_index);
    } else {
        const double p0 = path.points.front().price;
        acc.time_in_range =
            (p0 >= config.range.lower && p0 <= config.range.upper) ? 1.0 : 0.0;
    }
    return acc;
}

SimResult finish(const PricePath& path, const SimConfig& config, const OpenedPosition& pos,
                 double realized_il) {
    const FeeAccrual acc = accrue_fees(path, config, pos);
    const auto& close_pt = path.points[pos.close_index];
    const double p_y = close_pt.token1_usd;
    const double p_x = close_pt.price * p_y;
    const double v_hodl = pos.amount0 * p_x + pos.amount1 * p_y;

    SimResult result;
    result.realized_il = realized_il;
    result.rewards = acc.fees_usd / v_hodl;
    result.lp_return = result.realized_il + result.rewards;
    result.time_in_range = acc.time_in_range;
    const double p0 = path.points.front().price;
    result.opened_out_of_range = !(p0 >= config.range.lower && p0 <= config.range.upper);
    return result;
}

}  // namespace

PricePath gbm_path(std::uint64_t seed, const GbmParams& params) {
    if (!(params.p0 > 0.0)) {
        throw std::domain_error("gbm_path: p0 must be positive");
    }
    if (params.sigma < 0.0) {
        throw std::domain_error("gbm_path: sigma must be non-negative");
    }
    if (params.n_steps < 1) {
        throw std::domain_error("gbm_path: need at least one step");
    }
    if (!(params.dt_seconds >= 1.0)) {
        throw std::domain_error("gbm_path: dt_seconds must be at least 1");
    }
    if (params.volume.usd_per_step < 0.0 || !(params.token1_usd > 0.0)) {
        throw std::domain_error("gbm_path: invalid volume or token1 price");
    }

    NormalGenerator normals(seed);
    const double dt_years = params.dt_seconds / kSecondsPerYear;
    const double drift = (params.mu - 0.5 * params.sigma * params.sigma) * dt_years;
    const double diffusion = params.sigma * std::sqrt(dt_years);

    PricePath path;
    path.points.reserve(params.n_steps + 1);
    path.points.push_back({params.t0, params.p0, 0.0, params.token1_usd});
    double p = params.p0;
    for (std::size_t i = 1; i <= params.n_steps; ++i) {
        p *= std::exp(drift + diffusion * normals.next());
        const std::int64_t t =
            params.t0 + static_cast<std::int64_t>(std::llround(
                            static_cast<double>(i) * params.dt_seconds));
        path.points.push_back({t, p, params.volume.usd_per_step, params.token1_usd});
    }
    return path;
}

SimResult simulate_position(const PricePath& path, const SimConfig& config) {
    const OpenedPosition pos = open_position(path, config);
    const double p0 = path.points.front().price;
    const double p_close = path.points[pos.close_index].price;
    const double realized = il::il_v3({p_close / p0, p0, config.range});
    return finish(path, config, pos, realized);
}

SimResult oracle_replay(const PricePath& path, const SimConfig& config) {
    const OpenedPosition pos = open_position(path, config);
    const double sqrt_pa = std::sqrt(config.range.lower);
    const double sqrt_pb = std::sqrt(config.range.upper);
    const double offset_x = pos.liquidity / sqrt_pb;
    const double offset_y = pos.liquidity * sqrt_pa;

    auto clamp_price = [&](double p) {
        return std::min(std::max(p, config.range.lower), config.range.upper);
    };

    double x = pos.amount0;
    double y = pos.amount1;
    double effective = clamp_price(path.points.front().price);
    for (std::size_t i = 1; i <= pos.close_index; ++i) {
        const double target = clamp_price(path.points[i].price);
        if (target == effective) {
            continue;
        }
        const amm::PoolState virtual_pool = amm::make_pool(x + offset_x, y + offset_y);
        if (target > effective) {
            // price rises: the pool buys token0 with token1
            const double amount_in =
                pos.liquidity * (std::sqrt(target) - std::sqrt(effective));
            if (amount_in > 0.0) {
                const auto swap =
                    amm::execute_swap(virtual_pool, amount_in, amm::SwapSide::token1_in, 0);
                x = swap.new_state.x - offset_x;
                y = swap.new_state.y - offset_y;
            }
        } else {
            const double amount_in =
                pos.liquidity * (1.0 / std::sqrt(target) - 1.0 / std::sqrt(effective));
            if (amount_in > 0.0) {
                const auto swap =
                    amm::execute_swap(virtual_pool, amount_in, amm::SwapSide::token0_in, 0);
                x = swap.new_state.x - offset_x;
                y = swap.new_state.y - offset_y;
            }
        }
        effective = target;
    }

    const auto& close_pt = path.points[pos.close_index];
    const double p_y = close_pt.token1_usd;
    const double p_x = close_pt.price * p_y;
    const double v_pool = x * p_x + y * p_y;
    const double v_hodl = pos.amount0 * p_x + pos.amount1 * p_y;
    const double realized = il::lvh({v_pool, v_hodl});
    return finish(path, config, pos, realized);
}

std::vector<StrategySpec> default_strategy_grid() {
    return {
        {"short_narrow", 0.33, 0.02},
        {"long_narrow", 60.0, 0.02},
        {"short_wide", 0.33, 0.5},
        {"long_wide", 60.0, 0.5},
    };
}

amm::PriceRange range_for_size(double range_size, double p0) {
    if (!(range_size > 0.0) || !(p0 > 0.0)) {
        throw std::domain_error("range_for_size: range size and price must be positive");
    }
    // solve s - 1/s = r for the geometric half-width s
    const double s = (range_size + std::sqrt(range_size * range_size + 4.0)) / 2.0;
    return amm::range_from_prices(p0 / s, p0 * s);
}

std::vector<StrategyCohort> run_strategy_grid(std::span<const PricePath> paths,
                                              std::span<const StrategySpec> strategies,
                                              const std::string& pool_type_tag,
                                              const GridConfig& config,
                                              bool use_oracle_results) {
    if (paths.empty()) {
        throw std::domain_error("run_strategy_grid: no paths");
    }
    if (strategies.empty()) {
        throw std::domain_error("run_strategy_grid: no strategies");
    }
    std::vector<StrategyCohort> cohorts;
    cohorts.reserve(strategies.size());
    for (const auto& strategy : strategies) {
        StrategyCohort cohort;
        cohort.strategy = strategy.name;
        cohort.pool_type_tag = pool_type_tag;
        std::vector<double> il_values, reward_values, return_values, in_range_values;
        for (const auto& path : paths) {
            SimConfig sim_config;
            sim_config.range = range_for_size(strategy.range_size, path.points.front().price);
            sim_config.duration_days = strategy.duration_days;
            sim_config.deposit_usd = config.deposit_usd;
            sim_config.fee_ppm = config.fee_ppm;
            sim_config.pool_liquidity_other = config.pool_liquidity_other;
            const SimResult closed = simulate_position(path, sim_config);
            const SimResult oracle = oracle_replay(path, sim_config);
            cohort.max_oracle_deviation =
                std::max(cohort.max_oracle_deviation,
                         std::abs(closed.realized_il - oracle.realized_il));
            const SimResult& used = use_oracle_results ? oracle : closed;
            il_values.push_back(used.realized_il);
            reward_values.push_back(used.rewards);
            return_values.push_back(used.lp_return);
            in_range_values.push_back(used.time_in_range);
        }
        cohort.n = paths.size();
        cohort.metrics["realized_il"] = cohort::cohort_stats(std::move(il_values));
        cohort.metrics["rewards"] = cohort::cohort_stats(std::move(reward_values));
        cohort.metrics["lp_return"] = cohort::cohort_stats(std::move(return_values));
        cohort.metrics["time_in_range"] = cohort::cohort_stats(std::move(in_range_values));
        cohorts.push_back(std::move(cohort));
    }
    return cohorts;
}

std::vector<PricePath> make_paths(std::size_t n, std::uint64_t base_seed,
                                  const GbmParams& params) {
    std::vector<PricePath> paths;
    paths.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        paths.push_back(gbm_path(base_seed + i, params));
    }
    return paths;
}

}  // namespace ammlab::sim
