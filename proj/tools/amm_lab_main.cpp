// amm-lab: batch analytics for concentrated-liquidity LP positions.
// Subcommands: ingest, analyze, simulate, report-merge.

#include "amm_lab/report.hpp"

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

namespace {

using namespace ammlab;

constexpr int kExitOk = 0;
constexpr int kExitInput = 2;
constexpr int kExitEmpty = 3;
constexpr int kExitConfig = 4;

#ifndef AMM_LAB_VERSION
#define AMM_LAB_VERSION "0.0.0"
#endif

std::optional<std::string> timestamp_or_none(bool no_timestamp) {
    if (no_timestamp) return std::nullopt;
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
    return std::string(buf);
}

void write_file(const std::filesystem::path& path, const std::string& content) {
    if (path.has_parent_path()) {
        std::filesystem::create_directories(path.parent_path());
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw std::runtime_error("cannot write " + path.string());
    }
    out << content;
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw ingest::ParseError("cannot open file", path.string());
    }
    return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

struct GlobalOptions {
    std::string config_path;
    std::uint64_t seed = 42;
    std::string format = "json";
    bool no_timestamp = false;
};

report::AnalyzeConfig effective_config(const GlobalOptions& global) {
    if (global.config_path.empty()) {
        return report::AnalyzeConfig{};
    }
    return report::load_analyze_config(global.config_path);
}

// ---------------------------------------------------------------------------
// ingest

struct IngestArgs {
    std::string input;
    std::string endpoint;
    std::string field_map_path;
    std::string out;
    ingest::DatasetFilter filter;
    bool include_open = false;
    std::vector<std::string> allowlist;
    std::size_t page_size = 1000;
};

int run_ingest(const GlobalOptions& global, IngestArgs& args) {
    ingest::Dataset dataset;
    if (!args.input.empty()) {
        dataset = ingest::parse_fixture(args.input);
    } else {
        std::string endpoint = args.endpoint;
        if (endpoint.empty()) {
            if (const char* env = std::getenv("AMM_LAB_SUBGRAPH_URL")) {
                endpoint = env;
            }
        }
        if (endpoint.empty()) {
            std::cerr << "ingest: no --input and no --endpoint/AMM_LAB_SUBGRAPH_URL\n";
            return kExitInput;
        }
        ingest::RemoteOptions options;
        options.page_size = args.page_size;
        if (!args.field_map_path.empty()) {
            options.fields = ingest::FieldMap::from_file(args.field_map_path);
        }
        dataset = ingest::fetch_remote(endpoint, args.filter.block_lo, args.filter.block_hi,
                                       options);
    }

    args.filter.closed_only = !args.include_open;
    if (!args.allowlist.empty()) {
        args.filter.pool_allowlist =
            std::set<std::string>(args.allowlist.begin(), args.allowlist.end());
    }
    const ingest::Dataset filtered = ingest::apply_filters(dataset, args.filter);

    if (global.format == "csv") {
        ingest::write_csv(filtered, args.out);
    } else {
        ingest::write_json(filtered, args.out);
    }
    std::cout << "pools kept " << filtered.pools.size() << " dropped "
              << dataset.pools.size() - filtered.pools.size() << "\n"
              << "events kept " << filtered.events.size() << " dropped "
              << dataset.events.size() - filtered.events.size() << "\n";
    return kExitOk;
}

// ---------------------------------------------------------------------------
// analyze

struct AnalyzeArgs {
    std::string input;
    std::string out;
    std::vector<std::string> groupings;
};

int run_analyze(const GlobalOptions& global, const AnalyzeArgs& args) {
    report::AnalyzeConfig config = effective_config(global);
    if (!args.groupings.empty()) {
        config.groupings.clear();
        for (const auto& name : args.groupings) {
            auto grouping = cohort::grouping_from_string(name);
            if (!grouping) {
                std::cerr << "analyze: unknown grouping '" << name << "'\n";
                return kExitConfig;
            }
            config.groupings.push_back(*grouping);
        }
    }
    const ingest::Dataset dataset = ingest::parse_fixture(args.input);
    if (dataset.events.empty()) {
        std::cerr << "analyze: dataset has no events\n";
        return kExitEmpty;
    }
    report::ReportBundle bundle;
    try {
        bundle = report::build_report(dataset, config, report::file_hash(args.input),
                                      AMM_LAB_VERSION, timestamp_or_none(global.no_timestamp));
    } catch (const std::domain_error& e) {
        std::cerr << "analyze: " << e.what() << "\n";
        return kExitEmpty;
    }
    write_file(args.out,
               global.format == "csv" ? report::to_csv(bundle) : report::to_json(bundle));
    std::cout << "analyzed " << bundle.meta.positions << " positions into " << args.out << "\n";
    return kExitOk;
}

// ---------------------------------------------------------------------------
// simulate

struct SimulateArgs {
    std::string out;
    std::string grid_path;
    std::string price_file;
    std::string engine = "closed_form";
    std::string pool_type = "risky_risky";
    std::size_t n_paths = 100;
    double p0 = 1.0;
    double mu = 0.0;
    double sigma = 0.5;
    double dt_seconds = 3600.0;
    std::size_t steps = 24 * 60;
    double volume_per_step = 10'000.0;
    double token1_usd = 1.0;
    sim::GridConfig grid_config;
};

std::vector<sim::StrategySpec> load_grid(const std::string& path) {
    nlohmann::json doc = nlohmann::json::parse(read_file(path));
    if (!doc.is_array() || doc.empty()) {
        throw std::invalid_argument("grid file must be a non-empty array");
    }
    std::vector<sim::StrategySpec> grid;
    for (const auto& item : doc) {
        sim::StrategySpec spec;
        spec.name = item.at("name").get<std::string>();
        spec.duration_days = item.at("duration_days").get<double>();
        spec.range_size = item.at("range_size").get<double>();
        if (spec.name.empty() || !(spec.duration_days > 0.0) || !(spec.range_size > 0.0)) {
            throw std::invalid_argument("grid entry '" + spec.name + "' is invalid");
        }
        grid.push_back(std::move(spec));
    }
    return grid;
}

int run_simulate(const GlobalOptions& global, const SimulateArgs& args) {
    std::vector<sim::StrategySpec> grid;
    try {
        grid = args.grid_path.empty() ? sim::default_strategy_grid() : load_grid(args.grid_path);
        if (args.engine != "closed_form" && args.engine != "oracle") {
            throw std::invalid_argument("engine must be closed_form or oracle");
        }
    } catch (const std::exception& e) {
        std::cerr << "simulate: " << e.what() << "\n";
        return kExitConfig;
    }

    std::vector<sim::PricePath> paths;
    if (!args.price_file.empty()) {
        paths.push_back(ingest::parse_price_path(args.price_file));
    } else {
        sim::GbmParams params;
        params.p0 = args.p0;
        params.mu = args.mu;
        params.sigma = args.sigma;
        params.dt_seconds = args.dt_seconds;
        params.n_steps = args.steps;
        params.volume.usd_per_step = args.volume_per_step;
        params.token1_usd = args.token1_usd;
        paths = sim::make_paths(args.n_paths, global.seed, params);
    }

    report::SimReport sim_report;
    sim_report.tool_version = AMM_LAB_VERSION;
    sim_report.base_seed = global.seed;
    sim_report.engine = args.engine;
    sim_report.pool_type_tag = args.pool_type;
    sim_report.generated_at = timestamp_or_none(global.no_timestamp);
    try {
        sim_report.cohorts = sim::run_strategy_grid(paths, grid, args.pool_type,
                                                    args.grid_config, args.engine == "oracle");
    } catch (const std::domain_error& e) {
        std::cerr << "simulate: " << e.what() << "\n";
        return kExitConfig;
    }
    for (const auto& cohort : sim_report.cohorts) {
        sim_report.max_oracle_deviation =
            std::max(sim_report.max_oracle_deviation, cohort.max_oracle_deviation);
    }
    write_file(args.out, global.format == "csv" ? report::to_csv(sim_report)
                                                : report::to_json(sim_report));
    std::cout << "simulated " << grid.size() << " strategies over " << paths.size()
              << " paths into " << args.out << "\n";
    return kExitOk;
}

// ---------------------------------------------------------------------------
// report-merge

struct MergeArgs {
    std::vector<std::string> inputs;
    std::string out;
};

int run_merge(const GlobalOptions& global, const MergeArgs& args) {
    std::vector<report::ReportBundle> bundles;
    for (const auto& path : args.inputs) {
        try {
            bundles.push_back(report::bundle_from_json(read_file(path)));
        } catch (const nlohmann::json::exception& e) {
            std::cerr << "report-merge: " << path << ": " << e.what() << "\n";
            return kExitInput;
        }
    }
    report::ReportBundle merged = report::merge_bundles(bundles);
    merged.meta.generated_at = timestamp_or_none(global.no_timestamp);
    write_file(args.out,
               global.format == "csv" ? report::to_csv(merged) : report::to_json(merged));
    std::cout << "merged " << bundles.size() << " reports into " << args.out << "\n";
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Concentrated-liquidity LP analytics and strategy backtesting"};
    app.require_subcommand(1);

    GlobalOptions global;
    app.add_option("--config", global.config_path, "analysis config JSON");
    app.add_option("--seed", global.seed, "base RNG seed");
    app.add_option("--format", global.format, "output format")
        ->check(CLI::IsMember({"json", "csv"}));
    app.add_flag("--no-timestamp", global.no_timestamp,
                 "omit the generation timestamp from report metadata");

    IngestArgs ingest_args;
    auto* ingest_cmd = app.add_subcommand("ingest", "load, filter and normalize a dataset");
    ingest_cmd->add_option("--input", ingest_args.input,
                           "fixture file (.json) or directory with pools.csv/events.csv");
    ingest_cmd->add_option("--endpoint", ingest_args.endpoint,
                           "subgraph endpoint (default: AMM_LAB_SUBGRAPH_URL)");
    ingest_cmd->add_option("--field-map", ingest_args.field_map_path,
                           "JSON file mapping logical field names to wire names");
    ingest_cmd->add_option("--out", ingest_args.out, "output path")->required();
    ingest_cmd->add_option("--min-tvl", ingest_args.filter.min_tvl_usd, "minimum pool TVL, USD");
    ingest_cmd->add_option("--block-lo", ingest_args.filter.block_lo, "first block (inclusive)");
    ingest_cmd->add_option("--block-hi", ingest_args.filter.block_hi, "last block (inclusive)");
    ingest_cmd->add_flag("--include-open", ingest_args.include_open,
                         "keep positions that were not fully closed in the window");
    ingest_cmd->add_option("--pool", ingest_args.allowlist, "pool allowlist (repeatable)");
    ingest_cmd->add_option("--page-size", ingest_args.page_size, "remote page size [1,1000]");

    AnalyzeArgs analyze_args;
    auto* analyze_cmd = app.add_subcommand("analyze", "compute cohort reports from a dataset");
    analyze_cmd->add_option("--input", analyze_args.input, "normalized dataset path")->required();
    analyze_cmd->add_option("--out", analyze_args.out, "output path")->required();
    analyze_cmd->add_option("--group", analyze_args.groupings,
                            "groupings: pool, pool_type, duration, size, range, strategy");

    SimulateArgs sim_args;
    auto* sim_cmd = app.add_subcommand("simulate", "backtest the strategy grid on price paths");
    sim_cmd->add_option("--out", sim_args.out, "output path")->required();
    sim_cmd->add_option("--grid", sim_args.grid_path, "strategy grid JSON");
    sim_cmd->add_option("--price-file", sim_args.price_file,
                        "CSV price path: timestamp,price,volume_usd,token1_usd");
    sim_cmd->add_option("--engine", sim_args.engine, "closed_form or oracle");
    sim_cmd->add_option("--pool-type", sim_args.pool_type, "pool type tag for the cohorts");
    sim_cmd->add_option("--paths", sim_args.n_paths, "number of generated paths");
    sim_cmd->add_option("--p0", sim_args.p0, "initial pool price");
    sim_cmd->add_option("--mu", sim_args.mu, "drift per year");
    sim_cmd->add_option("--sigma", sim_args.sigma, "volatility per sqrt-year");
    sim_cmd->add_option("--dt-seconds", sim_args.dt_seconds, "step size in seconds");
    sim_cmd->add_option("--steps", sim_args.steps, "steps per path");
    sim_cmd->add_option("--volume-per-step", sim_args.volume_per_step, "USD volume per step");
    sim_cmd->add_option("--token1-usd", sim_args.token1_usd, "USD price of token1");
    sim_cmd->add_option("--deposit", sim_args.grid_config.deposit_usd, "deposit size, USD");
    sim_cmd->add_option("--fee-ppm", sim_args.grid_config.fee_ppm, "pool fee in ppm");
    sim_cmd->add_option("--other-liquidity", sim_args.grid_config.pool_liquidity_other,
                        "competing pool liquidity");

    MergeArgs merge_args;
    auto* merge_cmd = app.add_subcommand("report-merge", "merge report bundles");
    merge_cmd->add_option("inputs", merge_args.inputs, "report JSON files")->required();
    merge_cmd->add_option("--out", merge_args.out, "output path")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (app.got_subcommand(ingest_cmd)) return run_ingest(global, ingest_args);
        if (app.got_subcommand(analyze_cmd)) return run_analyze(global, analyze_args);
        if (app.got_subcommand(sim_cmd)) return run_simulate(global, sim_args);
        if (app.got_subcommand(merge_cmd)) return run_merge(global, merge_args);
    } catch (const ingest::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInput;
    } catch (const ingest::ReferentialError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInput;
    } catch (const ingest::TransportError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInput;
    } catch (const ingest::DecodeError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInput;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::domain_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInput;
    }
    return kExitOk;
}
