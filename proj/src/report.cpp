#include "amm_lab/report.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

namespace ammlab::report {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

ordered_json stats_to_json(const cohort::CohortStats& stats) {
    return ordered_json{{"n", stats.n},           {"mean", stats.mean},
                        {"median", stats.median}, {"std_dev", stats.std_dev},
                        {"ci95_lo", stats.ci95_lo}, {"ci95_hi", stats.ci95_hi}};
}

void append_stats_csv(std::ostringstream& out, const std::string& table,
                      const std::string& group, const std::string& metric,
                      const cohort::CohortStats& stats) {
    out << "table," << table << ',' << group << ',' << metric << ',' << stats.n << ','
        << stats.mean << ',' << stats.median << ',' << stats.std_dev << ',' << stats.ci95_lo
        << ',' << stats.ci95_hi << '\n';
}

}  // namespace

AnalyzeConfig load_analyze_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot open config " + path.string());
    }
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        throw std::runtime_error("config " + path.string() + ": " + e.what());
    }
    AnalyzeConfig config;
    if (doc.contains("stable_set")) {
        config.stable_set.clear();
        for (const auto& symbol : doc.at("stable_set")) {
            config.stable_set.insert(symbol.get<std::string>());
        }
    }
    if (doc.contains("size_bucket_bounds")) {
        config.cohort.size_bucket_bounds = doc.at("size_bucket_bounds").get<std::vector<double>>();
    }
    if (doc.contains("range_bucket_bounds")) {
        config.cohort.range_bucket_bounds =
            doc.at("range_bucket_bounds").get<std::vector<double>>();
    }
    if (doc.contains("duration_thresholds")) {
        const auto& t = doc.at("duration_thresholds");
        config.cohort.duration_thresholds =
            cohort::Thresholds{t.at("lo").get<double>(), t.at("hi").get<double>()};
    }
    if (doc.contains("range_thresholds")) {
        const auto& t = doc.at("range_thresholds");
        config.cohort.range_thresholds =
            cohort::Thresholds{t.at("lo").get<double>(), t.at("hi").get<double>()};
    }
    if (doc.contains("ci_z")) {
        config.cohort.ci_z = doc.at("ci_z").get<double>();
    }
    if (doc.contains("histogram_bin_width")) {
        config.histogram_bin_width = doc.at("histogram_bin_width").get<double>();
    }
    if (doc.contains("collect_attribution")) {
        const std::string mode = doc.at("collect_attribution").get<std::string>();
        if (mode == "pro_rata_liquidity_time") {
            config.attribution = ledger::CollectAttribution::pro_rata_liquidity_time;
        } else if (mode == "closing_tranche") {
            config.attribution = ledger::CollectAttribution::closing_tranche;
        } else {
            throw std::runtime_error("config: unknown collect_attribution '" + mode + "'");
        }
    }
    if (doc.contains("il_normalization")) {
        const std::string mode = doc.at("il_normalization").get<std::string>();
        if (mode == "hodl_at_close") {
            config.normalization = il::IlNormalization::hodl_at_close;
        } else if (mode == "deposit_value") {
            config.normalization = il::IlNormalization::deposit_value;
        } else {
            throw std::runtime_error("config: unknown il_normalization '" + mode + "'");
        }
    }
    if (doc.contains("groupings")) {
        config.groupings.clear();
        for (const auto& name : doc.at("groupings")) {
            auto grouping = cohort::grouping_from_string(name.get<std::string>());
            if (!grouping) {
                throw std::runtime_error("config: unknown grouping '" +
                                         name.get<std::string>() + "'");
            }
            config.groupings.push_back(*grouping);
        }
    }
    return config;
}

std::vector<cohort::AnalyzedPosition> analyze_positions(const ingest::Dataset& dataset,
                                                        const AnalyzeConfig& config) {
    std::map<std::string, cohort::PoolType> pool_types;
    for (const auto& pool : dataset.pools) {
        pool_types[pool.name] = cohort::classify_pool_type(pool.token0.symbol,
                                                           pool.token1.symbol, config.stable_set);
    }
    const ledger::Ledger groups = ledger::build_ledger(dataset.events);
    std::vector<cohort::AnalyzedPosition> positions;
    for (const auto& [position_id, group] : groups) {
        for (const auto& cp : ledger::match_fifo(group, config.attribution)) {
            cohort::AnalyzedPosition p;
            p.metrics = ledger::compute_metrics(cp, config.normalization);
            p.pool_id = cp.pool_id;
            p.pool_type = pool_types.at(cp.pool_id);
            positions.push_back(std::move(p));
        }
    }
    return positions;
}

ReportBundle build_report(const ingest::Dataset& dataset, const AnalyzeConfig& config,
                          const std::string& dataset_hash, const std::string& tool_version,
                          std::optional<std::string> generated_at) {
    ReportBundle bundle;
    bundle.meta.tool_version = tool_version;
    bundle.meta.dataset_hash = dataset_hash;
    bundle.meta.generated_at = std::move(generated_at);

    const auto positions = analyze_positions(dataset, config);
    bundle.meta.positions = positions.size();
    if (positions.empty()) {
        throw std::domain_error("build_report: no closed positions in the dataset");
    }
    bundle.tables = cohort::aggregate_report(positions, config.groupings, config.cohort);

    // per-pool histograms of realized IL and rewards
    const double width = config.histogram_bin_width;
    if (!(width > 0.0)) {
        throw std::domain_error("build_report: histogram bin width must be positive");
    }
    std::map<std::string, std::map<std::string, std::map<long, std::uint64_t>>> hist;
    for (const auto& p : positions) {
        const auto bin = [&](double v) { return static_cast<long>(std::floor(v / width)); };
        hist[p.pool_id]["realized_il"][bin(p.metrics.realized_il)]++;
        hist[p.pool_id]["rewards"][bin(p.metrics.rewards)]++;
    }
    for (const auto& [pool, metrics] : hist) {
        for (const auto& [metric, bins] : metrics) {
            Histogram h;
            h.pool = pool;
            h.metric = metric;
            h.bin_width = width;
            for (const auto& [index, count] : bins) {
                h.bins.push_back({index, count});
            }
            bundle.histograms.push_back(std::move(h));
        }
    }
    return bundle;
}

std::string to_json(const ReportBundle& bundle) {
    ordered_json doc;
    doc["schema_version"] = 1;
    doc["metadata"] = ordered_json{{"tool_version", bundle.meta.tool_version},
                                   {"dataset_hash", bundle.meta.dataset_hash},
                                   {"positions", bundle.meta.positions}};
    if (bundle.meta.generated_at) {
        doc["metadata"]["generated_at"] = *bundle.meta.generated_at;
    }
    doc["tables"] = ordered_json::array();
    for (const auto& table : bundle.tables) {
        ordered_json rows = ordered_json::array();
        for (const auto& row : table.rows) {
            ordered_json metrics;
            for (const auto& [name, stats] : row.metrics) {
                metrics[name] = stats_to_json(stats);
            }
            rows.push_back(ordered_json{{"group", row.group}, {"metrics", metrics}});
        }
        doc["tables"].push_back(ordered_json{{"grouping", table.grouping}, {"rows", rows}});
    }
    doc["histograms"] = ordered_json::array();
    for (const auto& h : bundle.histograms) {
        ordered_json bins = ordered_json::array();
        for (const auto& bin : h.bins) {
            bins.push_back(ordered_json{{"lo", static_cast<double>(bin.index) * h.bin_width},
                                        {"index", bin.index},
                                        {"count", bin.count}});
        }
        doc["histograms"].push_back(ordered_json{{"pool", h.pool},
                                                 {"metric", h.metric},
                                                 {"bin_width", h.bin_width},
                                                 {"bins", bins}});
    }
    return doc.dump(2) + "\n";
}

std::string to_csv(const ReportBundle& bundle) {
    std::ostringstream out;
    out.precision(17);
    out << "section,key,value\n";
    out << "meta,schema_version,1\n";
    out << "meta,tool_version," << bundle.meta.tool_version << '\n';
    out << "meta,dataset_hash," << bundle.meta.dataset_hash << '\n';
    out << "meta,positions," << bundle.meta.positions << '\n';
    if (bundle.meta.generated_at) {
        out << "meta,generated_at," << *bundle.meta.generated_at << '\n';
    }
    out << "\nsection,table,group,metric,n,mean,median,std_dev,ci95_lo,ci95_hi\n";
    for (const auto& table : bundle.tables) {
        for (const auto& row : table.rows) {
            for (const auto& [metric, stats] : row.metrics) {
                append_stats_csv(out, table.grouping, row.group, metric, stats);
            }
        }
    }
    out << "\nsection,pool,metric,bin_lo,bin_width,count\n";
    for (const auto& h : bundle.histograms) {
        for (const auto& bin : h.bins) {
            out << "histogram," << h.pool << ',' << h.metric << ','
                << static_cast<double>(bin.index) * h.bin_width << ',' << h.bin_width << ','
                << bin.count << '\n';
        }
    }
    return out.str();
}

ReportBundle bundle_from_json(const std::string& text) {
    json doc = json::parse(text);
    ReportBundle bundle;
    const json& meta = doc.at("metadata");
    bundle.meta.tool_version = meta.at("tool_version").get<std::string>();
    bundle.meta.dataset_hash = meta.at("dataset_hash").get<std::string>();
    bundle.meta.positions = meta.at("positions").get<std::size_t>();
    if (meta.contains("generated_at")) {
        bundle.meta.generated_at = meta.at("generated_at").get<std::string>();
    }
    for (const auto& table : doc.at("tables")) {
        cohort::CohortTable t;
        t.grouping = table.at("grouping").get<std::string>();
        for (const auto& row : table.at("rows")) {
            cohort::CohortRow r;
            r.group = row.at("group").get<std::string>();
            for (const auto& [name, stats] : row.at("metrics").items()) {
                cohort::CohortStats s;
                s.n = stats.at("n").get<std::size_t>();
                s.mean = stats.at("mean").get<double>();
                s.median = stats.at("median").get<double>();
                s.std_dev = stats.at("std_dev").get<double>();
                s.ci95_lo = stats.at("ci95_lo").get<double>();
                s.ci95_hi = stats.at("ci95_hi").get<double>();
                r.metrics[name] = s;
            }
            t.rows.push_back(std::move(r));
        }
        bundle.tables.push_back(std::move(t));
    }
    for (const auto& h : doc.at("histograms")) {
        Histogram hist;
        hist.pool = h.at("pool").get<std::string>();
        hist.metric = h.at("metric").get<std::string>();
        hist.bin_width = h.at("bin_width").get<double>();
        for (const auto& bin : h.at("bins")) {
            hist.bins.push_back(
                {bin.at("index").get<long>(), bin.at("count").get<std::uint64_t>()});
        }
        bundle.histograms.push_back(std::move(hist));
    }
    return bundle;
}

std::string to_json(const SimReport& report) {
    ordered_json doc;
    doc["schema_version"] = 1;
    doc["metadata"] = ordered_json{{"tool_version", report.tool_version},
                                   {"base_seed", report.base_seed},
                                   {"engine", report.engine},
                                   {"pool_type", report.pool_type_tag}};
    if (report.generated_at) {
        doc["metadata"]["generated_at"] = *report.generated_at;
    }
    doc["strategies"] = ordered_json::array();
    for (const auto& cohort : report.cohorts) {
        ordered_json metrics;
        for (const auto& [name, stats] : cohort.metrics) {
            metrics[name] = stats_to_json(stats);
        }
        doc["strategies"].push_back(ordered_json{{"strategy", cohort.strategy},
                                                 {"pool_type", cohort.pool_type_tag},
                                                 {"n", cohort.n},
                                                 {"metrics", metrics},
                                                 {"max_oracle_deviation",
                                                  cohort.max_oracle_deviation}});
    }
    doc["max_oracle_deviation"] = report.max_oracle_deviation;
    return doc.dump(2) + "\n";
}

std::string to_csv(const SimReport& report) {
    std::ostringstream out;
    out.precision(17);
    out << "section,key,value\n";
    out << "meta,schema_version,1\n";
    out << "meta,tool_version," << report.tool_version << '\n';
    out << "meta,base_seed," << report.base_seed << '\n';
    out << "meta,engine," << report.engine << '\n';
    out << "meta,pool_type," << report.pool_type_tag << '\n';
    out << "meta,max_oracle_deviation," << report.max_oracle_deviation << '\n';
    out << "\nsection,strategy,pool_type,metric,n,mean,median,std_dev,ci95_lo,ci95_hi\n";
    for (const auto& cohort : report.cohorts) {
        for (const auto& [metric, stats] : cohort.metrics) {
            out << "strategy," << cohort.strategy << ',' << cohort.pool_type_tag << ',' << metric
                << ',' << stats.n << ',' << stats.mean << ',' << stats.median << ','
                << stats.std_dev << ',' << stats.ci95_lo << ',' << stats.ci95_hi << '\n';
        }
    }
    return out.str();
}

ReportBundle merge_bundles(std::span<const ReportBundle> bundles) {
    if (bundles.empty()) {
        throw std::domain_error("merge_bundles: nothing to merge");
    }
    ReportBundle merged;
    merged.meta.tool_version = bundles.front().meta.tool_version;
    std::string combined_hash;
    for (const auto& bundle : bundles) {
        if (!combined_hash.empty()) combined_hash += "+";
        combined_hash += bundle.meta.dataset_hash;
        merged.meta.positions += bundle.meta.positions;
        for (const auto& table : bundle.tables) {
            auto it = std::find_if(merged.tables.begin(), merged.tables.end(),
                                   [&](const cohort::CohortTable& t) {
                                       return t.grouping == table.grouping;
                                   });
            if (it == merged.tables.end()) {
                merged.tables.push_back(table);
            } else {
                it->rows.insert(it->rows.end(), table.rows.begin(), table.rows.end());
            }
        }
        merged.histograms.insert(merged.histograms.end(), bundle.histograms.begin(),
                                 bundle.histograms.end());
    }
    merged.meta.dataset_hash = combined_hash;
    return merged;
}

std::uint64_t fnv1a64(std::span<const unsigned char> bytes) {
    std::uint64_t hash = 0xcbf29ce484222325ull;
    for (unsigned char byte : bytes) {
        hash ^= byte;
        hash *= 0x100000001b3ull;
    }
    return hash;
}

std::string file_hash(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw std::runtime_error("cannot open " + path.string());
    }
    std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                     std::istreambuf_iterator<char>());
    char buf[32];
    std::snprintf(buf, sizeof(buf), "fnv1a64:%016llx",
                  static_cast<unsigned long long>(fnv1a64(bytes)));
    return buf;
}

}  // namespace ammlab::report
