#include "amm_lab/ingest.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <sstream>
#include <thread>

#include <httplib.h>
#include <json.hpp>

namespace ammlab::ingest {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

std::string format_double(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

double parse_decimal(const std::string& text, const std::string& location) {
    double value = 0.0;
    const char* first = text.data();
    const char* last = text.data() + text.size();
    auto res = std::from_chars(first, last, value);
    if (res.ec != std::errc() || res.ptr != last) {
        throw ParseError("not a decimal number: '" + text + "'", location);
    }
    return value;
}

double require_decimal_field(const json& obj, const std::string& field,
                             const std::string& location) {
    if (!obj.contains(field)) {
        throw ParseError("missing field '" + field + "'", location);
    }
    if (!obj.at(field).is_string()) {
        throw ParseError("field '" + field + "' must be a decimal string", location);
    }
    return parse_decimal(obj.at(field).get<std::string>(), location + "." + field);
}

std::optional<double> optional_decimal_field(const json& obj, const std::string& field,
                                             const std::string& location) {
    if (!obj.contains(field) || obj.at(field).is_null()) {
        return std::nullopt;
    }
    if (!obj.at(field).is_string()) {
        throw ParseError("field '" + field + "' must be a decimal string", location);
    }
    return parse_decimal(obj.at(field).get<std::string>(), location + "." + field);
}

template <typename T>
T require_integer_field(const json& obj, const std::string& field, const std::string& location) {
    if (!obj.contains(field) || !obj.at(field).is_number_integer()) {
        throw ParseError("missing or non-integer field '" + field + "'", location);
    }
    const auto wide = obj.at(field).get<std::int64_t>();
    if (std::is_unsigned_v<T> && wide < 0) {
        throw ParseError("field '" + field + "' must be non-negative", location);
    }
    return static_cast<T>(wide);
}

std::string require_string_field(const json& obj, const std::string& field,
                                 const std::string& location) {
    if (!obj.contains(field) || !obj.at(field).is_string()) {
        throw ParseError("missing or non-string field '" + field + "'", location);
    }
    return obj.at(field).get<std::string>();
}

}  // namespace

double NumeraireConfig::price_at(std::int64_t t) const {
    double price = 0.0;
    bool found = false;
    for (const auto& [ts, usd] : series) {
        if (ts > t) break;
        price = usd;
        found = true;
    }
    if (!found) {
        throw std::domain_error("numeraire series has no sample at or before t=" +
                                std::to_string(t));
    }
    return price;
}

namespace {

struct FieldNames {
    // logical names used by the fixture schema; remote wire names are
    // resolved through a FieldMap
    static constexpr const char* kKind = "kind";
    static constexpr const char* kPositionId = "position_id";
    static constexpr const char* kPool = "pool";
    static constexpr const char* kBlock = "block";
    static constexpr const char* kLogIndex = "log_index";
    static constexpr const char* kTimestamp = "timestamp";
    static constexpr const char* kAmount0 = "amount0";
    static constexpr const char* kAmount1 = "amount1";
    static constexpr const char* kUsdValue = "usd_value";
    static constexpr const char* kPrice0 = "price_token0_usd";
    static constexpr const char* kPrice1 = "price_token1_usd";
    static constexpr const char* kPoolPrice = "pool_price";
    static constexpr const char* kLiquidity = "liquidity";
    static constexpr const char* kTickLower = "tick_lower";
    static constexpr const char* kTickUpper = "tick_upper";
    static constexpr const char* kPriceLower = "price_lower";
    static constexpr const char* kPriceUpper = "price_upper";
};

PoolDescriptor parse_pool(const json& obj, const FieldMap& fields, const std::string& location) {
    PoolDescriptor pool;
    pool.name = require_string_field(obj, fields("name"), location);
    for (const auto& [field, token] :
         {std::pair{fields("token0"), &pool.token0}, std::pair{fields("token1"), &pool.token1}}) {
        if (!obj.contains(field) || !obj.at(field).is_object()) {
            throw ParseError("missing token object '" + field + "'", location);
        }
        const json& tok = obj.at(field);
        token->symbol = require_string_field(tok, fields("symbol"), location + "." + field);
        token->decimals =
            require_integer_field<int>(tok, fields("decimals"), location + "." + field);
        if (token->symbol.empty() || token->decimals < 0 || token->decimals > 36) {
            throw ParseError("invalid token in '" + field + "'", location);
        }
    }
    pool.fee_ppm = require_integer_field<std::uint32_t>(obj, fields("fee_ppm"), location);
    if (pool.fee_ppm >= 1'000'000) {
        throw ParseError("fee_ppm must be below 1,000,000", location);
    }
    pool.tvl_usd = require_decimal_field(obj, fields("tvl_usd"), location);
    pool.volume_usd = require_decimal_field(obj, fields("volume_usd"), location);
    pool.tx_count = require_integer_field<std::uint64_t>(obj, fields("tx_count"), location);
    if (pool.tvl_usd < 0.0 || pool.volume_usd < 0.0) {
        throw ParseError("pool USD figures must be non-negative", location);
    }
    const std::string expected =
        pool.token0.symbol + "-" + pool.token1.symbol + "-" + std::to_string(pool.fee_ppm);
    if (pool.name != expected) {
        throw ParseError("pool name '" + pool.name + "' does not follow the token0-token1-fee "
                         "convention (expected '" + expected + "')",
                         location);
    }
    return pool;
}

ledger::LiquidityEvent parse_event(const json& obj, const FieldMap& fields,
                                   const std::map<std::string, const PoolDescriptor*>& pools,
                                   bool raw_base_units, const ParseOptions& options,
                                   const std::string& location) {
    ledger::LiquidityEvent ev;
    const std::string kind = require_string_field(obj, fields(FieldNames::kKind), location);
    if (kind == "deposit") {
        ev.kind = ledger::EventKind::deposit;
    } else if (kind == "withdraw") {
        ev.kind = ledger::EventKind::withdraw;
    } else if (kind == "collect") {
        ev.kind = ledger::EventKind::collect;
    } else {
        throw ParseError("unknown event kind '" + kind + "'", location);
    }
    ev.position_id = require_string_field(obj, fields(FieldNames::kPositionId), location);
    ev.pool_id = require_string_field(obj, fields(FieldNames::kPool), location);
    auto pool_it = pools.find(ev.pool_id);
    if (pool_it == pools.end()) {
        throw ReferentialError(location + ": event references unknown pool '" + ev.pool_id + "'");
    }
    const PoolDescriptor& pool = *pool_it->second;

    ev.block = require_integer_field<std::uint64_t>(obj, fields(FieldNames::kBlock), location);
    ev.log_index =
        require_integer_field<std::uint32_t>(obj, fields(FieldNames::kLogIndex), location);
    ev.t = require_integer_field<std::int64_t>(obj, fields(FieldNames::kTimestamp), location);

    ev.amount0 = require_decimal_field(obj, fields(FieldNames::kAmount0), location);
    ev.amount1 = require_decimal_field(obj, fields(FieldNames::kAmount1), location);
    if (raw_base_units) {
        ev.amount0 /= std::pow(10.0, pool.token0.decimals);
        ev.amount1 /= std::pow(10.0, pool.token1.decimals);
    }
    if (ev.amount0 < 0.0 || ev.amount1 < 0.0) {
        throw ParseError("amounts must be non-negative", location);
    }

    const auto price0 = optional_decimal_field(obj, fields(FieldNames::kPrice0), location);
    const auto price1 = optional_decimal_field(obj, fields(FieldNames::kPrice1), location);
    if (price0 && price1) {
        ev.quote = il::PriceQuote{*price0, *price1, ev.t};
    } else {
        const auto pool_price = optional_decimal_field(obj, fields(FieldNames::kPoolPrice), location);
        if (!pool_price || !options.numeraire) {
            throw ParseError("event carries no USD prices and no pool_price/numeraire fallback",
                             location);
        }
        const NumeraireConfig& numeraire = *options.numeraire;
        const double numeraire_usd = numeraire.price_at(ev.t);
        if (numeraire.symbol == pool.token1.symbol) {
            ev.quote = il::PriceQuote{*pool_price * numeraire_usd, numeraire_usd, ev.t};
        } else if (numeraire.symbol == pool.token0.symbol) {
            ev.quote = il::PriceQuote{numeraire_usd, numeraire_usd / *pool_price, ev.t};
        } else {
            throw ParseError("numeraire token '" + numeraire.symbol +
                                 "' is not part of pool '" + pool.name + "'",
                             location);
        }
    }
    if (!(ev.quote.token0_usd > 0.0) || !(ev.quote.token1_usd > 0.0)) {
        throw ParseError("token USD prices must be positive", location);
    }

    const auto usd = optional_decimal_field(obj, fields(FieldNames::kUsdValue), location);
    ev.usd_value = usd ? *usd
                       : ev.amount0 * ev.quote.token0_usd + ev.amount1 * ev.quote.token1_usd;
    if (ev.usd_value < 0.0) {
        throw ParseError("usd_value must be non-negative", location);
    }

    ev.liquidity_delta = require_decimal_field(obj, fields(FieldNames::kLiquidity), location);
    if (ev.liquidity_delta < 0.0) {
        throw ParseError("liquidity must be non-negative", location);
    }
    if (ev.kind == ledger::EventKind::collect && ev.liquidity_delta != 0.0) {
        throw ParseError("collect events must have zero liquidity", location);
    }

    const bool has_tick_lower = obj.contains(fields(FieldNames::kTickLower)) &&
                                !obj.at(fields(FieldNames::kTickLower)).is_null();
    const bool has_tick_upper = obj.contains(fields(FieldNames::kTickUpper)) &&
                                !obj.at(fields(FieldNames::kTickUpper)).is_null();
    const auto price_lower = optional_decimal_field(obj, fields(FieldNames::kPriceLower), location);
    const auto price_upper = optional_decimal_field(obj, fields(FieldNames::kPriceUpper), location);
    if (has_tick_lower != has_tick_upper) {
        throw ParseError("tick bounds must come in pairs", location);
    }
    if (static_cast<bool>(price_lower) != static_cast<bool>(price_upper)) {
        throw ParseError("price bounds must come in pairs", location);
    }
    try {
        if (has_tick_lower) {
            const int tick_lower =
                require_integer_field<int>(obj, fields(FieldNames::kTickLower), location);
            const int tick_upper =
                require_integer_field<int>(obj, fields(FieldNames::kTickUpper), location);
            amm::PriceRange range = amm::range_from_ticks(tick_lower, tick_upper);
            if (price_lower) {
                range.lower = *price_lower;
                range.upper = *price_upper;
                amm::validate(range);  // prices must match the ticks
            }
            ev.range = range;
        } else if (price_lower) {
            ev.range = amm::range_from_prices(*price_lower, *price_upper);
        }
    } catch (const std::domain_error& e) {
        throw ParseError(e.what(), location);
    }
    if (ev.kind == ledger::EventKind::deposit && !ev.range) {
        throw ParseError("deposit events require tick or price bounds", location);
    }
    return ev;
}

Dataset parse_json_fixture(const std::filesystem::path& path, const ParseOptions& options) {
    std::ifstream in(path);
    if (!in) {
        throw ParseError("cannot open file", path.string());
    }
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("invalid JSON: ") + e.what(), path.string());
    }
    if (!doc.is_object() || !doc.contains("pools") || !doc.contains("events") ||
        !doc.at("pools").is_array() || !doc.at("events").is_array()) {
        throw ParseError("fixture must be an object with 'pools' and 'events' arrays",
                         path.string());
    }
    if (doc.contains("schema_version") && doc.at("schema_version") != 1) {
        throw ParseError("unsupported schema_version " + doc.at("schema_version").dump(),
                         path.string());
    }
    bool raw_base_units = false;
    if (doc.contains("amount_encoding")) {
        const std::string encoding = doc.at("amount_encoding").get<std::string>();
        if (encoding == "raw_base_units") {
            raw_base_units = true;
        } else if (encoding != "token_units") {
            throw ParseError("unknown amount_encoding '" + encoding + "'", path.string());
        }
    }

    Dataset dataset;
    FieldMap identity;
    std::map<std::string, const PoolDescriptor*> by_name;
    for (std::size_t i = 0; i < doc.at("pools").size(); ++i) {
        const std::string location = path.string() + ": pools[" + std::to_string(i) + "]";
        PoolDescriptor pool = parse_pool(doc.at("pools")[i], identity, location);
        if (by_name.count(pool.name)) {
            throw ParseError("duplicate pool '" + pool.name + "'", location);
        }
        dataset.pools.push_back(std::move(pool));
    }
    for (const auto& pool : dataset.pools) {
        by_name[pool.name] = &pool;
    }
    for (std::size_t i = 0; i < doc.at("events").size(); ++i) {
        const std::string location = path.string() + ": events[" + std::to_string(i) + "]";
        dataset.events.push_back(
            parse_event(doc.at("events")[i], identity, by_name, raw_base_units, options, location));
    }
    return dataset;
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string current;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    current.push_back('"');
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                current.push_back(c);
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            fields.push_back(std::move(current));
            current.clear();
        } else {
            current.push_back(c);
        }
    }
    fields.push_back(std::move(current));
    return fields;
}

std::string csv_escape(const std::string& field) {
    if (field.find_first_of(",\"\n") == std::string::npos) {
        return field;
    }
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out += "\"\"";
        else out.push_back(c);
    }
    out += "\"";
    return out;
}

const std::vector<std::string> kPoolColumns = {
    "name",    "token0_symbol", "token0_decimals", "token1_symbol", "token1_decimals",
    "fee_ppm", "tvl_usd",       "volume_usd",      "tx_count"};

const std::vector<std::string> kEventColumns = {
    "kind",   "position_id", "pool",      "block",           "log_index",
    "timestamp", "amount0",  "amount1",   "usd_value",       "price_token0_usd",
    "price_token1_usd", "liquidity", "tick_lower", "tick_upper", "price_lower",
    "price_upper"};

// Reads a CSV file into rows of (line_number, field map keyed by header).
std::vector<std::pair<std::size_t, std::map<std::string, std::string>>> read_csv(
    const std::filesystem::path& path, const std::vector<std::string>& expected_columns) {
    std::ifstream in(path);
    if (!in) {
        throw ParseError("cannot open file", path.string());
    }
    std::string line;
    std::size_t line_no = 0;
    if (!std::getline(in, line)) {
        throw ParseError("missing header row", path.string());
    }
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto header = split_csv_line(line);
    if (header != expected_columns) {
        throw ParseError("unexpected column layout", path.string() + ":1");
    }
    std::vector<std::pair<std::size_t, std::map<std::string, std::string>>> rows;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto fields = split_csv_line(line);
        if (fields.size() != expected_columns.size()) {
            throw ParseError("wrong number of columns",
                             path.string() + ":" + std::to_string(line_no));
        }
        std::map<std::string, std::string> row;
        for (std::size_t i = 0; i < fields.size(); ++i) {
            row[expected_columns[i]] = fields[i];
        }
        rows.emplace_back(line_no, std::move(row));
    }
    return rows;
}

// Converts a CSV row into the JSON shape shared with the fixture parser;
// empty cells mean absent optional fields.
json csv_row_to_event_json(const std::map<std::string, std::string>& row) {
    json obj;
    auto str = [&](const char* key) {
        const auto& v = row.at(key);
        if (!v.empty()) obj[key] = v;
    };
    auto integer = [&](const char* key) {
        const auto& v = row.at(key);
        if (v.empty()) return;
        obj[key] = std::stoll(v);
    };
    str("kind");
    str("position_id");
    str("pool");
    integer("block");
    integer("log_index");
    integer("timestamp");
    str("amount0");
    str("amount1");
    str("usd_value");
    str("price_token0_usd");
    str("price_token1_usd");
    str("liquidity");
    integer("tick_lower");
    integer("tick_upper");
    str("price_lower");
    str("price_upper");
    return obj;
}

Dataset parse_csv_fixture(const std::filesystem::path& directory, const ParseOptions& options) {
    const auto pools_path = directory / "pools.csv";
    const auto events_path = directory / "events.csv";
    Dataset dataset;
    std::map<std::string, const PoolDescriptor*> by_name;
    for (const auto& [line_no, row] : read_csv(pools_path, kPoolColumns)) {
        const std::string location = pools_path.string() + ":" + std::to_string(line_no);
        json obj;
        try {
            obj["name"] = row.at("name");
            obj["token0"] = {{"symbol", row.at("token0_symbol")},
                             {"decimals", std::stoi(row.at("token0_decimals"))}};
            obj["token1"] = {{"symbol", row.at("token1_symbol")},
                             {"decimals", std::stoi(row.at("token1_decimals"))}};
            obj["fee_ppm"] = std::stoll(row.at("fee_ppm"));
            obj["tvl_usd"] = row.at("tvl_usd");
            obj["volume_usd"] = row.at("volume_usd");
            obj["tx_count"] = std::stoll(row.at("tx_count"));
        } catch (const std::exception&) {
            throw ParseError("malformed numeric cell", location);
        }
        PoolDescriptor pool = parse_pool(obj, FieldMap{}, location);
        if (by_name.count(pool.name)) {
            throw ParseError("duplicate pool '" + pool.name + "'", location);
        }
        dataset.pools.push_back(std::move(pool));
    }
    for (const auto& pool : dataset.pools) {
        by_name[pool.name] = &pool;
    }
    for (const auto& [line_no, row] : read_csv(events_path, kEventColumns)) {
        const std::string location = events_path.string() + ":" + std::to_string(line_no);
        json obj;
        try {
            obj = csv_row_to_event_json(row);
        } catch (const std::exception&) {
            throw ParseError("malformed numeric cell", location);
        }
        dataset.events.push_back(
            parse_event(obj, FieldMap{}, by_name, /*raw_base_units=*/false, options, location));
    }
    return dataset;
}

ordered_json event_to_json(const ledger::LiquidityEvent& ev) {
    ordered_json obj;
    switch (ev.kind) {
        case ledger::EventKind::deposit: obj["kind"] = "deposit"; break;
        case ledger::EventKind::withdraw: obj["kind"] = "withdraw"; break;
        case ledger::EventKind::collect: obj["kind"] = "collect"; break;
    }
    obj["position_id"] = ev.position_id;
    obj["pool"] = ev.pool_id;
    obj["block"] = ev.block;
    obj["log_index"] = ev.log_index;
    obj["timestamp"] = ev.t;
    obj["amount0"] = format_double(ev.amount0);
    obj["amount1"] = format_double(ev.amount1);
    obj["usd_value"] = format_double(ev.usd_value);
    obj["price_token0_usd"] = format_double(ev.quote.token0_usd);
    obj["price_token1_usd"] = format_double(ev.quote.token1_usd);
    obj["liquidity"] = format_double(ev.liquidity_delta);
    if (ev.range) {
        if (ev.range->tick_lower) obj["tick_lower"] = *ev.range->tick_lower;
        if (ev.range->tick_upper) obj["tick_upper"] = *ev.range->tick_upper;
        obj["price_lower"] = format_double(ev.range->lower);
        obj["price_upper"] = format_double(ev.range->upper);
    }
    return obj;
}

std::string event_csv_row(const ledger::LiquidityEvent& ev) {
    std::ostringstream out;
    const char* kind = ev.kind == ledger::EventKind::deposit    ? "deposit"
                       : ev.kind == ledger::EventKind::withdraw ? "withdraw"
                                                                : "collect";
    out << kind << ',' << csv_escape(ev.position_id) << ',' << csv_escape(ev.pool_id) << ','
        << ev.block << ',' << ev.log_index << ',' << ev.t << ',' << format_double(ev.amount0)
        << ',' << format_double(ev.amount1) << ',' << format_double(ev.usd_value) << ','
        << format_double(ev.quote.token0_usd) << ',' << format_double(ev.quote.token1_usd) << ','
        << format_double(ev.liquidity_delta) << ',';
    if (ev.range && ev.range->tick_lower) out << *ev.range->tick_lower;
    out << ',';
    if (ev.range && ev.range->tick_upper) out << *ev.range->tick_upper;
    out << ',';
    if (ev.range) out << format_double(ev.range->lower);
    out << ',';
    if (ev.range) out << format_double(ev.range->upper);
    return out.str();
}

}  // namespace

Dataset parse_fixture(const std::filesystem::path& path, const ParseOptions& options) {
    if (std::filesystem::is_directory(path)) {
        return parse_csv_fixture(path, options);
    }
    if (!std::filesystem::exists(path)) {
        throw ParseError("no such file", path.string());
    }
    return parse_json_fixture(path, options);
}

std::string to_json_string(const Dataset& dataset) {
    ordered_json doc;
    doc["schema_version"] = 1;
    doc["amount_encoding"] = "token_units";
    doc["pools"] = ordered_json::array();
    for (const auto& pool : dataset.pools) {
        ordered_json obj;
        obj["name"] = pool.name;
        obj["token0"] = {{"symbol", pool.token0.symbol}, {"decimals", pool.token0.decimals}};
        obj["token1"] = {{"symbol", pool.token1.symbol}, {"decimals", pool.token1.decimals}};
        obj["fee_ppm"] = pool.fee_ppm;
        obj["tvl_usd"] = format_double(pool.tvl_usd);
        obj["volume_usd"] = format_double(pool.volume_usd);
        obj["tx_count"] = pool.tx_count;
        doc["pools"].push_back(std::move(obj));
    }
    doc["events"] = ordered_json::array();
    for (const auto& ev : dataset.events) {
        doc["events"].push_back(event_to_json(ev));
    }
    return doc.dump(2) + "\n";
}

void write_json(const Dataset& dataset, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw std::runtime_error("cannot write " + path.string());
    }
    out << to_json_string(dataset);
}

void write_csv(const Dataset& dataset, const std::filesystem::path& directory) {
    std::filesystem::create_directories(directory);
    {
        std::ofstream out(directory / "pools.csv", std::ios::binary);
        if (!out) {
            throw std::runtime_error("cannot write " + (directory / "pools.csv").string());
        }
        for (std::size_t i = 0; i < kPoolColumns.size(); ++i) {
            out << (i ? "," : "") << kPoolColumns[i];
        }
        out << '\n';
        for (const auto& pool : dataset.pools) {
            out << csv_escape(pool.name) << ',' << csv_escape(pool.token0.symbol) << ','
                << pool.token0.decimals << ',' << csv_escape(pool.token1.symbol) << ','
                << pool.token1.decimals << ',' << pool.fee_ppm << ','
                << format_double(pool.tvl_usd) << ',' << format_double(pool.volume_usd) << ','
                << pool.tx_count << '\n';
        }
    }
    {
        std::ofstream out(directory / "events.csv", std::ios::binary);
        if (!out) {
            throw std::runtime_error("cannot write " + (directory / "events.csv").string());
        }
        for (std::size_t i = 0; i < kEventColumns.size(); ++i) {
            out << (i ? "," : "") << kEventColumns[i];
        }
        out << '\n';
        for (const auto& ev : dataset.events) {
            out << event_csv_row(ev) << '\n';
        }
    }
}

sim::PricePath parse_price_path(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) {
        throw ParseError("cannot open file", file.string());
    }
    sim::PricePath path;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (line_no == 1 && line.rfind("timestamp,", 0) == 0) continue;
        const std::string location = file.string() + ":" + std::to_string(line_no);
        const auto cells = split_csv_line(line);
        if (cells.size() != 3 && cells.size() != 4) {
            throw ParseError("expected timestamp,price,volume_usd[,token1_usd]", location);
        }
        sim::PricePoint point;
        double t = 0.0;
        t = parse_decimal(cells[0], location);
        point.t = static_cast<std::int64_t>(t);
        point.price = parse_decimal(cells[1], location);
        point.volume_usd = parse_decimal(cells[2], location);
        point.token1_usd = cells.size() == 4 ? parse_decimal(cells[3], location) : 1.0;
        if (!(point.price > 0.0) || point.volume_usd < 0.0 || !(point.token1_usd > 0.0)) {
            throw ParseError("price and token1_usd must be positive, volume non-negative",
                             location);
        }
        if (!path.points.empty() && point.t <= path.points.back().t) {
            throw ParseError("timestamps must be strictly increasing", location);
        }
        path.points.push_back(point);
    }
    if (path.points.empty()) {
        throw ParseError("price path holds no samples", file.string());
    }
    return path;
}

void write_price_path(const sim::PricePath& path, const std::filesystem::path& file) {
    std::ofstream out(file, std::ios::binary);
    if (!out) {
        throw std::runtime_error("cannot write " + file.string());
    }
    out << "timestamp,price,volume_usd,token1_usd\n";
    for (const auto& point : path.points) {
        out << point.t << ',' << format_double(point.price) << ','
            << format_double(point.volume_usd) << ',' << format_double(point.token1_usd)
            << '\n';
    }
}

Dataset apply_filters(const Dataset& dataset, const DatasetFilter& filter) {
    if (filter.block_lo >= filter.block_hi) {
        throw std::domain_error("apply_filters: block_lo must be below block_hi");
    }
    Dataset out;
    std::set<std::string> kept_pools;
    for (const auto& pool : dataset.pools) {
        if (pool.tvl_usd < filter.min_tvl_usd) continue;
        if (filter.pool_allowlist && !filter.pool_allowlist->count(pool.name)) continue;
        kept_pools.insert(pool.name);
        out.pools.push_back(pool);
    }

    std::vector<const ledger::LiquidityEvent*> in_window;
    for (const auto& ev : dataset.events) {
        if (!kept_pools.count(ev.pool_id)) continue;
        if (ev.block < filter.block_lo || ev.block > filter.block_hi) continue;
        in_window.push_back(&ev);
    }

    std::set<std::string> dropped_positions;
    if (filter.closed_only) {
        // a position counts as closed when its in-window deposits are fully
        // withdrawn in-window; unmatched positions (either direction) are
        // dropped whole, since they cannot be reconstructed from the window
        std::map<std::string, std::pair<double, double>> balance;  // deposited, withdrawn
        for (const auto* ev : in_window) {
            auto& [deposited, withdrawn] = balance[ev->position_id];
            if (ev->kind == ledger::EventKind::deposit) deposited += ev->liquidity_delta;
            if (ev->kind == ledger::EventKind::withdraw) withdrawn += ev->liquidity_delta;
        }
        for (const auto& [id, b] : balance) {
            const auto& [deposited, withdrawn] = b;
            const double scale = std::max({deposited, withdrawn, 1e-300});
            if (deposited <= 0.0 || std::abs(deposited - withdrawn) > 1e-9 * scale) {
                dropped_positions.insert(id);
            }
        }
    }

    for (const auto* ev : in_window) {
        if (dropped_positions.count(ev->position_id)) continue;
        out.events.push_back(*ev);
    }
    return out;
}

FieldMap FieldMap::from_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw ParseError("cannot open field map", path.string());
    }
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("invalid JSON: ") + e.what(), path.string());
    }
    FieldMap map;
    for (const auto& [key, value] : doc.items()) {
        if (!value.is_string()) {
            throw ParseError("field map values must be strings", path.string());
        }
        map.overrides[key] = value.get<std::string>();
    }
    return map;
}

std::string graphql_query(const FieldMap& f) {
    std::ostringstream q;
    q << "query Window($blockLo: Int!, $blockHi: Int!, $cursorBlock: Int!, $cursorLog: Int!, "
         "$first: Int!) { "
      << f("pools") << " { " << f("name") << " " << f("token0") << " { " << f("symbol") << " "
      << f("decimals") << " } " << f("token1") << " { " << f("symbol") << " " << f("decimals")
      << " } " << f("fee_ppm") << " " << f("tvl_usd") << " " << f("volume_usd") << " "
      << f("tx_count") << " } " << f("events")
      << "(blockLo: $blockLo, blockHi: $blockHi, cursorBlock: $cursorBlock, cursorLog: "
         "$cursorLog, first: $first) { "
      << f("position_id") << " " << f("owner") << " " << f("pool") << " " << f("kind") << " "
      << f("block") << " " << f("log_index") << " " << f("timestamp") << " " << f("amount0")
      << " " << f("amount1") << " " << f("usd_value") << " " << f("price_token0_usd") << " "
      << f("price_token1_usd") << " " << f("liquidity") << " " << f("tick_lower") << " "
      << f("tick_upper") << " " << f("price_lower") << " " << f("price_upper") << " } }";
    return q.str();
}

Dataset fetch_remote(const std::string& endpoint, std::uint64_t block_lo, std::uint64_t block_hi,
                     const RemoteOptions& options, FetchStats* stats) {
    if (options.page_size < 1 || options.page_size > 1000) {
        throw std::domain_error("fetch_remote: page_size must be in [1, 1000]");
    }
    if (block_lo > block_hi) {
        throw std::domain_error("fetch_remote: block_lo must not exceed block_hi");
    }

    // split "http://host:port" + path
    std::string base = endpoint;
    std::string request_path = "/";
    const auto scheme_pos = base.find("://");
    if (scheme_pos != std::string::npos) {
        const auto path_pos = base.find('/', scheme_pos + 3);
        if (path_pos != std::string::npos) {
            request_path = base.substr(path_pos);
            base = base.substr(0, path_pos);
        }
    }
    httplib::Client client(base);
    client.set_connection_timeout(10);
    client.set_read_timeout(30);

    const std::string query = graphql_query(options.fields);
    const FieldMap& f = options.fields;

    Dataset dataset;
    std::map<std::string, const PoolDescriptor*> by_name;
    bool have_pools = false;
    std::int64_t cursor_block = -1;
    std::int64_t cursor_log = -1;
    std::vector<json> raw_events;

    while (true) {
        json body;
        body["query"] = query;
        body["variables"] = {{"blockLo", block_lo},
                             {"blockHi", block_hi},
                             {"cursorBlock", cursor_block},
                             {"cursorLog", cursor_log},
                             {"first", options.page_size}};

        httplib::Result res;
        int backoff_ms = options.retry.initial_backoff_ms;
        for (int attempt = 1;; ++attempt) {
            if (stats) ++stats->requests;
            res = client.Post(request_path, body.dump(), "application/json");
            const bool transient =
                !res || res->status == 429 || (res->status >= 500 && res->status < 600);
            if (!transient) break;
            if (attempt >= options.retry.max_attempts) {
                throw TransportError("fetch_remote: request failed after " +
                                     std::to_string(attempt) + " attempts (" +
                                     (res ? "HTTP " + std::to_string(res->status)
                                          : std::string("no response")) +
                                     ")");
            }
            if (stats) ++stats->retries;
            std::this_thread::sleep_for(std::chrono::milliseconds(backoff_ms));
            backoff_ms = std::min(static_cast<int>(backoff_ms * options.retry.backoff_factor),
                                  options.retry.max_backoff_ms);
        }
        if (res->status != 200) {
            throw TransportError("fetch_remote: HTTP " + std::to_string(res->status));
        }

        const std::string cursor_text = "(cursor block=" + std::to_string(cursor_block) +
                                        ", log=" + std::to_string(cursor_log) + ")";
        json doc;
        try {
            doc = json::parse(res->body);
        } catch (const json::parse_error& e) {
            throw DecodeError("fetch_remote: malformed page " + cursor_text + ": " + e.what());
        }
        if (!doc.is_object() || !doc.contains("data") || !doc.at("data").is_object()) {
            throw DecodeError("fetch_remote: response lacks data object " + cursor_text);
        }
        const json& data = doc.at("data");
        if (!data.contains(f("events")) || !data.at(f("events")).is_array()) {
            throw DecodeError("fetch_remote: response lacks events array " + cursor_text);
        }
        if (!have_pools) {
            if (!data.contains(f("pools")) || !data.at(f("pools")).is_array()) {
                throw DecodeError("fetch_remote: response lacks pools array " + cursor_text);
            }
            const json& pools = data.at(f("pools"));
            for (std::size_t i = 0; i < pools.size(); ++i) {
                const std::string location = "remote pools[" + std::to_string(i) + "]";
                try {
                    dataset.pools.push_back(parse_pool(pools[i], f, location));
                } catch (const ParseError& e) {
                    throw DecodeError(std::string("fetch_remote: ") + e.what() + " " +
                                      cursor_text);
                }
            }
            for (const auto& pool : dataset.pools) {
                if (by_name.count(pool.name)) {
                    throw DecodeError("fetch_remote: duplicate pool '" + pool.name + "' " +
                                      cursor_text);
                }
                by_name[pool.name] = &pool;
            }
            have_pools = true;
        }

        const json& events = data.at(f("events"));
        for (const auto& ev : events) {
            std::int64_t block = 0;
            std::int64_t log_index = 0;
            try {
                block = ev.at(f("block")).get<std::int64_t>();
                log_index = ev.at(f("log_index")).get<std::int64_t>();
            } catch (const json::exception&) {
                throw DecodeError("fetch_remote: event lacks cursor keys " + cursor_text);
            }
            if (std::tie(block, log_index) <= std::tie(cursor_block, cursor_log)) {
                throw DecodeError("fetch_remote: page not ordered past cursor " + cursor_text);
            }
            cursor_block = block;
            cursor_log = log_index;
            raw_events.push_back(ev);
        }
        if (events.size() < options.page_size) {
            break;
        }
    }

    for (std::size_t i = 0; i < raw_events.size(); ++i) {
        const std::string location = "remote events[" + std::to_string(i) + "]";
        try {
            dataset.events.push_back(parse_event(raw_events[i], f, by_name,
                                                 /*raw_base_units=*/false, options.parse,
                                                 location));
        } catch (const ParseError& e) {
            throw DecodeError(std::string("fetch_remote: ") + e.what());
        }
    }
    return dataset;
}

}  // namespace ammlab::ingest
