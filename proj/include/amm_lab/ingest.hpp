#pragma once

#include "amm_lab/position_ledger.hpp"
#include "amm_lab/strategy_sim.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

namespace ammlab::ingest {

struct TokenId {
    std::string symbol;
    int decimals = 18;
};

/// Pool metadata. The canonical name follows the token0-token1-feeTier
/// convention (e.g. DAI-USDC-500 for the 0.05% pool).
struct PoolDescriptor {
    std::string name;
    TokenId token0;
    TokenId token1;
    std::uint32_t fee_ppm = 0;
    double tvl_usd = 0.0;
    double volume_usd = 0.0;
    std::uint64_t tx_count = 0;
};

struct Dataset {
    std::vector<PoolDescriptor> pools;
    std::vector<ledger::LiquidityEvent> events;
};

/// Dataset filters: minimum pool TVL, inclusive block window, and the
/// closed-positions-only rule.
struct DatasetFilter {
    double min_tvl_usd = 10'000.0;
    std::uint64_t block_lo = 14'691'320;
    std::uint64_t block_hi = 19'560'244;
    bool closed_only = true;
    std::optional<std::set<std::string>> pool_allowlist;
};

class ParseError : public std::runtime_error {
  public:
    ParseError(const std::string& message, std::string location)
        : std::runtime_error(location + ": " + message), location_(std::move(location)) {}
    const std::string& location() const { return location_; }

  private:
    std::string location_;
};

class ReferentialError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

class TransportError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

class DecodeError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// USD price series of a numeraire token, used to derive event quotes when
/// a fixture carries only pool prices.
struct NumeraireConfig {
    std::string symbol;
    std::vector<std::pair<std::int64_t, double>> series;  ///< (t, usd), ascending t

    double price_at(std::int64_t t) const;
};

struct ParseOptions {
    std::optional<NumeraireConfig> numeraire;
};

/// Loads a dataset from a JSON fixture file or from a directory holding the
/// CSV pair pools.csv/events.csv. Every record is validated; malformed rows
/// raise ParseError with their location, unknown pool references raise
/// ReferentialError.
Dataset parse_fixture(const std::filesystem::path& path, const ParseOptions& options = {});

/// Canonical JSON serialization: fixed key order, continuous quantities as
/// shortest round-trip decimal strings. parse_fixture(write_json(d)) == d.
void write_json(const Dataset& dataset, const std::filesystem::path& path);
std::string to_json_string(const Dataset& dataset);

/// CSV pair with a fixed column order, written into the given directory.
void write_csv(const Dataset& dataset, const std::filesystem::path& directory);

/// Price-path CSV: header `timestamp,price,volume_usd,token1_usd` (the last
/// column optional, defaulting to 1), one sample per row.
sim::PricePath parse_price_path(const std::filesystem::path& path);
void write_price_path(const sim::PricePath& path, const std::filesystem::path& file);

/// Applies the dataset filters. Pure selection: surviving records are
/// unchanged and the operation is idempotent.
Dataset apply_filters(const Dataset& dataset, const DatasetFilter& filter);

/// Maps logical field names onto the wire names served by a remote
/// endpoint. Unmapped names pass through unchanged.
struct FieldMap {
    std::map<std::string, std::string> overrides;

    std::string operator()(const std::string& logical) const {
        auto it = overrides.find(logical);
        return it == overrides.end() ? logical : it->second;
    }

    static FieldMap from_file(const std::filesystem::path& path);
};

struct RetryPolicy {
    int max_attempts = 4;
    int initial_backoff_ms = 100;
    double backoff_factor = 2.0;
    int max_backoff_ms = 2000;
};

struct RemoteOptions {
    std::size_t page_size = 1000;
    RetryPolicy retry;
    FieldMap fields;
    ParseOptions parse;
};

struct FetchStats {
    std::size_t requests = 0;
    std::size_t retries = 0;
};

/// Fetches a dataset from a subgraph-style endpoint by POSTing a GraphQL
/// query and paginating on a (block, log_index) cursor until the inclusive
/// block window is exhausted. Transient failures are retried with capped
/// exponential backoff; the result equals a single-shot fetch.
Dataset fetch_remote(const std::string& endpoint, std::uint64_t block_lo, std::uint64_t block_hi,
                     const RemoteOptions& options = {}, FetchStats* stats = nullptr);

/// The GraphQL document fetch_remote posts, with field names resolved
/// through the map.
std::string graphql_query(const FieldMap& fields);

}  // namespace ammlab::ingest
