#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "sphere_oep/nonlinearity.hpp"

namespace sphere_oep {

inline constexpr std::string_view tool_version = "0.4.0";

/// FNV-1a (64 bit) of the compact JSON dump, as 16 hex digits.
std::string config_hash(const nlohmann::json& config);

/// Accepts either the descriptor string `affine:a,b` or the object form.
Nonlinearity nonlinearity_from_json(const nlohmann::json& j);

// ---------------------------------------------------------------------------
// Golden values

struct GoldenKey {
    std::string f;             // normalized descriptor
    double M = 1.0;
    std::optional<double> R;   // absent for quantities that depend on M only
    std::string quantity;

    auto operator<=>(const GoldenKey&) const = default;
};

struct GoldenEntry {
    double value = 0.0;
    double tolerance = 0.0;
    std::string oracle;
    std::string timestamp;  // ISO 8601, UTC
};

class GoldenStore {
public:
    /// $SPHERE_OEP_GOLDEN if set, else golden/golden.json in the source tree.
    static std::string default_path();
    /// A missing file gives an empty store. Throws DomainError on malformed entries.
    static GoldenStore load(const std::string& path);
    void save(const std::string& path) const;

    /// Throws DomainError when the oracle description is empty.
    void insert(GoldenKey key, GoldenEntry entry);
    std::optional<GoldenEntry> find(const GoldenKey& key) const;

    bool empty() const { return entries_.empty(); }
    std::size_t size() const { return entries_.size(); }
    const std::map<GoldenKey, GoldenEntry>& entries() const { return entries_; }

private:
    std::map<GoldenKey, GoldenEntry> entries_;
};

/// Recomputes a stored quantity: r1, r2, grad_r1, grad_r2 (need R), tau0, h, s_M.
double measure_golden(const GoldenKey& key, double tol = 1e-12);

/// UTC timestamp for new golden entries.
std::string utc_timestamp();

// ---------------------------------------------------------------------------
// Subcommands and sweeps

/// Flat JSON object in, flat JSON object of scalars out.
using Subcommand = std::function<nlohmann::json(const nlohmann::json& params)>;

const std::map<std::string, Subcommand>& subcommands();
/// Throws UnknownSubcommand.
nlohmann::json run_subcommand(const std::string& name, const nlohmann::json& params);

using ParameterGrid = std::vector<std::pair<std::string, std::vector<nlohmann::json>>>;

struct SweepTable {
    std::vector<std::string> grid_columns;
    std::vector<std::string> result_columns;
    std::vector<nlohmann::json> points;   // grid values per row
    std::vector<nlohmann::json> results;  // subcommand output per row (empty on failure)
    std::vector<std::string> failures;    // empty string when the row succeeded

    std::size_t size() const { return points.size(); }
};

/// Cartesian product of the grid, each point merged over `base`, run in
/// parallel on up to `threads` workers (0: hardware concurrency). Exceptions
/// become the row's failure text. Throws DomainError on an empty grid and
/// UnknownSubcommand before any work is done.
SweepTable run_sweep(const std::string& subcommand, const nlohmann::json& base, const ParameterGrid& grid,
                     unsigned threads = 0);

/// Header row, then one row per point: grid columns, result columns, failure.
void write_sweep_csv(std::ostream& out, const SweepTable& table);

/// Parses `name=v1,v2,...`, `name=v1;v2;...` and `name=lo:step:hi` (inclusive).
std::pair<std::string, std::vector<nlohmann::json>> parse_grid_axis(std::string_view text);

// ---------------------------------------------------------------------------
// Verification suite

struct CheckResult {
    std::string name;
    bool pass = false;
    double margin = 0.0;  // nonnegative when the check holds
    nlohmann::json detail;
};

struct VerifySummary {
    std::string version{tool_version};
    std::string config_hash;
    std::vector<CheckResult> checks;
    std::vector<std::string> warnings;

    bool all_pass() const;
    int exit_status() const { return all_pass() ? 0 : 1; }
};

/// Built-in configuration, identical to config/default.json.
nlohmann::json default_verify_config();

/// Runs condition, sign, monotonicity, round-trip, model-equality, perturbed
/// PDE and golden checks for every configured nonlinearity. Missing keys take
/// their defaults. In CI mode (config "golden": {"ci": true} or
/// $SPHERE_OEP_CI set) an empty golden store raises Error.
VerifySummary verify_all(const nlohmann::json& config);

void to_json(nlohmann::json& j, const CheckResult& c);
void to_json(nlohmann::json& j, const VerifySummary& s);

}  // namespace sphere_oep
