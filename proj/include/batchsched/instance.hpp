#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace batchsched {

/// Dense 0-based pre-product type id.
using ProductType = int;

struct FasEntry {
    ProductType type = 0;
    double proc_time = 0.0; ///< seconds

    bool operator==(const FasEntry&) const = default;
};

/// One final assembly station and its fixed production sequence.
struct FasSchedule {
    std::vector<FasEntry> entries;

    bool operator==(const FasSchedule&) const = default;
};

/// Static data of a two-stage line: one preassembly station (PAS) feeding a
/// central buffer that several final assembly stations (FAS) draw from.
///
/// Setup effort is a dimensionless cost; it consumes no simulation time.
struct Instance {
    int num_types = 8;
    /// setup_matrix[from][to]; zero diagonal.
    std::vector<std::vector<double>> setup_matrix;
    double pas_proc_time = 1.0; ///< seconds per pre-product, all types
    std::vector<FasSchedule> fas;
    int buffer_capacity = 1;
    std::vector<int> initial_buffer; ///< per type
    double horizon = 604800.0;       ///< seconds
    double day_window = 86400.0;     ///< seconds

    bool operator==(const Instance&) const = default;

    /// Units of each type demanded over all FAS schedules.
    std::vector<int> total_demand() const;
    int total_products() const;
    /// Mean off-diagonal setup effort.
    double mean_setup_effort() const;
};

/// Every violated invariant, human readable. Empty means valid.
std::vector<std::string> validate(const Instance& instance);

/// Throws ValidationError listing all violations if `instance` is invalid.
void require_valid(const Instance& instance);

enum class FasRateMode { symmetric, asymmetric };

/// Parameters of the seeded synthetic instance generator.
///
/// Each FAS is kept busy over the whole horizon, so the aggregate consumption
/// rate is `total_demand / horizon`. The PAS must be at least 10% faster than
/// that (`horizon >= 1.1 * total_demand * pas_proc_time`), otherwise the
/// generator refuses with InfeasibleError.
struct GeneratorParams {
    std::uint64_t seed = 1;
    int num_types = 8;
    int num_fas = 4;
    int total_demand = 600;
    /// Type weights follow 1/(rank+1)^type_skew; 0 gives a uniform mix.
    double type_skew = 0.5;
    /// Integer-valued off-diagonal setup efforts drawn from [setup_min, setup_max].
    double setup_min = 2.0;
    double setup_max = 20.0;
    int buffer_capacity = 150;
    /// Fraction of the buffer filled at time 0 with the earliest demanded units.
    double initial_fill = 0.5;
    double pas_proc_time = 35.0;
    double horizon = 24150.0;
    double day_window = 3450.0;
    FasRateMode fas_mode = FasRateMode::symmetric;
    /// asymmetric mode: per-FAS demand share drawn from [1 - spread, 1 + spread].
    double fas_share_spread = 0.3;
    /// Relative spread of per-entry FAS processing times (0 = constant).
    double fas_time_jitter = 0.2;
    /// FAS schedules are runs of one type; run length uniform in [1, max_run_length].
    int max_run_length = 6;

    /// ~600 products over a compressed week (day_window = horizon / 7).
    static GeneratorParams desk(std::uint64_t seed);
    /// ~15000 products over one real working week.
    static GeneratorParams full(std::uint64_t seed);
};

/// Deterministic in `params`. The result passes validate(), every type has
/// nonzero demand, and every FAS schedule mixes at least two types.
Instance generate(const GeneratorParams& params);

/// Schema-versioned JSON text.
std::string to_json_text(const Instance& instance);
/// Throws ParseError (with byte position) on malformed text and
/// ValidationError on schema or invariant violations.
Instance from_json_text(const std::string& text);

void save(const Instance& instance, const std::filesystem::path& path);
Instance load(const std::filesystem::path& path);

inline constexpr int kInstanceSchemaVersion = 1;

} // namespace batchsched
