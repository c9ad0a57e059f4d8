#include "batchsched/instance.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "batchsched/error.hpp"
#include "batchsched/rng.hpp"
#include "io_util.hpp"
#include "json.hpp"

namespace batchsched {

using json = nlohmann::json;

std::vector<int> Instance::total_demand() const {
    std::vector<int> demand(static_cast<std::size_t>(std::max(num_types, 0)), 0);
    for (const auto& station : fas) {
        for (const auto& e : station.entries) {
            if (e.type >= 0 && e.type < num_types) ++demand[static_cast<std::size_t>(e.type)];
        }
    }
    return demand;
}

int Instance::total_products() const {
    int n = 0;
    for (const auto& station : fas) n += static_cast<int>(station.entries.size());
    return n;
}

double Instance::mean_setup_effort() const {
    double sum = 0.0;
    int count = 0;
    for (int i = 0; i < num_types; ++i) {
        for (int j = 0; j < num_types; ++j) {
            if (i == j) continue;
            sum += setup_matrix[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
            ++count;
        }
    }
    return count > 0 ? sum / count : 0.0;
}

std::vector<std::string> validate(const Instance& instance) {
    std::vector<std::string> out;
    auto add = [&](std::string msg) { out.push_back(std::move(msg)); };
    const int n = instance.num_types;

    if (n < 1) add("num_types must be >= 1, got " + std::to_string(n));

    if (static_cast<int>(instance.setup_matrix.size()) != n) {
        add("setup_matrix has " + std::to_string(instance.setup_matrix.size()) + " rows, expected " +
            std::to_string(n));
    } else {
        for (int i = 0; i < n; ++i) {
            const auto& row = instance.setup_matrix[static_cast<std::size_t>(i)];
            if (static_cast<int>(row.size()) != n) {
                add("setup_matrix row " + std::to_string(i) + " has " + std::to_string(row.size()) +
                    " columns, expected " + std::to_string(n));
                continue;
            }
            for (int j = 0; j < n; ++j) {
                const double q = row[static_cast<std::size_t>(j)];
                if (!std::isfinite(q) || q < 0.0) {
                    add("setup_matrix[" + std::to_string(i) + "][" + std::to_string(j) +
                        "] must be a finite non-negative effort, got " + detail::fmt_num(q));
                } else if (i == j && q != 0.0) {
                    add("setup_matrix diagonal [" + std::to_string(i) + "][" + std::to_string(i) +
                        "] must be 0, got " + detail::fmt_num(q));
                }
            }
        }
    }

    if (!(instance.pas_proc_time > 0.0) || !std::isfinite(instance.pas_proc_time))
        add("pas_proc_time must be > 0, got " + detail::fmt_num(instance.pas_proc_time));
    if (instance.buffer_capacity < 1)
        add("buffer_capacity must be >= 1, got " + std::to_string(instance.buffer_capacity));
    if (!(instance.horizon > 0.0)) add("horizon must be > 0");
    if (!(instance.day_window > 0.0)) add("day_window must be > 0");

    if (instance.fas.empty()) add("at least one FAS is required");
    for (std::size_t k = 0; k < instance.fas.size(); ++k) {
        const auto& entries = instance.fas[k].entries;
        for (std::size_t i = 0; i < entries.size(); ++i) {
            const auto& e = entries[i];
            if (e.type < 0 || e.type >= n) {
                add("fas[" + std::to_string(k) + "] entry " + std::to_string(i) + " has type " +
                    std::to_string(e.type) + " outside [0, " + std::to_string(n) + ")");
            }
            if (!(e.proc_time > 0.0) || !std::isfinite(e.proc_time)) {
                add("fas[" + std::to_string(k) + "] entry " + std::to_string(i) +
                    " processing time must be > 0, got " + detail::fmt_num(e.proc_time));
            }
        }
    }

    if (static_cast<int>(instance.initial_buffer.size()) != n) {
        add("initial_buffer has " + std::to_string(instance.initial_buffer.size()) +
            " entries, expected " + std::to_string(n));
    } else {
        long sum = 0;
        for (int t = 0; t < n; ++t) {
            const int c = instance.initial_buffer[static_cast<std::size_t>(t)];
            if (c < 0) add("initial_buffer[" + std::to_string(t) + "] is negative");
            sum += c;
        }
        if (sum > instance.buffer_capacity) {
            add("initial buffer overfilled: " + std::to_string(sum) + " units exceed capacity " +
                std::to_string(instance.buffer_capacity));
        }
    }
    return out;
}

void require_valid(const Instance& instance) {
    const auto violations = validate(instance);
    if (violations.empty()) return;
    std::string msg = "invalid instance:";
    for (const auto& v : violations) msg += "\n  - " + v;
    throw ValidationError(msg);
}

// ---------------------------------------------------------------------------
// Generator

GeneratorParams GeneratorParams::desk(std::uint64_t seed) {
    GeneratorParams p;
    p.seed = seed;
    return p;
}

GeneratorParams GeneratorParams::full(std::uint64_t seed) {
    GeneratorParams p;
    p.seed = seed;
    p.total_demand = 15000;
    p.buffer_capacity = 1500;
    p.pas_proc_time = 35.0;
    p.horizon = 604800.0;
    p.day_window = 86400.0;
    p.max_run_length = 60;
    return p;
}

namespace {

void check_params(const GeneratorParams& p) {
    std::vector<std::string> bad;
    if (p.num_types < 1) bad.emplace_back("num_types must be >= 1");
    if (p.num_fas < 1) bad.emplace_back("num_fas must be >= 1");
    if (p.total_demand < p.num_types) bad.emplace_back("total_demand must cover every type at least once");
    if (!(p.setup_min > 0.0) || p.setup_max < p.setup_min) bad.emplace_back("setup range must be positive and non-empty");
    if (p.buffer_capacity < 1) bad.emplace_back("buffer_capacity must be >= 1");
    if (p.initial_fill < 0.0 || p.initial_fill > 1.0) bad.emplace_back("initial_fill must lie in [0, 1]");
    if (!(p.pas_proc_time > 0.0)) bad.emplace_back("pas_proc_time must be > 0");
    if (!(p.horizon > 0.0)) bad.emplace_back("horizon must be > 0");
    if (!(p.day_window > 0.0)) bad.emplace_back("day_window must be > 0");
    if (p.fas_share_spread < 0.0 || p.fas_share_spread >= 1.0) bad.emplace_back("fas_share_spread must lie in [0, 1)");
    if (p.fas_time_jitter < 0.0 || p.fas_time_jitter >= 1.0) bad.emplace_back("fas_time_jitter must lie in [0, 1)");
    if (p.max_run_length < 1) bad.emplace_back("max_run_length must be >= 1");
    if (p.type_skew < 0.0) bad.emplace_back("type_skew must be >= 0");
    if (!bad.empty()) {
        std::string msg = "invalid generator parameters:";
        for (const auto& b : bad) msg += "\n  - " + b;
        throw ValidationError(msg);
    }
    const double pas_busy = static_cast<double>(p.total_demand) * p.pas_proc_time;
    if (pas_busy * 1.1 > p.horizon) {
        throw InfeasibleError("PAS needs " + detail::fmt_num(pas_busy) + " s to produce " +
                              std::to_string(p.total_demand) + " units; with the required 1.1 slack this exceeds the horizon of " +
                              detail::fmt_num(p.horizon) + " s");
    }
}

ProductType draw_type(CounterRng& rng, const std::vector<double>& cumulative, ProductType exclude) {
    for (;;) {
        const double u = rng.uniform() * cumulative.back();
        const auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
        const auto t = static_cast<ProductType>(std::min<std::ptrdiff_t>(it - cumulative.begin(),
                                                                         static_cast<std::ptrdiff_t>(cumulative.size()) - 1));
        if (t != exclude || cumulative.size() == 1) return t;
    }
}

} // namespace

Instance generate(const GeneratorParams& p) {
    check_params(p);
    CounterRng rng(p.seed, 0x1e57a11cULL);
    const auto n_types = static_cast<std::size_t>(p.num_types);
    const auto n_fas = static_cast<std::size_t>(p.num_fas);

    Instance inst;
    inst.num_types = p.num_types;
    inst.pas_proc_time = p.pas_proc_time;
    inst.buffer_capacity = p.buffer_capacity;
    inst.horizon = p.horizon;
    inst.day_window = p.day_window;

    inst.setup_matrix.assign(n_types, std::vector<double>(n_types, 0.0));
    for (std::size_t i = 0; i < n_types; ++i) {
        for (std::size_t j = 0; j < n_types; ++j) {
            if (i == j) continue;
            inst.setup_matrix[i][j] = static_cast<double>(
                rng.uniform_int(static_cast<std::int64_t>(std::ceil(p.setup_min)),
                                static_cast<std::int64_t>(std::floor(p.setup_max))));
        }
    }

    // Type weights, shuffled so the most frequent type is not always type 0.
    std::vector<std::size_t> rank(n_types);
    std::iota(rank.begin(), rank.end(), 0);
    for (std::size_t i = n_types; i > 1; --i) {
        std::swap(rank[i - 1], rank[static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(i) - 1))]);
    }
    std::vector<double> cumulative(n_types);
    double acc = 0.0;
    for (std::size_t t = 0; t < n_types; ++t) {
        acc += 1.0 / std::pow(static_cast<double>(rank[t] + 1), p.type_skew);
        cumulative[t] = acc;
    }

    // Per-FAS unit counts.
    std::vector<double> share(n_fas, 1.0);
    if (p.fas_mode == FasRateMode::asymmetric) {
        for (auto& s : share) s = rng.uniform(1.0 - p.fas_share_spread, 1.0 + p.fas_share_spread);
    }
    const double share_sum = std::accumulate(share.begin(), share.end(), 0.0);
    std::vector<int> units(n_fas);
    int assigned = 0;
    for (std::size_t k = 0; k < n_fas; ++k) {
        units[k] = static_cast<int>(std::floor(p.total_demand * share[k] / share_sum));
        assigned += units[k];
    }
    for (std::size_t k = 0; assigned < p.total_demand; k = (k + 1) % n_fas, ++assigned) ++units[k];

    // Schedules as alternating single-type runs.
    inst.fas.resize(n_fas);
    for (std::size_t k = 0; k < n_fas; ++k) {
        auto& entries = inst.fas[k].entries;
        ProductType prev = -1;
        while (static_cast<int>(entries.size()) < units[k]) {
            const ProductType t = draw_type(rng, cumulative, prev);
            const auto len = std::min<std::int64_t>(rng.uniform_int(1, p.max_run_length),
                                                    units[k] - static_cast<std::int64_t>(entries.size()));
            for (std::int64_t i = 0; i < len; ++i) entries.push_back({t, 0.0});
            prev = t;
        }
    }

    // Every type must be demanded: overwrite single entries for missing types,
    // taking them from the most frequent type.
    for (;;) {
        const auto demand = inst.total_demand();
        const auto missing = std::find(demand.begin(), demand.end(), 0);
        if (missing == demand.end()) break;
        const auto donor = static_cast<ProductType>(std::max_element(demand.begin(), demand.end()) - demand.begin());
        const auto k = static_cast<std::size_t>(rng.uniform_int(0, p.num_fas - 1));
        auto& entries = inst.fas[k].entries;
        std::vector<std::size_t> donor_pos;
        for (std::size_t i = 0; i < entries.size(); ++i)
            if (entries[i].type == donor) donor_pos.push_back(i);
        if (donor_pos.empty()) continue;
        const auto pick = donor_pos[static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(donor_pos.size()) - 1))];
        entries[pick].type = static_cast<ProductType>(missing - demand.begin());
    }

    // Processing times: each FAS spans the horizon; integer seconds.
    for (std::size_t k = 0; k < n_fas; ++k) {
        auto& entries = inst.fas[k].entries;
        if (entries.empty()) continue;
        const double base = p.horizon / static_cast<double>(entries.size());
        std::vector<double> raw(entries.size());
        for (auto& r : raw) r = base * (1.0 + p.fas_time_jitter * (2.0 * rng.uniform() - 1.0));
        const double scale = p.horizon / std::accumulate(raw.begin(), raw.end(), 0.0);
        for (std::size_t i = 0; i < entries.size(); ++i) {
            entries[i].proc_time = std::max(1.0, std::floor(raw[i] * scale));
        }
    }

    // Initial buffer: the earliest demanded units under uninterrupted FAS
    // operation, ties by FAS index.
    struct Demand {
        double at;
        std::size_t fas;
        ProductType type;
    };
    std::vector<Demand> timeline;
    for (std::size_t k = 0; k < n_fas; ++k) {
        double t = 0.0;
        for (const auto& e : inst.fas[k].entries) {
            timeline.push_back({t, k, e.type});
            t += e.proc_time;
        }
    }
    std::stable_sort(timeline.begin(), timeline.end(), [](const Demand& a, const Demand& b) {
        return a.at < b.at || (a.at == b.at && a.fas < b.fas);
    });
    inst.initial_buffer.assign(n_types, 0);
    const auto fill = std::min<std::size_t>(
        timeline.size(), static_cast<std::size_t>(std::floor(p.initial_fill * p.buffer_capacity)));
    for (std::size_t i = 0; i < fill; ++i) ++inst.initial_buffer[static_cast<std::size_t>(timeline[i].type)];

    require_valid(inst);
    return inst;
}

// ---------------------------------------------------------------------------
// Persistence

std::string to_json_text(const Instance& inst) {
    json j;
    j["schema"] = "batchsched.instance";
    j["schema_version"] = kInstanceSchemaVersion;
    j["num_types"] = inst.num_types;
    j["pas_proc_time"] = inst.pas_proc_time;
    j["buffer_capacity"] = inst.buffer_capacity;
    j["horizon"] = inst.horizon;
    j["day_window"] = inst.day_window;
    j["initial_buffer"] = inst.initial_buffer;
    j["setup_matrix"] = inst.setup_matrix;
    json fas = json::array();
    for (const auto& station : inst.fas) {
        json entries = json::array();
        for (const auto& e : station.entries) entries.push_back(json::array({e.type, e.proc_time}));
        fas.push_back(json{{"entries", std::move(entries)}});
    }
    j["fas"] = std::move(fas);
    return j.dump(1) + "\n";
}

Instance from_json_text(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ParseError("instance parse error at byte " + std::to_string(e.byte) + ": " + e.what());
    }
    Instance inst;
    try {
        if (j.at("schema").get<std::string>() != "batchsched.instance")
            throw ValidationError("not an instance file (schema tag mismatch)");
        const int version = j.at("schema_version").get<int>();
        if (version != kInstanceSchemaVersion)
            throw ValidationError("unsupported instance schema_version " + std::to_string(version));
        inst.num_types = j.at("num_types").get<int>();
        inst.pas_proc_time = j.at("pas_proc_time").get<double>();
        inst.buffer_capacity = j.at("buffer_capacity").get<int>();
        inst.horizon = j.at("horizon").get<double>();
        inst.day_window = j.at("day_window").get<double>();
        inst.initial_buffer = j.at("initial_buffer").get<std::vector<int>>();
        inst.setup_matrix = j.at("setup_matrix").get<std::vector<std::vector<double>>>();
        for (const auto& station : j.at("fas")) {
            FasSchedule s;
            for (const auto& e : station.at("entries")) {
                if (!e.is_array() || e.size() != 2) throw ValidationError("FAS entry must be [type, proc_time]");
                s.entries.push_back({e[0].get<ProductType>(), e[1].get<double>()});
            }
            inst.fas.push_back(std::move(s));
        }
    } catch (const json::exception& e) {
        throw ValidationError(std::string("instance schema violation: ") + e.what());
    }
    require_valid(inst);
    return inst;
}

void save(const Instance& instance, const std::filesystem::path& path) {
    detail::write_text_file(path, to_json_text(instance));
}

Instance load(const std::filesystem::path& path) {
    return from_json_text(detail::read_text_file(path));
}

} // namespace batchsched
