#pragma once

#include <cstdlib>
#include <memory>
#include <utility>
#include <vector>

#include "batchsched/instance.hpp"
#include "batchsched/rng.hpp"

namespace fixtures {

using batchsched::Instance;

/// Instance with the given schedules; setup effort 1 + |i - j| off the diagonal.
inline Instance make(int num_types, std::vector<std::vector<std::pair<int, double>>> schedules, int capacity,
                     std::vector<int> initial, double pas_time, double horizon = 1e6, double day = 86400.0) {
    Instance inst;
    inst.num_types = num_types;
    inst.setup_matrix.assign(static_cast<std::size_t>(num_types), std::vector<double>(static_cast<std::size_t>(num_types), 0.0));
    for (int i = 0; i < num_types; ++i)
        for (int j = 0; j < num_types; ++j)
            if (i != j) inst.setup_matrix[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = 1.0 + std::abs(i - j);
    inst.pas_proc_time = pas_time;
    for (auto& s : schedules) {
        batchsched::FasSchedule f;
        for (auto [type, proc] : s) f.entries.push_back({type, proc});
        inst.fas.push_back(std::move(f));
    }
    inst.buffer_capacity = capacity;
    inst.initial_buffer = std::move(initial);
    inst.horizon = horizon;
    inst.day_window = day;
    return inst;
}

inline std::shared_ptr<const Instance> share(Instance inst) { return std::make_shared<const Instance>(std::move(inst)); }

/// Random tiny instance with integer times: <= 3 types, <= 2 FAS, <= 12 products.
inline Instance random_tiny(std::uint64_t seed) {
    batchsched::CounterRng rng(seed, 77);
    const int types = static_cast<int>(rng.uniform_int(2, 3));
    const int stations = static_cast<int>(rng.uniform_int(1, 2));
    const int products = static_cast<int>(rng.uniform_int(4, 12));
    std::vector<std::vector<std::pair<int, double>>> sched(static_cast<std::size_t>(stations));
    for (int i = 0; i < products; ++i) {
        const auto k = static_cast<std::size_t>(i % stations);
        sched[k].emplace_back(static_cast<int>(rng.uniform_int(0, types - 1)), static_cast<double>(rng.uniform_int(1, 6)));
    }
    const int capacity = static_cast<int>(rng.uniform_int(2, 5));
    std::vector<int> initial(static_cast<std::size_t>(types), 0);
    const int fill = static_cast<int>(rng.uniform_int(0, capacity / 2));
    for (int i = 0; i < fill; ++i) ++initial[static_cast<std::size_t>(rng.uniform_int(0, types - 1))];
    Instance inst = make(types, std::move(sched), capacity, std::move(initial), static_cast<double>(rng.uniform_int(1, 3)));
    for (int i = 0; i < types; ++i)
        for (int j = 0; j < types; ++j)
            if (i != j)
                inst.setup_matrix[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] =
                    static_cast<double>(rng.uniform_int(1, 9));
    return inst;
}

} // namespace fixtures
