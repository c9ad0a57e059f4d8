#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "batchsched/env.hpp"

namespace batchsched {

struct TaskSpec {
    MaskMode mask_mode = MaskMode::normal;
    double alpha_fraction = 0.0; ///< multiplier of the full setup penalty factor
    int batch_size = 50;

    bool operator==(const TaskSpec&) const = default;
};

/// Ordered training tasks and the idle-time conditions that move between them.
struct CurriculumSpec {
    std::string id = "custom";
    std::vector<TaskSpec> tasks;
    double transition_threshold = 100.0; ///< seconds of idle per episode, window mean
    double final_threshold = 15.0;
    int window = 100; ///< episodes

    bool operator==(const CurriculumSpec&) const = default;
};

/// Empty when the curriculum is usable.
std::vector<std::string> validate(const CurriculumSpec& spec);

/// Base curriculum: easy mask, then normal mask, then the full setup penalty.
CurriculumSpec curriculum_a(int batch_size);
/// b = 10 throughout; the setup penalty ramps 0.2, 0.4, ..., 1.0 after the two mask tasks.
CurriculumSpec curriculum_b();
/// Curriculum A at b = 20, then b shrinks by 2 per task down to 10.
CurriculumSpec curriculum_c();

/// Resolves "a" (needs batch_size), "b", "c" or a path to a curriculum file.
CurriculumSpec curriculum_by_name(const std::string& name, int batch_size);

/// JSON file: {"id": ..., "transition_threshold": 100, "final_threshold": 15,
/// "window": 100, "tasks": [{"mask": "easy", "alpha_fraction": 0, "batch_size": 50}, ...]}
std::string to_json_text(const CurriculumSpec& spec);
CurriculumSpec curriculum_from_json_text(const std::string& text);
CurriculumSpec load_curriculum(const std::filesystem::path& path);

class CurriculumState {
public:
    explicit CurriculumState(int window = 100) : window_(window) { ring_.reserve(static_cast<std::size_t>(window)); }

    int task_index() const noexcept { return task_index_; }
    int episodes_in_task() const noexcept { return episodes_in_task_; }
    bool finished() const noexcept { return finished_; }
    std::size_t filled() const noexcept { return ring_.size(); }
    bool full() const noexcept { return static_cast<int>(ring_.size()) >= window_; }
    /// Arithmetic mean of the stored idle sums (0 when empty).
    double mean() const;

    void push(double idle_sum);
    void advance();
    void mark_finished() { finished_ = true; }

private:
    int window_;
    int task_index_ = 0;
    int episodes_in_task_ = 0;
    bool finished_ = false;
    std::vector<double> ring_;
    std::size_t head_ = 0;
};

struct Decision {
    enum class Kind { stay, advance, finished };
    Kind kind = Kind::stay;
    std::optional<TaskSpec> next; ///< set for advance
};

/// Records one episode's idle sum for the current task. Advancing clears the
/// window, so every transition is judged on episodes of the task itself.
Decision on_episode_end(CurriculumState& state, const CurriculumSpec& spec, double episode_idle_sum);

} // namespace batchsched
