#include "batchsched/curriculum.hpp"

#include "batchsched/error.hpp"
#include "io_util.hpp"
#include "json.hpp"

namespace batchsched {

using json = nlohmann::json;

std::vector<std::string> validate(const CurriculumSpec& spec) {
    std::vector<std::string> out;
    if (spec.tasks.empty()) out.emplace_back("curriculum has no tasks");
    if (!(spec.transition_threshold > 0.0)) out.emplace_back("transition_threshold must be > 0");
    if (!(spec.final_threshold > 0.0)) out.emplace_back("final_threshold must be > 0");
    if (spec.final_threshold > spec.transition_threshold)
        out.emplace_back("final_threshold must not exceed transition_threshold");
    if (spec.window < 1) out.emplace_back("window must be >= 1");
    for (std::size_t i = 0; i < spec.tasks.size(); ++i) {
        const auto& t = spec.tasks[i];
        if (t.batch_size < 1) out.push_back("task " + std::to_string(i + 1) + ": batch_size must be >= 1");
        if (t.alpha_fraction < 0.0 || t.alpha_fraction > 1.0)
            out.push_back("task " + std::to_string(i + 1) + ": alpha_fraction must lie in [0, 1]");
    }
    return out;
}

CurriculumSpec curriculum_a(int b) {
    if (b < 1) throw ValidationError("batch size must be >= 1");
    CurriculumSpec s;
    s.id = "a";
    s.tasks = {
        {MaskMode::easy, 0.0, b},
        {MaskMode::normal, 0.0, b},
        {MaskMode::normal, 1.0, b},
    };
    return s;
}

CurriculumSpec curriculum_b() {
    CurriculumSpec s;
    s.id = "b";
    s.tasks = {
        {MaskMode::easy, 0.0, 10},   {MaskMode::normal, 0.0, 10}, {MaskMode::normal, 0.2, 10},
        {MaskMode::normal, 0.4, 10}, {MaskMode::normal, 0.6, 10}, {MaskMode::normal, 0.8, 10},
        {MaskMode::normal, 1.0, 10},
    };
    return s;
}

CurriculumSpec curriculum_c() {
    CurriculumSpec s;
    s.id = "c";
    s.tasks = {
        {MaskMode::easy, 0.0, 20},   {MaskMode::normal, 0.0, 20}, {MaskMode::normal, 1.0, 20},
        {MaskMode::normal, 1.0, 18}, {MaskMode::normal, 1.0, 16}, {MaskMode::normal, 1.0, 14},
        {MaskMode::normal, 1.0, 12}, {MaskMode::normal, 1.0, 10},
    };
    return s;
}

CurriculumSpec curriculum_by_name(const std::string& name, int batch_size) {
    if (name == "a") return curriculum_a(batch_size);
    if (name == "b") return curriculum_b();
    if (name == "c") return curriculum_c();
    return load_curriculum(name);
}

std::string to_json_text(const CurriculumSpec& spec) {
    json j;
    j["id"] = spec.id;
    j["transition_threshold"] = spec.transition_threshold;
    j["final_threshold"] = spec.final_threshold;
    j["window"] = spec.window;
    json tasks = json::array();
    for (const auto& t : spec.tasks) {
        tasks.push_back({{"mask", to_string(t.mask_mode)}, {"alpha_fraction", t.alpha_fraction}, {"batch_size", t.batch_size}});
    }
    j["tasks"] = std::move(tasks);
    return j.dump(2) + "\n";
}

CurriculumSpec curriculum_from_json_text(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ParseError("curriculum parse error at byte " + std::to_string(e.byte) + ": " + e.what());
    }
    CurriculumSpec s;
    try {
        s.id = j.value("id", std::string("custom"));
        s.transition_threshold = j.value("transition_threshold", 100.0);
        s.final_threshold = j.value("final_threshold", 15.0);
        s.window = j.value("window", 100);
        for (const auto& t : j.at("tasks")) {
            s.tasks.push_back({mask_mode_from_string(t.at("mask").get<std::string>()),
                               t.at("alpha_fraction").get<double>(), t.at("batch_size").get<int>()});
        }
    } catch (const json::exception& e) {
        throw ValidationError(std::string("curriculum schema violation: ") + e.what());
    }
    const auto bad = validate(s);
    if (!bad.empty()) {
        std::string msg = "invalid curriculum:";
        for (const auto& b : bad) msg += "\n  - " + b;
        throw ValidationError(msg);
    }
    return s;
}

CurriculumSpec load_curriculum(const std::filesystem::path& path) {
    return curriculum_from_json_text(detail::read_text_file(path));
}

double CurriculumState::mean() const {
    if (ring_.empty()) return 0.0;
    double sum = 0.0;
    for (double v : ring_) sum += v;
    return sum / static_cast<double>(ring_.size());
}

void CurriculumState::push(double idle_sum) {
    ++episodes_in_task_;
    if (static_cast<int>(ring_.size()) < window_) {
        ring_.push_back(idle_sum);
        return;
    }
    ring_[head_] = idle_sum;
    head_ = (head_ + 1) % ring_.size();
}

void CurriculumState::advance() {
    ++task_index_;
    episodes_in_task_ = 0;
    ring_.clear();
    head_ = 0;
}

Decision on_episode_end(CurriculumState& state, const CurriculumSpec& spec, double episode_idle_sum) {
    if (episode_idle_sum < 0.0) throw UsageError("episode idle sum must be >= 0");
    if (state.finished()) return {Decision::Kind::finished, std::nullopt};
    state.push(episode_idle_sum);
    if (!state.full()) return {};
    const double mean = state.mean();
    const bool last = state.task_index() + 1 >= static_cast<int>(spec.tasks.size());
    if (!last) {
        if (mean < spec.transition_threshold) {
            state.advance();
            return {Decision::Kind::advance, spec.tasks[static_cast<std::size_t>(state.task_index())]};
        }
        return {};
    }
    if (mean < spec.final_threshold) {
        state.mark_finished();
        return {Decision::Kind::finished, std::nullopt};
    }
    return {};
}

} // namespace batchsched
