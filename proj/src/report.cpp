#include "batchsched/report.hpp"

#include <sstream>

#include "batchsched/error.hpp"
#include "io_util.hpp"

namespace batchsched {

using detail::fmt_num;

namespace {

std::string opt(const std::optional<Stats>& s, double Stats::*field) {
    return s ? fmt_num((*s).*field) : std::string();
}

std::string opt_std(const std::optional<Stats>& s) {
    return s && s->stddev ? fmt_num(*s->stddev) : std::string();
}

std::vector<std::string> split(const std::string& line, char sep) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == sep) {
            out.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}

} // namespace

std::string runs_csv(std::span<const RunSummary> runs) {
    std::ostringstream os;
    os << kRunsHeader << '\n';
    for (const auto& r : runs) {
        os << r.batch_size << ',' << r.seed << ',' << r.curriculum << ',' << (r.finished ? 1 : 0) << ','
           << r.steps_used << ',' << r.task_reached << ',' << r.episodes << ',' << r.illegal_actions << ','
           << r.plan_length << ',' << fmt_num(r.best_idle) << ',' << fmt_num(r.best_setup) << ','
           << fmt_num(r.best_return) << ',' << (r.best_deadlock ? 1 : 0) << ',' << (r.drifted ? 1 : 0) << ','
           << r.drift_onset << '\n';
    }
    return os.str();
}

std::string summary_csv(const SweepReport& rep) {
    std::ostringstream os;
    os << kSummaryHeader << '\n';
    for (const auto& r : rep.rows) {
        os << r.batch_size << ',' << r.runs << ',' << r.finished << ',' << r.zero_idle << ','
           << opt(r.steps, &Stats::min) << ',' << opt(r.steps, &Stats::median) << ',' << opt(r.steps, &Stats::mean)
           << ',' << opt(r.steps, &Stats::max) << ',' << opt(r.setup, &Stats::min) << ','
           << opt(r.setup, &Stats::median) << ',' << opt(r.setup, &Stats::mean) << ',' << opt(r.setup, &Stats::max)
           << ',' << opt_std(r.setup) << ',' << opt(r.ret, &Stats::min) << ',' << opt(r.ret, &Stats::mean) << ','
           << opt(r.ret, &Stats::max) << '\n';
    }
    return os.str();
}

std::string steps_box_csv(std::span<const RunSummary> runs) {
    std::ostringstream os;
    os << kStepsBoxHeader << '\n';
    for (const auto& r : runs)
        if (r.finished) os << r.batch_size << ',' << r.seed << ',' << r.steps_used << '\n';
    return os.str();
}

std::string setup_box_csv(std::span<const RunSummary> runs) {
    std::ostringstream os;
    os << kSetupBoxHeader << '\n';
    for (const auto& r : runs)
        if (r.best_idle == 0.0) os << r.batch_size << ',' << r.seed << ',' << fmt_num(r.best_setup) << '\n';
    return os.str();
}

std::string policy_space_csv(const SweepReport& rep) {
    std::ostringstream os;
    os << kPolicySpaceHeader << '\n';
    for (const auto& r : rep.rows) {
        const double T = r.mean_plan_length;
        os << r.batch_size << ',' << fmt_num(T) << ',' << fmt_num(policy_space_log10(3, T)) << ','
           << fmt_num(policy_space_log10(4, T)) << ',' << fmt_num(policy_space_log10(5, T)) << '\n';
    }
    return os.str();
}

std::string curves_csv(std::span<const RunResult> runs) {
    std::ostringstream os;
    os << kCurvesHeader << '\n';
    for (const auto& r : runs) {
        for (const auto& e : r.record.episodes) {
            os << r.summary.batch_size << ',' << r.summary.seed << ',' << e.episode << ',' << e.end_step << ','
               << e.task_index + 1 << ',' << fmt_num(e.ret) << ',' << fmt_num(e.idle_sum) << ',' << e.length << ','
               << fmt_num(e.setup_sum) << ',' << to_string(e.termination) << '\n';
        }
    }
    return os.str();
}

std::string plans_csv(std::span<const RunResult> runs) {
    std::ostringstream os;
    os << kPlansHeader << '\n';
    for (const auto& r : runs) {
        int step = 0;
        for (const auto& [type, size] : r.plan.batches)
            os << r.summary.batch_size << ',' << r.summary.seed << ',' << step++ << ',' << type << ',' << size << '\n';
    }
    return os.str();
}

std::vector<RunSummary> runs_from_csv(const std::string& text) {
    std::istringstream is(text);
    std::string line;
    if (!std::getline(is, line)) throw ParseError("runs.csv is empty");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != kRunsHeader) throw ParseError("runs.csv header does not match the expected columns");
    std::vector<RunSummary> out;
    int lineno = 1;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty() || line == "\r") continue;
        const auto f = split(line, ',');
        if (f.size() != 15) throw ParseError("runs.csv line " + std::to_string(lineno) + ": expected 15 fields");
        try {
            RunSummary r;
            r.batch_size = std::stoi(f[0]);
            r.seed = std::stoull(f[1]);
            r.curriculum = f[2];
            r.finished = f[3] == "1";
            r.steps_used = std::stol(f[4]);
            r.task_reached = std::stoi(f[5]);
            r.episodes = std::stol(f[6]);
            r.illegal_actions = std::stol(f[7]);
            r.plan_length = std::stoi(f[8]);
            r.best_idle = std::stod(f[9]);
            r.best_setup = std::stod(f[10]);
            r.best_return = std::stod(f[11]);
            r.best_deadlock = f[12] == "1";
            r.drifted = f[13] == "1";
            r.drift_onset = std::stol(f[14]);
            out.push_back(std::move(r));
        } catch (const std::logic_error&) {
            throw ParseError("runs.csv line " + std::to_string(lineno) + ": malformed number");
        }
    }
    return out;
}

void write_tables(const std::filesystem::path& dir, std::span<const RunSummary> runs) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
    const SweepReport rep = aggregate(runs);
    detail::write_text_file(dir / "runs.csv", runs_csv(runs));
    detail::write_text_file(dir / "summary.csv", summary_csv(rep));
    detail::write_text_file(dir / "steps_box.csv", steps_box_csv(runs));
    detail::write_text_file(dir / "setup_box.csv", setup_box_csv(runs));
    detail::write_text_file(dir / "policy_space.csv", policy_space_csv(rep));
}

void write_report(const std::filesystem::path& dir, const SweepResult& result, const std::string& manifest_json) {
    std::vector<RunSummary> rows;
    for (const auto& r : result.runs) rows.push_back(r.summary);
    write_tables(dir, rows);
    detail::write_text_file(dir / "curves.csv", curves_csv(result.runs));
    detail::write_text_file(dir / "plans.csv", plans_csv(result.runs));
    detail::write_text_file(dir / "manifest.json", manifest_json);
}

} // namespace batchsched
