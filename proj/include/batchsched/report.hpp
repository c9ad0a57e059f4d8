#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "batchsched/experiment.hpp"

namespace batchsched {

/// Column headers of every CSV artifact.
inline constexpr const char* kRunsHeader =
    "batch_size,seed,curriculum,finished,steps_used,task_reached,episodes,illegal_actions,plan_length,"
    "best_idle,best_setup,best_return,best_deadlock,drifted,drift_onset";
inline constexpr const char* kSummaryHeader =
    "batch_size,runs,finished,zero_idle,steps_min,steps_median,steps_avg,steps_max,setup_min,setup_median,"
    "setup_avg,setup_max,setup_std,return_min,return_avg,return_max";
inline constexpr const char* kStepsBoxHeader = "batch_size,seed,steps";
inline constexpr const char* kSetupBoxHeader = "batch_size,seed,setup";
inline constexpr const char* kPolicySpaceHeader =
    "batch_size,mean_plan_length,log10_space_a3,log10_space_a4,log10_space_a5";
inline constexpr const char* kCurvesHeader =
    "batch_size,seed,episode,end_step,task,return,idle,length,setup,termination";
inline constexpr const char* kPlansHeader = "batch_size,seed,step,type,size";

std::string runs_csv(std::span<const RunSummary> runs);
std::string summary_csv(const SweepReport& report);
/// Per-run points of finished runs (steps) and zero-idle plans (setup).
std::string steps_box_csv(std::span<const RunSummary> runs);
std::string setup_box_csv(std::span<const RunSummary> runs);
std::string policy_space_csv(const SweepReport& report);
std::string curves_csv(std::span<const RunResult> runs);
std::string plans_csv(std::span<const RunResult> runs);

/// Parses a file written by runs_csv. Throws ParseError on malformed rows.
std::vector<RunSummary> runs_from_csv(const std::string& text);

/// Files derived from run rows alone: runs.csv, summary.csv, steps_box.csv,
/// setup_box.csv, policy_space.csv.
void write_tables(const std::filesystem::path& dir, std::span<const RunSummary> runs);

/// write_tables plus curves.csv, plans.csv and manifest.json.
void write_report(const std::filesystem::path& dir, const SweepResult& result, const std::string& manifest_json);

} // namespace batchsched
