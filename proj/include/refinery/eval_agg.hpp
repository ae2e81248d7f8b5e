#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "refinery/document.hpp"

namespace refinery {

struct EvalRecord {
    std::string model;
    std::string task;
    std::string prompt;
    std::uint64_t checkpoint_tokens = 0;
    double score = 0.0;
};

struct TaskInfo {
    double random_baseline = 0.0;
    double max_score = 1.0;
    std::string category;
    std::string language;
};

/// Scores indexed by (model, task, checkpoint, prompt) plus per-task metadata.
class EvalGrid {
public:
    using PromptScores = std::map<std::string, double>;
    using Series = std::map<std::uint64_t, PromptScores>;  // checkpoint tokens -> prompts
    using CellKey = std::pair<std::string, std::string>;   // (model, task)

    /// Validates: finite scores, baseline < max for every task, metadata for
    /// every task referenced, no repeated (model, task, prompt, checkpoint).
    EvalGrid(std::span<const EvalRecord> records, std::map<std::string, TaskInfo> tasks);

    const std::map<CellKey, Series>& cells() const noexcept { return cells_; }
    const std::map<std::string, TaskInfo>& tasks() const noexcept { return tasks_; }
    const TaskInfo& task(const std::string& name) const;
    std::set<std::string> models() const;
    std::set<std::string> languages() const;

private:
    std::map<CellKey, Series> cells_;
    std::map<std::string, TaskInfo> tasks_;
};

/// Prompt-aggregated (max over prompts) series per (model, task), ordered by checkpoint.
using AggregatedScores = std::map<EvalGrid::CellKey, std::vector<std::pair<std::uint64_t, double>>>;

AggregatedScores prompt_aggregate(const EvalGrid& grid);

/// (score - baseline) / (max - baseline), clamped to [0, 1].
double rescale(double score, double baseline, double max_score);

struct CategoryScore {
    std::string category;
    double rescaled = 0.0;
};

/// Mean of per-category means. Throws ContractError when empty.
double language_score(std::span<const CategoryScore> scores);

/// model -> language -> score
using LanguageScores = std::map<std::string, std::map<std::string, double>>;

/// Final-checkpoint language scores over `selected` tasks (all tasks when
/// nullopt). Languages without any selected task are skipped and listed in
/// `excluded` when provided.
LanguageScores final_language_scores(const EvalGrid& grid, const std::optional<std::set<std::string>>& selected,
                                     std::vector<std::string>* excluded = nullptr);

/// Ranks with 1 = highest value; tied values share the mean of the ranks they occupy.
std::vector<double> descending_ranks(std::span<const double> values);

struct MultilingualScores {
    std::vector<std::string> models;  // sorted by name
    std::map<std::string, double> average_language_score;
    std::map<std::string, double> average_rank;
    std::map<std::string, double> borda_points;
    std::vector<std::string> by_average_score;  // best first, ties by name
    std::vector<std::string> by_average_rank;
    std::vector<std::string> by_borda;
};

/// Average language score, average per-language rank and Borda count with
/// languages as electorates (m-1 points for the best of m models down to 0).
/// Needs >= 2 models and every (model, language) cell.
MultilingualScores multilingual_scores(const LanguageScores& scores);

/// model -> language -> task -> rescaled final score
using TaskScores = std::map<std::string, std::map<std::string, std::map<std::string, double>>>;

TaskScores final_task_scores(const EvalGrid& grid, const std::optional<std::set<std::string>>& selected);

/// Two-stage Borda: within each language every task ranks the models; the
/// per-language Borda totals then rank the models once more, and those
/// per-language rankings are summed with the same point scheme.
std::map<std::string, double> task_electorate_borda(const TaskScores& scores);

// --- task selection ---------------------------------------------------------

enum class Criterion {
    monotonicity,
    stable_pretraining,
    non_randomness,
    ranking_consistency,
    low_noise,
    low_prompt_sensitivity,
    prompt_lottery,
};

inline constexpr std::array<Criterion, 7> kCriteria = {
    Criterion::monotonicity,  Criterion::stable_pretraining,     Criterion::non_randomness,
    Criterion::ranking_consistency, Criterion::low_noise, Criterion::low_prompt_sensitivity,
    Criterion::prompt_lottery};

std::string_view to_string(Criterion criterion) noexcept;

/// True when larger values are better (threshold is a minimum).
bool higher_is_better(Criterion criterion) noexcept;

enum class RankingMode { consecutive, against_final };

struct SelectionThresholds {
    std::map<Criterion, double> limits = {
        {Criterion::monotonicity, 0.5},
        {Criterion::non_randomness, 0.05},
        {Criterion::ranking_consistency, 0.5},
        {Criterion::prompt_lottery, 0.5},
    };
    RankingMode ranking_mode = RankingMode::consecutive;
};

struct CriterionResult {
    double value = 0.0;  // may be +inf (zero spread) or NaN (undefined)
    bool applicable = true;
    bool pass = true;
    std::optional<double> threshold;
};

struct TaskSelection {
    std::map<Criterion, CriterionResult> criteria;
    bool selected = false;
};

using TaskSelectionReport = std::map<std::string, TaskSelection>;

/// Spearman rank correlation (Pearson on average ranks); 0 when either side is constant.
double spearman(std::span<const double> x, std::span<const double> y);

/// Kendall tau-b; 0 when either side is constant.
double kendall_tau_b(std::span<const double> x, std::span<const double> y);

/// Median of |x - median(x)|.
double median_absolute_deviation(std::span<const double> values);

/// Throws ContractError for any model/task series with fewer than 3 checkpoints.
TaskSelectionReport select_tasks(const EvalGrid& grid, const SelectionThresholds& thresholds = {});

std::set<std::string> selected_tasks(const TaskSelectionReport& report);

// --- I/O --------------------------------------------------------------------

/// JSON Lines, or CSV when the name ends in .csv. Columns: model, task, prompt,
/// checkpoint_tokens, score.
std::vector<EvalRecord> read_eval_records(const std::filesystem::path& path);

/// JSON object keyed by task, JSON Lines, or CSV. Fields: task, random_baseline,
/// max_score, category, language.
std::map<std::string, TaskInfo> read_task_info(const std::filesystem::path& path);

/// Splits one CSV record (RFC 4180 quoting, no embedded newlines).
std::vector<std::string> split_csv_line(std::string_view line);

Json to_json(const TaskSelectionReport& report);
Json to_json(const MultilingualScores& scores);

struct EvalReport {
    TaskSelectionReport selection;
    LanguageScores language_scores;
    std::vector<std::string> excluded_languages;
    std::optional<MultilingualScores> multilingual;
    std::optional<std::map<std::string, double>> task_borda;
};

EvalReport aggregate_evaluation(const EvalGrid& grid, const SelectionThresholds& thresholds,
                                bool task_level_borda = false);

Json to_json(const EvalReport& report);
std::string render_ranking_table(const EvalReport& report);

}  // namespace refinery
