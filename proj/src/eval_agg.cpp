#include "refinery/eval_agg.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <numeric>
#include <sstream>

#include "refinery/errors.hpp"
#include "refinery/io.hpp"

namespace refinery {

EvalGrid::EvalGrid(std::span<const EvalRecord> records, std::map<std::string, TaskInfo> tasks)
    : tasks_(std::move(tasks)) {
    for (const auto& [name, info] : tasks_) {
        if (!std::isfinite(info.random_baseline) || !std::isfinite(info.max_score) ||
            !(info.random_baseline < info.max_score)) {
            throw ContractError("task " + name + ": random baseline must be below the maximum score");
        }
        if (info.language.empty()) throw ContractError("task " + name + " has no language");
    }
    for (const auto& r : records) {
        if (!tasks_.count(r.task)) throw ContractError("no metadata for task " + r.task);
        if (!std::isfinite(r.score)) {
            throw ContractError("non-finite score for " + r.model + "/" + r.task + "/" + r.prompt);
        }
        auto& prompts = cells_[{r.model, r.task}][r.checkpoint_tokens];
        if (!prompts.emplace(r.prompt, r.score).second) {
            throw ContractError("duplicate score for model " + r.model + ", task " + r.task + ", prompt " +
                                r.prompt + ", checkpoint " + std::to_string(r.checkpoint_tokens));
        }
    }
}

const TaskInfo& EvalGrid::task(const std::string& name) const {
    auto it = tasks_.find(name);
    if (it == tasks_.end()) throw ContractError("unknown task " + name);
    return it->second;
}

std::set<std::string> EvalGrid::models() const {
    std::set<std::string> out;
    for (const auto& [key, series] : cells_) out.insert(key.first);
    return out;
}

std::set<std::string> EvalGrid::languages() const {
    std::set<std::string> out;
    for (const auto& [key, series] : cells_) out.insert(task(key.second).language);
    return out;
}

AggregatedScores prompt_aggregate(const EvalGrid& grid) {
    AggregatedScores out;
    for (const auto& [key, series] : grid.cells()) {
        auto& agg = out[key];
        for (const auto& [checkpoint, prompts] : series) {
            double best = -std::numeric_limits<double>::infinity();
            for (const auto& [prompt, score] : prompts) best = std::max(best, score);
            agg.emplace_back(checkpoint, best);
        }
    }
    return out;
}

double rescale(double score, double baseline, double max_score) {
    if (!(baseline < max_score)) throw ContractError("rescale needs baseline < max");
    return std::clamp((score - baseline) / (max_score - baseline), 0.0, 1.0);
}

double language_score(std::span<const CategoryScore> scores) {
    if (scores.empty()) throw ContractError("language score over zero tasks");
    std::map<std::string, std::pair<double, std::size_t>> by_category;
    for (const auto& s : scores) {
        auto& [sum, count] = by_category[s.category];
        sum += s.rescaled;
        ++count;
    }
    double total = 0.0;
    for (const auto& [category, acc] : by_category) total += acc.first / static_cast<double>(acc.second);
    return total / static_cast<double>(by_category.size());
}

namespace {

bool is_selected(const std::optional<std::set<std::string>>& selected, const std::string& task) {
    return !selected || selected->count(task) > 0;
}

}  // namespace

TaskScores final_task_scores(const EvalGrid& grid, const std::optional<std::set<std::string>>& selected) {
    TaskScores out;
    for (const auto& [key, series] : prompt_aggregate(grid)) {
        const auto& [model, task] = key;
        if (!is_selected(selected, task) || series.empty()) continue;
        const auto& info = grid.task(task);
        out[model][info.language][task] = rescale(series.back().second, info.random_baseline, info.max_score);
    }
    return out;
}

LanguageScores final_language_scores(const EvalGrid& grid, const std::optional<std::set<std::string>>& selected,
                                     std::vector<std::string>* excluded) {
    std::set<std::string> covered;
    for (const auto& [task, info] : grid.tasks()) {
        if (is_selected(selected, task)) covered.insert(info.language);
    }
    if (excluded) {
        excluded->clear();
        for (const auto& lang : grid.languages()) {
            if (!covered.count(lang)) excluded->push_back(lang);
        }
    }
    LanguageScores out;
    for (const auto& [model, languages] : final_task_scores(grid, selected)) {
        for (const auto& [lang, tasks] : languages) {
            std::vector<CategoryScore> scores;
            for (const auto& [task, value] : tasks) scores.push_back({grid.task(task).category, value});
            out[model][lang] = language_score(scores);
        }
    }
    return out;
}

std::vector<double> descending_ranks(std::span<const double> values) {
    std::vector<std::size_t> order(values.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] > values[b]; });
    std::vector<double> ranks(values.size());
    for (std::size_t i = 0; i < order.size();) {
        std::size_t j = i + 1;
        while (j < order.size() && values[order[j]] == values[order[i]]) ++j;
        // Positions i..j-1 hold ranks i+1..j.
        const double shared = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
        for (std::size_t k = i; k < j; ++k) ranks[order[k]] = shared;
        i = j;
    }
    return ranks;
}

namespace {

std::vector<std::string> order_by(const std::vector<std::string>& models, const std::map<std::string, double>& metric,
                                  bool higher_first) {
    std::vector<std::string> out = models;
    std::stable_sort(out.begin(), out.end(), [&](const std::string& a, const std::string& b) {
        const double va = metric.at(a);
        const double vb = metric.at(b);
        if (va != vb) return higher_first ? va > vb : va < vb;
        return a < b;
    });
    return out;
}

// Borda points (m - rank) per model for one electorate's scores.
std::vector<double> borda_points(std::span<const double> values) {
    const auto ranks = descending_ranks(values);
    std::vector<double> points(values.size());
    const auto m = static_cast<double>(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) points[i] = m - ranks[i];
    return points;
}

}  // namespace

MultilingualScores multilingual_scores(const LanguageScores& scores) {
    if (scores.size() < 2) throw ContractError("multilingual aggregation needs at least two models");
    MultilingualScores out;
    std::set<std::string> languages;
    for (const auto& [model, langs] : scores) {
        out.models.push_back(model);
        for (const auto& [lang, value] : langs) languages.insert(lang);
    }
    if (languages.empty()) throw ContractError("multilingual aggregation needs at least one language");
    for (const auto& [model, langs] : scores) {
        for (const auto& lang : languages) {
            if (!langs.count(lang)) throw ContractError("model " + model + " has no score for language " + lang);
        }
    }
    const auto l = static_cast<double>(languages.size());
    for (const auto& model : out.models) {
        out.average_language_score[model] = 0.0;
        out.average_rank[model] = 0.0;
        out.borda_points[model] = 0.0;
    }
    for (const auto& lang : languages) {
        std::vector<double> values;
        for (const auto& model : out.models) values.push_back(scores.at(model).at(lang));
        const auto ranks = descending_ranks(values);
        const auto points = borda_points(values);
        for (std::size_t i = 0; i < out.models.size(); ++i) {
            out.average_language_score[out.models[i]] += values[i];
            out.average_rank[out.models[i]] += ranks[i];
            out.borda_points[out.models[i]] += points[i];
        }
    }
    for (const auto& model : out.models) {
        out.average_language_score[model] /= l;
        out.average_rank[model] /= l;
    }
    out.by_average_score = order_by(out.models, out.average_language_score, true);
    out.by_average_rank = order_by(out.models, out.average_rank, false);
    out.by_borda = order_by(out.models, out.borda_points, true);
    return out;
}

std::map<std::string, double> task_electorate_borda(const TaskScores& scores) {
    if (scores.size() < 2) throw ContractError("Borda aggregation needs at least two models");
    std::vector<std::string> models;
    for (const auto& [model, langs] : scores) models.push_back(model);
    // language -> task set, taken from the first model; every model must match.
    const auto& reference = scores.begin()->second;
    for (const auto& [model, langs] : scores) {
        if (langs.size() != reference.size()) throw ContractError("model " + model + " covers different languages");
        for (const auto& [lang, tasks] : reference) {
            auto it = langs.find(lang);
            if (it == langs.end()) throw ContractError("model " + model + " has no score for language " + lang);
            for (const auto& [task, v] : tasks) {
                if (!it->second.count(task)) throw ContractError("model " + model + " has no score for task " + task);
            }
        }
    }
    std::map<std::string, double> totals;
    for (const auto& model : models) totals[model] = 0.0;
    for (const auto& [lang, tasks] : reference) {
        std::vector<double> language_points(models.size(), 0.0);
        for (const auto& [task, v] : tasks) {
            std::vector<double> values;
            for (const auto& model : models) values.push_back(scores.at(model).at(lang).at(task));
            const auto points = borda_points(values);
            for (std::size_t i = 0; i < models.size(); ++i) language_points[i] += points[i];
        }
        const auto points = borda_points(language_points);
        for (std::size_t i = 0; i < models.size(); ++i) totals[models[i]] += points[i];
    }
    return totals;
}

// --- rank statistics --------------------------------------------------------

namespace {

std::vector<double> average_ranks(std::span<const double> values) {
    // Ascending ranks with ties averaged; the sign convention does not matter for correlation.
    const auto desc = descending_ranks(values);
    std::vector<double> out(desc.size());
    const auto n1 = static_cast<double>(values.size()) + 1.0;
    for (std::size_t i = 0; i < desc.size(); ++i) out[i] = n1 - desc[i];
    return out;
}

double mean(std::span<const double> v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

double population_stddev(std::span<const double> v) {
    const double m = mean(v);
    double ss = 0.0;
    for (double x : v) ss += (x - m) * (x - m);
    return std::sqrt(ss / static_cast<double>(v.size()));
}

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 == 1 ? v[n / 2] : (v[n / 2 - 1] + v[n / 2]) / 2.0;
}

}  // namespace

double spearman(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) throw ContractError("spearman: length mismatch");
    if (x.size() < 2) return 0.0;
    const auto rx = average_ranks(x);
    const auto ry = average_ranks(y);
    const double mx = mean(rx);
    const double my = mean(ry);
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < rx.size(); ++i) {
        sxy += (rx[i] - mx) * (ry[i] - my);
        sxx += (rx[i] - mx) * (rx[i] - mx);
        syy += (ry[i] - my) * (ry[i] - my);
    }
    if (sxx == 0.0 || syy == 0.0) return 0.0;
    return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

double kendall_tau_b(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) throw ContractError("kendall: length mismatch");
    double concordant = 0.0, discordant = 0.0, ties_x = 0.0, ties_y = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        for (std::size_t j = i + 1; j < x.size(); ++j) {
            const double dx = x[i] - x[j];
            const double dy = y[i] - y[j];
            if (dx == 0.0 && dy == 0.0) {
                continue;
            } else if (dx == 0.0) {
                ties_x += 1.0;
            } else if (dy == 0.0) {
                ties_y += 1.0;
            } else if ((dx > 0.0) == (dy > 0.0)) {
                concordant += 1.0;
            } else {
                discordant += 1.0;
            }
        }
    }
    const double denom = std::sqrt((concordant + discordant + ties_x) * (concordant + discordant + ties_y));
    if (denom == 0.0) return 0.0;
    return std::clamp((concordant - discordant) / denom, -1.0, 1.0);
}

double median_absolute_deviation(std::span<const double> values) {
    if (values.empty()) throw ContractError("MAD of an empty sample");
    const double m = median(std::vector<double>(values.begin(), values.end()));
    std::vector<double> dev;
    dev.reserve(values.size());
    for (double v : values) dev.push_back(std::abs(v - m));
    return median(std::move(dev));
}

std::string_view to_string(Criterion c) noexcept {
    switch (c) {
        case Criterion::monotonicity: return "monotonicity";
        case Criterion::stable_pretraining: return "stable_pretraining";
        case Criterion::non_randomness: return "non_randomness";
        case Criterion::ranking_consistency: return "ranking_consistency";
        case Criterion::low_noise: return "low_noise";
        case Criterion::low_prompt_sensitivity: return "low_prompt_sensitivity";
        case Criterion::prompt_lottery: return "prompt_lottery";
    }
    return "unknown";
}

bool higher_is_better(Criterion c) noexcept {
    switch (c) {
        case Criterion::monotonicity:
        case Criterion::non_randomness:
        case Criterion::ranking_consistency:
        case Criterion::low_noise:
            return true;
        default:
            return false;
    }
}

namespace {

struct ModelSeries {
    std::string model;
    const EvalGrid::Series* raw = nullptr;
    std::vector<double> aggregated;  // by checkpoint order
};

double coefficient_of_variation_of_deltas(const std::vector<double>& series) {
    std::vector<double> deltas;
    for (std::size_t i = 1; i < series.size(); ++i) deltas.push_back(series[i] - series[i - 1]);
    const double m = mean(deltas);
    const double sd = population_stddev(deltas);
    if (m == 0.0) return sd == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
    return sd / std::abs(m);
}

// Prompt with the highest score; ties go to the lexicographically smallest name.
const std::string& best_prompt(const EvalGrid::PromptScores& prompts) {
    auto best = prompts.begin();
    for (auto it = prompts.begin(); it != prompts.end(); ++it) {
        if (it->second > best->second) best = it;
    }
    return best->first;
}

double ranking_consistency(const std::vector<ModelSeries>& models, RankingMode mode) {
    // Checkpoints present for every model.
    std::vector<std::uint64_t> common;
    for (const auto& [checkpoint, prompts] : *models.front().raw) common.push_back(checkpoint);
    for (const auto& m : models) {
        std::erase_if(common, [&](std::uint64_t c) { return !m.raw->count(c); });
    }
    if (common.size() < 2) return std::numeric_limits<double>::quiet_NaN();
    const auto column = [&](std::uint64_t checkpoint) {
        std::vector<double> v;
        for (const auto& m : models) {
            const auto& prompts = m.raw->at(checkpoint);
            double best = -std::numeric_limits<double>::infinity();
            for (const auto& [p, s] : prompts) best = std::max(best, s);
            v.push_back(best);
        }
        return v;
    };
    double total = 0.0;
    std::size_t pairs = 0;
    const auto last = column(common.back());
    for (std::size_t c = 0; c + 1 < common.size(); ++c) {
        const auto here = column(common[c]);
        total += kendall_tau_b(here, mode == RankingMode::consecutive ? column(common[c + 1]) : last);
        ++pairs;
    }
    return total / static_cast<double>(pairs);
}

CriterionResult judge(Criterion c, double value, bool applicable, const SelectionThresholds& t) {
    CriterionResult r;
    r.value = value;
    r.applicable = applicable;
    if (auto it = t.limits.find(c); it != t.limits.end()) r.threshold = it->second;
    if (!applicable || !r.threshold) {
        r.pass = true;
    } else if (std::isnan(value)) {
        r.pass = false;
    } else {
        r.pass = higher_is_better(c) ? value >= *r.threshold : value <= *r.threshold;
    }
    return r;
}

}  // namespace

TaskSelectionReport select_tasks(const EvalGrid& grid, const SelectionThresholds& thresholds) {
    std::map<std::string, std::vector<ModelSeries>> by_task;
    for (const auto& [key, series] : grid.cells()) {
        const auto& [model, task] = key;
        if (series.size() < 3) {
            throw ContractError("task selection needs at least 3 checkpoints (model " + model + ", task " + task +
                                " has " + std::to_string(series.size()) + ")");
        }
        ModelSeries ms{model, &series, {}};
        for (const auto& [checkpoint, prompts] : series) {
            double best = -std::numeric_limits<double>::infinity();
            for (const auto& [p, s] : prompts) best = std::max(best, s);
            ms.aggregated.push_back(best);
        }
        by_task[task].push_back(std::move(ms));
    }

    TaskSelectionReport report;
    for (const auto& [task, models] : by_task) {
        const auto& info = grid.task(task);
        double monotonic = 0.0, stability = 0.0, non_random = 0.0, noise = 0.0, sensitivity = 0.0, lottery = 0.0;
        for (const auto& m : models) {
            std::vector<double> index(m.aggregated.size());
            std::iota(index.begin(), index.end(), 0.0);
            monotonic += spearman(index, m.aggregated);
            stability += coefficient_of_variation_of_deltas(m.aggregated);
            non_random += rescale(m.aggregated.back(), info.random_baseline, info.max_score);

            std::vector<double> final_prompts;
            for (const auto& [p, s] : m.raw->rbegin()->second) final_prompts.push_back(s);
            const double spread = population_stddev(final_prompts);
            noise += spread == 0.0 ? std::numeric_limits<double>::infinity() : m.aggregated.back() / spread;
            sensitivity += median_absolute_deviation(final_prompts);

            std::size_t changes = 0;
            const std::string* previous = nullptr;
            for (const auto& [checkpoint, prompts] : *m.raw) {
                const std::string& best = best_prompt(prompts);
                if (previous && *previous != best) ++changes;
                previous = &best;
            }
            lottery += static_cast<double>(changes) / static_cast<double>(m.raw->size() - 1);
        }
        const auto count = static_cast<double>(models.size());
        const bool multi_model = models.size() >= 2;
        const double consistency =
            multi_model ? ranking_consistency(models, thresholds.ranking_mode) : std::numeric_limits<double>::quiet_NaN();

        TaskSelection sel;
        sel.criteria[Criterion::monotonicity] = judge(Criterion::monotonicity, monotonic / count, true, thresholds);
        sel.criteria[Criterion::stable_pretraining] =
            judge(Criterion::stable_pretraining, stability / count, true, thresholds);
        sel.criteria[Criterion::non_randomness] = judge(Criterion::non_randomness, non_random / count, true, thresholds);
        sel.criteria[Criterion::ranking_consistency] =
            judge(Criterion::ranking_consistency, consistency, multi_model, thresholds);
        sel.criteria[Criterion::low_noise] = judge(Criterion::low_noise, noise / count, true, thresholds);
        sel.criteria[Criterion::low_prompt_sensitivity] =
            judge(Criterion::low_prompt_sensitivity, sensitivity / count, true, thresholds);
        sel.criteria[Criterion::prompt_lottery] = judge(Criterion::prompt_lottery, lottery / count, true, thresholds);
        sel.selected = std::all_of(sel.criteria.begin(), sel.criteria.end(), [](const auto& kv) { return kv.second.pass; });
        report[task] = std::move(sel);
    }
    return report;
}

std::set<std::string> selected_tasks(const TaskSelectionReport& report) {
    std::set<std::string> out;
    for (const auto& [task, sel] : report) {
        if (sel.selected) out.insert(task);
    }
    return out;
}

// --- I/O --------------------------------------------------------------------

std::vector<std::string> split_csv_line(std::string_view line) {
    std::vector<std::string> fields(1);
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
                fields.back().push_back('"');
                ++i;
            } else if (c == '"') {
                quoted = false;
            } else {
                fields.back().push_back(c);
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            fields.emplace_back();
        } else if (c != '\r') {
            fields.back().push_back(c);
        }
    }
    if (quoted) throw ParseError("unterminated quoted CSV field", line.size());
    return fields;
}

namespace {

bool is_csv(const std::filesystem::path& path) { return path.extension() == ".csv"; }

// Rows from CSV (header line gives keys) or JSON Lines, as JSON objects.
std::vector<Json> read_rows(const std::filesystem::path& path) {
    std::vector<Json> rows;
    std::vector<std::string> header;
    for_each_line(path, [&](std::string_view line, std::size_t line_no) {
        if (line.find_first_not_of(" \t\r") == std::string_view::npos) return;
        const std::string where = path.string() + ":" + std::to_string(line_no) + ": ";
        if (is_csv(path)) {
            auto fields = split_csv_line(line);
            if (header.empty()) {
                header = std::move(fields);
                return;
            }
            if (fields.size() != header.size()) throw ParseError(where + "wrong number of CSV fields", 0);
            Json row = Json::object();
            for (std::size_t i = 0; i < header.size(); ++i) row[header[i]] = fields[i];
            rows.push_back(std::move(row));
        } else {
            try {
                rows.push_back(Json::parse(line));
            } catch (const Json::parse_error& e) {
                throw ParseError(where + e.what(), e.byte > 0 ? e.byte - 1 : 0);
            }
        }
    });
    return rows;
}

std::string field_string(const Json& row, const char* key) {
    auto it = row.find(key);
    if (it == row.end()) throw SchemaError(key, std::string("missing field \"") + key + "\"");
    if (it->is_string()) return it->get<std::string>();
    if (it->is_number()) return it->dump();
    throw SchemaError(key, std::string("field \"") + key + "\" must be a string");
}

double field_number(const Json& row, const char* key) {
    auto it = row.find(key);
    if (it == row.end()) throw SchemaError(key, std::string("missing field \"") + key + "\"");
    if (it->is_number()) return it->get<double>();
    if (it->is_string()) {
        const auto s = it->get<std::string>();
        try {
            std::size_t used = 0;
            const double v = std::stod(s, &used);
            if (used == s.size()) return v;
        } catch (const std::exception&) {
        }
    }
    throw SchemaError(key, std::string("field \"") + key + "\" must be a number");
}

TaskInfo task_info_from(const Json& row) {
    TaskInfo info;
    info.random_baseline = field_number(row, "random_baseline");
    info.max_score = field_number(row, "max_score");
    info.category = field_string(row, "category");
    info.language = field_string(row, "language");
    return info;
}

Json finite_or_null(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

}  // namespace

std::vector<EvalRecord> read_eval_records(const std::filesystem::path& path) {
    std::vector<EvalRecord> records;
    for (const auto& row : read_rows(path)) {
        EvalRecord r;
        r.model = field_string(row, "model");
        r.task = field_string(row, "task");
        r.prompt = field_string(row, "prompt");
        const double tokens = field_number(row, "checkpoint_tokens");
        if (!(tokens >= 0.0)) throw SchemaError("checkpoint_tokens", "checkpoint_tokens must be non-negative");
        r.checkpoint_tokens = static_cast<std::uint64_t>(std::llround(tokens));
        r.score = field_number(row, "score");
        records.push_back(std::move(r));
    }
    return records;
}

std::map<std::string, TaskInfo> read_task_info(const std::filesystem::path& path) {
    std::map<std::string, TaskInfo> tasks;
    if (path.extension() == ".json") {
        const Json obj = read_json_file(path);
        if (!obj.is_object()) throw SchemaError("tasks", path.string() + ": expected an object keyed by task");
        for (auto it = obj.begin(); it != obj.end(); ++it) tasks[it.key()] = task_info_from(it.value());
        return tasks;
    }
    for (const auto& row : read_rows(path)) tasks[field_string(row, "task")] = task_info_from(row);
    return tasks;
}

Json to_json(const TaskSelectionReport& report) {
    Json out = Json::object();
    for (const auto& [task, sel] : report) {
        Json criteria = Json::object();
        for (const auto& [criterion, r] : sel.criteria) {
            Json c = Json::object();
            c["value"] = finite_or_null(r.value);
            if (std::isinf(r.value)) c["value_note"] = r.value > 0 ? "+inf" : "-inf";
            c["applicable"] = r.applicable;
            c["pass"] = r.pass;
            c["threshold"] = r.threshold ? Json(*r.threshold) : Json(nullptr);
            criteria[std::string(to_string(criterion))] = std::move(c);
        }
        Json entry = Json::object();
        entry["criteria"] = std::move(criteria);
        entry["selected"] = sel.selected;
        out[task] = std::move(entry);
    }
    return out;
}

Json to_json(const MultilingualScores& s) {
    Json out = Json::object();
    out["average_language_score"] = s.average_language_score;
    out["average_rank"] = s.average_rank;
    out["borda_points"] = s.borda_points;
    out["ranking"] = {{"average_language_score", s.by_average_score},
                      {"average_rank", s.by_average_rank},
                      {"borda", s.by_borda}};
    return out;
}

EvalReport aggregate_evaluation(const EvalGrid& grid, const SelectionThresholds& thresholds, bool task_level_borda) {
    EvalReport report;
    report.selection = select_tasks(grid, thresholds);
    const auto chosen = selected_tasks(report.selection);
    report.language_scores = final_language_scores(grid, chosen, &report.excluded_languages);
    if (report.language_scores.size() >= 2) {
        report.multilingual = multilingual_scores(report.language_scores);
        if (task_level_borda) report.task_borda = task_electorate_borda(final_task_scores(grid, chosen));
    }
    return report;
}

Json to_json(const EvalReport& report) {
    Json out = Json::object();
    out["task_selection"] = to_json(report.selection);
    out["selected_tasks"] = selected_tasks(report.selection);
    out["language_scores"] = report.language_scores;
    out["excluded_languages"] = report.excluded_languages;
    out["multilingual"] = report.multilingual ? to_json(*report.multilingual) : Json(nullptr);
    if (report.task_borda) out["task_electorate_borda"] = *report.task_borda;
    return out;
}

std::string render_ranking_table(const EvalReport& report) {
    std::ostringstream out;
    if (!report.multilingual) {
        out << "multilingual ranking unavailable (needs at least two models with selected tasks)\n";
        return out.str();
    }
    const auto& m = *report.multilingual;
    out << std::left << std::setw(24) << "model" << std::right << std::setw(12) << "avg score" << std::setw(12)
        << "avg rank" << std::setw(12) << "borda" << '\n';
    out << std::fixed;
    for (const auto& model : m.by_borda) {
        out << std::left << std::setw(24) << model << std::right << std::setprecision(4) << std::setw(12)
            << m.average_language_score.at(model) << std::setprecision(2) << std::setw(12) << m.average_rank.at(model)
            << std::setw(12) << m.borda_points.at(model) << '\n';
    }
    return out.str();
}

}  // namespace refinery
