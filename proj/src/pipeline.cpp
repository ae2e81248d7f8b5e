#include "refinery/pipeline.hpp"

#include <chrono>
#include <set>

#include <spdlog/spdlog.h>

#include "refinery/analytics.hpp"
#include "refinery/errors.hpp"
#include "refinery/io.hpp"
#include "refinery/parallel.hpp"
#include "refinery/stopwords.hpp"

namespace refinery {

namespace fs = std::filesystem;

std::optional<Stage> parse_stage(std::string_view name) {
    if (name == "lid") return Stage::lid;
    if (name == "dedup") return Stage::dedup;
    if (name == "score") return Stage::score;
    if (name == "package") return Stage::package;
    if (name == "analyze") return Stage::analyze;
    if (name == "eval-agg") return Stage::eval_agg;
    if (name == "all") return Stage::all;
    return std::nullopt;
}

std::string_view to_string(Stage stage) noexcept {
    switch (stage) {
        case Stage::lid: return "lid";
        case Stage::dedup: return "dedup";
        case Stage::score: return "score";
        case Stage::package: return "package";
        case Stage::analyze: return "analyze";
        case Stage::eval_agg: return "eval-agg";
        case Stage::all: return "all";
    }
    return "unknown";
}

std::unique_ptr<LanguageClassifier> make_classifier(const LidConfig& config) {
    if (config.command) return std::make_unique<CommandClassifier>(*config.command);
    if (config.seeds) {
        require_exists(*config.seeds, "lid.seeds");
        return std::make_unique<NgramClassifier>(NgramClassifier::from_seed_file(*config.seeds));
    }
    return nullptr;
}

StageIo default_io(Stage stage, const PipelineConfig& config) {
    return {config.inputs, config.output_root / std::string(to_string(stage))};
}

namespace {

Json removal_counts(std::size_t duplicate, std::size_t below_wds, std::size_t lid_rejected) {
    Json r = Json::object();
    r["duplicate"] = duplicate;
    r["below_wds"] = below_wds;
    r["lid_rejected"] = lid_rejected;
    return r;
}

Json base_report(Stage stage, std::size_t in, std::size_t out) {
    Json r = Json::object();
    r["stage"] = to_string(stage);
    r["counts"] = {{"in", in}, {"out", out}};
    return r;
}

std::vector<Document> load_inputs(const StageIo& io) {
    if (io.inputs.empty()) throw ConfigError("input: no input files given");
    for (const auto& p : io.inputs) require_exists(p, "input");
    auto docs = read_documents(io.inputs);
    check_unique_ids(docs);
    return docs;
}

void require_language(const PipelineConfig& config) {
    if (config.language.empty()) throw ConfigError("language: must be set for this stage");
}

Json run_lid(const PipelineConfig& config, const StageIo& io, unsigned workers) {
    require_language(config);
    const auto classifier = make_classifier(config.lid);
    if (!classifier) throw ConfigError("lid: set lid.seeds or lid.command");
    auto docs = load_inputs(io);
    const std::size_t in = docs.size();

    std::vector<LangPrediction> predictions(docs.size());
    std::vector<SegmentProfile> profiles(docs.size());
    parallel_for(docs.size(), workers, [&](std::size_t i) {
        predictions[i] = classifier->classify(normalize_for_lid(docs[i].text));
        if (predictions[i].label == config.language && predictions[i].confidence >= config.lid.min_confidence) {
            Document probe = docs[i];
            probe.lang = config.language;
            profiles[i] = profile_segments(probe, *classifier);
        }
    });

    std::vector<Document> kept;
    std::vector<Document> rejected;
    std::size_t empty_profiles = 0;
    for (std::size_t i = 0; i < docs.size(); ++i) {
        auto& doc = docs[i];
        const auto& pred = predictions[i];
        if (pred.label == config.language && pred.confidence >= config.lid.min_confidence) {
            doc.lang = config.language;
            doc.seg_langs = std::move(profiles[i].seg_langs);
            empty_profiles += profiles[i].warning;
            kept.push_back(std::move(doc));
        } else {
            doc.lang = pred.label;
            doc.removed_reason = RemovedReason::lid_rejected;
            rejected.push_back(std::move(doc));
        }
    }
    write_documents(io.output / "documents.jsonl", kept);
    write_documents(io.output / "removed.jsonl", rejected);

    Json report = base_report(Stage::lid, in, kept.size());
    report["removals"] = removal_counts(0, 0, rejected.size());
    report["language"] = config.language;
    report["documents_without_segments"] = empty_profiles;
    return report;
}

Json run_dedup(const PipelineConfig& config, const StageIo& io, unsigned workers) {
    auto docs = load_inputs(io);
    const std::size_t in = docs.size();
    auto result = dedup(std::move(docs), config.dedup, workers);
    write_documents(io.output / "documents.jsonl", result.retained);
    write_documents(io.output / "removed.jsonl", result.removed);
    std::vector<Json> log;
    for (const auto& record : result.log) log.push_back(to_json(record));
    write_json_lines(io.output / "removal_log.jsonl", log);

    const auto& p = config.dedup;
    Json report = base_report(Stage::dedup, in, result.retained.size());
    report["removals"] = removal_counts(result.removed.size(), 0, 0);
    report["exempt_short_documents"] = result.exempt;
    report["candidate_pairs"] = result.candidate_pairs;
    report["params"] = {{"shingle_order", p.shingle_order}, {"num_perm", p.num_perm}, {"seed", p.seed},
                        {"bands", p.bands},                 {"rows", p.rows},         {"threshold", p.threshold},
                        {"mode", to_string(p.mode)},        {"exact_verification", p.exact_verification}};
    return report;
}

Json run_score(const PipelineConfig& config, const StageIo& io, unsigned workers) {
    auto docs = load_inputs(io);
    const std::size_t in = docs.size();
    std::unique_ptr<LanguageClassifier> classifier;
    for (const auto& doc : docs) {
        if (!doc.seg_langs) {
            classifier = make_classifier(config.lid);
            if (!classifier) {
                throw ConfigError("document " + doc.id +
                                  " has no seg_langs; run the lid stage first or configure lid.seeds/lid.command");
            }
            break;
        }
    }
    std::vector<WdsReport> reports(docs.size());
    parallel_for(docs.size(), workers, [&](std::size_t i) {
        const auto& doc = docs[i];
        const double share = doc.seg_langs ? in_language_fraction(*doc.seg_langs, doc.lang)
                                           : profile_segments(doc, *classifier).in_language_fraction;
        reports[i] = score_document(doc, share, config.wds);
    });
    Json levels = Json::object();
    std::map<int, std::size_t> histogram;
    for (std::size_t i = 0; i < docs.size(); ++i) {
        annotate(docs[i], reports[i]);
        ++histogram[reports[i].level];
    }
    for (const auto& [level, count] : histogram) levels[std::to_string(level)] = count;

    std::size_t below = 0;
    if (config.wds.min_level) {
        auto filtered = filter_by_level(std::move(docs), *config.wds.min_level);
        below = filtered.removed.size();
        write_documents(io.output / "removed.jsonl", filtered.removed);
        docs = std::move(filtered.retained);
    }
    write_documents(io.output / "documents.jsonl", docs);

    Json report = base_report(Stage::score, in, docs.size());
    report["removals"] = removal_counts(0, below, 0);
    report["levels"] = std::move(levels);
    report["min_level"] = config.wds.min_level ? Json(*config.wds.min_level) : Json(nullptr);
    return report;
}

Json run_package(const PipelineConfig& config, const StageIo& io, unsigned workers) {
    auto docs = load_inputs(io);
    const std::size_t in = docs.size();
    std::map<std::string, std::vector<Document>> by_language;
    for (auto& doc : docs) by_language[doc.lang].push_back(std::move(doc));

    Json languages = Json::object();
    std::size_t shards = 0;
    for (auto& [lang, lang_docs] : by_language) {
        ShardOptions options;
        options.root = io.output;
        options.language = lang;
        options.max_uncompressed_bytes = config.packaging.max_shard_bytes;
        options.compression_level = config.packaging.compression_level;
        const auto result = package(std::move(lang_docs), options, workers);
        Json bins = Json::object();
        for (const auto& m : result.manifests) {
            auto& entry = bins[m.bin.name()];
            if (entry.is_null()) entry = {{"documents", 0}, {"shards", 0}};
            entry["documents"] = entry["documents"].get<std::size_t>() + m.document_count;
            entry["shards"] = entry["shards"].get<std::size_t>() + 1;
        }
        shards += result.manifests.size();
        languages[lang] = std::move(bins);
    }
    Json report = base_report(Stage::package, in, in);
    report["removals"] = removal_counts(0, 0, 0);
    report["shards"] = shards;
    report["languages"] = std::move(languages);
    report["params"] = {{"max_shard_bytes", config.packaging.max_shard_bytes},
                        {"compression_level", config.packaging.compression_level}};
    return report;
}

Json run_analyze(const PipelineConfig& config, const StageIo& io, unsigned workers) {
    const auto docs = load_inputs(io);
    StopwordSet stopwords;
    if (config.analytics.stopwords) {
        require_exists(*config.analytics.stopwords, "analytics.stopwords");
        stopwords = load_stopwords(*config.analytics.stopwords);
    } else {
        stopwords = builtin_stopwords(config.language);
    }
    const Json analytics = analyze(docs, stopwords, config.analytics.reference_total_tokens, workers);
    write_file_atomic(io.output / "analytics.json", analytics.dump(2) + "\n");
    write_file_atomic(io.output / "analytics.txt", render_report_table(analytics));

    Json report = base_report(Stage::analyze, docs.size(), docs.size());
    report["removals"] = removal_counts(0, 0, 0);
    return report;
}

Json run_eval(const PipelineConfig& config, const StageIo& io) {
    auto grid_path = !io.inputs.empty() ? std::optional<fs::path>(io.inputs.front()) : config.eval.grid;
    auto tasks_path = io.inputs.size() > 1 ? std::optional<fs::path>(io.inputs[1]) : config.eval.tasks;
    if (!grid_path) throw ConfigError("eval.grid: no score grid given");
    if (!tasks_path) throw ConfigError("eval.tasks: no task metadata given");
    require_exists(*grid_path, "eval.grid");
    require_exists(*tasks_path, "eval.tasks");
    const auto records = read_eval_records(*grid_path);
    const EvalGrid grid(records, read_task_info(*tasks_path));
    const auto result = aggregate_evaluation(grid, config.eval.thresholds, config.eval.task_level_borda);
    write_file_atomic(io.output / "eval_report.json", to_json(result).dump(2) + "\n");
    write_file_atomic(io.output / "ranking.txt", render_ranking_table(result));

    Json report = base_report(Stage::eval_agg, records.size(), records.size());
    report["tasks"] = grid.tasks().size();
    report["selected_tasks"] = selected_tasks(result.selection).size();
    report["models"] = grid.models().size();
    return report;
}

StageResult timed(Stage stage, const std::function<Json()>& body, const fs::path& output) {
    const auto start = std::chrono::steady_clock::now();
    spdlog::info("stage {} -> {}", to_string(stage), output.string());
    StageResult result;
    result.report = body();
    result.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    write_file_atomic(output / "report.json", result.report.dump(2) + "\n");
    write_file_atomic(output / "timing.json",
                      Json{{"stage", to_string(stage)}, {"wall_seconds", result.wall_seconds}}.dump(2) + "\n");
    spdlog::info("stage {} done in {:.3f}s: {}", to_string(stage), result.wall_seconds, result.report["counts"].dump());
    return result;
}

}  // namespace

StageResult run_stage(Stage stage, const PipelineConfig& config, const StageIo& io, unsigned workers) {
    workers = std::max(1u, workers);
    switch (stage) {
        case Stage::lid:
            return timed(stage, [&] { return run_lid(config, io, workers); }, io.output);
        case Stage::dedup:
            return timed(stage, [&] { return run_dedup(config, io, workers); }, io.output);
        case Stage::score:
            return timed(stage, [&] { return run_score(config, io, workers); }, io.output);
        case Stage::package:
            return timed(stage, [&] { return run_package(config, io, workers); }, io.output);
        case Stage::analyze:
            return timed(stage, [&] { return run_analyze(config, io, workers); }, io.output);
        case Stage::eval_agg:
            return timed(stage, [&] { return run_eval(config, io); }, io.output);
        case Stage::all:
            break;
    }
    return timed(
        Stage::all,
        [&] {
            Json report = Json::object();
            report["stage"] = "all";
            std::vector<fs::path> inputs = io.inputs;
            Json stages = Json::array();
            std::size_t in = 0;
            std::size_t out = 0;
            for (Stage s : {Stage::lid, Stage::dedup, Stage::score, Stage::package, Stage::analyze}) {
                const StageIo sub{inputs, io.output / std::string(to_string(s))};
                auto r = run_stage(s, config, sub, workers);
                if (s == Stage::lid) in = r.report["counts"]["in"].get<std::size_t>();
                if (s == Stage::score) {
                    out = r.report["counts"]["out"].get<std::size_t>();
                    inputs = {sub.output / "documents.jsonl"};
                } else if (s != Stage::package && s != Stage::analyze) {
                    inputs = {sub.output / "documents.jsonl"};
                }
                stages.push_back(std::move(r.report));
            }
            std::size_t duplicate = 0, below = 0, rejected = 0;
            for (const auto& r : stages) {
                duplicate += r["removals"]["duplicate"].get<std::size_t>();
                below += r["removals"]["below_wds"].get<std::size_t>();
                rejected += r["removals"]["lid_rejected"].get<std::size_t>();
            }
            report["counts"] = {{"in", in}, {"out", out}};
            report["removals"] = removal_counts(duplicate, below, rejected);
            report["stages"] = std::move(stages);
            return report;
        },
        io.output);
}

}  // namespace refinery
