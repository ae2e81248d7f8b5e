#include "refinery/config.hpp"

#include <cmath>
#include <set>

#include "refinery/errors.hpp"
#include "refinery/io.hpp"

namespace refinery {

namespace fs = std::filesystem;

namespace {

class Section {
public:
    Section(const Json& obj, std::string prefix) : obj_(obj), prefix_(std::move(prefix)) {
        if (!obj_.is_object()) throw ConfigError(name("") + " must be an object");
    }

    std::string name(std::string_view key) const {
        if (prefix_.empty()) return std::string(key);
        if (key.empty()) return prefix_;
        return prefix_ + "." + std::string(key);
    }

    const Json* find(const char* key) {
        seen_.insert(key);
        auto it = obj_.find(key);
        if (it == obj_.end() || it->is_null()) return nullptr;
        return &*it;
    }

    void read(const char* key, double& out) {
        if (const Json* v = find(key)) {
            if (!v->is_number()) throw ConfigError(name(key) + " must be a number");
            out = v->get<double>();
            if (!std::isfinite(out)) throw ConfigError(name(key) + " must be finite");
        }
    }

    template <typename Int>
    void read_uint(const char* key, Int& out) {
        if (const Json* v = find(key)) {
            if (!v->is_number_integer() || (!v->is_number_unsigned() && v->get<std::int64_t>() < 0)) throw ConfigError(name(key) + " must be a non-negative integer");
            out = v->get<Int>();
        }
    }

    void read(const char* key, int& out) {
        if (const Json* v = find(key)) {
            if (!v->is_number_integer()) throw ConfigError(name(key) + " must be an integer");
            out = v->get<int>();
        }
    }

    void read(const char* key, bool& out) {
        if (const Json* v = find(key)) {
            if (!v->is_boolean()) throw ConfigError(name(key) + " must be true or false");
            out = v->get<bool>();
        }
    }

    void read(const char* key, std::string& out) {
        if (const Json* v = find(key)) {
            if (!v->is_string()) throw ConfigError(name(key) + " must be a string");
            out = v->get<std::string>();
        }
    }

    std::optional<fs::path> path(const char* key, const fs::path& base) {
        const Json* v = find(key);
        if (!v) return std::nullopt;
        if (!v->is_string()) throw ConfigError(name(key) + " must be a path string");
        return resolve(v->get<std::string>(), base);
    }

    std::optional<Section> section(const char* key) {
        const Json* v = find(key);
        if (!v) return std::nullopt;
        return Section(*v, name(key));
    }

    /// Rejects keys nobody asked for (typos would otherwise be silently ignored).
    void finish() const {
        for (auto it = obj_.begin(); it != obj_.end(); ++it) {
            if (!seen_.count(it.key())) throw ConfigError("unknown config key " + name(it.key()));
        }
    }

    static fs::path resolve(const std::string& raw, const fs::path& base) {
        fs::path p(raw);
        return p.is_relative() && !base.empty() ? base / p : p;
    }

private:
    const Json& obj_;
    std::string prefix_;
    std::set<std::string> seen_;
};

void read_signal(Section& thresholds, Section* weights, const char* key, OdditySignal& signal) {
    thresholds.read(key, signal.threshold);
    if (weights) weights->read(key, signal.weight);
}

std::optional<Criterion> parse_criterion(std::string_view name) {
    for (auto c : kCriteria) {
        if (to_string(c) == name) return c;
    }
    return std::nullopt;
}

}  // namespace

void require_exists(const fs::path& path, const std::string& field) {
    if (!fs::exists(path)) throw ConfigError(field + ": path does not exist: " + path.string());
}

PipelineConfig parse_config(const Json& json, const fs::path& base_dir) {
    PipelineConfig cfg;
    Section root(json, "");

    if (const Json* input = root.find("input")) {
        if (input->is_string()) {
            cfg.inputs.push_back(Section::resolve(input->get<std::string>(), base_dir));
        } else if (input->is_array()) {
            for (const auto& p : *input) {
                if (!p.is_string()) throw ConfigError("input entries must be path strings");
                cfg.inputs.push_back(Section::resolve(p.get<std::string>(), base_dir));
            }
        } else {
            throw ConfigError("input must be a path or a list of paths");
        }
    }
    if (auto out = root.path("output", base_dir)) cfg.output_root = *out;
    root.read("language", cfg.language);
    root.read_uint("workers", cfg.workers);
    if (cfg.workers == 0) throw ConfigError("workers must be >= 1");

    if (auto lid = root.section("lid")) {
        cfg.lid.seeds = lid->path("seeds", base_dir);
        if (const Json* cmd = lid->find("command"); cmd && !cmd->is_null()) {
            if (!cmd->is_string() || cmd->get<std::string>().empty()) {
                throw ConfigError("lid.command must be a non-empty string");
            }
            cfg.lid.command = cmd->get<std::string>();
        }
        lid->read("min_confidence", cfg.lid.min_confidence);
        if (!(cfg.lid.min_confidence >= 0.0 && cfg.lid.min_confidence <= 1.0)) {
            throw ConfigError("lid.min_confidence must lie in [0, 1]");
        }
        if (cfg.lid.seeds && cfg.lid.command) throw ConfigError("lid: set either seeds or command, not both");
        lid->finish();
    }

    if (auto d = root.section("dedup")) {
        d->read_uint("shingle_order", cfg.dedup.shingle_order);
        d->read_uint("num_perm", cfg.dedup.num_perm);
        d->read_uint("seed", cfg.dedup.seed);
        d->read_uint("bands", cfg.dedup.bands);
        d->read_uint("rows", cfg.dedup.rows);
        d->read("threshold", cfg.dedup.threshold);
        d->read("exact_verification", cfg.dedup.exact_verification);
        std::string mode = std::string(to_string(cfg.dedup.mode));
        d->read("mode", mode);
        if (mode == "global") {
            cfg.dedup.mode = DedupMode::global;
        } else if (mode == "per_crawl") {
            cfg.dedup.mode = DedupMode::per_crawl;
        } else {
            throw ConfigError("dedup.mode must be \"global\" or \"per_crawl\"");
        }
        d->finish();
    }
    cfg.dedup.validate();

    if (auto w = root.section("wds")) {
        w->read("min_tokens", cfg.wds.min_tokens);
        w->read("target_tokens", cfg.wds.target_tokens);
        auto thresholds = w->section("thresholds");
        auto weights = w->section("weights");
        if (thresholds) {
            Section* wp = weights ? &*weights : nullptr;
            read_signal(*thresholds, wp, "non_letter_ratio", cfg.wds.non_letter_ratio);
            read_signal(*thresholds, wp, "digit_ratio", cfg.wds.digit_ratio);
            read_signal(*thresholds, wp, "repeated_line_ratio", cfg.wds.repeated_line_ratio);
            read_signal(*thresholds, wp, "url_density", cfg.wds.url_density);
            read_signal(*thresholds, wp, "avg_segment_tokens", cfg.wds.avg_segment_tokens);
            thresholds->finish();
        } else if (weights) {
            weights->read("non_letter_ratio", cfg.wds.non_letter_ratio.weight);
            weights->read("digit_ratio", cfg.wds.digit_ratio.weight);
            weights->read("repeated_line_ratio", cfg.wds.repeated_line_ratio.weight);
            weights->read("url_density", cfg.wds.url_density.weight);
            weights->read("avg_segment_tokens", cfg.wds.avg_segment_tokens.weight);
        }
        if (weights) weights->finish();
        if (const Json* lvl = w->find("min_level"); lvl && !lvl->is_null()) {
            if (!lvl->is_number_integer()) throw ConfigError("wds.min_level must be an integer");
            cfg.wds.min_level = lvl->get<int>();
        }
        w->finish();
    }
    cfg.wds.validate();

    if (auto p = root.section("packaging")) {
        p->read_uint("max_shard_bytes", cfg.packaging.max_shard_bytes);
        p->read("compression_level", cfg.packaging.compression_level);
        p->finish();
    }
    if (cfg.packaging.max_shard_bytes == 0) throw ConfigError("packaging.max_shard_bytes must be positive");
    if (cfg.packaging.compression_level < 1 || cfg.packaging.compression_level > 22) {
        throw ConfigError("packaging.compression_level must lie in [1, 22]");
    }

    if (auto a = root.section("analytics")) {
        cfg.analytics.stopwords = a->path("stopwords", base_dir);
        if (const Json* ref = a->find("reference_total_tokens")) {
            if (!ref->is_number() || !(ref->get<double>() > 0.0)) {
                throw ConfigError("analytics.reference_total_tokens must be a positive number");
            }
            cfg.analytics.reference_total_tokens = ref->get<double>();
        }
        a->finish();
    }

    if (auto e = root.section("eval")) {
        cfg.eval.grid = e->path("grid", base_dir);
        cfg.eval.tasks = e->path("tasks", base_dir);
        e->read("task_level_borda", cfg.eval.task_level_borda);
        std::string mode = "consecutive";
        e->read("ranking_mode", mode);
        if (mode == "consecutive") {
            cfg.eval.thresholds.ranking_mode = RankingMode::consecutive;
        } else if (mode == "against_final") {
            cfg.eval.thresholds.ranking_mode = RankingMode::against_final;
        } else {
            throw ConfigError("eval.ranking_mode must be \"consecutive\" or \"against_final\"");
        }
        if (const Json* t = e->find("thresholds")) {
            if (!t->is_object()) throw ConfigError("eval.thresholds must be an object");
            for (auto it = t->begin(); it != t->end(); ++it) {
                const auto criterion = parse_criterion(it.key());
                if (!criterion) throw ConfigError("unknown config key eval.thresholds." + it.key());
                if (it.value().is_null()) {
                    cfg.eval.thresholds.limits.erase(*criterion);
                } else if (it.value().is_number()) {
                    cfg.eval.thresholds.limits[*criterion] = it.value().get<double>();
                } else {
                    throw ConfigError("eval.thresholds." + it.key() + " must be a number or null");
                }
            }
        }
        e->finish();
    }
    root.finish();
    return cfg;
}

PipelineConfig load_config(const fs::path& path) {
    require_exists(path, "--config");
    Json json;
    try {
        json = read_json_file(path);
    } catch (const ParseError& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    auto cfg = parse_config(json, path.parent_path());
    validate_paths(cfg);
    return cfg;
}

void validate_paths(const PipelineConfig& cfg) {
    for (const auto& p : cfg.inputs) require_exists(p, "input");
    if (cfg.lid.seeds) require_exists(*cfg.lid.seeds, "lid.seeds");
    if (cfg.analytics.stopwords) require_exists(*cfg.analytics.stopwords, "analytics.stopwords");
    if (cfg.eval.grid) require_exists(*cfg.eval.grid, "eval.grid");
    if (cfg.eval.tasks) require_exists(*cfg.eval.tasks, "eval.tasks");
}

}  // namespace refinery
