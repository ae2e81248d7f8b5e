#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "refinery/dedup.hpp"
#include "refinery/document.hpp"
#include "refinery/eval_agg.hpp"
#include "refinery/packaging.hpp"
#include "refinery/wds.hpp"

namespace refinery {

struct LidConfig {
    std::optional<std::filesystem::path> seeds;  // NgramClassifier seed file
    std::optional<std::string> command;           // external classifier command
    double min_confidence = 0.0;
};

struct PackagingConfig {
    std::uint64_t max_shard_bytes = 1ULL << 30;
    int compression_level = 9;
};

struct AnalyticsConfig {
    std::optional<std::filesystem::path> stopwords;
    std::optional<double> reference_total_tokens;
};

struct EvalConfig {
    std::optional<std::filesystem::path> grid;
    std::optional<std::filesystem::path> tasks;
    SelectionThresholds thresholds;
    bool task_level_borda = false;
};

/// Declarative pipeline configuration (one JSON file). Relative paths are
/// resolved against the directory holding the config file.
struct PipelineConfig {
    std::vector<std::filesystem::path> inputs;
    std::filesystem::path output_root = "refinery-out";
    std::string language;
    unsigned workers = 1;
    LidConfig lid;
    DedupParams dedup;
    WdsParams wds;
    PackagingConfig packaging;
    AnalyticsConfig analytics;
    EvalConfig eval;
};

/// Parses and range-checks a config. Unknown keys and out-of-range values
/// throw ConfigError naming the field (e.g. "dedup.bands").
PipelineConfig parse_config(const Json& json, const std::filesystem::path& base_dir = {});

/// Reads, parses and checks that every referenced path exists.
PipelineConfig load_config(const std::filesystem::path& path);

/// Throws ConfigError naming the first configured path that does not exist.
void validate_paths(const PipelineConfig& config);

/// Throws ConfigError if a referenced path does not exist.
void require_exists(const std::filesystem::path& path, const std::string& field);

}  // namespace refinery
