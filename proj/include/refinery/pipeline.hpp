#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string_view>
#include <vector>

#include "refinery/config.hpp"
#include "refinery/lid.hpp"

namespace refinery {

enum class Stage { lid, dedup, score, package, analyze, eval_agg, all };

std::optional<Stage> parse_stage(std::string_view name);
std::string_view to_string(Stage stage) noexcept;

/// Stage inputs and the directory its outputs go to.
struct StageIo {
    std::vector<std::filesystem::path> inputs;
    std::filesystem::path output;
};

/// Outcome of one stage. `report` is deterministic (counts, removals by
/// reason, parameters) and is written to <output>/report.json; wall time is
/// kept apart in <output>/timing.json so reruns compare byte-identical.
struct StageResult {
    Json report;
    double wall_seconds = 0.0;
};

/// Builds the configured classifier: the external command when set, otherwise
/// the n-gram model from the seed file; nullptr when neither is configured.
std::unique_ptr<LanguageClassifier> make_classifier(const LidConfig& config);

/// Runs one stage. `all` chains lid, dedup, score, package and analyze
/// through <output>/<stage>/ subdirectories. Every output file is written
/// atomically.
StageResult run_stage(Stage stage, const PipelineConfig& config, const StageIo& io, unsigned workers);

/// Default StageIo for a stage: config inputs and <output_root>/<stage>.
StageIo default_io(Stage stage, const PipelineConfig& config);

}  // namespace refinery
