#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "refinery/document.hpp"

namespace refinery {

/// Raw per-document signals. Ratios are over non-whitespace code points;
/// url_density is URL-like tokens per 100 tokens.
struct WdsSubsignals {
    double non_letter_ratio = 0.0;
    double digit_ratio = 0.0;
    double repeated_line_ratio = 0.0;
    double url_density = 0.0;
    double avg_segment_tokens = 0.0;

    std::map<std::string, double> as_map() const;
};

/// One oddity signal's limit and weight. Exceedance is (value - threshold) / threshold,
/// clamped to [0, 1]; a threshold of 0 makes any positive value fully exceed.
struct OdditySignal {
    double threshold = 0.0;
    double weight = 0.0;
};

struct WdsParams {
    double min_tokens = 20.0;
    double target_tokens = 200.0;
    OdditySignal non_letter_ratio{0.3, 0.5};
    OdditySignal digit_ratio{0.2, 0.5};
    OdditySignal repeated_line_ratio{0.2, 0.5};
    OdditySignal url_density{0.1, 0.5};
    OdditySignal avg_segment_tokens{0.0, 0.0};  // informational by default
    std::optional<int> min_level;               // filter stage disabled when unset

    void validate() const;
};

struct WdsReport {
    double language_share_score = 0.0;
    double length_score = 0.0;
    double oddity_penalty = 0.0;
    WdsSubsignals subsignals;
    std::size_t token_count = 0;
    double score = 0.0;
    int level = 0;
};

WdsSubsignals compute_subsignals(std::string_view text);

/// 0 below min_tokens, 1 at or above target_tokens, linear in between.
double length_score(double tokens, const WdsParams& params);

double oddity_penalty(const WdsSubsignals& signals, const WdsParams& params);

/// score = 10 * language_share * length * (1 - oddity), evaluated left to right.
WdsReport score_document(const Document& doc, double seg_profile, const WdsParams& params = {});

/// floor(score) for scores in [0, 10]; throws ContractError otherwise.
int wds_level(double score);

/// Writes the score and subsignals into the document metadata.
void annotate(Document& doc, const WdsReport& report);

struct LevelFilterResult {
    std::vector<Document> retained;
    std::vector<Document> removed;  // removed_reason = below_wds
};

/// Keeps documents whose level is at least min_level. Unscored documents are a contract error.
LevelFilterResult filter_by_level(std::vector<Document> documents, int min_level);

}  // namespace refinery
