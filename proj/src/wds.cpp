#include "refinery/wds.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include <unicode/uchar.h>

#include "refinery/errors.hpp"
#include "refinery/text.hpp"

namespace refinery {

namespace {

bool starts_with_ci(std::string_view token, std::string_view prefix) {
    if (token.size() < prefix.size()) return false;
    for (std::size_t i = 0; i < prefix.size(); ++i) {
        char c = token[i];
        if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
        if (c != prefix[i]) return false;
    }
    return true;
}

bool is_url_token(std::string_view token) {
    return starts_with_ci(token, "http://") || starts_with_ci(token, "https://") || starts_with_ci(token, "www.");
}

double exceedance(double value, const OdditySignal& signal) {
    if (signal.threshold <= 0.0) return value > 0.0 ? 1.0 : 0.0;
    return std::clamp((value - signal.threshold) / signal.threshold, 0.0, 1.0);
}

void check_signal(const OdditySignal& s, const char* name) {
    if (!(s.threshold >= 0.0) || !(s.weight >= 0.0) || !std::isfinite(s.threshold) || !std::isfinite(s.weight)) {
        throw ConfigError(std::string("wds.") + name + " threshold and weight must be finite and >= 0");
    }
}

}  // namespace

std::map<std::string, double> WdsSubsignals::as_map() const {
    return {{"non_letter_ratio", non_letter_ratio},
            {"digit_ratio", digit_ratio},
            {"repeated_line_ratio", repeated_line_ratio},
            {"url_density", url_density},
            {"avg_segment_tokens", avg_segment_tokens}};
}

void WdsParams::validate() const {
    if (!(min_tokens >= 0.0) || !(target_tokens > min_tokens)) {
        throw ConfigError("wds.min_tokens must be >= 0 and below wds.target_tokens");
    }
    check_signal(non_letter_ratio, "non_letter_ratio");
    check_signal(digit_ratio, "digit_ratio");
    check_signal(repeated_line_ratio, "repeated_line_ratio");
    check_signal(url_density, "url_density");
    check_signal(avg_segment_tokens, "avg_segment_tokens");
    if (min_level && (*min_level < 0 || *min_level > 11)) throw ConfigError("wds.min_level must lie in [0, 11]");
}

WdsSubsignals compute_subsignals(std::string_view text) {
    WdsSubsignals s;
    std::size_t visible = 0;
    std::size_t letters = 0;
    std::size_t digits = 0;
    for (std::size_t pos = 0; pos < text.size();) {
        const char32_t cp = next_code_point(text, pos);
        if (is_unicode_space(cp)) continue;
        ++visible;
        const auto mask = U_GET_GC_MASK(static_cast<UChar32>(cp));
        if (mask & (U_GC_L_MASK | U_GC_M_MASK)) ++letters;
        if (mask & U_GC_ND_MASK) ++digits;
    }
    if (visible > 0) {
        s.non_letter_ratio = static_cast<double>(visible - letters) / static_cast<double>(visible);
        s.digit_ratio = static_cast<double>(digits) / static_cast<double>(visible);
    }

    const auto segments = segment_text(text);
    std::size_t tokens = 0;
    std::size_t urls = 0;
    std::size_t repeated = 0;
    std::unordered_set<std::string_view> seen;
    for (const auto& seg : segments) {
        if (!seen.insert(seg.text).second) ++repeated;
        for (auto tok : whitespace_tokens(seg.text)) {
            ++tokens;
            urls += is_url_token(tok);
        }
    }
    if (!segments.empty()) {
        s.repeated_line_ratio = static_cast<double>(repeated) / static_cast<double>(segments.size());
        s.avg_segment_tokens = static_cast<double>(tokens) / static_cast<double>(segments.size());
    }
    if (tokens > 0) s.url_density = 100.0 * static_cast<double>(urls) / static_cast<double>(tokens);
    return s;
}

double length_score(double tokens, const WdsParams& params) {
    if (tokens < params.min_tokens) return 0.0;
    if (tokens >= params.target_tokens) return 1.0;
    return (tokens - params.min_tokens) / (params.target_tokens - params.min_tokens);
}

double oddity_penalty(const WdsSubsignals& s, const WdsParams& p) {
    const double sum = p.non_letter_ratio.weight * exceedance(s.non_letter_ratio, p.non_letter_ratio) +
                       p.digit_ratio.weight * exceedance(s.digit_ratio, p.digit_ratio) +
                       p.repeated_line_ratio.weight * exceedance(s.repeated_line_ratio, p.repeated_line_ratio) +
                       p.url_density.weight * exceedance(s.url_density, p.url_density) +
                       p.avg_segment_tokens.weight * exceedance(s.avg_segment_tokens, p.avg_segment_tokens);
    return std::clamp(sum, 0.0, 1.0);
}

WdsReport score_document(const Document& doc, double seg_profile, const WdsParams& params) {
    if (!(seg_profile >= 0.0 && seg_profile <= 1.0)) {
        throw ContractError("document " + doc.id + ": segment profile must lie in [0, 1]");
    }
    WdsReport report;
    if (trim(doc.text).empty()) return report;

    report.subsignals = compute_subsignals(doc.text);
    report.token_count = count_whitespace_tokens(doc.text);
    report.language_share_score = seg_profile;
    report.length_score = length_score(static_cast<double>(report.token_count), params);
    report.oddity_penalty = oddity_penalty(report.subsignals, params);
    const double score =
        10.0 * report.language_share_score * report.length_score * (1.0 - report.oddity_penalty);
    report.score = std::clamp(score, 0.0, 10.0);
    report.level = wds_level(report.score);
    return report;
}

int wds_level(double score) {
    if (!(score >= 0.0 && score <= 10.0)) {
        throw ContractError("WDS score " + std::to_string(score) + " outside [0, 10]");
    }
    return static_cast<int>(std::floor(score));
}

void annotate(Document& doc, const WdsReport& report) {
    doc.wds = report.score;
    doc.wds_subsignals = report.subsignals.as_map();
}

LevelFilterResult filter_by_level(std::vector<Document> documents, int min_level) {
    LevelFilterResult result;
    for (auto& doc : documents) {
        if (!doc.wds) throw ContractError("document " + doc.id + " has no WDS score");
        if (wds_level(*doc.wds) >= min_level) {
            result.retained.push_back(std::move(doc));
        } else {
            doc.removed_reason = RemovedReason::below_wds;
            result.removed.push_back(std::move(doc));
        }
    }
    return result;
}

}  // namespace refinery
