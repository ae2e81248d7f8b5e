#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "refinery/document.hpp"

namespace refinery {

/// Text prepared for language identification: lowercased, letters and
/// combining marks only, single spaces, trimmed. Only normalize_for_lid
/// creates one.
class LidPrepText {
public:
    const std::string& text() const noexcept { return text_; }
    bool empty() const noexcept { return text_.empty(); }

    friend bool operator==(const LidPrepText&, const LidPrepText&) = default;

private:
    explicit LidPrepText(std::string text) : text_(std::move(text)) {}
    friend LidPrepText normalize_for_lid(std::string_view text);

    std::string text_;
};

/// Whitespace normalization, Unicode lowercasing, then every code point that
/// is not a letter or combining mark becomes a space; runs of spaces collapse
/// and the ends are trimmed. Letters that remain uppercase after lowercasing
/// (caseless capitals such as U+2102) are dropped as well.
LidPrepText normalize_for_lid(std::string_view text);

struct LangPrediction {
    std::string label;
    double confidence = 0.0;

    friend bool operator==(const LangPrediction&, const LangPrediction&) = default;
};

inline constexpr std::string_view kUndeterminedLanguage = "und";

/// Calling contract for language identifiers. Implementations are read-only
/// after construction; classify() must be safe to call concurrently.
class LanguageClassifier {
public:
    virtual ~LanguageClassifier() = default;

    /// Top label and its confidence. Empty input yields ("und", 0).
    virtual LangPrediction classify(const LidPrepText& text) const = 0;

    /// Declared label inventory; empty when the model does not expose one.
    virtual std::vector<std::string> inventory() const = 0;
};

/// Character n-gram multinomial naive Bayes trained from seed text.
/// Serves as the offline default when no external model is configured.
class NgramClassifier final : public LanguageClassifier {
public:
    struct Options {
        std::size_t max_order = 3;
        double smoothing = 0.5;
    };

    /// Seeds are raw text; they are normalized before counting.
    explicit NgramClassifier(const std::map<std::string, std::vector<std::string>>& seeds);
    NgramClassifier(const std::map<std::string, std::vector<std::string>>& seeds, Options options);

    /// Loads seeds from a JSON object mapping label -> string or array of strings.
    static NgramClassifier from_seed_file(const std::filesystem::path& path);

    LangPrediction classify(const LidPrepText& text) const override;
    std::vector<std::string> inventory() const override;

private:
    struct LanguageModel {
        std::string label;
        std::unordered_map<std::string, double> log_prob;
        double unseen_log_prob = 0.0;
    };

    std::vector<std::string> features(std::string_view normalized) const;

    Options options_;
    std::vector<LanguageModel> models_;  // sorted by label
};

/// Runs an external identifier as a long-lived child process. One normalized
/// line goes to its stdin per call; it must answer with one line
/// "<label> <confidence>" (tab or space separated). A fastText-style
/// "__label__" prefix is stripped. Calls are serialized.
class CommandClassifier final : public LanguageClassifier {
public:
    explicit CommandClassifier(std::string command);
    ~CommandClassifier() override;

    CommandClassifier(const CommandClassifier&) = delete;
    CommandClassifier& operator=(const CommandClassifier&) = delete;

    LangPrediction classify(const LidPrepText& text) const override;
    std::vector<std::string> inventory() const override { return {}; }

private:
    std::string command_;
    int pid_ = -1;
    int to_child_ = -1;
    int from_child_ = -1;
    mutable std::string read_buffer_;
    mutable std::mutex mutex_;
};

struct SegmentProfile {
    std::vector<std::string> seg_langs;
    double in_language_fraction = 0.0;
    bool warning = false;  // set when the document has no segments
};

/// Classifies every segment (after normalize_for_lid) and reports the share
/// labeled with doc.lang.
SegmentProfile profile_segments(const Document& doc, const LanguageClassifier& classifier);

/// Share of labels equal to `lang`; 0 for an empty list.
double in_language_fraction(const std::vector<std::string>& seg_langs, std::string_view lang);

}  // namespace refinery
