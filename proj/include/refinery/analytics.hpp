#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "refinery/document.hpp"
#include "refinery/text.hpp"

namespace refinery {

struct CorpusSummary {
    double document_count = 0.0;
    double token_count = 0.0;
    double avg_document_length = 0.0;  // token_count / document_count, unrounded
    double share_percent = 0.0;        // 100 * token_count / reference total
};

/// Summary from already-aggregated counts, e.g. published table rows.
CorpusSummary summarize_counts(double documents, double tokens, double reference_total_tokens);

/// Throws ContractError on an empty corpus or when the reference total is
/// smaller than the corpus token count.
CorpusSummary corpus_summary(const std::vector<Document>& documents, const Tokenizer& tokenizer,
                             std::optional<double> reference_total_tokens = std::nullopt);

/// A ratio that may be undefined for an empty population (value 0, warning set).
struct Ratio {
    double value = 0.0;
    bool warning = false;
};

/// Distinct segment strings over segment occurrences, corpus-wide.
Ratio unique_segment_ratio(const std::vector<Document>& documents);

inline constexpr std::size_t kLargeDocumentSegments = 25;  // strictly more is "large"
inline constexpr std::size_t kShortSegmentTokens = 3;      // strictly fewer is "short"

struct LengthProfile {
    double large_doc_ratio = 0.0;
    double short_segment_ratio = 0.0;
};

LengthProfile length_profiles(const std::vector<Document>& documents);

/// Micro-average over all segments of (segment label == document lang).
/// Throws ContractError naming the first document without seg_langs.
double in_language_ratio(const std::vector<Document>& documents);

inline constexpr std::size_t kMaxNgramOrder = 5;
inline constexpr std::size_t kTopNgrams = 5;

using NgramCount = std::pair<std::string, std::uint64_t>;

struct NgramReport {
    /// orders[n - 1] holds the top n-grams of order n.
    std::array<std::vector<NgramCount>, kMaxNgramOrder> orders;
};

using StopwordSet = std::unordered_set<std::string>;

/// Lowercased whitespace-token n-grams within segments, discarding any whose
/// first or last token is a stopword. Ties are broken lexicographically.
NgramReport top_ngrams(const std::vector<Document>& documents, const StopwordSet& stopwords,
                       std::size_t top_k = kTopNgrams);

struct DomainReport {
    std::map<std::string, std::uint64_t> host_counts;
    std::map<std::string, std::uint64_t> tld_counts;
    std::uint64_t unknown = 0;  // missing or unparseable url
    double wikipedia_share = 0.0;
};

/// Lowercased host of an absolute URL ("scheme://host..."); nullopt when unparseable.
std::optional<std::string> url_host(std::string_view url);

DomainReport domain_report(const std::vector<Document>& documents);

struct PercentInterval {
    int low = 0;
    int high = 0;
};

/// Wilson score interval as fractions, clamped to [0, 1].
std::pair<double, double> wilson_interval(std::uint64_t successes, std::uint64_t n, double z = 1.96);

/// 95% Wilson interval in whole percents (round half away from zero).
PercentInterval proportion_ci(std::uint64_t successes, std::uint64_t n);

/// Mergeable per-partition statistics. add() documents in any partition and
/// order, merge() partials, and finish() gives the same report.
class CorpusStats {
public:
    explicit CorpusStats(const StopwordSet* stopwords = nullptr, const Tokenizer* tokenizer = nullptr);

    void add(const Document& doc);
    void merge(const CorpusStats& other);

    std::uint64_t documents() const noexcept { return documents_; }
    std::uint64_t tokens() const noexcept { return tokens_; }
    std::uint64_t segments() const noexcept { return segments_; }

    Ratio unique_segment_ratio() const;
    LengthProfile length_profile() const;
    /// nullopt when some document lacked seg_langs.
    std::optional<double> in_language_ratio() const;
    std::optional<std::string> first_missing_seg_langs() const { return missing_seg_langs_; }
    NgramReport top_ngrams(std::size_t top_k = kTopNgrams) const;
    DomainReport domains() const;
    const std::map<std::string, std::uint64_t>& register_counts() const noexcept { return registers_; }

private:
    const StopwordSet* stopwords_;
    const Tokenizer* tokenizer_;
    std::uint64_t documents_ = 0;
    std::uint64_t tokens_ = 0;
    std::uint64_t segments_ = 0;
    std::uint64_t large_documents_ = 0;
    std::uint64_t short_segments_ = 0;
    std::uint64_t labeled_segments_ = 0;
    std::uint64_t in_language_segments_ = 0;
    std::optional<std::string> missing_seg_langs_;
    std::unordered_map<std::string, std::uint64_t> segment_counts_;
    std::array<std::unordered_map<std::string, std::uint64_t>, kMaxNgramOrder> ngram_counts_;
    std::map<std::string, std::uint64_t> hosts_;
    std::map<std::string, std::uint64_t> tlds_;
    std::uint64_t unknown_hosts_ = 0;
    std::uint64_t wikipedia_ = 0;
    std::map<std::string, std::uint64_t> registers_;
};

/// Whole-corpus report; statistics are computed over `workers` partitions and merged.
Json analyze(const std::vector<Document>& documents, const StopwordSet& stopwords,
             std::optional<double> reference_total_tokens, unsigned workers = 1);

/// Plain-text table rendering of an analyze() report.
std::string render_report_table(const Json& report);

Json to_json(const NgramReport& report);
Json to_json(const DomainReport& report);

}  // namespace refinery
