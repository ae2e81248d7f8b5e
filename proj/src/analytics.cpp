#include "refinery/analytics.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <sstream>

#include "refinery/errors.hpp"
#include "refinery/parallel.hpp"

namespace refinery {

CorpusSummary summarize_counts(double documents, double tokens, double reference_total_tokens) {
    if (!(documents >= 1.0)) throw ContractError("corpus summary needs at least one document");
    if (!(tokens >= 0.0)) throw ContractError("token count must be non-negative");
    if (!(reference_total_tokens > 0.0) || reference_total_tokens < tokens) {
        throw ContractError("reference token total must be positive and at least the corpus token count");
    }
    CorpusSummary s;
    s.document_count = documents;
    s.token_count = tokens;
    s.avg_document_length = tokens / documents;
    s.share_percent = 100.0 * tokens / reference_total_tokens;
    return s;
}

CorpusSummary corpus_summary(const std::vector<Document>& documents, const Tokenizer& tokenizer,
                             std::optional<double> reference_total_tokens) {
    if (documents.empty()) throw ContractError("corpus summary of an empty corpus");
    std::uint64_t tokens = 0;
    for (const auto& doc : documents) tokens += tokenizer.count_tokens(doc.text);
    const double t = static_cast<double>(tokens);
    if (!reference_total_tokens && t == 0.0) {
        CorpusSummary s;
        s.document_count = static_cast<double>(documents.size());
        s.share_percent = 100.0;
        return s;
    }
    return summarize_counts(static_cast<double>(documents.size()), t, reference_total_tokens.value_or(t));
}

// --- mergeable statistics ---------------------------------------------------

namespace {

const WhitespaceTokenizer kWhitespace;

bool is_host_char(unsigned char c) {
    return (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '-' || c == '_' || c >= 0x80;
}

}  // namespace

std::optional<std::string> url_host(std::string_view url) {
    const auto sep = url.find("://");
    if (sep == std::string_view::npos || sep == 0) return std::nullopt;
    for (std::size_t i = 0; i < sep; ++i) {
        const char c = url[i];
        const bool alpha = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z');
        const bool ok = alpha || (i > 0 && ((c >= '0' && c <= '9') || c == '+' || c == '-' || c == '.'));
        if (!ok) return std::nullopt;
    }
    auto authority = url.substr(sep + 3);
    authority = authority.substr(0, authority.find_first_of("/?#"));
    if (const auto at = authority.rfind('@'); at != std::string_view::npos) authority.remove_prefix(at + 1);
    if (authority.empty() || authority.front() == '[') return std::nullopt;
    if (const auto colon = authority.find(':'); colon != std::string_view::npos) {
        const auto port = authority.substr(colon + 1);
        if (!std::all_of(port.begin(), port.end(), [](char c) { return c >= '0' && c <= '9'; })) {
            return std::nullopt;
        }
        authority = authority.substr(0, colon);
    }
    std::string host(authority);
    for (char& c : host) {
        if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
    }
    if (!host.empty() && host.back() == '.') host.pop_back();
    if (host.empty() || host.front() == '.') return std::nullopt;
    bool prev_dot = false;
    for (char c : host) {
        if (c == '.') {
            if (prev_dot) return std::nullopt;
            prev_dot = true;
            continue;
        }
        prev_dot = false;
        if (!is_host_char(static_cast<unsigned char>(c))) return std::nullopt;
    }
    return host;
}

CorpusStats::CorpusStats(const StopwordSet* stopwords, const Tokenizer* tokenizer)
    : stopwords_(stopwords), tokenizer_(tokenizer ? tokenizer : &kWhitespace) {}

void CorpusStats::add(const Document& doc) {
    ++documents_;
    tokens_ += tokenizer_->count_tokens(doc.text);
    const auto segments = segment_text(doc.text);
    segments_ += segments.size();
    if (segments.size() > kLargeDocumentSegments) ++large_documents_;

    if (doc.seg_langs && doc.seg_langs->size() == segments.size()) {
        labeled_segments_ += segments.size();
        in_language_segments_ +=
            static_cast<std::uint64_t>(std::count(doc.seg_langs->begin(), doc.seg_langs->end(), doc.lang));
    } else if (!missing_seg_langs_) {
        missing_seg_langs_ = doc.id;
    }

    for (const auto& seg : segments) {
        if (seg.token_count < kShortSegmentTokens) ++short_segments_;
        ++segment_counts_[seg.text];
        if (!stopwords_) continue;
        const std::string lowered = to_lower(seg.text);
        const auto tokens = whitespace_tokens(lowered);
        for (std::size_t i = 0; i < tokens.size(); ++i) {
            if (stopwords_->count(std::string(tokens[i]))) continue;
            std::string gram;
            for (std::size_t n = 1; n <= kMaxNgramOrder && i + n <= tokens.size(); ++n) {
                if (n > 1) gram.push_back(' ');
                gram.append(tokens[i + n - 1]);
                if (stopwords_->count(std::string(tokens[i + n - 1]))) continue;
                ++ngram_counts_[n - 1][gram];
            }
        }
    }

    if (auto host = doc.url ? url_host(*doc.url) : std::nullopt) {
        const auto dot = host->rfind('.');
        ++tlds_[dot == std::string::npos ? *host : host->substr(dot + 1)];
        if (*host == "wikipedia.org" || (host->size() > 14 && host->ends_with(".wikipedia.org"))) ++wikipedia_;
        ++hosts_[std::move(*host)];
    } else {
        ++unknown_hosts_;
    }
    if (doc.register_label) ++registers_[*doc.register_label];
}

void CorpusStats::merge(const CorpusStats& other) {
    documents_ += other.documents_;
    tokens_ += other.tokens_;
    segments_ += other.segments_;
    large_documents_ += other.large_documents_;
    short_segments_ += other.short_segments_;
    labeled_segments_ += other.labeled_segments_;
    in_language_segments_ += other.in_language_segments_;
    if (!missing_seg_langs_) missing_seg_langs_ = other.missing_seg_langs_;
    for (const auto& [seg, count] : other.segment_counts_) segment_counts_[seg] += count;
    for (std::size_t n = 0; n < kMaxNgramOrder; ++n) {
        for (const auto& [gram, count] : other.ngram_counts_[n]) ngram_counts_[n][gram] += count;
    }
    for (const auto& [host, count] : other.hosts_) hosts_[host] += count;
    for (const auto& [tld, count] : other.tlds_) tlds_[tld] += count;
    unknown_hosts_ += other.unknown_hosts_;
    wikipedia_ += other.wikipedia_;
    for (const auto& [label, count] : other.registers_) registers_[label] += count;
}

Ratio CorpusStats::unique_segment_ratio() const {
    if (segments_ == 0) return {0.0, true};
    return {static_cast<double>(segment_counts_.size()) / static_cast<double>(segments_), false};
}

LengthProfile CorpusStats::length_profile() const {
    LengthProfile p;
    if (documents_ > 0) p.large_doc_ratio = static_cast<double>(large_documents_) / static_cast<double>(documents_);
    if (segments_ > 0) p.short_segment_ratio = static_cast<double>(short_segments_) / static_cast<double>(segments_);
    return p;
}

std::optional<double> CorpusStats::in_language_ratio() const {
    if (missing_seg_langs_) return std::nullopt;
    if (labeled_segments_ == 0) return 0.0;
    return static_cast<double>(in_language_segments_) / static_cast<double>(labeled_segments_);
}

NgramReport CorpusStats::top_ngrams(std::size_t top_k) const {
    NgramReport report;
    for (std::size_t n = 0; n < kMaxNgramOrder; ++n) {
        std::vector<NgramCount> entries(ngram_counts_[n].begin(), ngram_counts_[n].end());
        const auto better = [](const NgramCount& a, const NgramCount& b) {
            if (a.second != b.second) return a.second > b.second;
            return a.first < b.first;
        };
        const std::size_t keep = std::min(top_k, entries.size());
        std::partial_sort(entries.begin(), entries.begin() + static_cast<std::ptrdiff_t>(keep), entries.end(), better);
        entries.resize(keep);
        report.orders[n] = std::move(entries);
    }
    return report;
}

DomainReport CorpusStats::domains() const {
    DomainReport r;
    r.host_counts = hosts_;
    r.tld_counts = tlds_;
    r.unknown = unknown_hosts_;
    if (documents_ > 0) r.wikipedia_share = static_cast<double>(wikipedia_) / static_cast<double>(documents_);
    return r;
}

// --- free-function views ----------------------------------------------------

namespace {

CorpusStats collect(const std::vector<Document>& documents, const StopwordSet* stopwords) {
    CorpusStats stats(stopwords);
    for (const auto& doc : documents) stats.add(doc);
    return stats;
}

}  // namespace

Ratio unique_segment_ratio(const std::vector<Document>& documents) {
    return collect(documents, nullptr).unique_segment_ratio();
}

LengthProfile length_profiles(const std::vector<Document>& documents) {
    return collect(documents, nullptr).length_profile();
}

double in_language_ratio(const std::vector<Document>& documents) {
    for (const auto& doc : documents) {
        if (!doc.seg_langs) throw ContractError("document " + doc.id + " has no seg_langs");
    }
    return collect(documents, nullptr).in_language_ratio().value_or(0.0);
}

NgramReport top_ngrams(const std::vector<Document>& documents, const StopwordSet& stopwords, std::size_t top_k) {
    return collect(documents, &stopwords).top_ngrams(top_k);
}

DomainReport domain_report(const std::vector<Document>& documents) { return collect(documents, nullptr).domains(); }

std::pair<double, double> wilson_interval(std::uint64_t successes, std::uint64_t n, double z) {
    if (n == 0) throw ContractError("confidence interval needs a non-empty sample");
    if (successes > n) throw ContractError("successes exceed the sample size");
    const double nn = static_cast<double>(n);
    const double p = static_cast<double>(successes) / nn;
    const double z2 = z * z;
    const double denom = 1.0 + z2 / nn;
    const double center = p + z2 / (2.0 * nn);
    const double margin = z * std::sqrt(p * (1.0 - p) / nn + z2 / (4.0 * nn * nn));
    return {std::clamp((center - margin) / denom, 0.0, 1.0), std::clamp((center + margin) / denom, 0.0, 1.0)};
}

PercentInterval proportion_ci(std::uint64_t successes, std::uint64_t n) {
    const auto [low, high] = wilson_interval(successes, n);
    // std::round rounds half away from zero.
    return {static_cast<int>(std::round(low * 100.0)), static_cast<int>(std::round(high * 100.0))};
}

// --- report -----------------------------------------------------------------

Json to_json(const NgramReport& report) {
    Json obj = Json::object();
    for (std::size_t n = 0; n < kMaxNgramOrder; ++n) {
        Json list = Json::array();
        for (const auto& [gram, count] : report.orders[n]) list.push_back(Json::array({gram, count}));
        obj[std::to_string(n + 1)] = std::move(list);
    }
    return obj;
}

Json to_json(const DomainReport& report) {
    Json obj = Json::object();
    obj["hosts"] = report.host_counts;
    obj["tlds"] = report.tld_counts;
    obj["unknown"] = report.unknown;
    obj["wikipedia_share"] = report.wikipedia_share;
    return obj;
}

Json analyze(const std::vector<Document>& documents, const StopwordSet& stopwords,
             std::optional<double> reference_total_tokens, unsigned workers) {
    if (documents.empty()) throw ContractError("cannot analyze an empty corpus");
    const std::size_t parts = std::max(1u, workers);
    std::vector<CorpusStats> partial(parts, CorpusStats(&stopwords));
    const std::size_t chunk = (documents.size() + parts - 1) / parts;
    parallel_for(parts, workers, [&](std::size_t p) {
        const std::size_t end = std::min(documents.size(), (p + 1) * chunk);
        for (std::size_t i = p * chunk; i < end; ++i) partial[p].add(documents[i]);
    });
    CorpusStats stats(&stopwords);
    for (const auto& part : partial) stats.merge(part);

    const auto tokens = static_cast<double>(stats.tokens());
    const CorpusSummary summary =
        tokens == 0.0 && !reference_total_tokens
            ? CorpusSummary{static_cast<double>(stats.documents()), 0.0, 0.0, 100.0}
            : summarize_counts(static_cast<double>(stats.documents()), tokens, reference_total_tokens.value_or(tokens));

    Json report = Json::object();
    report["documents"] = stats.documents();
    report["tokens"] = stats.tokens();
    report["segments"] = stats.segments();
    report["avg_document_length"] = summary.avg_document_length;
    report["share_percent"] = summary.share_percent;
    const auto unique = stats.unique_segment_ratio();
    report["unique_segment_ratio"] = unique.value;
    if (unique.warning) report["warnings"].push_back("corpus has no segments");
    const auto lengths = stats.length_profile();
    report["large_doc_ratio"] = lengths.large_doc_ratio;
    report["short_segment_ratio"] = lengths.short_segment_ratio;
    if (auto ratio = stats.in_language_ratio()) {
        report["in_language_ratio"] = *ratio;
    } else {
        report["in_language_ratio"] = nullptr;
        report["warnings"].push_back("document " + *stats.first_missing_seg_langs() +
                                     " has no seg_langs; in-language ratio not computed");
    }
    report["top_ngrams"] = to_json(stats.top_ngrams());
    report["domains"] = to_json(stats.domains());
    report["registers"] = stats.register_counts();
    return report;
}

std::string render_report_table(const Json& report) {
    std::ostringstream out;
    out << std::fixed;
    out << std::left << std::setw(24) << "documents" << report.at("documents").get<std::uint64_t>() << '\n';
    out << std::setw(24) << "tokens" << report.at("tokens").get<std::uint64_t>() << '\n';
    out << std::setw(24) << "avg document length" << std::setprecision(0)
        << report.at("avg_document_length").get<double>() << '\n';
    out << std::setw(24) << "token share %" << std::setprecision(2) << report.at("share_percent").get<double>()
        << '\n';
    out << std::setw(24) << "unique segments %" << std::setprecision(1)
        << 100.0 * report.at("unique_segment_ratio").get<double>() << '\n';
    out << std::setw(24) << "large documents %" << 100.0 * report.at("large_doc_ratio").get<double>() << '\n';
    out << std::setw(24) << "short segments %" << 100.0 * report.at("short_segment_ratio").get<double>() << '\n';
    out << std::setw(24) << "in-language segments %";
    if (report.at("in_language_ratio").is_null()) {
        out << "n/a\n";
    } else {
        out << 100.0 * report.at("in_language_ratio").get<double>() << '\n';
    }
    out << std::setw(24) << "wikipedia share %" << 100.0 * report.at("domains").at("wikipedia_share").get<double>()
        << '\n';
    out << "\ntop n-grams\n";
    const auto& grams = report.at("top_ngrams");
    for (auto it = grams.begin(); it != grams.end(); ++it) {
        out << "  n=" << it.key() << ':';
        for (const auto& entry : it.value()) {
            out << "  " << entry[0].get<std::string>() << " (" << entry[1].get<std::uint64_t>() << ')';
        }
        out << '\n';
    }
    out << "\ntop-level domains\n";
    std::vector<std::pair<std::string, std::uint64_t>> tlds;
    for (const auto& [tld, count] : report.at("domains").at("tlds").items()) {
        tlds.emplace_back(tld, count.get<std::uint64_t>());
    }
    std::stable_sort(tlds.begin(), tlds.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
    for (std::size_t i = 0; i < std::min<std::size_t>(tlds.size(), 10); ++i) {
        out << "  " << std::setw(12) << tlds[i].first << tlds[i].second << '\n';
    }
    return out.str();
}

}  // namespace refinery
