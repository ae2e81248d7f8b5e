#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace refinery {

using Json = nlohmann::ordered_json;

enum class RemovedReason { duplicate, below_wds, lid_rejected };

std::string_view to_string(RemovedReason reason) noexcept;
std::optional<RemovedReason> parse_removed_reason(std::string_view name) noexcept;

/// One web document plus its pipeline annotations.
///
/// Keys the pipeline does not know about are kept in `extras`, in their
/// original order, and written back after the known keys.
struct Document {
    std::string id;
    std::optional<std::string> url;
    std::string collection;
    std::string lang;
    std::string text;
    std::optional<std::vector<std::string>> seg_langs;
    std::optional<double> wds;
    std::optional<std::map<std::string, double>> wds_subsignals;
    std::optional<std::string> register_label;
    std::optional<RemovedReason> removed_reason;
    Json extras = Json::object();

    friend bool operator==(const Document&, const Document&) = default;
};

/// One non-empty, trimmed line of a document.
struct Segment {
    std::size_t index = 0;
    std::string text;
    std::size_t token_count = 0;

    friend bool operator==(const Segment&, const Segment&) = default;
};

struct Corpus {
    std::vector<Document> documents;
    std::string language;
};

/// Splits on '\n', trims each line and drops blank lines. Indices are consecutive.
std::vector<Segment> segment_text(std::string_view text);

std::size_t count_segments(std::string_view text);

/// Parses and validates one JSON Lines record.
/// Throws ParseError (with byte offset) on malformed JSON and SchemaError on
/// missing or ill-typed fields.
Document parse_document_line(std::string_view line);

/// Field-level validation shared by the parser and by stages that mutate documents.
void validate_document(const Document& doc);

Json to_json(const Document& doc);

/// Compact single-line JSON, no trailing newline.
std::string serialize_document(const Document& doc);

/// Ordering key used by the keep rule in dedup and by tie-breaks in packaging.
inline bool collection_id_less(const Document& a, const Document& b) noexcept {
    if (a.collection != b.collection) return a.collection < b.collection;
    return a.id < b.id;
}

/// Throws SchemaError if two documents share an id.
void check_unique_ids(const std::vector<Document>& documents);

}  // namespace refinery
