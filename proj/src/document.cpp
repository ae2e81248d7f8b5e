#include "refinery/document.hpp"

#include <array>
#include <unordered_set>

#include "refinery/errors.hpp"
#include "refinery/text.hpp"

namespace refinery {

namespace {

constexpr std::array<std::string_view, 10> kKnownKeys = {
    "id", "url", "collection", "lang", "text", "seg_langs", "wds", "wds_subsignals", "register",
    "removed_reason"};

bool is_known_key(std::string_view key) {
    for (auto k : kKnownKeys) {
        if (k == key) return true;
    }
    return false;
}

const Json& require(const Json& obj, const char* field) {
    auto it = obj.find(field);
    if (it == obj.end()) throw SchemaError(field, std::string("missing required field \"") + field + "\"");
    return *it;
}

std::string as_string(const Json& value, const char* field) {
    if (!value.is_string()) throw SchemaError(field, std::string("field \"") + field + "\" must be a string");
    return value.get<std::string>();
}

}  // namespace

std::string_view to_string(RemovedReason reason) noexcept {
    switch (reason) {
        case RemovedReason::duplicate: return "duplicate";
        case RemovedReason::below_wds: return "below_wds";
        case RemovedReason::lid_rejected: return "lid_rejected";
    }
    return "unknown";
}

std::optional<RemovedReason> parse_removed_reason(std::string_view name) noexcept {
    if (name == "duplicate") return RemovedReason::duplicate;
    if (name == "below_wds") return RemovedReason::below_wds;
    if (name == "lid_rejected") return RemovedReason::lid_rejected;
    return std::nullopt;
}

std::vector<Segment> segment_text(std::string_view text) {
    std::vector<Segment> segments;
    std::size_t start = 0;
    while (start <= text.size()) {
        std::size_t end = text.find('\n', start);
        if (end == std::string_view::npos) end = text.size();
        const auto line = trim(text.substr(start, end - start));
        if (!line.empty()) {
            segments.push_back(Segment{segments.size(), std::string(line), count_whitespace_tokens(line)});
        }
        start = end + 1;
    }
    return segments;
}

std::size_t count_segments(std::string_view text) {
    std::size_t count = 0;
    std::size_t start = 0;
    while (start <= text.size()) {
        std::size_t end = text.find('\n', start);
        if (end == std::string_view::npos) end = text.size();
        if (!trim(text.substr(start, end - start)).empty()) ++count;
        start = end + 1;
    }
    return count;
}

void validate_document(const Document& doc) {
    if (doc.id.empty()) throw SchemaError("id", "field \"id\" must be non-empty");
    if (doc.lang.empty()) throw SchemaError("lang", "field \"lang\" must be non-empty");
    if (!is_valid_utf8(doc.text)) throw SchemaError("text", "field \"text\" is not valid UTF-8");
    if (doc.seg_langs && doc.seg_langs->size() != count_segments(doc.text)) {
        throw SchemaError("seg_langs", "document " + doc.id + ": seg_langs has " +
                                           std::to_string(doc.seg_langs->size()) +
                                           " entries but text has " +
                                           std::to_string(count_segments(doc.text)) + " segments");
    }
    if (doc.wds && !(*doc.wds >= 0.0 && *doc.wds <= 10.0)) {
        throw SchemaError("wds", "document " + doc.id + ": wds must lie in [0, 10]");
    }
}

Document parse_document_line(std::string_view line) {
    Json obj;
    try {
        obj = Json::parse(line.begin(), line.end());
    } catch (const Json::parse_error& e) {
        const std::size_t offset = e.byte > 0 ? e.byte - 1 : 0;
        throw ParseError("malformed JSON at byte " + std::to_string(offset) + ": " + e.what(), offset);
    }
    if (!obj.is_object()) throw ParseError("document line is not a JSON object", 0);

    Document doc;
    doc.id = as_string(require(obj, "id"), "id");
    doc.text = as_string(require(obj, "text"), "text");
    doc.lang = as_string(require(obj, "lang"), "lang");

    for (auto it = obj.begin(); it != obj.end(); ++it) {
        const std::string& key = it.key();
        const Json& value = it.value();
        if (!is_known_key(key)) {
            doc.extras[key] = value;
            continue;
        }
        if (value.is_null() && key != "id" && key != "text" && key != "lang") continue;
        if (key == "url") {
            doc.url = as_string(value, "url");
        } else if (key == "collection") {
            doc.collection = as_string(value, "collection");
        } else if (key == "seg_langs") {
            if (!value.is_array()) throw SchemaError("seg_langs", "field \"seg_langs\" must be an array");
            std::vector<std::string> langs;
            langs.reserve(value.size());
            for (const auto& v : value) langs.push_back(as_string(v, "seg_langs"));
            doc.seg_langs = std::move(langs);
        } else if (key == "wds") {
            if (!value.is_number()) throw SchemaError("wds", "field \"wds\" must be a number");
            doc.wds = value.get<double>();
        } else if (key == "wds_subsignals") {
            if (!value.is_object()) {
                throw SchemaError("wds_subsignals", "field \"wds_subsignals\" must be an object");
            }
            std::map<std::string, double> signals;
            for (auto s = value.begin(); s != value.end(); ++s) {
                if (!s.value().is_number()) {
                    throw SchemaError("wds_subsignals", "wds_subsignals values must be numbers");
                }
                signals[s.key()] = s.value().get<double>();
            }
            doc.wds_subsignals = std::move(signals);
        } else if (key == "register") {
            doc.register_label = as_string(value, "register");
        } else if (key == "removed_reason") {
            auto reason = parse_removed_reason(as_string(value, "removed_reason"));
            if (!reason) throw SchemaError("removed_reason", "unknown removed_reason \"" + value.get<std::string>() + "\"");
            doc.removed_reason = reason;
        }
    }
    validate_document(doc);
    return doc;
}

Json to_json(const Document& doc) {
    Json obj = Json::object();
    obj["id"] = doc.id;
    if (doc.url) obj["url"] = *doc.url;
    obj["collection"] = doc.collection;
    obj["lang"] = doc.lang;
    obj["text"] = doc.text;
    if (doc.seg_langs) obj["seg_langs"] = *doc.seg_langs;
    if (doc.wds) obj["wds"] = *doc.wds;
    if (doc.wds_subsignals) {
        Json signals = Json::object();
        for (const auto& [name, value] : *doc.wds_subsignals) signals[name] = value;
        obj["wds_subsignals"] = std::move(signals);
    }
    if (doc.register_label) obj["register"] = *doc.register_label;
    if (doc.removed_reason) obj["removed_reason"] = to_string(*doc.removed_reason);
    for (auto it = doc.extras.begin(); it != doc.extras.end(); ++it) obj[it.key()] = it.value();
    return obj;
}

std::string serialize_document(const Document& doc) { return to_json(doc).dump(); }

void check_unique_ids(const std::vector<Document>& documents) {
    std::unordered_set<std::string_view> seen;
    seen.reserve(documents.size());
    for (const auto& doc : documents) {
        if (!seen.insert(doc.id).second) throw SchemaError("id", "duplicate document id \"" + doc.id + "\"");
    }
}

}  // namespace refinery
