#include "refinery/packaging.hpp"

#include <algorithm>
#include <charconv>
#include <map>

#include "refinery/errors.hpp"
#include "refinery/io.hpp"
#include "refinery/parallel.hpp"
#include "refinery/wds.hpp"

namespace refinery {

namespace fs = std::filesystem;

WdsBin WdsBin::from_level(int level) {
    if (level < 0 || level > 10) throw ContractError("WDS level " + std::to_string(level) + " outside [0, 10]");
    return level >= kLowestBinnedLevel ? WdsBin(level) : unbinned();
}

std::optional<WdsBin> WdsBin::parse(std::string_view name) {
    if (name == "unbinned") return unbinned();
    int level = 0;
    const auto [ptr, ec] = std::from_chars(name.data(), name.data() + name.size(), level);
    if (ec != std::errc() || ptr != name.data() + name.size()) return std::nullopt;
    if (level < kLowestBinnedLevel || level > 10) return std::nullopt;
    return WdsBin(level);
}

std::string WdsBin::name() const { return is_unbinned() ? "unbinned" : std::to_string(level_); }

std::vector<BinGroup> assign_bins(std::vector<Document> documents) {
    std::map<WdsBin, std::vector<Document>> groups;
    for (auto& doc : documents) {
        if (!doc.wds) throw ContractError("document " + doc.id + " has no WDS score");
        groups[WdsBin::from_level(wds_level(*doc.wds))].push_back(std::move(doc));
    }
    std::vector<BinGroup> out;
    for (auto& [bin, docs] : groups) out.push_back({bin, std::move(docs)});
    return out;
}

bool release_order_less(const Document& a, const Document& b) {
    const double sa = a.wds.value_or(0.0);
    const double sb = b.wds.value_or(0.0);
    if (sa != sb) return sa > sb;
    return collection_id_less(a, b);
}

void sort_bin(std::vector<Document>& documents) {
    std::sort(documents.begin(), documents.end(), release_order_less);
}

Json to_json(const ShardManifest& m) {
    Json obj = Json::object();
    obj["language"] = m.language;
    if (m.bin.is_unbinned()) {
        obj["wds_bin"] = "unbinned";
    } else {
        obj["wds_bin"] = m.bin.level();
    }
    obj["shard_index"] = m.shard_index;
    obj["document_count"] = m.document_count;
    obj["uncompressed_bytes"] = m.uncompressed_bytes;
    obj["compressed_bytes"] = m.compressed_bytes;
    obj["first_id"] = m.first_id;
    obj["last_id"] = m.last_id;
    obj["path"] = m.path;
    return obj;
}

ShardManifest shard_manifest_from_json(const Json& obj) {
    ShardManifest m;
    m.language = obj.at("language").get<std::string>();
    const auto& bin = obj.at("wds_bin");
    auto parsed = WdsBin::parse(bin.is_string() ? bin.get<std::string>() : std::to_string(bin.get<int>()));
    if (!parsed) throw SchemaError("wds_bin", "invalid wds_bin in manifest");
    m.bin = *parsed;
    m.shard_index = obj.at("shard_index").get<std::size_t>();
    m.document_count = obj.at("document_count").get<std::size_t>();
    m.uncompressed_bytes = obj.at("uncompressed_bytes").get<std::uint64_t>();
    m.compressed_bytes = obj.at("compressed_bytes").get<std::uint64_t>();
    m.first_id = obj.at("first_id").get<std::string>();
    m.last_id = obj.at("last_id").get<std::string>();
    m.path = obj.value("path", "");
    return m;
}

std::vector<std::size_t> plan_shards(std::span<const std::uint64_t> sizes, std::uint64_t limit) {
    std::vector<std::size_t> counts;
    std::uint64_t current = 0;
    for (std::size_t i = 0; i < sizes.size(); ++i) {
        if (sizes[i] > limit) {
            throw ContractError("document at position " + std::to_string(i) + " (" + std::to_string(sizes[i]) +
                                " bytes) exceeds the shard limit of " + std::to_string(limit) + " bytes");
        }
        if (counts.empty() || current + sizes[i] > limit) {
            counts.push_back(0);
            current = 0;
        }
        ++counts.back();
        current += sizes[i];
    }
    return counts;
}

fs::path shard_path(const fs::path& root, const std::string& language, WdsBin bin, std::size_t shard_index) {
    return root / language / bin.name() / (std::to_string(shard_index) + ".jsonl.zst");
}

std::vector<ShardManifest> write_shards(const std::vector<Document>& ordered, WdsBin bin,
                                        const ShardOptions& options) {
    std::vector<std::string> lines;
    std::vector<std::uint64_t> sizes;
    lines.reserve(ordered.size());
    sizes.reserve(ordered.size());
    for (const auto& doc : ordered) {
        lines.push_back(serialize_document(doc) + '\n');
        sizes.push_back(lines.back().size());
    }
    std::vector<std::size_t> counts;
    try {
        counts = plan_shards(sizes, options.max_uncompressed_bytes);
    } catch (const ContractError&) {
        const auto it = std::find_if(sizes.begin(), sizes.end(),
                                     [&](std::uint64_t s) { return s > options.max_uncompressed_bytes; });
        const auto& doc = ordered[static_cast<std::size_t>(it - sizes.begin())];
        throw ContractError("document " + doc.id + " serializes to " + std::to_string(*it) +
                            " bytes, above the shard limit of " + std::to_string(options.max_uncompressed_bytes));
    }

    std::vector<ShardManifest> manifests;
    std::size_t next = 0;
    for (std::size_t shard = 0; shard < counts.size(); ++shard) {
        const auto path = shard_path(options.root, options.language, bin, shard);
        ZstdWriter writer(path, options.compression_level);
        ShardManifest m;
        m.language = options.language;
        m.bin = bin;
        m.shard_index = shard;
        m.document_count = counts[shard];
        m.first_id = ordered[next].id;
        for (std::size_t k = 0; k < counts[shard]; ++k, ++next) writer.write(lines[next]);
        m.last_id = ordered[next - 1].id;
        m.uncompressed_bytes = writer.uncompressed_bytes();
        m.compressed_bytes = writer.finish();
        m.path = fs::relative(path, options.root).generic_string();
        manifests.push_back(std::move(m));
    }
    return manifests;
}

namespace {

struct ShardName {
    std::string language;
    WdsBin bin;
    std::size_t index;
};

std::optional<ShardName> parse_shard_name(const fs::path& path) {
    const std::string file = path.filename().string();
    constexpr std::string_view suffix = ".jsonl.zst";
    if (file.size() <= suffix.size() || file.compare(file.size() - suffix.size(), suffix.size(), suffix) != 0) {
        return std::nullopt;
    }
    std::size_t index = 0;
    const auto stem = std::string_view(file).substr(0, file.size() - suffix.size());
    const auto [ptr, ec] = std::from_chars(stem.data(), stem.data() + stem.size(), index);
    if (ec != std::errc() || ptr != stem.data() + stem.size()) return std::nullopt;
    auto bin = WdsBin::parse(path.parent_path().filename().string());
    if (!bin) return std::nullopt;
    return ShardName{path.parent_path().parent_path().filename().string(), *bin, index};
}

}  // namespace

std::vector<Document> read_shards(std::vector<fs::path> paths) {
    std::vector<std::optional<ShardName>> names;
    bool all_named = true;
    for (const auto& p : paths) {
        names.push_back(parse_shard_name(p));
        all_named = all_named && names.back().has_value();
    }
    if (all_named) {
        std::vector<std::size_t> order(paths.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            const auto& x = *names[a];
            const auto& y = *names[b];
            if (x.language != y.language) return x.language < y.language;
            if (x.bin != y.bin) return x.bin < y.bin;
            return x.index < y.index;
        });
        std::vector<fs::path> sorted;
        for (std::size_t i : order) sorted.push_back(paths[i]);
        paths = std::move(sorted);
    }
    return read_documents(paths);
}

PackageResult package(std::vector<Document> documents, const ShardOptions& options, unsigned workers) {
    if (options.language.empty()) throw ContractError("packaging needs a language");
    if (options.max_uncompressed_bytes == 0) throw ContractError("shard limit must be positive");

    const fs::path lang_root = options.root / options.language;
    // Stale shards from an earlier run would otherwise be picked up by readers.
    if (fs::exists(lang_root)) {
        for (const auto& entry : fs::directory_iterator(lang_root)) {
            if (entry.is_directory() && WdsBin::parse(entry.path().filename().string())) fs::remove_all(entry.path());
        }
    }

    auto groups = assign_bins(std::move(documents));
    std::vector<std::vector<ShardManifest>> per_bin(groups.size());
    parallel_for(groups.size(), workers, [&](std::size_t g) {
        sort_bin(groups[g].documents);
        per_bin[g] = write_shards(groups[g].documents, groups[g].bin, options);
    });

    PackageResult result;
    Json shards = Json::array();
    for (auto& manifests : per_bin) {
        for (auto& m : manifests) {
            shards.push_back(to_json(m));
            result.manifests.push_back(std::move(m));
        }
    }
    Json manifest = Json::object();
    manifest["language"] = options.language;
    manifest["compression_level"] = options.compression_level;
    manifest["max_uncompressed_bytes"] = options.max_uncompressed_bytes;
    manifest["shards"] = std::move(shards);
    result.manifest_path = lang_root / "manifest.json";
    write_file_atomic(result.manifest_path, manifest.dump(2) + "\n");
    return result;
}

std::vector<ShardManifest> read_manifest(const fs::path& manifest_path) {
    const Json manifest = read_json_file(manifest_path);
    std::vector<ShardManifest> out;
    for (const auto& shard : manifest.at("shards")) out.push_back(shard_manifest_from_json(shard));
    return out;
}

}  // namespace refinery
