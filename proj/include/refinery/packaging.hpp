#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "refinery/document.hpp"

namespace refinery {

/// WDS level bin: 5..10, or the "unbinned" group for retained documents below level 5.
class WdsBin {
public:
    static constexpr int kLowestBinnedLevel = 5;

    static WdsBin from_level(int level);
    static WdsBin unbinned() { return WdsBin(-1); }
    static std::optional<WdsBin> parse(std::string_view name);

    bool is_unbinned() const noexcept { return level_ < 0; }
    int level() const noexcept { return level_; }
    std::string name() const;

    /// Release order: 10, 9, ..., 5, then unbinned. Reading bins in this order
    /// and each bin in sort_bin order yields the whole language best-first.
    friend std::strong_ordering operator<=>(WdsBin a, WdsBin b) noexcept { return b.level_ <=> a.level_; }
    friend bool operator==(WdsBin, WdsBin) = default;

private:
    explicit WdsBin(int level) : level_(level) {}
    int level_;
};

struct BinGroup {
    WdsBin bin = WdsBin::unbinned();
    std::vector<Document> documents;
};

/// Groups scored documents by level, in release order; empty bins are omitted.
/// Unscored documents are a contract error.
std::vector<BinGroup> assign_bins(std::vector<Document> documents);

/// Descending WDS score, ties ascending by (collection, id).
bool release_order_less(const Document& a, const Document& b);
void sort_bin(std::vector<Document>& documents);

struct ShardManifest {
    std::string language;
    WdsBin bin = WdsBin::unbinned();
    std::size_t shard_index = 0;
    std::size_t document_count = 0;
    std::uint64_t uncompressed_bytes = 0;
    std::uint64_t compressed_bytes = 0;
    std::string first_id;
    std::string last_id;
    std::string path;  // relative to the package root
};

Json to_json(const ShardManifest& manifest);
ShardManifest shard_manifest_from_json(const Json& obj);

/// Greedy in-order fill: a document opens a new shard when adding it would
/// exceed `limit`. Returns documents per shard. Throws ContractError naming the
/// position of any single size above the limit.
std::vector<std::size_t> plan_shards(std::span<const std::uint64_t> sizes, std::uint64_t limit);

struct ShardOptions {
    std::filesystem::path root;
    std::string language;
    std::uint64_t max_uncompressed_bytes = 1ULL << 30;
    int compression_level = 9;
};

/// <root>/<lang>/<bin>/<shard_index>.jsonl.zst
std::filesystem::path shard_path(const std::filesystem::path& root, const std::string& language, WdsBin bin,
                                 std::size_t shard_index);

/// Writes `ordered` (already sorted) as one independently decompressible
/// frame per shard. Each serialized line counts its trailing newline.
std::vector<ShardManifest> write_shards(const std::vector<Document>& ordered, WdsBin bin,
                                        const ShardOptions& options);

/// Documents from the given shard files, ordered by (language, bin, shard_index)
/// when every path follows the shard naming scheme, otherwise in argument order.
std::vector<Document> read_shards(std::vector<std::filesystem::path> paths);

struct PackageResult {
    std::vector<ShardManifest> manifests;
    std::filesystem::path manifest_path;
};

/// Bins, sorts and shards every document and writes <root>/<lang>/manifest.json.
/// Bins are written in parallel; output does not depend on `workers`.
PackageResult package(std::vector<Document> documents, const ShardOptions& options, unsigned workers = 1);

std::vector<ShardManifest> read_manifest(const std::filesystem::path& manifest_path);

}  // namespace refinery
