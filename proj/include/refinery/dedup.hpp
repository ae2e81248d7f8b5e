#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "refinery/document.hpp"

namespace refinery {

/// Hashes of the distinct word n-grams of a document, sorted ascending.
struct ShingleSet {
    std::vector<std::uint64_t> shingles;
    std::size_t n = 0;

    bool empty() const noexcept { return shingles.empty(); }
    std::size_t size() const noexcept { return shingles.size(); }
};

/// Word n-grams over the LID-normalized text. Fewer than n tokens gives an empty set.
ShingleSet shingle_text(std::string_view text, std::size_t n);
ShingleSet shingle(const Document& doc, std::size_t n);

struct MinHashSignature {
    std::vector<std::uint64_t> values;
    std::uint64_t seed = 0;

    std::size_t k() const noexcept { return values.size(); }
    friend bool operator==(const MinHashSignature&, const MinHashSignature&) = default;
};

/// values[i] = min over shingles of h_i(shingle), h_i a keyed 64-bit bijection.
/// Throws ContractError on an empty set; such documents are exempt from dedup.
MinHashSignature signature(const ShingleSet& shingles, std::size_t k, std::uint64_t seed);

/// Fraction of agreeing positions. Throws ContractError on mismatched k or seed.
double estimate_jaccard(const MinHashSignature& a, const MinHashSignature& b);

/// |A ∩ B| / |A ∪ B| over shingle hashes; 1 when both are empty.
double exact_jaccard(const ShingleSet& a, const ShingleSet& b);

/// Index pair with first < second.
using CandidatePair = std::pair<std::size_t, std::size_t>;

/// Every pair of signatures that agrees on all rows of at least one band,
/// sorted ascending. Throws ContractError unless bands * rows == k for every signature.
std::vector<CandidatePair> lsh_candidates(std::span<const MinHashSignature> signatures, std::size_t bands,
                                          std::size_t rows);

enum class DedupMode { global, per_crawl };

struct ClusterKey {
    std::string collection;
    std::string id;

    friend auto operator<=>(const ClusterKey&, const ClusterKey&) = default;
};

/// Union-find over document indices. Each cluster's representative is the
/// member with the smallest (collection, id).
class DuplicateClusterSet {
public:
    explicit DuplicateClusterSet(std::vector<ClusterKey> keys);

    std::size_t size() const noexcept { return keys_.size(); }
    const ClusterKey& key(std::size_t i) const { return keys_[i]; }

    void unite(std::size_t a, std::size_t b);
    std::size_t find(std::size_t a) const;
    std::size_t representative(std::size_t a) const { return best_[find(a)]; }
    bool same_cluster(std::size_t a, std::size_t b) const { return find(a) == find(b); }

    /// Clusters as sorted index lists, ordered by their first member.
    std::vector<std::vector<std::size_t>> clusters() const;

private:
    std::vector<ClusterKey> keys_;
    mutable std::vector<std::size_t> parent_;
    std::vector<std::size_t> rank_;
    std::vector<std::size_t> best_;
};

/// Unions each candidate pair whose similarity reaches `threshold`. In
/// per-crawl mode pairs whose keys differ in collection are ignored.
DuplicateClusterSet cluster(std::vector<ClusterKey> keys, std::span<const CandidatePair> pairs,
                            const std::function<double(std::size_t, std::size_t)>& similarity,
                            double threshold, DedupMode mode);

struct DedupParams {
    std::size_t shingle_order = 5;
    std::size_t num_perm = 256;
    std::uint64_t seed = 0x5eed5eed5eed5eedULL;
    std::size_t bands = 32;
    std::size_t rows = 8;
    double threshold = 0.8;
    DedupMode mode = DedupMode::global;
    bool exact_verification = false;

    /// Throws ConfigError describing the first invalid field.
    void validate() const;
};

struct RemovalRecord {
    std::string id;
    std::string representative_id;
    double estimated_jaccard = 0.0;
};

Json to_json(const RemovalRecord& record);

struct DedupResult {
    std::vector<Document> retained;   // input order
    std::vector<Document> removed;    // input order, removed_reason = duplicate
    std::vector<RemovalRecord> log;   // parallel to `removed`
    std::size_t exempt = 0;           // too short to shingle
    std::size_t candidate_pairs = 0;
};

/// Near-deduplication: keeps exactly one document (the representative) per cluster.
DedupResult dedup(std::vector<Document> documents, const DedupParams& params, unsigned workers = 1);

std::string_view to_string(DedupMode mode) noexcept;

}  // namespace refinery
