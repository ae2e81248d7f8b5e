#include "refinery/dedup.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <unordered_map>

#include "refinery/errors.hpp"
#include "refinery/lid.hpp"
#include "refinery/parallel.hpp"
#include "refinery/text.hpp"

namespace refinery {

ShingleSet shingle_text(std::string_view text, std::size_t n) {
    if (n == 0) throw ContractError("shingle order must be >= 1");
    ShingleSet set;
    set.n = n;
    const auto normalized = normalize_for_lid(text);
    const std::string_view body = normalized.text();
    // Normalized text is single-space separated, so tokens are the pieces between spaces.
    std::vector<std::size_t> starts;
    for (std::size_t pos = 0; pos < body.size();) {
        starts.push_back(pos);
        const auto sp = body.find(' ', pos);
        pos = sp == std::string_view::npos ? body.size() : sp + 1;
    }
    if (starts.size() < n) return set;
    set.shingles.reserve(starts.size() - n + 1);
    for (std::size_t i = 0; i + n <= starts.size(); ++i) {
        const std::size_t begin = starts[i];
        const std::size_t end = i + n < starts.size() ? starts[i + n] - 1 : body.size();
        set.shingles.push_back(hash_bytes(body.substr(begin, end - begin)));
    }
    std::sort(set.shingles.begin(), set.shingles.end());
    set.shingles.erase(std::unique(set.shingles.begin(), set.shingles.end()), set.shingles.end());
    return set;
}

ShingleSet shingle(const Document& doc, std::size_t n) { return shingle_text(doc.text, n); }

MinHashSignature signature(const ShingleSet& shingles, std::size_t k, std::uint64_t seed) {
    if (k == 0) throw ContractError("signature length must be >= 1");
    if (shingles.empty()) {
        throw ContractError("cannot sign an empty shingle set; exempt the document from dedup");
    }
    MinHashSignature sig;
    sig.seed = seed;
    sig.values.assign(k, std::numeric_limits<std::uint64_t>::max());
    std::vector<std::uint64_t> keys(k);
    std::uint64_t state = seed;
    for (auto& key : keys) {
        state += 0x9e3779b97f4a7c15ULL;
        key = mix64(state);
    }
    for (const std::uint64_t s : shingles.shingles) {
        for (std::size_t i = 0; i < k; ++i) {
            sig.values[i] = std::min(sig.values[i], mix64(s ^ keys[i]));
        }
    }
    return sig;
}

double estimate_jaccard(const MinHashSignature& a, const MinHashSignature& b) {
    if (a.k() != b.k()) throw ContractError("signature lengths differ");
    if (a.seed != b.seed) throw ContractError("signature seeds differ");
    if (a.k() == 0) throw ContractError("empty signatures");
    std::size_t agree = 0;
    for (std::size_t i = 0; i < a.k(); ++i) agree += a.values[i] == b.values[i];
    return static_cast<double>(agree) / static_cast<double>(a.k());
}

double exact_jaccard(const ShingleSet& a, const ShingleSet& b) {
    if (a.empty() && b.empty()) return 1.0;
    std::size_t common = 0;
    auto ia = a.shingles.begin();
    auto ib = b.shingles.begin();
    while (ia != a.shingles.end() && ib != b.shingles.end()) {
        if (*ia < *ib) {
            ++ia;
        } else if (*ib < *ia) {
            ++ib;
        } else {
            ++common, ++ia, ++ib;
        }
    }
    const std::size_t uni = a.size() + b.size() - common;
    return static_cast<double>(common) / static_cast<double>(uni);
}

std::vector<CandidatePair> lsh_candidates(std::span<const MinHashSignature> signatures, std::size_t bands,
                                          std::size_t rows) {
    if (bands == 0 || rows == 0) throw ContractError("bands and rows must be positive");
    for (const auto& sig : signatures) {
        if (sig.k() != bands * rows) {
            throw ContractError("bands * rows (" + std::to_string(bands * rows) +
                                ") must equal the signature length (" + std::to_string(sig.k()) + ")");
        }
    }
    std::vector<CandidatePair> pairs;
    std::unordered_map<std::uint64_t, std::vector<std::size_t>> buckets;
    for (std::size_t band = 0; band < bands; ++band) {
        const std::size_t offset = band * rows;
        buckets.clear();
        for (std::size_t i = 0; i < signatures.size(); ++i) {
            std::uint64_t h = band;
            for (std::size_t r = 0; r < rows; ++r) h = mix64(h ^ signatures[i].values[offset + r]);
            buckets[h].push_back(i);
        }
        const auto band_less = [&](std::size_t x, std::size_t y) {
            const auto* vx = signatures[x].values.data() + offset;
            const auto* vy = signatures[y].values.data() + offset;
            return std::lexicographical_compare(vx, vx + rows, vy, vy + rows);
        };
        const auto band_equal = [&](std::size_t x, std::size_t y) {
            const auto* vx = signatures[x].values.data() + offset;
            return std::equal(vx, vx + rows, signatures[y].values.data() + offset);
        };
        for (auto& [hash, members] : buckets) {
            if (members.size() < 2) continue;
            // Split the bucket by exact band contents so hash collisions never pair documents.
            std::stable_sort(members.begin(), members.end(), band_less);
            for (std::size_t g = 0; g < members.size();) {
                std::size_t e = g + 1;
                while (e < members.size() && band_equal(members[g], members[e])) ++e;
                for (std::size_t x = g; x < e; ++x) {
                    for (std::size_t y = x + 1; y < e; ++y) {
                        pairs.emplace_back(std::min(members[x], members[y]), std::max(members[x], members[y]));
                    }
                }
                g = e;
            }
        }
    }
    std::sort(pairs.begin(), pairs.end());
    pairs.erase(std::unique(pairs.begin(), pairs.end()), pairs.end());
    return pairs;
}

// --- union-find -------------------------------------------------------------

DuplicateClusterSet::DuplicateClusterSet(std::vector<ClusterKey> keys)
    : keys_(std::move(keys)), parent_(keys_.size()), rank_(keys_.size(), 0), best_(keys_.size()) {
    std::iota(parent_.begin(), parent_.end(), std::size_t{0});
    std::iota(best_.begin(), best_.end(), std::size_t{0});
}

std::size_t DuplicateClusterSet::find(std::size_t a) const {
    std::size_t root = a;
    while (parent_[root] != root) root = parent_[root];
    while (parent_[a] != root) {
        const std::size_t next = parent_[a];
        parent_[a] = root;
        a = next;
    }
    return root;
}

void DuplicateClusterSet::unite(std::size_t a, std::size_t b) {
    std::size_t ra = find(a);
    std::size_t rb = find(b);
    if (ra == rb) return;
    if (rank_[ra] < rank_[rb]) std::swap(ra, rb);
    parent_[rb] = ra;
    if (rank_[ra] == rank_[rb]) ++rank_[ra];
    if (keys_[best_[rb]] < keys_[best_[ra]]) best_[ra] = best_[rb];
}

std::vector<std::vector<std::size_t>> DuplicateClusterSet::clusters() const {
    std::vector<std::vector<std::size_t>> out;
    std::unordered_map<std::size_t, std::size_t> slot;
    for (std::size_t i = 0; i < size(); ++i) {
        auto [it, fresh] = slot.try_emplace(find(i), out.size());
        if (fresh) out.emplace_back();
        out[it->second].push_back(i);
    }
    return out;
}

DuplicateClusterSet cluster(std::vector<ClusterKey> keys, std::span<const CandidatePair> pairs,
                            const std::function<double(std::size_t, std::size_t)>& similarity,
                            double threshold, DedupMode mode) {
    if (!(threshold >= 0.0 && threshold <= 1.0)) throw ContractError("verify threshold must lie in [0, 1]");
    DuplicateClusterSet set(std::move(keys));
    for (const auto& [a, b] : pairs) {
        if (a >= set.size() || b >= set.size()) throw ContractError("candidate pair references an unknown document");
        if (mode == DedupMode::per_crawl && set.key(a).collection != set.key(b).collection) continue;
        if (set.same_cluster(a, b)) continue;
        if (similarity(a, b) >= threshold) set.unite(a, b);
    }
    return set;
}

// --- pipeline stage ---------------------------------------------------------

std::string_view to_string(DedupMode mode) noexcept {
    return mode == DedupMode::global ? "global" : "per_crawl";
}

void DedupParams::validate() const {
    if (shingle_order == 0) throw ConfigError("dedup.shingle_order must be >= 1");
    if (num_perm == 0) throw ConfigError("dedup.num_perm must be >= 1");
    if (bands == 0 || rows == 0) throw ConfigError("dedup.bands and dedup.rows must be >= 1");
    if (bands * rows != num_perm) {
        throw ConfigError("dedup.bands * dedup.rows must equal dedup.num_perm (" + std::to_string(bands) + " * " +
                          std::to_string(rows) + " != " + std::to_string(num_perm) + ")");
    }
    if (!(threshold >= 0.0 && threshold <= 1.0)) throw ConfigError("dedup.threshold must lie in [0, 1]");
}

Json to_json(const RemovalRecord& record) {
    Json obj = Json::object();
    obj["id"] = record.id;
    obj["representative_id"] = record.representative_id;
    obj["estimated_jaccard"] = record.estimated_jaccard;
    return obj;
}

DedupResult dedup(std::vector<Document> documents, const DedupParams& params, unsigned workers) {
    params.validate();
    check_unique_ids(documents);

    const std::size_t n = documents.size();
    std::vector<ShingleSet> shingles(n);
    parallel_for(n, workers, [&](std::size_t i) { shingles[i] = shingle(documents[i], params.shingle_order); });

    // Documents with fewer tokens than the shingle order bypass dedup.
    std::vector<std::size_t> eligible;
    for (std::size_t i = 0; i < n; ++i) {
        if (!shingles[i].empty()) eligible.push_back(i);
    }
    std::vector<MinHashSignature> sigs(eligible.size());
    parallel_for(eligible.size(), workers, [&](std::size_t e) {
        sigs[e] = signature(shingles[eligible[e]], params.num_perm, params.seed);
    });

    auto pairs = lsh_candidates(sigs, params.bands, params.rows);

    std::vector<ClusterKey> keys;
    keys.reserve(eligible.size());
    for (std::size_t idx : eligible) keys.push_back({documents[idx].collection, documents[idx].id});

    // Verify every pair up front (in parallel); union-find then consumes the
    // precomputed similarities in sorted pair order.
    std::vector<double> similarity(pairs.size());
    parallel_for(pairs.size(), workers, [&](std::size_t p) {
        const auto [a, b] = pairs[p];
        similarity[p] = params.exact_verification ? exact_jaccard(shingles[eligible[a]], shingles[eligible[b]])
                                                  : estimate_jaccard(sigs[a], sigs[b]);
    });
    const auto clusters = cluster(
        std::move(keys), pairs,
        [&](std::size_t a, std::size_t b) {
            const auto it = std::lower_bound(pairs.begin(), pairs.end(), CandidatePair{a, b});
            return similarity[static_cast<std::size_t>(it - pairs.begin())];
        },
        params.threshold, params.mode);

    DedupResult result;
    result.exempt = n - eligible.size();
    result.candidate_pairs = pairs.size();
    std::vector<std::size_t> removed_rep(n, n);  // doc index of the representative, n when kept
    for (std::size_t e = 0; e < eligible.size(); ++e) {
        const std::size_t rep = clusters.representative(e);
        if (rep != e) removed_rep[eligible[e]] = rep;
    }
    std::vector<std::size_t> eligible_pos(n, n);
    for (std::size_t e = 0; e < eligible.size(); ++e) eligible_pos[eligible[e]] = e;

    std::vector<std::string> rep_ids(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (removed_rep[i] != n) rep_ids[i] = documents[eligible[removed_rep[i]]].id;
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (removed_rep[i] == n) {
            result.retained.push_back(std::move(documents[i]));
            continue;
        }
        const std::size_t rep_e = removed_rep[i];
        RemovalRecord record;
        record.id = documents[i].id;
        record.representative_id = std::move(rep_ids[i]);
        record.estimated_jaccard = estimate_jaccard(sigs[eligible_pos[i]], sigs[rep_e]);
        result.log.push_back(std::move(record));
        documents[i].removed_reason = RemovedReason::duplicate;
        result.removed.push_back(std::move(documents[i]));
    }
    return result;
}

}  // namespace refinery
