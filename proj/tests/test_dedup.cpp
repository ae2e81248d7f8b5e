#include <algorithm>
#include <cmath>
#include <queue>
#include <random>
#include <set>

#include <gtest/gtest.h>

#include "refinery/dedup.hpp"
#include "refinery/errors.hpp"
#include "refinery/lid.hpp"
#include "refinery/text.hpp"
#include "support/fixtures.hpp"
#include "support/oracles.hpp"

using namespace refinery;
using refinery::testing::make_doc;

using refinery::testing::bfs_components;

namespace {

std::set<std::string> brute_ngrams(const std::string& normalized, std::size_t n) {
    std::vector<std::string> toks;
    std::string cur;
    for (char c : normalized + " ") {
        if (c == ' ') {
            if (!cur.empty()) toks.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    std::set<std::string> grams;
    for (std::size_t i = 0; i + n <= toks.size(); ++i) {
        std::string g;
        for (std::size_t j = i; j < i + n; ++j) g += (j > i ? " " : "") + toks[j];
        grams.insert(g);
    }
    return grams;
}

ShingleSet raw_set(std::vector<std::uint64_t> values) {
    std::sort(values.begin(), values.end());
    values.erase(std::unique(values.begin(), values.end()), values.end());
    return ShingleSet{std::move(values), 1};
}

}  // namespace

TEST(Shingle, Examples) {
    const auto s = shingle_text("a b c", 2);
    EXPECT_EQ(s.size(), 2u);
    EXPECT_EQ(s.n, 2u);
    const auto t = shingle_text("A, b! c", 2);
    EXPECT_EQ(s.shingles, t.shingles);
    EXPECT_TRUE(shingle_text("a", 3).empty());
    EXPECT_TRUE(shingle(make_doc("x", "one two"), 5).empty());
}

TEST(Shingle, MatchesBruteForce) {
    std::mt19937_64 rng(8);
    std::uniform_int_distribution<std::size_t> len(0, 40), order(1, 6);
    for (int round = 0; round < 500; ++round) {
        const std::string text = refinery::testing::random_words(rng, len(rng), 8);
        const std::size_t n = order(rng);
        const auto grams = brute_ngrams(normalize_for_lid(text).text(), n);
        const auto s = shingle_text(text, n);
        ASSERT_EQ(s.size(), grams.size()) << text << " n=" << n;
        EXPECT_TRUE(std::is_sorted(s.shingles.begin(), s.shingles.end()));
        EXPECT_EQ(std::adjacent_find(s.shingles.begin(), s.shingles.end()), s.shingles.end());
        std::set<std::uint64_t> hashes;
        for (const auto& g : grams) hashes.insert(hash_bytes(g));
        EXPECT_EQ(std::vector<std::uint64_t>(hashes.begin(), hashes.end()), s.shingles);
    }
}

TEST(Signature, DeterministicAndSelfSimilar) {
    const auto s = raw_set({1, 2, 3, 99, 1000});
    const auto a = signature(s, 64, 7);
    const auto b = signature(s, 64, 7);
    EXPECT_EQ(a, b);
    EXPECT_EQ(a.k(), 64u);
    EXPECT_EQ(estimate_jaccard(a, b), 1.0);
    EXPECT_NE(signature(s, 64, 8).values, a.values);
}

TEST(Signature, Contracts) {
    EXPECT_THROW(signature(ShingleSet{}, 16, 1), ContractError);
    EXPECT_THROW(signature(raw_set({1}), 0, 1), ContractError);
    const auto a = signature(raw_set({1, 2}), 16, 1);
    EXPECT_THROW(estimate_jaccard(a, signature(raw_set({1, 2}), 32, 1)), ContractError);
    EXPECT_THROW(estimate_jaccard(a, signature(raw_set({1, 2}), 16, 2)), ContractError);
}

TEST(EstimateJaccard, SymmetricAndDisjointLow) {
    std::mt19937_64 rng(21);
    for (int round = 0; round < 100; ++round) {
        std::vector<std::uint64_t> a, b;
        for (int i = 0; i < 1000; ++i) {
            a.push_back(rng() | 1);        // odd
            b.push_back(rng() & ~1ULL);    // even: disjoint from a
        }
        const auto sa = signature(raw_set(a), 256, rng());
        auto sb = signature(raw_set(b), 256, sa.seed);
        EXPECT_EQ(estimate_jaccard(sa, sb), estimate_jaccard(sb, sa));
        EXPECT_LE(estimate_jaccard(sa, sb), 0.05);
        EXPECT_EQ(exact_jaccard(raw_set(a), raw_set(b)), 0.0);
    }
}

TEST(EstimateJaccard, UnbiasedOverSeeds) {
    // |A|=|B|=300 with 200 shared: J = 200/400 = 0.5
    std::vector<std::uint64_t> a, b;
    for (std::uint64_t i = 0; i < 200; ++i) {
        a.push_back(i * 7919);
        b.push_back(i * 7919);
    }
    for (std::uint64_t i = 0; i < 100; ++i) {
        a.push_back(1'000'000 + i);
        b.push_back(2'000'000 + i);
    }
    const auto sa = raw_set(a), sb = raw_set(b);
    const double j = exact_jaccard(sa, sb);
    ASSERT_DOUBLE_EQ(j, 0.5);
    const std::size_t k = 64, seeds = 200;
    double sum = 0.0;
    for (std::uint64_t s = 0; s < seeds; ++s) sum += estimate_jaccard(signature(sa, k, s), signature(sb, k, s));
    const double mean = sum / seeds;
    const double se = std::sqrt(j * (1 - j) / static_cast<double>(k * seeds));
    EXPECT_LE(std::abs(mean - j), 3 * se) << mean;
}

TEST(ExactJaccard, Basics) {
    EXPECT_EQ(exact_jaccard(ShingleSet{}, ShingleSet{}), 1.0);
    EXPECT_DOUBLE_EQ(exact_jaccard(raw_set({1, 2, 3}), raw_set({2, 3, 4})), 0.5);
}

TEST(Lsh, IdenticalAlwaysPaired) {
    const auto s = signature(raw_set({5, 6, 7}), 24, 3);
    std::vector<MinHashSignature> sigs = {s, signature(raw_set({100, 200}), 24, 3), s};
    for (auto [b, r] : std::vector<std::pair<std::size_t, std::size_t>>{{1, 24}, {2, 12}, {24, 1}, {3, 8}}) {
        const auto pairs = lsh_candidates(sigs, b, r);
        EXPECT_NE(std::find(pairs.begin(), pairs.end(), CandidatePair{0, 2}), pairs.end());
    }
    EXPECT_THROW(lsh_candidates(sigs, 5, 5), ContractError);
}

TEST(Lsh, MatchesQuadraticBandOracle) {
    std::mt19937_64 rng(99);
    for (int round = 0; round < 20; ++round) {
        const std::size_t n = 150, bands = 8, rows = 2;
        std::vector<MinHashSignature> sigs;
        // tiny value alphabet so bands collide often
        for (std::size_t i = 0; i < n; ++i) {
            MinHashSignature s;
            s.seed = 1;
            for (std::size_t j = 0; j < bands * rows; ++j) s.values.push_back(rng() % 3);
            sigs.push_back(s);
        }
        std::vector<CandidatePair> oracle;
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = i + 1; j < n; ++j) {
                for (std::size_t b = 0; b < bands; ++b) {
                    if (std::equal(sigs[i].values.begin() + b * rows, sigs[i].values.begin() + (b + 1) * rows,
                                   sigs[j].values.begin() + b * rows)) {
                        oracle.emplace_back(i, j);
                        break;
                    }
                }
            }
        }
        EXPECT_EQ(lsh_candidates(sigs, bands, rows), oracle);
    }
}

TEST(Cluster, NoPairsAndChains) {
    std::vector<ClusterKey> keys = {{"c", "a"}, {"c", "b"}, {"c", "c"}};
    auto sim = [](std::size_t, std::size_t) { return 1.0; };
    const auto none = cluster(keys, {}, sim, 0.8, DedupMode::global);
    EXPECT_EQ(none.clusters().size(), 3u);
    const std::vector<CandidatePair> chain = {{0, 1}, {1, 2}};
    const auto one = cluster(keys, chain, sim, 0.8, DedupMode::global);
    ASSERT_EQ(one.clusters().size(), 1u);
    EXPECT_EQ(one.representative(2), 0u);
}

TEST(Cluster, PerCrawlIgnoresCrossCollectionPairs) {
    std::vector<ClusterKey> keys = {{"c1", "a"}, {"c2", "b"}, {"c1", "c"}};
    auto sim = [](std::size_t, std::size_t) { return 0.9; };
    const std::vector<CandidatePair> pairs = {{0, 1}, {1, 2}};
    EXPECT_EQ(cluster(keys, pairs, sim, 0.8, DedupMode::per_crawl).clusters().size(), 3u);
    EXPECT_EQ(cluster(keys, pairs, sim, 0.8, DedupMode::global).clusters().size(), 1u);
    EXPECT_EQ(cluster(keys, pairs, sim, 0.95, DedupMode::global).clusters().size(), 3u);
}

TEST(Cluster, MatchesBfsComponentsAndSmallestRepresentative) {
    std::mt19937_64 rng(17);
    for (int round = 0; round < 200; ++round) {
        const std::size_t n = 1 + rng() % 40;
        std::vector<ClusterKey> keys;
        for (std::size_t i = 0; i < n; ++i) keys.push_back({"c" + std::to_string(rng() % 3), "d" + std::to_string(rng() % 1000) + "-" + std::to_string(i)});
        std::vector<CandidatePair> pairs;
        const std::size_t m = rng() % (2 * n);
        for (std::size_t e = 0; e < m; ++e) {
            std::size_t a = rng() % n, b = rng() % n;
            if (a == b) continue;
            pairs.emplace_back(std::min(a, b), std::max(a, b));
        }
        std::sort(pairs.begin(), pairs.end());
        pairs.erase(std::unique(pairs.begin(), pairs.end()), pairs.end());
        const auto set = cluster(keys, pairs, [](std::size_t, std::size_t) { return 1.0; }, 0.5, DedupMode::global);
        const auto expected = bfs_components(n, pairs);
        auto got = set.clusters();
        auto exp_sorted = expected;
        std::sort(exp_sorted.begin(), exp_sorted.end());
        std::sort(got.begin(), got.end());
        ASSERT_EQ(got, exp_sorted);
        for (const auto& comp : expected) {
            const auto best = *std::min_element(comp.begin(), comp.end(),
                                                [&](std::size_t a, std::size_t b) { return keys[a] < keys[b]; });
            for (auto v : comp) EXPECT_EQ(set.representative(v), best);
        }
    }
}

TEST(Dedup, DistinctTextsAllRetained) {
    std::mt19937_64 rng(4);
    std::vector<Document> docs;
    for (int i = 0; i < 50; ++i) docs.push_back(make_doc("d" + std::to_string(i), refinery::testing::random_words(rng, 60, 5000)));
    const auto r = dedup(docs, DedupParams{});
    EXPECT_EQ(r.retained, docs);
    EXPECT_TRUE(r.removed.empty());
}

TEST(Dedup, IdenticalPairKeepsSmallestKey) {
    const std::string text = "one two three four five six seven eight nine ten";
    std::vector<Document> docs = {make_doc("z", text, "eus_Latn", "b"), make_doc("y", text, "eus_Latn", "a"),
                                  make_doc("short", "tiny doc")};
    const auto r = dedup(docs, DedupParams{});
    ASSERT_EQ(r.retained.size(), 2u);
    EXPECT_EQ(r.retained[0].id, "y");
    EXPECT_EQ(r.retained[1].id, "short");
    ASSERT_EQ(r.removed.size(), 1u);
    EXPECT_EQ(r.removed[0].id, "z");
    EXPECT_EQ(r.removed[0].removed_reason, RemovedReason::duplicate);
    ASSERT_EQ(r.log.size(), 1u);
    EXPECT_EQ(r.log[0].representative_id, "y");
    EXPECT_EQ(r.log[0].estimated_jaccard, 1.0);
    EXPECT_EQ(r.exempt, 1u);
    EXPECT_EQ(to_json(r.log[0]).dump(), R"({"id":"z","representative_id":"y","estimated_jaccard":1.0})");
}

TEST(Dedup, PerCrawlKeepsCrossCollectionCopies) {
    const std::string text = "one two three four five six seven eight nine ten";
    std::vector<Document> docs = {make_doc("a", text, "eus_Latn", "c1"), make_doc("b", text, "eus_Latn", "c2"),
                                  make_doc("c", text, "eus_Latn", "c2")};
    DedupParams p;
    p.mode = DedupMode::per_crawl;
    const auto r = dedup(docs, p);
    ASSERT_EQ(r.retained.size(), 2u);
    EXPECT_EQ(r.retained[0].id, "a");
    EXPECT_EQ(r.retained[1].id, "b");
}

TEST(Dedup, IdempotentAndWorkerIndependent) {
    std::mt19937_64 rng(6);
    std::vector<Document> docs;
    for (int i = 0; i < 120; ++i) {
        std::string text = refinery::testing::random_words(rng, 80, 3000);
        docs.push_back(make_doc("d" + std::to_string(i), text, "eus_Latn", "c" + std::to_string(i % 2)));
        if (i % 4 == 0) docs.push_back(make_doc("dup" + std::to_string(i), text + " extra", "eus_Latn", "c1"));
    }
    const auto once = dedup(docs, DedupParams{}, 1);
    const auto parallel = dedup(docs, DedupParams{}, 4);
    EXPECT_EQ(once.retained, parallel.retained);
    EXPECT_EQ(once.removed, parallel.removed);
    EXPECT_FALSE(once.removed.empty());
    const auto twice = dedup(once.retained, DedupParams{}, 2);
    EXPECT_EQ(twice.retained, once.retained);
    EXPECT_TRUE(twice.removed.empty());
}

TEST(DedupParams, Validation) {
    DedupParams p;
    EXPECT_NO_THROW(p.validate());
    p.bands = 7;
    EXPECT_THROW(p.validate(), ConfigError);
    p = DedupParams{};
    p.threshold = 1.5;
    EXPECT_THROW(p.validate(), ConfigError);
    p = DedupParams{};
    p.shingle_order = 0;
    EXPECT_THROW(p.validate(), ConfigError);
}
