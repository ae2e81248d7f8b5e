#include <algorithm>
#include <random>
#include <set>

#include <gtest/gtest.h>

#include "refinery/errors.hpp"
#include "refinery/io.hpp"
#include "refinery/packaging.hpp"
#include "support/fixtures.hpp"

using namespace refinery;
using refinery::testing::make_doc;
using refinery::testing::TempDir;

namespace {

Document scored(std::string id, double wds, std::string collection = "c") {
    auto d = make_doc(std::move(id), "text", "eus_Latn", std::move(collection));
    d.wds = wds;
    return d;
}

std::vector<std::string> ids(const std::vector<Document>& docs) {
    std::vector<std::string> out;
    for (const auto& d : docs) out.push_back(d.id);
    return out;
}

// Reference order written out longhand: by score descending, then collection, then id.
bool oracle_before(const Document& a, const Document& b) {
    if (*a.wds > *b.wds) return true;
    if (*a.wds < *b.wds) return false;
    if (a.collection < b.collection) return true;
    if (a.collection > b.collection) return false;
    return a.id < b.id;
}

}  // namespace

TEST(WdsBin, NamesAndOrder) {
    EXPECT_EQ(WdsBin::from_level(7).name(), "7");
    EXPECT_EQ(WdsBin::from_level(3).name(), "unbinned");
    EXPECT_EQ(WdsBin::unbinned().name(), "unbinned");
    EXPECT_EQ(WdsBin::parse("10"), WdsBin::from_level(10));
    EXPECT_EQ(WdsBin::parse("unbinned"), WdsBin::unbinned());
    EXPECT_FALSE(WdsBin::parse("4"));
    EXPECT_FALSE(WdsBin::parse("x"));
    EXPECT_LT(WdsBin::from_level(10), WdsBin::from_level(5));
    EXPECT_LT(WdsBin::from_level(5), WdsBin::unbinned());
}

TEST(AssignBins, Examples) {
    auto groups = assign_bins({scored("a", 5.1), scored("b", 9.9)});
    ASSERT_EQ(groups.size(), 2u);
    EXPECT_EQ(groups[0].bin, WdsBin::from_level(9));
    EXPECT_EQ(ids(groups[0].documents), std::vector<std::string>{"b"});
    EXPECT_EQ(groups[1].bin, WdsBin::from_level(5));

    groups = assign_bins({scored("a", 0.5), scored("b", 4.99), scored("c", 2)});
    ASSERT_EQ(groups.size(), 1u);
    EXPECT_TRUE(groups[0].bin.is_unbinned());
    EXPECT_EQ(groups[0].documents.size(), 3u);

    auto unscored = make_doc("u", "t");
    EXPECT_THROW(assign_bins({unscored}), ContractError);
}

TEST(AssignBins, PartitionOracle) {
    std::mt19937_64 rng(12);
    for (int round = 0; round < 20; ++round) {
        auto docs = refinery::testing::random_scored_corpus(rng, 200);
        const auto groups = assign_bins(docs);
        std::set<std::string> seen;
        for (std::size_t g = 0; g < groups.size(); ++g) {
            if (g) EXPECT_LT(groups[g - 1].bin, groups[g].bin);
            EXPECT_FALSE(groups[g].documents.empty());
            for (const auto& d : groups[g].documents) {
                const int level = static_cast<int>(*d.wds);
                if (level >= 5) {
                    EXPECT_EQ(groups[g].bin.level(), level);
                } else {
                    EXPECT_TRUE(groups[g].bin.is_unbinned());
                }
                EXPECT_TRUE(seen.insert(d.id).second);
            }
        }
        EXPECT_EQ(seen.size(), docs.size());
    }
}

TEST(SortBin, TiesAndOracle) {
    std::vector<Document> docs = {scored("b", 6.0, "x"), scored("a", 6.0, "y"), scored("c", 6.0, "x")};
    sort_bin(docs);
    EXPECT_EQ(ids(docs), (std::vector<std::string>{"b", "c", "a"}));

    std::vector<Document> one = {scored("z", 5.5)};
    sort_bin(one);
    EXPECT_EQ(ids(one), std::vector<std::string>{"z"});

    std::mt19937_64 rng(2);
    for (int round = 0; round < 20; ++round) {
        auto docs2 = refinery::testing::random_scored_corpus(rng, 300);
        auto expected = docs2;
        // insertion sort as the reference
        for (std::size_t i = 1; i < expected.size(); ++i) {
            for (std::size_t j = i; j > 0 && oracle_before(expected[j], expected[j - 1]); --j) {
                std::swap(expected[j], expected[j - 1]);
            }
        }
        std::shuffle(docs2.begin(), docs2.end(), rng);
        sort_bin(docs2);
        EXPECT_EQ(docs2, expected);
    }
}

TEST(PlanShards, GreedyArithmetic) {
    const std::vector<std::uint64_t> three = {10, 10, 10};
    EXPECT_EQ(plan_shards(three, 25), (std::vector<std::size_t>{2, 1}));
    EXPECT_EQ(plan_shards(three, 30), (std::vector<std::size_t>{3}));
    EXPECT_EQ(plan_shards(three, 1000), (std::vector<std::size_t>{3}));
    EXPECT_TRUE(plan_shards({}, 10).empty());
    const std::vector<std::uint64_t> big = {5, 11, 5};
    EXPECT_THROW(plan_shards(big, 10), ContractError);
}

TEST(WriteShards, LimitAndRoundTrip) {
    TempDir dir("pkg");
    std::mt19937_64 rng(31);
    auto docs = refinery::testing::random_scored_corpus(rng, 400);
    for (auto& d : docs) d.wds = 7.25 + (d.wds.value() / 1000.0);
    sort_bin(docs);
    ShardOptions options{dir.path(), "eus_Latn", 4096, 3};
    const auto manifests = write_shards(docs, WdsBin::from_level(7), options);
    ASSERT_GT(manifests.size(), 3u);
    std::size_t count = 0;
    std::vector<std::filesystem::path> paths;
    for (std::size_t i = 0; i < manifests.size(); ++i) {
        const auto& m = manifests[i];
        EXPECT_EQ(m.shard_index, i);
        EXPECT_GE(m.document_count, 1u);
        EXPECT_LE(m.uncompressed_bytes, 4096u);
        EXPECT_EQ(m.first_id, docs[count].id);
        EXPECT_EQ(m.last_id, docs[count + m.document_count - 1].id);
        const auto path = dir.path() / m.path;
        EXPECT_EQ(path, shard_path(dir.path(), "eus_Latn", WdsBin::from_level(7), i));
        EXPECT_EQ(std::filesystem::file_size(path), m.compressed_bytes);
        // each shard decodes on its own
        const auto part = read_documents(path);
        EXPECT_EQ(part.size(), m.document_count);
        std::uint64_t bytes = 0;
        for (const auto& d : part) bytes += serialize_document(d).size() + 1;
        EXPECT_EQ(bytes, m.uncompressed_bytes);
        count += m.document_count;
        paths.push_back(path);
    }
    EXPECT_EQ(count, docs.size());
    std::reverse(paths.begin(), paths.end());
    EXPECT_EQ(read_shards(paths), docs);
}

TEST(WriteShards, OversizedDocumentNamed) {
    TempDir dir("pkg");
    std::vector<Document> docs = {scored("small", 8.0), scored("huge", 8.0)};
    docs[1].text = std::string(500, 'x');
    try {
        write_shards(docs, WdsBin::from_level(8), ShardOptions{dir.path(), "eus_Latn", 200, 3});
        FAIL();
    } catch (const std::exception& e) {
        EXPECT_NE(std::string(e.what()).find("huge"), std::string::npos) << e.what();
    }
    EXPECT_FALSE(std::filesystem::exists(dir / "eus_Latn/8/0.jsonl.zst"));
}

TEST(ReadShards, EmptyAndSingle) {
    EXPECT_TRUE(read_shards({}).empty());
    TempDir dir("pkg");
    std::vector<Document> one = {scored("only", 9.5)};
    const auto m = write_shards(one, WdsBin::from_level(9), ShardOptions{dir.path(), "eus_Latn", 1 << 20, 9});
    ASSERT_EQ(m.size(), 1u);
    EXPECT_EQ(read_shards({dir.path() / m[0].path}), one);
}

TEST(Package, ManifestAndReleaseOrder) {
    TempDir dir("pkg");
    std::mt19937_64 rng(77);
    auto docs = refinery::testing::random_scored_corpus(rng, 1500);
    ShardOptions options{dir.path(), "eus_Latn", 8192, 5};
    const auto result = package(docs, options, 3);
    EXPECT_EQ(result.manifest_path, dir.path() / "eus_Latn" / "manifest.json");
    const auto manifests = read_manifest(result.manifest_path);
    ASSERT_EQ(manifests.size(), result.manifests.size());

    std::vector<std::filesystem::path> paths;
    std::map<std::string, std::size_t> per_bin;
    for (std::size_t i = 0; i < manifests.size(); ++i) {
        EXPECT_EQ(to_json(manifests[i]), to_json(result.manifests[i]));
        paths.push_back(dir.path() / manifests[i].path);
        per_bin[manifests[i].bin.name()] += manifests[i].document_count;
    }
    auto expected = docs;
    std::stable_sort(expected.begin(), expected.end(), [](const Document& a, const Document& b) {
        const auto ba = WdsBin::from_level(static_cast<int>(*a.wds));
        const auto bb = WdsBin::from_level(static_cast<int>(*b.wds));
        if (ba != bb) return ba < bb;
        return oracle_before(a, b);
    });
    std::shuffle(paths.begin(), paths.end(), rng);
    EXPECT_EQ(read_shards(paths), expected);
    for (const auto& group : assign_bins(docs)) EXPECT_EQ(per_bin[group.bin.name()], group.documents.size());

    // second run with other workers: identical bytes
    TempDir again("pkg");
    package(docs, ShardOptions{again.path(), "eus_Latn", 8192, 5}, 1);
    for (const auto& m : manifests) {
        EXPECT_EQ(refinery::testing::read_bytes(dir.path() / m.path), refinery::testing::read_bytes(again.path() / m.path));
    }
    EXPECT_EQ(refinery::testing::read_bytes(result.manifest_path),
              refinery::testing::read_bytes(again.path() / "eus_Latn" / "manifest.json"));
}

TEST(Package, RemovesStaleShards) {
    TempDir dir("pkg");
    ShardOptions options{dir.path(), "eus_Latn", 1 << 20, 3};
    package({scored("a", 9.1), scored("b", 6.0)}, options);
    ASSERT_TRUE(std::filesystem::exists(dir / "eus_Latn/9/0.jsonl.zst"));
    package({scored("b", 6.0)}, options);
    EXPECT_FALSE(std::filesystem::exists(dir / "eus_Latn/9"));
    EXPECT_EQ(read_manifest(dir / "eus_Latn/manifest.json").size(), 1u);
}
