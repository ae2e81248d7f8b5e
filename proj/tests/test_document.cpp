#include <random>

#include <gtest/gtest.h>

#include "refinery/document.hpp"
#include "refinery/errors.hpp"
#include "refinery/io.hpp"
#include "refinery/text.hpp"
#include "support/fixtures.hpp"

using namespace refinery;
using refinery::testing::TempDir;

namespace {

// Reference splitter: walk the bytes by hand, no shared helpers.
std::vector<std::string> oracle_lines(const std::string& text) {
    auto is_space = [](unsigned char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\v' || c == '\f'; };
    std::vector<std::string> out;
    std::string cur;
    auto flush = [&] {
        std::size_t b = 0, e = cur.size();
        while (b < e && is_space(static_cast<unsigned char>(cur[b]))) ++b;
        while (e > b && is_space(static_cast<unsigned char>(cur[e - 1]))) --e;
        if (e > b) out.push_back(cur.substr(b, e - b));
        cur.clear();
    };
    for (char c : text) {
        if (c == '\n') {
            flush();
        } else {
            cur += c;
        }
    }
    flush();
    return out;
}

std::size_t oracle_tokens(const std::string& line) {
    std::size_t n = 0;
    bool in = false;
    for (char c : line) {
        const bool sp = c == ' ' || c == '\t' || c == '\r' || c == '\v' || c == '\f';
        if (!sp && !in) ++n;
        in = !sp;
    }
    return n;
}

Document random_document(std::mt19937_64& rng, std::size_t i) {
    std::uniform_int_distribution<int> coin(0, 1);
    Document d;
    d.id = "id-" + std::to_string(i) + "-\"q\"";
    d.lang = coin(rng) ? "spa_Latn" : "ukr_Cyrl";
    d.text = refinery::testing::random_unicode(rng, 40) + "\n" + refinery::testing::random_words(rng, 5, 50);
    if (coin(rng)) d.url = "https://example.org/" + std::to_string(i);
    if (coin(rng)) d.collection = "crawl-" + std::to_string(i % 4);
    if (coin(rng)) d.seg_langs = std::vector<std::string>(count_segments(d.text), d.lang);
    if (coin(rng)) d.wds = std::uniform_real_distribution<double>(0, 10)(rng);
    if (coin(rng)) d.wds_subsignals = std::map<std::string, double>{{"digit_ratio", 0.125}, {"url_density", 0.0}};
    if (coin(rng)) d.register_label = "NA";
    if (coin(rng)) d.removed_reason = RemovedReason::below_wds;
    if (coin(rng)) {
        d.extras["zeta"] = i;
        d.extras["alpha"] = Json::array({1, "two", nullptr});
        d.extras["nested"] = {{"k", 1.5}};
    }
    return d;
}

}  // namespace

TEST(ParseDocument, MinimalRecord) {
    const auto d = parse_document_line(R"({"id":"a","lang":"eng_Latn","text":"hi"})");
    EXPECT_EQ(d.id, "a");
    EXPECT_EQ(d.lang, "eng_Latn");
    EXPECT_EQ(d.text, "hi");
    EXPECT_FALSE(d.url);
    EXPECT_EQ(d.collection, "");
    EXPECT_TRUE(d.extras.empty());
}

TEST(ParseDocument, MissingTextNamesField) {
    try {
        parse_document_line(R"({"id":"a","lang":"eng_Latn"})");
        FAIL() << "expected SchemaError";
    } catch (const SchemaError& e) {
        EXPECT_EQ(e.field(), "text");
    }
}

TEST(ParseDocument, MissingIdAndLang) {
    try {
        parse_document_line(R"({"lang":"eng_Latn","text":"x"})");
        FAIL();
    } catch (const SchemaError& e) {
        EXPECT_EQ(e.field(), "id");
    }
    try {
        parse_document_line(R"({"id":"a","text":"x"})");
        FAIL();
    } catch (const SchemaError& e) {
        EXPECT_EQ(e.field(), "lang");
    }
}

TEST(ParseDocument, MalformedJsonHasOffset) {
    const std::string line = R"({"id":"a","lang": ,"text":"x"})";
    try {
        parse_document_line(line);
        FAIL();
    } catch (const ParseError& e) {
        EXPECT_LE(e.byte_offset(), line.size());
        EXPECT_GE(e.byte_offset(), 16u);
    }
    EXPECT_THROW(parse_document_line("[1,2]"), ParseError);
}

TEST(ParseDocument, RejectsBadFields) {
    EXPECT_THROW(parse_document_line(R"({"id":"","lang":"x","text":"a"})"), SchemaError);
    EXPECT_THROW(parse_document_line(R"({"id":"a","lang":"x","text":"a","wds":11})"), SchemaError);
    EXPECT_THROW(parse_document_line(R"({"id":"a","lang":"x","text":"a\nb","seg_langs":["x"]})"), SchemaError);
    EXPECT_THROW(parse_document_line(R"({"id":"a","lang":"x","text":"a","removed_reason":"spam"})"), SchemaError);
    EXPECT_THROW(parse_document_line(R"({"id":7,"lang":"x","text":"a"})"), SchemaError);
}

TEST(ParseDocument, UnknownKeysKeptInOrder) {
    const std::string line = R"({"id":"a","zz":1,"lang":"x","text":"t","aa":{"b":[1,2]}})";
    const auto d = parse_document_line(line);
    ASSERT_EQ(d.extras.size(), 2u);
    EXPECT_EQ(d.extras.begin().key(), "zz");
    EXPECT_EQ(serialize_document(d), R"({"id":"a","collection":"","lang":"x","text":"t","zz":1,"aa":{"b":[1,2]}})");
}

TEST(ParseDocument, RoundTripFuzzed) {
    std::mt19937_64 rng(11);
    for (std::size_t i = 0; i < 1000; ++i) {
        const Document d = random_document(rng, i);
        const std::string line = serialize_document(d);
        EXPECT_EQ(line.find('\n'), std::string::npos);
        const Document back = parse_document_line(line);
        ASSERT_EQ(back, d) << line;
        EXPECT_EQ(serialize_document(back), line);
    }
}

TEST(Segments, Example) {
    const auto segs = segment_text("a\n\n b \n");
    ASSERT_EQ(segs.size(), 2u);
    EXPECT_EQ(segs[0], (Segment{0, "a", 1}));
    EXPECT_EQ(segs[1], (Segment{1, "b", 1}));
    EXPECT_TRUE(segment_text("").empty());
    EXPECT_TRUE(segment_text(" \n\t\n").empty());
}

TEST(Segments, MatchesReferenceSplitter) {
    std::mt19937_64 rng(5);
    const std::string alphabet = "ab  \t\n\n\r x";
    std::uniform_int_distribution<std::size_t> pick(0, alphabet.size() - 1);
    std::uniform_int_distribution<std::size_t> len(0, 60);
    for (int round = 0; round < 2000; ++round) {
        std::string text;
        const std::size_t n = len(rng);
        for (std::size_t i = 0; i < n; ++i) text += alphabet[pick(rng)];
        const auto expected = oracle_lines(text);
        const auto segs = segment_text(text);
        ASSERT_EQ(segs.size(), expected.size()) << text;
        std::size_t total = 0, expected_total = 0;
        for (std::size_t i = 0; i < segs.size(); ++i) {
            EXPECT_EQ(segs[i].index, i);
            EXPECT_EQ(segs[i].text, expected[i]);
            EXPECT_GE(segs[i].token_count, 1u);
            EXPECT_EQ(segs[i].token_count, oracle_tokens(expected[i]));
            total += segs[i].token_count;
            expected_total += oracle_tokens(expected[i]);
        }
        EXPECT_EQ(total, expected_total);
        EXPECT_EQ(count_segments(text), expected.size());
    }
}

TEST(Segments, UnicodeWhitespaceTrimmed) {
    // U+3000 ideographic space and U+00A0 no-break space are White_Space
    const auto segs = segment_text("\xE3\x80\x80kaixo\xC2\xA0mundua\xC2\xA0\n\xE2\x80\x83");
    ASSERT_EQ(segs.size(), 1u);
    EXPECT_EQ(segs[0].text, "kaixo\xC2\xA0mundua");
    EXPECT_EQ(segs[0].token_count, 2u);
}

TEST(Text, Utf8Validation) {
    EXPECT_TRUE(is_valid_utf8("plain"));
    EXPECT_TRUE(is_valid_utf8("\xF0\x9F\x98\x80"));
    EXPECT_FALSE(is_valid_utf8("\xC0\xAF"));          // overlong
    EXPECT_FALSE(is_valid_utf8("\xED\xA0\x80"));      // surrogate
    EXPECT_FALSE(is_valid_utf8("\xF4\x90\x80\x80"));  // past U+10FFFF
    EXPECT_FALSE(is_valid_utf8("\xE2\x82"));          // truncated
}

TEST(Text, HashIsStable) {
    EXPECT_EQ(hash_bytes("abc"), hash_bytes(std::string("abc")));
    EXPECT_NE(hash_bytes("abc"), hash_bytes("abd"));
    EXPECT_EQ(mix64(0), 0u);
}

TEST(CheckUniqueIds, DuplicateThrows) {
    std::vector<Document> docs = {refinery::testing::make_doc("a", "x"), refinery::testing::make_doc("a", "y")};
    EXPECT_THROW(check_unique_ids(docs), SchemaError);
}

TEST(Io, JsonlAndZstdRoundTrip) {
    TempDir dir("io");
    std::mt19937_64 rng(3);
    std::vector<Document> docs;
    for (std::size_t i = 0; i < 200; ++i) docs.push_back(random_document(rng, i));
    write_documents(dir / "a.jsonl", docs);
    write_documents(dir / "a.jsonl.zst", docs);
    EXPECT_EQ(read_documents(dir / "a.jsonl"), docs);
    EXPECT_EQ(read_documents(dir / "a.jsonl.zst"), docs);
    // no temporaries left behind
    std::size_t files = 0;
    for ([[maybe_unused]] const auto& e : std::filesystem::directory_iterator(dir.path())) ++files;
    EXPECT_EQ(files, 2u);
}

TEST(Io, ErrorsCarryFileAndLine) {
    TempDir dir("io");
    refinery::testing::write_bytes(dir / "bad.jsonl",
                                   "{\"id\":\"a\",\"lang\":\"x\",\"text\":\"t\"}\n\n{\"id\":\"b\",\"lang\":\"x\"}\n");
    try {
        read_documents(dir / "bad.jsonl");
        FAIL();
    } catch (const SchemaError& e) {
        EXPECT_NE(std::string(e.what()).find("bad.jsonl:3"), std::string::npos) << e.what();
    }
}

TEST(Io, CorruptFrameReportsOffset) {
    TempDir dir("io");
    std::vector<Document> docs;
    for (int i = 0; i < 50; ++i) docs.push_back(refinery::testing::make_doc("d" + std::to_string(i), "text"));
    write_documents(dir / "a.jsonl.zst", docs);
    std::string bytes = refinery::testing::read_bytes(dir / "a.jsonl.zst");
    refinery::testing::write_bytes(dir / "trunc.jsonl.zst", bytes.substr(0, bytes.size() - 3));
    EXPECT_THROW(read_documents(dir / "trunc.jsonl.zst"), FrameError);
    bytes[bytes.size() / 2] ^= 0x5A;
    bytes[bytes.size() / 2 + 1] ^= 0x33;
    refinery::testing::write_bytes(dir / "flip.jsonl.zst", bytes);
    try {
        read_documents(dir / "flip.jsonl.zst");
        FAIL();
    } catch (const FrameError& e) {
        EXPECT_NE(std::string(e.what()).find("flip.jsonl.zst"), std::string::npos);
    } catch (const std::exception&) {
        // a flipped literal may still decode and fail JSON parsing instead
    }
}

TEST(Io, AtomicFileRemovesTempOnAbort) {
    TempDir dir("io");
    {
        AtomicFile f(dir / "out.txt");
        f.stream() << "partial";
        EXPECT_TRUE(std::filesystem::exists(f.temp_path()));
    }
    EXPECT_FALSE(std::filesystem::exists(dir / "out.txt"));
    EXPECT_TRUE(std::filesystem::is_empty(dir.path()));
}
