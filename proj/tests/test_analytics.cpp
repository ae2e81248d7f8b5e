#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include <gtest/gtest.h>

#include "refinery/analytics.hpp"
#include "refinery/errors.hpp"
#include "refinery/stopwords.hpp"
#include "support/fixtures.hpp"
#include "support/oracles.hpp"

using namespace refinery;
using refinery::testing::make_doc;

using refinery::testing::brute_top_ngrams;
using refinery::testing::oracle_segments;
using refinery::testing::labeled_corpus;
using refinery::testing::random_url;
using refinery::testing::wilson_roots;

TEST(CorpusSummary, Basics) {
    WhitespaceTokenizer tok;
    const auto s = corpus_summary({make_doc("a", "a b c")}, tok);
    EXPECT_EQ(s.document_count, 1);
    EXPECT_EQ(s.token_count, 3);
    EXPECT_EQ(s.avg_document_length, 3);
    EXPECT_THROW(corpus_summary({}, tok), ContractError);
    const auto shared = corpus_summary({make_doc("a", "a b c"), make_doc("b", "d")}, tok, 40.0);
    EXPECT_DOUBLE_EQ(shared.share_percent, 10.0);
    EXPECT_THROW(corpus_summary({make_doc("a", "a b c")}, tok, 2.0), ContractError);
}

TEST(CorpusSummary, TokensMatchCounter) {
    std::mt19937_64 rng(5);
    WhitespaceTokenizer tok;
    auto docs = labeled_corpus(rng, 100);
    std::size_t total = 0;
    for (const auto& d : docs) {
        for (const auto& s : oracle_segments(d.text)) total += s.size();
    }
    const auto s = corpus_summary(docs, tok);
    EXPECT_EQ(s.token_count, static_cast<double>(total));
    EXPECT_EQ(s.avg_document_length, static_cast<double>(total) / 100.0);
}

TEST(CorpusSummary, TableRows) {
    // rounded published counts against the printed averages
    EXPECT_NEAR(summarize_counts(3.2e6, 3.2e9, 30e12).avg_document_length / 991.0, 1.0, 0.05);
    EXPECT_NEAR(summarize_counts(107e6, 126e9, 30e12).avg_document_length / 1171.0, 1.0, 0.05);
}

TEST(UniqueSegments, Examples) {
    EXPECT_DOUBLE_EQ(unique_segment_ratio({make_doc("a", "x\ny\nz")}).value, 1.0);
    EXPECT_DOUBLE_EQ(unique_segment_ratio({make_doc("a", "s\ns"), make_doc("b", " s \n\ns")}).value, 0.25);
    const auto empty = unique_segment_ratio({make_doc("a", " \n")});
    EXPECT_EQ(empty.value, 0.0);
    EXPECT_TRUE(empty.warning);
}

TEST(LengthProfiles, Boundaries) {
    std::string doc26, doc25;
    for (int i = 0; i < 26; ++i) doc26 += "line " + std::to_string(i) + " x\n";
    for (int i = 0; i < 25; ++i) doc25 += "line " + std::to_string(i) + " x\n";
    EXPECT_EQ(length_profiles({make_doc("a", doc26)}).large_doc_ratio, 1.0);
    EXPECT_EQ(length_profiles({make_doc("a", doc25)}).large_doc_ratio, 0.0);
    EXPECT_EQ(length_profiles({make_doc("a", "a b c\nd e f")}).short_segment_ratio, 0.0);
    EXPECT_EQ(length_profiles({make_doc("a", "a b\nd e f")}).short_segment_ratio, 0.5);
}

TEST(InLanguageRatio, ExamplesAndErrors) {
    auto d = make_doc("a", "x\ny");
    d.seg_langs = std::vector<std::string>{"eus_Latn", "eus_Latn"};
    EXPECT_EQ(in_language_ratio({d}), 1.0);
    d.seg_langs = std::vector<std::string>{"spa_Latn", "cat_Latn"};
    EXPECT_EQ(in_language_ratio({d}), 0.0);
    auto missing = make_doc("nolabels", "x");
    try {
        in_language_ratio({d, missing});
        FAIL();
    } catch (const ContractError& e) {
        EXPECT_NE(std::string(e.what()).find("nolabels"), std::string::npos);
    }
}

TEST(TopNgrams, Examples) {
    const auto r = top_ngrams({make_doc("a", "the cat")}, StopwordSet{"the"});
    EXPECT_EQ(r.orders[0], (std::vector<NgramCount>{{"cat", 1}}));
    EXPECT_TRUE(r.orders[1].empty());
    const auto overlap = top_ngrams({make_doc("a", "a a a")}, StopwordSet{});
    EXPECT_EQ(overlap.orders[0], (std::vector<NgramCount>{{"a", 3}}));
    EXPECT_EQ(overlap.orders[1], (std::vector<NgramCount>{{"a a", 2}}));
    EXPECT_EQ(overlap.orders[2], (std::vector<NgramCount>{{"a a a", 1}}));
    // no n-gram crosses a segment boundary
    const auto lines = top_ngrams({make_doc("a", "x y\nz")}, StopwordSet{});
    EXPECT_EQ(lines.orders[1], (std::vector<NgramCount>{{"x y", 1}}));
    // stopwords in the middle are fine
    const auto mid = top_ngrams({make_doc("a", "cat the dog")}, StopwordSet{"the"});
    EXPECT_EQ(mid.orders[2], (std::vector<NgramCount>{{"cat the dog", 1}}));
}

TEST(TopNgrams, MatchesBruteForce) {
    std::mt19937_64 rng(8);
    const StopwordSet stop = {"the", "ka", "lo"};
    for (int round = 0; round < 5; ++round) {
        const auto docs = labeled_corpus(rng, 60);
        const auto got = top_ngrams(docs, stop);
        const auto expected = brute_top_ngrams(docs, stop, kTopNgrams);
        for (std::size_t n = 0; n < kMaxNgramOrder; ++n) {
            EXPECT_EQ(got.orders[n], expected.orders[n]) << "order " << n + 1;
            for (std::size_t i = 1; i < got.orders[n].size(); ++i) {
                EXPECT_GE(got.orders[n][i - 1].second, got.orders[n][i].second);
            }
            for (const auto& [gram, count] : got.orders[n]) {
                const auto first = gram.substr(0, gram.find(' '));
                const auto last = gram.substr(gram.rfind(' ') + 1);
                EXPECT_FALSE(stop.count(first) || stop.count(last)) << gram;
            }
        }
    }
}

TEST(TopNgrams, UnicodeLowercasing) {
    const auto r = top_ngrams({make_doc("a", "ÉTXEA étxea")}, StopwordSet{});
    EXPECT_EQ(r.orders[0], (std::vector<NgramCount>{{"étxea", 2}}));
}

TEST(DomainReport, Examples) {
    auto d = make_doc("a", "x");
    d.url = "https://ca.wikipedia.org/x";
    const auto r = domain_report({d});
    EXPECT_EQ(r.wikipedia_share, 1.0);
    EXPECT_EQ(r.tld_counts, (std::map<std::string, std::uint64_t>{{"org", 1}}));
    const auto none = domain_report({make_doc("a", "x"), make_doc("b", "y")});
    EXPECT_EQ(none.unknown, 2u);
    EXPECT_TRUE(none.host_counts.empty());
    EXPECT_EQ(none.wikipedia_share, 0.0);
    auto fake = make_doc("c", "z");
    fake.url = "https://notwikipedia.org/";
    EXPECT_EQ(domain_report({fake}).wikipedia_share, 0.0);
}

TEST(DomainReport, MatchesConstructedHosts) {
    std::mt19937_64 rng(44);
    std::vector<Document> docs;
    std::map<std::string, std::uint64_t> hosts, tlds;
    std::uint64_t unknown = 0, wiki = 0;
    for (int i = 0; i < 500; ++i) {
        auto d = make_doc("d" + std::to_string(i), "x");
        if (rng() % 10 != 0) {
            const auto c = random_url(rng);
            d.url = c.url;
            ASSERT_EQ(url_host(c.url), c.host) << c.url;
            if (c.host) {
                ++hosts[*c.host];
                ++tlds[c.host->substr(c.host->rfind('.') + 1)];
                const std::string suffix = "wikipedia.org";
                const auto& h = *c.host;
                if (h == suffix || (h.size() > suffix.size() && h.compare(h.size() - suffix.size(), suffix.size(), suffix) == 0 &&
                                    h[h.size() - suffix.size() - 1] == '.')) {
                    ++wiki;
                }
            } else {
                ++unknown;
            }
        } else {
            ++unknown;
        }
        docs.push_back(d);
    }
    const auto r = domain_report(docs);
    EXPECT_EQ(r.host_counts, hosts);
    EXPECT_EQ(r.tld_counts, tlds);
    EXPECT_EQ(r.unknown, unknown);
    EXPECT_DOUBLE_EQ(r.wikipedia_share, static_cast<double>(wiki) / 500.0);
    std::uint64_t tld_sum = 0;
    for (const auto& [t, c] : r.tld_counts) tld_sum += c;
    EXPECT_EQ(tld_sum, 500u - r.unknown);
}

TEST(ProportionCi, Examples) {
    const auto zero = proportion_ci(0, 100);
    EXPECT_EQ(zero.low, 0);
    EXPECT_EQ(zero.high, 4);
    EXPECT_EQ(proportion_ci(100, 100).high, 100);
    EXPECT_EQ(proportion_ci(7, 7).high, 100);
    const auto half = proportion_ci(50, 100);
    EXPECT_EQ(half.low + half.high, 100);
    EXPECT_THROW(proportion_ci(0, 0), ContractError);
    EXPECT_THROW(proportion_ci(5, 4), ContractError);
}

TEST(ProportionCi, MatchesQuadraticRoots) {
    for (std::uint64_t n = 1; n <= 300; n += 7) {
        for (std::uint64_t k = 0; k <= n; ++k) {
            const auto [lo, hi] = wilson_roots(static_cast<double>(k), static_cast<double>(n));
            const auto got = wilson_interval(k, n);
            EXPECT_NEAR(got.first, std::max(0.0, lo), 1e-12);
            EXPECT_NEAR(got.second, std::min(1.0, hi), 1e-12);
            const double p = static_cast<double>(k) / static_cast<double>(n);
            EXPECT_LE(got.first, p + 1e-15);
            EXPECT_GE(got.second, p - 1e-15);
            const auto pct = proportion_ci(k, n);
            EXPECT_EQ(pct.low, static_cast<int>(std::floor(std::max(0.0, lo) * 100 + 0.5)));
            EXPECT_EQ(pct.high, static_cast<int>(std::floor(std::min(1.0, hi) * 100 + 0.5)));
            EXPECT_GE(pct.low, 0);
            EXPECT_LE(pct.high, 100);
        }
    }
}

TEST(CorpusStats, MergeIsPartitionIndependent) {
    std::mt19937_64 rng(10);
    auto docs = labeled_corpus(rng, 200);
    for (std::size_t i = 0; i < docs.size(); ++i) {
        if (i % 3) docs[i].url = random_url(rng).url;
        if (i % 5 == 0) docs[i].register_label = i % 2 ? "IN" : "NA";
    }
    const StopwordSet stop = builtin_stopwords("eus_Latn");
    const Json one = analyze(docs, stop, 1e9, 1);
    const Json four = analyze(docs, stop, 1e9, 4);
    EXPECT_EQ(one.dump(), four.dump());
    auto shuffled = docs;
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    EXPECT_EQ(analyze(shuffled, stop, 1e9, 3).dump(), one.dump());

    CorpusStats left(&stop), right(&stop), whole(&stop);
    for (std::size_t i = 0; i < docs.size(); ++i) {
        (i % 2 ? left : right).add(docs[i]);
        whole.add(docs[i]);
    }
    left.merge(right);
    EXPECT_EQ(left.documents(), whole.documents());
    EXPECT_EQ(left.tokens(), whole.tokens());
    EXPECT_EQ(left.unique_segment_ratio().value, whole.unique_segment_ratio().value);
    EXPECT_EQ(left.top_ngrams().orders, whole.top_ngrams().orders);
    EXPECT_EQ(left.domains().host_counts, whole.domains().host_counts);
    EXPECT_EQ(left.register_counts(), whole.register_counts());
}

TEST(Analyze, ReportShapeAndTable) {
    std::mt19937_64 rng(1);
    auto docs = labeled_corpus(rng, 20);
    const Json report = analyze(docs, StopwordSet{}, std::nullopt, 2);
    for (const char* key : {"documents", "tokens", "segments", "avg_document_length", "unique_segment_ratio",
                            "large_doc_ratio", "short_segment_ratio", "in_language_ratio", "top_ngrams", "domains"}) {
        EXPECT_TRUE(report.contains(key)) << key;
    }
    EXPECT_EQ(report["documents"], 20);
    const std::string table = render_report_table(report);
    EXPECT_NE(table.find("documents"), std::string::npos);
}

TEST(Stopwords, BuiltinsAndFile) {
    for (const auto& lang : {"eus_Latn", "cat_Latn", "ces_Latn", "fin_Latn", "fra_Latn", "glg_Latn", "nob_Latn",
                             "spa_Latn", "ukr_Cyrl", "eng_Latn"}) {
        EXPECT_FALSE(builtin_stopwords(lang).empty()) << lang;
    }
    EXPECT_TRUE(builtin_stopwords("xxx_Zzzz").empty());
    refinery::testing::TempDir dir("sw");
    refinery::testing::write_bytes(dir / "sw.txt", "# comment\nThe\n\n  of \n");
    EXPECT_EQ(load_stopwords(dir / "sw.txt"), (StopwordSet{"the", "of"}));
}
