#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "refinery/errors.hpp"
#include "refinery/wds.hpp"
#include "support/fixtures.hpp"
#include "support/oracles.hpp"

using namespace refinery;
using refinery::testing::make_doc;

using refinery::testing::pristine_text;

TEST(Wds, EmptyScoresZero) {
    const auto r = score_document(make_doc("e", ""), 1.0);
    EXPECT_EQ(r.score, 0.0);
    EXPECT_EQ(r.level, 0);
    EXPECT_EQ(score_document(make_doc("e", " \n\t"), 1.0).score, 0.0);
}

TEST(Wds, PristineScoresTen) {
    const auto r = score_document(make_doc("p", pristine_text(200)), 1.0);
    EXPECT_EQ(r.subsignals.non_letter_ratio, 0.0);
    EXPECT_EQ(r.subsignals.repeated_line_ratio, 0.0);
    EXPECT_EQ(r.oddity_penalty, 0.0);
    EXPECT_EQ(r.length_score, 1.0);
    EXPECT_EQ(r.score, 10.0);
    EXPECT_EQ(r.level, 10);
}

TEST(Wds, HalvingShareHalvesScore) {
    for (std::size_t tokens : {30u, 80u, 150u, 400u}) {
        const auto doc = make_doc("h", pristine_text(tokens) + "\n12 34 http://x.eus");
        const auto full = score_document(doc, 0.8);
        const auto half = score_document(doc, 0.4);
        EXPECT_DOUBLE_EQ(half.score, full.score / 2.0) << tokens;
    }
}

TEST(Wds, LengthRamp) {
    WdsParams p;
    EXPECT_EQ(length_score(0, p), 0.0);
    EXPECT_EQ(length_score(19.999, p), 0.0);
    EXPECT_EQ(length_score(20, p), 0.0);
    EXPECT_DOUBLE_EQ(length_score(110, p), 0.5);
    EXPECT_EQ(length_score(200, p), 1.0);
    EXPECT_EQ(length_score(5000, p), 1.0);
}

TEST(Wds, SubsignalsHandCounted) {
    // 21 visible code points, 15 letters, 3 digits; "ab1" repeats once over 4 segments
    const auto s = compute_subsignals("ab1 x,y\nab1\nab1\nwww.e.eus");
    EXPECT_DOUBLE_EQ(s.digit_ratio, 3.0 / 21.0);
    EXPECT_DOUBLE_EQ(s.non_letter_ratio, 6.0 / 21.0);
    EXPECT_DOUBLE_EQ(s.repeated_line_ratio, 0.25);
    EXPECT_DOUBLE_EQ(s.url_density, 100.0 / 5.0);
    EXPECT_DOUBLE_EQ(s.avg_segment_tokens, 5.0 / 4.0);
}

TEST(Wds, OddityExceedance) {
    WdsParams p;
    WdsSubsignals s;
    s.digit_ratio = 0.2;  // at threshold: no penalty
    EXPECT_EQ(oddity_penalty(s, p), 0.0);
    s.digit_ratio = 0.3;  // half over
    EXPECT_DOUBLE_EQ(oddity_penalty(s, p), 0.25);
    s.digit_ratio = 0.9;  // clamped exceedance
    EXPECT_DOUBLE_EQ(oddity_penalty(s, p), 0.5);
    s.url_density = 5.0;
    s.non_letter_ratio = 1.0;
    EXPECT_DOUBLE_EQ(oddity_penalty(s, p), 1.0);
}

TEST(Wds, LevelFloor) {
    EXPECT_EQ(wds_level(7.99), 7);
    EXPECT_EQ(wds_level(10.0), 10);
    EXPECT_EQ(wds_level(0.0), 0);
    EXPECT_THROW(wds_level(-0.01), ContractError);
    EXPECT_THROW(wds_level(10.01), ContractError);
    EXPECT_THROW(wds_level(std::nan("")), ContractError);
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(0.0, 10.0);
    for (int i = 0; i < 10000; ++i) {
        const double s = u(rng);
        int oracle = 0;
        while (oracle + 1 <= s) ++oracle;
        ASSERT_EQ(wds_level(s), oracle) << s;
    }
}

TEST(Wds, ScoreInvariantHolds) {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> share(0.0, 1.0);
    for (int i = 0; i < 300; ++i) {
        std::string text = refinery::testing::random_lines(rng, 1 + rng() % 30, 15, 300);
        if (i % 3 == 0) text += "\n2024 99 http://a.eus www.b.eus !!";
        if (i % 5 == 0) text += "\n" + text;
        const double sp = share(rng);
        const auto r = score_document(make_doc("x", text), sp);
        EXPECT_DOUBLE_EQ(r.score, 10.0 * r.language_share_score * r.length_score * (1.0 - r.oddity_penalty));
        EXPECT_GE(r.score, 0.0);
        EXPECT_LE(r.score, 10.0);
        EXPECT_EQ(r.level, static_cast<int>(std::floor(r.score)));
        for (double f : {r.language_share_score, r.length_score, r.oddity_penalty}) {
            EXPECT_GE(f, 0.0);
            EXPECT_LE(f, 1.0);
        }
    }
}

TEST(Wds, RejectsBadProfile) {
    EXPECT_THROW(score_document(make_doc("x", "a"), 1.5), ContractError);
    EXPECT_THROW(score_document(make_doc("x", "a"), -0.1), ContractError);
}

TEST(Wds, AnnotateWritesMetadata) {
    auto doc = make_doc("x", pristine_text(50));
    const auto r = score_document(doc, 1.0);
    annotate(doc, r);
    ASSERT_TRUE(doc.wds);
    EXPECT_EQ(*doc.wds, r.score);
    ASSERT_TRUE(doc.wds_subsignals);
    EXPECT_EQ(doc.wds_subsignals->size(), 5u);
    EXPECT_EQ(doc.wds_subsignals->at("repeated_line_ratio"), 0.0);
}

TEST(FilterByLevel, Partitions) {
    std::mt19937_64 rng(9);
    auto docs = refinery::testing::random_scored_corpus(rng, 300);
    EXPECT_EQ(filter_by_level(docs, 0).retained.size(), docs.size());
    EXPECT_TRUE(filter_by_level(docs, 11).retained.empty());
    for (int min_level = 0; min_level <= 11; ++min_level) {
        const auto r = filter_by_level(docs, min_level);
        EXPECT_EQ(r.retained.size() + r.removed.size(), docs.size());
        std::set<std::string> ids;
        for (const auto& d : r.retained) {
            EXPECT_GE(std::floor(*d.wds), min_level);
            ids.insert(d.id);
        }
        for (const auto& d : r.removed) {
            EXPECT_LT(std::floor(*d.wds), min_level);
            EXPECT_EQ(d.removed_reason, RemovedReason::below_wds);
            EXPECT_TRUE(ids.insert(d.id).second);
        }
        EXPECT_EQ(ids.size(), docs.size());
    }
    docs[3].wds.reset();
    EXPECT_THROW(filter_by_level(docs, 5), ContractError);
}

TEST(WdsParams, Validation) {
    WdsParams p;
    EXPECT_NO_THROW(p.validate());
    p.target_tokens = 10;
    EXPECT_THROW(p.validate(), ConfigError);
    p = WdsParams{};
    p.digit_ratio.weight = -1;
    EXPECT_THROW(p.validate(), ConfigError);
}
