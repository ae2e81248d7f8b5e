#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include <gtest/gtest.h>

#include "refinery/errors.hpp"
#include "refinery/eval_agg.hpp"
#include "support/fixtures.hpp"
#include "support/oracles.hpp"

using namespace refinery;

using refinery::testing::pairwise_average_rank;
using refinery::testing::pairwise_borda;

namespace {

struct RankCase {
    std::vector<double> x, y;
    double spearman, kendall;
};

// Reference values frozen from scipy.stats.spearmanr / kendalltau (tau-b).
const std::vector<RankCase> kRankCases = {
    {{3.0, 3.0, 4.0, 2.0, 3.0, 4.0, 1.0, 0.0, 1.0}, {1.0, 4.0, 4.0, 0.0, 2.0, 4.0, 0.0, 3.0, 0.0}, 0.65489290099942954, 0.55745196041636014},
    {{4.0, 1.0, 1.0, 1.0, 3.0, 1.0}, {4.0, 2.0, 2.0, 2.0, 2.0, 2.0}, 0.7745966692414834, 0.7453559924999299},
    {{4.0, 4.0, 3.0, 3.0, 3.0, 1.0, 4.0}, {2.0, 1.0, 4.0, 0.0, 4.0, 3.0, 0.0}, -0.4910463758239913, -0.35540932665545538},
    {{2.0, 0.0, 0.0, 2.0}, {4.0, 2.0, 4.0, 4.0}, 0.57735026918962573, 0.57735026918962584},
    {{3.0, 2.0, 2.0, 1.0, 2.0, 1.0, 1.0, 4.0}, {0.0, 0.0, 0.0, 4.0, 3.0, 4.0, 1.0, 3.0}, -0.48056000845617136, -0.40009880202694836},
    {{2.0, 0.0, 3.0, 4.0, 3.0, 0.0}, {2.0, 1.0, 4.0, 4.0, 0.0, 2.0}, 0.45454545454545447, 0.38461538461538469},
    {{4.0, 3.0, 3.0, 0.0, 3.0, 2.0, 0.0, 1.0, 2.0}, {3.0, 2.0, 3.0, 4.0, 3.0, 1.0, 3.0, 2.0, 0.0}, -0.067281488152359833, -0.033351867298253506},
    {{3.0, 1.0, 2.0, 1.0}, {1.0, 0.0, 1.0, 4.0}, 0, 0},
    {{1.0, 2.0, 3.0, 4.0, 5.0}, {5.0, 6.0, 7.0, 8.0, 7.0}, 0.82078268166812329, 0.73786478737262184},
    {{0.1, 0.4, 0.35, 0.8}, {0.2, 0.5, 0.1, 0.9}, 0.79999999999999993, 0.66666666666666685},
};

std::map<std::string, TaskInfo> one_task(double baseline = 0.25, double max = 1.0) {
    return {{"t", TaskInfo{baseline, max, "qa", "eus_Latn"}}};
}

std::vector<EvalRecord> series(const std::string& model, const std::string& task, const std::vector<double>& values,
                               const std::string& prompt = "p0") {
    std::vector<EvalRecord> out;
    for (std::size_t i = 0; i < values.size(); ++i) out.push_back({model, task, prompt, (i + 1) * 1'000'000'000ULL, values[i]});
    return out;
}

}  // namespace

TEST(RankStatistics, MatchReferenceImplementation) {
    for (const auto& c : kRankCases) {
        EXPECT_NEAR(spearman(c.x, c.y), c.spearman, 1e-12);
        EXPECT_NEAR(kendall_tau_b(c.x, c.y), c.kendall, 1e-12);
        EXPECT_NEAR(spearman(c.y, c.x), c.spearman, 1e-12);
    }
    const std::vector<double> flat = {1, 1, 1};
    const std::vector<double> up = {1, 2, 3};
    EXPECT_EQ(spearman(flat, up), 0.0);
    EXPECT_EQ(kendall_tau_b(flat, up), 0.0);
}

TEST(RankStatistics, DescendingRanksShareTies) {
    const std::vector<double> v = {0.5, 0.9, 0.5, 0.1};
    EXPECT_EQ(descending_ranks(v), (std::vector<double>{2.5, 1, 2.5, 4}));
    const std::vector<double> mad = {1, 2, 3, 4, 100};
    EXPECT_EQ(median_absolute_deviation(mad), 1.0);
}

TEST(Rescale, Boundaries) {
    EXPECT_EQ(rescale(0.25, 0.25, 1.0), 0.0);
    EXPECT_EQ(rescale(1.0, 0.25, 1.0), 1.0);
    EXPECT_EQ(rescale(0.1, 0.25, 1.0), 0.0);
    EXPECT_EQ(rescale(1.5, 0.25, 1.0), 1.0);
    EXPECT_DOUBLE_EQ(rescale(0.625, 0.25, 1.0), 0.5);
    EXPECT_THROW(rescale(0.5, 1.0, 1.0), ContractError);
    EXPECT_THROW(rescale(0.5, 2.0, 1.0), ContractError);
}

TEST(Rescale, AffineInvariant) {
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> u(-2, 2), scale(0.1, 50);
    for (int i = 0; i < 1000; ++i) {
        const double base = u(rng), max = base + scale(rng) / 10, s = u(rng);
        const double a = scale(rng), b = u(rng) * 100;
        EXPECT_NEAR(rescale(s, base, max), rescale(a * s + b, a * base + b, a * max + b), 1e-9);
    }
}

TEST(LanguageScore, TwoLevelMean) {
    const std::vector<CategoryScore> one = {{"A", 0.4}, {"A", 0.6}};
    EXPECT_DOUBLE_EQ(language_score(one), 0.5);
    const std::vector<CategoryScore> weighted = {{"A", 1.0}, {"B", 0.0}, {"B", 0.0}};
    EXPECT_DOUBLE_EQ(language_score(weighted), 0.5);
    EXPECT_THROW(language_score(std::vector<CategoryScore>{}), ContractError);

    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(0, 1);
    for (int round = 0; round < 200; ++round) {
        std::vector<CategoryScore> scores;
        std::map<std::string, std::vector<double>> by_cat;
        const std::size_t n = 1 + rng() % 10;
        for (std::size_t i = 0; i < n; ++i) {
            const std::string cat = "c" + std::to_string(rng() % 4);
            const double v = u(rng);
            scores.push_back({cat, v});
            by_cat[cat].push_back(v);
        }
        double total = 0;
        for (const auto& [cat, vs] : by_cat) {
            double s = 0;
            for (double v : vs) s += v;
            total += s / static_cast<double>(vs.size());
        }
        const double expected = total / static_cast<double>(by_cat.size());
        EXPECT_NEAR(language_score(scores), expected, 1e-12);
        std::shuffle(scores.begin(), scores.end(), rng);
        EXPECT_NEAR(language_score(scores), expected, 1e-12);
        EXPECT_GE(language_score(scores), 0.0);
        EXPECT_LE(language_score(scores), 1.0);
    }
}

TEST(Multilingual, UnanimityAndSingleLanguage) {
    LanguageScores s = {{"A", {{"eus", 0.9}, {"ces", 0.8}, {"fin", 0.7}}}, {"B", {{"eus", 0.1}, {"ces", 0.2}, {"fin", 0.3}}}};
    const auto r = multilingual_scores(s);
    EXPECT_EQ(r.average_rank.at("A"), 1.0);
    EXPECT_EQ(r.borda_points.at("A"), 3.0);
    EXPECT_EQ(r.borda_points.at("B"), 0.0);
    EXPECT_EQ(r.by_borda.front(), "A");
    EXPECT_EQ(r.by_average_rank, r.by_borda);
    EXPECT_EQ(r.by_average_score, r.by_borda);

    LanguageScores single = {{"A", {{"eus", 0.2}}}, {"B", {{"eus", 0.7}}}, {"C", {{"eus", 0.5}}}};
    const auto one = multilingual_scores(single);
    EXPECT_EQ(one.by_borda, (std::vector<std::string>{"B", "C", "A"}));
    EXPECT_EQ(one.by_borda, one.by_average_score);

    EXPECT_THROW(multilingual_scores({{"A", {{"eus", 0.2}}}}), ContractError);
    LanguageScores missing = {{"A", {{"eus", 0.2}, {"ces", 0.1}}}, {"B", {{"eus", 0.7}}}};
    EXPECT_THROW(multilingual_scores(missing), ContractError);
}

TEST(Multilingual, BordaMatchesPairwiseOracle) {
    std::mt19937_64 rng(31);
    for (std::size_t m = 2; m <= 4; ++m) {
        for (std::size_t l = 1; l <= 4; ++l) {
            for (int round = 0; round < 50; ++round) {
                LanguageScores s;
                for (std::size_t i = 0; i < m; ++i) {
                    for (std::size_t j = 0; j < l; ++j) {
                        // coarse values so ties are common
                        s["m" + std::to_string(i)]["l" + std::to_string(j)] = static_cast<double>(rng() % 4) / 4.0;
                    }
                }
                const auto r = multilingual_scores(s);
                const auto borda = pairwise_borda(s);
                const auto ranks = pairwise_average_rank(s);
                for (const auto& [model, pts] : borda) {
                    EXPECT_DOUBLE_EQ(r.borda_points.at(model), pts);
                    EXPECT_DOUBLE_EQ(r.average_rank.at(model), ranks.at(model));
                    // with languages as electorates the two totals are tied by m - rank
                    EXPECT_NEAR(r.borda_points.at(model),
                                static_cast<double>(l) * (static_cast<double>(m) - r.average_rank.at(model)), 1e-9);
                }
                EXPECT_EQ(r.by_borda, r.by_average_rank);

                // shifting one language leaves every rank and the Borda order alone
                auto shifted = s;
                for (auto& [model, langs] : shifted) langs["l0"] += 3.0;
                const auto rs = multilingual_scores(shifted);
                EXPECT_EQ(rs.average_rank, r.average_rank);
                EXPECT_EQ(rs.by_borda, r.by_borda);
            }
        }
    }
}

TEST(Multilingual, UnanimousOrderingsCollapse) {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0, 1);
    for (int round = 0; round < 200; ++round) {
        const std::size_t m = 2 + rng() % 3, l = 1 + rng() % 4;
        std::vector<double> base(m);
        for (auto& b : base) b = u(rng);
        std::sort(base.begin(), base.end());
        base.erase(std::unique(base.begin(), base.end()), base.end());
        LanguageScores s;
        for (std::size_t j = 0; j < l; ++j) {
            const double offset = u(rng), stretch = 0.5 + u(rng);
            for (std::size_t i = 0; i < base.size(); ++i) {
                s["m" + std::to_string(i)]["l" + std::to_string(j)] = offset + stretch * base[i];
            }
        }
        if (s.size() < 2) continue;
        const auto r = multilingual_scores(s);
        EXPECT_EQ(r.by_average_score, r.by_average_rank);
        EXPECT_EQ(r.by_average_rank, r.by_borda);
    }
}

TEST(TaskElectorateBorda, TwoStage) {
    // eus: A wins both tasks; ces: B wins one task, ties the other
    TaskScores s = {{"A", {{"eus", {{"t1", 0.9}, {"t2", 0.8}}}, {"ces", {{"t3", 0.1}, {"t4", 0.5}}}}},
                    {"B", {{"eus", {{"t1", 0.1}, {"t2", 0.2}}}, {"ces", {{"t3", 0.6}, {"t4", 0.5}}}}}};
    const auto totals = task_electorate_borda(s);
    EXPECT_EQ(totals.at("A"), 1.0);
    EXPECT_EQ(totals.at("B"), 1.0);
}

TEST(PromptAggregate, MaxOverPrompts) {
    std::vector<EvalRecord> recs = {{"m", "t", "p0", 1, 0.2}, {"m", "t", "p1", 1, 0.5}, {"m", "t", "p0", 2, 0.7}};
    EvalGrid grid(recs, one_task());
    const auto agg = prompt_aggregate(grid);
    const auto& s = agg.at({"m", "t"});
    ASSERT_EQ(s.size(), 2u);
    EXPECT_EQ(s[0], (std::pair<std::uint64_t, double>{1, 0.5}));
    EXPECT_EQ(s[1], (std::pair<std::uint64_t, double>{2, 0.7}));
}

TEST(EvalGrid, Validation) {
    std::vector<EvalRecord> nan = {{"m", "t", "p", 1, std::numeric_limits<double>::quiet_NaN()}};
    EXPECT_THROW(EvalGrid(nan, one_task()), ContractError);
    std::vector<EvalRecord> ok = {{"m", "t", "p", 1, 0.5}};
    EXPECT_THROW(EvalGrid(ok, one_task(1.0, 1.0)), ContractError);
    std::vector<EvalRecord> unknown = {{"m", "x", "p", 1, 0.5}};
    EXPECT_THROW(EvalGrid(unknown, one_task()), ContractError);
    std::vector<EvalRecord> dup = {{"m", "t", "p", 1, 0.5}, {"m", "t", "p", 1, 0.6}};
    EXPECT_THROW(EvalGrid(dup, one_task()), ContractError);
}

TEST(SelectTasks, PerfectSignal) {
    const auto recs = series("m", "t", {0.3, 0.4, 0.5, 0.6, 0.7});
    const auto report = select_tasks(EvalGrid(recs, one_task()));
    const auto& sel = report.at("t");
    EXPECT_EQ(sel.criteria.size(), 7u);
    EXPECT_EQ(sel.criteria.at(Criterion::monotonicity).value, 1.0);
    EXPECT_EQ(sel.criteria.at(Criterion::prompt_lottery).value, 0.0);
    EXPECT_FALSE(sel.criteria.at(Criterion::ranking_consistency).applicable);
    EXPECT_NEAR(sel.criteria.at(Criterion::stable_pretraining).value, 0.0, 1e-9);
    EXPECT_DOUBLE_EQ(sel.criteria.at(Criterion::non_randomness).value, (0.7 - 0.25) / 0.75);
    EXPECT_TRUE(sel.selected);
}

TEST(SelectTasks, MonotonicityExactlyPlusMinusOne) {
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> step(1e-6, 0.1);
    for (int round = 0; round < 200; ++round) {
        const std::size_t n = 3 + rng() % 10;
        std::vector<double> up(n), down(n);
        up[0] = 0.3;
        for (std::size_t i = 1; i < n; ++i) up[i] = up[i - 1] + step(rng);
        for (std::size_t i = 0; i < n; ++i) down[i] = up[n - 1 - i];
        auto recs = series("a", "t", up);
        const auto more = series("b", "t", up);
        recs.insert(recs.end(), more.begin(), more.end());
        EXPECT_EQ(select_tasks(EvalGrid(recs, one_task())).at("t").criteria.at(Criterion::monotonicity).value, 1.0);
        const auto falling = series("a", "t", down);
        EXPECT_EQ(select_tasks(EvalGrid(falling, one_task())).at("t").criteria.at(Criterion::monotonicity).value, -1.0);
    }
}

TEST(SelectTasks, RandomLevelFails) {
    const auto recs = series("m", "t", {0.25, 0.25, 0.25});
    const auto sel = select_tasks(EvalGrid(recs, one_task())).at("t");
    EXPECT_EQ(sel.criteria.at(Criterion::non_randomness).value, 0.0);
    EXPECT_FALSE(sel.criteria.at(Criterion::non_randomness).pass);
    EXPECT_FALSE(sel.selected);
}

TEST(SelectTasks, TooFewCheckpoints) {
    EXPECT_THROW(select_tasks(EvalGrid(series("m", "t", {0.3, 0.4}), one_task())), ContractError);
}

TEST(SelectTasks, PromptStatistics) {
    // final checkpoint prompts {0.2, 0.4, 0.9}: MAD = 0.2; argmax moves p1 -> p1 -> p2
    std::vector<EvalRecord> recs;
    const std::vector<std::vector<double>> by_checkpoint = {{0.1, 0.3, 0.2}, {0.2, 0.5, 0.3}, {0.2, 0.4, 0.9}};
    for (std::size_t c = 0; c < 3; ++c) {
        for (std::size_t p = 0; p < 3; ++p) recs.push_back({"m", "t", "p" + std::to_string(p), c + 1, by_checkpoint[c][p]});
    }
    const auto sel = select_tasks(EvalGrid(recs, one_task(0.0, 1.0))).at("t");
    EXPECT_NEAR(sel.criteria.at(Criterion::low_prompt_sensitivity).value, 0.2, 1e-12);
    EXPECT_DOUBLE_EQ(sel.criteria.at(Criterion::prompt_lottery).value, 0.5);
    const double mean = 0.5, sd = std::sqrt(((0.2 - mean) * (0.2 - mean) + (0.4 - mean) * (0.4 - mean) + (0.9 - mean) * (0.9 - mean)) / 3);
    EXPECT_NEAR(sel.criteria.at(Criterion::low_noise).value, 0.9 / sd, 1e-12);
}

TEST(SelectTasks, RankingConsistencyModes) {
    // models swap order once between checkpoints 2 and 3
    auto recs = series("a", "t", {0.3, 0.5, 0.6, 0.8});
    const auto b = series("b", "t", {0.2, 0.4, 0.7, 0.9});
    const auto c = series("c", "t", {0.1, 0.2, 0.3, 0.4});
    recs.insert(recs.end(), b.begin(), b.end());
    recs.insert(recs.end(), c.begin(), c.end());
    EvalGrid grid(recs, one_task(0.0, 1.0));
    SelectionThresholds consecutive;
    const double v = select_tasks(grid, consecutive).at("t").criteria.at(Criterion::ranking_consistency).value;
    EXPECT_NEAR(v, (1.0 + 1.0 / 3.0 + 1.0) / 3.0, 1e-12);
    SelectionThresholds final_mode;
    final_mode.ranking_mode = RankingMode::against_final;
    const double f = select_tasks(grid, final_mode).at("t").criteria.at(Criterion::ranking_consistency).value;
    EXPECT_NEAR(f, (1.0 / 3.0 + 1.0 / 3.0 + 1.0) / 3.0, 1e-12);
}

TEST(SelectTasks, UnsetThresholdsPass) {
    const auto recs = series("m", "t", {0.9, 0.3, 0.8, 0.2});
    SelectionThresholds none;
    none.limits.clear();
    const auto sel = select_tasks(EvalGrid(recs, one_task()), none).at("t");
    EXPECT_TRUE(sel.selected);
    for (const auto& [c, r] : sel.criteria) EXPECT_FALSE(r.threshold) << to_string(c);
}

TEST(Aggregate, ReportRoundTripsThroughReaders) {
    refinery::testing::TempDir dir("eval");
    refinery::testing::write_bytes(dir / "grid.csv",
                                   "model,task,prompt,checkpoint_tokens,score\n"
                                   "A,t1,p0,1000,0.30\nA,t1,p0,2000,0.50\nA,t1,p0,3000,0.70\n"
                                   "B,t1,p0,1000,0.28\nB,t1,p0,2000,0.40\nB,t1,p0,3000,0.45\n"
                                   "A,t2,\"p,0\",1000,0.30\nA,t2,\"p,0\",2000,0.30\nA,t2,\"p,0\",3000,0.30\n"
                                   "B,t2,\"p,0\",1000,0.30\nB,t2,\"p,0\",2000,0.30\nB,t2,\"p,0\",3000,0.30\n");
    refinery::testing::write_bytes(dir / "tasks.json",
                                   R"({"t1": {"random_baseline": 0.25, "max_score": 1, "category": "qa", "language": "eus_Latn"},
                                       "t2": {"random_baseline": 0.3, "max_score": 1, "category": "nli", "language": "ces_Latn"}})");
    const auto recs = read_eval_records(dir / "grid.csv");
    ASSERT_EQ(recs.size(), 12u);
    EXPECT_EQ(recs[6].prompt, "p,0");
    EvalGrid grid(recs, read_task_info(dir / "tasks.json"));
    const auto report = aggregate_evaluation(grid, SelectionThresholds{});
    EXPECT_TRUE(report.selection.at("t1").selected);
    EXPECT_FALSE(report.selection.at("t2").selected);
    EXPECT_EQ(report.excluded_languages, std::vector<std::string>{"ces_Latn"});
    ASSERT_TRUE(report.multilingual);
    EXPECT_EQ(report.multilingual->by_borda.front(), "A");
    const Json j = to_json(report);
    EXPECT_TRUE(j.contains("task_selection"));
    // zero-spread low_noise is infinite; JSON carries null with a note
    const auto& noise = j["task_selection"]["t1"]["criteria"]["low_noise"];
    EXPECT_TRUE(noise["value"].is_null());
    EXPECT_TRUE(noise.contains("value_note"));
    EXPECT_FALSE(render_ranking_table(report).empty());
}

TEST(Csv, Quoting) {
    EXPECT_EQ(split_csv_line(R"(a,"b ""q"", c",,d)"), (std::vector<std::string>{"a", "b \"q\", c", "", "d"}));
}
