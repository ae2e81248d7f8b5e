#include <cstdlib>
#include <random>

#include <gtest/gtest.h>
#include <sys/wait.h>

#include "refinery/errors.hpp"
#include "refinery/io.hpp"
#include "refinery/pipeline.hpp"
#include "support/fixtures.hpp"

using namespace refinery;
using refinery::testing::kLidSeeds;
using refinery::testing::make_doc;
using refinery::testing::pipeline_corpus;
using refinery::testing::read_bytes;
using refinery::testing::TempDir;
using refinery::testing::tree_bytes;
using refinery::testing::write_bytes;

namespace {

PipelineConfig config_for(const TempDir& dir, const Json& overrides = Json::object()) {
    Json j = {{"language", "eus_Latn"}, {"output", "out"}, {"lid", {{"seeds", "seeds.json"}}}};
    j.update(overrides);
    write_bytes(dir / "seeds.json", kLidSeeds);
    return parse_config(j, dir.path());
}

int run_cli(const std::string& args) {
    const std::string cmd = std::string(REFINERY_CLI_PATH) + " " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST(Config, ParsesAndResolvesPaths) {
    TempDir dir("cfg");
    const auto cfg = config_for(dir, {{"input", {"a.jsonl", "/abs/b.jsonl"}},
                                      {"workers", 3},
                                      {"dedup", {{"bands", 16}, {"rows", 16}, {"mode", "per_crawl"}}},
                                      {"wds", {{"thresholds", {{"digit_ratio", 0.1}}}, {"min_level", 5}}},
                                      {"eval", {{"thresholds", {{"low_noise", 2.0}, {"monotonicity", nullptr}}}}}});
    ASSERT_EQ(cfg.inputs.size(), 2u);
    EXPECT_EQ(cfg.inputs[0], dir.path() / "a.jsonl");
    EXPECT_EQ(cfg.inputs[1], "/abs/b.jsonl");
    EXPECT_EQ(cfg.output_root, dir.path() / "out");
    EXPECT_EQ(cfg.workers, 3u);
    EXPECT_EQ(cfg.dedup.bands, 16u);
    EXPECT_EQ(cfg.dedup.mode, DedupMode::per_crawl);
    EXPECT_EQ(cfg.wds.digit_ratio.threshold, 0.1);
    EXPECT_EQ(cfg.wds.digit_ratio.weight, 0.5);
    EXPECT_EQ(cfg.wds.min_level, 5);
    EXPECT_EQ(cfg.eval.thresholds.limits.at(Criterion::low_noise), 2.0);
    EXPECT_FALSE(cfg.eval.thresholds.limits.count(Criterion::monotonicity));
}

TEST(Config, NullMeansUnset) {
    TempDir dir("cfg");
    const auto cfg = parse_config(Json{{"lid", {{"command", nullptr}}}, {"wds", {{"min_level", nullptr}}}}, dir.path());
    EXPECT_FALSE(cfg.lid.command);
    EXPECT_FALSE(cfg.wds.min_level);
}

TEST(Config, FieldDiagnostics) {
    TempDir dir("cfg");
    const std::vector<std::pair<Json, std::string>> bad = {
        {{{"dedup", {{"bands", 7}}}}, "dedup.bands"},
        {{{"dedup", {{"shingle", 5}}}}, "dedup.shingle"},
        {{{"wds", {{"thresholds", {{"digits", 1}}}}}}, "wds.thresholds.digits"},
        {{{"packaging", {{"compression_level", 40}}}}, "packaging.compression_level"},
        {{{"workers", 0}}, "workers"},
        {{{"lid", {{"min_confidence", 2}}}}, "lid.min_confidence"},
        {{{"eval", {{"ranking_mode", "sideways"}}}}, "eval.ranking_mode"},
        {{{"typo", 1}}, "typo"},
    };
    for (const auto& [overrides, field] : bad) {
        try {
            config_for(dir, overrides);
            ADD_FAILURE() << "accepted " << overrides.dump();
        } catch (const ConfigError& e) {
            EXPECT_NE(std::string(e.what()).find(field), std::string::npos) << e.what();
        }
    }
}

TEST(Config, MissingPathsRejectedAtLoad) {
    TempDir dir("cfg");
    write_bytes(dir / "cfg.json", R"({"input": "missing.jsonl", "language": "eus_Latn"})");
    try {
        load_config(dir / "cfg.json");
        FAIL();
    } catch (const ConfigError& e) {
        EXPECT_NE(std::string(e.what()).find("missing.jsonl"), std::string::npos);
    }
    EXPECT_THROW(load_config(dir / "nope.json"), ConfigError);
    write_bytes(dir / "broken.json", "{");
    EXPECT_THROW(load_config(dir / "broken.json"), ConfigError);
}

TEST(Stages, ScorePassThrough) {
    TempDir dir("stage");
    auto cfg = config_for(dir);
    std::vector<Document> docs = {make_doc("a", "kaixo mundua\netxea"), make_doc("b", "gaur goizean"),
                                  make_doc("c", "zer moduz zaude")};
    for (auto& d : docs) d.seg_langs = std::vector<std::string>(count_segments(d.text), "eus_Latn");
    write_documents(dir / "in.jsonl", docs);
    const auto r = run_stage(Stage::score, cfg, {{dir / "in.jsonl"}, dir / "score"}, 1);
    EXPECT_EQ(r.report["counts"], Json({{"in", 3}, {"out", 3}}));
    const auto out = read_documents(dir / "score" / "documents.jsonl");
    ASSERT_EQ(out.size(), 3u);
    for (const auto& d : out) {
        EXPECT_TRUE(d.wds);
        EXPECT_TRUE(d.wds_subsignals);
    }
    EXPECT_TRUE(std::filesystem::exists(dir / "score" / "report.json"));
    EXPECT_TRUE(std::filesystem::exists(dir / "score" / "timing.json"));
}

TEST(Stages, DedupOnePair) {
    TempDir dir("stage");
    auto cfg = config_for(dir);
    const std::string text = "one two three four five six seven eight nine ten eleven";
    write_documents(dir / "in.jsonl", {make_doc("a", text), make_doc("b", text), make_doc("c", "something else entirely here ok")});
    const auto r = run_stage(Stage::dedup, cfg, {{dir / "in.jsonl"}, dir / "dedup"}, 2);
    EXPECT_EQ(r.report["removals"]["duplicate"], 1);
    EXPECT_EQ(r.report["counts"], Json({{"in", 3}, {"out", 2}}));
    const auto log = read_bytes(dir / "dedup" / "removal_log.jsonl");
    EXPECT_EQ(log, "{\"id\":\"b\",\"representative_id\":\"a\",\"estimated_jaccard\":1.0}\n");
}

TEST(Stages, LidRejectsOtherLanguages) {
    TempDir dir("stage");
    auto cfg = config_for(dir);
    write_documents(dir / "in.jsonl", {make_doc("a", "kaixo mundua\netxea mendia", "und"),
                                       make_doc("b", "hola mundo\nla casa", "und")});
    const auto r = run_stage(Stage::lid, cfg, {{dir / "in.jsonl"}, dir / "lid"}, 1);
    EXPECT_EQ(r.report["removals"]["lid_rejected"], 1);
    const auto kept = read_documents(dir / "lid" / "documents.jsonl");
    ASSERT_EQ(kept.size(), 1u);
    EXPECT_EQ(kept[0].lang, "eus_Latn");
    EXPECT_EQ(kept[0].seg_langs->size(), 2u);
    const auto removed = read_documents(dir / "lid" / "removed.jsonl");
    ASSERT_EQ(removed.size(), 1u);
    EXPECT_EQ(removed[0].lang, "spa_Latn");
    EXPECT_EQ(removed[0].removed_reason, RemovedReason::lid_rejected);
}

TEST(Stages, ScoreNeedsProfilesOrClassifier) {
    TempDir dir("stage");
    auto cfg = parse_config(Json{{"language", "eus_Latn"}}, dir.path());
    write_documents(dir / "in.jsonl", {make_doc("a", "kaixo")});
    EXPECT_THROW(run_stage(Stage::score, cfg, {{dir / "in.jsonl"}, dir / "score"}, 1), ConfigError);
}

TEST(Stages, AllEqualsChainedStages) {
    TempDir dir("stage");
    auto cfg = config_for(dir, {{"packaging", {{"max_shard_bytes", 4096}}}});
    write_documents(dir / "in.jsonl", pipeline_corpus(120, 3));
    run_stage(Stage::all, cfg, {{dir / "in.jsonl"}, dir / "all"}, 3);

    std::filesystem::path input = dir / "in.jsonl";
    for (Stage s : {Stage::lid, Stage::dedup, Stage::score, Stage::package, Stage::analyze}) {
        const auto out = dir / "chain" / std::string(to_string(s));
        run_stage(s, cfg, {{input}, out}, 1);
        if (s != Stage::package && s != Stage::analyze) input = out / "documents.jsonl";
    }
    auto all = tree_bytes(dir / "all");
    const auto chained = tree_bytes(dir / "chain");
    ASSERT_TRUE(all.erase("report.json"));
    EXPECT_EQ(all, chained);
    EXPECT_TRUE(all.count("package/eus_Latn/manifest.json"));
}

TEST(Stages, RerunIsDeterministic) {
    TempDir dir("stage");
    auto cfg = config_for(dir, {{"packaging", {{"max_shard_bytes", 2048}}}});
    write_documents(dir / "in.jsonl", pipeline_corpus(80, 9));
    run_stage(Stage::all, cfg, {{dir / "in.jsonl"}, dir / "one"}, 1);
    run_stage(Stage::all, cfg, {{dir / "in.jsonl"}, dir / "two"}, 4);
    EXPECT_EQ(tree_bytes(dir / "one"), tree_bytes(dir / "two"));
    run_stage(Stage::all, cfg, {{dir / "in.jsonl"}, dir / "one"}, 2);
    EXPECT_EQ(tree_bytes(dir / "one"), tree_bytes(dir / "two"));
}

TEST(Stages, EvalAgg) {
    TempDir dir("stage");
    write_bytes(dir / "grid.jsonl",
                "{\"model\":\"A\",\"task\":\"t\",\"prompt\":\"p\",\"checkpoint_tokens\":1,\"score\":0.4}\n"
                "{\"model\":\"A\",\"task\":\"t\",\"prompt\":\"p\",\"checkpoint_tokens\":2,\"score\":0.5}\n"
                "{\"model\":\"A\",\"task\":\"t\",\"prompt\":\"p\",\"checkpoint_tokens\":3,\"score\":0.6}\n"
                "{\"model\":\"B\",\"task\":\"t\",\"prompt\":\"p\",\"checkpoint_tokens\":1,\"score\":0.3}\n"
                "{\"model\":\"B\",\"task\":\"t\",\"prompt\":\"p\",\"checkpoint_tokens\":2,\"score\":0.35}\n"
                "{\"model\":\"B\",\"task\":\"t\",\"prompt\":\"p\",\"checkpoint_tokens\":3,\"score\":0.5}\n");
    write_bytes(dir / "tasks.jsonl",
                "{\"task\":\"t\",\"random_baseline\":0.25,\"max_score\":1,\"category\":\"qa\",\"language\":\"eus_Latn\"}\n");
    auto cfg = config_for(dir, {{"eval", {{"grid", "grid.jsonl"}, {"tasks", "tasks.jsonl"}}}});
    const auto r = run_stage(Stage::eval_agg, cfg, {{}, dir / "eval"}, 1);
    EXPECT_EQ(r.report["selected_tasks"], 1);
    const auto report = read_json_file(dir / "eval" / "eval_report.json");
    EXPECT_EQ(report["multilingual"]["ranking"]["borda"][0], "A");
    EXPECT_FALSE(read_bytes(dir / "eval" / "ranking.txt").empty());
}

TEST(Cli, RunsStagesAndReportsConfigErrors) {
    TempDir dir("cli");
    write_bytes(dir / "seeds.json", kLidSeeds);
    write_documents(dir / "in.jsonl", pipeline_corpus(30, 4));
    write_bytes(dir / "cfg.json", R"({"input": "in.jsonl", "output": "out", "language": "eus_Latn",
                                      "lid": {"seeds": "seeds.json"}})");
    EXPECT_EQ(run_cli("lid --config " + (dir / "cfg.json").string()), 0);
    EXPECT_TRUE(std::filesystem::exists(dir / "out" / "lid" / "documents.jsonl"));
    EXPECT_EQ(run_cli("dedup --config " + (dir / "cfg.json").string() + " --input " +
                      (dir / "out" / "lid" / "documents.jsonl").string() + " --output " + (dir / "d").string() +
                      " --workers 2"),
              0);
    EXPECT_TRUE(std::filesystem::exists(dir / "d" / "removal_log.jsonl"));

    write_bytes(dir / "bad.json", R"({"input": "in.jsonl", "dedup": {"bands": 5}})");
    EXPECT_EQ(run_cli("dedup --config " + (dir / "bad.json").string()), 2);
    EXPECT_NE(run_cli("nonsense --config " + (dir / "cfg.json").string()), 0);
    EXPECT_NE(run_cli("dedup"), 0);
}
