// refinery: command line front end for the corpus pipeline stages.
#include <cstdlib>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <spdlog/cfg/helpers.h>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "refinery/errors.hpp"
#include "refinery/pipeline.hpp"

namespace {

void setup_logging() {
    auto logger = spdlog::stderr_color_mt("refinery");
    spdlog::set_default_logger(logger);
    spdlog::set_level(spdlog::level::warn);
    if (const char* env = std::getenv("REFINERY_LOG")) spdlog::cfg::helpers::load_levels(env);
}

}  // namespace

int main(int argc, char** argv) {
    setup_logging();

    CLI::App app{"Corpus refinement pipeline: lid, dedup, score, package, analyze, eval-agg"};
    app.require_subcommand(1, 1);

    struct Options {
        std::string config;
        unsigned workers = 0;
        std::vector<std::string> inputs;
        std::string output;
    };
    std::vector<std::pair<refinery::Stage, Options>> stages;
    stages.reserve(7);

    const std::vector<std::pair<std::string, std::string>> names = {
        {"lid", "language identification and segment profiles"},
        {"dedup", "MinHash/LSH near-duplicate removal"},
        {"score", "WDS quality scoring"},
        {"package", "bin by WDS level and write zstd shards"},
        {"analyze", "corpus analytics report"},
        {"eval-agg", "evaluation grid aggregation and task selection"},
        {"all", "lid, dedup, score, package and analyze in sequence"},
    };
    std::vector<CLI::App*> subs;
    for (const auto& [name, help] : names) {
        stages.emplace_back(*refinery::parse_stage(name), Options{});
        auto& opts = stages.back().second;
        auto* sub = app.add_subcommand(name, help);
        sub->add_option("-c,--config", opts.config, "pipeline config (JSON)")->required();
        sub->add_option("-w,--workers", opts.workers, "worker threads (overrides config)");
        sub->add_option("-i,--input", opts.inputs, "input files (override config)");
        sub->add_option("-o,--output", opts.output, "output directory (default <output>/<stage>)");
        subs.push_back(sub);
    }

    CLI11_PARSE(app, argc, argv);

    for (std::size_t i = 0; i < subs.size(); ++i) {
        if (!subs[i]->parsed()) continue;
        const auto stage = stages[i].first;
        const auto& opts = stages[i].second;
        try {
            const auto config = refinery::load_config(opts.config);
            auto io = refinery::default_io(stage, config);
            if (!opts.inputs.empty()) io.inputs.assign(opts.inputs.begin(), opts.inputs.end());
            if (!opts.output.empty()) io.output = opts.output;
            const unsigned workers = opts.workers ? opts.workers : config.workers;
            const auto result = refinery::run_stage(stage, config, io, workers);
            std::cout << result.report.dump(2) << "\n";
            return EXIT_SUCCESS;
        } catch (const refinery::ConfigError& e) {
            std::cerr << "config error: " << e.what() << "\n";
            return 2;
        } catch (const std::exception& e) {
            std::cerr << "error: " << e.what() << "\n";
            return 1;
        }
    }
    return EXIT_FAILURE;
}
