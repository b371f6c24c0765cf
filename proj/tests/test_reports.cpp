#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "automode/pipeline.hpp"
#include "automode/synth.hpp"

using namespace automode;

namespace {

RunConfig quick_config() {
    RunConfig cfg;
    cfg.seed = 3;
    cfg.hyperparams.n_rounds = 15;
    cfg.hyperparams.max_depth = 3;
    return cfg;
}

struct Small {
    Dataset train, test;
};

const Small& small() {
    static const Small s = [] {
        const Dataset all = synthesize_dataset(benchmark_generator(1.0, 900), 17);
        std::vector<std::size_t> a, b;
        for (std::size_t i = 0; i < all.size(); ++i) (i < 700 ? a : b).push_back(i);
        return Small{all.subset(a), all.subset(b)};
    }();
    return s;
}

}  // namespace

TEST(Config, DefaultsFromEmptyObject) {
    const RunConfig c = run_config_from_json(json::object());
    EXPECT_EQ(c.threshold, kDefaultThreshold);
    EXPECT_TRUE(c.sample_weights);
    EXPECT_FALSE(c.hpo.enabled);
    EXPECT_EQ(c.ablation.size(), 4u);
}

TEST(Config, ParsesEverySection) {
    const json j = json::parse(R"({
        "seed": 11,
        "paths": {"dataset": "data/all.jsonl", "model": "/abs/router.json"},
        "split": [0.8, 0.1, 0.1],
        "pivot": "A",
        "features": {"qe": false},
        "weighting": {"sample_weights": false, "epsilon": 0.05},
        "rescoring": {"mode": "all-fired", "qe_cost_rate": 0.2},
        "threshold": 0.6,
        "hyperparams": {"n_rounds": 7},
        "hpo": {"enabled": true, "budget": 30, "budget_mode": "seconds", "folds": 3, "objective": "per-pair"},
        "ablation": [["qe"], ["audio", "asr", "qe"]]
    })");
    const RunConfig c = run_config_from_json(j, "/etc/run");
    EXPECT_EQ(c.seed, 11u);
    EXPECT_EQ(c.resolve(c.paths.dataset), "/etc/run/data/all.jsonl");
    EXPECT_EQ(c.resolve(c.paths.model), "/abs/router.json");
    EXPECT_EQ(c.split[0], 0.8);
    EXPECT_FALSE(c.features.qe);
    EXPECT_FALSE(c.sample_weights);
    EXPECT_EQ(c.weighting.floor, 0.05);
    EXPECT_EQ(c.rescoring.mode, RescoreMode::AllFired);
    EXPECT_EQ(c.hyperparams.n_rounds, 7);
    EXPECT_EQ(c.hpo.budget.mode, Budget::Mode::Seconds);
    EXPECT_EQ(c.hpo.objective, HpoObjective::PerPair);
    ASSERT_EQ(c.ablation.size(), 2u);
    EXPECT_EQ(c.ablation[0].name, "QE");
    EXPECT_EQ(c.ablation[1].name, "Audio + ASR + QE (all)");
}

TEST(Config, RejectsBadValues) {
    EXPECT_THROW(run_config_from_json(json::parse(R"({"threshold": 1.5})")), InvalidArgument);
    EXPECT_THROW(run_config_from_json(json::parse(R"({"hpo": {"folds": 1}})")), InvalidArgument);
    EXPECT_THROW(run_config_from_json(json::parse(R"({"hpo": {"budget_mode": "weeks"}})")), InvalidArgument);
    EXPECT_THROW(run_config_from_json(json::parse(R"({"ablation": [["video"]]})")), InvalidArgument);
    EXPECT_THROW(run_config_from_json(json::parse(R"({"rescoring": {"mode": "maybe"}})")), InvalidArgument);
    EXPECT_THROW(run_config_from_json(json::parse(R"({"seed": "x"})")), ParseError);
    EXPECT_THROW(run_config_from_json(json::parse("[1]")), ParseError);
    EXPECT_THROW(load_run_config("/nonexistent/automode.json"), InvalidArgument);
}

TEST(Config, LoadResolvesAgainstFileDirectory) {
    const auto dir = std::filesystem::temp_directory_path() / "automode_cfg_test";
    std::filesystem::create_directories(dir);
    std::ofstream(dir / "run.json") << R"({"paths": {"dataset": "d.jsonl"}})";
    const RunConfig c = load_run_config((dir / "run.json").string());
    EXPECT_EQ(c.resolve(c.paths.dataset), (dir / "d.jsonl").lexically_normal().string());
    std::ofstream(dir / "bad.json") << "{oops";
    EXPECT_THROW(load_run_config((dir / "bad.json").string()), ParseError);
    std::filesystem::remove_all(dir);
}

TEST(Config, ProfilesAndPivotOverride) {
    Dataset ds = small().test;
    RunConfig cfg;
    cfg.systems = {{"A", 2.0, 0.3, false}};
    cfg.pivot = "A";
    apply_profiles(ds, cfg);
    EXPECT_EQ(ds.pivot().id, "A");
    const auto& r = ds.records[0];
    EXPECT_DOUBLE_EQ(r.outcome("A").cost, 2.0 * r.duration);
    RunConfig unknown;
    unknown.pivot = "Z";
    EXPECT_THROW(apply_profiles(ds, unknown), InvalidArgument);
}

TEST(Pipeline, TrainEvaluateLabels) {
    RunConfig cfg = quick_config();
    cfg.rescoring.mode = RescoreMode::PivotVsSelected;
    const auto trained = run_train(cfg, small().train, small().test);
    EXPECT_EQ(variant_label(trained.router), "+ Sample weights");
    EXPECT_EQ(trained.router.metadata().at("seed"), 3);
    EXPECT_FALSE(trained.hpo.has_value());
    EXPECT_NO_THROW(trained.pairs.row("+ Sample weights"));

    RunConfig plain_cfg = cfg;
    plain_cfg.sample_weights = false;
    const auto plain = run_train(plain_cfg, small().train, {});
    EXPECT_EQ(variant_label(plain.router), "AutoMode-ASR");
    EXPECT_TRUE(plain.pairs.rows.empty());

    const PolicyTable t = run_evaluate(cfg, {&plain.router, &trained.router}, small().test);
    std::vector<std::string> names;
    for (const auto& r : t.rows) names.push_back(r.name);
    EXPECT_EQ(names, (std::vector<std::string>{"Single-best", "Pivot only", "A only", "B only", "C only",
                                               "AutoMode-ASR", "+ Sample weights", "+ QE rescoring", "Oracle"}));
    EXPECT_DOUBLE_EQ(t.row("Single-best").report.cost_pct, 100.0);
    EXPECT_DOUBLE_EQ(t.row("Oracle").report.weighted_f1, 1.0);
    for (const auto& r : t.rows) EXPECT_GE(r.report.corpus_wer, t.row("Oracle").report.corpus_wer);

    const std::string text = format_policy_table(t);
    EXPECT_NE(text.find("+ QE rescoring"), std::string::npos);
    EXPECT_EQ(policy_table_to_json(t).at("kind"), "automode.evaluation_report");
}

TEST(Pipeline, DuplicateVariantsGetNumbered) {
    const auto trained = run_train(quick_config(), small().train, {});
    const PolicyTable t = run_evaluate(quick_config(), {&trained.router, &trained.router}, small().test);
    EXPECT_NO_THROW(t.row("+ Sample weights #2"));
}

TEST(Pipeline, AblationRowsFollowConfig) {
    RunConfig cfg = quick_config();
    cfg.rescoring.mode = RescoreMode::PivotVsSelected;
    const auto out = run_ablate(cfg, small().train, small().test);
    ASSERT_EQ(out.rows.size(), 5u);
    EXPECT_EQ(out.rows[0].name, "Audio + ASR");
    EXPECT_EQ(out.rows[3].name, "Audio + ASR + QE (all)");
    EXPECT_EQ(out.rows[4].name, "+ QE rescoring");
    EXPECT_NE(out.rows[0].schema_hash, out.rows[3].schema_hash);
    const std::string text = format_ablation_table(out.rows);
    EXPECT_NE(text.find("Feature Groups"), std::string::npos);
    EXPECT_THROW(run_ablate(cfg, small().train, Dataset{}), InvalidArgument);
}

TEST(Pipeline, AddSystemMatchesFullRetrain) {
    const auto full = run_train(quick_config(), small().train, {}).router;
    const RouterModel without = remove_system(full, "C");
    const RouterModel back = run_add_system(without, small().train, "C");
    EXPECT_EQ(router_to_json(back).at("classifiers"), router_to_json(full).at("classifiers"));
    EXPECT_THROW(run_add_system(full, small().train, "C"), InvalidArgument);
    EXPECT_THROW(run_add_system(without, small().train, "Z"), InvalidArgument);
}

TEST(Importance, ReportSumsAndFormats) {
    const auto router = run_train(quick_config(), small().train, {}).router;
    const ImportanceReport rep = importance_report(router);
    double features = 0.0, groups = 0.0;
    for (const auto& f : rep.features) features += f.value;
    for (const auto& g : rep.groups) groups += g.value;
    EXPECT_NEAR(features, 1.0, 1e-9);
    EXPECT_NEAR(groups, 1.0, 1e-9);
    for (std::size_t i = 1; i < rep.features.size(); ++i) EXPECT_GE(rep.features[i - 1].value, rep.features[i].value);
    const std::string text = format_importance(rep, 5);
    EXPECT_NE(text.find("Feature groups"), std::string::npos);
    EXPECT_NE(text.find(std::string(40, '#')), std::string::npos);
    const std::string csv = importance_csv(rep);
    EXPECT_EQ(csv.rfind("level,name,group,importance\n", 0), 0u);
    EXPECT_EQ(importance_to_json(rep).at("groups").size(), rep.groups.size());
}

TEST(Compatibility, DimensionMismatchIsReported) {
    const auto router = run_train(quick_config(), small().train, {}).router;
    Dataset other = synthesize_dataset(benchmark_generator(1.0, 20), 1);
    for (auto& r : other.records) r.features.audio_embedding.push_back(0.0);
    ++other.schema.dims.audio_embedding;
    EXPECT_THROW(check_compatible(router, other), SchemaError);
}
