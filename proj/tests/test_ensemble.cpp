#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "automode/ensemble.hpp"

using namespace automode;

namespace {

const std::vector<SystemProfile> kSystems = {
    {"P", 0.1, 0.05, true}, {"A", 1.0, 0.3, false}, {"B", 1.2, 0.35, false}, {"C", 4.0, 1.0, false}};

FeatureSchema one_column_schema() {
    FeatureDims d;
    d.qe_score = true;
    FeatureToggles t;
    t.language = false;
    return FeatureSchema::from_dims(d, {}, t);
}

// Tree-less classifier with a fixed probability.
BinaryClassifier fixed(const std::string& id, double p) {
    BinaryClassifier c;
    c.challenger_id = id;
    c.pivot_id = "P";
    c.schema_hash = one_column_schema().hash();
    c.n_features = 1;
    c.base_logit = std::log(p / (1.0 - p));
    return c;
}

RouterModel router(double pa, double pb, double pc) {
    return RouterModel(kSystems, one_column_schema(), {fixed("A", pa), fixed("B", pb), fixed("C", pc)});
}

}  // namespace

TEST(Select, HighestProbabilityAboveThreshold) {
    std::vector<std::string> fired;
    EXPECT_EQ(select_system({{"A", 0.7}, {"B", 0.6}, {"C", 0.2}}, kSystems, 0.5, &fired), "A");
    EXPECT_EQ(fired, (std::vector<std::string>{"A", "B"}));
    EXPECT_EQ(select_system({{"A", 0.4}, {"B", 0.3}, {"C", 0.1}}, kSystems, 0.5), "P");
}

TEST(Select, ThresholdIsStrict) {
    EXPECT_EQ(select_system({{"A", 0.5}, {"B", 0.5}}, kSystems, 0.5), "P");
}

TEST(Select, TiesGoToCheaperSystem) {
    EXPECT_EQ(select_system({{"A", 0.8}, {"B", 0.8}, {"C", 0.8}}, kSystems, 0.5), "A");
    const std::vector<SystemProfile> same_cost = {{"P", 0.1, 0, true}, {"Y", 1, 0, false}, {"X", 1, 0, false}};
    EXPECT_EQ(select_system({{"Y", 0.9}, {"X", 0.9}}, same_cost, 0.5), "X");
}

TEST(Decide, UsesEveryClassifier) {
    const auto r = router(0.2, 0.9, 0.6);
    const std::vector<double> x = {0.0};
    const Decision d = decide(r, x);
    EXPECT_EQ(d.chosen_id, "B");
    EXPECT_NEAR(d.probabilities.at("C"), 0.6, 1e-12);
    EXPECT_EQ(d.fired.size(), 2u);
    const std::vector<double> wide = {0.0, 1.0};
    EXPECT_THROW(decide(r, wide), SchemaError);
}

TEST(Rescore, QePrefersPivot) {
    const auto r = router(0.2, 0.9, 0.6);
    Decision d;
    d.segment_id = "s";
    d.chosen_id = "B";
    const std::map<std::string, std::string> text = {{"P", "good"}, {"B", "bad"}};
    const LookupEstimator qe({{"good", 0.9}, {"bad", 0.4}});
    const Decision out = rescore(d, text, qe, r);
    EXPECT_EQ(out.chosen_id, "P");
    EXPECT_TRUE(out.rescored);
    EXPECT_EQ(out.rescoring->pre_rescore_choice, "B");
    EXPECT_EQ(out.rescoring->compared, (std::vector<std::string>{"P", "B"}));
}

TEST(Rescore, QeConfirmsChallengerAndTiesGoToPivot) {
    const auto r = router(0.2, 0.9, 0.6);
    Decision d;
    d.chosen_id = "B";
    const std::map<std::string, std::string> text = {{"P", "p"}, {"B", "b"}};
    EXPECT_EQ(rescore(d, text, LookupEstimator({{"p", 0.3}, {"b", 0.8}}), r).chosen_id, "B");
    EXPECT_EQ(rescore(d, text, ConstantEstimator(0.5), r).chosen_id, "P");
}

TEST(Rescore, PivotDecisionsAndOffModeAreUntouched) {
    const auto r = router(0.2, 0.9, 0.6);
    Decision d;
    d.chosen_id = "P";
    const Decision a = rescore(d, {}, ConstantEstimator(0.0), r);
    EXPECT_FALSE(a.rescored);
    d.chosen_id = "A";
    EXPECT_FALSE(rescore(d, {}, ConstantEstimator(0.0), r, RescoreMode::Off).rescored);
    EXPECT_THROW(rescore(d, {{"P", "x"}}, ConstantEstimator(0.0), r), InvalidArgument);
}

TEST(Rescore, AllFiredComparesEveryFiringChallenger) {
    const auto r = router(0.2, 0.9, 0.6);
    Decision d;
    d.chosen_id = "B";
    d.fired = {"B", "C"};
    const std::map<std::string, std::string> text = {{"P", "p"}, {"B", "b"}, {"C", "c"}};
    const LookupEstimator qe({{"p", 0.1}, {"b", 0.2}, {"c", 0.7}});
    const Decision out = rescore(d, text, qe, r, RescoreMode::AllFired);
    EXPECT_EQ(out.chosen_id, "C");
    EXPECT_EQ(out.rescoring->compared.size(), 3u);
    EXPECT_EQ(rescore(d, text, qe, r, RescoreMode::PivotVsSelected).chosen_id, "B");
}

TEST(Rescore, OracleEstimatorUsesReference) {
    const OracleEstimator qe({"hello", "world"});
    EXPECT_EQ(qe.score("Hello world."), 0.0);
    EXPECT_EQ(qe.score("hello"), -0.5);
}

TEST(RescoreMode, Names) {
    for (auto m : {RescoreMode::Off, RescoreMode::PivotVsSelected, RescoreMode::AllFired})
        EXPECT_EQ(rescore_mode_from_string(to_string(m)), m);
    EXPECT_THROW(rescore_mode_from_string("sometimes"), InvalidArgument);
}

TEST(Router, ValidatesClassifiers) {
    EXPECT_THROW(RouterModel(kSystems, one_column_schema(), {fixed("A", 0.5), fixed("B", 0.5)}), SchemaError);
    auto wrong_pivot = fixed("C", 0.5);
    wrong_pivot.pivot_id = "A";
    EXPECT_THROW(RouterModel(kSystems, one_column_schema(), {fixed("A", 0.5), fixed("B", 0.5), wrong_pivot}),
                 SchemaError);
    auto wrong_hash = fixed("C", 0.5);
    wrong_hash.schema_hash = "0";
    EXPECT_THROW(RouterModel(kSystems, one_column_schema(), {fixed("A", 0.5), fixed("B", 0.5), wrong_hash}),
                 SchemaError);
}

TEST(Router, AddThenRemoveRoundTrips) {
    const RouterModel base(std::vector<SystemProfile>(kSystems.begin(), kSystems.end() - 1), one_column_schema(),
                           {fixed("A", 0.2), fixed("B", 0.9)});
    const RouterModel grown = add_system(base, kSystems[3], fixed("C", 0.95));
    EXPECT_EQ(grown.classifiers().size(), 3u);
    EXPECT_EQ(grown.classifiers()[0], base.classifiers()[0]);
    EXPECT_EQ(grown.classifiers()[1], base.classifiers()[1]);
    const std::vector<double> x = {0.0};
    EXPECT_EQ(decide(grown, x).chosen_id, "C");
    EXPECT_EQ(remove_system(grown, "C"), base);
    EXPECT_THROW(add_system(grown, kSystems[3], fixed("C", 0.5)), InvalidArgument);
    EXPECT_THROW(add_system(base, {"D", 1, 1, false}, fixed("C", 0.5)), InvalidArgument);
    EXPECT_THROW(remove_system(base, "P"), InvalidArgument);
    EXPECT_THROW(remove_system(base, "Q"), InvalidArgument);
}

TEST(Router, JsonRoundTrip) {
    RouterModel r = router(0.2, 0.9, 0.6);
    r.set_metadata({{"sample_weights", true}});
    const RouterModel back = router_from_json(json::parse(serialize_router(r)));
    EXPECT_EQ(back, r);
    EXPECT_EQ(serialize_router(back), serialize_router(r));
}

TEST(Router, RejectsBadDocuments) {
    const json j = router_to_json(router(0.2, 0.9, 0.6));
    json v = j;
    v["format_version"] = 7;
    EXPECT_THROW(router_from_json(v), VersionError);
    json h = j;
    h["schema_hash"] = "ffff";
    EXPECT_THROW(router_from_json(h), SchemaError);
    json k = j;
    k["kind"] = "automode.dataset";
    EXPECT_THROW(router_from_json(k), ParseError);
    json missing = j;
    missing.erase("systems");
    EXPECT_THROW(router_from_json(missing), ParseError);
}

TEST(Decisions, FileRoundTrip) {
    const auto r = router(0.2, 0.9, 0.6);
    Decision a;
    a.segment_id = "a";
    a.chosen_id = "P";
    a.probabilities = {{"A", 0.1}};
    Decision b = a;
    b.segment_id = "b";
    b.chosen_id = "B";
    b.rescored = true;
    b.rescoring = RescoreDetail{{"P", "A"}, {{"P", 0.2}, {"A", 0.8}}, "A"};
    std::stringstream io;
    write_decisions(io, {a, b}, r);
    const auto back = read_decisions(io);
    ASSERT_EQ(back.size(), 2u);
    EXPECT_EQ(back[0].chosen_id, "P");
    EXPECT_FALSE(back[0].rescoring.has_value());
    EXPECT_EQ(back[1].rescoring->pre_rescore_choice, "A");
    EXPECT_EQ(back[1].rescoring->qe_scores.at("A"), 0.8);
    std::istringstream bad("{\"kind\":\"automode.decisions\",\"schema_version\":1}\n{\"segment_id\":1}\n");
    EXPECT_THROW(read_decisions(bad), ParseError);
}
