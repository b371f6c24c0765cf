#include <gtest/gtest.h>

#include "automode/metrics.hpp"
#include "automode/text.hpp"
#include "oracles.hpp"

using namespace automode;

namespace {

Dataset two_system_dataset() {
    Dataset ds;
    ds.schema.systems = {{"P", 0.1, 0.05, true}, {"C", 1.0, 0.5, false}};
    auto rec = [](const char* id, double wp, double wc, double dur, std::size_t words) {
        SegmentRecord r;
        r.segment_id = id;
        r.duration = dur;
        r.reference = Tokens(words, "w");
        r.outcomes["P"] = {std::nullopt, wp, 0.1 * dur, 0.05 * dur};
        r.outcomes["C"] = {std::nullopt, wc, 1.0 * dur, 0.5 * dur};
        return r;
    };
    ds.records = {rec("a", 0.0, 0.1, 2.0, 10), rec("b", 0.5, 0.2, 4.0, 5), rec("c", 0.3, 0.3, 1.0, 20)};
    return ds;
}

}  // namespace

TEST(Normalize, StripsPunctuationAndLowercases) {
    EXPECT_EQ(normalize_text("Hello, World!"), (Tokens{"hello", "world"}));
    EXPECT_TRUE(normalize_text("").empty());
    EXPECT_EQ(normalize_text("It's  3 PM."), (Tokens{"its", "3", "pm"}));
}

TEST(Normalize, UnicodePunctuationAndCase) {
    EXPECT_EQ(normalize_text("«Ça va?» ¿oui…"), (Tokens{"ça", "va", "oui"}));
    EXPECT_EQ(normalize_text("ПРИВЕТ,\tмир"), (Tokens{"привет", "мир"}));
    EXPECT_EQ(normalize_text("a b"), (Tokens{"a", "b"}));
}

TEST(Wer, IdentityAndInsertions) {
    EXPECT_EQ(wer({"a", "b", "c"}, {"a", "b", "c"}), 0.0);
    EXPECT_EQ(wer({"a"}, {"a", "b", "c"}), 2.0);
    EXPECT_EQ(wer({"a", "b"}, {}), 1.0);
}

TEST(Wer, EmptyReferenceIsAnError) { EXPECT_THROW(wer({}, {"a"}), InvalidArgument); }

TEST(Wer, MatchesFullMatrixOracle) {
    Rng rng(11);
    const std::vector<std::string> alphabet = {"a", "b", "c", "d"};
    for (int k = 0; k < 1000; ++k) {
        Tokens ref, hyp;
        const auto n = 1 + uniform_index(rng, 10), m = uniform_index(rng, 11);
        for (std::uint64_t i = 0; i < n; ++i) ref.push_back(alphabet[uniform_index(rng, 4)]);
        for (std::uint64_t i = 0; i < m; ++i) hyp.push_back(alphabet[uniform_index(rng, 4)]);
        ASSERT_EQ(edit_distance(ref, hyp), oracle::edit_distance(ref, hyp));
        ASSERT_EQ(wer(ref, hyp), oracle::wer(ref, hyp));
    }
}

TEST(WeightedF1, HandExample) {
    const double v = weighted_f1({"A", "B", "B", "B"}, {"A", "A", "B", "B"}, {"A", "B"});
    EXPECT_NEAR(v, 11.0 / 15.0, 1e-12);
}

TEST(WeightedF1, PerfectAndHopeless) {
    EXPECT_EQ(weighted_f1({"A", "B", "C"}, {"A", "B", "C"}, {"A", "B", "C"}), 1.0);
    EXPECT_EQ(weighted_f1({"B", "A", "A"}, {"A", "B", "B"}, {"A", "B"}), 0.0);
}

TEST(WeightedF1, MatchesConfusionMatrixOracle) {
    Rng rng(5);
    const std::vector<std::string> classes = {"P", "A", "B", "C"};
    for (int k = 0; k < 200; ++k) {
        std::vector<std::string> pred, act;
        const auto n = 1 + uniform_index(rng, 30);
        for (std::uint64_t i = 0; i < n; ++i) {
            act.push_back(classes[uniform_index(rng, 4)]);
            pred.push_back(classes[uniform_index(rng, 4)]);
        }
        ASSERT_NEAR(weighted_f1(pred, act, classes), oracle::inverse_frequency_f1(pred, act), 1e-12);
    }
}

TEST(WeightedF1, AbsentClassUsesCountFloor) {
    const auto r = weighted_f1_detail({"A", "C"}, {"A", "A"}, {"A", "B", "C"});
    EXPECT_TRUE(r.count_floor_used);
    // F1_A = 2/3 with weight 1/2, F1_C = 0 with weight 1.
    EXPECT_NEAR(r.value, (0.5 * 2.0 / 3.0) / 1.5, 1e-12);
}

TEST(WeightedF1, RejectsMismatchedInputs) {
    EXPECT_THROW(weighted_f1({"A"}, {"A", "B"}, {"A", "B"}), InvalidArgument);
    EXPECT_THROW(weighted_f1({"Z"}, {"A"}, {"A", "B"}), InvalidArgument);
}

TEST(AggregateReport, SelfBaselineIsHundredPercent) {
    const Dataset ds = two_system_dataset();
    SelectionList sel;
    for (const auto& r : ds.records) sel.emplace_back(r.segment_id, "C");
    const auto rep = aggregate_report(sel, ds, "C");
    EXPECT_DOUBLE_EQ(rep.cost_pct, 100.0);
    EXPECT_DOUBLE_EQ(rep.runtime_pct, 100.0);
}

TEST(AggregateReport, CostPercentArithmetic) {
    Dataset ds;
    ds.schema.systems = {{"P", 1.0, 1.0, true}, {"C", 4.0, 4.0, false}};
    for (const char* id : {"x", "y"}) {
        SegmentRecord r;
        r.segment_id = id;
        r.duration = 1.0;
        r.outcomes["P"] = {std::nullopt, 0.1, 1.0, 1.0};
        r.outcomes["C"] = {std::nullopt, 0.1, 4.0, 4.0};
        ds.records.push_back(r);
    }
    const auto rep = aggregate_report({{"x", "P"}, {"y", "P"}}, ds, "C");
    EXPECT_DOUBLE_EQ(rep.cost_pct, 25.0);
}

TEST(AggregateReport, ReproducesHandSummedTotals) {
    const Dataset ds = two_system_dataset();
    const SelectionList sel = {{"a", "P"}, {"b", "C"}, {"c", "C"}};
    const auto rep = aggregate_report(sel, ds, "C", 0.5, 0.25);
    // Errors: 0*10 + 0.2*5 + 0.3*20 = 7 over 35 words.
    EXPECT_NEAR(rep.corpus_wer, 7.0 / 35.0, 1e-15);
    EXPECT_NEAR(rep.mean_segment_wer, (0.0 + 0.2 + 0.3) / 3.0, 1e-15);
    // Cost: 0.2 + 4 + 1 + 0.5 extra; baseline C: 2 + 4 + 1.
    EXPECT_NEAR(rep.cost, 5.7, 1e-12);
    EXPECT_NEAR(rep.cost_pct, 100.0 * 5.7 / 7.0, 1e-12);
    EXPECT_NEAR(rep.runtime, 0.1 + 2.0 + 0.5 + 0.25, 1e-12);
    EXPECT_EQ(rep.per_system_selection_counts.at("P"), 1u);
    EXPECT_EQ(rep.per_system_selection_counts.at("C"), 2u);
    // Truth: a -> P, b -> C, c -> P (tie, P cheaper). Correct: a, b.
    EXPECT_NEAR(rep.weighted_f1, oracle::inverse_frequency_f1({"P", "C", "C"}, {"P", "C", "P"}), 1e-12);
}

TEST(AggregateReport, UnknownSegmentIsAnError) {
    const Dataset ds = two_system_dataset();
    EXPECT_THROW(aggregate_report({{"nope", "P"}}, ds, "P"), InvalidArgument);
}

TEST(SingleBest, LowestPooledWer) {
    const Dataset ds = two_system_dataset();
    // P: (0 + 2.5 + 6) / 35, C: (1 + 1 + 6) / 35.
    EXPECT_NEAR(pooled_wer(ds, "P"), 8.5 / 35.0, 1e-15);
    EXPECT_NEAR(pooled_wer(ds, "C"), 8.0 / 35.0, 1e-15);
    EXPECT_EQ(single_best_system(ds), "C");
}
