#include <gtest/gtest.h>

#include <sstream>

#include "automode/labeling.hpp"

using namespace automode;

namespace {

const SystemProfile kPivot{"P", 0.1, 0.05, true};
const SystemProfile kChallenger{"C", 1.0, 0.5, false};

std::vector<SegmentRecord> records(const std::vector<std::pair<double, double>>& wers) {
    std::vector<SegmentRecord> out;
    for (std::size_t i = 0; i < wers.size(); ++i) {
        SegmentRecord r;
        r.segment_id = "s" + std::to_string(i);
        r.outcomes["C"].wer = wers[i].first;
        r.outcomes["P"].wer = wers[i].second;
        out.push_back(r);
    }
    return out;
}

}  // namespace

TEST(PairLabel, TruthTable) {
    EXPECT_EQ(pair_label(0.1, 0.2, 1.0, 0.1), 1);
    EXPECT_EQ(pair_label(0.3, 0.2, 1.0, 0.1), 0);
    EXPECT_EQ(pair_label(0.2, 0.2, 1.0, 0.1), 0);   // tie, pivot cheaper
    EXPECT_EQ(pair_label(0.2, 0.2, 0.05, 0.1), 1);  // tie, challenger cheaper
    EXPECT_EQ(pair_label(0.2, 0.2, 0.1, 0.1), 0);   // full tie keeps the pivot
}

TEST(PairLabels, CountsAndRange) {
    const auto recs = records({{0.1, 0.2}, {0.5, 0.2}, {0.2, 0.2}, {0.0, 0.5}});
    const auto l = make_pair_labels(recs, kChallenger, kPivot);
    EXPECT_EQ(l.labels, (std::vector<int>{1, 0, 0, 1}));
    EXPECT_EQ(l.positives, 2u);
    EXPECT_EQ(l.negatives, 2u);
    EXPECT_DOUBLE_EQ(l.wer_diff_min, 0.0);
    EXPECT_DOUBLE_EQ(l.wer_diff_max, 0.5);
    EXPECT_EQ(l.segment_ids[3], "s3");
}

TEST(SampleWeights, HandComputedValues) {
    // |dWER| = 0.1, 0.3, 0, 0.5 with labels 1, 0, 0, 0. Range 0.5.
    const auto recs = records({{0.1, 0.2}, {0.5, 0.2}, {0.2, 0.2}, {0.7, 0.2}});
    const auto l = make_pair_labels(recs, kChallenger, kPivot);
    ASSERT_EQ(l.positives, 1u);
    const auto w = sample_weights(l);
    EXPECT_NEAR(w[0], 0.2 * 2.0, 1e-12);
    EXPECT_NEAR(w[1], 0.6 * 2.0 / 3.0, 1e-12);
    EXPECT_NEAR(w[2], 0.01 * 2.0 / 3.0, 1e-12);
    EXPECT_NEAR(w[3], 1.0 * 2.0 / 3.0, 1e-12);
}

TEST(SampleWeights, FactorsCanBeSwitchedOff) {
    const auto recs = records({{0.1, 0.2}, {0.5, 0.2}, {0.2, 0.2}, {0.7, 0.2}});
    const auto l = make_pair_labels(recs, kChallenger, kPivot);
    WeightOptions only_diff;
    only_diff.use_inverse_frequency = false;
    EXPECT_NEAR(sample_weights(l, only_diff)[0], 0.2, 1e-12);
    WeightOptions only_freq;
    only_freq.use_wer_difference = false;
    EXPECT_NEAR(sample_weights(l, only_freq)[2], 4.0 / 6.0, 1e-12);
    WeightOptions none;
    none.use_wer_difference = none.use_inverse_frequency = false;
    for (double v : sample_weights(l, none)) EXPECT_EQ(v, 1.0);
}

TEST(SampleWeights, ZeroRangeLeavesFrequencyOnly) {
    // Dyadic values keep every |dWER| exactly 0.25.
    const auto recs = records({{0.25, 0.5}, {0.75, 0.5}, {1.0, 0.75}});
    const auto l = make_pair_labels(recs, kChallenger, kPivot);
    const auto w = sample_weights(l);
    EXPECT_NEAR(w[0], 3.0 / 2.0, 1e-12);
    EXPECT_NEAR(w[1], 3.0 / 4.0, 1e-12);
    EXPECT_NEAR(w[2], 3.0 / 4.0, 1e-12);
}

TEST(SampleWeights, ClassTotalsBalance) {
    const auto recs = records({{0.1, 0.2}, {0.5, 0.2}, {0.2, 0.2}, {0.7, 0.2}, {0.0, 0.9}});
    const auto l = make_pair_labels(recs, kChallenger, kPivot);
    WeightOptions only_freq;
    only_freq.use_wer_difference = false;
    const auto w = sample_weights(l, only_freq);
    double pos = 0.0, neg = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) (l.labels[i] ? pos : neg) += w[i];
    EXPECT_NEAR(pos, neg, 1e-12);
    EXPECT_NEAR(pos + neg, 5.0, 1e-12);
}

TEST(SampleWeights, EmptyIsAnError) { EXPECT_THROW(sample_weights(PairLabeling{}), InvalidArgument); }

TEST(Labeling, DiagnosticDump) {
    auto l = make_pair_labels(records({{0.1, 0.2}, {0.5, 0.2}}), kChallenger, kPivot);
    l.weights = sample_weights(l);
    std::ostringstream out;
    write_labeling(out, l);
    std::istringstream in(out.str());
    std::string line;
    std::getline(in, line);
    EXPECT_EQ(json::parse(line).at("challenger"), "C");
    std::getline(in, line);
    const json first = json::parse(line);
    EXPECT_EQ(first.at("segment_id"), "s0");
    EXPECT_EQ(first.at("label"), 1);
    EXPECT_DOUBLE_EQ(first.at("weight").get<double>(), l.weights[0]);
}
