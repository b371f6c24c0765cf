#include <gtest/gtest.h>

#include <cmath>

#include "automode/gbm.hpp"
#include "automode/random.hpp"

using namespace automode;

namespace {

struct Data {
    Matrix X;
    std::vector<int> y;
    std::vector<double> w;
};

// Label = x0 > 0; the other columns are noise.
Data planted(std::size_t n, std::size_t d, std::uint64_t seed) {
    Rng rng(seed);
    Data data{Matrix(n, d), {}, {}};
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t f = 0; f < d; ++f) data.X(i, f) = uniform(rng, -1.0, 1.0);
        data.y.push_back(data.X(i, 0) > 0.0);
        data.w.push_back(1.0);
    }
    return data;
}

double accuracy(const BinaryClassifier& m, const Data& d) {
    std::size_t ok = 0;
    for (std::size_t i = 0; i < d.X.rows(); ++i) ok += (m.predict_proba(d.X.row(i)) > 0.5) == (d.y[i] == 1);
    return static_cast<double>(ok) / static_cast<double>(d.X.rows());
}

}  // namespace

TEST(Gbm, SeparatesOneDimensionalData) {
    Matrix X(100, 1);
    std::vector<int> y;
    for (std::size_t i = 0; i < 100; ++i) {
        X(i, 0) = static_cast<double>(i);
        y.push_back(i >= 50);
    }
    const std::vector<double> w(100, 1.0);
    const auto m = train_binary(X, y, w, {}, 1);
    const std::vector<double> lo = {10.0}, hi = {90.0};
    EXPECT_LT(m.predict_proba(lo), 0.1);
    EXPECT_GT(m.predict_proba(hi), 0.9);
    // The first split lands between the classes.
    EXPECT_NEAR(m.trees[0].nodes[0].threshold, 49.5, 1e-12);
}

TEST(Gbm, UniformWeightScaleDoesNotMatter) {
    Hyperparams hp;
    hp.l2_leaf = 0.0;
    hp.min_child_hessian = 0.0;
    hp.n_rounds = 10;
    const Data d = planted(300, 3, 4);
    std::vector<double> w3(d.w.size(), 3.0);
    const auto a = train_binary(d.X, d.y, d.w, hp, 2);
    const auto b = train_binary(d.X, d.y, w3, hp, 2);
    ASSERT_EQ(a.trees.size(), b.trees.size());
    for (std::size_t i = 0; i < d.X.rows(); ++i)
        EXPECT_NEAR(a.predict_proba(d.X.row(i)), b.predict_proba(d.X.row(i)), 1e-9);
}

TEST(Gbm, BasePredictionIsPrior) {
    BinaryClassifier m;
    m.n_features = 2;
    const std::vector<double> x = {0.3, -1.0};
    EXPECT_DOUBLE_EQ(m.predict_proba(x), 0.5);
    m.base_logit = 100.0;
    EXPECT_DOUBLE_EQ(m.margin(x), kMarginClamp);
    m.base_logit = std::log(0.2 / 0.8);
    EXPECT_NEAR(m.predict_proba(x), 0.2, 1e-15);
}

TEST(Gbm, WrongWidthIsASchemaError) {
    BinaryClassifier m;
    m.n_features = 2;
    const std::vector<double> x = {1.0};
    EXPECT_THROW(m.predict_proba(x), SchemaError);
}

TEST(Gbm, LeavesAreClamped) {
    Matrix X(4, 1);
    for (std::size_t i = 0; i < 4; ++i) X(i, 0) = static_cast<double>(i);
    const std::vector<int> y = {0, 0, 1, 1};
    const std::vector<double> w(4, 1.0);
    Hyperparams hp;
    hp.l2_leaf = 0.0;
    hp.min_child_hessian = 0.0;
    hp.learning_rate = 1.0;
    hp.n_rounds = 20;
    const auto m = train_binary(X, y, w, hp, 3);
    for (const auto& t : m.trees)
        for (const auto& n : t.nodes) EXPECT_LE(std::abs(n.value), kLeafClamp);
    for (std::size_t i = 0; i < 4; ++i) EXPECT_LE(std::abs(m.margin(X.row(i))), kMarginClamp);
    EXPECT_EQ(accuracy(m, {X, y, w}), 1.0);
}

TEST(Gbm, CalibrationFollowsWeightedPrior) {
    // One constant feature: the model can only learn the weighted base rate.
    Matrix X(10, 1);
    std::vector<int> y = {1, 0, 0, 0, 0, 0, 0, 0, 0, 0};
    std::vector<double> w(10, 1.0);
    w[0] = 9.0;
    const auto m = train_binary(X, y, w, {}, 1);
    const std::vector<double> x = {0.0};
    EXPECT_NEAR(m.predict_proba(x), 0.5, 1e-12);
}

TEST(Gbm, RejectsBadInput) {
    const Data d = planted(20, 2, 1);
    EXPECT_THROW(train_binary(d.X, std::vector<int>(20, 1), d.w, {}, 1), InvalidArgument);
    EXPECT_THROW(train_binary(d.X, d.y, std::vector<double>(20, 0.0), {}, 1), InvalidArgument);
    EXPECT_THROW(train_binary(d.X, d.y, std::vector<double>(19, 1.0), {}, 1), InvalidArgument);
    auto neg = d.w;
    neg[3] = -1.0;
    EXPECT_THROW(train_binary(d.X, d.y, neg, {}, 1), InvalidArgument);
    Matrix bad = d.X;
    bad(0, 0) = std::nan("");
    EXPECT_THROW(train_binary(bad, d.y, d.w, {}, 1), InvalidArgument);
    Hyperparams hp;
    hp.learning_rate = 0.0;
    EXPECT_THROW(train_binary(d.X, d.y, d.w, hp, 1), InvalidArgument);
}

TEST(Gbm, NanRoutesByDefaultDirection) {
    const Data d = planted(200, 1, 8);
    const auto m = train_binary(d.X, d.y, d.w, {}, 1);
    const std::vector<double> x = {std::nan("")};
    EXPECT_NO_THROW(m.predict_proba(x));
}

TEST(Gbm, DeterministicForASeed) {
    Hyperparams hp;
    hp.row_subsample = 0.7;
    hp.feature_subsample = 0.5;
    const Data d = planted(300, 4, 9);
    EXPECT_EQ(train_binary(d.X, d.y, d.w, hp, 5), train_binary(d.X, d.y, d.w, hp, 5));
}

TEST(Importance, FindsThePlantedFeature) {
    const Data d = planted(1000, 5, 10);
    const auto m = train_binary(d.X, d.y, d.w, {}, 1);
    const auto imp = feature_importance(m);
    double sum = 0.0;
    for (double v : imp) sum += v;
    EXPECT_NEAR(sum, 1.0, 1e-12);
    EXPECT_GE(imp[0], 0.9);
    const std::vector<BinaryClassifier> twice = {m, m};
    const auto mean = feature_importance(std::span<const BinaryClassifier>(twice));
    for (std::size_t f = 0; f < imp.size(); ++f) EXPECT_NEAR(mean[f], imp[f], 1e-15);
}

TEST(Importance, ConstantModelsAreSkipped) {
    const Data d = planted(500, 3, 11);
    const auto m = train_binary(d.X, d.y, d.w, {}, 1);
    const auto c = constant_classifier(3, 0, {});
    EXPECT_FALSE(has_splits(c));
    EXPECT_THROW(feature_importance(c), InvalidArgument);
    const std::vector<BinaryClassifier> both = {m, c};
    EXPECT_EQ(feature_importance(std::span<const BinaryClassifier>(both)), feature_importance(m));
    const std::vector<BinaryClassifier> none = {c};
    EXPECT_THROW(feature_importance(std::span<const BinaryClassifier>(none)), InvalidArgument);
}

TEST(ConstantClassifier, PredictsItsLabel) {
    const std::vector<double> x = {1.0, 2.0};
    EXPECT_LT(constant_classifier(2, 0, {}).predict_proba(x), 1e-6);
    EXPECT_GT(constant_classifier(2, 1, {}).predict_proba(x), 1.0 - 1e-6);
}

TEST(Serialization, RoundTripPreservesPredictions) {
    const Data d = planted(400, 3, 12);
    auto m = train_binary(d.X, d.y, d.w, {}, 1);
    m.challenger_id = "C";
    m.pivot_id = "P";
    m.schema_hash = "abc";
    const auto back = classifier_from_json(json::parse(classifier_to_json(m).dump()));
    EXPECT_EQ(back.challenger_id, "C");
    EXPECT_EQ(back.hyperparams, m.hyperparams);
    for (std::size_t i = 0; i < d.X.rows(); ++i)
        EXPECT_NEAR(back.predict_proba(d.X.row(i)), m.predict_proba(d.X.row(i)), 1e-12);
}

TEST(Serialization, RejectsBadDocuments) {
    const Data d = planted(100, 2, 13);
    const json j = classifier_to_json(train_binary(d.X, d.y, d.w, {}, 1));
    json v = j;
    v["format_version"] = 2;
    EXPECT_THROW(classifier_from_json(v), VersionError);
    json t = j;
    t["trees"][0]["value"].erase(0);
    EXPECT_THROW(classifier_from_json(t), ParseError);
    json missing = j;
    missing.erase("trees");
    EXPECT_THROW(classifier_from_json(missing), ParseError);
    json cyc = j;
    cyc["trees"][0]["left"][0] = 0;
    EXPECT_THROW(classifier_from_json(cyc), ParseError);
}
