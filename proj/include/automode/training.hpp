#pragma once

// Training a router from a labeled dataset and running it over a dataset.

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "automode/datamodel.hpp"
#include "automode/ensemble.hpp"
#include "automode/features.hpp"
#include "automode/gbm.hpp"
#include "automode/labeling.hpp"
#include "automode/metrics.hpp"

namespace automode {

struct TrainOptions {
    FeatureToggles toggles;
    bool sample_weights = true;
    WeightOptions weight_options;
    Hyperparams hyperparams;
    std::uint64_t seed = 0;
};

/// Seed of the classifier for `challenger`; independent of which other
/// systems exist, so an incrementally added classifier matches a full retrain.
inline std::uint64_t pair_seed(std::uint64_t seed, const std::string& challenger) {
    return derive_seed(seed, fnv1a(challenger));
}

inline BinaryClassifier train_pair(const Dataset& train, const Matrix& X, const FeatureSchema& schema,
                                   const SystemProfile& challenger, const SystemProfile& pivot,
                                   const TrainOptions& opt) {
    PairLabeling labeling = make_pair_labels(train.records, challenger, pivot);
    if (opt.sample_weights) {
        // Rescaled to mean 1 so that min_child_hessian and l2_leaf regularize
        // weighted and unweighted training equally; the weighted loss
        // minimizer is unchanged by a constant factor.
        labeling.weights = sample_weights(labeling, opt.weight_options);
        double sum = 0.0;
        for (double w : labeling.weights) sum += w;
        if (sum > 0.0)
            for (double& w : labeling.weights) w *= static_cast<double>(labeling.size()) / sum;
    } else {
        labeling.weights.assign(labeling.size(), 1.0);
    }
    BinaryClassifier c;
    if (labeling.positives == 0 || labeling.negatives == 0) {
        c = constant_classifier(X.cols(), labeling.positives > 0 ? 1 : 0, opt.hyperparams);
    } else {
        try {
            c = train_binary(X, labeling.labels, labeling.weights, opt.hyperparams,
                             pair_seed(opt.seed, challenger.id));
        } catch (const InvalidArgument& e) {
            throw InvalidArgument("pair " + pivot.id + " vs " + challenger.id + ": " + e.what());
        }
    }
    c.challenger_id = challenger.id;
    c.pivot_id = pivot.id;
    c.schema_hash = schema.hash();
    return c;
}

/// Trains one classifier per non-pivot system. `schema` defaults to the
/// training set's schema under `opt.toggles`.
inline RouterModel train_router(const Dataset& train, const TrainOptions& opt,
                                std::optional<FeatureSchema> schema = std::nullopt) {
    if (train.empty()) throw InvalidArgument("train_router: empty training set");
    const FeatureSchema fs = schema ? *schema : FeatureSchema::for_dataset(train, opt.toggles);
    if (fs.total_dim() == 0) throw InvalidArgument("train_router: no enabled features");
    const Matrix X = assemble_matrix(train, fs);
    const SystemProfile& pivot = train.pivot();
    std::vector<BinaryClassifier> classifiers;
    for (const auto& s : train.schema.systems)
        if (!s.is_pivot) classifiers.push_back(train_pair(train, X, fs, s, pivot, opt));
    return RouterModel(train.schema.systems, fs, std::move(classifiers), opt.hyperparams);
}

// ---------------------------------------------------------------------------
// QE sources

/// Resolves a QE source spec to an estimator per segment:
///   "oracle"          -WER against the segment reference (evaluation only)
///   "constant:<v>"    every transcription scores v
///   "file:<path>"     lookup table of {"text", "score"} lines
class QeSource {
public:
    explicit QeSource(const std::string& spec) : spec_(spec) {
        if (spec == "oracle") {
            oracle_ = true;
        } else if (spec.rfind("constant:", 0) == 0) {
            try {
                shared_ = std::make_shared<ConstantEstimator>(std::stod(spec.substr(9)));
            } catch (const std::exception&) {
                throw InvalidArgument("bad QE source '" + spec + "'");
            }
        } else if (spec.rfind("file:", 0) == 0) {
            shared_ = std::make_shared<LookupEstimator>(LookupEstimator::from_file(spec.substr(5)));
        } else {
            throw InvalidArgument("unknown QE source '" + spec + "' (oracle, constant:<v>, file:<path>)");
        }
    }

    std::unique_ptr<QualityEstimator> for_record(const SegmentRecord& r) const {
        if (oracle_) {
            if (r.reference.empty())
                throw InvalidArgument("oracle QE needs a reference for segment '" + r.segment_id + "'");
            return std::make_unique<OracleEstimator>(r.reference);
        }
        return std::make_unique<SharedEstimator>(shared_);
    }

    const std::string& spec() const { return spec_; }

private:
    class SharedEstimator final : public QualityEstimator {
    public:
        explicit SharedEstimator(std::shared_ptr<QualityEstimator> inner) : inner_(std::move(inner)) {}
        double score(const std::string& t) const override { return inner_->score(t); }

    private:
        std::shared_ptr<QualityEstimator> inner_;
    };

    std::string spec_;
    bool oracle_ = false;
    std::shared_ptr<QualityEstimator> shared_;
};

struct RescoreConfig {
    RescoreMode mode = RescoreMode::Off;
    std::string qe_source = "oracle";
    double qe_cost_rate = 0.0;     // per audio-second of each rescored segment
    double qe_latency_rate = 0.0;  // wall-seconds per audio-second
};

struct RoutingResult {
    std::vector<Decision> decisions;
    double extra_cost = 0.0;
    double extra_runtime = 0.0;

    SelectionList selections() const {
        SelectionList out;
        for (const auto& d : decisions) out.emplace_back(d.segment_id, d.chosen_id);
        return out;
    }
};

inline std::map<std::string, std::string> transcriptions_of(const SegmentRecord& r) {
    std::map<std::string, std::string> out;
    for (const auto& [id, o] : r.outcomes)
        if (o.hypothesis) out.emplace(id, *o.hypothesis);
    return out;
}

/// Decides every record of `ds`, optionally rescoring non-pivot choices.
inline RoutingResult route_dataset(const RouterModel& router, const Dataset& ds, double threshold = kDefaultThreshold,
                                   const RescoreConfig& rescoring = {}) {
    std::optional<QeSource> qe;
    if (rescoring.mode != RescoreMode::Off) qe.emplace(rescoring.qe_source);
    RoutingResult out;
    out.decisions.reserve(ds.size());
    for (const auto& r : ds.records) {
        const auto x = assemble(r, router.schema());
        Decision d = decide(router, x, threshold);
        d.segment_id = r.segment_id;
        if (qe && d.chosen_id != router.pivot_id()) {
            const auto estimator = qe->for_record(r);
            d = rescore(d, transcriptions_of(r), *estimator, router, rescoring.mode);
            out.extra_cost += r.duration * rescoring.qe_cost_rate;
            out.extra_runtime += r.duration * rescoring.qe_latency_rate;
        }
        out.decisions.push_back(std::move(d));
    }
    return out;
}

}  // namespace automode
