#pragma once

// Budgeted hyperparameter search scored by cross-validated WER reduction.
//
// The search is a cost-ascending randomized local search: it starts from the
// cheapest tree configuration, proposes seeded random moves in a normalized
// space, keeps a move only if it strictly improves the objective, and lets
// the cost dimensions (rounds, depth) grow only after cheaper moves stall.

#include <chrono>
#include <cmath>
#include <limits>
#include <set>
#include <string>
#include <vector>

#include "automode/datamodel.hpp"
#include "automode/ensemble.hpp"
#include "automode/error.hpp"
#include "automode/gbm.hpp"
#include "automode/labeling.hpp"
#include "automode/metrics.hpp"
#include "automode/random.hpp"
#include "automode/training.hpp"

namespace automode {

enum class Scale { Linear, Log, Integer, LogInteger };

struct SearchDimension {
    std::string name;
    double low = 0.0;
    double high = 1.0;
    double init = 0.0;
    Scale scale = Scale::Linear;
    bool cost = false;  // larger values make training more expensive
};

class SearchSpace {
public:
    SearchSpace() = default;
    explicit SearchSpace(std::vector<SearchDimension> dims) : dims_(std::move(dims)) { validate(); }

    static SearchSpace defaults() {
        return SearchSpace({{"n_rounds", 16, 512, 16, Scale::LogInteger, true},
                            {"max_depth", 3, 10, 3, Scale::Integer, true},
                            {"learning_rate", 0.01, 1.0, 0.2, Scale::Log, false},
                            {"l2_leaf", 1e-3, 100.0, 1.0, Scale::Log, false},
                            {"min_child_hessian", 1e-3, 10.0, 0.1, Scale::Log, false},
                            {"feature_subsample", 0.3, 1.0, 1.0, Scale::Linear, false},
                            {"row_subsample", 0.5, 1.0, 1.0, Scale::Linear, false}});
    }

    const std::vector<SearchDimension>& dims() const { return dims_; }
    std::size_t size() const { return dims_.size(); }

    std::vector<double> init_point() const {
        std::vector<double> u;
        for (const auto& d : dims_) u.push_back(to_unit(d, d.init));
        return u;
    }

    /// Hyperparameters at a point of the unit cube; unlisted fields keep
    /// `base` values.
    Hyperparams at(const std::vector<double>& unit, Hyperparams base = {}) const {
        for (std::size_t k = 0; k < dims_.size(); ++k) {
            const double v = from_unit(dims_[k], unit[k]);
            const auto& name = dims_[k].name;
            if (name == "n_rounds") base.n_rounds = static_cast<int>(v);
            else if (name == "max_depth") base.max_depth = static_cast<int>(v);
            else if (name == "learning_rate") base.learning_rate = v;
            else if (name == "l2_leaf") base.l2_leaf = v;
            else if (name == "min_child_hessian") base.min_child_hessian = v;
            else if (name == "feature_subsample") base.feature_subsample = v;
            else if (name == "row_subsample") base.row_subsample = v;
        }
        base.validate();
        return base;
    }

    json to_json() const {
        json out = json::array();
        for (const auto& d : dims_) {
            const char* scale = d.scale == Scale::Linear ? "linear"
                                : d.scale == Scale::Log  ? "log"
                                : d.scale == Scale::Integer ? "integer"
                                                            : "log-integer";
            out.push_back({{"name", d.name}, {"low", d.low}, {"high", d.high}, {"init", d.init}, {"scale", scale},
                           {"cost", d.cost}});
        }
        return out;
    }

    static SearchSpace from_json(const json& j) {
        std::vector<SearchDimension> dims;
        for (const auto& d : j) {
            SearchDimension s;
            s.name = d.at("name").get<std::string>();
            s.low = d.at("low").get<double>();
            s.high = d.at("high").get<double>();
            s.init = d.value("init", s.low);
            const auto scale = d.value("scale", std::string("linear"));
            if (scale == "linear") s.scale = Scale::Linear;
            else if (scale == "log") s.scale = Scale::Log;
            else if (scale == "integer") s.scale = Scale::Integer;
            else if (scale == "log-integer") s.scale = Scale::LogInteger;
            else throw ParseError("unknown search scale '" + scale + "'");
            s.cost = d.value("cost", false);
            dims.push_back(s);
        }
        return SearchSpace(std::move(dims));
    }

private:
    static bool is_log(const SearchDimension& d) { return d.scale == Scale::Log || d.scale == Scale::LogInteger; }
    static bool is_int(const SearchDimension& d) { return d.scale == Scale::Integer || d.scale == Scale::LogInteger; }

    static double to_unit(const SearchDimension& d, double v) {
        if (d.high == d.low) return 0.0;
        if (is_log(d)) return (std::log(v) - std::log(d.low)) / (std::log(d.high) - std::log(d.low));
        return (v - d.low) / (d.high - d.low);
    }

    static double from_unit(const SearchDimension& d, double u) {
        u = std::clamp(u, 0.0, 1.0);
        double v = is_log(d) ? std::exp(std::log(d.low) + u * (std::log(d.high) - std::log(d.low)))
                             : d.low + u * (d.high - d.low);
        if (is_int(d)) v = std::round(v);
        return std::clamp(v, d.low, d.high);
    }

    void validate() const {
        static const std::set<std::string> known = {"n_rounds", "max_depth", "learning_rate", "l2_leaf",
                                                    "min_child_hessian", "feature_subsample", "row_subsample"};
        for (const auto& d : dims_) {
            if (!known.contains(d.name)) throw InvalidArgument("search space: unknown hyperparameter '" + d.name + "'");
            if (!std::isfinite(d.low) || !std::isfinite(d.high) || d.low > d.high)
                throw InvalidArgument("search space: invalid bounds for '" + d.name + "'");
            if (is_log(d) && !(d.low > 0.0))
                throw InvalidArgument("search space: log-scaled '" + d.name + "' needs low > 0");
            if (d.init < d.low || d.init > d.high)
                throw InvalidArgument("search space: init of '" + d.name + "' outside bounds");
        }
    }

    std::vector<SearchDimension> dims_;
};

enum class HpoObjective {
    Ensemble,  // WER of routed selections vs the best single system
    PerPair,   // mean over pairs of the gain over the better of the two systems
};

struct CrossValidationOptions {
    std::size_t folds = 5;
    HpoObjective objective = HpoObjective::Ensemble;
    double threshold = kDefaultThreshold;
    TrainOptions train;  // hyperparams are overridden per trial
};

struct CrossValidationResult {
    double objective = 0.0;  // mean of fold scores, in WER percentage points
    std::vector<double> fold_scores;
};

/// Stratified fold assignment on the labels of the most imbalanced pair that
/// has both labels.
inline std::vector<std::size_t> stratified_folds(const Dataset& train, std::size_t k, std::uint64_t seed) {
    const SystemProfile& pivot = train.pivot();
    std::vector<int> strat;
    double worst = 2.0;
    for (const auto& s : train.schema.systems) {
        if (s.is_pivot) continue;
        const auto labeling = make_pair_labels(train.records, s, pivot);
        const double minority =
            static_cast<double>(std::min(labeling.positives, labeling.negatives)) / static_cast<double>(labeling.size());
        if (minority > 0.0 && minority < worst) {
            worst = minority;
            strat = labeling.labels;
        }
    }
    if (strat.empty()) strat.assign(train.size(), 0);
    std::vector<std::size_t> fold(train.size(), 0);
    Rng rng(seed);
    std::size_t next = 0;
    for (int label : {0, 1}) {
        std::vector<std::size_t> idx;
        for (std::size_t i = 0; i < strat.size(); ++i)
            if (strat[i] == label) idx.push_back(i);
        shuffle(std::span<std::size_t>(idx), rng);
        for (auto i : idx) fold[i] = next++ % k;
    }
    return fold;
}

inline double fold_score(const RouterModel& router, const Dataset& held_out, const CrossValidationOptions& opt) {
    if (opt.objective == HpoObjective::Ensemble) {
        std::vector<std::string> selection;
        for (const auto& r : held_out.records)
            selection.push_back(decide(router, assemble(r, router.schema()), opt.threshold).chosen_id);
        double best_single = std::numeric_limits<double>::infinity();
        for (const auto& s : held_out.schema.systems) best_single = std::min(best_single, pooled_wer(held_out, s.id));
        return 100.0 * (best_single - pooled_wer(held_out, selection));
    }
    const std::string& pivot = router.pivot_id();
    double total = 0.0;
    for (const auto& c : router.classifiers()) {
        std::vector<std::string> selection;
        for (const auto& r : held_out.records)
            selection.push_back(c.predict_proba(assemble(r, router.schema())) > opt.threshold ? c.challenger_id : pivot);
        const double better = std::min(pooled_wer(held_out, pivot), pooled_wer(held_out, c.challenger_id));
        total += 100.0 * (better - pooled_wer(held_out, selection));
    }
    return total / static_cast<double>(router.classifiers().size());
}

/// k-fold estimate of the WER reduction achieved by routing with `hp`.
/// Only ever sees the training split.
inline CrossValidationResult cross_validate(const Dataset& train, const Hyperparams& hp,
                                            const CrossValidationOptions& opt, std::uint64_t seed) {
    if (opt.folds < 2) throw InvalidArgument("cross_validate: need at least 2 folds");
    if (train.size() < opt.folds) throw InvalidArgument("cross_validate: fold too small to stratify");
    const auto fold = stratified_folds(train, opt.folds, seed);
    const FeatureSchema schema = FeatureSchema::for_dataset(train, opt.train.toggles);
    CrossValidationResult out;
    for (std::size_t f = 0; f < opt.folds; ++f) {
        std::vector<std::size_t> tr, te;
        for (std::size_t i = 0; i < train.size(); ++i) (fold[i] == f ? te : tr).push_back(i);
        const Dataset fold_train = train.subset(tr);
        const Dataset fold_test = train.subset(te);
        const SystemProfile& pivot = train.pivot();
        for (const auto& s : train.schema.systems) {
            if (s.is_pivot) continue;
            const auto l = make_pair_labels(fold_train.records, s, pivot);
            const auto all = make_pair_labels(train.records, s, pivot);
            const bool both_overall = all.positives > 0 && all.negatives > 0;
            if (both_overall && (l.positives == 0 || l.negatives == 0))
                throw InvalidArgument("cross_validate: fold too small to stratify (pair " + pivot.id + " vs " + s.id +
                                      " has a single label in fold " + std::to_string(f) + ")");
        }
        TrainOptions to = opt.train;
        to.hyperparams = hp;
        to.seed = derive_seed(seed, 1000 + f);
        const RouterModel router = train_router(fold_train, to, schema);
        out.fold_scores.push_back(fold_score(router, fold_test, opt));
    }
    double sum = 0.0;
    for (double s : out.fold_scores) sum += s;
    out.objective = sum / static_cast<double>(out.fold_scores.size());
    return out;
}

struct Budget {
    enum class Mode { Trials, Seconds };
    Mode mode = Mode::Trials;
    double value = 20;
};

struct Trial {
    std::size_t index = 0;
    Hyperparams hyperparams;
    double objective = 0.0;
    std::vector<double> fold_scores;
    double seconds = 0.0;
    bool accepted = false;
    double incumbent_objective = 0.0;
};

/// Timings are left out unless asked for, so trial logs stay reproducible.
inline json trial_to_json(const Trial& t, bool include_timing = false) {
    json j = {{"trial", t.index},
              {"hyperparams", t.hyperparams.to_json()},
              {"objective", t.objective},
              {"fold_scores", t.fold_scores},
              {"accepted", t.accepted},
              {"incumbent_objective", t.incumbent_objective}};
    if (include_timing) j["seconds"] = t.seconds;
    return j;
}

struct SearchResult {
    Hyperparams best;
    double best_objective = 0.0;
    std::vector<Trial> trials;
    /// Set when the budget ran out before any trial finished; `best` then
    /// holds the space's initial configuration.
    bool budget_too_small = false;
};

/// Trial-count budgets are bit-reproducible; wall-clock budgets are not
/// (trial timings are logged, and the stopping point depends on them).
inline SearchResult search(const Dataset& train, const SearchSpace& space, const Budget& budget,
                           const CrossValidationOptions& cv, std::uint64_t seed) {
    if (!(budget.value > 0.0)) throw InvalidArgument("search: budget must be > 0");
    using clock = std::chrono::steady_clock;
    const auto start = clock::now();
    const auto elapsed = [&] { return std::chrono::duration<double>(clock::now() - start).count(); };
    const auto exhausted = [&](std::size_t done) {
        return budget.mode == Budget::Mode::Trials ? static_cast<double>(done) >= budget.value
                                                   : elapsed() >= budget.value;
    };

    const Hyperparams base = cv.train.hyperparams;
    SearchResult result;
    result.best = space.at(space.init_point(), base);
    Rng rng(derive_seed(seed, 0x5EA7C4));
    const std::size_t D = space.size();

    std::vector<double> incumbent = space.init_point();
    bool have_incumbent = false;
    double step = 0.1 * std::sqrt(static_cast<double>(D));
    const double min_step = 1e-3;
    std::size_t stall = 0;
    bool escalate = false;
    std::vector<double> direction(D, 0.0);
    bool pending_opposite = false;

    auto evaluate = [&](const std::vector<double>& point) -> bool {
        const auto t0 = clock::now();
        Trial t;
        t.index = result.trials.size();
        t.hyperparams = space.at(point, base);
        const auto cvr = cross_validate(train, t.hyperparams, cv, seed);
        t.objective = cvr.objective;
        t.fold_scores = cvr.fold_scores;
        t.seconds = std::chrono::duration<double>(clock::now() - t0).count();
        if (budget.mode == Budget::Mode::Seconds && elapsed() > budget.value && result.trials.empty()) {
            result.budget_too_small = true;
        }
        t.accepted = !have_incumbent || t.objective > result.best_objective;
        if (t.accepted) {
            have_incumbent = true;
            result.best_objective = t.objective;
            result.best = t.hyperparams;
        }
        t.incumbent_objective = result.best_objective;
        result.trials.push_back(t);
        return t.accepted;
    };

    if (!exhausted(0)) evaluate(incumbent);
    if (result.budget_too_small) {
        result.best = space.at(space.init_point(), base);
        return result;
    }

    while (!exhausted(result.trials.size())) {
        std::vector<double> candidate(D);
        if (!pending_opposite) {
            double norm = 0.0;
            for (std::size_t k = 0; k < D; ++k) {
                direction[k] = standard_normal(rng);
                if (space.dims()[k].cost && !escalate) direction[k] = std::min(direction[k], 0.0);
                norm += direction[k] * direction[k];
            }
            norm = std::sqrt(norm);
            for (auto& v : direction) v = norm > 0.0 ? v / norm : 0.0;
            for (std::size_t k = 0; k < D; ++k) candidate[k] = std::clamp(incumbent[k] + step * direction[k], 0.0, 1.0);
        } else {
            for (std::size_t k = 0; k < D; ++k) {
                double dk = -direction[k];
                if (space.dims()[k].cost && !escalate) dk = std::min(dk, 0.0);
                candidate[k] = std::clamp(incumbent[k] + step * dk, 0.0, 1.0);
            }
        }
        if (evaluate(candidate)) {
            incumbent = candidate;
            stall = 0;
            escalate = false;
            pending_opposite = false;
            continue;
        }
        if (!pending_opposite) {
            pending_opposite = true;
            continue;
        }
        pending_opposite = false;
        ++stall;
        if (!escalate && stall >= 2) {
            escalate = true;
            stall = 0;
        } else if (escalate && stall >= 4) {
            step = std::max(min_step, step * 0.5);
            stall = 0;
        }
    }
    return result;
}

}  // namespace automode
