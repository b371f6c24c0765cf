#pragma once

// The batch commands as library calls. The CLI only parses arguments and
// writes what these return; tests drive the same functions.

#include <optional>
#include <string>
#include <vector>

#include "automode/config.hpp"
#include "automode/datamodel.hpp"
#include "automode/ensemble.hpp"
#include "automode/hpo.hpp"
#include "automode/report.hpp"
#include "automode/training.hpp"

namespace automode {

struct Splits {
    Dataset train;
    Dataset valid;
    Dataset test;
};

inline Dataset load_configured(const RunConfig& cfg, const std::string& path, const std::string& what) {
    Dataset ds = load_dataset(require_file(cfg.resolve(path), what));
    apply_profiles(ds, cfg);
    return ds;
}

/// Explicit train/valid/test files when given, otherwise a seeded split of
/// `paths.dataset`.
inline Splits load_splits(const RunConfig& cfg) {
    Splits s;
    const bool explicit_files = !cfg.paths.train.empty();
    if (explicit_files) {
        s.train = load_configured(cfg, cfg.paths.train, "training dataset");
        if (!cfg.paths.valid.empty()) s.valid = load_configured(cfg, cfg.paths.valid, "validation dataset");
        if (!cfg.paths.test.empty()) s.test = load_configured(cfg, cfg.paths.test, "test dataset");
        return s;
    }
    const Dataset all = load_configured(cfg, cfg.paths.dataset, "dataset");
    DatasetSplit split = split_dataset(all, cfg.split, derive_seed(cfg.seed, 0x5B17));
    s.train = std::move(split.train);
    s.valid = std::move(split.valid);
    s.test = std::move(split.test);
    return s;
}

inline TrainOptions train_options(const RunConfig& cfg) {
    TrainOptions opt;
    opt.toggles = cfg.features;
    opt.sample_weights = cfg.sample_weights;
    opt.weight_options = cfg.weighting;
    opt.hyperparams = cfg.hyperparams;
    opt.seed = cfg.seed;
    return opt;
}

inline CrossValidationOptions cv_options(const RunConfig& cfg) {
    CrossValidationOptions cv;
    cv.folds = cfg.hpo.folds;
    cv.objective = cfg.hpo.objective;
    cv.threshold = cfg.threshold;
    cv.train = train_options(cfg);
    return cv;
}

struct TrainOutcome {
    RouterModel router;
    PairTable pairs;  // empty rows when there was no validation set
    std::optional<SearchResult> hpo;
};

/// HPO (when enabled) on `train` only, then the final router on all of
/// `train`, then per-pair results on `valid`.
inline TrainOutcome run_train(const RunConfig& cfg, const Dataset& train, const Dataset& valid) {
    TrainOutcome out;
    TrainOptions opt = train_options(cfg);
    if (cfg.hpo.enabled) {
        out.hpo = search(train, cfg.hpo.space, cfg.hpo.budget, cv_options(cfg), derive_seed(cfg.seed, 0x4790));
        opt.hyperparams = out.hpo->best;
    }
    out.router = train_router(train, opt);
    json meta = {{"sample_weights", cfg.sample_weights},
                 {"weight_epsilon", cfg.weighting.floor},
                 {"weight_wer_difference", cfg.weighting.use_wer_difference},
                 {"weight_inverse_frequency", cfg.weighting.use_inverse_frequency},
                 {"seed", cfg.seed},
                 {"n_train", train.size()}};
    if (out.hpo) {
        meta["hpo"] = {{"trials", out.hpo->trials.size()},
                       {"best_objective", out.hpo->best_objective},
                       {"budget_too_small", out.hpo->budget_too_small}};
    }
    out.router.set_metadata(std::move(meta));
    if (!valid.empty()) {
        std::vector<RoutedPolicy> rows = {{variant_label(out.router), &out.router, {}}};
        if (cfg.rescoring.mode != RescoreMode::Off) rows.push_back({kRescoringLabel, &out.router, cfg.rescoring});
        out.pairs = evaluate_pairs(valid, rows, cfg.threshold);
    }
    return out;
}

/// One row per router, labeled by its weighting, then a rescoring row on the
/// last router when rescoring is configured.
inline PolicyTable run_evaluate(const RunConfig& cfg, const std::vector<const RouterModel*>& routers,
                                const Dataset& test) {
    std::vector<RoutedPolicy> rows;
    for (std::size_t i = 0; i < routers.size(); ++i) {
        std::string label = variant_label(*routers[i]);
        for (const auto& r : rows)
            if (r.name == label) label += " #" + std::to_string(i + 1);
        rows.push_back({label, routers[i], {}});
    }
    if (cfg.rescoring.mode != RescoreMode::Off && !routers.empty())
        rows.push_back({kRescoringLabel, routers.back(), cfg.rescoring});
    return evaluate_policies(test, rows, cfg.threshold);
}

struct AblationOutcome {
    std::vector<AblationRow> rows;
    std::vector<RouterModel> routers;  // aligned with the non-rescoring rows
};

/// Trains and scores one router per feature-group combination with the
/// configured hyperparameters; language and signal properties stay on. With
/// rescoring configured, a last row rescores the combination with all groups
/// (or the last one listed).
inline AblationOutcome run_ablate(const RunConfig& cfg, const Dataset& train, const Dataset& test) {
    if (test.empty()) throw InvalidArgument("ablate: evaluation set is empty");
    AblationOutcome out;
    const std::string baseline = single_best_system(test);
    std::size_t full = cfg.ablation.size() - 1;
    for (std::size_t i = 0; i < cfg.ablation.size(); ++i) {
        const auto& combo = cfg.ablation[i];
        if (combo.toggles.audio && combo.toggles.asr && combo.toggles.qe) full = i;
        TrainOptions opt = train_options(cfg);
        opt.toggles = combo.toggles;
        opt.toggles.language = cfg.features.language;
        opt.toggles.signal = cfg.features.signal;
        RouterModel router = train_router(train, opt);
        router.set_metadata({{"sample_weights", cfg.sample_weights}, {"seed", cfg.seed}, {"ablation", combo.name}});
        const auto res = route_dataset(router, test, cfg.threshold);
        const auto rep = aggregate_report(res.selections(), test, baseline);
        out.rows.push_back({combo.name, rep.corpus_wer, rep.weighted_f1, router.schema().hash()});
        out.routers.push_back(std::move(router));
    }
    if (cfg.rescoring.mode != RescoreMode::Off) {
        const RouterModel& router = out.routers[full];
        const auto res = route_dataset(router, test, cfg.threshold, cfg.rescoring);
        const auto rep = aggregate_report(res.selections(), test, baseline, res.extra_cost, res.extra_runtime);
        out.rows.push_back({kRescoringLabel, rep.corpus_wer, rep.weighted_f1, router.schema().hash()});
    }
    return out;
}

/// Trains the classifier for `system_id` on `train` with the router's own
/// schema, hyperparameters, seed and weighting, and appends it.
inline RouterModel run_add_system(const RouterModel& router, const Dataset& train, const std::string& system_id) {
    if (train.empty()) throw InvalidArgument("add-system: training set is empty");
    for (const auto& s : router.systems())
        if (s.id == system_id) throw InvalidArgument("add-system: duplicate system '" + system_id + "'");
    const SystemProfile& profile = find_system(train.schema.systems, system_id);
    const SystemProfile& pivot = router.system(router.pivot_id());
    for (const auto& r : train.records) {
        if (!r.outcomes.contains(pivot.id) || !r.outcomes.contains(system_id))
            throw InvalidArgument("add-system: segment '" + r.segment_id + "' lacks outcomes for '" + pivot.id +
                                  "' or '" + system_id + "'");
    }
    check_compatible(router, train, false);

    const json& meta = router.metadata();
    TrainOptions opt;
    opt.hyperparams = router.hyperparams();
    opt.seed = meta.value("seed", std::uint64_t{0});
    opt.sample_weights = meta.value("sample_weights", true);
    opt.weight_options.floor = meta.value("weight_epsilon", kDefaultWeightFloor);
    opt.weight_options.use_wer_difference = meta.value("weight_wer_difference", true);
    opt.weight_options.use_inverse_frequency = meta.value("weight_inverse_frequency", true);

    SystemProfile added = profile;
    added.is_pivot = false;
    const Matrix X = assemble_matrix(train, router.schema());
    BinaryClassifier c = train_pair(train, X, router.schema(), added, pivot, opt);
    return add_system(router, added, std::move(c));
}

}  // namespace automode
