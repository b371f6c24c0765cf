#pragma once

// Run configuration: one JSON file, overridable from the command line.
//
// {
//   "seed": 7,
//   "paths": {"dataset": "data.jsonl", "train": "", "valid": "", "test": "",
//             "model": "router.json", "output_dir": "out"},
//   "split": [0.7, 0.1, 0.2],
//   "systems": [{"id": "whisper", "cost_rate": 0.1, "latency_rate": 0.05, "pivot": true}],
//   "pivot": "whisper",
//   "features": {"audio": true, "language": true, "asr": true, "qe": true, "signal": true},
//   "weighting": {"sample_weights": true, "epsilon": 0.01, "wer_difference": true, "inverse_frequency": true},
//   "rescoring": {"mode": "off", "qe_source": "oracle", "qe_cost_rate": 0, "qe_latency_rate": 0},
//   "threshold": 0.5,
//   "hyperparams": {"n_rounds": 50, ...},
//   "hpo": {"enabled": false, "budget": 20, "budget_mode": "trials", "folds": 5,
//           "objective": "ensemble", "space": [...]},
//   "ablation": [["audio", "asr"], ["audio", "qe"], ["asr", "qe"], ["audio", "asr", "qe"]],
//   "generator": {...}
// }
//
// Every key is optional. Relative paths resolve against the config file's
// directory. `systems` entries patch the dataset's profiles by id.

#include <array>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "automode/datamodel.hpp"
#include "automode/error.hpp"
#include "automode/features.hpp"
#include "automode/gbm.hpp"
#include "automode/hpo.hpp"
#include "automode/labeling.hpp"
#include "automode/report.hpp"
#include "automode/synth.hpp"
#include "automode/training.hpp"

namespace automode {

inline constexpr const char* kConfigEnvVar = "AUTOMODE_CONFIG";

struct RunPaths {
    std::string dataset;
    std::string train;
    std::string valid;
    std::string test;
    std::string model;
    std::string output_dir = ".";
};

struct HpoConfig {
    bool enabled = false;
    Budget budget;
    std::size_t folds = 5;
    HpoObjective objective = HpoObjective::Ensemble;
    SearchSpace space = SearchSpace::defaults();
};

struct RunConfig {
    std::uint64_t seed = 0;
    RunPaths paths;
    std::array<double, 3> split = {0.7, 0.1, 0.2};
    std::vector<SystemProfile> systems;
    std::string pivot;
    FeatureToggles features;
    bool sample_weights = true;
    WeightOptions weighting;
    RescoreConfig rescoring;
    double threshold = kDefaultThreshold;
    Hyperparams hyperparams;
    HpoConfig hpo;
    std::vector<AblationCombo> ablation = default_combos();
    std::optional<GeneratorConfig> generator;

    std::filesystem::path base_dir = ".";

    std::string resolve(const std::string& p) const {
        if (p.empty()) return p;
        const std::filesystem::path path(p);
        return path.is_absolute() ? p : (base_dir / path).lexically_normal().string();
    }

    void validate() const {
        if (!(threshold > 0.0 && threshold < 1.0)) throw InvalidArgument("config: threshold must be in (0, 1)");
        hyperparams.validate();
        if (!(weighting.floor >= 0.0)) throw InvalidArgument("config: weighting.epsilon must be >= 0");
        if (hpo.folds < 2) throw InvalidArgument("config: hpo.folds must be >= 2");
        if (!(hpo.budget.value > 0.0)) throw InvalidArgument("config: hpo.budget must be > 0");
        if (!systems.empty() && pivot.empty()) {
            std::size_t pivots = 0;
            for (const auto& s : systems) pivots += s.is_pivot ? 1 : 0;
            if (pivots > 1) throw InvalidArgument("config: more than one system marked as pivot");
        }
        if (ablation.empty()) throw InvalidArgument("config: ablation needs at least one combination");
    }
};

inline std::string require_file(const std::string& path, const std::string& what) {
    if (path.empty()) throw InvalidArgument("config: no " + what + " path given");
    if (!std::filesystem::is_regular_file(path)) throw InvalidArgument(what + " file not found: " + path);
    return path;
}

inline RunConfig run_config_from_json(const json& j, const std::filesystem::path& base_dir = ".") {
    RunConfig c;
    c.base_dir = base_dir;
    try {
        if (!j.is_object()) throw ParseError("config: top level must be an object");
        c.seed = j.value("seed", c.seed);
        if (j.contains("paths")) {
            const json& p = j["paths"];
            c.paths.dataset = p.value("dataset", c.paths.dataset);
            c.paths.train = p.value("train", c.paths.train);
            c.paths.valid = p.value("valid", c.paths.valid);
            c.paths.test = p.value("test", c.paths.test);
            c.paths.model = p.value("model", c.paths.model);
            c.paths.output_dir = p.value("output_dir", c.paths.output_dir);
        }
        if (j.contains("split")) c.split = j["split"].get<std::array<double, 3>>();
        for (const auto& s : j.value("systems", json::array())) c.systems.push_back(system_from_json(s));
        c.pivot = j.value("pivot", c.pivot);
        if (j.contains("features")) {
            const json& f = j["features"];
            c.features.audio = f.value("audio", c.features.audio);
            c.features.language = f.value("language", c.features.language);
            c.features.asr = f.value("asr", c.features.asr);
            c.features.qe = f.value("qe", c.features.qe);
            c.features.signal = f.value("signal", c.features.signal);
        }
        if (j.contains("weighting")) {
            const json& w = j["weighting"];
            c.sample_weights = w.value("sample_weights", c.sample_weights);
            c.weighting.floor = w.value("epsilon", c.weighting.floor);
            c.weighting.use_wer_difference = w.value("wer_difference", c.weighting.use_wer_difference);
            c.weighting.use_inverse_frequency = w.value("inverse_frequency", c.weighting.use_inverse_frequency);
        }
        if (j.contains("rescoring")) {
            const json& r = j["rescoring"];
            c.rescoring.mode = rescore_mode_from_string(r.value("mode", std::string("off")));
            c.rescoring.qe_source = r.value("qe_source", c.rescoring.qe_source);
            c.rescoring.qe_cost_rate = r.value("qe_cost_rate", c.rescoring.qe_cost_rate);
            c.rescoring.qe_latency_rate = r.value("qe_latency_rate", c.rescoring.qe_latency_rate);
        }
        c.threshold = j.value("threshold", c.threshold);
        if (j.contains("hyperparams")) c.hyperparams = Hyperparams::from_json(j["hyperparams"]);
        if (j.contains("hpo")) {
            const json& h = j["hpo"];
            c.hpo.enabled = h.value("enabled", c.hpo.enabled);
            c.hpo.budget.value = h.value("budget", c.hpo.budget.value);
            const auto mode = h.value("budget_mode", std::string("trials"));
            if (mode == "trials") c.hpo.budget.mode = Budget::Mode::Trials;
            else if (mode == "seconds") c.hpo.budget.mode = Budget::Mode::Seconds;
            else throw InvalidArgument("config: hpo.budget_mode must be trials or seconds");
            c.hpo.folds = h.value("folds", c.hpo.folds);
            const auto objective = h.value("objective", std::string("ensemble"));
            if (objective == "ensemble") c.hpo.objective = HpoObjective::Ensemble;
            else if (objective == "per-pair") c.hpo.objective = HpoObjective::PerPair;
            else throw InvalidArgument("config: hpo.objective must be ensemble or per-pair");
            if (h.contains("space")) c.hpo.space = SearchSpace::from_json(h["space"]);
        }
        if (j.contains("ablation")) {
            c.ablation.clear();
            for (const auto& combo : j["ablation"]) c.ablation.push_back(combo_from_groups(combo.get<std::vector<std::string>>()));
        }
        if (j.contains("generator")) c.generator = generator_config_from_json(j["generator"]);
    } catch (const json::exception& e) {
        throw ParseError(std::string("config: ") + e.what());
    }
    c.validate();
    return c;
}

inline RunConfig load_run_config(const std::string& path) {
    if (!std::filesystem::is_regular_file(path)) throw InvalidArgument("config file not found: " + path);
    json j;
    try {
        j = parse_json_file(path);
    } catch (const Error& e) {
        throw ParseError("config '" + path + "': " + e.what());
    }
    return run_config_from_json(j, std::filesystem::path(path).parent_path());
}

/// Applies profile overrides and the pivot choice to a loaded dataset. A
/// system whose rates are overridden gets cost and runtime recomputed from
/// segment durations.
inline void apply_profiles(Dataset& ds, const RunConfig& cfg) {
    for (const auto& o : cfg.systems) {
        auto it = std::find_if(ds.schema.systems.begin(), ds.schema.systems.end(),
                               [&](const SystemProfile& s) { return s.id == o.id; });
        if (it == ds.schema.systems.end()) throw InvalidArgument("config: system '" + o.id + "' not in dataset");
        const bool rates_changed = it->cost_rate != o.cost_rate || it->latency_rate != o.latency_rate;
        *it = o;
        if (rates_changed)
            for (auto& r : ds.records) {
                auto& out = r.outcomes.at(o.id);
                out.cost = r.duration * o.cost_rate;
                out.runtime = r.duration * o.latency_rate;
            }
    }
    if (!cfg.pivot.empty()) {
        bool found = false;
        for (auto& s : ds.schema.systems) {
            s.is_pivot = s.id == cfg.pivot;
            found = found || s.is_pivot;
        }
        if (!found) throw InvalidArgument("config: pivot '" + cfg.pivot + "' is not a system of the dataset");
    }
    validate_systems(ds.schema.systems);
}

}  // namespace automode
