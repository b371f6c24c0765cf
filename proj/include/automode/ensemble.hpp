#pragma once

// Merging one-vs-pivot classifiers into a single per-segment system choice,
// and the optional quality-estimation second pass.

#include <algorithm>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "automode/datamodel.hpp"
#include "automode/error.hpp"
#include "automode/features.hpp"
#include "automode/gbm.hpp"
#include "automode/metrics.hpp"

namespace automode {

inline constexpr int kRouterFormatVersion = 1;
inline constexpr double kDefaultThreshold = 0.5;

class RouterModel {
public:
    RouterModel() = default;

    RouterModel(std::vector<SystemProfile> systems, FeatureSchema schema, std::vector<BinaryClassifier> classifiers,
                Hyperparams hyperparams = {})
        : systems_(std::move(systems)),
          schema_(std::move(schema)),
          classifiers_(std::move(classifiers)),
          hyperparams_(hyperparams) {
        validate();
    }

    const std::string& pivot_id() const { return pivot_of(systems_).id; }
    const std::vector<SystemProfile>& systems() const { return systems_; }
    const FeatureSchema& schema() const { return schema_; }
    const std::vector<BinaryClassifier>& classifiers() const { return classifiers_; }
    const Hyperparams& hyperparams() const { return hyperparams_; }

    /// Free-form training provenance (weighting, HPO summary) kept in the file.
    const json& metadata() const { return metadata_; }
    void set_metadata(json metadata) { metadata_ = std::move(metadata); }

    const SystemProfile& system(const std::string& id) const { return find_system(systems_, id); }

    bool operator==(const RouterModel&) const = default;

private:
    void validate() const {
        validate_systems(systems_);
        const std::string& pivot = pivot_id();
        const std::string hash = schema_.hash();
        std::set<std::string> challengers;
        for (const auto& c : classifiers_) {
            if (c.pivot_id != pivot)
                throw SchemaError("classifier for '" + c.challenger_id + "' was trained against pivot '" + c.pivot_id +
                                  "', router pivot is '" + pivot + "'");
            if (c.challenger_id == pivot) throw SchemaError("classifier challenger equals the pivot");
            if (!challengers.insert(c.challenger_id).second)
                throw SchemaError("duplicate challenger '" + c.challenger_id + "'");
            find_system(systems_, c.challenger_id);
            if (c.schema_hash != hash)
                throw SchemaError("classifier for '" + c.challenger_id + "' has schema hash " + c.schema_hash +
                                  ", router schema hash is " + hash);
            if (c.n_features != schema_.total_dim())
                throw SchemaError("classifier for '" + c.challenger_id + "' has wrong feature count");
        }
        if (classifiers_.size() + 1 != systems_.size())
            throw SchemaError("router needs one classifier per non-pivot system (" +
                              std::to_string(systems_.size() - 1) + "), has " + std::to_string(classifiers_.size()));
    }

    std::vector<SystemProfile> systems_;
    FeatureSchema schema_;
    std::vector<BinaryClassifier> classifiers_;
    Hyperparams hyperparams_;
    json metadata_ = json::object();
};

struct RescoreDetail {
    std::vector<std::string> compared;
    std::map<std::string, double> qe_scores;
    std::string pre_rescore_choice;
};

struct Decision {
    std::string segment_id;
    std::string chosen_id;
    std::map<std::string, double> probabilities;  // P(challenger beats pivot)
    std::vector<std::string> fired;               // challengers above threshold
    bool rescored = false;
    std::optional<RescoreDetail> rescoring;
};

/// Picks the challenger with the highest probability among those above
/// `threshold` (strictly), ties broken by lower cost rate then id; the pivot
/// when none fires.
inline std::string select_system(const std::map<std::string, double>& probabilities,
                                 const std::vector<SystemProfile>& systems, double threshold,
                                 std::vector<std::string>* fired = nullptr) {
    const SystemProfile* best = nullptr;
    double best_p = 0.0;
    for (const auto& [id, p] : probabilities) {
        if (!(p > threshold)) continue;
        if (fired) fired->push_back(id);
        const SystemProfile& s = find_system(systems, id);
        if (best == nullptr || p > best_p ||
            (p == best_p && (s.cost_rate < best->cost_rate || (s.cost_rate == best->cost_rate && s.id < best->id)))) {
            best = &s;
            best_p = p;
        }
    }
    return best ? best->id : pivot_of(systems).id;
}

inline Decision decide(const RouterModel& router, std::span<const double> features,
                       double threshold = kDefaultThreshold) {
    if (features.size() != router.schema().total_dim())
        throw SchemaError("feature vector has " + std::to_string(features.size()) + " values, router schema expects " +
                          std::to_string(router.schema().total_dim()));
    Decision d;
    for (const auto& c : router.classifiers()) d.probabilities[c.challenger_id] = c.predict_proba(features);
    d.chosen_id = select_system(d.probabilities, router.systems(), threshold, &d.fired);
    return d;
}

// ---------------------------------------------------------------------------
// Quality estimation

/// Reference-free transcription scorer; higher means better.
class QualityEstimator {
public:
    virtual ~QualityEstimator() = default;
    virtual double score(const std::string& transcription) const = 0;
};

class ConstantEstimator final : public QualityEstimator {
public:
    explicit ConstantEstimator(double value) : value_(value) {}
    double score(const std::string&) const override { return value_; }

private:
    double value_;
};

/// Scores looked up by exact transcription text.
class LookupEstimator final : public QualityEstimator {
public:
    explicit LookupEstimator(std::map<std::string, double> scores) : scores_(std::move(scores)) {}

    /// Line-delimited {"text": ..., "score": ...} records.
    static LookupEstimator from_file(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw InvalidArgument("cannot open QE score file '" + path + "'");
        std::map<std::string, double> scores;
        std::string line;
        std::size_t line_no = 0;
        while (std::getline(in, line)) {
            ++line_no;
            if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
            try {
                const json j = json::parse(line);
                scores[j.at("text").get<std::string>()] = j.at("score").get<double>();
            } catch (const json::exception& e) {
                throw ParseError("'" + path + "' line " + std::to_string(line_no) + ": " + e.what());
            }
        }
        return LookupEstimator(std::move(scores));
    }

    double score(const std::string& transcription) const override {
        auto it = scores_.find(transcription);
        if (it == scores_.end()) throw InvalidArgument("no QE score for transcription \"" + transcription + "\"");
        return it->second;
    }

private:
    std::map<std::string, double> scores_;
};

/// Test-only estimator with access to the reference: score = -WER.
class OracleEstimator final : public QualityEstimator {
public:
    explicit OracleEstimator(Tokens reference) : reference_(std::move(reference)) {}
    double score(const std::string& transcription) const override {
        return -wer(reference_, normalize_text(transcription));
    }

private:
    Tokens reference_;
};

enum class RescoreMode {
    Off,
    PivotVsSelected,  // compare the pivot with the chosen system only
    AllFired,         // compare the pivot with every challenger that fired
};

inline RescoreMode rescore_mode_from_string(const std::string& s) {
    if (s == "off") return RescoreMode::Off;
    if (s == "pivot-vs-selected") return RescoreMode::PivotVsSelected;
    if (s == "all-fired") return RescoreMode::AllFired;
    throw InvalidArgument("unknown rescoring mode '" + s + "' (off, pivot-vs-selected, all-fired)");
}

inline const char* to_string(RescoreMode m) {
    switch (m) {
        case RescoreMode::Off: return "off";
        case RescoreMode::PivotVsSelected: return "pivot-vs-selected";
        case RescoreMode::AllFired: return "all-fired";
    }
    return "?";
}

/// Second pass over a non-pivot decision: the highest QE score among the
/// compared transcriptions wins; ties go to the pivot, then the cheaper
/// system. Pivot decisions are returned unchanged.
inline Decision rescore(const Decision& decision, const std::map<std::string, std::string>& transcriptions,
                        const QualityEstimator& qe, const RouterModel& router,
                        RescoreMode mode = RescoreMode::PivotVsSelected) {
    const std::string& pivot = router.pivot_id();
    if (mode == RescoreMode::Off || decision.chosen_id == pivot) return decision;

    std::vector<std::string> compared = {pivot};
    if (mode == RescoreMode::PivotVsSelected) {
        compared.push_back(decision.chosen_id);
    } else {
        for (const auto& id : decision.fired) compared.push_back(id);
        if (std::find(compared.begin(), compared.end(), decision.chosen_id) == compared.end())
            compared.push_back(decision.chosen_id);
    }

    RescoreDetail detail;
    detail.pre_rescore_choice = decision.chosen_id;
    std::string best;
    double best_score = 0.0;
    for (const auto& id : compared) {
        auto it = transcriptions.find(id);
        if (it == transcriptions.end())
            throw InvalidArgument("rescore: missing transcription for system '" + id + "' in segment '" +
                                  decision.segment_id + "'");
        const double s = qe.score(it->second);
        detail.qe_scores[id] = s;
        bool better = best.empty() || s > best_score;
        if (!better && s == best_score && best != pivot) {
            const auto& a = router.system(id);
            const auto& b = router.system(best);
            better = a.cost_rate < b.cost_rate || (a.cost_rate == b.cost_rate && a.id < b.id);
        }
        if (better) {
            best = id;
            best_score = s;
        }
    }
    detail.compared = std::move(compared);

    Decision out = decision;
    out.chosen_id = best;
    out.rescored = true;
    out.rescoring = std::move(detail);
    return out;
}

// ---------------------------------------------------------------------------
// Incremental systems

/// New router with one more classifier; existing classifiers are copied
/// untouched.
inline RouterModel add_system(const RouterModel& router, const SystemProfile& profile,
                              BinaryClassifier classifier) {
    if (profile.is_pivot) throw InvalidArgument("add_system: the new system cannot be the pivot");
    if (profile.id != classifier.challenger_id)
        throw InvalidArgument("add_system: classifier challenger '" + classifier.challenger_id +
                              "' does not match system '" + profile.id + "'");
    for (const auto& s : router.systems())
        if (s.id == profile.id) throw InvalidArgument("add_system: duplicate system '" + profile.id + "'");
    if (classifier.pivot_id != router.pivot_id())
        throw SchemaError("add_system: classifier pivot '" + classifier.pivot_id + "' does not match router pivot '" +
                          router.pivot_id() + "'");
    if (classifier.schema_hash != router.schema().hash())
        throw SchemaError("add_system: classifier schema hash does not match the router");
    auto systems = router.systems();
    systems.push_back(profile);
    auto classifiers = router.classifiers();
    classifiers.push_back(std::move(classifier));
    RouterModel out(std::move(systems), router.schema(), std::move(classifiers), router.hyperparams());
    out.set_metadata(router.metadata());
    return out;
}

inline RouterModel remove_system(const RouterModel& router, const std::string& id) {
    if (id == router.pivot_id()) throw InvalidArgument("remove_system: cannot remove the pivot");
    std::vector<SystemProfile> systems;
    for (const auto& s : router.systems())
        if (s.id != id) systems.push_back(s);
    if (systems.size() == router.systems().size()) throw InvalidArgument("remove_system: unknown system '" + id + "'");
    std::vector<BinaryClassifier> classifiers;
    for (const auto& c : router.classifiers())
        if (c.challenger_id != id) classifiers.push_back(c);
    RouterModel out(std::move(systems), router.schema(), std::move(classifiers), router.hyperparams());
    out.set_metadata(router.metadata());
    return out;
}

// ---------------------------------------------------------------------------
// Router file
//
// {"kind": "automode.router", "format_version": 1, "pivot": id,
//  "systems": [...], "feature_schema": {...}, "schema_hash": hex,
//  "hyperparams": {...}, "metadata": {...},
//  "classifiers": [<binary classifier>, ...]}

inline json router_to_json(const RouterModel& r) {
    json systems = json::array();
    for (const auto& s : r.systems()) systems.push_back(system_to_json(s));
    json classifiers = json::array();
    for (const auto& c : r.classifiers()) classifiers.push_back(classifier_to_json(c));
    return {{"kind", "automode.router"},
            {"format_version", kRouterFormatVersion},
            {"pivot", r.pivot_id()},
            {"systems", std::move(systems)},
            {"feature_schema", r.schema().to_json()},
            {"schema_hash", r.schema().hash()},
            {"hyperparams", r.hyperparams().to_json()},
            {"metadata", r.metadata()},
            {"classifiers", std::move(classifiers)}};
}

inline RouterModel router_from_json(const json& j) {
    try {
        if (j.at("kind").get<std::string>() != "automode.router") throw ParseError("not a router model document");
        const int version = j.at("format_version").get<int>();
        if (version != kRouterFormatVersion)
            throw VersionError("unsupported router format_version " + std::to_string(version));
        std::vector<SystemProfile> systems;
        for (const auto& s : j.at("systems")) systems.push_back(system_from_json(s));
        FeatureSchema schema = FeatureSchema::from_json(j.at("feature_schema"));
        if (j.at("schema_hash").get<std::string>() != schema.hash())
            throw SchemaError("router schema hash does not match its feature schema");
        if (j.at("pivot").get<std::string>() != pivot_of(systems).id)
            throw SchemaError("router pivot field disagrees with system profiles");
        std::vector<BinaryClassifier> classifiers;
        for (const auto& c : j.at("classifiers")) classifiers.push_back(classifier_from_json(c));
        RouterModel router(std::move(systems), std::move(schema), std::move(classifiers),
                           Hyperparams::from_json(j.at("hyperparams")));
        router.set_metadata(j.value("metadata", json::object()));
        return router;
    } catch (const json::exception& e) {
        throw ParseError(std::string("corrupted router model: ") + e.what());
    }
}

inline std::string serialize_router(const RouterModel& r) { return router_to_json(r).dump(1) + "\n"; }

inline void save_router(const std::string& path, const RouterModel& r) { write_text_file(path, serialize_router(r)); }

inline RouterModel load_router(const std::string& path) { return router_from_json(parse_json_file(path)); }

// ---------------------------------------------------------------------------
// Decisions file: header line, then one decision per line.

inline json decision_to_json(const Decision& d) {
    json j = {{"segment_id", d.segment_id},
              {"chosen", d.chosen_id},
              {"probabilities", d.probabilities},
              {"rescored", d.rescored}};
    if (d.rescoring) {
        j["rescoring"] = {{"compared", d.rescoring->compared},
                          {"qe_scores", d.rescoring->qe_scores},
                          {"pre_rescore_choice", d.rescoring->pre_rescore_choice}};
    }
    return j;
}

inline Decision decision_from_json(const json& j) {
    Decision d;
    d.segment_id = j.at("segment_id").get<std::string>();
    d.chosen_id = j.at("chosen").get<std::string>();
    d.probabilities = j.at("probabilities").get<std::map<std::string, double>>();
    d.rescored = j.at("rescored").get<bool>();
    if (j.contains("rescoring")) {
        RescoreDetail r;
        r.compared = j["rescoring"].at("compared").get<std::vector<std::string>>();
        r.qe_scores = j["rescoring"].at("qe_scores").get<std::map<std::string, double>>();
        r.pre_rescore_choice = j["rescoring"].at("pre_rescore_choice").get<std::string>();
        d.rescoring = std::move(r);
    }
    return d;
}

inline void write_decisions(std::ostream& out, const std::vector<Decision>& decisions, const RouterModel& router) {
    out << json{{"kind", "automode.decisions"}, {"schema_version", 1}, {"pivot", router.pivot_id()}}.dump() << '\n';
    for (const auto& d : decisions) out << decision_to_json(d).dump() << '\n';
}

inline std::vector<Decision> read_decisions(std::istream& in) {
    std::vector<Decision> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            const json j = json::parse(line);
            if (line_no == 1 && j.value("kind", std::string{}) == "automode.decisions") {
                if (j.value("schema_version", -1) != 1) throw VersionError("unsupported decisions schema_version");
                continue;
            }
            out.push_back(decision_from_json(j));
        } catch (const json::exception& e) {
            throw ParseError("decisions line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return out;
}

}  // namespace automode
