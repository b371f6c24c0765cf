#pragma once

// Table-style reports: policy comparison on a held-out set, per-pair results
// of the binary classifiers, feature-group ablation and feature importance.
// Every report has a fixed-width text rendering and a JSON form.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <string>
#include <vector>

#include "automode/datamodel.hpp"
#include "automode/ensemble.hpp"
#include "automode/features.hpp"
#include "automode/gbm.hpp"
#include "automode/labeling.hpp"
#include "automode/metrics.hpp"
#include "automode/training.hpp"

namespace automode {

inline constexpr int kReportSchemaVersion = 1;

/// Row label of a trained router, following whether sample weights were used.
inline std::string variant_label(const RouterModel& router) {
    const json& m = router.metadata();
    return m.value("sample_weights", false) ? "+ Sample weights" : "AutoMode-ASR";
}

inline const std::string kRescoringLabel = "+ QE rescoring";

/// Throws unless `ds` has the feature dimensions the router's schema was
/// built for and, with `require_systems`, every system of the router.
inline void check_compatible(const RouterModel& router, const Dataset& ds, bool require_systems = true) {
    for (const auto& s : router.systems())
        if (require_systems && std::find_if(ds.schema.systems.begin(), ds.schema.systems.end(),
                         [&](const SystemProfile& p) { return p.id == s.id; }) == ds.schema.systems.end())
            throw SchemaError("dataset has no outcomes for router system '" + s.id + "'");
    const FeatureSchema expected = FeatureSchema::from_dims(ds.schema.dims, router.schema().languages());
    for (std::size_t i = 0; i < expected.groups().size(); ++i) {
        const auto& want = router.schema().groups()[i];
        if (want.group == FeatureGroup::Language) continue;
        if (expected.groups()[i].dim != want.dim)
            throw SchemaError(std::string("feature group '") + group_name(want.group) + "' has " +
                              std::to_string(expected.groups()[i].dim) + " dims in the dataset, model expects " +
                              std::to_string(want.dim));
    }
}

// ---------------------------------------------------------------------------
// Policy table

struct PolicyRow {
    std::string name;
    EvaluationReport report;
};

struct PolicyTable {
    std::string single_best;
    std::vector<PolicyRow> rows;

    const PolicyRow& row(const std::string& name) const {
        for (const auto& r : rows)
            if (r.name == name) return r;
        throw InvalidArgument("no report row '" + name + "'");
    }
};

/// A router plus how it is run: one row of the routed part of a table.
struct RoutedPolicy {
    std::string name;
    const RouterModel* router = nullptr;
    RescoreConfig rescoring;
};

inline SelectionList fixed_selection(const Dataset& ds, const std::string& id) {
    SelectionList out;
    for (const auto& r : ds.records) out.emplace_back(r.segment_id, id);
    return out;
}

inline SelectionList oracle_selection(const Dataset& ds) {
    SelectionList out;
    for (const auto& r : ds.records) out.emplace_back(r.segment_id, best_system(r, ds.schema.systems));
    return out;
}

/// Single-best, pivot only, every other system alone, the routed policies in
/// order, then the oracle. Cost and runtime are relative to single-best.
inline PolicyTable evaluate_policies(const Dataset& test, const std::vector<RoutedPolicy>& routed,
                                     double threshold = kDefaultThreshold) {
    if (test.empty()) throw InvalidArgument("evaluation set is empty");
    PolicyTable t;
    t.single_best = single_best_system(test);
    const std::string& pivot = test.pivot().id;
    auto add = [&](std::string name, const SelectionList& sel, double extra_cost = 0.0, double extra_runtime = 0.0) {
        EvaluationReport rep = aggregate_report(sel, test, t.single_best, extra_cost, extra_runtime);
        rep.name = name;
        t.rows.push_back({std::move(name), std::move(rep)});
    };
    add("Single-best", fixed_selection(test, t.single_best));
    add("Pivot only", fixed_selection(test, pivot));
    for (const auto& s : test.schema.systems)
        if (!s.is_pivot) add(s.id + " only", fixed_selection(test, s.id));
    for (const auto& p : routed) {
        check_compatible(*p.router, test);
        const RoutingResult res = route_dataset(*p.router, test, threshold, p.rescoring);
        add(p.name, res.selections(), res.extra_cost, res.extra_runtime);
    }
    add("Oracle", oracle_selection(test));
    return t;
}

namespace detail {

inline std::string fmt(const char* format, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, format, v);
    return buf;
}

inline std::string pad_right(std::string s, std::size_t width) {
    if (s.size() < width) s.append(width - s.size(), ' ');
    return s;
}

inline std::string pad_left(const std::string& s, std::size_t width) {
    return s.size() < width ? std::string(width - s.size(), ' ') + s : s;
}

inline std::string pct(double fraction) { return fmt("%.2f", 100.0 * fraction); }

inline json envelope(const char* kind) { return {{"kind", kind}, {"schema_version", kReportSchemaVersion}}; }

}  // namespace detail

inline std::string format_policy_table(const PolicyTable& t) {
    using detail::pad_left;
    using detail::pad_right;
    std::string out = pad_right("System Selection", 28) + pad_left("WER [%]", 10) + pad_left("F1 [%]", 10) +
                      pad_left("Cost [%]", 10) + pad_left("Runtime [%]", 13) + "\n";
    out += std::string(71, '-') + "\n";
    for (const auto& r : t.rows) {
        if (r.name == "Oracle") out += std::string(71, '-') + "\n";
        out += pad_right(r.name, 28) + pad_left(detail::pct(r.report.corpus_wer), 10) +
               pad_left(detail::pct(r.report.weighted_f1), 10) + pad_left(detail::fmt("%.2f", r.report.cost_pct), 10) +
               pad_left(detail::fmt("%.2f", r.report.runtime_pct), 13) + "\n";
    }
    out += "single-best system: " + t.single_best + "\n";
    return out;
}

inline json policy_table_to_json(const PolicyTable& t) {
    json j = detail::envelope("automode.evaluation_report");
    j["single_best"] = t.single_best;
    j["rows"] = json::array();
    for (const auto& r : t.rows) j["rows"].push_back(report_to_json(r.report));
    return j;
}

// ---------------------------------------------------------------------------
// Per-pair table

struct PairCell {
    double wer = 0.0;
    double f1 = 0.0;
};

struct PairRow {
    std::string name;
    std::map<std::string, PairCell> cells;  // by challenger id
};

struct PairTable {
    std::string pivot;
    std::vector<std::string> challengers;
    std::vector<PairRow> rows;

    const PairRow& row(const std::string& name) const {
        for (const auto& r : rows)
            if (r.name == name) return r;
        throw InvalidArgument("no pair-report row '" + name + "'");
    }
};

/// Each binary classifier on its own: the pair's selection is the challenger
/// when it fires, else the pivot. F1 is over the two labels of the pair.
inline PairTable evaluate_pairs(const Dataset& valid, const std::vector<RoutedPolicy>& routed,
                                double threshold = kDefaultThreshold) {
    if (valid.empty()) throw InvalidArgument("validation set is empty");
    if (routed.empty()) throw InvalidArgument("evaluate_pairs: no routers");
    const RouterModel& first = *routed.front().router;
    PairTable t;
    t.pivot = first.pivot_id();
    const SystemProfile& pivot = first.system(t.pivot);
    for (const auto& c : first.classifiers()) t.challengers.push_back(c.challenger_id);

    std::map<std::string, std::vector<std::string>> truth;
    for (const auto& cid : t.challengers) {
        const SystemProfile& ch = first.system(cid);
        for (const auto& r : valid.records)
            truth[cid].push_back(pair_label(r.outcome(cid).wer, r.outcome(t.pivot).wer, ch.cost_rate, pivot.cost_rate)
                                     ? cid
                                     : t.pivot);
    }
    auto cell = [&](const std::string& cid, const std::vector<std::string>& sel) {
        return PairCell{pooled_wer(valid, sel), weighted_f1(sel, truth[cid], {t.pivot, cid})};
    };

    PairRow non_pivot{"Non-pivot only", {}}, pivot_only{"Pivot only", {}};
    for (const auto& cid : t.challengers) {
        non_pivot.cells[cid] = cell(cid, std::vector<std::string>(valid.size(), cid));
        pivot_only.cells[cid] = cell(cid, std::vector<std::string>(valid.size(), t.pivot));
    }
    t.rows.push_back(std::move(non_pivot));
    t.rows.push_back(std::move(pivot_only));

    for (const auto& p : routed) {
        check_compatible(*p.router, valid);
        std::optional<QeSource> qe;
        if (p.rescoring.mode != RescoreMode::Off) qe.emplace(p.rescoring.qe_source);
        std::vector<std::vector<double>> X;
        for (const auto& r : valid.records) X.push_back(assemble(r, p.router->schema()));
        PairRow row{p.name, {}};
        for (const auto& c : p.router->classifiers()) {
            std::vector<std::string> sel;
            for (std::size_t i = 0; i < valid.size(); ++i) {
                const auto& r = valid.records[i];
                Decision d;
                d.segment_id = r.segment_id;
                d.probabilities[c.challenger_id] = c.predict_proba(X[i]);
                d.chosen_id = d.probabilities[c.challenger_id] > threshold ? c.challenger_id : t.pivot;
                if (d.chosen_id != t.pivot) d.fired.push_back(c.challenger_id);
                if (qe && d.chosen_id != t.pivot)
                    d = rescore(d, transcriptions_of(r), *qe->for_record(r), *p.router, RescoreMode::PivotVsSelected);
                sel.push_back(d.chosen_id);
            }
            row.cells[c.challenger_id] = cell(c.challenger_id, sel);
        }
        t.rows.push_back(std::move(row));
    }
    return t;
}

inline std::string format_pair_table(const PairTable& t) {
    using detail::pad_left;
    using detail::pad_right;
    const std::size_t width = 28 + 18 * t.challengers.size();
    std::string out = pad_right("Pivot (" + t.pivot + ") vs.", 28);
    for (const auto& c : t.challengers) out += pad_left(c, 18);
    out += "\n" + pad_right("System Selection", 28);
    for (std::size_t i = 0; i < t.challengers.size(); ++i) out += pad_left("WER [%]", 9) + pad_left("F1 [%]", 9);
    out += "\n" + std::string(width, '-') + "\n";
    for (std::size_t k = 0; k < t.rows.size(); ++k) {
        if (k == 2) out += std::string(width, '-') + "\n";
        const auto& r = t.rows[k];
        out += pad_right(r.name, 28);
        for (const auto& c : t.challengers) {
            const auto it = r.cells.find(c);
            if (it == r.cells.end()) {
                out += pad_left("-", 9) + pad_left("-", 9);
            } else {
                out += pad_left(detail::pct(it->second.wer), 9) + pad_left(detail::pct(it->second.f1), 9);
            }
        }
        out += "\n";
    }
    return out;
}

inline json pair_table_to_json(const PairTable& t) {
    json j = detail::envelope("automode.pair_report");
    j["pivot"] = t.pivot;
    j["challengers"] = t.challengers;
    j["rows"] = json::array();
    for (const auto& r : t.rows) {
        json cells = json::object();
        for (const auto& [cid, c] : r.cells) cells[cid] = {{"wer", c.wer}, {"f1", c.f1}};
        j["rows"].push_back({{"name", r.name}, {"pairs", std::move(cells)}});
    }
    return j;
}

// ---------------------------------------------------------------------------
// Feature-group ablation

struct AblationCombo {
    std::string name;
    FeatureToggles toggles;
};

/// "Audio + ASR", ..., with " (all)" when every coarse group is on. Language
/// and signal properties stay on.
inline AblationCombo make_combo(bool audio, bool asr, bool qe) {
    AblationCombo c;
    c.toggles.audio = audio;
    c.toggles.asr = asr;
    c.toggles.qe = qe;
    std::vector<std::string> parts;
    if (audio) parts.push_back("Audio");
    if (asr) parts.push_back("ASR");
    if (qe) parts.push_back("QE");
    for (std::size_t i = 0; i < parts.size(); ++i) c.name += (i ? " + " : "") + parts[i];
    if (parts.empty()) c.name = "Language only";
    if (audio && asr && qe) c.name += " (all)";
    return c;
}

inline AblationCombo combo_from_groups(const std::vector<std::string>& groups) {
    bool audio = false, asr = false, qe = false;
    for (const auto& g : groups) {
        if (g == "audio") audio = true;
        else if (g == "asr") asr = true;
        else if (g == "qe") qe = true;
        else throw InvalidArgument("ablation group must be audio, asr or qe, got '" + g + "'");
    }
    return make_combo(audio, asr, qe);
}

inline std::vector<AblationCombo> default_combos() {
    return {make_combo(true, true, false), make_combo(true, false, true), make_combo(false, true, true),
            make_combo(true, true, true)};
}

struct AblationRow {
    std::string name;
    double wer = 0.0;
    double f1 = 0.0;
    std::string schema_hash;
};

inline std::string format_ablation_table(const std::vector<AblationRow>& rows) {
    using detail::pad_left;
    using detail::pad_right;
    std::string out = pad_right("Feature Groups", 28) + pad_left("WER [%]", 10) + pad_left("F1 [%]", 10) + "\n";
    out += std::string(48, '-') + "\n";
    for (const auto& r : rows) {
        if (r.name == kRescoringLabel) out += std::string(48, '-') + "\n";
        out += pad_right(r.name, 28) + pad_left(detail::pct(r.wer), 10) + pad_left(detail::pct(r.f1), 10) + "\n";
    }
    return out;
}

inline json ablation_to_json(const std::vector<AblationRow>& rows) {
    json j = detail::envelope("automode.ablation_report");
    j["rows"] = json::array();
    for (const auto& r : rows)
        j["rows"].push_back({{"name", r.name}, {"wer", r.wer}, {"f1", r.f1}, {"schema_hash", r.schema_hash}});
    return j;
}

// ---------------------------------------------------------------------------
// Feature importance

struct NamedImportance {
    std::string name;
    std::string group;
    double value = 0.0;
};

struct ImportanceReport {
    std::vector<NamedImportance> features;  // descending
    std::vector<NamedImportance> groups;    // descending; `group` == `name`
};

/// Mean normalized gain importance over the router's classifiers, per column
/// and summed per feature group.
inline ImportanceReport importance_report(const RouterModel& router) {
    const auto imp = feature_importance(std::span<const BinaryClassifier>(router.classifiers()));
    const FeatureSchema& schema = router.schema();
    ImportanceReport rep;
    std::map<FeatureGroup, double> by_group;
    for (std::size_t i = 0; i < imp.size(); ++i) {
        const FeatureGroup g = schema.locate(i).first;
        rep.features.push_back({schema.feature_name(i), group_name(g), imp[i]});
        by_group[g] += imp[i];
    }
    for (auto g : kGroupOrder)
        if (schema.enabled(g)) rep.groups.push_back({group_name(g), group_name(g), by_group[g]});
    auto desc = [](const NamedImportance& a, const NamedImportance& b) { return a.value > b.value; };
    std::stable_sort(rep.features.begin(), rep.features.end(), desc);
    std::stable_sort(rep.groups.begin(), rep.groups.end(), desc);
    return rep;
}

namespace detail {

inline std::string bars(const std::vector<NamedImportance>& items, std::size_t width) {
    double top = 0.0;
    std::size_t label = 0;
    for (const auto& it : items) {
        top = std::max(top, it.value);
        label = std::max(label, it.name.size());
    }
    std::string out;
    for (const auto& it : items) {
        const auto n = top > 0.0 ? static_cast<std::size_t>(std::lround(it.value / top * static_cast<double>(width))) : 0;
        out += pad_right(it.name, label + 2) + fmt("%7.4f", it.value) + "  " + std::string(n, '#') + "\n";
    }
    return out;
}

}  // namespace detail

/// Text bar chart; `top_features` limits the per-feature section (0 = all).
inline std::string format_importance(const ImportanceReport& rep, std::size_t top_features = 20) {
    std::string out = "Feature groups\n" + detail::bars(rep.groups, 40) + "\nFeatures\n";
    std::vector<NamedImportance> shown = rep.features;
    if (top_features > 0 && shown.size() > top_features) shown.resize(top_features);
    out += detail::bars(shown, 40);
    return out;
}

inline std::string importance_csv(const ImportanceReport& rep) {
    std::string out = "level,name,group,importance\n";
    for (const auto& g : rep.groups) out += "group," + g.name + "," + g.group + "," + detail::fmt("%.12g", g.value) + "\n";
    for (const auto& f : rep.features) out += "feature," + f.name + "," + f.group + "," + detail::fmt("%.12g", f.value) + "\n";
    return out;
}

inline json importance_to_json(const ImportanceReport& rep) {
    json j = detail::envelope("automode.importance_report");
    auto list = [](const std::vector<NamedImportance>& v) {
        json a = json::array();
        for (const auto& x : v) a.push_back({{"name", x.name}, {"group", x.group}, {"importance", x.value}});
        return a;
    };
    j["groups"] = list(rep.groups);
    j["features"] = list(rep.features);
    return j;
}

}  // namespace automode
