#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "automode/datamodel.hpp"
#include "automode/error.hpp"
#include "automode/text.hpp"

namespace automode {

/// Minimal number of unit-cost substitutions, deletions and insertions
/// turning `reference` into `hypothesis` (two-row DP).
inline std::size_t edit_distance(const Tokens& reference, const Tokens& hypothesis) {
    const std::size_t m = hypothesis.size();
    std::vector<std::size_t> prev(m + 1), cur(m + 1);
    for (std::size_t j = 0; j <= m; ++j) prev[j] = j;
    for (std::size_t i = 1; i <= reference.size(); ++i) {
        cur[0] = i;
        for (std::size_t j = 1; j <= m; ++j) {
            const std::size_t sub = prev[j - 1] + (reference[i - 1] == hypothesis[j - 1] ? 0 : 1);
            cur[j] = std::min({sub, prev[j] + 1, cur[j - 1] + 1});
        }
        std::swap(prev, cur);
    }
    return prev[m];
}

/// (S + D + I) / N. WER is undefined for an empty reference.
inline double wer(const Tokens& reference, const Tokens& hypothesis) {
    if (reference.empty()) throw InvalidArgument("WER is undefined for an empty reference");
    return static_cast<double>(edit_distance(reference, hypothesis)) / static_cast<double>(reference.size());
}

struct WeightedF1 {
    double value = 0.0;
    /// A class absent from the ground truth received the count floor of 1.
    bool count_floor_used = false;
};

/// One-vs-rest F1 per class, averaged with weights 1 / max(true count, 1).
/// Classes absent from both lists are excluded.
inline WeightedF1 weighted_f1_detail(const std::vector<std::string>& predicted, const std::vector<std::string>& actual,
                                     const std::vector<std::string>& class_set) {
    if (predicted.size() != actual.size())
        throw InvalidArgument("weighted_f1: predicted and actual lists differ in length");
    const std::set<std::string> classes(class_set.begin(), class_set.end());
    std::map<std::string, std::size_t> tp, fp, fn, count;
    for (std::size_t i = 0; i < actual.size(); ++i) {
        if (!classes.contains(predicted[i])) throw InvalidArgument("weighted_f1: unknown label '" + predicted[i] + "'");
        if (!classes.contains(actual[i])) throw InvalidArgument("weighted_f1: unknown label '" + actual[i] + "'");
        ++count[actual[i]];
        if (predicted[i] == actual[i]) {
            ++tp[actual[i]];
        } else {
            ++fp[predicted[i]];
            ++fn[actual[i]];
        }
    }
    WeightedF1 out;
    double num = 0.0, den = 0.0;
    for (const auto& c : classes) {
        const double t = static_cast<double>(tp[c]);
        const double denom = 2.0 * t + static_cast<double>(fp[c] + fn[c]);
        if (denom == 0.0) continue;
        const std::size_t n = count[c];
        if (n == 0) out.count_floor_used = true;
        const double w = 1.0 / static_cast<double>(std::max<std::size_t>(n, 1));
        num += w * (2.0 * t / denom);
        den += w;
    }
    out.value = den > 0.0 ? num / den : 0.0;
    return out;
}

inline double weighted_f1(const std::vector<std::string>& predicted, const std::vector<std::string>& actual,
                          const std::vector<std::string>& class_set) {
    return weighted_f1_detail(predicted, actual, class_set).value;
}

struct EvaluationReport {
    std::string name;
    double corpus_wer = 0.0;         // pooled over reference words
    double mean_segment_wer = 0.0;   // unweighted mean of per-segment WER
    double weighted_f1 = 0.0;
    bool f1_count_floor_used = false;
    double cost = 0.0;               // absolute, including extra_cost
    double runtime = 0.0;            // absolute, including extra_runtime
    double cost_pct = 0.0;
    double runtime_pct = 0.0;
    std::size_t n_segments = 0;
    std::map<std::string, std::size_t> per_system_selection_counts;
};

inline json report_to_json(const EvaluationReport& r) {
    return {{"name", r.name},
            {"corpus_wer", r.corpus_wer},
            {"mean_segment_wer", r.mean_segment_wer},
            {"weighted_f1", r.weighted_f1},
            {"f1_count_floor_used", r.f1_count_floor_used},
            {"cost", r.cost},
            {"runtime", r.runtime},
            {"cost_pct", r.cost_pct},
            {"runtime_pct", r.runtime_pct},
            {"n_segments", r.n_segments},
            {"selection_counts", r.per_system_selection_counts}};
}

/// (segment id, chosen system id)
using SelectionList = std::vector<std::pair<std::string, std::string>>;

/// Scores a selection policy against the dataset's recorded outcomes.
/// Percentages are relative to running `baseline` on the same segments;
/// `extra_cost`/`extra_runtime` carry overheads such as QE rescoring.
inline EvaluationReport aggregate_report(const SelectionList& decisions, const Dataset& dataset,
                                         const std::string& baseline, double extra_cost = 0.0,
                                         double extra_runtime = 0.0) {
    std::map<std::string, const SegmentRecord*> by_id;
    for (const auto& r : dataset.records) by_id.emplace(r.segment_id, &r);

    EvaluationReport rep;
    for (const auto& s : dataset.schema.systems) rep.per_system_selection_counts[s.id] = 0;
    double errors = 0.0, words = 0.0, wer_sum = 0.0, base_cost = 0.0, base_runtime = 0.0;
    std::vector<std::string> predicted, actual;
    for (const auto& [segment_id, chosen] : decisions) {
        auto it = by_id.find(segment_id);
        if (it == by_id.end()) throw InvalidArgument("decision references unknown segment '" + segment_id + "'");
        const SegmentRecord& r = *it->second;
        const SystemOutcome& o = r.outcome(chosen);
        const SystemOutcome& b = r.outcome(baseline);
        errors += o.wer * r.reference_weight();
        words += r.reference_weight();
        wer_sum += o.wer;
        rep.cost += o.cost;
        rep.runtime += o.runtime;
        base_cost += b.cost;
        base_runtime += b.runtime;
        ++rep.per_system_selection_counts[chosen];
        predicted.push_back(chosen);
        actual.push_back(best_system(r, dataset.schema.systems));
    }
    rep.n_segments = decisions.size();
    rep.cost += extra_cost;
    rep.runtime += extra_runtime;
    if (words > 0.0) {
        rep.corpus_wer = errors / words;
        rep.mean_segment_wer = wer_sum / static_cast<double>(decisions.size());
    }
    const auto f1 = weighted_f1_detail(predicted, actual, dataset.schema.system_ids());
    rep.weighted_f1 = f1.value;
    rep.f1_count_floor_used = f1.count_floor_used;
    rep.cost_pct = base_cost > 0.0 ? 100.0 * rep.cost / base_cost : 0.0;
    rep.runtime_pct = base_runtime > 0.0 ? 100.0 * rep.runtime / base_runtime : 0.0;
    return rep;
}

/// Pooled WER of `selection` (one system id per record, aligned with
/// `dataset.records`).
inline double pooled_wer(const Dataset& dataset, const std::vector<std::string>& selection) {
    double errors = 0.0, words = 0.0;
    for (std::size_t i = 0; i < dataset.records.size(); ++i) {
        const auto& r = dataset.records[i];
        errors += r.outcome(selection.at(i)).wer * r.reference_weight();
        words += r.reference_weight();
    }
    return words > 0.0 ? errors / words : 0.0;
}

inline double pooled_wer(const Dataset& dataset, const std::string& system_id) {
    return pooled_wer(dataset, std::vector<std::string>(dataset.size(), system_id));
}

/// System with the lowest pooled WER when used for every segment; ties go to
/// the cheaper system, then the smaller id.
inline std::string single_best_system(const Dataset& dataset) {
    const SystemProfile* best = nullptr;
    double best_wer = 0.0;
    for (const auto& s : dataset.schema.systems) {
        const double w = pooled_wer(dataset, s.id);
        if (best == nullptr || w < best_wer ||
            (w == best_wer && (s.cost_rate < best->cost_rate || (s.cost_rate == best->cost_rate && s.id < best->id)))) {
            best = &s;
            best_wer = w;
        }
    }
    if (best == nullptr) throw InvalidArgument("dataset has no systems");
    return best->id;
}

}  // namespace automode
