#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <span>
#include <string>
#include <vector>

#include "automode/datamodel.hpp"
#include "automode/error.hpp"

namespace automode {

inline constexpr double kDefaultWeightFloor = 0.01;

/// One-vs-pivot labels: 1 when the challenger should be preferred.
struct PairLabeling {
    std::string challenger_id;
    std::string pivot_id;
    std::vector<std::string> segment_ids;
    std::vector<int> labels;
    std::vector<double> wer_diffs;  // |WER_challenger - WER_pivot|
    std::vector<double> weights;    // filled by sample_weights(); empty until then
    std::size_t positives = 0;
    std::size_t negatives = 0;
    double wer_diff_min = 0.0;
    double wer_diff_max = 0.0;

    std::size_t size() const { return labels.size(); }
};

/// Challenger wins on strictly lower WER; on equal WER the strictly cheaper
/// system (by cost rate) wins, and equal cost falls back to the pivot.
inline int pair_label(double challenger_wer, double pivot_wer, double challenger_cost_rate, double pivot_cost_rate) {
    if (challenger_wer < pivot_wer) return 1;
    if (challenger_wer == pivot_wer && challenger_cost_rate < pivot_cost_rate) return 1;
    return 0;
}

inline PairLabeling make_pair_labels(std::span<const SegmentRecord> records, const SystemProfile& challenger,
                                     const SystemProfile& pivot) {
    PairLabeling out;
    out.challenger_id = challenger.id;
    out.pivot_id = pivot.id;
    out.labels.reserve(records.size());
    for (const auto& r : records) {
        const double wc = r.outcome(challenger.id).wer;
        const double wp = r.outcome(pivot.id).wer;
        const int label = pair_label(wc, wp, challenger.cost_rate, pivot.cost_rate);
        const double diff = std::abs(wc - wp);
        out.segment_ids.push_back(r.segment_id);
        out.labels.push_back(label);
        out.wer_diffs.push_back(diff);
        (label ? out.positives : out.negatives) += 1;
        if (out.labels.size() == 1) {
            out.wer_diff_min = out.wer_diff_max = diff;
        } else {
            out.wer_diff_min = std::min(out.wer_diff_min, diff);
            out.wer_diff_max = std::max(out.wer_diff_max, diff);
        }
    }
    return out;
}

struct WeightOptions {
    bool use_wer_difference = true;
    bool use_inverse_frequency = true;
    double floor = kDefaultWeightFloor;
};

/// w_i = max(|dWER_i| / range, floor) * N / (2 * count(label_i)).
/// The range is max - min of |dWER| over the labeled records; when it is 0
/// the first factor is 1 for every record.
inline std::vector<double> sample_weights(const PairLabeling& labeling, const WeightOptions& opt = {}) {
    const std::size_t n = labeling.size();
    if (n == 0) throw InvalidArgument("sample_weights: empty labeling");
    const double range = labeling.wer_diff_max - labeling.wer_diff_min;
    std::vector<double> w(n, 1.0);
    for (std::size_t i = 0; i < n; ++i) {
        double first = 1.0;
        if (opt.use_wer_difference && range > 0.0) first = std::max(labeling.wer_diffs[i] / range, opt.floor);
        double second = 1.0;
        if (opt.use_inverse_frequency) {
            const std::size_t count = labeling.labels[i] ? labeling.positives : labeling.negatives;
            second = static_cast<double>(n) / (2.0 * static_cast<double>(count));
        }
        w[i] = first * second;
    }
    return w;
}

/// Diagnostic dump, one JSON object per line: segment id, dWER, label, weight.
inline void write_labeling(std::ostream& out, const PairLabeling& labeling) {
    out << json{{"kind", "automode.labeling"},
                {"schema_version", 1},
                {"challenger", labeling.challenger_id},
                {"pivot", labeling.pivot_id}}
               .dump()
        << '\n';
    for (std::size_t i = 0; i < labeling.size(); ++i) {
        json j = {{"segment_id", labeling.segment_ids[i]},
                  {"wer_diff", labeling.wer_diffs[i]},
                  {"label", labeling.labels[i]}};
        j["weight"] = labeling.weights.empty() ? 1.0 : labeling.weights[i];
        out << j.dump() << '\n';
    }
}

}  // namespace automode
