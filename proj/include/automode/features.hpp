#pragma once

// Flat feature vectors for the pairwise classifiers.
//
// Group order (fixed):
//   audio_embedding | language one-hot (+unknown) | asr_embedding |
//   confidence_stats (7 stats + missing flag) | qe_score | qe_embedding |
//   signal_props
// Disabled groups contribute no columns.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <map>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "automode/datamodel.hpp"
#include "automode/error.hpp"
#include "automode/matrix.hpp"
#include "automode/random.hpp"

namespace automode {

// ---------------------------------------------------------------------------
// Confidence summary

enum class ConfidenceMode {
    Probability,  // statistics over exp(logprob)
    LogProb,      // statistics over raw log-probabilities
};

/// Type-7 quantile (linear interpolation between order statistics) of a
/// sorted, non-empty sample.
inline double quantile_sorted(std::span<const double> sorted, double q) {
    const double h = (static_cast<double>(sorted.size()) - 1.0) * q;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

/// (mean, population std, min, Q1, median, Q3, max) of per-token confidences.
inline ConfidenceStats confidence_summary(std::span<const double> token_logprobs,
                                          ConfidenceMode mode = ConfidenceMode::Probability) {
    if (token_logprobs.empty()) throw InvalidArgument("confidence_summary: empty token list");
    std::vector<double> v;
    v.reserve(token_logprobs.size());
    for (double lp : token_logprobs) {
        if (std::isnan(lp) || lp > 0.0) throw InvalidArgument("confidence_summary: log-probabilities must be <= 0");
        v.push_back(mode == ConfidenceMode::Probability ? std::exp(lp) : lp);
    }
    std::sort(v.begin(), v.end());
    const double n = static_cast<double>(v.size());
    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= n;
    double var = 0.0;
    for (double x : v) var += (x - mean) * (x - mean);
    var /= n;
    // Rounding can push the mean a hair outside [min, max] for constant input.
    mean = std::clamp(mean, v.front(), v.back());
    return {mean,
            std::sqrt(var),
            v.front(),
            quantile_sorted(v, 0.25),
            quantile_sorted(v, 0.5),
            quantile_sorted(v, 0.75),
            v.back()};
}

// ---------------------------------------------------------------------------
// Signal properties

inline constexpr std::size_t kSignalProps = 6;
inline constexpr std::array<const char*, kSignalProps> kSignalPropNames = {
    "duration_s", "rms_energy", "zero_crossing_rate", "peak_amplitude", "silence_ratio", "spectral_centroid_proxy"};
using SignalProps = std::array<double, kSignalProps>;

inline constexpr double kSilenceFrameSeconds = 0.02;
inline constexpr double kSilenceRms = 0.01;

/// Cheap signal descriptors of a mono clip with samples in [-1, 1].
///
/// zero_crossing_rate counts sign flips between consecutive non-zero samples
/// per second. silence_ratio is the fraction of 20 ms frames (the last one
/// possibly partial) whose RMS is below 0.01. spectral_centroid_proxy is the
/// energy-weighted mean of per-frame crossing rates divided by two, which is
/// the frequency of a pure tone; it is 0 for an all-zero clip.
inline SignalProps signal_properties(std::span<const double> pcm, double sample_rate) {
    if (!(sample_rate > 0.0)) throw InvalidArgument("signal_properties: sample_rate must be > 0");
    if (pcm.empty()) throw InvalidArgument("signal_properties: empty sample sequence");
    const std::size_t n = pcm.size();
    const double duration = static_cast<double>(n) / sample_rate;

    double sum_sq = 0.0, peak = 0.0;
    std::size_t crossings = 0;
    int last_sign = 0;
    for (double x : pcm) {
        sum_sq += x * x;
        peak = std::max(peak, std::abs(x));
        const int s = (x > 0.0) - (x < 0.0);
        if (s != 0) {
            if (last_sign != 0 && s != last_sign) ++crossings;
            last_sign = s;
        }
    }

    const auto frame_len = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(kSilenceFrameSeconds * sample_rate)));
    std::size_t frames = 0, silent = 0;
    double weighted_rate = 0.0, total_energy = 0.0;
    for (std::size_t start = 0; start < n; start += frame_len) {
        const std::size_t end = std::min(n, start + frame_len);
        double e = 0.0;
        std::size_t fc = 0;
        int fs = 0;
        for (std::size_t i = start; i < end; ++i) {
            e += pcm[i] * pcm[i];
            const int s = (pcm[i] > 0.0) - (pcm[i] < 0.0);
            if (s != 0) {
                if (fs != 0 && s != fs) ++fc;
                fs = s;
            }
        }
        const double len = static_cast<double>(end - start);
        ++frames;
        if (std::sqrt(e / len) < kSilenceRms) ++silent;
        weighted_rate += e * (static_cast<double>(fc) * sample_rate / len);
        total_energy += e;
    }

    return {duration,
            std::sqrt(sum_sq / static_cast<double>(n)),
            static_cast<double>(crossings) / duration,
            peak,
            static_cast<double>(silent) / static_cast<double>(frames),
            total_energy > 0.0 ? weighted_rate / total_energy / 2.0 : 0.0};
}

// ---------------------------------------------------------------------------
// Feature schema

enum class FeatureGroup { AudioEmbedding, Language, AsrEmbedding, ConfidenceStats, QeScore, QeEmbedding, SignalProps };

inline constexpr std::array<FeatureGroup, 7> kGroupOrder = {
    FeatureGroup::AudioEmbedding, FeatureGroup::Language,    FeatureGroup::AsrEmbedding, FeatureGroup::ConfidenceStats,
    FeatureGroup::QeScore,        FeatureGroup::QeEmbedding, FeatureGroup::SignalProps};

inline const char* group_name(FeatureGroup g) {
    switch (g) {
        case FeatureGroup::AudioEmbedding: return "audio_embedding";
        case FeatureGroup::Language: return "language";
        case FeatureGroup::AsrEmbedding: return "asr_embedding";
        case FeatureGroup::ConfidenceStats: return "confidence_stats";
        case FeatureGroup::QeScore: return "qe_score";
        case FeatureGroup::QeEmbedding: return "qe_embedding";
        case FeatureGroup::SignalProps: return "signal_props";
    }
    return "?";
}

inline FeatureGroup group_from_name(const std::string& name) {
    for (auto g : kGroupOrder)
        if (name == group_name(g)) return g;
    throw ParseError("unknown feature group '" + name + "'");
}

/// Ablation switches over the coarse groups: audio = audio embedding,
/// asr = ASR embedding + confidence, qe = QE score + QE embedding.
struct FeatureToggles {
    bool audio = true;
    bool language = true;
    bool asr = true;
    bool qe = true;
    bool signal = true;

    bool allows(FeatureGroup g) const {
        switch (g) {
            case FeatureGroup::AudioEmbedding: return audio;
            case FeatureGroup::Language: return language;
            case FeatureGroup::AsrEmbedding:
            case FeatureGroup::ConfidenceStats: return asr;
            case FeatureGroup::QeScore:
            case FeatureGroup::QeEmbedding: return qe;
            case FeatureGroup::SignalProps: return signal;
        }
        return false;
    }
};

struct GroupSpec {
    FeatureGroup group;
    std::size_t dim = 0;
    bool enabled = false;

    bool operator==(const GroupSpec&) const = default;
};

class FeatureSchema {
public:
    FeatureSchema() = default;
    FeatureSchema(std::vector<GroupSpec> groups, std::vector<std::string> languages)
        : groups_(std::move(groups)), languages_(std::move(languages)) {
        check();
    }

    /// Schema over every group present in `ds`, filtered by `toggles`. The
    /// language vocabulary is the sorted set of languages seen in `ds`.
    static FeatureSchema for_dataset(const Dataset& ds, const FeatureToggles& toggles = {}) {
        std::set<std::string> langs;
        for (const auto& r : ds.records)
            if (!r.language.empty()) langs.insert(r.language);
        return from_dims(ds.schema.dims, {langs.begin(), langs.end()}, toggles);
    }

    static FeatureSchema from_dims(const FeatureDims& d, std::vector<std::string> languages,
                                   const FeatureToggles& toggles = {}) {
        std::vector<GroupSpec> groups;
        for (auto g : kGroupOrder) {
            std::size_t dim = 0;
            switch (g) {
                case FeatureGroup::AudioEmbedding: dim = d.audio_embedding; break;
                case FeatureGroup::Language: dim = languages.size() + 1; break;
                case FeatureGroup::AsrEmbedding: dim = d.asr_embedding; break;
                case FeatureGroup::ConfidenceStats: dim = d.confidence_stats ? kConfidenceStats + 1 : 0; break;
                case FeatureGroup::QeScore: dim = d.qe_score ? 1 : 0; break;
                case FeatureGroup::QeEmbedding: dim = d.qe_embedding; break;
                case FeatureGroup::SignalProps: dim = d.signal_props; break;
            }
            groups.push_back({g, dim, dim > 0 && toggles.allows(g)});
        }
        return FeatureSchema(std::move(groups), std::move(languages));
    }

    const std::vector<GroupSpec>& groups() const { return groups_; }
    const std::vector<std::string>& languages() const { return languages_; }

    std::size_t total_dim() const {
        std::size_t n = 0;
        for (const auto& g : groups_)
            if (g.enabled) n += g.dim;
        return n;
    }

    bool enabled(FeatureGroup g) const {
        for (const auto& s : groups_)
            if (s.group == g) return s.enabled;
        return false;
    }

    /// Column range [first, first + count) of an enabled group.
    std::pair<std::size_t, std::size_t> range(FeatureGroup g) const {
        std::size_t off = 0;
        for (const auto& s : groups_) {
            if (!s.enabled) continue;
            if (s.group == g) return {off, s.dim};
            off += s.dim;
        }
        return {off, 0};
    }

    /// (group, offset within group) of a column.
    std::pair<FeatureGroup, std::size_t> locate(std::size_t index) const {
        std::size_t off = 0;
        for (const auto& s : groups_) {
            if (!s.enabled) continue;
            if (index < off + s.dim) return {s.group, index - off};
            off += s.dim;
        }
        throw InvalidArgument("feature index " + std::to_string(index) + " out of range");
    }

    std::string feature_name(std::size_t index) const {
        const auto [g, k] = locate(index);
        static const std::array<const char*, kConfidenceStats + 1> conf = {"mean", "std", "min",  "q1",
                                                                           "median", "q3", "max", "missing"};
        switch (g) {
            case FeatureGroup::Language:
                return std::string("language=") + (k < languages_.size() ? languages_[k] : "<unknown>");
            case FeatureGroup::ConfidenceStats: return std::string("confidence_stats.") + conf[k];
            case FeatureGroup::QeScore: return "qe_score";
            case FeatureGroup::SignalProps:
                if (k < kSignalProps) return std::string("signal_props.") + kSignalPropNames[k];
                [[fallthrough]];
            default: return std::string(group_name(g)) + "[" + std::to_string(k) + "]";
        }
    }

    json to_json() const {
        json groups = json::array();
        for (const auto& g : groups_) groups.push_back({{"group", group_name(g.group)}, {"dim", g.dim}, {"enabled", g.enabled}});
        return {{"groups", std::move(groups)}, {"languages", languages_}};
    }

    static FeatureSchema from_json(const json& j) {
        std::vector<GroupSpec> groups;
        for (const auto& g : j.at("groups"))
            groups.push_back({group_from_name(g.at("group").get<std::string>()), g.at("dim").get<std::size_t>(),
                              g.at("enabled").get<bool>()});
        return FeatureSchema(std::move(groups), j.at("languages").get<std::vector<std::string>>());
    }

    /// Fingerprint of groups, dims, enabled flags and vocabulary.
    std::string hash() const {
        char buf[17];
        std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(to_json().dump())));
        return buf;
    }

    bool operator==(const FeatureSchema&) const = default;

private:
    void check() const {
        if (groups_.size() != kGroupOrder.size()) throw SchemaError("feature schema must list all 7 groups");
        for (std::size_t i = 0; i < groups_.size(); ++i)
            if (groups_[i].group != kGroupOrder[i]) throw SchemaError("feature schema groups out of order");
    }

    std::vector<GroupSpec> groups_;
    std::vector<std::string> languages_;
};

namespace detail {

inline void append_group(std::vector<double>& out, const std::vector<double>& values, std::size_t dim,
                         FeatureGroup g, const SegmentRecord& r) {
    if (values.size() != dim)
        throw SchemaError("segment '" + r.segment_id + "': group '" + group_name(g) + "' has " +
                          std::to_string(values.size()) + " dims, schema expects " + std::to_string(dim));
    out.insert(out.end(), values.begin(), values.end());
}

}  // namespace detail

/// Flat feature vector of `record` under `schema`. Languages outside the
/// vocabulary set the trailing "unknown" slot.
inline std::vector<double> assemble(const SegmentRecord& record, const FeatureSchema& schema) {
    std::vector<double> out;
    out.reserve(schema.total_dim());
    const auto& f = record.features;
    for (const auto& spec : schema.groups()) {
        if (!spec.enabled) continue;
        switch (spec.group) {
            case FeatureGroup::AudioEmbedding:
                detail::append_group(out, f.audio_embedding, spec.dim, spec.group, record);
                break;
            case FeatureGroup::Language: {
                const auto& vocab = schema.languages();
                auto it = std::find(vocab.begin(), vocab.end(), record.language);
                const auto hot = static_cast<std::size_t>(it - vocab.begin());
                for (std::size_t k = 0; k < spec.dim; ++k) out.push_back(k == hot ? 1.0 : 0.0);
                break;
            }
            case FeatureGroup::AsrEmbedding:
                detail::append_group(out, f.asr_embedding, spec.dim, spec.group, record);
                break;
            case FeatureGroup::ConfidenceStats:
                if (!f.has_confidence)
                    throw SchemaError("segment '" + record.segment_id + "': enabled group 'confidence_stats' is missing");
                if (f.confidence_stats) {
                    out.insert(out.end(), f.confidence_stats->begin(), f.confidence_stats->end());
                    out.push_back(0.0);
                } else {
                    out.insert(out.end(), kConfidenceStats, 0.0);
                    out.push_back(1.0);
                }
                break;
            case FeatureGroup::QeScore:
                if (!f.qe_score) throw SchemaError("segment '" + record.segment_id + "': enabled group 'qe_score' is missing");
                out.push_back(*f.qe_score);
                break;
            case FeatureGroup::QeEmbedding:
                detail::append_group(out, f.qe_embedding, spec.dim, spec.group, record);
                break;
            case FeatureGroup::SignalProps:
                detail::append_group(out, f.signal_props, spec.dim, spec.group, record);
                break;
        }
    }
    return out;
}

inline Matrix assemble_matrix(const Dataset& ds, const FeatureSchema& schema) {
    Matrix m(ds.size(), schema.total_dim());
    for (std::size_t i = 0; i < ds.size(); ++i) {
        const auto row = assemble(ds.records[i], schema);
        std::copy(row.begin(), row.end(), m.row(i).begin());
    }
    return m;
}

}  // namespace automode
