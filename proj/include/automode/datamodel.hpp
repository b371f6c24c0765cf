#pragma once

// Dataset schema, line-delimited JSON persistence and seeded splitting.
//
// Dataset file layout (one JSON object per line):
//   line 1   {"kind":"automode.dataset","schema_version":1,"systems":[...]}
//   line 2+  one SegmentRecord per line, see record_to_json() for the fields.
// Feature dimensions are inferred from the first record and enforced on the
// rest.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "automode/error.hpp"
#include "automode/random.hpp"
#include "automode/text.hpp"

namespace automode {

using json = nlohmann::json;

inline constexpr int kDatasetSchemaVersion = 1;

struct SystemProfile {
    std::string id;
    double cost_rate = 0.0;     // currency per audio-second
    double latency_rate = 0.0;  // wall-seconds per audio-second
    bool is_pivot = false;

    bool operator==(const SystemProfile&) const = default;
};

/// Checks the configuration-level invariants: unique ids, finite
/// non-negative rates, exactly one pivot.
inline void validate_systems(const std::vector<SystemProfile>& systems) {
    if (systems.empty()) throw InvalidArgument("no systems configured");
    std::set<std::string> ids;
    int pivots = 0;
    for (const auto& s : systems) {
        if (s.id.empty()) throw InvalidArgument("system with empty id");
        if (!ids.insert(s.id).second) throw InvalidArgument("duplicate system id '" + s.id + "'");
        if (!std::isfinite(s.cost_rate) || s.cost_rate < 0.0)
            throw InvalidArgument("system '" + s.id + "': cost_rate must be finite and >= 0");
        if (!std::isfinite(s.latency_rate) || s.latency_rate < 0.0)
            throw InvalidArgument("system '" + s.id + "': latency_rate must be finite and >= 0");
        pivots += s.is_pivot ? 1 : 0;
    }
    if (pivots != 1)
        throw InvalidArgument("exactly one system must be the pivot (found " + std::to_string(pivots) + ")");
}

inline const SystemProfile& pivot_of(const std::vector<SystemProfile>& systems) {
    for (const auto& s : systems)
        if (s.is_pivot) return s;
    throw InvalidArgument("no pivot system configured");
}

inline const SystemProfile& find_system(const std::vector<SystemProfile>& systems, const std::string& id) {
    for (const auto& s : systems)
        if (s.id == id) return s;
    throw InvalidArgument("unknown system id '" + id + "'");
}

struct SystemOutcome {
    std::optional<std::string> hypothesis;
    double wer = 0.0;
    double cost = 0.0;
    double runtime = 0.0;

    bool operator==(const SystemOutcome&) const = default;
};

inline constexpr std::size_t kConfidenceStats = 7;
using ConfidenceStats = std::array<double, kConfidenceStats>;

/// Per-segment feature groups. Empty vectors mean the group is absent from
/// the dataset. `confidence_stats` holds nullopt when the upstream ASR
/// emitted no tokens; `has_confidence` tells whether the group exists at all.
struct FeatureBundle {
    std::vector<double> audio_embedding;
    std::vector<double> asr_embedding;
    bool has_confidence = false;
    std::optional<ConfidenceStats> confidence_stats;
    std::optional<double> qe_score;
    std::vector<double> qe_embedding;
    std::vector<double> signal_props;

    bool operator==(const FeatureBundle&) const = default;
};

struct SegmentRecord {
    std::string segment_id;
    std::string language;
    double duration = 0.0;
    FeatureBundle features;
    std::map<std::string, SystemOutcome> outcomes;
    Tokens reference;
    std::optional<std::string> planted_best;  // set by the synthetic generator

    const SystemOutcome& outcome(const std::string& system_id) const {
        auto it = outcomes.find(system_id);
        if (it == outcomes.end())
            throw InvalidArgument("segment '" + segment_id + "' has no outcome for system '" + system_id + "'");
        return it->second;
    }

    /// Reference word count used for pooled WER; segments without a
    /// reference count as one word.
    double reference_weight() const { return reference.empty() ? 1.0 : static_cast<double>(reference.size()); }

    bool operator==(const SegmentRecord&) const = default;
};

/// Feature-group dimensionalities of a dataset (0 / false = group absent).
struct FeatureDims {
    std::size_t audio_embedding = 0;
    std::size_t asr_embedding = 0;
    bool confidence_stats = false;
    bool qe_score = false;
    std::size_t qe_embedding = 0;
    std::size_t signal_props = 0;

    bool operator==(const FeatureDims&) const = default;

    static FeatureDims of(const FeatureBundle& f) {
        return {f.audio_embedding.size(), f.asr_embedding.size(), f.has_confidence,
                f.qe_score.has_value(),   f.qe_embedding.size(),  f.signal_props.size()};
    }
};

struct DatasetSchema {
    FeatureDims dims;
    std::vector<SystemProfile> systems;

    std::vector<std::string> system_ids() const {
        std::vector<std::string> ids;
        for (const auto& s : systems) ids.push_back(s.id);
        return ids;
    }
};

struct Dataset {
    DatasetSchema schema;
    std::vector<SegmentRecord> records;

    std::size_t size() const { return records.size(); }
    bool empty() const { return records.empty(); }
    const SystemProfile& pivot() const { return pivot_of(schema.systems); }

    /// Subset sharing this dataset's schema.
    Dataset subset(const std::vector<std::size_t>& indices) const {
        Dataset out{schema, {}};
        out.records.reserve(indices.size());
        for (auto i : indices) out.records.push_back(records.at(i));
        return out;
    }
};

/// True per-segment best system: lowest WER, then lowest cost rate, then id.
inline const std::string& best_system(const SegmentRecord& record, const std::vector<SystemProfile>& systems) {
    const SystemProfile* best = nullptr;
    double best_wer = 0.0;
    for (const auto& s : systems) {
        const double w = record.outcome(s.id).wer;
        if (best == nullptr || w < best_wer ||
            (w == best_wer && (s.cost_rate < best->cost_rate || (s.cost_rate == best->cost_rate && s.id < best->id)))) {
            best = &s;
            best_wer = w;
        }
    }
    if (best == nullptr) throw InvalidArgument("no systems configured");
    return best->id;
}

// ---------------------------------------------------------------------------
// JSON conversion

inline json system_to_json(const SystemProfile& s) {
    return {{"id", s.id}, {"cost_rate", s.cost_rate}, {"latency_rate", s.latency_rate}, {"pivot", s.is_pivot}};
}

inline SystemProfile system_from_json(const json& j) {
    SystemProfile s;
    s.id = j.at("id").get<std::string>();
    s.cost_rate = j.at("cost_rate").get<double>();
    s.latency_rate = j.at("latency_rate").get<double>();
    s.is_pivot = j.value("pivot", false);
    return s;
}

inline json record_to_json(const SegmentRecord& r) {
    json features = json::object();
    const auto& f = r.features;
    if (!f.audio_embedding.empty()) features["audio_embedding"] = f.audio_embedding;
    if (!f.asr_embedding.empty()) features["asr_embedding"] = f.asr_embedding;
    if (f.has_confidence)
        features["confidence_stats"] = f.confidence_stats ? json(*f.confidence_stats) : json(nullptr);
    if (f.qe_score) features["qe_score"] = *f.qe_score;
    if (!f.qe_embedding.empty()) features["qe_embedding"] = f.qe_embedding;
    if (!f.signal_props.empty()) features["signal_props"] = f.signal_props;

    json outcomes = json::object();
    for (const auto& [id, o] : r.outcomes) {
        json jo = {{"wer", o.wer}, {"cost", o.cost}, {"runtime", o.runtime}};
        if (o.hypothesis) jo["hypothesis"] = *o.hypothesis;
        outcomes[id] = std::move(jo);
    }
    json j = {{"segment_id", r.segment_id},
              {"language", r.language},
              {"duration", r.duration},
              {"features", std::move(features)},
              {"outcomes", std::move(outcomes)}};
    if (!r.reference.empty()) j["reference"] = r.reference;
    if (r.planted_best) j["planted_best"] = *r.planted_best;
    return j;
}

namespace detail {

inline std::vector<double> real_vector(const json& j, const char* field) {
    if (!j.is_array()) throw ParseError(std::string("field '") + field + "' must be an array of reals");
    std::vector<double> v;
    v.reserve(j.size());
    for (const auto& x : j) {
        if (!x.is_number()) throw ParseError(std::string("field '") + field + "' must contain only numbers");
        v.push_back(x.get<double>());
    }
    return v;
}

}  // namespace detail

/// Parses one record. Outcomes lacking cost/runtime derive them from the
/// system rates and the segment duration.
inline SegmentRecord record_from_json(const json& j, const std::vector<SystemProfile>& systems) {
    SegmentRecord r;
    r.segment_id = j.at("segment_id").get<std::string>();
    r.language = j.value("language", std::string{});
    r.duration = j.at("duration").get<double>();
    if (!(r.duration > 0.0) || !std::isfinite(r.duration))
        throw ParseError("segment '" + r.segment_id + "': duration must be > 0");

    const json f = j.value("features", json::object());
    auto& fb = r.features;
    if (f.contains("audio_embedding")) fb.audio_embedding = detail::real_vector(f["audio_embedding"], "audio_embedding");
    if (f.contains("asr_embedding")) fb.asr_embedding = detail::real_vector(f["asr_embedding"], "asr_embedding");
    if (f.contains("confidence_stats")) {
        fb.has_confidence = true;
        if (!f["confidence_stats"].is_null()) {
            auto v = detail::real_vector(f["confidence_stats"], "confidence_stats");
            if (v.size() != kConfidenceStats)
                throw SchemaError("segment '" + r.segment_id + "': confidence_stats must have 7 values, got " +
                                  std::to_string(v.size()));
            ConfidenceStats stats{};
            std::copy(v.begin(), v.end(), stats.begin());
            fb.confidence_stats = stats;
        }
    }
    if (f.contains("qe_score")) fb.qe_score = f["qe_score"].get<double>();
    if (f.contains("qe_embedding")) fb.qe_embedding = detail::real_vector(f["qe_embedding"], "qe_embedding");
    if (f.contains("signal_props")) fb.signal_props = detail::real_vector(f["signal_props"], "signal_props");

    const json outcomes = j.value("outcomes", json::object());
    for (const auto& [id, jo] : outcomes.items()) {
        const SystemProfile* profile = nullptr;
        for (const auto& s : systems)
            if (s.id == id) profile = &s;
        if (profile == nullptr)
            throw SchemaError("segment '" + r.segment_id + "': outcome for unknown system id '" + id + "'");
        SystemOutcome o;
        o.wer = jo.at("wer").get<double>();
        if (!(o.wer >= 0.0) || !std::isfinite(o.wer))
            throw ParseError("segment '" + r.segment_id + "': wer must be finite and >= 0");
        o.cost = jo.contains("cost") ? jo["cost"].get<double>() : r.duration * profile->cost_rate;
        o.runtime = jo.contains("runtime") ? jo["runtime"].get<double>() : r.duration * profile->latency_rate;
        if (jo.contains("hypothesis") && !jo["hypothesis"].is_null()) o.hypothesis = jo["hypothesis"].get<std::string>();
        r.outcomes.emplace(id, std::move(o));
    }

    if (j.contains("reference")) {
        const json& ref = j["reference"];
        if (ref.is_string())
            r.reference = normalize_text(ref.get<std::string>());
        else
            r.reference = ref.get<Tokens>();
    }
    if (j.contains("planted_best")) r.planted_best = j["planted_best"].get<std::string>();
    return r;
}

inline json dataset_header(const DatasetSchema& schema) {
    json systems = json::array();
    for (const auto& s : schema.systems) systems.push_back(system_to_json(s));
    return {{"kind", "automode.dataset"}, {"schema_version", kDatasetSchemaVersion}, {"systems", std::move(systems)}};
}

namespace detail {

inline void check_dims(const SegmentRecord& r, const FeatureDims& expected, std::size_t line) {
    const FeatureDims got = FeatureDims::of(r.features);
    auto fail = [&](const std::string& field, const std::string& want, const std::string& have) {
        throw SchemaError("line " + std::to_string(line) + ", segment '" + r.segment_id + "': field '" + field +
                          "' has " + have + ", schema expects " + want);
    };
    auto dims = [](std::size_t n) { return std::to_string(n) + " dims"; };
    auto presence = [](bool b) { return std::string(b ? "present" : "absent"); };
    if (got.audio_embedding != expected.audio_embedding)
        fail("audio_embedding", dims(expected.audio_embedding), dims(got.audio_embedding));
    if (got.asr_embedding != expected.asr_embedding)
        fail("asr_embedding", dims(expected.asr_embedding), dims(got.asr_embedding));
    if (got.confidence_stats != expected.confidence_stats)
        fail("confidence_stats", presence(expected.confidence_stats), presence(got.confidence_stats));
    if (got.qe_score != expected.qe_score) fail("qe_score", presence(expected.qe_score), presence(got.qe_score));
    if (got.qe_embedding != expected.qe_embedding)
        fail("qe_embedding", dims(expected.qe_embedding), dims(got.qe_embedding));
    if (got.signal_props != expected.signal_props)
        fail("signal_props", dims(expected.signal_props), dims(got.signal_props));
}

}  // namespace detail

/// Reads a dataset file. `systems` overrides the profiles in the header when
/// non-empty. An empty file yields an empty dataset over `systems`.
inline Dataset read_dataset(std::istream& in, std::vector<SystemProfile> systems = {},
                            FeatureDims default_dims = {}) {
    Dataset ds;
    std::string line;
    std::size_t line_no = 0;
    bool header_seen = false;
    std::set<std::string> seen_ids;
    bool dims_fixed = false;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::parse_error& e) {
            throw ParseError("line " + std::to_string(line_no) + ": malformed record: " + e.what());
        }
        try {
            if (!header_seen) {
                header_seen = true;
                if (j.value("kind", std::string{}) == "automode.dataset") {
                    const int version = j.value("schema_version", -1);
                    if (version != kDatasetSchemaVersion)
                        throw VersionError("line " + std::to_string(line_no) + ": unsupported dataset schema_version " +
                                           std::to_string(version));
                    if (systems.empty())
                        for (const auto& js : j.value("systems", json::array()))
                            systems.push_back(system_from_json(js));
                    continue;
                }
            }
            SegmentRecord r = record_from_json(j, systems);
            if (!dims_fixed) {
                ds.schema.dims = FeatureDims::of(r.features);
                dims_fixed = true;
            }
            detail::check_dims(r, ds.schema.dims, line_no);
            if (!seen_ids.insert(r.segment_id).second)
                throw SchemaError("line " + std::to_string(line_no) + ": duplicate segment_id '" + r.segment_id + "'");
            ds.records.push_back(std::move(r));
        } catch (const json::exception& e) {
            throw ParseError("line " + std::to_string(line_no) + ": " + e.what());
        } catch (const SchemaError&) {
            throw;
        } catch (const VersionError&) {
            throw;
        } catch (const Error& e) {
            std::string what = e.what();
            if (what.rfind("line ", 0) != 0) what = "line " + std::to_string(line_no) + ": " + what;
            throw ParseError(what);
        }
    }
    if (!dims_fixed) ds.schema.dims = default_dims;
    ds.schema.systems = std::move(systems);
    if (!ds.schema.systems.empty()) validate_systems(ds.schema.systems);
    return ds;
}

inline Dataset load_dataset(const std::string& path, std::vector<SystemProfile> systems = {},
                            FeatureDims default_dims = {}) {
    std::ifstream in(path);
    if (!in) throw InvalidArgument("cannot open dataset file '" + path + "'");
    return read_dataset(in, std::move(systems), default_dims);
}

inline void write_dataset(std::ostream& out, const Dataset& ds) {
    out << dataset_header(ds.schema).dump() << '\n';
    for (const auto& r : ds.records) out << record_to_json(r).dump() << '\n';
}

inline void save_dataset(const std::string& path, const Dataset& ds) {
    std::ofstream out(path);
    if (!out) throw InvalidArgument("cannot write dataset file '" + path + "'");
    write_dataset(out, ds);
}

// ---------------------------------------------------------------------------
// Splitting

struct DatasetSplit {
    Dataset train;
    Dataset valid;
    Dataset test;
};

/// Seeded uniform shuffle, then subsets of size round(r0*n), round(r1*n) and
/// the remainder. Each subset keeps the original record order.
inline DatasetSplit split_dataset(const Dataset& ds, std::array<double, 3> ratios, std::uint64_t seed) {
    double sum = 0.0;
    for (double r : ratios) {
        if (!(r > 0.0) || !std::isfinite(r)) throw InvalidArgument("split ratios must be positive");
        sum += r;
    }
    if (std::abs(sum - 1.0) > 1e-9) throw InvalidArgument("split ratios must sum to 1");

    const std::size_t n = ds.size();
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    Rng rng(seed);
    shuffle(std::span<std::size_t>(order), rng);

    const auto n_train = std::min(n, static_cast<std::size_t>(std::llround(ratios[0] * static_cast<double>(n))));
    const auto n_valid =
        std::min(n - n_train, static_cast<std::size_t>(std::llround(ratios[1] * static_cast<double>(n))));

    auto take = [&](std::size_t from, std::size_t to) {
        std::vector<std::size_t> idx(order.begin() + static_cast<std::ptrdiff_t>(from),
                                     order.begin() + static_cast<std::ptrdiff_t>(to));
        std::sort(idx.begin(), idx.end());
        return ds.subset(idx);
    };
    return {take(0, n_train), take(n_train, n_train + n_valid), take(n_train + n_valid, n)};
}

}  // namespace automode
