#pragma once

// Planted-rule dataset generator. A latent vector z ~ N(0, I) drives each
// system's WER through a linear rule,
//   wer_s = max(0, base_s + slope_s . z + noise * U(-1, 1)),
// and its first latent_dim - hidden_latent entries are copied (optionally
// perturbed) into the leading columns of the feature groups listed in
// `latent_groups`. Every other feature column is independent noise, so a
// router can only win by recovering the observed part of z.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "automode/datamodel.hpp"
#include "automode/error.hpp"
#include "automode/features.hpp"
#include "automode/metrics.hpp"
#include "automode/random.hpp"

namespace automode {

struct PlantedSystem {
    SystemProfile profile;
    double base_wer = 0.2;
    std::vector<double> slope;  // length latent_dim (shorter = zero-padded)
};

struct GeneratorConfig {
    std::size_t n_segments = 1000;
    std::vector<PlantedSystem> systems;
    double noise = 0.0;
    std::size_t latent_dim = 4;
    /// Trailing latent dimensions that drive WER but never reach a feature.
    std::size_t hidden_latent = 0;
    FeatureDims dims{8, 8, true, true, 8, kSignalProps};
    std::vector<std::string> latent_groups = {"audio", "asr", "qe"};
    double feature_noise = 0.0;
    std::vector<std::string> languages = {"en", "fr", "es", "de", "ru"};
    /// Emit reference/hypothesis text; WER then becomes the measured
    /// edit-distance ratio of the generated hypothesis.
    bool emit_text = false;
    int min_reference_words = 8;
    int max_reference_words = 24;
    double min_duration = 1.0;
    double max_duration = 10.0;

    std::vector<SystemProfile> profiles() const {
        std::vector<SystemProfile> out;
        for (const auto& s : systems) out.push_back(s.profile);
        return out;
    }

    bool carries(const std::string& group) const {
        return std::find(latent_groups.begin(), latent_groups.end(), group) != latent_groups.end();
    }

    void validate() const {
        if (n_segments == 0) throw InvalidArgument("generator: n_segments must be > 0");
        if (systems.size() < 2) throw InvalidArgument("generator: need at least two systems");
        validate_systems(profiles());
        if (latent_dim == 0) throw InvalidArgument("generator: latent_dim must be > 0");
        if (hidden_latent >= latent_dim) throw InvalidArgument("generator: hidden_latent must be < latent_dim");
        if (!(noise >= 0.0) || !(feature_noise >= 0.0)) throw InvalidArgument("generator: noise levels must be >= 0");
        for (const auto& s : systems)
            if (s.slope.size() > latent_dim)
                throw InvalidArgument("generator: slope of '" + s.profile.id + "' longer than latent_dim");
        for (const auto& g : latent_groups)
            if (g != "audio" && g != "asr" && g != "qe")
                throw InvalidArgument("generator: latent group must be audio, asr or qe, got '" + g + "'");
        auto fits = [&](std::size_t dim) { return dim == 0 || dim >= latent_dim; };
        if (!fits(dims.audio_embedding) || !fits(dims.asr_embedding) || !fits(dims.qe_embedding))
            throw InvalidArgument("generator: embedding dims must be 0 or >= latent_dim");
        if (dims.signal_props != 0 && dims.signal_props != kSignalProps)
            throw InvalidArgument("generator: signal_props must have 0 or 6 dims");
        if (min_reference_words < 1 || max_reference_words < min_reference_words)
            throw InvalidArgument("generator: invalid reference length range");
        if (!(min_duration > 0.0) || max_duration < min_duration)
            throw InvalidArgument("generator: invalid duration range");
        if (languages.empty()) throw InvalidArgument("generator: no languages");
    }
};

/// Four systems mirroring a commercial line-up: a cheap pivot that is near
/// perfect on easy segments, two mid-priced systems with their own niches, and
/// an expensive system that rarely errs except on one axis of its own.
///
/// `noise_level` scales the per-segment WER noise, the feature noise and the
/// pivot's dependence on a latent the features never see. At 0 the best
/// system is a deterministic function of the features.
inline GeneratorConfig benchmark_generator(double noise_level = 1.0, std::size_t n_segments = 23000) {
    GeneratorConfig c;
    c.n_segments = n_segments;
    c.noise = 0.05 * noise_level;
    c.feature_noise = 0.5 * noise_level;
    c.latent_dim = 5;
    c.hidden_latent = 1;
    c.emit_text = true;
    const double h = 0.12 * noise_level;
    c.systems = {
        {{"pivot", 0.1, 0.05, true}, 0.02, {0.10, 0.0, 0.0, 0.0, h}},
        {{"A", 1.0, 0.3, false}, 0.06, {0.10, -0.08, 0.0, 0.0, h}},
        {{"B", 1.2, 0.35, false}, 0.06, {0.10, 0.0, -0.08, 0.0, h}},
        {{"C", 4.0, 1.0, false}, -0.01, {0.02, 0.0, 0.0, 0.15, 0.0}},
    };
    return c;
}

inline json generator_config_to_json(const GeneratorConfig& c) {
    json systems = json::array();
    for (const auto& s : c.systems) {
        json js = system_to_json(s.profile);
        js["base_wer"] = s.base_wer;
        js["slope"] = s.slope;
        systems.push_back(std::move(js));
    }
    return {{"n_segments", c.n_segments},
            {"systems", std::move(systems)},
            {"noise", c.noise},
            {"latent_dim", c.latent_dim},
            {"hidden_latent", c.hidden_latent},
            {"dims",
             {{"audio_embedding", c.dims.audio_embedding},
              {"asr_embedding", c.dims.asr_embedding},
              {"confidence_stats", c.dims.confidence_stats},
              {"qe_score", c.dims.qe_score},
              {"qe_embedding", c.dims.qe_embedding},
              {"signal_props", c.dims.signal_props}}},
            {"latent_groups", c.latent_groups},
            {"feature_noise", c.feature_noise},
            {"languages", c.languages},
            {"emit_text", c.emit_text},
            {"reference_words", {c.min_reference_words, c.max_reference_words}},
            {"duration", {c.min_duration, c.max_duration}}};
}

inline GeneratorConfig generator_config_from_json(const json& j) {
    try {
        GeneratorConfig c;
        c.n_segments = j.value("n_segments", c.n_segments);
        c.systems.clear();
        for (const auto& js : j.at("systems")) {
            PlantedSystem s;
            s.profile = system_from_json(js);
            s.base_wer = js.value("base_wer", s.base_wer);
            s.slope = js.value("slope", std::vector<double>{});
            c.systems.push_back(std::move(s));
        }
        c.noise = j.value("noise", c.noise);
        c.latent_dim = j.value("latent_dim", c.latent_dim);
        c.hidden_latent = j.value("hidden_latent", c.hidden_latent);
        if (j.contains("dims")) {
            const json& d = j["dims"];
            c.dims.audio_embedding = d.value("audio_embedding", c.dims.audio_embedding);
            c.dims.asr_embedding = d.value("asr_embedding", c.dims.asr_embedding);
            c.dims.confidence_stats = d.value("confidence_stats", c.dims.confidence_stats);
            c.dims.qe_score = d.value("qe_score", c.dims.qe_score);
            c.dims.qe_embedding = d.value("qe_embedding", c.dims.qe_embedding);
            c.dims.signal_props = d.value("signal_props", c.dims.signal_props);
        }
        c.latent_groups = j.value("latent_groups", c.latent_groups);
        c.feature_noise = j.value("feature_noise", c.feature_noise);
        c.languages = j.value("languages", c.languages);
        c.emit_text = j.value("emit_text", c.emit_text);
        if (j.contains("reference_words")) {
            c.min_reference_words = j["reference_words"].at(0).get<int>();
            c.max_reference_words = j["reference_words"].at(1).get<int>();
        }
        if (j.contains("duration")) {
            c.min_duration = j["duration"].at(0).get<double>();
            c.max_duration = j["duration"].at(1).get<double>();
        }
        c.validate();
        return c;
    } catch (const json::exception& e) {
        throw ParseError(std::string("generator config: ") + e.what());
    }
}

namespace detail {

inline std::vector<double> latent_block(std::size_t dim, const std::vector<double>& z, std::size_t observed,
                                        bool carries, double feature_noise, Rng& rng) {
    std::vector<double> v(dim);
    for (std::size_t k = 0; k < dim; ++k) {
        const double eps = standard_normal(rng);
        v[k] = (carries && k < observed) ? z[k] + feature_noise * eps : eps;
    }
    return v;
}

/// Hypothesis with exactly `errors` word errors against `ref`: distinct
/// positions are substituted by out-of-vocabulary words, and errors beyond
/// the reference length become insertions.
inline std::string corrupt(const Tokens& ref, std::size_t errors, Rng& rng) {
    std::vector<std::size_t> pos(ref.size());
    for (std::size_t i = 0; i < pos.size(); ++i) pos[i] = i;
    shuffle(std::span<std::size_t>(pos), rng);
    Tokens hyp = ref;
    const std::size_t subs = std::min(errors, ref.size());
    for (std::size_t k = 0; k < subs; ++k) hyp[pos[k]] = "x" + std::to_string(k);
    for (std::size_t k = subs; k < errors; ++k) hyp.push_back("x" + std::to_string(k));
    return join_tokens(hyp);
}

}  // namespace detail

inline Dataset synthesize_dataset(const GeneratorConfig& cfg, std::uint64_t seed) {
    cfg.validate();
    Rng rng(seed);
    Dataset ds;
    ds.schema.systems = cfg.profiles();
    ds.schema.dims = cfg.dims;
    ds.records.reserve(cfg.n_segments);
    const std::size_t observed = cfg.latent_dim - cfg.hidden_latent;

    for (std::size_t n = 0; n < cfg.n_segments; ++n) {
        SegmentRecord r;
        char id[32];
        std::snprintf(id, sizeof id, "seg%06zu", n);
        r.segment_id = id;
        r.language = cfg.languages[static_cast<std::size_t>(uniform_index(rng, cfg.languages.size()))];
        r.duration = uniform(rng, cfg.min_duration, cfg.max_duration);

        std::vector<double> z(cfg.latent_dim);
        for (double& v : z) v = standard_normal(rng);

        auto& f = r.features;
        f.audio_embedding = detail::latent_block(cfg.dims.audio_embedding, z, observed, cfg.carries("audio"), cfg.feature_noise, rng);
        f.asr_embedding = detail::latent_block(cfg.dims.asr_embedding, z, observed, cfg.carries("asr"), cfg.feature_noise, rng);
        const auto n_words = static_cast<std::size_t>(
            cfg.min_reference_words +
            static_cast<int>(uniform_index(rng, static_cast<std::uint64_t>(cfg.max_reference_words - cfg.min_reference_words + 1))));
        if (cfg.dims.confidence_stats) {
            f.has_confidence = true;
            const double shift = cfg.carries("asr") ? z[0] : 0.0;
            std::vector<double> logprobs(n_words);
            for (double& lp : logprobs) {
                const double p = 1.0 / (1.0 + std::exp(-(1.5 - shift + standard_normal(rng))));
                lp = std::log(std::max(p, 1e-300));
            }
            f.confidence_stats = confidence_summary(logprobs);
        }
        if (cfg.dims.qe_score) {
            const double eps = standard_normal(rng);
            f.qe_score = cfg.carries("qe") ? -z[0] + cfg.feature_noise * eps : eps;
        }
        f.qe_embedding = detail::latent_block(cfg.dims.qe_embedding, z, observed, cfg.carries("qe"), cfg.feature_noise, rng);
        if (cfg.dims.signal_props) {
            f.signal_props = {r.duration, uniform(rng, 0.01, 0.3), uniform(rng, 200.0, 4000.0), uniform(rng, 0.2, 1.0),
                              uniform01(rng), uniform(rng, 100.0, 2000.0)};
        }

        for (std::size_t w = 0; w < n_words; ++w)
            r.reference.push_back("w" + std::to_string(uniform_index(rng, 500)));

        for (const auto& s : cfg.systems) {
            double w = s.base_wer;
            for (std::size_t k = 0; k < s.slope.size(); ++k) w += s.slope[k] * z[k];
            w += cfg.noise * uniform(rng, -1.0, 1.0);
            w = std::max(w, 0.0);
            SystemOutcome o;
            if (cfg.emit_text) {
                const auto errors = static_cast<std::size_t>(std::llround(w * static_cast<double>(n_words)));
                o.hypothesis = detail::corrupt(r.reference, errors, rng);
                o.wer = automode::wer(r.reference, normalize_text(*o.hypothesis));
            } else {
                o.wer = w;
            }
            o.cost = r.duration * s.profile.cost_rate;
            o.runtime = r.duration * s.profile.latency_rate;
            r.outcomes.emplace(s.profile.id, std::move(o));
        }
        r.planted_best = best_system(r, ds.schema.systems);
        ds.records.push_back(std::move(r));
    }
    return ds;
}

}  // namespace automode
