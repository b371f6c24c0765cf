#include <gtest/gtest.h>

#include <cmath>
#include <cstring>

#include "automode/features.hpp"
#include "automode/synth.hpp"
#include "automode/wav.hpp"
#include "oracles.hpp"

using namespace automode;

// ---------------------------------------------------------------------------
// Confidence statistics

TEST(Confidence, ConstantInputs) {
    const std::vector<double> ones = {0.0, 0.0, 0.0};
    const ConfidenceStats a = confidence_summary(ones);
    for (std::size_t i = 0; i < kConfidenceStats; ++i) EXPECT_DOUBLE_EQ(a[i], i == 1 ? 0.0 : 1.0);
    const std::vector<double> halves = {std::log(0.5), std::log(0.5)};
    const ConfidenceStats b = confidence_summary(halves);
    for (std::size_t i = 0; i < kConfidenceStats; ++i) EXPECT_NEAR(b[i], i == 1 ? 0.0 : 0.5, 1e-15);
}

TEST(Confidence, LinearInterpolationQuartiles) {
    const std::vector<double> lp = {std::log(0.1), std::log(0.2), std::log(0.3), std::log(0.4)};
    const ConfidenceStats s = confidence_summary(lp);
    EXPECT_NEAR(s[0], 0.25, 1e-12);
    EXPECT_NEAR(s[1], std::sqrt(0.0125), 1e-12);  // population std = 0.1118...
    EXPECT_NEAR(s[2], 0.1, 1e-12);
    EXPECT_NEAR(s[3], 0.175, 1e-12);
    EXPECT_NEAR(s[4], 0.25, 1e-12);
    EXPECT_NEAR(s[5], 0.325, 1e-12);
    EXPECT_NEAR(s[6], 0.4, 1e-12);
}

TEST(Confidence, LogProbMode) {
    const std::vector<double> lp = {-1.0, -3.0};
    const ConfidenceStats s = confidence_summary(lp, ConfidenceMode::LogProb);
    EXPECT_DOUBLE_EQ(s[0], -2.0);
    EXPECT_DOUBLE_EQ(s[2], -3.0);
    EXPECT_DOUBLE_EQ(s[6], -1.0);
}

TEST(Confidence, RejectsEmptyAndPositive) {
    EXPECT_THROW(confidence_summary(std::vector<double>{}), InvalidArgument);
    const std::vector<double> bad = {0.5};
    EXPECT_THROW(confidence_summary(bad), InvalidArgument);
}

// ---------------------------------------------------------------------------
// Signal properties

TEST(Signal, Silence) {
    const std::vector<double> x(16000, 0.0);
    const SignalProps p = signal_properties(x, 16000.0);
    EXPECT_DOUBLE_EQ(p[0], 1.0);
    EXPECT_DOUBLE_EQ(p[1], 0.0);
    EXPECT_DOUBLE_EQ(p[2], 0.0);
    EXPECT_DOUBLE_EQ(p[3], 0.0);
    EXPECT_DOUBLE_EQ(p[4], 1.0);
    EXPECT_DOUBLE_EQ(p[5], 0.0);
}

TEST(Signal, SquareWave) {
    // 1 kHz at 16 kHz: 8 samples high, 8 low.
    std::vector<double> x(16000);
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = (i / 8) % 2 == 0 ? 1.0 : -1.0;
    const SignalProps p = signal_properties(x, 16000.0);
    EXPECT_DOUBLE_EQ(p[1], 1.0);
    EXPECT_NEAR(p[2], 2000.0, 1.0);  // 1999 flips between 2000 half-periods
    EXPECT_DOUBLE_EQ(p[3], 1.0);
    EXPECT_DOUBLE_EQ(p[4], 0.0);
    EXPECT_NEAR(p[5], 1000.0, 30.0);
}

TEST(Signal, WhiteNoiseMatchesReference) {
    Rng rng(77);
    std::vector<double> x(12345);
    for (double& v : x) v = uniform(rng, -0.8, 0.8);
    const SignalProps p = signal_properties(x, 16000.0);
    const oracle::Signal o = oracle::signal(x, 16000.0);
    EXPECT_NEAR(p[0], o.duration, 1e-9);
    EXPECT_NEAR(p[1], o.rms, 1e-9);
    EXPECT_NEAR(p[2], o.zcr, 1e-9);
    EXPECT_NEAR(p[3], o.peak, 1e-9);
    EXPECT_NEAR(p[4], o.silence_ratio, 1e-9);
    EXPECT_NEAR(p[5], o.centroid, 1e-9);
    EXPECT_LT(p[4], 0.01);
}

TEST(Signal, RejectsBadInput) {
    const std::vector<double> one = {0.1};
    EXPECT_THROW(signal_properties(std::vector<double>{}, 16000.0), InvalidArgument);
    EXPECT_THROW(signal_properties(one, 0.0), InvalidArgument);
}

// ---------------------------------------------------------------------------
// WAV

namespace {

void put(std::vector<std::uint8_t>& b, std::uint32_t v, int bytes) {
    for (int i = 0; i < bytes; ++i) b.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::vector<std::uint8_t> wav_bytes(std::uint16_t format, std::uint16_t channels, std::uint16_t bits,
                                    const std::vector<std::uint8_t>& data) {
    std::vector<std::uint8_t> b = {'R', 'I', 'F', 'F'};
    put(b, static_cast<std::uint32_t>(36 + data.size()), 4);
    for (char c : std::string("WAVEfmt ")) b.push_back(static_cast<std::uint8_t>(c));
    put(b, 16, 4);
    put(b, format, 2);
    put(b, channels, 2);
    put(b, 16000, 4);
    put(b, 16000u * channels * bits / 8, 4);
    put(b, channels * bits / 8u, 2);
    put(b, bits, 2);
    for (char c : std::string("data")) b.push_back(static_cast<std::uint8_t>(c));
    put(b, static_cast<std::uint32_t>(data.size()), 4);
    b.insert(b.end(), data.begin(), data.end());
    return b;
}

}  // namespace

TEST(Wav, Pcm16Scaling) {
    std::vector<std::uint8_t> data;
    for (std::int16_t s : {std::int16_t{0}, std::int16_t{16384}, std::int16_t{-32768}})
        put(data, static_cast<std::uint16_t>(s), 2);
    const PcmAudio a = parse_wav(wav_bytes(1, 1, 16, data));
    EXPECT_EQ(a.samples, (std::vector<double>{0.0, 0.5, -1.0}));
    EXPECT_EQ(a.sample_rate, 16000.0);
}

TEST(Wav, StereoFloatIsAveraged) {
    std::vector<std::uint8_t> data;
    for (float v : {1.0f, 0.0f}) {
        std::uint32_t u;
        std::memcpy(&u, &v, 4);
        put(data, u, 4);
    }
    const PcmAudio a = parse_wav(wav_bytes(3, 2, 32, data));
    EXPECT_EQ(a.samples, (std::vector<double>{0.5}));
}

TEST(Wav, BadMagicNamesOffset) {
    auto b = wav_bytes(1, 1, 16, {0, 0});
    b[0] = 'X';
    try {
        parse_wav(b);
        FAIL();
    } catch (const ParseError& e) {
        EXPECT_NE(std::string(e.what()).find("offset 0"), std::string::npos) << e.what();
    }
    EXPECT_THROW(parse_wav(std::vector<std::uint8_t>(5, 0)), ParseError);
    EXPECT_THROW(parse_wav(wav_bytes(1, 3, 16, {0, 0, 0, 0, 0, 0})), ParseError);
}

TEST(Wav, EncoderRoundTrip) {
    const std::vector<double> x = {0.0, 0.25, -0.5, 0.75};
    const auto bytes = encode_wav_pcm16(x, 8000);
    const PcmAudio a = parse_wav(bytes);
    EXPECT_EQ(a.samples, x);
    EXPECT_EQ(a.sample_rate, 8000.0);
}

// ---------------------------------------------------------------------------
// Schema and assembly

namespace {

SegmentRecord full_record() {
    SegmentRecord r;
    r.segment_id = "s";
    r.language = "fr";
    auto& f = r.features;
    f.audio_embedding = {1, 2, 3, 4};
    f.asr_embedding = {5, 6};
    f.has_confidence = true;
    f.confidence_stats = ConfidenceStats{0.9, 0.1, 0.7, 0.8, 0.9, 0.95, 1.0};
    f.qe_score = 0.7;
    f.qe_embedding = {7, 8, 9};
    f.signal_props = {1, 2, 3, 4, 5, 6};
    return r;
}

FeatureDims full_dims() { return FeatureDims::of(full_record().features); }

}  // namespace

TEST(Schema, OnlyQeScore) {
    FeatureToggles t;
    t.audio = t.language = t.asr = t.signal = false;
    FeatureDims d;
    d.qe_score = true;
    const FeatureSchema s = FeatureSchema::from_dims(d, {}, t);
    EXPECT_EQ(assemble(full_record(), s), (std::vector<double>{0.7}));
}

TEST(Schema, LanguageOneHot) {
    FeatureToggles t;
    t.asr = t.qe = t.signal = false;
    FeatureDims d;
    d.audio_embedding = 4;
    const FeatureSchema s = FeatureSchema::from_dims(d, {"en", "fr"}, t);
    const auto v = assemble(full_record(), s);
    ASSERT_EQ(v.size(), 7u);
    EXPECT_EQ(std::vector<double>(v.end() - 3, v.end()), (std::vector<double>{0, 1, 0}));
    SegmentRecord other = full_record();
    other.language = "xx";
    const auto u = assemble(other, s);
    EXPECT_EQ(std::vector<double>(u.end() - 3, u.end()), (std::vector<double>{0, 0, 1}));
}

TEST(Schema, DisablingAGroupShiftsTheRest) {
    const FeatureSchema all = FeatureSchema::from_dims(full_dims(), {"en", "fr"});
    FeatureToggles no_audio;
    no_audio.audio = false;
    const FeatureSchema less = FeatureSchema::from_dims(full_dims(), {"en", "fr"}, no_audio);
    EXPECT_EQ(all.total_dim() - less.total_dim(), 4u);
    const auto a = assemble(full_record(), all);
    const auto b = assemble(full_record(), less);
    EXPECT_EQ(std::vector<double>(a.begin() + 4, a.end()), b);
    EXPECT_NE(all.hash(), less.hash());
}

TEST(Schema, IndexMappingIsBijective) {
    const FeatureSchema s = FeatureSchema::from_dims(full_dims(), {"en", "fr"});
    std::set<std::pair<int, std::size_t>> seen;
    std::set<std::string> names;
    for (std::size_t i = 0; i < s.total_dim(); ++i) {
        const auto [g, k] = s.locate(i);
        EXPECT_TRUE(seen.insert({static_cast<int>(g), k}).second);
        EXPECT_TRUE(names.insert(s.feature_name(i)).second) << s.feature_name(i);
        const auto [first, count] = s.range(g);
        EXPECT_EQ(first + k, i);
        EXPECT_LT(k, count);
    }
    EXPECT_THROW(s.locate(s.total_dim()), InvalidArgument);
    EXPECT_EQ(s.total_dim(), 4u + 3u + 2u + 8u + 1u + 3u + 6u);
}

TEST(Schema, MissingConfidenceUsesSentinel) {
    const FeatureSchema s = FeatureSchema::from_dims(full_dims(), {"en", "fr"});
    SegmentRecord r = full_record();
    r.features.confidence_stats.reset();
    const auto v = assemble(r, s);
    const auto [first, count] = s.range(FeatureGroup::ConfidenceStats);
    ASSERT_EQ(count, 8u);
    for (std::size_t k = 0; k < 7; ++k) EXPECT_EQ(v[first + k], 0.0);
    EXPECT_EQ(v[first + 7], 1.0);
    EXPECT_EQ(assemble(full_record(), s)[first + 7], 0.0);
}

TEST(Schema, DimensionMismatchIsASchemaError) {
    const FeatureSchema s = FeatureSchema::from_dims(full_dims(), {"en"});
    SegmentRecord r = full_record();
    r.features.audio_embedding.pop_back();
    EXPECT_THROW(assemble(r, s), SchemaError);
}

TEST(Schema, JsonRoundTrip) {
    FeatureToggles t;
    t.qe = false;
    const FeatureSchema s = FeatureSchema::from_dims(full_dims(), {"de", "en"}, t);
    const FeatureSchema back = FeatureSchema::from_json(s.to_json());
    EXPECT_EQ(back, s);
    EXPECT_EQ(back.hash(), s.hash());
}
