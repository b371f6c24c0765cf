#pragma once

// Independent reference implementations used as test oracles. They share no
// code with the library beyond plain data types.

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <span>
#include <string>
#include <vector>

namespace oracle {

/// Levenshtein distance over the full (n+1) x (m+1) table.
inline std::size_t edit_distance(const std::vector<std::string>& ref, const std::vector<std::string>& hyp) {
    const std::size_t n = ref.size(), m = hyp.size();
    std::vector<std::vector<std::size_t>> d(n + 1, std::vector<std::size_t>(m + 1, 0));
    for (std::size_t i = 0; i <= n; ++i) d[i][0] = i;
    for (std::size_t j = 0; j <= m; ++j) d[0][j] = j;
    for (std::size_t i = 1; i <= n; ++i)
        for (std::size_t j = 1; j <= m; ++j) {
            const std::size_t diag = d[i - 1][j - 1] + (ref[i - 1] == hyp[j - 1] ? 0u : 1u);
            d[i][j] = std::min(diag, std::min(d[i - 1][j], d[i][j - 1]) + 1);
        }
    return d[n][m];
}

inline double wer(const std::vector<std::string>& ref, const std::vector<std::string>& hyp) {
    return static_cast<double>(edit_distance(ref, hyp)) / static_cast<double>(ref.size());
}

/// Per-class F1 from an explicit confusion matrix, averaged with weights
/// 1 / (true count); classes with no true and no predicted samples drop out.
inline double inverse_frequency_f1(const std::vector<std::string>& predicted, const std::vector<std::string>& actual) {
    std::set<std::string> classes(actual.begin(), actual.end());
    classes.insert(predicted.begin(), predicted.end());
    std::map<std::string, std::map<std::string, double>> confusion;  // [actual][predicted]
    for (std::size_t i = 0; i < actual.size(); ++i) confusion[actual[i]][predicted[i]] += 1.0;
    double num = 0.0, den = 0.0;
    for (const auto& c : classes) {
        double tp = confusion[c][c], row = 0.0, col = 0.0;
        for (const auto& o : classes) {
            row += confusion[c][o];
            col += confusion[o][c];
        }
        const double precision = col > 0 ? tp / col : 0.0;
        const double recall = row > 0 ? tp / row : 0.0;
        const double f1 = precision + recall > 0 ? 2 * precision * recall / (precision + recall) : 0.0;
        const double w = 1.0 / std::max(row, 1.0);
        num += w * f1;
        den += w;
    }
    return den > 0 ? num / den : 0.0;
}

/// Signal descriptors computed sample by sample with explicit frame loops.
struct Signal {
    double duration, rms, zcr, peak, silence_ratio, centroid;
};

inline Signal signal(std::span<const double> x, double rate) {
    Signal s{};
    const double n = static_cast<double>(x.size());
    s.duration = n / rate;
    double energy = 0.0;
    std::vector<double> nonzero;
    for (double v : x) {
        energy += v * v;
        s.peak = std::max(s.peak, std::fabs(v));
        if (v != 0.0) nonzero.push_back(v);
    }
    s.rms = std::sqrt(energy / n);
    double flips = 0.0;
    for (std::size_t i = 1; i < nonzero.size(); ++i)
        if ((nonzero[i] > 0) != (nonzero[i - 1] > 0)) flips += 1.0;
    s.zcr = flips / s.duration;

    const std::size_t frame = static_cast<std::size_t>(std::round(0.02 * rate));
    double frames = 0, silent = 0, num = 0, den = 0;
    for (std::size_t a = 0; a < x.size(); a += frame) {
        const std::size_t b = std::min(x.size(), a + frame);
        std::vector<double> nz;
        double e = 0.0;
        for (std::size_t i = a; i < b; ++i) {
            e += x[i] * x[i];
            if (x[i] != 0.0) nz.push_back(x[i]);
        }
        double f = 0.0;
        for (std::size_t i = 1; i < nz.size(); ++i)
            if ((nz[i] > 0) != (nz[i - 1] > 0)) f += 1.0;
        const double len = static_cast<double>(b - a);
        frames += 1;
        if (std::sqrt(e / len) < 0.01) silent += 1;
        num += e * f * rate / len;
        den += e;
    }
    s.silence_ratio = silent / frames;
    s.centroid = den > 0 ? num / den / 2.0 : 0.0;
    return s;
}

}  // namespace oracle
