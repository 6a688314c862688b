#pragma once

#include <algorithm>
#include <cmath>
#include <cstring>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tempovec/chrono.hpp"
#include "tempovec/common.hpp"
#include "tempovec/embedding.hpp"
#include "tempovec/rng.hpp"
#include "tempovec/vocab.hpp"

namespace tempovec {

// Cosine similarity in double precision. Returns nullopt ("undefined") when
// either norm is below 1e-12; callers treat that as a missing value, never
// as zero. Bitwise-equal nonzero inputs return exactly 1.0, which is what
// makes the zero-epoch chaining calibration exact.
inline std::optional<double> cosine(std::span<const float> u, std::span<const float> v) {
    if (u.size() != v.size())
        throw ConfigError("cosine: dimension mismatch (" + std::to_string(u.size()) + " vs " +
                          std::to_string(v.size()) + ")");
    if (u.empty()) throw ConfigError("cosine: dimension must be >= 1");
    double dot = 0.0, nu = 0.0, nv = 0.0;
    for (size_t i = 0; i < u.size(); ++i) {
        const double a = u[i], b = v[i];
        dot += a * b;
        nu += a * a;
        nv += b * b;
    }
    if (std::sqrt(nu) < 1e-12 || std::sqrt(nv) < 1e-12) return std::nullopt;
    if (std::memcmp(u.data(), v.data(), u.size() * sizeof(float)) == 0) return 1.0;
    const double c = dot / (std::sqrt(nu) * std::sqrt(nv));
    return std::clamp(c, -1.0, 1.0);
}

// A word's consecutive-span self-similarity: values[t] compares spans t and
// t+1, so T spans produce T-1 values. Missing entries mark undefined cosines.
struct SimilaritySeries {
    std::string word;
    int32_t word_id = -1;
    std::vector<std::optional<double>> values;
    std::vector<int64_t> occurrence_counts;  // per span, length T
};

// Loader yields the space for one chronological span index; the sweep keeps
// only two spaces resident at a time.
using SpaceLoaderFn = std::function<EmbeddingSpace(int span_index)>;

// Computes self-similarity series for a set of word ids in one pass over
// consecutive space pairs. Rows come back in the order of `word_ids`.
inline std::vector<std::vector<std::optional<double>>> transition_cosines(
    const SpaceLoaderFn& load_space, int span_count, std::span<const int32_t> word_ids) {
    if (span_count < 2) throw ConfigError("need at least 2 spans for transitions");
    std::vector<std::vector<std::optional<double>>> rows(
        word_ids.size(), std::vector<std::optional<double>>(static_cast<size_t>(span_count - 1)));
    EmbeddingSpace cur = load_space(0);
    for (int t = 1; t < span_count; ++t) {
        EmbeddingSpace next = load_space(t);
        if (next.dim != cur.dim || next.vocab_size != cur.vocab_size)
            throw DataError("span spaces disagree in shape at transition " + std::to_string(t - 1));
        for (size_t w = 0; w < word_ids.size(); ++w)
            rows[w][static_cast<size_t>(t - 1)] =
                cosine(cur.in_row(word_ids[w]), next.in_row(word_ids[w]));
        cur = std::move(next);
    }
    return rows;
}

inline std::vector<SimilaritySeries> similarity_series(
    const SpaceLoaderFn& load_space, int span_count, const Vocabulary& vocab,
    const std::vector<std::string>& words, const std::vector<std::vector<int64_t>>& span_counts) {
    std::vector<int32_t> ids;
    ids.reserve(words.size());
    for (const auto& w : words) {
        const int32_t id = vocab.id_of(w);
        if (id < 0) throw DataError("word not in vocabulary: '" + w + "'");
        ids.push_back(id);
    }
    const auto rows = transition_cosines(load_space, span_count, ids);
    std::vector<SimilaritySeries> out(words.size());
    for (size_t i = 0; i < words.size(); ++i) {
        out[i].word = words[i];
        out[i].word_id = ids[i];
        out[i].values = rows[i];
        out[i].occurrence_counts.resize(static_cast<size_t>(span_count), 0);
        for (int t = 0; t < span_count; ++t)
            out[i].occurrence_counts[static_cast<size_t>(t)] =
                span_counts[static_cast<size_t>(t)][static_cast<size_t>(ids[i])];
    }
    return out;
}

inline SimilaritySeries self_similarity(const ChronoModel& model, const std::string& word) {
    if (!model.vocab) throw ConfigError("model has no vocabulary attached");
    const int32_t id = model.vocab->id_of(word);
    if (id < 0) throw DataError("word not in vocabulary: '" + word + "'");
    SimilaritySeries s;
    s.word = word;
    s.word_id = id;
    const int T = model.span_count();
    auto rows = transition_cosines(
        [&](int t) { return model.spaces[static_cast<size_t>(t)]; }, T,
        std::span<const int32_t>(&id, 1));
    s.values = std::move(rows[0]);
    return s;
}

// Population reference: mean and stddev of self-similarity per transition
// over one fixed random word sample, drawn once without replacement.
struct BaselineBand {
    int sample_size = 0;
    uint64_t sample_seed = 0;
    std::vector<int32_t> sample_ids;
    std::vector<double> mean;        // per transition
    std::vector<double> stddev;      // sample stddev (n-1)
    std::vector<int64_t> n_effective;  // defined values per transition
};

inline std::vector<int32_t> sample_word_ids(size_t vocab_size, size_t sample_size,
                                            uint64_t seed) {
    std::vector<int32_t> pool(vocab_size);
    for (size_t i = 0; i < vocab_size; ++i) pool[i] = static_cast<int32_t>(i);
    Rng rng(seed);
    for (size_t i = 0; i < sample_size; ++i) {
        const size_t j = i + static_cast<size_t>(rng.next_below(vocab_size - i));
        std::swap(pool[i], pool[j]);
    }
    pool.resize(sample_size);
    return pool;
}

inline BaselineBand baseline(const SpaceLoaderFn& load_space, int span_count,
                             const Vocabulary& vocab, int sample_size, uint64_t seed) {
    if (sample_size < 30)
        throw ConfigError("baseline sample size " + std::to_string(sample_size) +
                          " is below the minimum of 30");
    if (static_cast<size_t>(sample_size) > vocab.size())
        throw ConfigError("baseline sample size " + std::to_string(sample_size) +
                          " exceeds vocabulary size " + std::to_string(vocab.size()));
    BaselineBand band;
    band.sample_size = sample_size;
    band.sample_seed = seed;
    band.sample_ids = sample_word_ids(vocab.size(), static_cast<size_t>(sample_size), seed);
    const auto rows = transition_cosines(load_space, span_count, band.sample_ids);
    const size_t n_trans = static_cast<size_t>(span_count - 1);
    band.mean.resize(n_trans);
    band.stddev.resize(n_trans);
    band.n_effective.resize(n_trans);
    for (size_t t = 0; t < n_trans; ++t) {
        double sum = 0.0;
        int64_t n = 0;
        for (const auto& row : rows)
            if (row[t]) {
                sum += *row[t];
                ++n;
            }
        const double mu = n > 0 ? sum / static_cast<double>(n) : 0.0;
        double ss = 0.0;
        for (const auto& row : rows)
            if (row[t]) ss += (*row[t] - mu) * (*row[t] - mu);
        band.mean[t] = mu;
        band.stddev[t] = n > 1 ? std::sqrt(ss / static_cast<double>(n - 1)) : 0.0;
        band.n_effective[t] = n;
    }
    return band;
}

inline BaselineBand baseline(const ChronoModel& model, const Vocabulary& vocab, int sample_size,
                             uint64_t seed) {
    return baseline([&](int t) { return model.spaces[static_cast<size_t>(t)]; },
                    model.span_count(), vocab, sample_size, seed);
}

struct DetectionParams {
    double z_threshold = 2.0;
    double min_relative_drop = 0.1;
    int64_t min_occurrences = 5;
};

struct FlaggedTransition {
    int transition = 0;
    double z = 0.0;                         // +inf when stddev is 0 and value < mean
    std::optional<double> relative_drop;    // empty when waived (t == 0)
};

struct ShiftReport {
    std::string word;
    SimilaritySeries series;
    std::vector<FlaggedTransition> flagged;
    DetectionParams params;
};

namespace detail {

inline std::optional<double> median_defined(const std::vector<std::optional<double>>& values,
                                            size_t end) {
    std::vector<double> prev;
    for (size_t i = 0; i < end; ++i)
        if (values[i]) prev.push_back(*values[i]);
    if (prev.empty()) return std::nullopt;
    std::sort(prev.begin(), prev.end());
    const size_t n = prev.size();
    return n % 2 == 1 ? prev[n / 2] : 0.5 * (prev[n / 2 - 1] + prev[n / 2]);
}

}  // namespace detail

// Flags transition t when all three hold:
//   z-score   (mean_t - value_t) / stddev_t >= z_threshold,
//   drop      (median of previous values - value_t) / median >= min_relative_drop
//             (waived at t = 0 or when no previous value is defined),
//   frequency word occurs >= min_occurrences in both spans t and t+1.
// A zero stddev yields z = +inf when the value sits below the mean and never
// flags otherwise.
inline ShiftReport detect_drops(const SimilaritySeries& series, const BaselineBand& band,
                                const DetectionParams& params = {}) {
    if (series.values.size() != band.mean.size())
        throw ConfigError("series and baseline band cover different transition counts");
    ShiftReport report;
    report.word = series.word;
    report.series = series;
    report.params = params;
    for (size_t t = 0; t < series.values.size(); ++t) {
        if (!series.values[t]) continue;
        const double value = *series.values[t];
        if (!series.occurrence_counts.empty()) {
            if (series.occurrence_counts[t] < params.min_occurrences ||
                series.occurrence_counts[t + 1] < params.min_occurrences)
                continue;
        }
        const double mu = band.mean[t];
        const double sd = band.stddev[t];
        double z;
        if (sd > 0.0) {
            z = (mu - value) / sd;
        } else if (value < mu) {
            z = std::numeric_limits<double>::infinity();
        } else {
            continue;
        }
        if (z < params.z_threshold) continue;

        std::optional<double> rel;
        if (t > 0) {
            const auto med = detail::median_defined(series.values, t);
            if (med && *med > 0.0) {
                rel = (*med - value) / *med;
                if (*rel < params.min_relative_drop) continue;
            }
        }
        report.flagged.push_back({static_cast<int>(t), z, rel});
    }
    return report;
}

}  // namespace tempovec
