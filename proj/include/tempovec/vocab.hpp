#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "tempovec/common.hpp"
#include "tempovec/corpus.hpp"
#include "tempovec/rng.hpp"

namespace tempovec {

// Corpus-wide vocabulary: counts are aggregated over every time span before
// the min-count filter is applied, so all spans share one id space. Ids are
// assigned by descending count, ties broken lexicographically, which makes
// serialized models reproducible.
class Vocabulary {
public:
    Vocabulary() = default;

    static Vocabulary from_counts(const std::unordered_map<std::string, int64_t>& counts,
                                  int64_t min_count, double alpha = 0.75) {
        if (min_count < 1) throw ConfigError("min_count must be >= 1");
        if (counts.empty()) throw DataError("empty corpus: no tokens to build a vocabulary from");
        std::vector<std::pair<std::string, int64_t>> kept;
        kept.reserve(counts.size());
        for (const auto& [w, c] : counts)
            if (c >= min_count) kept.emplace_back(w, c);
        if (kept.empty())
            throw DataError("no words reach min_count=" + std::to_string(min_count));
        std::sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) {
            if (a.second != b.second) return a.second > b.second;
            return a.first < b.first;
        });
        Vocabulary v;
        v.min_count_ = min_count;
        v.alpha_ = alpha;
        v.words_.reserve(kept.size());
        v.counts_.reserve(kept.size());
        for (auto& [w, c] : kept) {
            v.word_to_id_.emplace(w, static_cast<int32_t>(v.words_.size()));
            v.words_.push_back(std::move(w));
            v.counts_.push_back(c);
        }
        return v;
    }

    size_t size() const { return words_.size(); }
    int64_t min_count() const { return min_count_; }
    double alpha() const { return alpha_; }
    const std::vector<std::string>& words() const { return words_; }
    const std::vector<int64_t>& counts() const { return counts_; }
    const std::string& word(int32_t id) const { return words_[static_cast<size_t>(id)]; }
    int64_t count(int32_t id) const { return counts_[static_cast<size_t>(id)]; }

    // -1 when the word was filtered out or never seen.
    int32_t id_of(const std::string& w) const {
        auto it = word_to_id_.find(w);
        return it == word_to_id_.end() ? -1 : it->second;
    }

    bool contains(const std::string& w) const { return word_to_id_.count(w) > 0; }

    // Text form: one "word<TAB>count" line per id, in id order.
    std::string serialize() const {
        std::ostringstream out;
        out << "# tempovec vocab v1 min_count=" << min_count_ << " alpha=" << alpha_ << "\n";
        for (size_t i = 0; i < words_.size(); ++i)
            out << words_[i] << '\t' << counts_[i] << '\n';
        return out.str();
    }

    void save(const std::filesystem::path& path) const { write_text_file(path, serialize()); }

    static Vocabulary load(const std::filesystem::path& path) {
        std::ifstream in(path);
        if (!in) throw DataError("cannot open vocabulary file: " + path.string());
        std::string header;
        std::getline(in, header);
        Vocabulary v;
        if (header.rfind("# tempovec vocab v1", 0) != 0)
            throw DataError("not a tempovec vocabulary file: " + path.string());
        {
            const auto mc = header.find("min_count=");
            const auto al = header.find("alpha=");
            if (mc == std::string::npos || al == std::string::npos)
                throw DataError("malformed vocabulary header: " + path.string());
            v.min_count_ = std::stoll(header.substr(mc + 10));
            v.alpha_ = std::stod(header.substr(al + 6));
        }
        std::string line;
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            const auto tab = line.find('\t');
            if (tab == std::string::npos)
                throw DataError("malformed vocabulary line: " + line);
            std::string w = line.substr(0, tab);
            const int64_t c = std::stoll(line.substr(tab + 1));
            v.word_to_id_.emplace(w, static_cast<int32_t>(v.words_.size()));
            v.words_.push_back(std::move(w));
            v.counts_.push_back(c);
        }
        if (v.words_.empty()) throw DataError("empty vocabulary file: " + path.string());
        return v;
    }

    uint64_t hash() const { return fnv1a64(serialize()); }

private:
    std::vector<std::string> words_;
    std::vector<int64_t> counts_;
    std::unordered_map<std::string, int32_t> word_to_id_;
    int64_t min_count_ = 1;
    double alpha_ = 0.75;
};

inline Vocabulary build_vocabulary(const std::vector<RawSpanCorpus>& spans, int64_t min_count,
                                   double alpha = 0.75) {
    std::unordered_map<std::string, int64_t> counts;
    for (const RawSpanCorpus& s : spans)
        for (const auto& sent : s.sentences)
            for (const auto& tok : sent) ++counts[tok];
    return Vocabulary::from_counts(counts, min_count, alpha);
}

// Encodes raw token sentences to ids. Filtered tokens are deleted outright
// (the context window spans the gap); sentences left empty are dropped.
inline SpanCorpus encode_span(const RawSpanCorpus& raw, const Vocabulary& vocab,
                              const TimeSpanConfig& cfg) {
    SpanCorpus sc;
    sc.span_index = raw.span_index;
    sc.start_year = cfg.span_start_year(raw.span_index);
    sc.end_year = cfg.span_end_year(raw.span_index);
    std::vector<int32_t> ids;
    for (const auto& sent : raw.sentences) {
        ids.clear();
        for (const auto& tok : sent) {
            const int32_t id = vocab.id_of(tok);
            if (id >= 0) ids.push_back(id);
        }
        if (!ids.empty()) sc.add_sentence(ids);
    }
    return sc;
}

// Smoothed-unigram negative sampling distribution: p(w) ∝ count(w)^alpha.
// Stored as a CDF and sampled by binary search, so empirical frequencies
// match the analytic distribution exactly up to RNG resolution.
class NegativeSamplingTable {
public:
    NegativeSamplingTable() = default;

    NegativeSamplingTable(const std::vector<int64_t>& counts, double alpha) : alpha_(alpha) {
        if (counts.empty()) throw DataError("cannot build sampling table over empty vocabulary");
        cdf_.resize(counts.size());
        double total = 0.0;
        for (size_t i = 0; i < counts.size(); ++i) {
            const double w = std::pow(static_cast<double>(counts[i]), alpha);
            total += w;
            cdf_[i] = total;
        }
        if (!(total > 0.0) || !std::isfinite(total))
            throw NumericError("negative-sampling weights do not sum to a positive finite value");
        for (double& c : cdf_) c /= total;
        cdf_.back() = 1.0;
        double acc = 0.0;
        for (size_t i = 0; i < cdf_.size(); ++i) {
            acc += probability(static_cast<int32_t>(i));
        }
        if (std::abs(acc - 1.0) > 1e-9)
            throw NumericError("negative-sampling probabilities sum to " + std::to_string(acc));
    }

    static NegativeSamplingTable from_vocab(const Vocabulary& vocab) {
        return NegativeSamplingTable(vocab.counts(), vocab.alpha());
    }

    size_t size() const { return cdf_.size(); }
    double alpha() const { return alpha_; }

    double probability(int32_t id) const {
        const size_t i = static_cast<size_t>(id);
        return i == 0 ? cdf_[0] : cdf_[i] - cdf_[i - 1];
    }

    int32_t sample(Rng& rng) const {
        const double u = rng.next_double();
        const auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
        const auto idx = it == cdf_.end() ? cdf_.size() - 1
                                          : static_cast<size_t>(it - cdf_.begin());
        return static_cast<int32_t>(idx);
    }

private:
    std::vector<double> cdf_;
    double alpha_ = 0.75;
};

}  // namespace tempovec
