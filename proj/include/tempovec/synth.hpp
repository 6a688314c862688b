#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "tempovec/common.hpp"
#include "tempovec/corpus.hpp"
#include "tempovec/rng.hpp"
#include "tempovec/tokenize.hpp"

namespace tempovec {

// One planted target word: occurrences in span t are generated in a sense-B
// context with probability per_span_mixture[t], otherwise in sense-A context.
struct SyntheticShiftSpec {
    std::string target_word;
    std::vector<std::string> sense_a_context_pool;
    std::vector<std::string> sense_b_context_pool;
    std::vector<double> per_span_mixture;
    std::vector<int64_t> per_span_target_occurrences;
    int64_t background_vocab_size = 5000;
    int sentence_length = 10;
    uint64_t seed = 1;
};

// Whole-corpus plan: shared background plus one or more targets. The
// single-target SyntheticShiftSpec maps onto this 1:1.
struct SyntheticCorpusSpec {
    TimeSpanConfig time;
    int64_t background_vocab_size = 5000;
    int64_t background_sentences_per_span = 1000;
    int sentence_length = 10;
    uint64_t seed = 1;
    double shift_threshold = 0.25;
    struct Target {
        std::string word;
        std::vector<std::string> pool_a;
        std::vector<std::string> pool_b;
        std::vector<double> mixture;
        std::vector<int64_t> occurrences;
    };
    std::vector<Target> targets;
};

struct GroundTruth {
    struct Entry {
        std::string word;
        std::optional<int> t_star;  // first span where mixture crosses the threshold
        double threshold = 0.25;
        std::vector<double> mixture;
        std::vector<int64_t> occurrences;
    };
    std::vector<Entry> entries;
    uint64_t seed = 0;

    nlohmann::json to_json() const {
        nlohmann::json j;
        j["seed"] = seed;
        j["targets"] = nlohmann::json::array();
        for (const auto& e : entries) {
            nlohmann::json t;
            t["word"] = e.word;
            if (e.t_star) t["t_star"] = *e.t_star; else t["t_star"] = nullptr;
            t["threshold"] = e.threshold;
            t["per_span_mixture"] = e.mixture;
            t["per_span_target_occurrences"] = e.occurrences;
            j["targets"].push_back(std::move(t));
        }
        return j;
    }
};

// First span where the mixture crosses the threshold from below; a schedule
// that starts at or above the threshold never "crosses" (constant-mixture
// words are stable by construction, not shifted).
inline std::optional<int> first_crossing(const std::vector<double>& mixture, double threshold) {
    for (size_t t = 1; t < mixture.size(); ++t)
        if (mixture[t] >= threshold && mixture[t - 1] < threshold) return static_cast<int>(t);
    return std::nullopt;
}

namespace detail {

// Deterministic pseudo-word for background rank i: consonant-vowel syllables
// spelling out i + 20 in base 20, so every word has at least two syllables
// and the mapping stays injective ("seza", "sese", ..., "rizafa", ...).
inline std::string background_word(int64_t i) {
    static const char* kSyl[20] = {"za", "se", "ri", "no", "lu", "ta", "be", "ki", "mo", "du",
                                   "fa", "ve", "pi", "go", "hu", "cha", "ne", "si", "lo", "ru"};
    std::string w;
    int64_t x = i + 20;
    do {
        w.insert(0, kSyl[x % 20]);
        x /= 20;
    } while (x > 0);
    return w;
}

inline void validate_synth_spec(const SyntheticCorpusSpec& spec) {
    spec.time.validate();
    const size_t T = static_cast<size_t>(spec.time.span_count());
    if (spec.background_vocab_size < 1) throw ConfigError("background_vocab_size must be >= 1");
    if (spec.background_sentences_per_span < 0)
        throw ConfigError("background_sentences_per_span must be >= 0");
    if (spec.sentence_length < 3)
        throw ConfigError("sentence_length must be >= 3 (target word plus context)");
    if (spec.shift_threshold < 0 || spec.shift_threshold > 1)
        throw ConfigError("shift_threshold must be in [0,1]");
    if (spec.targets.empty()) throw ConfigError("synthetic spec declares no targets");
    std::set<std::string> special;
    for (const auto& tgt : spec.targets) {
        if (tgt.word.empty()) throw ConfigError("target word must be non-empty");
        if (tgt.pool_a.empty() || tgt.pool_b.empty())
            throw ConfigError("context pools must be non-empty for target '" + tgt.word + "'");
        for (const auto& a : tgt.pool_a)
            for (const auto& b : tgt.pool_b)
                if (a == b)
                    throw ConfigError("context pools overlap on '" + a + "' for target '" +
                                      tgt.word + "'");
        if (tgt.mixture.size() != T)
            throw ConfigError("per_span_mixture for '" + tgt.word + "' has " +
                              std::to_string(tgt.mixture.size()) + " entries, expected " +
                              std::to_string(T));
        if (tgt.occurrences.size() != T)
            throw ConfigError("per_span_target_occurrences for '" + tgt.word + "' has " +
                              std::to_string(tgt.occurrences.size()) + " entries, expected " +
                              std::to_string(T));
        for (const double m : tgt.mixture)
            if (m < 0.0 || m > 1.0)
                throw ConfigError("mixture values must lie in [0,1] for target '" + tgt.word + "'");
        for (const int64_t n : tgt.occurrences)
            if (n < 0) throw ConfigError("occurrence counts must be >= 0");
        std::vector<std::string> words = tgt.pool_a;
        words.insert(words.end(), tgt.pool_b.begin(), tgt.pool_b.end());
        words.push_back(tgt.word);
        for (const auto& w : words) {
            const auto toks = tokenize(w);
            if (toks.size() != 1 || toks[0] != w)
                throw ConfigError("'" + w + "' is not a single normalized token; "
                                  "use lowercase letters only");
            if (!special.insert(w).second)
                throw ConfigError("word '" + w + "' appears in more than one pool or target");
        }
    }
}

}  // namespace detail

struct SynthesisResult {
    std::vector<RawSpanCorpus> spans;
    GroundTruth ground_truth;
    std::vector<std::string> warnings;
};

namespace detail {

// Core generator: one seeded stream, single-threaded, sentences delivered to
// `sink(span_index, sentence)` span by span. Equal seeds give byte-identical
// corpora; memory stays O(1) in corpus size.
template <typename SentenceSink>
GroundTruth generate_corpus(const SyntheticCorpusSpec& spec, SentenceSink&& sink,
                            std::vector<std::string>* warnings) {
    validate_synth_spec(spec);
    const int T = spec.time.span_count();

    // Background lexicon and its Zipf(s = 1.1) rank CDF.
    std::vector<std::string> lexicon(static_cast<size_t>(spec.background_vocab_size));
    std::set<std::string> special;
    for (const auto& tgt : spec.targets) {
        special.insert(tgt.word);
        special.insert(tgt.pool_a.begin(), tgt.pool_a.end());
        special.insert(tgt.pool_b.begin(), tgt.pool_b.end());
    }
    for (int64_t i = 0; i < spec.background_vocab_size; ++i) {
        lexicon[static_cast<size_t>(i)] = background_word(i);
        if (special.count(lexicon[static_cast<size_t>(i)]))
            throw ConfigError("target/pool word '" + lexicon[static_cast<size_t>(i)] +
                              "' collides with a generated background word");
    }
    std::vector<double> cdf(lexicon.size());
    double total = 0.0;
    for (size_t r = 0; r < lexicon.size(); ++r) {
        total += std::pow(static_cast<double>(r + 1), -1.1);
        cdf[r] = total;
    }
    for (double& c : cdf) c /= total;
    cdf.back() = 1.0;

    GroundTruth truth;
    truth.seed = spec.seed;
    for (const auto& tgt : spec.targets) {
        GroundTruth::Entry e;
        e.word = tgt.word;
        e.threshold = spec.shift_threshold;
        e.mixture = tgt.mixture;
        e.occurrences = tgt.occurrences;
        e.t_star = first_crossing(tgt.mixture, spec.shift_threshold);
        truth.entries.push_back(std::move(e));
        if (tgt.occurrences.back() == 0 && warnings)
            warnings->push_back(
                "target '" + tgt.word + "' has zero occurrences in the last span; reverse "
                "chaining will initialize it from random vectors");
    }

    Rng rng(spec.seed);
    const auto draw_background = [&]() -> const std::string& {
        const double u = rng.next_double();
        const size_t r = static_cast<size_t>(
            std::upper_bound(cdf.begin(), cdf.end(), u) - cdf.begin());
        return lexicon[r < lexicon.size() ? r : lexicon.size() - 1];
    };

    const int L = spec.sentence_length;
    std::vector<int32_t> plan;
    std::vector<std::string> sent;
    for (int t = 0; t < T; ++t) {
        // Sentence plan: -1 for background, otherwise the target index;
        // shuffled so target occurrences interleave with background text.
        plan.assign(static_cast<size_t>(spec.background_sentences_per_span), -1);
        for (size_t k = 0; k < spec.targets.size(); ++k)
            plan.insert(plan.end(),
                        static_cast<size_t>(spec.targets[k].occurrences[static_cast<size_t>(t)]),
                        static_cast<int32_t>(k));
        for (size_t i = plan.size(); i > 1; --i)
            std::swap(plan[i - 1], plan[static_cast<size_t>(rng.next_below(i))]);

        for (const int32_t kind : plan) {
            sent.clear();
            if (kind < 0) {
                for (int j = 0; j < L; ++j) sent.push_back(draw_background());
            } else {
                const auto& tgt = spec.targets[static_cast<size_t>(kind)];
                const bool sense_b = rng.next_bernoulli(tgt.mixture[static_cast<size_t>(t)]);
                const auto& pool = sense_b ? tgt.pool_b : tgt.pool_a;
                for (int j = 0; j < L; ++j) {
                    if (j == L / 2)
                        sent.push_back(tgt.word);
                    else
                        sent.push_back(pool[rng.next_below(pool.size())]);
                }
            }
            sink(t, sent);
        }
    }
    return truth;
}

}  // namespace detail

// In-memory synthesis.
inline SynthesisResult synthesize(const SyntheticCorpusSpec& spec) {
    SynthesisResult result;
    result.spans.resize(static_cast<size_t>(spec.time.span_count()));
    for (int t = 0; t < spec.time.span_count(); ++t)
        result.spans[static_cast<size_t>(t)].span_index = t;
    result.ground_truth = detail::generate_corpus(
        spec,
        [&](int t, const std::vector<std::string>& sent) {
            auto& span = result.spans[static_cast<size_t>(t)];
            span.token_count += sent.size();
            span.sentences.push_back(sent);
        },
        &result.warnings);
    return result;
}

struct SynthToDirResult {
    GroundTruth ground_truth;
    std::vector<std::string> warnings;
    std::vector<uint64_t> span_token_counts;
};

// Streaming synthesis straight to the document-directory layout the ingest
// stage consumes: one <year>_synthetic.txt per span (sentences dated at the
// span's first year) plus ground_truth.json. Handles corpora of any size.
inline SynthToDirResult synthesize_to_dir(const SyntheticCorpusSpec& spec,
                                          const std::filesystem::path& out_dir) {
    namespace fs = std::filesystem;
    fs::create_directories(out_dir);
    SynthToDirResult result;
    result.span_token_counts.assign(static_cast<size_t>(spec.time.span_count()), 0);
    std::ofstream out;
    int open_span = -1;
    result.ground_truth = detail::generate_corpus(
        spec,
        [&](int t, const std::vector<std::string>& sent) {
            if (t != open_span) {
                const int year = spec.time.span_start_year(t);
                out.close();
                out.open(out_dir / (std::to_string(year) + "_synthetic.txt"),
                         std::ios::binary | std::ios::trunc);
                if (!out)
                    throw DataError("cannot write synthetic span file in " + out_dir.string());
                open_span = t;
            }
            for (size_t i = 0; i < sent.size(); ++i) {
                if (i) out << ' ';
                out << sent[i];
            }
            out << '\n';
            result.span_token_counts[static_cast<size_t>(t)] += sent.size();
        },
        &result.warnings);
    out.close();
    write_text_file(out_dir / "ground_truth.json",
                    result.ground_truth.to_json().dump(2) + "\n");
    return result;
}

inline SynthesisResult synthesize(const SyntheticShiftSpec& spec, const TimeSpanConfig& cfg,
                                  int64_t background_sentences_per_span = 1000,
                                  double shift_threshold = 0.25) {
    SyntheticCorpusSpec cs;
    cs.time = cfg;
    cs.background_vocab_size = spec.background_vocab_size;
    cs.background_sentences_per_span = background_sentences_per_span;
    cs.sentence_length = spec.sentence_length;
    cs.seed = spec.seed;
    cs.shift_threshold = shift_threshold;
    cs.targets.push_back({spec.target_word, spec.sense_a_context_pool, spec.sense_b_context_pool,
                          spec.per_span_mixture, spec.per_span_target_occurrences});
    return synthesize(cs);
}

// --- synth spec file ----------------------------------------------------------
//
// Key-value lines, '#' comments, one [target] section per planted word:
//
//   start_year = 2000
//   end_year = 2015
//   span_width_years = 2
//   background_vocab_size = 5000
//   background_sentences_per_span = 1500
//   sentence_length = 10
//   seed = 7
//   shift_threshold = 0.25
//   [target]
//   target_word = tsunami
//   sense_a_context_pool = onda mare costa
//   sense_b_context_pool = crisi voto borsa
//   per_span_mixture = 0, 0, 0.4, 0.5
//   per_span_target_occurrences = 80, 80, 80, 80

namespace detail {

inline std::vector<double> parse_real_list(const std::string& value, const std::string& key) {
    std::vector<double> out;
    std::string item;
    std::istringstream input(value);
    while (std::getline(input, item, ',')) {
        const std::string s = trim(item);
        if (s.empty()) continue;
        try {
            size_t used = 0;
            out.push_back(std::stod(s, &used));
            if (used != s.size()) throw std::invalid_argument(s);
        } catch (const std::exception&) {
            throw ConfigError("cannot parse '" + s + "' in " + key);
        }
    }
    if (out.empty()) throw ConfigError(key + " is empty");
    return out;
}

}  // namespace detail

inline SyntheticCorpusSpec parse_synth_spec(const std::string& text) {
    SyntheticCorpusSpec spec;
    SyntheticCorpusSpec::Target* current = nullptr;
    bool saw_start = false, saw_end = false;
    std::istringstream input(text);
    std::string line;
    int lineno = 0;
    while (std::getline(input, line)) {
        ++lineno;
        const std::string s = trim(line);
        if (s.empty() || s[0] == '#') continue;
        if (s == "[target]") {
            spec.targets.emplace_back();
            current = &spec.targets.back();
            continue;
        }
        const auto eq = s.find('=');
        if (eq == std::string::npos)
            throw ConfigError("synth spec line " + std::to_string(lineno) +
                              ": expected key = value, got '" + s + "'");
        const std::string key = trim(s.substr(0, eq));
        const std::string value = trim(s.substr(eq + 1));
        try {
            if (key == "start_year") { spec.time.start_year = std::stoi(value); saw_start = true; }
            else if (key == "end_year") { spec.time.end_year = std::stoi(value); saw_end = true; }
            else if (key == "span_width_years") spec.time.span_width_years = std::stoi(value);
            else if (key == "background_vocab_size") spec.background_vocab_size = std::stoll(value);
            else if (key == "background_sentences_per_span")
                spec.background_sentences_per_span = std::stoll(value);
            else if (key == "sentence_length") spec.sentence_length = std::stoi(value);
            else if (key == "seed") spec.seed = std::stoull(value);
            else if (key == "shift_threshold") spec.shift_threshold = std::stod(value);
            else if (key == "target_word" || key == "sense_a_context_pool" ||
                     key == "sense_b_context_pool" || key == "per_span_mixture" ||
                     key == "per_span_target_occurrences") {
                if (!current)
                    throw ConfigError("'" + key + "' appears before any [target] section");
                if (key == "target_word") current->word = value;
                else if (key == "sense_a_context_pool") current->pool_a = split_ws(value);
                else if (key == "sense_b_context_pool") current->pool_b = split_ws(value);
                else if (key == "per_span_mixture")
                    current->mixture = detail::parse_real_list(value, key);
                else {
                    current->occurrences.clear();
                    for (const double v : detail::parse_real_list(value, key))
                        current->occurrences.push_back(static_cast<int64_t>(v));
                }
            } else {
                throw ConfigError("unknown synth spec key '" + key + "' (line " +
                                  std::to_string(lineno) + ")");
            }
        } catch (const ConfigError&) {
            throw;
        } catch (const std::exception&) {
            throw ConfigError("synth spec line " + std::to_string(lineno) +
                              ": bad value for '" + key + "'");
        }
    }
    if (!saw_start || !saw_end)
        throw ConfigError("synth spec must set start_year and end_year");
    return spec;
}

inline SyntheticCorpusSpec load_synth_spec(const std::filesystem::path& path) {
    return parse_synth_spec(read_text_file(path));
}

}  // namespace tempovec
