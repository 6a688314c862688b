#pragma once

#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "tempovec/common.hpp"
#include "tempovec/corpus.hpp"
#include "tempovec/embedding.hpp"
#include "tempovec/sgns.hpp"
#include "tempovec/vocab.hpp"

namespace tempovec {

enum class ChainDirection { reverse, forward };

inline const char* to_string(ChainDirection d) {
    return d == ChainDirection::reverse ? "reverse" : "forward";
}

inline ChainDirection parse_direction(const std::string& s) {
    if (s == "reverse") return ChainDirection::reverse;
    if (s == "forward") return ChainDirection::forward;
    throw ConfigError("direction must be 'reverse' or 'forward', got '" + s + "'");
}

inline const char* to_string(LrSchedule s) {
    return s == LrSchedule::linear_decay ? "linear_decay" : "constant";
}

inline LrSchedule parse_lr_schedule(const std::string& s) {
    if (s == "linear_decay" || s == "linear") return LrSchedule::linear_decay;
    if (s == "constant") return LrSchedule::constant;
    throw ConfigError("lr schedule must be 'linear_decay' or 'constant', got '" + s + "'");
}

// reverse trains T-1, T-2, ..., 0 (latest span first); forward trains 0..T-1.
inline std::vector<int> chain_order(int span_count, ChainDirection d) {
    std::vector<int> order(static_cast<size_t>(span_count));
    for (int i = 0; i < span_count; ++i)
        order[static_cast<size_t>(i)] = d == ChainDirection::reverse ? span_count - 1 - i : i;
    return order;
}

// Per-span seed folds in both span index and direction, so forward and
// reverse runs over the same corpus never share RNG streams.
inline uint64_t chain_span_seed(uint64_t base_seed, int span_index, ChainDirection d) {
    const uint64_t tag = (static_cast<uint64_t>(span_index) << 1) |
                         (d == ChainDirection::forward ? 1u : 0u);
    return derive_seed(base_seed, tag);
}

namespace detail {
constexpr uint64_t kTagInit = 0x696e6974ULL;  // "init"
}

struct ChainOptions {
    // Per-span epoch overrides (chronological index); empty = cfg.epochs.
    std::vector<int> epochs_per_span;
    ProgressFn progress;
    std::function<void(int span_index, const std::string& note)> on_span;
};

struct ChronoModel {
    ChainDirection direction = ChainDirection::reverse;
    TrainingConfig cfg;
    std::vector<EmbeddingSpace> spaces;  // chronological order, span_index == position
    const Vocabulary* vocab = nullptr;

    int span_count() const { return static_cast<int>(spaces.size()); }
};

namespace detail {

template <typename Fn>
auto with_span_context(int span_index, Fn&& fn) {
    const auto tag = [&](const char* what) {
        return "span " + std::to_string(span_index) + ": " + what;
    };
    try {
        return fn();
    } catch (const ConfigError& e) {
        throw ConfigError(tag(e.what()));
    } catch (const DataError& e) {
        throw DataError(tag(e.what()));
    } catch (const NumericError& e) {
        throw NumericError(tag(e.what()));
    }
}

inline int epochs_for(const TrainingConfig& cfg, const std::vector<int>& per_span, int t) {
    if (per_span.empty()) return cfg.epochs;
    if (static_cast<size_t>(t) >= per_span.size())
        throw ConfigError("epochs_per_span shorter than span count");
    return per_span[static_cast<size_t>(t)];
}

}  // namespace detail

// Chained training, all spaces kept in memory. The first-trained span starts
// from init_random; every later span starts from a full copy (both matrices)
// of the previously trained space.
inline ChronoModel chain_train(const std::vector<SpanCorpus>& spans, const Vocabulary& vocab,
                               const NegativeSamplingTable& table, const TrainingConfig& cfg,
                               ChainDirection direction, const ChainOptions& opt = {}) {
    cfg.validate();
    if (spans.size() < 2) throw ConfigError("chained training needs at least 2 spans");
    const int T = static_cast<int>(spans.size());
    ChronoModel model;
    model.direction = direction;
    model.cfg = cfg;
    model.vocab = &vocab;
    model.spaces.resize(spans.size());

    const std::vector<int> order = chain_order(T, direction);
    const EmbeddingSpace* prev = nullptr;
    for (const int t : order) {
        TrainingConfig span_cfg = cfg;
        span_cfg.seed = chain_span_seed(cfg.seed, t, direction);
        span_cfg.epochs = detail::epochs_for(cfg, opt.epochs_per_span, t);
        if (opt.on_span) opt.on_span(t, prev ? "chained init" : "random init");
        EmbeddingSpace space = detail::with_span_context(t, [&] {
            const EmbeddingSpace init =
                prev ? *prev
                     : init_random(static_cast<int32_t>(vocab.size()), cfg.dim,
                                   derive_seed(span_cfg.seed, detail::kTagInit), t);
            if (spans[static_cast<size_t>(t)].token_count() == 0 && opt.on_span)
                opt.on_span(t, "empty span: space copied unchanged");
            return train_span(spans[static_cast<size_t>(t)], vocab, table, init, span_cfg,
                              opt.progress);
        });
        model.spaces[static_cast<size_t>(t)] = std::move(space);
        prev = &model.spaces[static_cast<size_t>(t)];
    }
    return model;
}

// Per-word occurrence counts for each span, used by the drop detector's
// frequency guard.
inline std::vector<std::vector<int64_t>> occurrence_counts(const std::vector<SpanCorpus>& spans,
                                                           size_t vocab_size) {
    std::vector<std::vector<int64_t>> counts(spans.size(),
                                             std::vector<int64_t>(vocab_size, 0));
    for (size_t t = 0; t < spans.size(); ++t)
        for (const int32_t id : spans[t].tokens) ++counts[t][static_cast<size_t>(id)];
    return counts;
}

// --- on-disk model directory --------------------------------------------------

inline constexpr char kCountsMagic[9] = "TVCNT1\0\0";

struct ModelManifest {
    ChainDirection direction = ChainDirection::reverse;
    TrainingConfig cfg;
    TimeSpanConfig time;
    std::string vocab_file = "vocab.tsv";
    std::string vocab_hash;
    std::string counts_file = "span_counts.bin";
    struct SpanEntry {
        int index = 0;
        std::string label;
        std::string file;
        uint64_t token_count = 0;
        uint64_t sentence_count = 0;
        uint64_t trained_token_count = 0;
        bool completed = false;
    };
    std::vector<SpanEntry> spans;

    nlohmann::json to_json() const {
        nlohmann::json j;
        j["format"] = "tempovec-model v1";
        j["direction"] = to_string(direction);
        j["config"] = {{"dim", cfg.dim},
                       {"window", cfg.window},
                       {"learning_rate", cfg.learning_rate},
                       {"min_learning_rate", cfg.min_learning_rate},
                       {"negatives", cfg.negatives},
                       {"epochs", cfg.epochs},
                       {"lr_schedule", to_string(cfg.lr_schedule)},
                       {"dynamic_window", cfg.dynamic_window},
                       {"subsample", cfg.subsample},
                       {"seed", cfg.seed},
                       {"threads", cfg.threads}};
        j["time_spans"] = {{"start_year", time.start_year},
                           {"end_year", time.end_year},
                           {"span_width_years", time.span_width_years},
                           {"count", time.span_count()}};
        j["vocab_file"] = vocab_file;
        j["vocab_hash"] = vocab_hash;
        j["counts_file"] = counts_file;
        j["spans"] = nlohmann::json::array();
        for (const auto& s : spans)
            j["spans"].push_back({{"index", s.index},
                                  {"label", s.label},
                                  {"file", s.file},
                                  {"token_count", s.token_count},
                                  {"sentence_count", s.sentence_count},
                                  {"trained_token_count", s.trained_token_count},
                                  {"completed", s.completed}});
        return j;
    }

    static ModelManifest from_json(const nlohmann::json& j) {
        ModelManifest m;
        if (j.value("format", "") != std::string("tempovec-model v1"))
            throw DataError("not a tempovec model manifest");
        m.direction = parse_direction(j.at("direction").get<std::string>());
        const auto& c = j.at("config");
        m.cfg.dim = c.at("dim").get<int>();
        m.cfg.window = c.at("window").get<int>();
        m.cfg.learning_rate = c.at("learning_rate").get<double>();
        m.cfg.min_learning_rate = c.at("min_learning_rate").get<double>();
        m.cfg.negatives = c.at("negatives").get<int>();
        m.cfg.epochs = c.at("epochs").get<int>();
        m.cfg.lr_schedule = parse_lr_schedule(c.at("lr_schedule").get<std::string>());
        m.cfg.dynamic_window = c.at("dynamic_window").get<bool>();
        m.cfg.subsample = c.at("subsample").get<double>();
        m.cfg.seed = c.at("seed").get<uint64_t>();
        m.cfg.threads = c.at("threads").get<int>();
        const auto& t = j.at("time_spans");
        m.time.start_year = t.at("start_year").get<int>();
        m.time.end_year = t.at("end_year").get<int>();
        m.time.span_width_years = t.at("span_width_years").get<int>();
        m.vocab_file = j.at("vocab_file").get<std::string>();
        m.vocab_hash = j.at("vocab_hash").get<std::string>();
        m.counts_file = j.at("counts_file").get<std::string>();
        for (const auto& s : j.at("spans")) {
            ModelManifest::SpanEntry e;
            e.index = s.at("index").get<int>();
            e.label = s.at("label").get<std::string>();
            e.file = s.at("file").get<std::string>();
            e.token_count = s.at("token_count").get<uint64_t>();
            e.sentence_count = s.at("sentence_count").get<uint64_t>();
            e.trained_token_count = s.at("trained_token_count").get<uint64_t>();
            e.completed = s.at("completed").get<bool>();
            m.spans.push_back(std::move(e));
        }
        return m;
    }

    void save(const std::filesystem::path& path) const {
        write_text_file(path, to_json().dump(2) + "\n");
    }

    static ModelManifest load(const std::filesystem::path& path) {
        return from_json(nlohmann::json::parse(read_text_file(path)));
    }
};

namespace detail {

// The counts sidecar is laid out as header + T fixed-size rows so completed
// spans can be written in place during a resumable run.
inline void counts_file_init(const std::filesystem::path& path, uint32_t vocab_size,
                             uint32_t span_count) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot create counts file: " + path.string());
    write_magic(out, kCountsMagic);
    write_pod<uint32_t>(out, vocab_size);
    write_pod<uint32_t>(out, span_count);
    const std::vector<uint32_t> zeros(vocab_size, 0);
    for (uint32_t t = 0; t < span_count; ++t)
        out.write(reinterpret_cast<const char*>(zeros.data()),
                  static_cast<std::streamsize>(zeros.size() * sizeof(uint32_t)));
    if (!out) throw DataError("short write on counts file: " + path.string());
}

inline void counts_file_write_row(const std::filesystem::path& path, uint32_t vocab_size,
                                  int span_index, const std::vector<uint32_t>& row) {
    std::fstream f(path, std::ios::binary | std::ios::in | std::ios::out);
    if (!f) throw DataError("cannot open counts file for update: " + path.string());
    const std::streamoff off = 16 + static_cast<std::streamoff>(span_index) *
                                        static_cast<std::streamoff>(vocab_size) * 4;
    f.seekp(off);
    f.write(reinterpret_cast<const char*>(row.data()),
            static_cast<std::streamsize>(row.size() * sizeof(uint32_t)));
    if (!f) throw DataError("short write on counts file: " + path.string());
}

}  // namespace detail

inline std::vector<std::vector<int64_t>> load_span_counts(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open counts file: " + path.string());
    expect_magic(in, kCountsMagic, path.string());
    const uint32_t v = read_pod<uint32_t>(in);
    const uint32_t t = read_pod<uint32_t>(in);
    std::vector<std::vector<int64_t>> counts(t, std::vector<int64_t>(v));
    std::vector<uint32_t> row(v);
    for (uint32_t s = 0; s < t; ++s) {
        in.read(reinterpret_cast<char*>(row.data()),
                static_cast<std::streamsize>(row.size() * sizeof(uint32_t)));
        if (!in) throw DataError("truncated counts file: " + path.string());
        for (uint32_t i = 0; i < v; ++i) counts[s][i] = row[i];
    }
    return counts;
}

struct ChainToDirOptions {
    bool resume = true;
    std::vector<int> epochs_per_span;
    ProgressFn progress;
    std::function<void(int span_index, const std::string& note)> on_span;
};

using SpanLoader = std::function<SpanCorpus(int span_index)>;

// Disk-backed chained training. At most two spaces (previous and current)
// are resident; completed spans are flushed to span_<idx>_<label>.bin and
// recorded in manifest.json, which makes interrupted runs resumable.
inline ModelManifest chain_train_to_dir(const SpanLoader& load_span, const TimeSpanConfig& time,
                                        const Vocabulary& vocab, const NegativeSamplingTable& table,
                                        const TrainingConfig& cfg, ChainDirection direction,
                                        const std::filesystem::path& dir,
                                        const ChainToDirOptions& opt = {}) {
    namespace fs = std::filesystem;
    cfg.validate();
    time.validate();
    const int T = time.span_count();
    fs::create_directories(dir);

    const std::string vocab_text = vocab.serialize();
    const std::string vocab_hash = to_hex(fnv1a64(vocab_text));
    const fs::path manifest_path = dir / "manifest.json";

    ModelManifest manifest;
    bool fresh = true;
    if (opt.resume && fs::exists(manifest_path)) {
        manifest = ModelManifest::load(manifest_path);
        if (manifest.vocab_hash != vocab_hash || manifest.direction != direction ||
            manifest.time.start_year != time.start_year ||
            manifest.time.end_year != time.end_year ||
            manifest.time.span_width_years != time.span_width_years ||
            manifest.cfg.dim != cfg.dim || manifest.cfg.seed != cfg.seed ||
            manifest.cfg.window != cfg.window || manifest.cfg.negatives != cfg.negatives ||
            manifest.cfg.epochs != cfg.epochs)
            throw ConfigError("model directory " + dir.string() +
                              " holds an incompatible run; use a fresh directory");
        fresh = false;
    }
    if (fresh) {
        manifest.direction = direction;
        manifest.cfg = cfg;
        manifest.time = time;
        manifest.vocab_hash = vocab_hash;
        manifest.spans.resize(static_cast<size_t>(T));
        for (int t = 0; t < T; ++t) {
            auto& e = manifest.spans[static_cast<size_t>(t)];
            e.index = t;
            e.label = time.span_label(t);
            e.file = span_file_name(time, t, ".bin");
            e.completed = false;
        }
        write_text_file(dir / manifest.vocab_file, vocab_text);
        detail::counts_file_init(dir / manifest.counts_file,
                                 static_cast<uint32_t>(vocab.size()),
                                 static_cast<uint32_t>(T));
        manifest.save(manifest_path);
    }

    const std::vector<int> order = chain_order(T, direction);
    std::optional<EmbeddingSpace> prev;
    std::string prev_file;
    for (const int t : order) {
        auto& entry = manifest.spans[static_cast<size_t>(t)];
        if (entry.completed && fs::exists(dir / entry.file)) {
            prev.reset();  // only materialize when the next span needs it
            prev_file = entry.file;
            if (opt.on_span) opt.on_span(t, "already trained, skipping");
            continue;
        }
        if (!prev && !prev_file.empty()) prev = load_embedding_space(dir / prev_file);

        TrainingConfig span_cfg = cfg;
        span_cfg.seed = chain_span_seed(cfg.seed, t, direction);
        span_cfg.epochs = detail::epochs_for(cfg, opt.epochs_per_span, t);
        if (opt.on_span) opt.on_span(t, prev ? "chained init" : "random init");

        EmbeddingSpace space = detail::with_span_context(t, [&] {
            SpanCorpus corpus = load_span(t);
            if (corpus.token_count() == 0 && opt.on_span)
                opt.on_span(t, "empty span: space copied unchanged");
            std::vector<uint32_t> row(vocab.size(), 0);
            for (const int32_t id : corpus.tokens) ++row[static_cast<size_t>(id)];
            detail::counts_file_write_row(dir / manifest.counts_file,
                                          static_cast<uint32_t>(vocab.size()), t, row);
            entry.token_count = corpus.token_count();
            entry.sentence_count = corpus.sentence_count();
            const EmbeddingSpace init =
                prev ? *prev
                     : init_random(static_cast<int32_t>(vocab.size()), cfg.dim,
                                   derive_seed(span_cfg.seed, detail::kTagInit), t);
            return train_span(corpus, vocab, table, init, span_cfg, opt.progress);
        });
        entry.trained_token_count = space.trained_token_count;
        save_embedding_space(space, dir / entry.file);
        entry.completed = true;
        manifest.save(manifest_path);
        prev = std::move(space);
        prev_file = entry.file;
    }
    return manifest;
}

// Read access to a trained model directory: manifest, vocabulary, counts and
// per-span embedding files loaded on demand.
class ModelDir {
public:
    static ModelDir open(const std::filesystem::path& dir) {
        ModelDir m;
        m.dir_ = dir;
        m.manifest_ = ModelManifest::load(dir / "manifest.json");
        m.vocab_ = Vocabulary::load(dir / m.manifest_.vocab_file);
        if (to_hex(m.vocab_.hash()) != m.manifest_.vocab_hash)
            throw DataError("vocabulary file does not match manifest hash in " + dir.string());
        for (const auto& s : m.manifest_.spans)
            if (!s.completed)
                throw DataError("model directory " + dir.string() + " is incomplete (span " +
                                std::to_string(s.index) + " not trained)");
        return m;
    }

    const ModelManifest& manifest() const { return manifest_; }
    const Vocabulary& vocab() const { return vocab_; }
    const std::filesystem::path& dir() const { return dir_; }
    int span_count() const { return static_cast<int>(manifest_.spans.size()); }
    std::string span_label(int t) const { return manifest_.spans[static_cast<size_t>(t)].label; }

    EmbeddingSpace load_space(int t) const {
        return load_embedding_space(dir_ / manifest_.spans[static_cast<size_t>(t)].file);
    }

    std::vector<std::vector<int64_t>> load_counts() const {
        return load_span_counts(dir_ / manifest_.counts_file);
    }

private:
    std::filesystem::path dir_;
    ModelManifest manifest_;
    Vocabulary vocab_;
};

}  // namespace tempovec
