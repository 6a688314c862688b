#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "tempovec/common.hpp"
#include "tempovec/corpus.hpp"
#include "tempovec/tokenize.hpp"
#include "tempovec/vocab.hpp"

namespace tempovec {

using DocumentFn = std::function<void(const Document&)>;

// Corpus directory layout: UTF-8 text files named YYYY*.txt, year taken from
// the leading four digits; one document per file. Files are visited in
// sorted name order so ingestion is reproducible.
inline void for_each_document_in_dir(const std::filesystem::path& dir, const DocumentFn& fn,
                                     int64_t* skipped_files = nullptr) {
    namespace fs = std::filesystem;
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(dir))
        if (entry.is_regular_file()) files.push_back(entry.path());
    std::sort(files.begin(), files.end());
    for (const auto& f : files) {
        const std::string name = f.filename().string();
        const bool named_ok = name.size() >= 8 && name.ends_with(".txt") &&
                              std::isdigit(static_cast<unsigned char>(name[0])) &&
                              std::isdigit(static_cast<unsigned char>(name[1])) &&
                              std::isdigit(static_cast<unsigned char>(name[2])) &&
                              std::isdigit(static_cast<unsigned char>(name[3]));
        if (!named_ok) {
            if (skipped_files) ++*skipped_files;
            continue;
        }
        Document doc;
        doc.year = std::stoi(name.substr(0, 4));
        doc.text = read_text_file(f);
        fn(doc);
    }
}

// Line-delimited record file: one JSON object per line with integer "year"
// and string "text".
inline void for_each_document_in_jsonl(const std::filesystem::path& file, const DocumentFn& fn) {
    std::ifstream in(file);
    if (!in) throw DataError("cannot open record file: " + file.string());
    std::string line;
    int64_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (trim(line).empty()) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw DataError(file.string() + ":" + std::to_string(lineno) +
                            ": malformed record: " + e.what());
        }
        if (!j.contains("year") || !j.contains("text") || !j["year"].is_number_integer() ||
            !j["text"].is_string())
            throw DataError(file.string() + ":" + std::to_string(lineno) +
                            ": record needs integer 'year' and string 'text'");
        Document doc;
        doc.year = j["year"].get<int>();
        doc.text = j["text"].get<std::string>();
        fn(doc);
    }
}

inline void for_each_document(const std::filesystem::path& path, const DocumentFn& fn,
                              int64_t* skipped_files = nullptr) {
    namespace fs = std::filesystem;
    if (fs::is_directory(path)) {
        for_each_document_in_dir(path, fn, skipped_files);
    } else if (fs::is_regular_file(path)) {
        for_each_document_in_jsonl(path, fn);
    } else {
        throw DataError("corpus path does not exist: " + path.string());
    }
}

struct IngestConfig {
    TimeSpanConfig time;
    int64_t min_count = 5;
    double alpha = 0.75;
    bool allow_empty_spans = false;
};

struct IngestResult {
    BucketStats stats;
    int64_t skipped_files = 0;
    size_t vocab_size = 0;
    std::vector<uint64_t> retained_span_tokens;  // after min-count filtering
    std::vector<std::string> span_files;
    std::string vocab_file;
    std::string vocab_hash;
};

// Streaming two-pass ingestion. Pass 1 tokenizes each document into a
// normalized per-span scratch file while counting corpus-wide frequencies;
// pass 2 builds the vocabulary, encodes each span and writes the binary
// span token files. Memory stays bounded by the vocabulary, not the corpus.
inline IngestResult ingest_corpus(const std::filesystem::path& input,
                                  const IngestConfig& cfg,
                                  const std::filesystem::path& out_dir) {
    namespace fs = std::filesystem;
    cfg.time.validate();
    if (cfg.min_count < 1) throw ConfigError("min_count must be >= 1");
    const int T = cfg.time.span_count();
    fs::create_directories(out_dir);

    IngestResult result;
    result.stats.span_token_counts.assign(static_cast<size_t>(T), 0);
    result.stats.span_sentence_counts.assign(static_cast<size_t>(T), 0);

    std::vector<fs::path> scratch(static_cast<size_t>(T));
    std::vector<std::ofstream> scratch_out(static_cast<size_t>(T));
    for (int t = 0; t < T; ++t) {
        scratch[static_cast<size_t>(t)] =
            out_dir / (".scratch_span_" + std::to_string(t) + ".txt");
        scratch_out[static_cast<size_t>(t)].open(scratch[static_cast<size_t>(t)],
                                                 std::ios::binary | std::ios::trunc);
        if (!scratch_out[static_cast<size_t>(t)])
            throw DataError("cannot create scratch file in " + out_dir.string());
    }

    std::unordered_map<std::string, int64_t> counts;
    std::vector<std::string> sentence;
    for_each_document(
        input,
        [&](const Document& doc) {
            ++result.stats.documents_in;
            const int t = cfg.time.span_of_year(doc.year);
            if (t < 0) {
                ++result.stats.out_of_range;
                return;
            }
            auto& out = scratch_out[static_cast<size_t>(t)];
            bool any = false;
            size_t pos = 0;
            const std::string& text = doc.text;
            while (pos <= text.size()) {
                const size_t nl = text.find('\n', pos);
                const size_t end = (nl == std::string::npos) ? text.size() : nl;
                sentence.clear();
                tokenize_into(std::string_view(text).substr(pos, end - pos),
                              [&](const std::string& tok) { sentence.push_back(tok); });
                if (!sentence.empty()) {
                    any = true;
                    result.stats.span_token_counts[static_cast<size_t>(t)] += sentence.size();
                    ++result.stats.span_sentence_counts[static_cast<size_t>(t)];
                    for (size_t i = 0; i < sentence.size(); ++i) {
                        ++counts[sentence[i]];
                        if (i) out << ' ';
                        out << sentence[i];
                    }
                    out << '\n';
                }
                if (nl == std::string::npos) break;
                pos = nl + 1;
            }
            if (!any) ++result.stats.dropped_empty;
        },
        &result.skipped_files);
    for (auto& out : scratch_out) out.close();

    if (result.stats.documents_in == 0) {
        for (const auto& p : scratch) fs::remove(p);
        throw DataError("no documents found in " + input.string());
    }
    if (counts.empty()) {
        for (const auto& p : scratch) fs::remove(p);
        throw DataError("documents contained no tokens after normalization");
    }

    const Vocabulary vocab = Vocabulary::from_counts(counts, cfg.min_count, cfg.alpha);
    counts.clear();

    result.vocab_size = vocab.size();
    result.retained_span_tokens.assign(static_cast<size_t>(T), 0);
    for (int t = 0; t < T; ++t) {
        SpanCorpus sc;
        sc.span_index = t;
        sc.start_year = cfg.time.span_start_year(t);
        sc.end_year = cfg.time.span_end_year(t);
        std::ifstream in(scratch[static_cast<size_t>(t)], std::ios::binary);
        std::string line;
        std::vector<int32_t> ids;
        while (std::getline(in, line)) {
            ids.clear();
            size_t i = 0;
            while (i < line.size()) {
                const size_t sp = line.find(' ', i);
                const size_t end = (sp == std::string::npos) ? line.size() : sp;
                const int32_t id = vocab.id_of(line.substr(i, end - i));
                if (id >= 0) ids.push_back(id);
                if (sp == std::string::npos) break;
                i = sp + 1;
            }
            if (!ids.empty()) sc.add_sentence(ids);
        }
        in.close();
        fs::remove(scratch[static_cast<size_t>(t)]);
        result.retained_span_tokens[static_cast<size_t>(t)] = sc.token_count();
        if (sc.token_count() == 0 && !cfg.allow_empty_spans)
            throw DataError("span " + std::to_string(t) + " (" + cfg.time.span_label(t) +
                            ") is empty; pass --allow-empty-spans to accept");
        const std::string fname = span_file_name(cfg.time, t, ".tok");
        save_span_corpus(sc, out_dir / fname);
        result.span_files.push_back(fname);
    }

    result.vocab_file = "vocab.tsv";
    vocab.save(out_dir / result.vocab_file);
    result.vocab_hash = to_hex(vocab.hash());

    nlohmann::json manifest;
    manifest["format"] = "tempovec-corpus v1";
    manifest["time_spans"] = {{"start_year", cfg.time.start_year},
                              {"end_year", cfg.time.end_year},
                              {"span_width_years", cfg.time.span_width_years},
                              {"count", T}};
    manifest["min_count"] = cfg.min_count;
    manifest["alpha"] = cfg.alpha;
    manifest["allow_empty_spans"] = cfg.allow_empty_spans;
    manifest["documents"] = result.stats.documents_in;
    manifest["out_of_range_documents"] = result.stats.out_of_range;
    manifest["empty_documents"] = result.stats.dropped_empty;
    manifest["skipped_files"] = result.skipped_files;
    manifest["span_files"] = result.span_files;
    manifest["span_tokens_raw"] = result.stats.span_token_counts;
    manifest["span_tokens_retained"] = result.retained_span_tokens;
    manifest["span_sentences"] = result.stats.span_sentence_counts;
    manifest["vocab_file"] = result.vocab_file;
    manifest["vocab_hash"] = result.vocab_hash;
    manifest["vocab_size"] = result.vocab_size;
    write_text_file(out_dir / "corpus.json", manifest.dump(2) + "\n");
    return result;
}

// Reader for an ingested corpus directory.
struct CorpusDir {
    std::filesystem::path dir;
    TimeSpanConfig time;
    int64_t min_count = 5;
    double alpha = 0.75;
    std::vector<std::string> span_files;
    std::string vocab_file;
    std::string vocab_hash;

    static CorpusDir open(const std::filesystem::path& dir) {
        const auto j = nlohmann::json::parse(read_text_file(dir / "corpus.json"));
        if (j.value("format", "") != std::string("tempovec-corpus v1"))
            throw DataError("not a tempovec corpus directory: " + dir.string());
        CorpusDir c;
        c.dir = dir;
        c.time.start_year = j.at("time_spans").at("start_year").get<int>();
        c.time.end_year = j.at("time_spans").at("end_year").get<int>();
        c.time.span_width_years = j.at("time_spans").at("span_width_years").get<int>();
        c.min_count = j.at("min_count").get<int64_t>();
        c.alpha = j.at("alpha").get<double>();
        c.span_files = j.at("span_files").get<std::vector<std::string>>();
        c.vocab_file = j.at("vocab_file").get<std::string>();
        c.vocab_hash = j.at("vocab_hash").get<std::string>();
        return c;
    }

    Vocabulary load_vocab() const { return Vocabulary::load(dir / vocab_file); }

    SpanCorpus load_span(int t) const {
        return load_span_corpus(dir / span_files[static_cast<size_t>(t)]);
    }
};

}  // namespace tempovec
