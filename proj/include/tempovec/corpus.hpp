#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <span>
#include <string>
#include <vector>

#include "tempovec/common.hpp"
#include "tempovec/tokenize.hpp"

namespace tempovec {

struct TimeSpanConfig {
    int start_year = 0;
    int end_year = 0;
    int span_width_years = 1;
    // When false (default) the covered years must divide evenly into spans;
    // a short final span is rejected rather than silently produced.
    bool allow_truncated_last_span = false;

    int span_count() const {
        const int years = end_year - start_year + 1;
        return (years + span_width_years - 1) / span_width_years;
    }

    void validate() const {
        if (span_width_years < 1) throw ConfigError("span width must be >= 1 year");
        if (end_year < start_year) throw ConfigError("end year precedes start year");
        const int years = end_year - start_year + 1;
        if (!allow_truncated_last_span && years % span_width_years != 0)
            throw ConfigError("year range " + std::to_string(start_year) + "-" +
                              std::to_string(end_year) + " does not divide into " +
                              std::to_string(span_width_years) + "-year spans");
        if (span_count() < 2)
            throw ConfigError("need at least 2 time spans, got " + std::to_string(span_count()));
    }

    // Span index for a year, or -1 when the year falls outside the range.
    int span_of_year(int year) const {
        if (year < start_year || year > end_year) return -1;
        return (year - start_year) / span_width_years;
    }

    int span_start_year(int t) const { return start_year + t * span_width_years; }

    int span_end_year(int t) const {
        const int e = span_start_year(t) + span_width_years - 1;
        return e > end_year ? end_year : e;
    }

    // "1984-1985" style label used in file names and report columns.
    std::string span_label(int t) const {
        return std::to_string(span_start_year(t)) + "-" + std::to_string(span_end_year(t));
    }
};

struct Document {
    int year = 0;
    std::string text;
};

// One time span's text as normalized tokens, before vocabulary encoding.
struct RawSpanCorpus {
    int span_index = 0;
    std::vector<std::vector<std::string>> sentences;
    uint64_t token_count = 0;
};

// One time span's text as dense token ids. Sentences are stored flat with an
// offsets array; offsets.size() == sentence_count + 1.
struct SpanCorpus {
    int span_index = 0;
    int start_year = 0;
    int end_year = 0;
    std::vector<int32_t> tokens;
    std::vector<uint64_t> offsets{0};

    uint64_t token_count() const { return tokens.size(); }
    size_t sentence_count() const { return offsets.size() - 1; }

    std::span<const int32_t> sentence(size_t i) const {
        return {tokens.data() + offsets[i], tokens.data() + offsets[i + 1]};
    }

    void add_sentence(std::span<const int32_t> ids) {
        tokens.insert(tokens.end(), ids.begin(), ids.end());
        offsets.push_back(tokens.size());
    }
};

struct BucketStats {
    int64_t documents_in = 0;
    int64_t out_of_range = 0;
    int64_t dropped_empty = 0;
    std::vector<uint64_t> span_token_counts;
    std::vector<uint64_t> span_sentence_counts;
};

// Tokenizes a document's text line by line (each input line is a sentence /
// context-window boundary) and appends non-empty sentences to the span.
inline void append_document(RawSpanCorpus& span, const std::string& text, bool& any_tokens) {
    size_t pos = 0;
    while (pos <= text.size()) {
        const size_t nl = text.find('\n', pos);
        const size_t end = (nl == std::string::npos) ? text.size() : nl;
        std::vector<std::string> sent = tokenize(std::string_view(text).substr(pos, end - pos));
        if (!sent.empty()) {
            any_tokens = true;
            span.token_count += sent.size();
            span.sentences.push_back(std::move(sent));
        }
        if (nl == std::string::npos) break;
        pos = nl + 1;
    }
}

inline std::vector<RawSpanCorpus> bucket(const std::vector<Document>& docs,
                                         const TimeSpanConfig& cfg,
                                         BucketStats* stats = nullptr) {
    cfg.validate();
    std::vector<RawSpanCorpus> spans(static_cast<size_t>(cfg.span_count()));
    for (int t = 0; t < cfg.span_count(); ++t) spans[static_cast<size_t>(t)].span_index = t;
    BucketStats local;
    BucketStats& st = stats ? *stats : local;
    st.documents_in += static_cast<int64_t>(docs.size());
    for (const Document& doc : docs) {
        const int t = cfg.span_of_year(doc.year);
        if (t < 0) {
            ++st.out_of_range;
            continue;
        }
        bool any = false;
        append_document(spans[static_cast<size_t>(t)], doc.text, any);
        if (!any) ++st.dropped_empty;
    }
    st.span_token_counts.resize(spans.size());
    st.span_sentence_counts.resize(spans.size());
    for (size_t t = 0; t < spans.size(); ++t) {
        st.span_token_counts[t] = spans[t].token_count;
        st.span_sentence_counts[t] = spans[t].sentences.size();
    }
    return spans;
}

// --- span token file (binary) -----------------------------------------------

inline constexpr char kSpanMagic[9] = "TVSPAN1\0";

inline void save_span_corpus(const SpanCorpus& sc, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write span file: " + path.string());
    write_magic(out, kSpanMagic);
    write_pod<uint32_t>(out, static_cast<uint32_t>(sc.span_index));
    write_pod<int32_t>(out, sc.start_year);
    write_pod<int32_t>(out, sc.end_year);
    write_pod<uint64_t>(out, sc.sentence_count());
    write_pod<uint64_t>(out, sc.token_count());
    for (size_t i = 0; i < sc.sentence_count(); ++i) {
        const auto s = sc.sentence(i);
        write_pod<uint32_t>(out, static_cast<uint32_t>(s.size()));
        out.write(reinterpret_cast<const char*>(s.data()),
                  static_cast<std::streamsize>(s.size() * sizeof(int32_t)));
    }
    if (!out) throw DataError("short write on span file: " + path.string());
}

inline SpanCorpus load_span_corpus(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open span file: " + path.string());
    expect_magic(in, kSpanMagic, path.string());
    SpanCorpus sc;
    sc.span_index = static_cast<int>(read_pod<uint32_t>(in));
    sc.start_year = read_pod<int32_t>(in);
    sc.end_year = read_pod<int32_t>(in);
    const uint64_t n_sent = read_pod<uint64_t>(in);
    const uint64_t n_tok = read_pod<uint64_t>(in);
    sc.tokens.reserve(n_tok);
    sc.offsets.reserve(n_sent + 1);
    for (uint64_t i = 0; i < n_sent; ++i) {
        const uint32_t len = read_pod<uint32_t>(in);
        const size_t base = sc.tokens.size();
        sc.tokens.resize(base + len);
        in.read(reinterpret_cast<char*>(sc.tokens.data() + base),
                static_cast<std::streamsize>(len * sizeof(int32_t)));
        if (!in) throw DataError("truncated span file: " + path.string());
        sc.offsets.push_back(sc.tokens.size());
    }
    if (sc.token_count() != n_tok)
        throw DataError("span file token count mismatch: " + path.string());
    return sc;
}

inline std::string span_file_name(const TimeSpanConfig& cfg, int t, const char* ext) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "span_%02d_", t);
    return std::string(buf) + cfg.span_label(t) + ext;
}

}  // namespace tempovec
