#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <span>
#include <vector>

#include "tempovec/common.hpp"
#include "tempovec/vocab.hpp"

namespace tempovec {

// One span's pair of matrices. w_in holds the target vectors used for all
// analysis; w_out holds the context vectors and participates only in
// training. Both are |V| x d row-major float32.
struct EmbeddingSpace {
    int32_t vocab_size = 0;
    int32_t dim = 0;
    int32_t span_index = 0;
    uint64_t trained_token_count = 0;
    std::vector<float> w_in;
    std::vector<float> w_out;

    std::span<float> in_row(int32_t id) {
        return {w_in.data() + static_cast<size_t>(id) * static_cast<size_t>(dim),
                static_cast<size_t>(dim)};
    }
    std::span<const float> in_row(int32_t id) const {
        return {w_in.data() + static_cast<size_t>(id) * static_cast<size_t>(dim),
                static_cast<size_t>(dim)};
    }
    std::span<float> out_row(int32_t id) {
        return {w_out.data() + static_cast<size_t>(id) * static_cast<size_t>(dim),
                static_cast<size_t>(dim)};
    }
    std::span<const float> out_row(int32_t id) const {
        return {w_out.data() + static_cast<size_t>(id) * static_cast<size_t>(dim),
                static_cast<size_t>(dim)};
    }

    size_t matrix_bytes() const { return (w_in.size() + w_out.size()) * sizeof(float); }
};

inline constexpr char kEmbMagic[9] = "TVEMB1\0\0";

inline void save_embedding_space(const EmbeddingSpace& es, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write embedding file: " + path.string());
    write_magic(out, kEmbMagic);
    write_pod<uint32_t>(out, static_cast<uint32_t>(es.vocab_size));
    write_pod<uint32_t>(out, static_cast<uint32_t>(es.dim));
    write_pod<uint32_t>(out, static_cast<uint32_t>(es.span_index));
    write_pod<uint64_t>(out, es.trained_token_count);
    out.write(reinterpret_cast<const char*>(es.w_in.data()),
              static_cast<std::streamsize>(es.w_in.size() * sizeof(float)));
    out.write(reinterpret_cast<const char*>(es.w_out.data()),
              static_cast<std::streamsize>(es.w_out.size() * sizeof(float)));
    if (!out) throw DataError("short write on embedding file: " + path.string());
}

inline EmbeddingSpace load_embedding_space(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open embedding file: " + path.string());
    expect_magic(in, kEmbMagic, path.string());
    EmbeddingSpace es;
    es.vocab_size = static_cast<int32_t>(read_pod<uint32_t>(in));
    es.dim = static_cast<int32_t>(read_pod<uint32_t>(in));
    es.span_index = static_cast<int32_t>(read_pod<uint32_t>(in));
    es.trained_token_count = read_pod<uint64_t>(in);
    const size_t n = static_cast<size_t>(es.vocab_size) * static_cast<size_t>(es.dim);
    es.w_in.resize(n);
    es.w_out.resize(n);
    in.read(reinterpret_cast<char*>(es.w_in.data()),
            static_cast<std::streamsize>(n * sizeof(float)));
    in.read(reinterpret_cast<char*>(es.w_out.data()),
            static_cast<std::streamsize>(n * sizeof(float)));
    if (!in) throw DataError("truncated embedding file: " + path.string());
    return es;
}

// Interchange export: "word v1 v2 ... vd" per line, w_in only.
inline void export_embedding_text(const EmbeddingSpace& es, const Vocabulary& vocab,
                                  const std::filesystem::path& path) {
    if (static_cast<size_t>(es.vocab_size) != vocab.size())
        throw DataError("embedding/vocabulary size mismatch on text export");
    std::ofstream out(path);
    if (!out) throw DataError("cannot write text export: " + path.string());
    out << es.vocab_size << ' ' << es.dim << '\n';
    char buf[32];
    for (int32_t i = 0; i < es.vocab_size; ++i) {
        out << vocab.word(i);
        for (float v : es.in_row(i)) {
            std::snprintf(buf, sizeof(buf), " %.6g", static_cast<double>(v));
            out << buf;
        }
        out << '\n';
    }
}

}  // namespace tempovec
