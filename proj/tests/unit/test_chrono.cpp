#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>

#include "tempovec/chrono.hpp"
#include "tempovec/rng.hpp"
#include "tempovec/shift.hpp"

using namespace tempovec;
namespace fs = std::filesystem;

namespace {

SpanCorpus span_of(int index, const std::vector<std::vector<int32_t>>& sentences) {
    SpanCorpus sc;
    sc.span_index = index;
    for (const auto& s : sentences) sc.add_sentence(s);
    return sc;
}

struct Fixture {
    Vocabulary vocab;
    NegativeSamplingTable table;
    std::vector<SpanCorpus> spans;
};

// 4 spans over 4 words; "solo" appears only in the last chronological span.
Fixture make_fixture() {
    Fixture f;
    f.vocab = Vocabulary::from_counts({{"a", 400}, {"b", 300}, {"c", 200}, {"solo", 40}}, 1, 0.75);
    f.table = NegativeSamplingTable::from_vocab(f.vocab);
    Rng rng(71);
    const int32_t a = f.vocab.id_of("a"), b = f.vocab.id_of("b"), c = f.vocab.id_of("c"),
                  solo = f.vocab.id_of("solo");
    for (int t = 0; t < 4; ++t) {
        std::vector<std::vector<int32_t>> sents;
        for (int i = 0; i < 60; ++i) {
            std::vector<int32_t> s;
            for (int k = 0; k < 5; ++k) {
                const uint64_t r = rng.next_below(3);
                s.push_back(r == 0 ? a : (r == 1 ? b : c));
            }
            if (t == 3 && i % 3 == 0) s.push_back(solo);
            sents.push_back(std::move(s));
        }
        f.spans.push_back(span_of(t, sents));
    }
    return f;
}

std::string file_bytes(const fs::path& p) { return read_text_file(p); }

}  // namespace

TEST_CASE("chain order") {
    REQUIRE(chain_order(4, ChainDirection::reverse) == std::vector<int>{3, 2, 1, 0});
    REQUIRE(chain_order(4, ChainDirection::forward) == std::vector<int>{0, 1, 2, 3});
    REQUIRE(chain_order(16, ChainDirection::reverse).front() == 15);
}

TEST_CASE("per-span seeds differ across spans and directions") {
    const uint64_t base = 99;
    REQUIRE(chain_span_seed(base, 0, ChainDirection::reverse) !=
            chain_span_seed(base, 1, ChainDirection::reverse));
    REQUIRE(chain_span_seed(base, 0, ChainDirection::reverse) !=
            chain_span_seed(base, 0, ChainDirection::forward));
}

TEST_CASE("training order follows the direction") {
    Fixture f = make_fixture();
    TrainingConfig cfg;
    cfg.dim = 8;
    cfg.epochs = 1;
    cfg.seed = 5;
    std::vector<int> seen;
    ChainOptions opt;
    opt.on_span = [&](int t, const std::string& note) {
        if (note.find("init") != std::string::npos) seen.push_back(t);
    };
    chain_train(f.spans, f.vocab, f.table, cfg, ChainDirection::reverse, opt);
    REQUIRE(seen == std::vector<int>{3, 2, 1, 0});
    seen.clear();
    chain_train(f.spans, f.vocab, f.table, cfg, ChainDirection::forward, opt);
    REQUIRE(seen == std::vector<int>{0, 1, 2, 3});
}

TEST_CASE("zero epochs everywhere copies the random init through the whole chain") {
    Fixture f = make_fixture();
    TrainingConfig cfg;
    cfg.dim = 8;
    cfg.epochs = 0;
    cfg.seed = 5;
    const ChronoModel m = chain_train(f.spans, f.vocab, f.table, cfg, ChainDirection::reverse);
    REQUIRE(m.span_count() == 4);
    for (int t = 0; t < 4; ++t) {
        REQUIRE(m.spaces[static_cast<size_t>(t)].span_index == t);
        REQUIRE(m.spaces[static_cast<size_t>(t)].w_in == m.spaces[3].w_in);
        REQUIRE(m.spaces[static_cast<size_t>(t)].w_out == m.spaces[3].w_out);
    }
}

TEST_CASE("null-chain calibration: only the first-trained span trains, all cosines are exactly 1") {
    Fixture f = make_fixture();
    TrainingConfig cfg;
    cfg.dim = 8;
    cfg.epochs = 5;
    cfg.seed = 5;
    ChainOptions opt;
    opt.epochs_per_span = {0, 0, 0, 5};  // reverse: span 3 trains first, the rest copy
    const ChronoModel m =
        chain_train(f.spans, f.vocab, f.table, cfg, ChainDirection::reverse, opt);
    for (int t = 0; t < 3; ++t) {
        REQUIRE(m.spaces[static_cast<size_t>(t)].w_in == m.spaces[3].w_in);
        REQUIRE(m.spaces[static_cast<size_t>(t)].w_out == m.spaces[3].w_out);
    }
    for (const auto& word : f.vocab.words()) {
        const SimilaritySeries s = self_similarity(m, word);
        REQUIRE(s.values.size() == 3);
        for (const auto& v : s.values) {
            REQUIRE(v.has_value());
            REQUIRE(*v == 1.0);  // exact, not approximate
        }
    }
}

TEST_CASE("a word trained only in the last chronological span keeps its W_in row backwards") {
    Fixture f = make_fixture();
    TrainingConfig cfg;
    cfg.dim = 8;
    cfg.epochs = 2;
    cfg.seed = 15;
    const ChronoModel m = chain_train(f.spans, f.vocab, f.table, cfg, ChainDirection::reverse);
    const int32_t solo = f.vocab.id_of("solo");
    const auto last_row = m.spaces[3].in_row(solo);
    for (int t = 0; t < 3; ++t) {
        const auto row = m.spaces[static_cast<size_t>(t)].in_row(solo);
        REQUIRE(std::equal(row.begin(), row.end(), last_row.begin()));
    }
    // Sanity: the shared words did keep training backwards.
    REQUIRE(m.spaces[0].w_in != m.spaces[3].w_in);
}

TEST_CASE("forward and reverse runs produce different spaces") {
    Fixture f = make_fixture();
    TrainingConfig cfg;
    cfg.dim = 8;
    cfg.epochs = 1;
    cfg.seed = 5;
    const ChronoModel r = chain_train(f.spans, f.vocab, f.table, cfg, ChainDirection::reverse);
    const ChronoModel fw = chain_train(f.spans, f.vocab, f.table, cfg, ChainDirection::forward);
    REQUIRE(r.spaces[0].w_in != fw.spaces[0].w_in);
    REQUIRE(r.spaces[3].w_in != fw.spaces[3].w_in);
}

TEST_CASE("occurrence counts per span") {
    Fixture f = make_fixture();
    const auto counts = occurrence_counts(f.spans, f.vocab.size());
    REQUIRE(counts.size() == 4);
    const int32_t solo = f.vocab.id_of("solo");
    REQUIRE(counts[0][static_cast<size_t>(solo)] == 0);
    REQUIRE(counts[3][static_cast<size_t>(solo)] == 20);
    uint64_t total = 0;
    for (const auto& row : counts)
        for (const int64_t c : row) total += static_cast<uint64_t>(c);
    uint64_t expected = 0;
    for (const auto& s : f.spans) expected += s.token_count();
    REQUIRE(total == expected);
}

TEST_CASE("disk-backed chain: manifest, counts, resume and bit-identical regeneration") {
    Fixture f = make_fixture();
    TimeSpanConfig time;
    time.start_year = 2008;
    time.end_year = 2015;
    time.span_width_years = 2;
    TrainingConfig cfg;
    cfg.dim = 8;
    cfg.epochs = 2;
    cfg.seed = 44;
    const fs::path dir = fs::temp_directory_path() / "tempovec_chain_dir_test";
    fs::remove_all(dir);

    const auto loader = [&](int t) { return f.spans[static_cast<size_t>(t)]; };
    int trained = 0;
    ChainToDirOptions opt;
    opt.on_span = [&](int, const std::string& note) {
        if (note.find("init") != std::string::npos) ++trained;
    };
    const ModelManifest m1 =
        chain_train_to_dir(loader, time, f.vocab, f.table, cfg, ChainDirection::reverse, dir, opt);
    REQUIRE(trained == 4);
    REQUIRE(m1.spans[2].completed);
    REQUIRE(m1.spans[2].file == "span_02_2012-2013.bin");

    const std::string span2_bytes = file_bytes(dir / m1.spans[2].file);

    // Fully-complete rerun: nothing retrains.
    trained = 0;
    chain_train_to_dir(loader, time, f.vocab, f.table, cfg, ChainDirection::reverse, dir, opt);
    REQUIRE(trained == 0);

    // Deleting one span's file forces exactly that span to retrain, and the
    // per-span seed derivation reproduces it byte for byte.
    fs::remove(dir / m1.spans[2].file);
    trained = 0;
    chain_train_to_dir(loader, time, f.vocab, f.table, cfg, ChainDirection::reverse, dir, opt);
    REQUIRE(trained == 1);
    REQUIRE(file_bytes(dir / m1.spans[2].file) == span2_bytes);

    // Incompatible configuration is refused.
    TrainingConfig other = cfg;
    other.seed = 45;
    REQUIRE_THROWS_AS(chain_train_to_dir(loader, time, f.vocab, f.table, other,
                                         ChainDirection::reverse, dir, opt),
                      ConfigError);

    // Reader side.
    const ModelDir model = ModelDir::open(dir);
    REQUIRE(model.span_count() == 4);
    REQUIRE(model.span_label(0) == "2008-2009");
    const EmbeddingSpace s3 = model.load_space(3);
    REQUIRE(s3.span_index == 3);
    REQUIRE(s3.dim == 8);
    const auto counts = model.load_counts();
    REQUIRE(counts.size() == 4);
    REQUIRE(counts[3][static_cast<size_t>(f.vocab.id_of("solo"))] == 20);

    fs::remove_all(dir);
}
