#include <catch2/catch_amalgamated.hpp>

#include <filesystem>

#include "tempovec/corpus.hpp"
#include "tempovec/rng.hpp"

using namespace tempovec;
namespace fs = std::filesystem;

namespace {

TimeSpanConfig paper_cfg() {
    TimeSpanConfig cfg;
    cfg.start_year = 1984;
    cfg.end_year = 2015;
    cfg.span_width_years = 2;
    return cfg;
}

}  // namespace

TEST_CASE("two-year bucketing over 1984-2015 gives 16 spans") {
    const TimeSpanConfig cfg = paper_cfg();
    cfg.validate();
    REQUIRE(cfg.span_count() == 16);
    REQUIRE(cfg.span_of_year(1984) == 0);
    REQUIRE(cfg.span_of_year(2015) == 15);
    REQUIRE(cfg.span_of_year(1999) == 7);
    REQUIRE(cfg.span_of_year(1983) == -1);
    REQUIRE(cfg.span_of_year(2016) == -1);
    REQUIRE(cfg.span_label(0) == "1984-1985");
    REQUIRE(cfg.span_label(15) == "2014-2015");
}

TEST_CASE("span configuration validation") {
    TimeSpanConfig cfg;
    cfg.start_year = 2000;
    cfg.end_year = 2001;
    cfg.span_width_years = 2;
    REQUIRE_THROWS_AS(cfg.validate(), ConfigError);  // T = 1

    cfg.end_year = 1999;
    REQUIRE_THROWS_AS(cfg.validate(), ConfigError);  // end before start

    cfg.end_year = 2014;
    cfg.start_year = 1984;
    REQUIRE_THROWS_AS(cfg.validate(), ConfigError);  // 31 years, width 2
    cfg.allow_truncated_last_span = true;
    REQUIRE_NOTHROW(cfg.validate());
    REQUIRE(cfg.span_count() == 16);
    REQUIRE(cfg.span_label(15) == "2014-2014");  // short final span
}

TEST_CASE("bucket places documents and counts rejects") {
    TimeSpanConfig cfg;
    cfg.start_year = 2000;
    cfg.end_year = 2007;
    cfg.span_width_years = 2;
    std::vector<Document> docs = {
        {2000, "primo documento"},
        {2003, "secondo documento\ncon due frasi"},
        {2007, "ultimo"},
        {1999, "fuori range"},
        {2004, "!!! 123"},  // empty after normalization
    };
    BucketStats stats;
    const auto spans = bucket(docs, cfg, &stats);
    REQUIRE(spans.size() == 4);
    REQUIRE(stats.documents_in == 5);
    REQUIRE(stats.out_of_range == 1);
    REQUIRE(stats.dropped_empty == 1);
    REQUIRE(spans[0].token_count == 2);
    REQUIRE(spans[1].sentences.size() == 2);
    REQUIRE(spans[1].sentences[1] == std::vector<std::string>{"con", "due", "frasi"});
    REQUIRE(spans[3].sentences.size() == 1);
    REQUIRE(spans[2].token_count == 0);
}

TEST_CASE("bucketing is total and order-preserving") {
    TimeSpanConfig cfg;
    cfg.start_year = 1990;
    cfg.end_year = 1997;
    cfg.span_width_years = 2;
    Rng rng(77);
    std::vector<Document> docs;
    std::vector<std::string> all_tokens;
    for (int i = 0; i < 200; ++i) {
        Document d;
        d.year = 1988 + static_cast<int>(rng.next_below(12));
        const size_t n = 1 + rng.next_below(8);
        for (size_t k = 0; k < n; ++k) {
            const std::string w = "w" + std::to_string(rng.next_below(30));
            d.text += w + " ";
            if (cfg.span_of_year(d.year) >= 0) all_tokens.push_back(w);
        }
        docs.push_back(std::move(d));
    }
    const auto spans = bucket(docs, cfg);
    // Concatenating spans in order recovers every retained token exactly once,
    // grouped by span but preserving document order within each span.
    std::vector<std::string> recovered;
    for (const auto& span : spans)
        for (const auto& sent : span.sentences)
            recovered.insert(recovered.end(), sent.begin(), sent.end());
    std::vector<std::string> expected;
    for (int t = 0; t < cfg.span_count(); ++t)
        for (const auto& d : docs)
            if (cfg.span_of_year(d.year) == t)
                for (const auto& w : tokenize(d.text)) expected.push_back(w);
    REQUIRE(recovered == expected);
    REQUIRE(recovered.size() == all_tokens.size());
}

TEST_CASE("span corpus binary round-trip") {
    SpanCorpus sc;
    sc.span_index = 3;
    sc.start_year = 1990;
    sc.end_year = 1991;
    sc.add_sentence(std::vector<int32_t>{0, 5, 2});
    sc.add_sentence(std::vector<int32_t>{7});
    sc.add_sentence(std::vector<int32_t>{1, 1, 1, 4});
    REQUIRE(sc.token_count() == 8);
    REQUIRE(sc.sentence_count() == 3);

    const fs::path tmp = fs::temp_directory_path() / "tempovec_span_roundtrip.tok";
    save_span_corpus(sc, tmp);
    const SpanCorpus back = load_span_corpus(tmp);
    fs::remove(tmp);
    REQUIRE(back.span_index == sc.span_index);
    REQUIRE(back.start_year == sc.start_year);
    REQUIRE(back.end_year == sc.end_year);
    REQUIRE(back.tokens == sc.tokens);
    REQUIRE(back.offsets == sc.offsets);
    REQUIRE(back.sentence(1).size() == 1);
}

TEST_CASE("span file naming") {
    const TimeSpanConfig cfg = paper_cfg();
    REQUIRE(span_file_name(cfg, 3, ".tok") == "span_03_1990-1991.tok");
    REQUIRE(span_file_name(cfg, 15, ".bin") == "span_15_2014-2015.bin");
}
