// tempovec command-line driver: synth | ingest | train | analyze | export.
// Exit codes: 0 success, 1 usage/config error, 2 data error, 3 numeric failure.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "tempovec/chrono.hpp"
#include "tempovec/common.hpp"
#include "tempovec/corpus.hpp"
#include "tempovec/embedding.hpp"
#include "tempovec/ingest.hpp"
#include "tempovec/report.hpp"
#include "tempovec/sgns.hpp"
#include "tempovec/shift.hpp"
#include "tempovec/synth.hpp"
#include "tempovec/vocab.hpp"

namespace fs = std::filesystem;
using namespace tempovec;

namespace {

struct SynthArgs {
    std::string spec_file;
    std::string out_dir;
    std::optional<uint64_t> seed_override;
};

struct IngestArgs {
    std::string corpus;
    std::string out_dir;
    int start_year = 0;
    int end_year = 0;
    int span_width = 2;
    int64_t min_count = 5;
    double alpha = 0.75;
    bool allow_empty_spans = false;
    bool allow_truncated = false;
};

struct TrainArgs {
    std::string corpus;
    std::string out_dir;
    std::string direction = "reverse";
    TrainingConfig cfg;
    std::string lr_schedule = "linear_decay";
    bool fixed_window = false;
    bool fresh = false;
};

struct AnalyzeArgs {
    std::string model_dir;
    std::string words_file;
    std::string out_dir;
    int baseline_sample = 5000;
    uint64_t sample_seed = 1;
    DetectionParams params;
    std::vector<std::string> formats;
    std::string dict_dates_file;
};

struct ExportArgs {
    std::string model_dir;
    int span = 0;
    std::string out_file;
};

std::vector<std::string> read_word_list(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open words file: " + path.string());
    std::vector<std::string> words;
    std::string line;
    while (std::getline(in, line)) {
        const std::string w = trim(line);
        if (!w.empty() && w[0] != '#') words.push_back(w);
    }
    if (words.empty()) throw DataError("words file is empty: " + path.string());
    return words;
}

int run_synth(const SynthArgs& args) {
    SyntheticCorpusSpec spec = load_synth_spec(args.spec_file);
    if (args.seed_override) spec.seed = *args.seed_override;
    const SynthToDirResult result = synthesize_to_dir(spec, args.out_dir);
    for (const auto& w : result.warnings) std::cerr << "warning: " << w << "\n";
    uint64_t tokens = 0;
    for (const uint64_t s : result.span_token_counts) tokens += s;
    std::cout << "synthesized " << result.span_token_counts.size() << " spans, " << tokens
              << " tokens, seed " << spec.seed << " -> " << args.out_dir << "\n";
    for (const auto& e : result.ground_truth.entries) {
        std::cout << "  target '" << e.word << "': ";
        if (e.t_star)
            std::cout << "shift planted at span " << *e.t_star << " ("
                      << spec.time.span_label(*e.t_star) << ")\n";
        else
            std::cout << "no shift planted\n";
    }
    return 0;
}

int run_ingest(const IngestArgs& args) {
    IngestConfig cfg;
    cfg.time.start_year = args.start_year;
    cfg.time.end_year = args.end_year;
    cfg.time.span_width_years = args.span_width;
    cfg.time.allow_truncated_last_span = args.allow_truncated;
    cfg.min_count = args.min_count;
    cfg.alpha = args.alpha;
    cfg.allow_empty_spans = args.allow_empty_spans;
    const IngestResult result = ingest_corpus(args.corpus, cfg, args.out_dir);
    std::cout << "ingested " << result.stats.documents_in << " documents into "
              << cfg.time.span_count() << " spans -> " << args.out_dir << "\n";
    for (int t = 0; t < cfg.time.span_count(); ++t)
        std::cout << "  span " << t << " [" << cfg.time.span_label(t) << "]: "
                  << result.stats.span_token_counts[static_cast<size_t>(t)] << " tokens ("
                  << result.retained_span_tokens[static_cast<size_t>(t)]
                  << " after min-count filter)\n";
    std::cout << "  vocabulary: " << result.vocab_size << " words (min_count "
              << args.min_count << ")\n";
    if (result.stats.out_of_range > 0)
        std::cout << "  out-of-range documents excluded: " << result.stats.out_of_range << "\n";
    if (result.stats.dropped_empty > 0)
        std::cout << "  documents empty after normalization: " << result.stats.dropped_empty
                  << "\n";
    if (result.skipped_files > 0)
        std::cout << "  files skipped (not YYYY*.txt): " << result.skipped_files << "\n";
    return 0;
}

int run_train(const TrainArgs& args) {
    CorpusDir corpus = CorpusDir::open(args.corpus);
    TrainingConfig cfg = args.cfg;
    cfg.lr_schedule = parse_lr_schedule(args.lr_schedule);
    cfg.dynamic_window = !args.fixed_window;
    const ChainDirection direction = parse_direction(args.direction);

    if (cfg.epochs == 0)
        std::cerr << "warning: null training (--epochs 0): spaces stay at initialization\n";
    if (cfg.threads > 1)
        std::cerr << "warning: --threads " << cfg.threads
                  << " trains with lock-free asynchronous SGD; results are NOT reproducible "
                     "run to run\n";

    const Vocabulary vocab = corpus.load_vocab();
    const NegativeSamplingTable table = NegativeSamplingTable::from_vocab(vocab);

    ChainToDirOptions opt;
    if (args.fresh && fs::exists(fs::path(args.out_dir) / "manifest.json"))
        fs::remove(fs::path(args.out_dir) / "manifest.json");
    opt.resume = !args.fresh;
    int last_pct = -1;
    opt.progress = [&](const TrainProgress& p) {
        const int pct = static_cast<int>(100.0 * static_cast<double>(p.pairs_done) /
                                         static_cast<double>(p.pairs_total));
        if (pct / 5 != last_pct / 5) {
            last_pct = pct;
            std::fprintf(stderr, "\r  span %d: %3d%%  lr %.6f", p.span_index, pct, p.lr);
            if (pct >= 100) std::fprintf(stderr, "\n");
            std::fflush(stderr);
        }
    };
    opt.on_span = [&](int t, const std::string& note) {
        last_pct = -1;
        std::cerr << "span " << t << " [" << corpus.time.span_label(t) << "]: " << note << "\n";
    };

    const ModelManifest manifest = chain_train_to_dir(
        [&](int t) { return corpus.load_span(t); }, corpus.time, vocab, table, cfg, direction,
        args.out_dir, opt);
    std::cout << "trained " << manifest.spans.size() << " spans (" << to_string(direction)
              << " chaining) -> " << args.out_dir << "\n";
    return 0;
}

int run_analyze(const AnalyzeArgs& args) {
    const ModelDir model = ModelDir::open(args.model_dir);
    const Vocabulary& vocab = model.vocab();
    const TimeSpanConfig& time = model.manifest().time;
    const int T = model.span_count();
    const std::vector<std::string> words = read_word_list(args.words_file);

    std::set<std::string> formats(args.formats.begin(), args.formats.end());
    if (formats.empty()) formats = {"csv", "json", "svg"};

    int sample_size = args.baseline_sample;
    if (static_cast<size_t>(sample_size) > vocab.size()) {
        sample_size = static_cast<int>(vocab.size());
        std::cerr << "warning: baseline sample clamped to vocabulary size " << sample_size
                  << "\n";
    }

    const auto counts = model.load_counts();
    const auto loader = [&](int t) { return model.load_space(t); };

    // One sweep over consecutive span pairs covers both the baseline sample
    // and the tracked words.
    const std::vector<int32_t> sample_ids =
        sample_word_ids(vocab.size(), static_cast<size_t>(sample_size), args.sample_seed);
    std::vector<int32_t> ids = sample_ids;
    std::map<std::string, std::string> word_errors;
    std::vector<std::string> tracked;
    for (const auto& w : words) {
        const int32_t id = vocab.id_of(w);
        if (id < 0) {
            word_errors[w] = "not in vocabulary";
            std::cerr << "warning: '" << w << "' not in vocabulary, skipped\n";
            continue;
        }
        tracked.push_back(w);
        ids.push_back(id);
    }
    if (sample_size < 30)
        throw ConfigError("baseline sample size " + std::to_string(sample_size) +
                          " is below the minimum of 30");
    const auto rows = transition_cosines(loader, T, ids);

    BaselineBand band;
    band.sample_size = sample_size;
    band.sample_seed = args.sample_seed;
    band.sample_ids = sample_ids;
    band.mean.resize(static_cast<size_t>(T - 1));
    band.stddev.resize(static_cast<size_t>(T - 1));
    band.n_effective.resize(static_cast<size_t>(T - 1));
    for (size_t t = 0; t + 1 < static_cast<size_t>(T); ++t) {
        double sum = 0.0;
        int64_t n = 0;
        for (size_t i = 0; i < sample_ids.size(); ++i)
            if (rows[i][t]) { sum += *rows[i][t]; ++n; }
        const double mu = n > 0 ? sum / static_cast<double>(n) : 0.0;
        double ss = 0.0;
        for (size_t i = 0; i < sample_ids.size(); ++i)
            if (rows[i][t]) ss += (*rows[i][t] - mu) * (*rows[i][t] - mu);
        band.mean[t] = mu;
        band.stddev[t] = n > 1 ? std::sqrt(ss / static_cast<double>(n - 1)) : 0.0;
        band.n_effective[t] = n;
    }

    std::vector<ShiftReport> reports;
    std::vector<SimilaritySeries> series_list;
    for (size_t w = 0; w < tracked.size(); ++w) {
        SimilaritySeries s;
        s.word = tracked[w];
        s.word_id = vocab.id_of(tracked[w]);
        s.values = rows[sample_ids.size() + w];
        s.occurrence_counts.resize(static_cast<size_t>(T));
        for (int t = 0; t < T; ++t)
            s.occurrence_counts[static_cast<size_t>(t)] =
                counts[static_cast<size_t>(t)][static_cast<size_t>(s.word_id)];
        series_list.push_back(s);
        reports.push_back(detect_drops(s, band, args.params));
    }

    fs::create_directories(args.out_dir);
    const fs::path out_dir(args.out_dir);
    if (formats.count("csv")) {
        std::ofstream sf(out_dir / "series.csv");
        write_series_csv(sf, series_list, time);
        std::ofstream bf(out_dir / "baseline.csv");
        write_band_csv(bf, band);
    }
    ReportProvenance prov;
    prov.model_dir = args.model_dir;
    prov.vocab_hash = model.manifest().vocab_hash;
    prov.direction = to_string(model.manifest().direction);
    prov.span_count = T;
    prov.baseline_sample_size = sample_size;
    prov.baseline_seed = args.sample_seed;
    if (formats.count("json"))
        write_text_file(out_dir / "report.json",
                        report_to_json(reports, word_errors, band, time, prov).dump(2) + "\n");
    if (formats.count("svg")) {
        std::map<std::string, int> dict_dates;
        if (!args.dict_dates_file.empty())
            dict_dates = load_dictionary_dates(args.dict_dates_file);
        for (const auto& r : reports) {
            std::optional<int> year;
            const auto it = dict_dates.find(r.word);
            if (it != dict_dates.end()) year = it->second;
            write_series_svg_file(out_dir / (r.word + ".svg"), r, band, time, year);
        }
    }

    // Run manifest: everything needed to reproduce this analysis.
    nlohmann::json run;
    run["format"] = "tempovec-analysis v1";
    run["model_dir"] = args.model_dir;
    run["vocab_hash"] = model.manifest().vocab_hash;
    run["words"] = words;
    run["baseline_sample"] = sample_size;
    run["sample_seed"] = args.sample_seed;
    run["z_threshold"] = args.params.z_threshold;
    run["min_relative_drop"] = args.params.min_relative_drop;
    run["min_occurrences"] = args.params.min_occurrences;
    run["formats"] = std::vector<std::string>(formats.begin(), formats.end());
    write_text_file(out_dir / "analysis_run.json", run.dump(2) + "\n");

    for (const auto& r : reports) {
        if (r.flagged.empty()) {
            std::cout << r.word << ": no flagged transitions\n";
            continue;
        }
        for (const auto& f : r.flagged) {
            std::cout << r.word << ": flagged transition " << f.transition << " ["
                      << time.span_label(f.transition) << " -> "
                      << time.span_label(f.transition + 1) << "] z=";
            if (std::isinf(f.z)) std::cout << "inf";
            else std::cout << detail::fmt_double(f.z, "%.3g");
            if (f.relative_drop)
                std::cout << " drop=" << detail::fmt_double(*f.relative_drop, "%.3g");
            std::cout << "\n";
        }
    }
    return 0;
}

int run_export(const ExportArgs& args) {
    const ModelDir model = ModelDir::open(args.model_dir);
    if (args.span < 0 || args.span >= model.span_count())
        throw ConfigError("span index out of range (model has " +
                          std::to_string(model.span_count()) + " spans)");
    const EmbeddingSpace space = model.load_space(args.span);
    export_embedding_text(space, model.vocab(), args.out_file);
    std::cout << "exported span " << args.span << " [" << model.span_label(args.span)
              << "] to " << args.out_file << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"tempovec: per-time-span word embeddings with reverse-chained initialization "
                 "and cosine self-similarity shift detection"};
    app.require_subcommand(1);

    SynthArgs synth_args;
    auto* synth = app.add_subcommand("synth", "generate a synthetic shift corpus + ground truth");
    synth->add_option("--spec", synth_args.spec_file, "synthetic corpus spec file")
        ->required()->check(CLI::ExistingFile);
    synth->add_option("--out", synth_args.out_dir, "output corpus directory")->required();
    synth->add_option("--seed", synth_args.seed_override, "override the spec's seed");

    IngestArgs ingest_args;
    auto* ingest = app.add_subcommand(
        "ingest", "tokenize a corpus, bucket it into time spans, build the vocabulary");
    ingest->add_option("--corpus", ingest_args.corpus,
                       "corpus directory (YYYY*.txt) or JSONL record file")
        ->required();
    ingest->add_option("--out", ingest_args.out_dir, "output span-corpus directory")->required();
    ingest->add_option("--start-year", ingest_args.start_year, "first year")->required();
    ingest->add_option("--end-year", ingest_args.end_year, "last year")->required();
    ingest->add_option("--span-width", ingest_args.span_width, "years per span")->capture_default_str();
    ingest->add_option("--min-count", ingest_args.min_count, "vocabulary frequency floor")->capture_default_str();
    ingest->add_option("--alpha", ingest_args.alpha, "negative-sampling smoothing")->capture_default_str();
    ingest->add_flag("--allow-empty-spans", ingest_args.allow_empty_spans,
                     "accept spans with no tokens");
    ingest->add_flag("--allow-truncated-last-span", ingest_args.allow_truncated,
                     "let the last span cover fewer years");

    TrainArgs train_args;
    auto* train = app.add_subcommand("train", "train chained embedding spaces over all spans");
    train->add_option("--corpus", train_args.corpus, "ingested span-corpus directory")
        ->required();
    train->add_option("--out", train_args.out_dir, "output model directory")->required();
    train->add_option("--direction", train_args.direction, "chaining direction")->capture_default_str()
        ->check(CLI::IsMember({"reverse", "forward"}));
    train->add_option("--dim", train_args.cfg.dim, "embedding dimensionality")->capture_default_str();
    train->add_option("--window", train_args.cfg.window, "max context window")->capture_default_str();
    train->add_option("--lr", train_args.cfg.learning_rate, "initial learning rate")->capture_default_str();
    train->add_option("--min-lr", train_args.cfg.min_learning_rate,
                      "final learning rate of the linear schedule")->capture_default_str();
    train->add_option("--negatives", train_args.cfg.negatives, "negative samples per pair")->capture_default_str();
    train->add_option("--epochs", train_args.cfg.epochs, "training epochs per span")->capture_default_str();
    train->add_option("--lr-schedule", train_args.lr_schedule, "linear_decay | constant")->capture_default_str()
        ->check(CLI::IsMember({"linear_decay", "constant"}));
    train->add_option("--subsample", train_args.cfg.subsample,
                      "frequent-word subsampling threshold (0 = off)")->capture_default_str();
    train->add_option("--seed", train_args.cfg.seed, "base RNG seed")->capture_default_str();
    train->add_option("--threads", train_args.cfg.threads,
                      "training threads (>1 is non-deterministic)")->capture_default_str();
    train->add_flag("--fixed-window", train_args.fixed_window,
                    "use the full window instead of a sampled effective window");
    train->add_flag("--fresh", train_args.fresh, "retrain everything, ignore resumable state");

    AnalyzeArgs analyze_args;
    auto* analyze = app.add_subcommand(
        "analyze", "self-similarity series, baseline band and drop detection");
    analyze->add_option("--model", analyze_args.model_dir, "trained model directory")
        ->required();
    analyze->add_option("--words", analyze_args.words_file, "file with one target word per line")
        ->required()->check(CLI::ExistingFile);
    analyze->add_option("--out", analyze_args.out_dir, "output report directory")->required();
    analyze->add_option("--baseline-sample", analyze_args.baseline_sample,
                        "random word sample size for the baseline band")->capture_default_str();
    analyze->add_option("--sample-seed", analyze_args.sample_seed, "baseline sample seed")->capture_default_str();
    analyze->add_option("--z-threshold", analyze_args.params.z_threshold,
                        "z-score needed to flag a transition")->capture_default_str();
    analyze->add_option("--min-relative-drop", analyze_args.params.min_relative_drop,
                        "relative drop vs median of previous values")->capture_default_str();
    analyze->add_option("--min-occurrences", analyze_args.params.min_occurrences,
                        "occurrence floor in both spans of a transition")->capture_default_str();
    analyze->add_option("--format", analyze_args.formats, "csv|json|svg (repeatable; default all)")
        ->check(CLI::IsMember({"csv", "json", "svg"}));
    analyze->add_option("--dict-dates", analyze_args.dict_dates_file,
                        "word<TAB>year file marking dictionary inclusion dates on charts")
        ->check(CLI::ExistingFile);

    ExportArgs export_args;
    auto* exp = app.add_subcommand("export", "export one span's vectors as text");
    exp->add_option("--model", export_args.model_dir, "trained model directory")->required();
    exp->add_option("--span", export_args.span, "span index")->required();
    exp->add_option("--out", export_args.out_file, "output text file")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 1;
    }

    try {
        if (synth->parsed()) return run_synth(synth_args);
        if (ingest->parsed()) return run_ingest(ingest_args);
        if (train->parsed()) return run_train(train_args);
        if (analyze->parsed()) return run_analyze(analyze_args);
        if (exp->parsed()) return run_export(export_args);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    } catch (const DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 2;
    } catch (const NumericError& e) {
        std::cerr << "numeric error: " << e.what() << "\n";
        return 3;
    }
    return 0;
}
