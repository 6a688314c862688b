#pragma once

#include <atomic>
#include <cmath>
#include <cstdint>
#include <functional>
#include <span>
#include <thread>
#include <vector>

#include "tempovec/common.hpp"
#include "tempovec/corpus.hpp"
#include "tempovec/embedding.hpp"
#include "tempovec/rng.hpp"
#include "tempovec/vocab.hpp"

namespace tempovec {

enum class LrSchedule { linear_decay, constant };

struct TrainingConfig {
    int dim = 200;
    int window = 5;
    double learning_rate = 0.01;
    double min_learning_rate = 0.0001;
    int negatives = 5;
    // epochs = 0 is the explicit "null training" mode: output == init.
    int epochs = 5;
    LrSchedule lr_schedule = LrSchedule::linear_decay;
    bool dynamic_window = true;
    // Frequent-word subsampling threshold; 0 disables it (the default).
    double subsample = 0.0;
    uint64_t seed = 1;
    int threads = 1;

    void validate() const {
        if (dim < 1) throw ConfigError("dimension must be >= 1");
        if (window < 1) throw ConfigError("window must be >= 1");
        if (!(learning_rate > 0)) throw ConfigError("learning rate must be > 0");
        if (min_learning_rate < 0 || min_learning_rate > learning_rate)
            throw ConfigError("min learning rate must be in [0, learning_rate]");
        if (negatives < 1) throw ConfigError("negatives must be >= 1");
        if (negatives > 512) throw ConfigError("negatives > 512 is not supported");
        if (epochs < 0) throw ConfigError("epochs must be >= 0");
        if (threads < 1) throw ConfigError("threads must be >= 1");
        if (subsample < 0) throw ConfigError("subsample threshold must be >= 0");
    }
};

inline double sigmoid(double x) {
    if (x > 30.0) x = 30.0;
    if (x < -30.0) x = -30.0;
    return 1.0 / (1.0 + std::exp(-x));
}

// W_in i.i.d. uniform in [-0.5/d, +0.5/d]; W_out zero. Matches the usual
// skip-gram starting point and keeps initial logits near zero.
inline EmbeddingSpace init_random(int32_t vocab_size, int32_t dim, uint64_t seed,
                                  int32_t span_index = 0) {
    if (vocab_size < 1 || dim < 1) throw ConfigError("init_random: vocab_size and dim must be >= 1");
    EmbeddingSpace es;
    es.vocab_size = vocab_size;
    es.dim = dim;
    es.span_index = span_index;
    const size_t n = static_cast<size_t>(vocab_size) * static_cast<size_t>(dim);
    es.w_in.resize(n);
    es.w_out.assign(n, 0.0f);
    Rng rng(seed);
    const double scale = 1.0 / dim;
    for (size_t i = 0; i < n; ++i)
        es.w_in[i] = static_cast<float>((rng.next_double() - 0.5) * scale);
    return es;
}

// One SGD step of the SGNS loss
//   l = -log s(u.v) - sum_neg log s(-u_n.v)
// with v = W_in[center], u = W_out[context], u_n = W_out[negative].
// All dot products are taken against the pre-update rows (accumulated in
// double), so the applied step is the exact joint gradient as long as the
// target rows are distinct; a duplicated negative simply receives its two
// contributions sequentially.
inline void sgns_pair_update(EmbeddingSpace& space, int32_t center, int32_t context,
                             std::span<const int32_t> negatives, double lr) {
    const int d = space.dim;
    float* v = space.in_row(center).data();

    thread_local std::vector<float*> rows;
    thread_local std::vector<float> coefs;
    thread_local std::vector<float> grad_v;
    const size_t n_targets = negatives.size() + 1;
    rows.resize(n_targets);
    coefs.resize(n_targets);
    grad_v.assign(static_cast<size_t>(d), 0.0f);

    rows[0] = space.out_row(context).data();
    for (size_t i = 0; i < negatives.size(); ++i)
        rows[i + 1] = space.out_row(negatives[i]).data();

    for (size_t i = 0; i < n_targets; ++i) {
        const float* u = rows[i];
        double dot = 0.0;
        for (int j = 0; j < d; ++j) dot += static_cast<double>(u[j]) * static_cast<double>(v[j]);
        if (!std::isfinite(dot))
            throw NumericError("non-finite logit in SGNS update (center=" + std::to_string(center) +
                               ", target=" + std::to_string(i == 0 ? context : negatives[i - 1]) +
                               ", lr=" + std::to_string(lr) + "): learning-rate blow-up?");
        const double label = (i == 0) ? 1.0 : 0.0;
        coefs[i] = static_cast<float>(lr * (label - sigmoid(dot)));
    }

    for (size_t i = 0; i < n_targets; ++i) {
        float* u = rows[i];
        const float c = coefs[i];
        for (int j = 0; j < d; ++j) {
            const float uj = u[j];
            grad_v[static_cast<size_t>(j)] += c * uj;
            u[j] = uj + c * v[j];
        }
    }
    for (int j = 0; j < d; ++j) v[j] += grad_v[static_cast<size_t>(j)];
}

namespace detail {

// Walks every (center, context) pair of a sentence range for `epochs` passes,
// consuming the window and subsampling RNG streams. Used twice per training
// run with identically seeded streams: once to count pairs (the denominator
// of the linear learning-rate schedule) and once to train, so the schedule
// covers the exact pair total.
template <typename PairFn>
uint64_t walk_pairs(const SpanCorpus& corpus, size_t sent_lo, size_t sent_hi,
                    const TrainingConfig& cfg, const std::vector<float>* keep_prob,
                    Rng& window_rng, Rng& subsample_rng, uint64_t* center_visits,
                    PairFn&& fn) {
    uint64_t pairs = 0;
    std::vector<int32_t> kept;
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        for (size_t s = sent_lo; s < sent_hi; ++s) {
            std::span<const int32_t> sent = corpus.sentence(s);
            if (keep_prob) {
                kept.clear();
                for (const int32_t id : sent)
                    if (subsample_rng.next_double() < (*keep_prob)[static_cast<size_t>(id)])
                        kept.push_back(id);
                sent = kept;
            }
            const int64_t len = static_cast<int64_t>(sent.size());
            for (int64_t i = 0; i < len; ++i) {
                if (center_visits) ++*center_visits;
                const int64_t b =
                    cfg.dynamic_window
                        ? 1 + static_cast<int64_t>(window_rng.next_below(
                                  static_cast<uint64_t>(cfg.window)))
                        : cfg.window;
                const int64_t lo = i - b < 0 ? 0 : i - b;
                const int64_t hi = i + b >= len ? len - 1 : i + b;
                for (int64_t j = lo; j <= hi; ++j) {
                    if (j == i) continue;
                    ++pairs;
                    fn(sent[static_cast<size_t>(i)], sent[static_cast<size_t>(j)]);
                }
            }
        }
    }
    return pairs;
}

inline std::vector<float> subsample_keep_probs(const Vocabulary& vocab, double threshold) {
    // Standard downsampling rule: keep(w) = sqrt(t/f) + t/f, capped at 1.
    int64_t total = 0;
    for (const int64_t c : vocab.counts()) total += c;
    std::vector<float> keep(vocab.size());
    for (size_t i = 0; i < vocab.size(); ++i) {
        const double f = static_cast<double>(vocab.counts()[i]) / static_cast<double>(total);
        const double k = std::sqrt(threshold / f) + threshold / f;
        keep[i] = static_cast<float>(k < 1.0 ? k : 1.0);
    }
    return keep;
}

constexpr uint64_t kTagWindow = 0x77696e646f77ULL;     // "window"
constexpr uint64_t kTagNegative = 0x6e656761ULL;       // "nega"
constexpr uint64_t kTagSubsample = 0x737562ULL;        // "sub"

struct WorkerPlan {
    size_t sent_lo = 0;
    size_t sent_hi = 0;
    uint64_t seed_offset = 0;
};

}  // namespace detail

struct TrainProgress {
    int span_index = 0;
    uint64_t pairs_done = 0;
    uint64_t pairs_total = 0;
    double lr = 0.0;
};

using ProgressFn = std::function<void(const TrainProgress&)>;

// Trains one span's embedding space from `init` (copied, never mutated).
// Deterministic for threads == 1; threads > 1 runs lock-free asynchronous
// SGD over sentence partitions and is not bit-reproducible.
inline EmbeddingSpace train_span(const SpanCorpus& corpus, const Vocabulary& vocab,
                                 const NegativeSamplingTable& table, const EmbeddingSpace& init,
                                 const TrainingConfig& cfg,
                                 const ProgressFn& progress = nullptr) {
    cfg.validate();
    if (init.dim != cfg.dim)
        throw ConfigError("init space dimension " + std::to_string(init.dim) +
                          " does not match config dimension " + std::to_string(cfg.dim));
    if (static_cast<size_t>(init.vocab_size) != vocab.size() || vocab.size() != table.size())
        throw ConfigError("init space / vocabulary / sampling table sizes disagree");

    EmbeddingSpace space = init;  // full copy; the contract is no mutation of init
    space.span_index = corpus.span_index;

    if (corpus.token_count() == 0 || cfg.epochs == 0) {
        space.trained_token_count = 0;
        return space;
    }

    std::vector<float> keep_prob_storage;
    const std::vector<float>* keep_prob = nullptr;
    if (cfg.subsample > 0) {
        keep_prob_storage = detail::subsample_keep_probs(vocab, cfg.subsample);
        keep_prob = &keep_prob_storage;
    }

    // Sentence ranges per worker; worker 0 == whole corpus when threads == 1.
    const size_t n_sent = corpus.sentence_count();
    const size_t n_workers = std::min<size_t>(static_cast<size_t>(cfg.threads), n_sent);
    std::vector<detail::WorkerPlan> plans(n_workers);
    for (size_t w = 0; w < n_workers; ++w) {
        plans[w].sent_lo = n_sent * w / n_workers;
        plans[w].sent_hi = n_sent * (w + 1) / n_workers;
        plans[w].seed_offset = w;
    }

    // Phase 1: replay the window/subsample streams to count pairs exactly.
    std::vector<uint64_t> pair_totals(n_workers);
    uint64_t pairs_total = 0;
    for (size_t w = 0; w < n_workers; ++w) {
        Rng wrng(derive_seed(cfg.seed, detail::kTagWindow + plans[w].seed_offset));
        Rng srng(derive_seed(cfg.seed, detail::kTagSubsample + plans[w].seed_offset));
        pair_totals[w] = detail::walk_pairs(corpus, plans[w].sent_lo, plans[w].sent_hi, cfg,
                                            keep_prob, wrng, srng, nullptr,
                                            [](int32_t, int32_t) {});
        pairs_total += pair_totals[w];
    }

    if (pairs_total == 0) {
        space.trained_token_count = 0;
        return space;
    }

    // Phase 2: train. lr decays linearly over the exact pair total.
    std::atomic<uint64_t> pairs_done{0};
    std::atomic<uint64_t> visits_total{0};
    const double lr0 = cfg.learning_rate;
    const double lr_min = cfg.min_learning_rate;
    const bool decay = cfg.lr_schedule == LrSchedule::linear_decay;
    const uint64_t progress_step =
        progress ? std::max<uint64_t>(pairs_total / 200, 1) : UINT64_MAX;

    auto worker = [&](size_t w) {
        Rng wrng(derive_seed(cfg.seed, detail::kTagWindow + plans[w].seed_offset));
        Rng srng(derive_seed(cfg.seed, detail::kTagSubsample + plans[w].seed_offset));
        Rng nrng(derive_seed(cfg.seed, detail::kTagNegative + plans[w].seed_offset));
        std::vector<int32_t> negatives(static_cast<size_t>(cfg.negatives));
        uint64_t local_done = 0;
        uint64_t visits = 0;
        double lr = lr0;
        detail::walk_pairs(
            corpus, plans[w].sent_lo, plans[w].sent_hi, cfg, keep_prob, wrng, srng, &visits,
            [&](int32_t center, int32_t context) {
                const uint64_t p = pairs_done.fetch_add(1, std::memory_order_relaxed);
                if (decay)
                    lr = lr0 + (lr_min - lr0) * (static_cast<double>(p) /
                                                 static_cast<double>(pairs_total));
                for (size_t n = 0; n < negatives.size(); ++n) {
                    int32_t neg = table.sample(nrng);
                    // One resample on collision with the true context, then
                    // accept whatever comes out.
                    if (neg == context) neg = table.sample(nrng);
                    negatives[n] = neg;
                }
                sgns_pair_update(space, center, context, negatives, lr);
                if (progress && ++local_done % progress_step == 0)
                    progress({corpus.span_index, p + 1, pairs_total, lr});
            });
        visits_total.fetch_add(visits, std::memory_order_relaxed);
    };

    if (n_workers == 1) {
        worker(0);
    } else {
        std::vector<std::thread> pool;
        pool.reserve(n_workers);
        for (size_t w = 0; w < n_workers; ++w) pool.emplace_back(worker, w);
        for (auto& t : pool) t.join();
    }

    space.trained_token_count = visits_total.load();
    if (progress) progress({corpus.span_index, pairs_total, pairs_total, lr_min});
    return space;
}

}  // namespace tempovec
