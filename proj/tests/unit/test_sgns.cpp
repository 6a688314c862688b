#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "tempovec/rng.hpp"
#include "tempovec/sgns.hpp"
#include "tempovec/shift.hpp"

using namespace tempovec;

namespace {

SpanCorpus corpus_from(const std::vector<std::vector<int32_t>>& sentences, int span_index = 0) {
    SpanCorpus sc;
    sc.span_index = span_index;
    for (const auto& s : sentences) sc.add_sentence(s);
    return sc;
}

Vocabulary toy_vocab(const std::vector<std::pair<std::string, int64_t>>& entries) {
    std::unordered_map<std::string, int64_t> counts(entries.begin(), entries.end());
    return Vocabulary::from_counts(counts, 1, 0.75);
}

// Test-side SGNS loss, all double: l = -log s(u0.v) - sum_i log s(-ui.v).
// This is the independent oracle the analytic update is checked against.
double oracle_loss(const std::vector<double>& v, const std::vector<std::vector<double>>& us) {
    const auto dot = [](const std::vector<double>& a, const std::vector<double>& b) {
        double s = 0;
        for (size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
        return s;
    };
    const auto logsig = [](double x) { return -std::log1p(std::exp(-x)); };
    double loss = -logsig(dot(us[0], v));
    for (size_t i = 1; i < us.size(); ++i) loss += -logsig(-dot(us[i], v));
    return loss;
}

}  // namespace

TEST_CASE("init_random bounds, zero W_out and determinism") {
    const EmbeddingSpace a = init_random(50, 200, 99);
    for (const float x : a.w_in) REQUIRE(std::abs(x) <= 0.0025f);  // 0.5 / 200
    for (const float x : a.w_out) REQUIRE(x == 0.0f);
    const EmbeddingSpace b = init_random(50, 200, 99);
    REQUIRE(a.w_in == b.w_in);
    const EmbeddingSpace c = init_random(50, 200, 100);
    REQUIRE(a.w_in != c.w_in);
}

TEST_CASE("zero center vector leaves context rows unchanged") {
    EmbeddingSpace space;
    space.vocab_size = 3;
    space.dim = 4;
    space.w_in.assign(12, 0.0f);  // v = 0
    space.w_out.assign(12, 0.25f);
    const std::vector<float> w_out_before = space.w_out;
    const std::vector<int32_t> negs = {2};
    sgns_pair_update(space, 0, 1, negs, 0.5);
    REQUIRE(space.w_out == w_out_before);  // sigma(0) = 0.5, update is 0.5 * v = 0
    // v itself moves: grad_v = 0.5*u_ctx - 0.5*u_neg = 0 here since rows equal
    for (const float x : space.in_row(0)) REQUIRE(x == 0.0f);
}

TEST_CASE("analytic gradient matches central finite differences") {
    // eta = 1 turns the applied update into the negative gradient itself.
    const int d = 10;
    const int k = 5;
    Rng rng(31337);
    double worst = 0.0;
    for (int config = 0; config < 100; ++config) {
        EmbeddingSpace space;
        space.vocab_size = k + 2;
        space.dim = d;
        space.w_in.resize(static_cast<size_t>(space.vocab_size) * d);
        space.w_out.resize(static_cast<size_t>(space.vocab_size) * d);
        for (auto& x : space.w_in) x = static_cast<float>(rng.next_double() * 2 - 1);
        for (auto& x : space.w_out) x = static_cast<float>(rng.next_double() * 2 - 1);

        const int32_t center = 0, context = 1;
        std::vector<int32_t> negs;
        for (int i = 0; i < k; ++i) negs.push_back(2 + i);

        // Double mirror of the float state actually used by the update.
        std::vector<double> v(space.in_row(center).begin(), space.in_row(center).end());
        std::vector<std::vector<double>> us;
        us.emplace_back(space.out_row(context).begin(), space.out_row(context).end());
        for (const int32_t n : negs)
            us.emplace_back(space.out_row(n).begin(), space.out_row(n).end());

        const std::vector<float> v_before(space.in_row(center).begin(),
                                          space.in_row(center).end());
        std::vector<std::vector<float>> u_before;
        u_before.emplace_back(space.out_row(context).begin(), space.out_row(context).end());
        for (const int32_t n : negs)
            u_before.emplace_back(space.out_row(n).begin(), space.out_row(n).end());

        sgns_pair_update(space, center, context, negs, 1.0);

        const double eps = 1e-5;
        const auto check_row = [&](const std::vector<float>& before,
                                   std::span<const float> after, std::vector<double>& param) {
            double max_fd = 0.0, max_diff = 0.0;
            for (int j = 0; j < d; ++j) {
                const double impl_grad = static_cast<double>(before[static_cast<size_t>(j)]) -
                                         static_cast<double>(after[static_cast<size_t>(j)]);
                const double orig = param[static_cast<size_t>(j)];
                param[static_cast<size_t>(j)] = orig + eps;
                const double lp = oracle_loss(v, us);
                param[static_cast<size_t>(j)] = orig - eps;
                const double lm = oracle_loss(v, us);
                param[static_cast<size_t>(j)] = orig;
                const double fd_grad = (lp - lm) / (2 * eps);
                max_fd = std::max(max_fd, std::abs(fd_grad));
                max_diff = std::max(max_diff, std::abs(impl_grad - fd_grad));
            }
            worst = std::max(worst, max_diff / std::max(max_fd, 1e-6));
        };

        check_row(v_before, space.in_row(center), v);
        check_row(u_before[0], space.out_row(context), us[0]);
        for (int i = 0; i < k; ++i)
            check_row(u_before[static_cast<size_t>(i) + 1], space.out_row(negs[static_cast<size_t>(i)]),
                      us[static_cast<size_t>(i) + 1]);
    }
    INFO("max relative gradient error " << worst);
    REQUIRE(worst < 1e-4);
}

TEST_CASE("pair update touches only the involved rows") {
    Rng rng(4);
    EmbeddingSpace space;
    space.vocab_size = 8;
    space.dim = 6;
    space.w_in.resize(48);
    space.w_out.resize(48);
    for (auto& x : space.w_in) x = static_cast<float>(rng.next_double() - 0.5);
    for (auto& x : space.w_out) x = static_cast<float>(rng.next_double() - 0.5);
    const EmbeddingSpace before = space;
    const std::vector<int32_t> negs = {5, 6};
    sgns_pair_update(space, 2, 3, negs, 0.1);
    for (int32_t id = 0; id < 8; ++id) {
        if (id != 2)
            REQUIRE(std::equal(space.in_row(id).begin(), space.in_row(id).end(),
                               before.in_row(id).begin()));
        if (id != 3 && id != 5 && id != 6)
            REQUIRE(std::equal(space.out_row(id).begin(), space.out_row(id).end(),
                               before.out_row(id).begin()));
    }
    REQUIRE_FALSE(std::equal(space.in_row(2).begin(), space.in_row(2).end(),
                             before.in_row(2).begin()));
}

TEST_CASE("non-finite logits abort with a numeric error") {
    EmbeddingSpace space;
    space.vocab_size = 2;
    space.dim = 4;
    space.w_in.assign(8, 1e30f);
    space.w_out.assign(8, 1e30f);
    const std::vector<int32_t> negs;
    REQUIRE_THROWS_AS(sgns_pair_update(space, 0, 1, negs, 0.01), NumericError);
}

TEST_CASE("repeated positive-pair updates drive sigma toward 1, matching the scalar oracle") {
    // With no negatives the (u, v) dynamics close over a = u.v, b = |u|^2,
    // c = |v|^2:  a' = a + g(b+c) + g^2 a,  b' = b + 2ga + g^2 c,
    // c' = c + 2ga + g^2 b, with g = eta * (1 - sigma(a)).
    const int d = 8;
    const double eta = 0.2;
    EmbeddingSpace space;
    space.vocab_size = 2;
    space.dim = d;
    space.w_in.resize(2 * d);
    space.w_out.resize(2 * d);
    Rng rng(11);
    for (auto& x : space.w_in) x = static_cast<float>(rng.next_double() - 0.5);
    for (auto& x : space.w_out) x = static_cast<float>(rng.next_double() - 0.5);

    double a = 0, b = 0, c = 0;
    for (int j = 0; j < d; ++j) {
        const double vj = space.in_row(0)[static_cast<size_t>(j)];
        const double uj = space.out_row(1)[static_cast<size_t>(j)];
        a += uj * vj;
        b += uj * uj;
        c += vj * vj;
    }

    const std::vector<int32_t> no_negs;
    double prev_a = a;
    for (int step = 0; step < 300; ++step) {
        sgns_pair_update(space, 0, 1, no_negs, eta);
        const double g = eta * (1.0 - sigmoid(a));
        const double a2 = a + g * (b + c) + g * g * a;
        const double b2 = b + 2 * g * a + g * g * c;
        const double c2 = c + 2 * g * a + g * g * b;
        a = a2;
        b = b2;
        c = c2;
        double a_impl = 0;
        for (int j = 0; j < d; ++j)
            a_impl += static_cast<double>(space.out_row(1)[static_cast<size_t>(j)]) *
                      static_cast<double>(space.in_row(0)[static_cast<size_t>(j)]);
        REQUIRE(sigmoid(a_impl) == Catch::Approx(sigmoid(a)).margin(2e-3));
        REQUIRE(a >= prev_a);  // monotone approach
        prev_a = a;
    }
    REQUIRE(sigmoid(prev_a) > 0.99);
}

TEST_CASE("train_span with zero epochs or an empty corpus returns init unchanged") {
    const Vocabulary vocab = toy_vocab({{"a", 10}, {"b", 8}});
    const NegativeSamplingTable table = NegativeSamplingTable::from_vocab(vocab);
    TrainingConfig cfg;
    cfg.dim = 12;
    cfg.epochs = 0;
    cfg.seed = 3;
    const EmbeddingSpace init = init_random(2, 12, 55);
    const SpanCorpus corpus = corpus_from({{0, 1}, {1, 0}});
    const EmbeddingSpace out = train_span(corpus, vocab, table, init, cfg);
    REQUIRE(out.w_in == init.w_in);
    REQUIRE(out.w_out == init.w_out);

    cfg.epochs = 3;
    const SpanCorpus empty = corpus_from({});
    const EmbeddingSpace out2 = train_span(empty, vocab, table, init, cfg);
    REQUIRE(out2.w_in == init.w_in);
    REQUIRE(out2.w_out == init.w_out);
}

TEST_CASE("train_span never mutates init and is seed-deterministic") {
    const Vocabulary vocab = toy_vocab({{"a", 30}, {"b", 20}, {"c", 10}});
    const NegativeSamplingTable table = NegativeSamplingTable::from_vocab(vocab);
    TrainingConfig cfg;
    cfg.dim = 16;
    cfg.epochs = 2;
    cfg.window = 2;
    cfg.negatives = 3;
    cfg.seed = 7;
    SpanCorpus corpus = corpus_from({{0, 1, 2, 0}, {1, 0, 2}, {2, 2, 1}});
    const EmbeddingSpace init = init_random(3, 16, 1);
    const EmbeddingSpace init_copy = init;
    const EmbeddingSpace r1 = train_span(corpus, vocab, table, init, cfg);
    REQUIRE(init.w_in == init_copy.w_in);
    REQUIRE(init.w_out == init_copy.w_out);
    const EmbeddingSpace r2 = train_span(corpus, vocab, table, init, cfg);
    REQUIRE(r1.w_in == r2.w_in);  // byte-identical rerun
    REQUIRE(r1.w_out == r2.w_out);
    REQUIRE(r1.w_in != init.w_in);  // training happened

    cfg.seed = 8;
    const EmbeddingSpace r3 = train_span(corpus, vocab, table, init, cfg);
    REQUIRE(r1.w_in != r3.w_in);
}

TEST_CASE("a word absent from the span keeps its W_in row bit-exactly") {
    const Vocabulary vocab = toy_vocab({{"a", 30}, {"b", 20}, {"ghost", 10}});
    const NegativeSamplingTable table = NegativeSamplingTable::from_vocab(vocab);
    const int32_t ghost = vocab.id_of("ghost");
    TrainingConfig cfg;
    cfg.dim = 10;
    cfg.epochs = 3;
    cfg.seed = 21;
    std::vector<std::vector<int32_t>> sentences;
    for (int i = 0; i < 50; ++i) sentences.push_back({vocab.id_of("a"), vocab.id_of("b")});
    const SpanCorpus corpus = corpus_from(sentences);
    const EmbeddingSpace init = init_random(3, 10, 5);
    const EmbeddingSpace out = train_span(corpus, vocab, table, init, cfg);
    REQUIRE(std::equal(out.in_row(ghost).begin(), out.in_row(ghost).end(),
                       init.in_row(ghost).begin()));
    // Its W_out row may drift (corpus-wide negative sampling), and here it
    // certainly was drawn at least once over 50 sentences x 3 epochs.
    REQUIRE_FALSE(std::equal(out.out_row(ghost).begin(), out.out_row(ghost).end(),
                             init.out_row(ghost).begin()));
}

TEST_CASE("toy corpus converges monotonically epoch over epoch") {
    // "a b" repeated plus filler sentences so negative draws rarely hit 'b'.
    std::unordered_map<std::string, int64_t> counts = {{"a", 1000}, {"b", 1000}};
    std::vector<std::vector<std::string>> filler_sents;
    for (int f = 0; f < 20; ++f) counts["f" + std::to_string(f)] = 400;
    const Vocabulary vocab = Vocabulary::from_counts(counts, 1, 0.75);
    const NegativeSamplingTable table = NegativeSamplingTable::from_vocab(vocab);

    std::vector<std::vector<int32_t>> sentences;
    Rng rng(2);
    for (int i = 0; i < 1000; ++i) {
        sentences.push_back({vocab.id_of("a"), vocab.id_of("b")});
        std::vector<int32_t> filler;
        for (int k = 0; k < 8; ++k)
            filler.push_back(vocab.id_of("f" + std::to_string(rng.next_below(20))));
        sentences.push_back(std::move(filler));
    }
    const SpanCorpus corpus = corpus_from(sentences);
    const EmbeddingSpace init = init_random(static_cast<int32_t>(vocab.size()), 16, 9);

    TrainingConfig cfg;
    cfg.dim = 16;
    cfg.window = 2;
    cfg.negatives = 2;
    cfg.learning_rate = 0.05;
    cfg.lr_schedule = LrSchedule::constant;  // so e epochs extend e-1 exactly
    cfg.seed = 13;

    double prev = -2.0;
    bool reached = false;
    for (int epochs = 1; epochs <= 8 && !reached; ++epochs) {
        cfg.epochs = epochs;
        const EmbeddingSpace out = train_span(corpus, vocab, table, init, cfg);
        const auto cos = cosine(out.in_row(vocab.id_of("a")), out.out_row(vocab.id_of("b")));
        REQUIRE(cos.has_value());
        REQUIRE(*cos > prev);
        prev = *cos;
        if (prev > 0.9) reached = true;
    }
    REQUIRE(reached);
}

TEST_CASE("two topic clusters separate") {
    std::unordered_map<std::string, int64_t> counts;
    for (int i = 0; i < 5; ++i) {
        counts["a" + std::to_string(i)] = 500;
        counts["b" + std::to_string(i)] = 500;
    }
    const Vocabulary vocab = Vocabulary::from_counts(counts, 1, 0.75);
    const NegativeSamplingTable table = NegativeSamplingTable::from_vocab(vocab);
    Rng rng(6);
    std::vector<std::vector<int32_t>> sentences;
    for (int i = 0; i < 400; ++i) {
        std::vector<int32_t> sa, sb;
        for (int k = 0; k < 6; ++k) {
            sa.push_back(vocab.id_of("a" + std::to_string(rng.next_below(5))));
            sb.push_back(vocab.id_of("b" + std::to_string(rng.next_below(5))));
        }
        sentences.push_back(std::move(sa));
        sentences.push_back(std::move(sb));
    }
    const SpanCorpus corpus = corpus_from(sentences);
    TrainingConfig cfg;
    cfg.dim = 24;
    cfg.window = 3;
    cfg.epochs = 4;
    cfg.seed = 17;
    cfg.learning_rate = 0.025;
    const EmbeddingSpace init = init_random(static_cast<int32_t>(vocab.size()), 24, 2);
    const EmbeddingSpace out = train_span(corpus, vocab, table, init, cfg);

    double within = 0, cross = 0;
    int nw = 0, nc = 0;
    for (int i = 0; i < 5; ++i)
        for (int j = 0; j < 5; ++j) {
            const auto aa = cosine(out.in_row(vocab.id_of("a" + std::to_string(i))),
                                   out.in_row(vocab.id_of("a" + std::to_string(j))));
            const auto ab = cosine(out.in_row(vocab.id_of("a" + std::to_string(i))),
                                   out.in_row(vocab.id_of("b" + std::to_string(j))));
            if (i < j) { within += *aa; ++nw; }
            cross += *ab;
            ++nc;
        }
    REQUIRE(within / nw > cross / nc);
}

TEST_CASE("linear schedule starts at lr0 and ends at min_lr") {
    const Vocabulary vocab = toy_vocab({{"a", 10}, {"b", 10}});
    const NegativeSamplingTable table = NegativeSamplingTable::from_vocab(vocab);
    TrainingConfig cfg;
    cfg.dim = 8;
    cfg.epochs = 2;
    cfg.learning_rate = 0.04;
    cfg.min_learning_rate = 0.004;
    cfg.seed = 3;
    std::vector<std::vector<int32_t>> sentences(50, std::vector<int32_t>{0, 1});
    const SpanCorpus corpus = corpus_from(sentences);
    const EmbeddingSpace init = init_random(2, 8, 4);
    double first_lr = -1, last_lr = -1;
    train_span(corpus, vocab, table, init, cfg, [&](const TrainProgress& p) {
        if (first_lr < 0 && p.pairs_done < p.pairs_total) first_lr = p.lr;
        last_lr = p.lr;
    });
    REQUIRE(first_lr <= cfg.learning_rate);
    REQUIRE(first_lr > cfg.learning_rate * 0.9);
    REQUIRE(last_lr == Catch::Approx(cfg.min_learning_rate).epsilon(1e-9));
}

TEST_CASE("parallel mode trains without numeric failure") {
    std::unordered_map<std::string, int64_t> counts;
    for (int i = 0; i < 10; ++i) counts["w" + std::to_string(i)] = 100;
    const Vocabulary vocab = Vocabulary::from_counts(counts, 1, 0.75);
    const NegativeSamplingTable table = NegativeSamplingTable::from_vocab(vocab);
    Rng rng(3);
    std::vector<std::vector<int32_t>> sentences;
    for (int i = 0; i < 200; ++i) {
        std::vector<int32_t> s;
        for (int k = 0; k < 5; ++k) s.push_back(static_cast<int32_t>(rng.next_below(10)));
        sentences.push_back(std::move(s));
    }
    const SpanCorpus corpus = corpus_from(sentences);
    TrainingConfig cfg;
    cfg.dim = 12;
    cfg.epochs = 2;
    cfg.threads = 2;
    cfg.seed = 5;
    const EmbeddingSpace init = init_random(10, 12, 6);
    const EmbeddingSpace out = train_span(corpus, vocab, table, init, cfg);
    for (const float x : out.w_in) REQUIRE(std::isfinite(x));
    for (const float x : out.w_out) REQUIRE(std::isfinite(x));
    REQUIRE(out.trained_token_count == corpus.token_count() * 2);
}
