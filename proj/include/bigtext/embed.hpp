#pragma once
// Skip-gram word embeddings with negative sampling over encoded clause token
// sequences. Single-threaded training is bit-reproducible for a fixed seed;
// the multi-worker mode trades that for throughput by updating shared
// vectors without synchronization.
//
// Vector file format: first line "<vocab_size> <dim>", then one line per
// token: the token followed by dim space-separated decimal reals, UTF-8.

#include "util.hpp"

#include <atomic>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <thread>
#include <unordered_map>
#include <unordered_set>
#include <vector>

namespace bigtext {

struct TrainConfig {
    uint32_t window = 2;
    uint32_t negatives = 5;
    uint32_t epochs = 5;
    uint32_t dim = 100;
    double learning_rate = 0.025;
    double lr_floor = 1e-4;
    uint32_t min_count = 1;
    uint64_t seed = 1;
    double subsample = 0.0;  // frequent-token subsampling threshold, 0 = off
    uint32_t threads = 1;    // >1 gives up bit-reproducibility
};

class EmbeddingModel {
public:
    EmbeddingModel() = default;

    EmbeddingModel(std::vector<std::string> vocab, std::vector<uint64_t> counts,
                   uint32_t dim)
        : vocab_(std::move(vocab)), counts_(std::move(counts)), dim_(dim) {
        if (vocab_.size() != counts_.size())
            throw std::invalid_argument("vocab/count size mismatch");
        input_.assign(vocab_.size() * dim_, 0.0);
        output_.assign(vocab_.size() * dim_, 0.0);
        for (size_t i = 0; i < vocab_.size(); ++i) {
            if (!index_.emplace(vocab_[i], i).second)
                throw std::invalid_argument("duplicate vocab token: " + vocab_[i]);
        }
    }

    size_t vocab_size() const { return vocab_.size(); }
    uint32_t dim() const { return dim_; }
    const std::vector<std::string>& vocab() const { return vocab_; }
    const std::vector<uint64_t>& token_counts() const { return counts_; }
    bool has_output_vectors() const { return has_output_; }
    void set_has_output_vectors(bool v) { has_output_ = v; }

    std::optional<size_t> token_index(const std::string& token) const {
        auto it = index_.find(token);
        if (it == index_.end()) return std::nullopt;
        return it->second;
    }

    std::span<double> input_vector(size_t i) { return {&input_[i * dim_], dim_}; }
    std::span<const double> input_vector(size_t i) const {
        return {&input_[i * dim_], dim_};
    }
    std::span<double> output_vector(size_t i) { return {&output_[i * dim_], dim_}; }
    std::span<const double> output_vector(size_t i) const {
        return {&output_[i * dim_], dim_};
    }

    std::optional<std::span<const double>> lookup(const std::string& token) const {
        auto i = token_index(token);
        if (!i) return std::nullopt;
        return input_vector(*i);
    }

    double& input_at(size_t row, size_t col) { return input_[row * dim_ + col]; }
    double& output_at(size_t row, size_t col) { return output_[row * dim_ + col]; }

    bool all_finite() const {
        for (double v : input_)
            if (!std::isfinite(v)) return false;
        for (double v : output_)
            if (!std::isfinite(v)) return false;
        return true;
    }

    uint64_t fingerprint() const {
        uint64_t h = fnv1a64(std::to_string(dim_));
        for (const auto& t : vocab_) h = fnv1a64(t, h);
        h = fnv1a64(std::string_view(reinterpret_cast<const char*>(input_.data()),
                                     input_.size() * sizeof(double)),
                    h);
        return h;
    }

private:
    std::vector<std::string> vocab_;
    std::vector<uint64_t> counts_;
    uint32_t dim_ = 0;
    std::vector<double> input_;
    std::vector<double> output_;
    std::unordered_map<std::string, size_t> index_;
    bool has_output_ = true;
};

// Vocabulary -----------------------------------------------------------------

struct Vocabulary {
    std::vector<std::string> tokens;  // ordered by count desc, then token asc
    std::vector<uint64_t> counts;
};

// Counts tokens across sequences and drops those below min_count. Promoted
// bigram tokens are always retained when present in the input, regardless of
// frequency.
inline Vocabulary build_vocab(std::span<const std::vector<std::string>> sequences,
                              uint64_t min_count,
                              const std::unordered_set<std::string>& promoted = {}) {
    std::unordered_map<std::string, uint64_t> counts;
    for (const auto& seq : sequences)
        for (const auto& tok : seq) ++counts[tok];
    std::vector<std::pair<std::string, uint64_t>> kept;
    for (auto& [tok, c] : counts)
        if (c >= min_count || promoted.count(tok)) kept.emplace_back(tok, c);
    if (kept.empty()) throw std::runtime_error("empty vocabulary after filtering");
    std::sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) {
        return a.second != b.second ? a.second > b.second : a.first < b.first;
    });
    Vocabulary v;
    for (auto& [tok, c] : kept) {
        v.tokens.push_back(tok);
        v.counts.push_back(c);
    }
    return v;
}

// Negative sampling -----------------------------------------------------------

// Draws token indices from the unigram distribution raised to the 3/4 power,
// via the exact cumulative distribution (no table quantization).
class NegativeSampler {
public:
    explicit NegativeSampler(std::span<const uint64_t> counts, double power = 0.75) {
        if (counts.empty()) throw std::invalid_argument("empty count table");
        cumulative_.resize(counts.size());
        double total = 0.0;
        for (size_t i = 0; i < counts.size(); ++i) {
            total += std::pow(static_cast<double>(counts[i]), power);
            cumulative_[i] = total;
        }
        if (total <= 0.0) throw std::invalid_argument("degenerate count table");
        for (double& c : cumulative_) c /= total;
        cumulative_.back() = 1.0;
    }

    size_t sample(std::mt19937_64& rng) const {
        double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
        auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
        if (it == cumulative_.end()) --it;
        return static_cast<size_t>(it - cumulative_.begin());
    }

    double probability(size_t i) const {
        return i == 0 ? cumulative_[0] : cumulative_[i] - cumulative_[i - 1];
    }

private:
    std::vector<double> cumulative_;
};

// Objective -------------------------------------------------------------------

namespace detail {

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// log(1 + e^t), stable for large |t|
inline double softplus(double t) {
    return t > 0 ? t + std::log1p(std::exp(-t)) : std::log1p(std::exp(t));
}

inline double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

}  // namespace detail

// Loss for one positive (input, target) pair with drawn negatives:
//   L = -log s(v_in . u_t) - sum_n log s(-v_in . u_n)
inline double negative_sampling_loss(const EmbeddingModel& m, size_t input,
                                     size_t target, std::span<const size_t> negatives) {
    auto v = m.input_vector(input);
    double loss = detail::softplus(-detail::dot(v, m.output_vector(target)));
    for (size_t n : negatives)
        loss += detail::softplus(detail::dot(v, m.output_vector(n)));
    return loss;
}

struct PairGradient {
    double loss = 0.0;
    std::vector<double> d_input;
    std::vector<double> d_target;
    std::vector<std::vector<double>> d_negatives;
};

inline PairGradient negative_sampling_gradients(const EmbeddingModel& m, size_t input,
                                                size_t target,
                                                std::span<const size_t> negatives) {
    const uint32_t dim = m.dim();
    auto v = m.input_vector(input);
    PairGradient g;
    g.d_input.assign(dim, 0.0);
    g.d_target.assign(dim, 0.0);
    g.d_negatives.resize(negatives.size());

    double s_pos = detail::dot(v, m.output_vector(target));
    g.loss = detail::softplus(-s_pos);
    double coeff = detail::sigmoid(s_pos) - 1.0;
    auto u_t = m.output_vector(target);
    for (uint32_t d = 0; d < dim; ++d) {
        g.d_input[d] += coeff * u_t[d];
        g.d_target[d] = coeff * v[d];
    }
    for (size_t k = 0; k < negatives.size(); ++k) {
        auto u_n = m.output_vector(negatives[k]);
        double s_neg = detail::dot(v, u_n);
        g.loss += detail::softplus(s_neg);
        double c = detail::sigmoid(s_neg);
        g.d_negatives[k].assign(dim, 0.0);
        for (uint32_t d = 0; d < dim; ++d) {
            g.d_input[d] += c * u_n[d];
            g.d_negatives[k][d] = c * v[d];
        }
    }
    return g;
}

// Window enumeration ------------------------------------------------------------

// All (center, context) index pairs within the window, in scan order. Windows
// never cross sequence boundaries.
inline std::vector<std::pair<size_t, size_t>> window_pairs(size_t sequence_length,
                                                           uint32_t window) {
    std::vector<std::pair<size_t, size_t>> out;
    for (size_t c = 0; c < sequence_length; ++c) {
        size_t lo = c >= window ? c - window : 0;
        size_t hi = std::min(sequence_length - 1, c + window);
        for (size_t x = lo; x <= hi; ++x)
            if (x != c) out.emplace_back(c, x);
    }
    return out;
}

// Training ----------------------------------------------------------------------

struct TrainResult {
    EmbeddingModel model;
    std::vector<double> epoch_loss;  // average per-pair loss, one entry per epoch
};

namespace detail {

struct EncodedCorpus {
    std::vector<std::vector<size_t>> sequences;  // token indices, OOV dropped
    uint64_t total_pairs = 0;
};

inline EncodedCorpus encode_corpus(std::span<const std::vector<std::string>> sequences,
                                   const EmbeddingModel& m, uint32_t window) {
    EncodedCorpus out;
    for (const auto& seq : sequences) {
        std::vector<size_t> ids;
        for (const auto& tok : seq)
            if (auto i = m.token_index(tok)) ids.push_back(*i);
        if (ids.size() < 2) continue;
        out.total_pairs += window_pairs(ids.size(), window).size();
        out.sequences.push_back(std::move(ids));
    }
    return out;
}

struct SgdShared {
    EmbeddingModel* model;
    const NegativeSampler* sampler;
    const TrainConfig* config;
    uint64_t planned_pairs = 0;
    std::atomic<uint64_t> done_pairs{0};
};

// One pass over a shard of sequences; returns (loss sum, pair count).
inline std::pair<double, uint64_t> sgd_pass(
    SgdShared& shared, std::span<const std::vector<size_t>> sequences,
    std::mt19937_64& rng, uint64_t total_count,
    std::span<const uint64_t> counts) {
    EmbeddingModel& m = *shared.model;
    const TrainConfig& cfg = *shared.config;
    const uint32_t dim = m.dim();
    double loss_sum = 0.0;
    uint64_t pairs = 0;
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<size_t> negatives;
    std::vector<size_t> kept;

    for (const auto& seq : sequences) {
        kept.clear();
        if (cfg.subsample > 0.0) {
            for (size_t id : seq) {
                double f = static_cast<double>(counts[id]) / total_count;
                double keep = (std::sqrt(f / cfg.subsample) + 1.0) * cfg.subsample / f;
                if (keep >= 1.0 || unit(rng) < keep) kept.push_back(id);
            }
        } else {
            kept.assign(seq.begin(), seq.end());
        }
        if (kept.size() < 2) continue;

        for (auto [c, x] : window_pairs(kept.size(), cfg.window)) {
            size_t input = kept[c];
            size_t target = kept[x];
            negatives.clear();
            for (uint32_t k = 0; k < cfg.negatives; ++k) {
                size_t n = shared.sampler->sample(rng);
                if (n != target) negatives.push_back(n);
            }
            uint64_t done = shared.done_pairs.fetch_add(1, std::memory_order_relaxed);
            double progress =
                shared.planned_pairs ? static_cast<double>(done) / shared.planned_pairs : 1.0;
            double lr = std::max(cfg.lr_floor, cfg.learning_rate * (1.0 - progress));

            PairGradient g = negative_sampling_gradients(m, input, target, negatives);
            if (!std::isfinite(g.loss))
                throw std::runtime_error(
                    "non-finite training loss at pair " + std::to_string(done) +
                    " (input=" + m.vocab()[input] + ", target=" + m.vocab()[target] + ")");
            loss_sum += g.loss;
            ++pairs;

            auto v_in = m.input_vector(input);
            auto u_t = m.output_vector(target);
            for (uint32_t d = 0; d < dim; ++d) {
                v_in[d] -= lr * g.d_input[d];
                u_t[d] -= lr * g.d_target[d];
            }
            for (size_t k = 0; k < negatives.size(); ++k) {
                auto u_n = m.output_vector(negatives[k]);
                for (uint32_t d = 0; d < dim; ++d) u_n[d] -= lr * g.d_negatives[k][d];
            }
        }
    }
    return {loss_sum, pairs};
}

}  // namespace detail

// Trains a skip-gram model over the token sequences. Input vectors start
// uniform in [-0.5, 0.5]/dim, output vectors at zero; the learning rate
// decays linearly to lr_floor over the planned number of pairs.
inline TrainResult train(std::span<const std::vector<std::string>> sequences,
                         const TrainConfig& config,
                         const std::unordered_set<std::string>& promoted = {}) {
    Vocabulary vocab = build_vocab(sequences, config.min_count, promoted);
    EmbeddingModel model(vocab.tokens, vocab.counts, config.dim);

    std::mt19937_64 rng(config.seed);
    std::uniform_real_distribution<double> init(-0.5, 0.5);
    for (size_t i = 0; i < model.vocab_size(); ++i)
        for (uint32_t d = 0; d < config.dim; ++d)
            model.input_at(i, d) = init(rng) / config.dim;

    detail::EncodedCorpus corpus = detail::encode_corpus(sequences, model, config.window);
    NegativeSampler sampler(vocab.counts);
    uint64_t total_count = 0;
    for (uint64_t c : vocab.counts) total_count += c;

    detail::SgdShared shared{&model, &sampler, &config,
                             corpus.total_pairs * config.epochs};

    TrainResult result;
    for (uint32_t epoch = 0; epoch < config.epochs; ++epoch) {
        double loss_sum = 0.0;
        uint64_t pairs = 0;
        if (config.threads <= 1) {
            auto [l, p] = detail::sgd_pass(shared, corpus.sequences, rng, total_count,
                                           vocab.counts);
            loss_sum = l;
            pairs = p;
        } else {
            size_t shards = std::min<size_t>(config.threads, corpus.sequences.size());
            std::vector<std::thread> workers;
            std::vector<std::pair<double, uint64_t>> partial(shards);
            size_t chunk = (corpus.sequences.size() + shards - 1) / shards;
            for (size_t t = 0; t < shards; ++t) {
                workers.emplace_back([&, t] {
                    std::mt19937_64 local(
                        splitmix64(config.seed ^ (epoch * 1000003ull + t + 1)));
                    size_t lo = t * chunk;
                    size_t hi = std::min(corpus.sequences.size(), lo + chunk);
                    partial[t] = detail::sgd_pass(
                        shared,
                        std::span(corpus.sequences).subspan(lo, hi - lo), local,
                        total_count, vocab.counts);
                });
            }
            for (auto& w : workers) w.join();
            for (auto& [l, p] : partial) {
                loss_sum += l;
                pairs += p;
            }
        }
        result.epoch_loss.push_back(pairs ? loss_sum / pairs : 0.0);
    }

    if (!model.all_finite())
        throw std::runtime_error("training produced non-finite vectors");
    result.model = std::move(model);
    return result;
}

// Similarity ---------------------------------------------------------------------

// Cosine similarity in [-1, 1]; a zero vector yields 0 and sets the flag.
inline double cosine(std::span<const double> a, std::span<const double> b,
                     bool* zero_flag = nullptr) {
    if (a.size() != b.size())
        throw std::invalid_argument("cosine: dimension mismatch");
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (size_t i = 0; i < a.size(); ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    if (na == 0.0 || nb == 0.0) {
        if (zero_flag) *zero_flag = true;
        return 0.0;
    }
    if (zero_flag) *zero_flag = false;
    double c = dot / (std::sqrt(na) * std::sqrt(nb));
    return std::clamp(c, -1.0, 1.0);
}

// Vector file I/O ------------------------------------------------------------------

inline void export_vectors(const EmbeddingModel& model, const std::string& path) {
    std::string out = std::to_string(model.vocab_size()) + " " +
                      std::to_string(model.dim()) + "\n";
    for (size_t i = 0; i < model.vocab_size(); ++i) {
        out += model.vocab()[i];
        for (double v : model.input_vector(i)) {
            out += ' ';
            out += format_real(v);
        }
        out += '\n';
    }
    write_file(path, out);
}

inline EmbeddingModel import_vectors(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open vector file: " + path);
    std::string line;
    if (!std::getline(in, line))
        throw std::runtime_error("empty vector file: " + path);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    auto header = split(line, ' ');
    if (header.size() != 2)
        throw std::runtime_error("bad vector file header: " + line);
    size_t rows = std::stoull(header[0]);
    uint32_t dim = static_cast<uint32_t>(std::stoul(header[1]));
    if (dim == 0) throw std::runtime_error("vector file declares dim 0");

    std::vector<std::string> vocab;
    std::vector<std::vector<double>> vectors;
    size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        while (!line.empty() && line.back() == ' ') line.pop_back();  // classic
        if (line.empty()) continue;
        auto fields = split(line, ' ');
        if (fields.size() != dim + 1)
            throw std::runtime_error("line " + std::to_string(line_no) + ": expected " +
                                     std::to_string(dim + 1) + " fields, got " +
                                     std::to_string(fields.size()));
        std::vector<double> v(dim);
        for (uint32_t d = 0; d < dim; ++d) {
            v[d] = std::stod(fields[d + 1]);
            if (!std::isfinite(v[d]))
                throw std::runtime_error("line " + std::to_string(line_no) +
                                         ": non-finite vector entry");
        }
        vocab.push_back(fields[0]);
        vectors.push_back(std::move(v));
    }
    if (vocab.size() != rows)
        throw std::runtime_error("vector file declares " + std::to_string(rows) +
                                 " rows but contains " + std::to_string(vocab.size()));

    EmbeddingModel model(vocab, std::vector<uint64_t>(vocab.size(), 1), dim);
    for (size_t i = 0; i < vocab.size(); ++i)
        for (uint32_t d = 0; d < dim; ++d) model.input_at(i, d) = vectors[i][d];
    model.set_has_output_vectors(false);
    return model;
}

}  // namespace bigtext
