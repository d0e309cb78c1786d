#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <vector>

#include "ood/corpus.hpp"
#include "ood/gradcheck.hpp"
#include "ood/layers.hpp"
#include "ood/optim.hpp"

namespace ood {

enum class Arch { MeanPoolMlp, Cnn };

struct ClassifierConfig {
    Arch arch = Arch::Cnn;
    std::size_t embedding_dim = 100;
    std::vector<std::size_t> conv_widths = {3, 4, 5};
    std::size_t conv_filters = 100;
    std::size_t hidden_dim = 256;  // mlp only
    double dropout = 0.5;
    std::size_t vocab_size = 0;
    std::size_t num_classes = 0;  // K

    void validate() const {
        require(num_classes >= 2, "classifier: K must be >= 2");
        require(embedding_dim > 0 && vocab_size > 1, "classifier: dims must be positive");
        if (arch == Arch::Cnn)
            require(!conv_widths.empty() && conv_filters > 0, "classifier: conv config invalid");
        else
            require(hidden_dim > 0, "classifier: hidden dim must be positive");
    }
};

struct Batch {
    std::vector<std::size_t> ids;      // B·L, row-major
    std::vector<std::size_t> lengths;  // true lengths
    std::size_t B = 0, L = 0;
};

inline Batch make_batch(const std::vector<Encoded>& xs, const std::vector<std::size_t>& which) {
    Batch b;
    b.B = which.size();
    require(b.B > 0, "make_batch: empty batch");
    b.L = xs[which[0]].ids.size();
    for (auto i : which) {
        require(xs[i].ids.size() == b.L, "make_batch: inconsistent sequence lengths");
        b.ids.insert(b.ids.end(), xs[i].ids.begin(), xs[i].ids.end());
        b.lengths.push_back(xs[i].length);
    }
    return b;
}

inline Batch concat_batches(const Batch& a, const Batch& b) {
    require(a.L == b.L || b.B == 0, "concat_batches: length mismatch");
    Batch out = a;
    out.B += b.B;
    out.ids.insert(out.ids.end(), b.ids.begin(), b.ids.end());
    out.lengths.insert(out.lengths.end(), b.lengths.begin(), b.lengths.end());
    return out;
}

// The K-way IND intent classifier. CNN: widths {3,4,5}×filters with
// max-over-time pooling; MLP: masked mean-pool over embeddings.
template <typename T>
class TextClassifier {
public:
    ClassifierConfig cfg;
    ParamStore<T> params;

    explicit TextClassifier(ClassifierConfig c) : cfg(std::move(c)), dropout_(cfg.dropout) {
        cfg.validate();
        for (std::size_t i = 0; i < cfg.conv_widths.size(); ++i) {
            convs_.emplace_back("conv" + std::to_string(cfg.conv_widths[i]), cfg.conv_widths[i]);
            conv_relus_.emplace_back();
            pools_.emplace_back();
        }
    }

    void init(Rng& rng) {
        init_embedding_params(params, "emb", cfg.vocab_size, cfg.embedding_dim, rng);
        if (cfg.arch == Arch::Cnn) {
            for (auto w : cfg.conv_widths)
                init_affine_params(params, "conv" + std::to_string(w), w * cfg.embedding_dim,
                                   cfg.conv_filters, rng);
            init_affine_params(params, "head", cfg.conv_widths.size() * cfg.conv_filters,
                               cfg.num_classes, rng);
        } else {
            init_affine_params(params, "fc1", cfg.embedding_dim, cfg.hidden_dim, rng);
            init_affine_params(params, "head", cfg.hidden_dim, cfg.num_classes, rng);
        }
    }

    std::size_t min_input_len() const {
        if (cfg.arch != Arch::Cnn) return 1;
        std::size_t m = 1;
        for (auto w : cfg.conv_widths) m = std::max(m, w);
        return m;
    }

    // Returns [B×K] logits. Dropout is consumed from `rng` in train mode only.
    Tensor<T> forward(const Batch& batch, bool train, Rng& rng) {
        require(batch.B > 0, "forward: empty batch");
        Batch padded = batch;
        if (padded.L < min_input_len()) {  // pad short inputs up to the widest filter
            Batch ext;
            ext.B = padded.B;
            ext.L = min_input_len();
            ext.lengths = padded.lengths;
            ext.ids.assign(ext.B * ext.L, kPadId);
            for (std::size_t b = 0; b < padded.B; ++b)
                for (std::size_t t = 0; t < padded.L; ++t)
                    ext.ids[b * ext.L + t] = padded.ids[b * padded.L + t];
            padded = std::move(ext);
        }
        Tensor<T> emb = emb_.forward(params, padded.ids, padded.B, padded.L);
        Tensor<T> feat;
        if (cfg.arch == Arch::Cnn) {
            const std::size_t F = cfg.conv_filters;
            feat = Tensor<T>({padded.B, convs_.size() * F});
            for (std::size_t c = 0; c < convs_.size(); ++c) {
                Tensor<T> h = conv_relus_[c].forward(convs_[c].forward(params, emb));
                Tensor<T> p = pools_[c].forward(h);
                for (std::size_t b = 0; b < padded.B; ++b)
                    for (std::size_t f = 0; f < F; ++f) feat(b, c * F + f) = p(b, f);
            }
        } else {
            feat = fc_relu_.forward(fc1_.forward(params, pool_.forward(emb, padded.lengths)));
        }
        Tensor<T> dropped = dropout_.forward(feat, train, rng);
        Tensor<T> logits = head_.forward(params, dropped);
        check_finite(logits, "classifier logits");
        return logits;
    }

    // Accumulates parameter gradients for the most recent forward pass.
    void backward(const Tensor<T>& dlogits) {
        Tensor<T> dfeat = dropout_.backward(head_.backward(params, dlogits));
        if (cfg.arch == Arch::Cnn) {
            const std::size_t F = cfg.conv_filters;
            Tensor<T> demb;
            for (std::size_t c = 0; c < convs_.size(); ++c) {
                Tensor<T> dp({dfeat.shape[0], F});
                for (std::size_t b = 0; b < dfeat.shape[0]; ++b)
                    for (std::size_t f = 0; f < F; ++f) dp(b, f) = dfeat(b, c * F + f);
                Tensor<T> dx = convs_[c].backward(params, conv_relus_[c].backward(pools_[c].backward(dp)));
                if (c == 0) demb = std::move(dx);
                else
                    for (std::size_t i = 0; i < demb.numel(); ++i) demb.data[i] += dx.data[i];
            }
            emb_.backward(params, demb);
        } else {
            Tensor<T> dpool = fc1_.backward(params, fc_relu_.backward(dfeat));
            emb_.backward(params, pool_.backward(dpool));
        }
    }

private:
    EmbeddingLayer<T> emb_{"emb"};
    std::vector<Conv1dLayer<T>> convs_;
    std::vector<ReluLayer<T>> conv_relus_;
    std::vector<MaxPoolTime<T>> pools_;
    MeanPoolTime<T> pool_;
    AffineLayer<T> fc1_{"fc1"};
    ReluLayer<T> fc_relu_;
    DropoutLayer<T> dropout_;
    AffineLayer<T> head_{"head"};
};

// Combined loss: mean cross-entropy on the IND batch plus β times the
// negated mean entropy on the OOD batch. An empty OOD batch reduces to the
// plain cross-entropy bitwise (no extra arithmetic touches the value).
template <typename T>
T loss_eq1(const Tensor<T>& logits_ind, const std::vector<std::size_t>& labels,
           const Tensor<T>* logits_ood, double beta, Tensor<T>* dl_ind = nullptr,
           Tensor<T>* dl_ood = nullptr, double* ood_entropy_out = nullptr) {
    require(logits_ind.shape[0] >= 1, "loss_eq1: IND batch must be nonempty");
    T ce = cross_entropy(logits_ind, labels, dl_ind);
    if (!logits_ood || logits_ood->shape[0] == 0) {
        if (ood_entropy_out) *ood_entropy_out = 0.0;
        return ce;
    }
    Tensor<T> dh;
    T h = entropy_of_logits(*logits_ood, dl_ood ? &dh : nullptr);
    if (ood_entropy_out) *ood_entropy_out = static_cast<double>(h);
    if (dl_ood) {
        *dl_ood = Tensor<T>(logits_ood->shape);
        for (std::size_t i = 0; i < dh.numel(); ++i)
            dl_ood->data[i] = static_cast<T>(-beta) * dh.data[i];
    }
    return ce + static_cast<T>(beta) * (-h);
}

struct TrainConfig {
    double learning_rate = 1e-3;
    std::size_t batch_size = 64;
    std::size_t epochs = 30;
    double beta = 1.0;  // weight of the negated-entropy term
    std::uint64_t seed = 0;
    std::size_t patience = 5;  // early stop on dev IND accuracy
};

struct EpochRecord {
    std::size_t epoch;
    double train_acc;
    double dev_acc;  // NaN-free: −1 when no dev split
    double loss;
    double ood_entropy;
};

struct TrainLog {
    std::vector<EpochRecord> records;
};

template <typename T>
struct TrainResult {
    TrainLog log;
    ParamStore<T> best_params;
    double best_dev_acc = -1.0;
    std::size_t best_epoch = 0;
};

template <typename T>
std::size_t argmax_row(const Tensor<T>& logits, std::size_t row) {
    std::size_t best = 0;
    for (std::size_t k = 1; k < logits.shape[1]; ++k)
        if (logits(row, k) > logits(row, best)) best = k;  // ties -> lowest class id
    return best;
}

template <typename T>
double ind_accuracy(TextClassifier<T>& model, const std::vector<Encoded>& xs,
                    const std::vector<std::size_t>& ys, std::size_t batch_size = 256) {
    require(!xs.empty(), "ind_accuracy: empty example list");
    require(xs.size() == ys.size(), "ind_accuracy: label count mismatch");
    for (auto y : ys)
        require(y < model.cfg.num_classes, "ind_accuracy: non-IND label");
    Rng dummy(0);
    std::size_t correct = 0;
    for (std::size_t start = 0; start < xs.size(); start += batch_size) {
        std::vector<std::size_t> idx;
        for (std::size_t i = start; i < std::min(start + batch_size, xs.size()); ++i)
            idx.push_back(i);
        Tensor<T> logits = model.forward(make_batch(xs, idx), false, dummy);
        for (std::size_t r = 0; r < idx.size(); ++r)
            if (argmax_row(logits, r) == ys[idx[r]]) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(xs.size());
}

// Training loop for loss_eq1. Per step one IND minibatch and, when `ood_source` is
// nonempty, one equally sized OOD minibatch (cycled). The IND batch schedule
// and IND dropout draws depend only on the seed, never on the OOD source, so
// baseline and entropy modes see identical IND pipelines.
template <typename T>
TrainResult<T> train(TextClassifier<T>& model, const std::vector<Encoded>& train_x,
                     const std::vector<std::size_t>& train_y, const std::vector<Encoded>& dev_x,
                     const std::vector<std::size_t>& dev_y, const std::vector<Encoded>& ood_source,
                     const TrainConfig& cfg) {
    require(!train_x.empty(), "train: empty IND training set");
    require(cfg.beta >= 0.0, "train: beta must be >= 0");
    Adam<T> opt(cfg.learning_rate);
    Rng shuffle_rng = Rng::derive(cfg.seed, 1);
    Rng ood_rng = Rng::derive(cfg.seed, 2);
    Rng dropout_rng = Rng::derive(cfg.seed, 3);

    std::vector<std::size_t> ood_order(ood_source.size());
    for (std::size_t i = 0; i < ood_order.size(); ++i) ood_order[i] = i;
    ood_rng.shuffle(ood_order);
    std::size_t ood_ptr = 0;

    TrainResult<T> result;
    result.best_params = model.params;
    std::size_t since_best = 0;

    std::vector<std::size_t> order(train_x.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        shuffle_rng.shuffle(order);
        double loss_sum = 0, entropy_sum = 0;
        std::size_t steps = 0, correct = 0;
        for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
            std::vector<std::size_t> idx(order.begin() + start,
                                         order.begin() +
                                             std::min(start + cfg.batch_size, order.size()));
            Batch ind = make_batch(train_x, idx);
            std::vector<std::size_t> labels;
            for (auto i : idx) labels.push_back(train_y[i]);

            model.params.zero_grad();

            // IND sub-batch: its forward, dropout draws, and gradients never
            // depend on the OOD source, so all modes share one IND pipeline.
            Tensor<T> logits_ind = model.forward(ind, true, dropout_rng);
            Tensor<T> dl_ind;
            T loss = loss_eq1(logits_ind, labels, static_cast<const Tensor<T>*>(nullptr), cfg.beta,
                              &dl_ind);
            for (std::size_t r = 0; r < ind.B; ++r)
                if (argmax_row(logits_ind, r) == labels[r]) ++correct;
            model.backward(dl_ind);

            double step_entropy = 0;
            if (!ood_source.empty()) {
                std::vector<std::size_t> oidx;
                for (std::size_t i = 0; i < idx.size(); ++i) {
                    oidx.push_back(ood_order[ood_ptr]);
                    ood_ptr = (ood_ptr + 1) % ood_order.size();
                }
                Tensor<T> logits_ood = model.forward(make_batch(ood_source, oidx), true, ood_rng);
                Tensor<T> dh;
                T h = entropy_of_logits(logits_ood, &dh);
                step_entropy = static_cast<double>(h);
                loss += static_cast<T>(cfg.beta) * (-h);
                Tensor<T> dl_ood(logits_ood.shape);
                for (std::size_t i = 0; i < dh.numel(); ++i)
                    dl_ood.data[i] = static_cast<T>(-cfg.beta) * dh.data[i];
                model.backward(dl_ood);
            }
            require(std::isfinite(static_cast<double>(loss)),
                    "train: non-finite loss at epoch " + std::to_string(epoch) + " step " +
                        std::to_string(steps));
            opt.step(model.params);

            loss_sum += static_cast<double>(loss);
            entropy_sum += step_entropy;
            ++steps;
        }

        EpochRecord rec;
        rec.epoch = epoch;
        rec.train_acc = static_cast<double>(correct) / static_cast<double>(train_x.size());
        rec.loss = loss_sum / static_cast<double>(steps);
        rec.ood_entropy = ood_source.empty() ? 0.0 : entropy_sum / static_cast<double>(steps);
        rec.dev_acc = dev_x.empty() ? -1.0 : ind_accuracy(model, dev_x, dev_y);
        result.log.records.push_back(rec);

        if (dev_x.empty()) {
            result.best_params = model.params;
            result.best_epoch = epoch;
        } else if (rec.dev_acc > result.best_dev_acc) {
            result.best_dev_acc = rec.dev_acc;
            result.best_params = model.params;
            result.best_epoch = epoch;
            since_best = 0;
        } else if (++since_best >= cfg.patience) {
            break;
        }
    }
    if (dev_x.empty()) result.best_dev_acc = -1.0;
    return result;
}

// Max-softmax Score(x) for every example, eval mode.
template <typename T>
std::vector<double> score_all(TextClassifier<T>& model, const std::vector<Encoded>& xs,
                              std::size_t batch_size = 256) {
    Rng dummy(0);
    std::vector<double> out;
    for (std::size_t start = 0; start < xs.size(); start += batch_size) {
        std::vector<std::size_t> idx;
        for (std::size_t i = start; i < std::min(start + batch_size, xs.size()); ++i)
            idx.push_back(i);
        Tensor<T> logits = model.forward(make_batch(xs, idx), false, dummy);
        Tensor<T> probs = softmax(logits);
        for (std::size_t r = 0; r < idx.size(); ++r) {
            double best = 0;
            for (std::size_t k = 0; k < probs.shape[1]; ++k)
                best = std::max(best, static_cast<double>(probs(r, k)));
            out.push_back(best);
        }
    }
    return out;
}

}  // namespace ood
