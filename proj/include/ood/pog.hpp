#pragma once

#include <cstddef>
#include <functional>
#include <set>
#include <string>
#include <unordered_set>
#include <vector>

#include "ood/classifier.hpp"
#include "ood/corpus.hpp"
#include "ood/layers.hpp"
#include "ood/optim.hpp"

namespace ood {

enum class DecoderKind { Mlp, Gru };

struct PogConfig {
    std::size_t d_z = 64;       // latent dimension
    std::size_t d_noise = 32;   // generator noise dimension
    std::size_t ae_emb_dim = 64;
    std::size_t dec_hidden = 64;
    std::size_t pos_dim = 16;   // gru decoder position-input dimension
    DecoderKind decoder = DecoderKind::Mlp;
    std::size_t ae_epochs = 30;
    double ae_lr = 1e-3;
    std::size_t ae_batch = 64;
    std::size_t adv_steps = 2000;
    double adv_lr = 2e-4;
    std::size_t adv_batch = 64;
    double alpha = 1.0;               // generator entropy weight
    double jaccard_threshold = 0.8;   // post-filter rule (b)
    double confidence_threshold = 0.9;  // post-filter rule (c)
    std::uint64_t seed = 0;

    void validate() const {
        require(d_z > 0 && d_noise > 0 && ae_emb_dim > 0 && dec_hidden > 0,
                "pog: dimensions must be positive");
        require(alpha >= 0.0, "pog: alpha must be >= 0");
    }
};

// Encoder: embedding → masked mean-pool → affine → tanh → z.
// Decoder (mlp): z → affine → relu → per-position states → shared affine → V
// logits per position; non-autoregressive. Gru variant runs a recurrent cell
// over learned position inputs from h0 = tanh(affine(z)).
template <typename T>
class Autoencoder {
public:
    PogConfig cfg;
    std::size_t vocab_size, max_len;
    ParamStore<T> params;

    Autoencoder(PogConfig c, std::size_t V, std::size_t L)
        : cfg(c), vocab_size(V), max_len(L), gru_("dec_gru", c.pos_dim, c.dec_hidden) {
        cfg.validate();
        require(max_len >= 1, "autoencoder: max_len must be >= 1");
    }

    void init(Rng& rng) {
        init_embedding_params(params, "ae_emb", vocab_size, cfg.ae_emb_dim, rng);
        init_affine_params(params, "enc", cfg.ae_emb_dim, cfg.d_z, rng);
        if (cfg.decoder == DecoderKind::Mlp) {
            init_affine_params(params, "dec1", cfg.d_z, max_len * cfg.dec_hidden, rng);
        } else {
            init_affine_params(params, "dec_h0", cfg.d_z, cfg.dec_hidden, rng);
            auto& pos = params.add("dec_pos", {max_len, cfg.pos_dim});
            init_uniform(pos, rng, -0.08, 0.08);
            gru_.init(params, rng);
        }
        init_affine_params(params, "dec_out", cfg.dec_hidden, vocab_size, rng);
    }

    Tensor<T> encode(const Batch& batch) {
        Tensor<T> emb = emb_.forward(params, batch.ids, batch.B, batch.L);
        Tensor<T> pooled = pool_.forward(emb, batch.lengths);
        return enc_tanh_.forward(enc_aff_.forward(params, pooled));
    }

    void encode_backward(const Tensor<T>& dz) {
        Tensor<T> dpool = enc_aff_.backward(params, enc_tanh_.backward(dz));
        emb_.backward(params, pool_.backward(dpool));
    }

    // [B·max_len × V] per-position vocabulary logits
    Tensor<T> decode_logits(const Tensor<T>& z) {
        const std::size_t B = z.shape[0];
        if (cfg.decoder == DecoderKind::Mlp) {
            Tensor<T> h = dec_relu_.forward(dec1_.forward(params, z));  // [B × L·dh]
            Tensor<T> states({B * max_len, cfg.dec_hidden});
            states.data = h.data;
            return dec_out_.forward(params, states);
        }
        Tensor<T> h = h0_tanh_.forward(h0_aff_.forward(params, z));  // [B × dh]
        gru_caches_.assign(max_len, typename GruCell<T>::StepCache{});
        const auto& pos = params.value("dec_pos");
        Tensor<T> states({B * max_len, cfg.dec_hidden});
        for (std::size_t t = 0; t < max_len; ++t) {
            Tensor<T> x({B, cfg.pos_dim});
            for (std::size_t b = 0; b < B; ++b)
                for (std::size_t j = 0; j < cfg.pos_dim; ++j) x(b, j) = pos(t, j);
            h = gru_.forward(params, x, h, gru_caches_[t]);
            for (std::size_t b = 0; b < B; ++b)
                for (std::size_t j = 0; j < cfg.dec_hidden; ++j)
                    states(b * max_len + t, j) = h(b, j);
        }
        return dec_out_.forward(params, states);
    }

    // returns dz
    Tensor<T> decode_backward(const Tensor<T>& dlogits) {
        Tensor<T> dstates = dec_out_.backward(params, dlogits);  // [B·L × dh]
        const std::size_t B = dstates.shape[0] / max_len;
        if (cfg.decoder == DecoderKind::Mlp) {
            Tensor<T> dh({B, max_len * cfg.dec_hidden});
            dh.data = dstates.data;
            return dec1_.backward(params, dec_relu_.backward(dh));
        }
        auto& dpos = params.grad("dec_pos");
        Tensor<T> dh({B, cfg.dec_hidden});
        for (std::size_t t = max_len; t-- > 0;) {
            for (std::size_t b = 0; b < B; ++b)
                for (std::size_t j = 0; j < cfg.dec_hidden; ++j)
                    dh(b, j) += dstates(b * max_len + t, j);
            auto [dx, dh_prev] = gru_.backward(params, gru_caches_[t], dh);
            for (std::size_t b = 0; b < B; ++b)
                for (std::size_t j = 0; j < cfg.pos_dim; ++j) dpos(t, j) += dx(b, j);
            dh = std::move(dh_prev);
        }
        return h0_aff_.backward(params, h0_tanh_.backward(dh));
    }

    // Masked per-position reconstruction cross-entropy; PAD positions beyond
    // the true length carry no loss. Accumulates grads when with_grad.
    T reconstruction_loss(const Batch& batch, bool with_grad) {
        Tensor<T> z = encode(batch);
        Tensor<T> logits = decode_logits(z);  // [B·L × V]
        Tensor<T> ls = log_softmax(logits);
        std::size_t count = 0;
        T loss = 0;
        for (std::size_t b = 0; b < batch.B; ++b) {
            std::size_t n = std::min<std::size_t>(batch.lengths[b], batch.L);
            for (std::size_t t = 0; t < n; ++t) {
                loss -= ls(b * batch.L + t, batch.ids[b * batch.L + t]);
                ++count;
            }
        }
        require(count > 0, "reconstruction_loss: batch has no unmasked positions");
        loss /= static_cast<T>(count);
        require(std::isfinite(static_cast<double>(loss)), "reconstruction_loss: non-finite");
        if (with_grad) {
            Tensor<T> dlogits(logits.shape);
            for (std::size_t b = 0; b < batch.B; ++b) {
                std::size_t n = std::min<std::size_t>(batch.lengths[b], batch.L);
                for (std::size_t t = 0; t < n; ++t) {
                    std::size_t row = b * batch.L + t;
                    std::size_t y = batch.ids[row];
                    for (std::size_t v = 0; v < vocab_size; ++v)
                        dlogits(row, v) =
                            (std::exp(ls(row, v)) - (v == y ? T(1) : T(0))) / static_cast<T>(count);
                }
            }
            encode_backward(decode_backward(dlogits));
        }
        return loss;
    }

    // argmax decode of one latent batch; trailing PAD stripped, empty
    // sequences replaced by a single UNK so downstream encoding never sees
    // empty input.
    std::vector<std::vector<std::size_t>> decode_ids(const Tensor<T>& z) {
        Tensor<T> logits = decode_logits(z);
        const std::size_t B = z.shape[0];
        std::vector<std::vector<std::size_t>> out(B);
        for (std::size_t b = 0; b < B; ++b) {
            std::vector<std::size_t> ids;
            for (std::size_t t = 0; t < max_len; ++t) {
                std::size_t row = b * max_len + t;
                std::size_t best = 0;
                for (std::size_t v = 1; v < vocab_size; ++v)
                    if (logits(row, v) > logits(row, best)) best = v;
                ids.push_back(best);
            }
            while (!ids.empty() && ids.back() == kPadId) ids.pop_back();
            if (ids.empty()) ids.push_back(kUnkId);
            out[b] = std::move(ids);
        }
        return out;
    }

    double token_reconstruction_accuracy(const std::vector<Encoded>& xs) {
        std::size_t correct = 0, total = 0;
        for (std::size_t start = 0; start < xs.size(); start += 64) {
            std::vector<std::size_t> idx;
            for (std::size_t i = start; i < std::min(start + 64, xs.size()); ++i) idx.push_back(i);
            Batch b = make_batch(xs, idx);
            Tensor<T> logits = decode_logits(encode(b));
            for (std::size_t r = 0; r < idx.size(); ++r) {
                std::size_t n = std::min<std::size_t>(b.lengths[r], b.L);
                for (std::size_t t = 0; t < n; ++t) {
                    std::size_t row = r * b.L + t;
                    std::size_t best = 0;
                    for (std::size_t v = 1; v < vocab_size; ++v)
                        if (logits(row, v) > logits(row, best)) best = v;
                    if (best == b.ids[row]) ++correct;
                    ++total;
                }
            }
        }
        return total == 0 ? 0.0 : static_cast<double>(correct) / static_cast<double>(total);
    }

private:
    EmbeddingLayer<T> emb_{"ae_emb"};
    MeanPoolTime<T> pool_;
    AffineLayer<T> enc_aff_{"enc"};
    TanhLayer<T> enc_tanh_;
    AffineLayer<T> dec1_{"dec1"};
    ReluLayer<T> dec_relu_;
    AffineLayer<T> h0_aff_{"dec_h0"};
    TanhLayer<T> h0_tanh_;
    GruCell<T> gru_;
    std::vector<typename GruCell<T>::StepCache> gru_caches_;
    AffineLayer<T> dec_out_{"dec_out"};
};

struct AeTrainResult {
    double final_loss = 0;
};

template <typename T>
AeTrainResult train_autoencoder(Autoencoder<T>& ae, const std::vector<Encoded>& train_x,
                                Rng& init_rng) {
    require(!train_x.empty(), "train_autoencoder: empty training set");
    ae.init(init_rng);
    Adam<T> opt(ae.cfg.ae_lr);
    Rng shuffle_rng = Rng::derive(ae.cfg.seed, 11);
    std::vector<std::size_t> order(train_x.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    AeTrainResult result;
    for (std::size_t epoch = 0; epoch < ae.cfg.ae_epochs; ++epoch) {
        shuffle_rng.shuffle(order);
        double loss_sum = 0;
        std::size_t steps = 0;
        for (std::size_t start = 0; start < order.size(); start += ae.cfg.ae_batch) {
            std::vector<std::size_t> idx(order.begin() + start,
                                         order.begin() +
                                             std::min(start + ae.cfg.ae_batch, order.size()));
            ae.params.zero_grad();
            T loss = ae.reconstruction_loss(make_batch(train_x, idx), true);
            opt.step(ae.params);
            loss_sum += static_cast<double>(loss);
            ++steps;
        }
        result.final_loss = loss_sum / static_cast<double>(steps);
    }
    return result;
}

// ---- latent-space adversarial components ---------------------------------

template <typename T>
class Generator {
public:
    ParamStore<T> params;
    std::size_t d_noise, d_z;

    Generator(std::size_t dn, std::size_t dz, std::size_t hidden = 64)
        : d_noise(dn), d_z(dz), hidden_(hidden) {}

    void init(Rng& rng) {
        init_affine_params(params, "g1", d_noise, hidden_, rng);
        init_affine_params(params, "g2", hidden_, hidden_, rng);
        init_affine_params(params, "g3", hidden_, d_z, rng);
    }

    Tensor<T> forward(const Tensor<T>& eps) {
        Tensor<T> h1 = r1_.forward(a1_.forward(params, eps));
        Tensor<T> h2 = r2_.forward(a2_.forward(params, h1));
        return out_tanh_.forward(a3_.forward(params, h2));
    }

    Tensor<T> backward(const Tensor<T>& dz) {
        Tensor<T> d3 = a3_.backward(params, out_tanh_.backward(dz));
        Tensor<T> d2 = a2_.backward(params, r2_.backward(d3));
        return a1_.backward(params, r1_.backward(d2));
    }

private:
    std::size_t hidden_;
    AffineLayer<T> a1_{"g1"}, a2_{"g2"}, a3_{"g3"};
    ReluLayer<T> r1_, r2_;
    TanhLayer<T> out_tanh_;
};

template <typename T>
class Discriminator {
public:
    ParamStore<T> params;
    std::size_t d_z;

    explicit Discriminator(std::size_t dz, std::size_t hidden = 64) : d_z(dz), hidden_(hidden) {}

    void init(Rng& rng) {
        init_affine_params(params, "d1", d_z, hidden_, rng);
        init_affine_params(params, "d2", hidden_, 1, rng);
    }

    Tensor<T> forward(const Tensor<T>& z) {
        return a2_.forward(params, r1_.forward(a1_.forward(params, z)));
    }

    Tensor<T> backward(const Tensor<T>& dlogit) {
        return a1_.backward(params, r1_.backward(a2_.backward(params, dlogit)));
    }

private:
    std::size_t hidden_;
    AffineLayer<T> a1_{"d1"}, a2_{"d2"};
    ReluLayer<T> r1_;
};

template <typename T>
class AuxClassifier {
public:
    ParamStore<T> params;
    std::size_t d_z, num_classes;

    AuxClassifier(std::size_t dz, std::size_t k, std::size_t hidden = 64)
        : d_z(dz), num_classes(k), hidden_(hidden) {}

    // Unit-scale init rather than fan-in: fresh predictions are confidently
    // random (accuracy still ≈ 1/K) instead of uniform, so the generator's
    // entropy term has visible headroom to push against from step 0.
    void init(Rng& rng) {
        auto& w1 = params.add("c1.w", {d_z, hidden_});
        init_uniform(w1, rng, -1.0, 1.0);
        params.add("c1.b", {hidden_});
        auto& w2 = params.add("c2.w", {hidden_, num_classes});
        init_uniform(w2, rng, -1.0, 1.0);
        params.add("c2.b", {num_classes});
    }

    Tensor<T> forward(const Tensor<T>& z) {
        return a2_.forward(params, r1_.forward(a1_.forward(params, z)));
    }

    Tensor<T> backward(const Tensor<T>& dlogits) {
        return a1_.backward(params, r1_.backward(a2_.backward(params, dlogits)));
    }

    double accuracy(const Tensor<T>& z, const std::vector<std::size_t>& labels) {
        Tensor<T> logits = forward(z);
        std::size_t correct = 0;
        for (std::size_t r = 0; r < labels.size(); ++r)
            if (argmax_row(logits, r) == labels[r]) ++correct;
        return static_cast<double>(correct) / static_cast<double>(labels.size());
    }

private:
    std::size_t hidden_;
    AffineLayer<T> a1_{"c1"}, a2_{"c2"};
    ReluLayer<T> r1_;
};

// Discriminator loss mean softplus(−D(real)) + mean softplus(D(fake)),
// i.e. −log D(real) − log(1 − D(fake)) in logit form. Grads into D only.
template <typename T>
T discriminator_loss(Discriminator<T>& d, const Tensor<T>& z_real, const Tensor<T>& z_fake,
                     double* d_accuracy = nullptr) {
    const std::size_t B = z_real.shape[0];
    Tensor<T> lr = d.forward(z_real);
    Tensor<T> dlr(lr.shape);
    T loss = 0;
    std::size_t correct = 0;
    for (std::size_t i = 0; i < B; ++i) {
        loss += softplus(-lr(i, 0));
        dlr(i, 0) = -sigmoid(-lr(i, 0)) / static_cast<T>(B);
        if (lr(i, 0) > T(0)) ++correct;
    }
    d.backward(dlr);
    Tensor<T> lf = d.forward(z_fake);
    Tensor<T> dlf(lf.shape);
    const std::size_t Bf = z_fake.shape[0];
    for (std::size_t i = 0; i < Bf; ++i) {
        loss += softplus(lf(i, 0)) * static_cast<T>(B) / static_cast<T>(Bf);
        dlf(i, 0) = sigmoid(lf(i, 0)) / static_cast<T>(Bf);
        if (lf(i, 0) < T(0)) ++correct;
    }
    d.backward(dlf);
    if (d_accuracy)
        *d_accuracy = static_cast<double>(correct) / static_cast<double>(B + Bf);
    return loss / static_cast<T>(B);
}

// Non-saturating generator loss mean softplus(−D(G(ε))) plus α times the
// negated aux-classifier entropy on the generated latents. Zeroes G/D/C
// grads, accumulates fresh ones; only G should be stepped from these.
template <typename T>
T generator_loss(Generator<T>& g, Discriminator<T>& d, AuxClassifier<T>& c, const Tensor<T>& eps,
                 double alpha, double* aux_entropy = nullptr) {
    g.params.zero_grad();
    d.params.zero_grad();
    c.params.zero_grad();
    const std::size_t B = eps.shape[0];
    Tensor<T> z = g.forward(eps);
    Tensor<T> dl = d.forward(z);
    Tensor<T> ddl(dl.shape);
    T loss = 0;
    for (std::size_t i = 0; i < B; ++i) {
        loss += softplus(-dl(i, 0)) / static_cast<T>(B);
        ddl(i, 0) = -sigmoid(-dl(i, 0)) / static_cast<T>(B);
    }
    Tensor<T> dz = d.backward(ddl);

    Tensor<T> c_logits = c.forward(z);
    Tensor<T> dh;
    T h = entropy_of_logits(c_logits, &dh);
    if (aux_entropy) *aux_entropy = static_cast<double>(h);
    if (alpha != 0.0) {
        loss += static_cast<T>(alpha) * (-h);
        Tensor<T> dcl(dh.shape);
        for (std::size_t i = 0; i < dh.numel(); ++i)
            dcl.data[i] = static_cast<T>(-alpha) * dh.data[i];
        Tensor<T> dz2 = c.backward(dcl);
        for (std::size_t i = 0; i < dz.numel(); ++i) dz.data[i] += dz2.data[i];
    }
    g.backward(dz);
    return loss;
}

struct AdvStepRecord {
    std::size_t step;
    double d_loss, d_accuracy, c_loss, g_loss, aux_entropy;
};

struct AdversarialLog {
    std::vector<AdvStepRecord> records;
};

template <typename T>
struct PogEnsemble {
    Generator<T> generator;
    Discriminator<T> discriminator;
    AuxClassifier<T> aux;
    AdversarialLog log;
    double aux_accuracy_step0 = 0;  // fresh-random aux accuracy on IND latents
};

// Alternating D / C / G optimization over the frozen encoder's latent space.
// The aux classifier starts from fresh random parameters and is trained
// jointly with the adversarial pair, never beforehand.
template <typename T>
PogEnsemble<T> adversarial_train(Autoencoder<T>& ae, const std::vector<Encoded>& train_x,
                                 const std::vector<std::size_t>& train_y, std::size_t K,
                                 const PogConfig& cfg) {
    require(!train_x.empty(), "adversarial_train: empty training set");
    PogEnsemble<T> ens{Generator<T>(cfg.d_noise, cfg.d_z), Discriminator<T>(cfg.d_z),
                       AuxClassifier<T>(cfg.d_z, K), {}, 0.0};
    Rng init_rng = Rng::derive(cfg.seed, 21);
    Rng data_rng = Rng::derive(cfg.seed, 22);
    Rng noise_rng = Rng::derive(cfg.seed, 23);
    ens.generator.init(init_rng);
    ens.discriminator.init(init_rng);
    ens.aux.init(init_rng);

    Adam<T> opt_d(cfg.adv_lr), opt_c(cfg.adv_lr), opt_g(cfg.adv_lr);
    std::vector<std::size_t> order(train_x.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    data_rng.shuffle(order);
    std::size_t ptr = 0;
    auto next_real = [&](std::size_t n) {
        std::vector<std::size_t> idx;
        for (std::size_t i = 0; i < n; ++i) {
            idx.push_back(order[ptr]);
            ptr = (ptr + 1) % order.size();
        }
        return idx;
    };
    auto sample_noise = [&](std::size_t n) {
        Tensor<T> eps({n, cfg.d_noise});
        for (auto& v : eps.data) v = static_cast<T>(noise_rng.normal());
        return eps;
    };

    {
        // fresh-parameter sanity probe on the first real batch
        auto idx = next_real(std::min<std::size_t>(cfg.adv_batch * 4, train_x.size()));
        Batch b = make_batch(train_x, idx);
        std::vector<std::size_t> labels;
        for (auto i : idx) labels.push_back(train_y[i]);
        ens.aux_accuracy_step0 = ens.aux.accuracy(ae.encode(b), labels);
        ptr = 0;
    }

    for (std::size_t step = 0; step < cfg.adv_steps; ++step) {
        auto idx = next_real(cfg.adv_batch);
        Batch rb = make_batch(train_x, idx);
        std::vector<std::size_t> labels;
        for (auto i : idx) labels.push_back(train_y[i]);
        Tensor<T> z_real = ae.encode(rb);

        // D step
        Tensor<T> z_fake = ens.generator.forward(sample_noise(cfg.adv_batch));
        ens.discriminator.params.zero_grad();
        double d_acc = 0;
        T d_loss = discriminator_loss(ens.discriminator, z_real, z_fake, &d_acc);
        opt_d.step(ens.discriminator.params);

        // C step: cross-entropy on (enc(x), intent) from jointly evolving params
        ens.aux.params.zero_grad();
        Tensor<T> c_logits = ens.aux.forward(z_real);
        Tensor<T> dcl;
        T c_loss = cross_entropy(c_logits, labels, &dcl);
        ens.aux.backward(dcl);
        opt_c.step(ens.aux.params);

        // G step
        double aux_h = 0;
        T g_loss = generator_loss(ens.generator, ens.discriminator, ens.aux,
                                  sample_noise(cfg.adv_batch), cfg.alpha, &aux_h);
        opt_g.step(ens.generator.params);

        require(std::isfinite(static_cast<double>(d_loss)) &&
                    std::isfinite(static_cast<double>(c_loss)) &&
                    std::isfinite(static_cast<double>(g_loss)),
                "adversarial_train: non-finite loss at step " + std::to_string(step));
        ens.log.records.push_back({step, static_cast<double>(d_loss), d_acc,
                                   static_cast<double>(c_loss), static_cast<double>(g_loss),
                                   aux_h});
    }
    return ens;
}

// Sample n pseudo-OOD token-id sequences from the generator + decoder.
template <typename T>
std::vector<std::vector<std::size_t>> generate(Generator<T>& g, Autoencoder<T>& ae, std::size_t n,
                                               Rng& rng) {
    std::vector<std::vector<std::size_t>> out;
    std::size_t chunk = 64;
    while (out.size() < n) {
        std::size_t b = std::min(chunk, n - out.size());
        Tensor<T> eps({b, g.d_noise});
        for (auto& v : eps.data) v = static_cast<T>(rng.normal());
        for (auto& seq : ae.decode_ids(g.forward(eps))) out.push_back(std::move(seq));
    }
    return out;
}

// ---- post-filtering -------------------------------------------------------

struct RejectionReport {
    std::size_t exact_duplicate = 0;   // rule (a)
    std::size_t jaccard_overlap = 0;   // rule (b)
    std::size_t high_confidence = 0;   // rule (c)
    std::size_t kept = 0;
};

struct FilterResult {
    std::vector<std::vector<std::string>> kept;
    RejectionReport report;
};

inline std::vector<std::string> sorted_unique(const std::vector<std::string>& tokens) {
    std::vector<std::string> s(tokens);
    std::sort(s.begin(), s.end());
    s.erase(std::unique(s.begin(), s.end()), s.end());
    return s;
}

inline double jaccard(const std::vector<std::string>& a_sorted,
                      const std::vector<std::string>& b_sorted) {
    std::size_t inter = 0, i = 0, j = 0;
    while (i < a_sorted.size() && j < b_sorted.size()) {
        int cmp = a_sorted[i].compare(b_sorted[j]);
        if (cmp == 0) {
            ++inter;
            ++i;
            ++j;
        } else if (cmp < 0) ++i;
        else ++j;
    }
    std::size_t uni = a_sorted.size() + b_sorted.size() - inter;
    return uni == 0 ? 0.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

// Reject candidates that (a) exactly match an IND training utterance,
// (b) have token-set Jaccard >= threshold with one, or (c) score classifier
// max-softmax confidence >= threshold. Rules checked in that order.
inline FilterResult post_filter(
    const std::vector<std::vector<std::string>>& candidates,
    const std::vector<std::vector<std::string>>& ind_train_tokens,
    const std::function<double(const std::vector<std::string>&)>& confidence,
    double jaccard_threshold = 0.8, double confidence_threshold = 0.9) {
    std::unordered_set<std::string> exact;
    std::vector<std::vector<std::string>> ind_sets;
    ind_sets.reserve(ind_train_tokens.size());
    auto join = [](const std::vector<std::string>& toks) {
        std::string s;
        for (const auto& t : toks) {
            s += t;
            s.push_back('\x1f');
        }
        return s;
    };
    for (const auto& toks : ind_train_tokens) {
        exact.insert(join(toks));
        ind_sets.push_back(sorted_unique(toks));
    }

    FilterResult result;
    for (const auto& cand : candidates) {
        if (exact.count(join(cand))) {
            ++result.report.exact_duplicate;
            continue;
        }
        auto cset = sorted_unique(cand);
        bool overlapping = false;
        for (const auto& iset : ind_sets) {
            double lo = static_cast<double>(std::min(cset.size(), iset.size()));
            double hi = static_cast<double>(std::max(cset.size(), iset.size()));
            if (hi == 0.0 || lo / hi < jaccard_threshold) continue;  // size bound prune
            if (jaccard(cset, iset) >= jaccard_threshold) {
                overlapping = true;
                break;
            }
        }
        if (overlapping) {
            ++result.report.jaccard_overlap;
            continue;
        }
        if (confidence && confidence(cand) >= confidence_threshold) {
            ++result.report.high_confidence;
            continue;
        }
        result.kept.push_back(cand);
        ++result.report.kept;
    }
    return result;
}

}  // namespace ood
