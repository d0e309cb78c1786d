#include <catch2/catch_amalgamated.hpp>

#include "ood/pog.hpp"

using namespace ood;

namespace {

PogConfig tiny_cfg(DecoderKind dec = DecoderKind::Mlp) {
    PogConfig cfg;
    cfg.d_z = 12;
    cfg.d_noise = 8;
    cfg.ae_emb_dim = 12;
    cfg.dec_hidden = 16;
    cfg.pos_dim = 6;
    cfg.decoder = dec;
    cfg.ae_epochs = 5;
    cfg.ae_batch = 8;
    cfg.adv_batch = 16;
    cfg.seed = 7;
    return cfg;
}

Encoded enc_of(std::vector<std::size_t> ids, std::size_t max_len) {
    Encoded e;
    e.length = ids.size();
    ids.resize(max_len, kPadId);
    e.ids = std::move(ids);
    return e;
}

// small fixed corpus over vocab ids [2, V)
std::vector<Encoded> toy_corpus(std::size_t n, std::size_t V, std::size_t max_len,
                                std::uint64_t seed) {
    Rng rng(seed);
    std::vector<Encoded> out;
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t len = 2 + rng.index(max_len - 1);
        std::vector<std::size_t> ids;
        for (std::size_t t = 0; t < len; ++t) ids.push_back(2 + rng.index(V - 2));
        out.push_back(enc_of(ids, max_len));
    }
    return out;
}

}  // namespace

TEST_CASE("pog config validation") {
    PogConfig cfg = tiny_cfg();
    cfg.d_z = 0;
    CHECK_THROWS_AS(cfg.validate(), Error);
    cfg = tiny_cfg();
    cfg.alpha = -1.0;
    CHECK_THROWS_AS(cfg.validate(), Error);
}

TEST_CASE("autoencoder memorizes a small corpus") {
    const std::size_t V = 15, L = 5;
    auto xs = toy_corpus(10, V, L, 3);
    PogConfig cfg = tiny_cfg();
    cfg.ae_epochs = 400;
    cfg.ae_lr = 3e-3;
    Autoencoder<float> ae(cfg, V, L);
    Rng rng(1);
    auto result = train_autoencoder(ae, xs, rng);
    CHECK(result.final_loss < 0.5);
    CHECK(ae.token_reconstruction_accuracy(xs) >= 0.9);
}

TEST_CASE("autoencoder training is seed-deterministic") {
    const std::size_t V = 15, L = 5;
    auto xs = toy_corpus(12, V, L, 4);
    auto run_once = [&] {
        Autoencoder<float> ae(tiny_cfg(), V, L);
        Rng rng(2);
        return train_autoencoder(ae, xs, rng).final_loss;
    };
    CHECK(run_once() == run_once());
}

TEST_CASE("autoencoder reconstruction gradients") {
    const std::size_t V = 9, L = 4;
    auto xs = toy_corpus(3, V, L, 5);
    Batch b = make_batch(xs, {0, 1, 2});
    for (DecoderKind dec : {DecoderKind::Mlp, DecoderKind::Gru}) {
        PogConfig cfg = tiny_cfg(dec);
        cfg.d_z = 6;
        cfg.ae_emb_dim = 6;
        cfg.dec_hidden = 7;
        cfg.pos_dim = 4;
        Autoencoder<double> ae(cfg, V, L);
        Rng rng(6);
        ae.init(rng);
        auto f = [&](ParamStore<double>& ps, bool with_grad) {
            (void)ps;
            return static_cast<double>(ae.reconstruction_loss(b, with_grad));
        };
        CHECK(finite_diff_check(f, ae.params) <= 1e-4);
    }
}

TEST_CASE("discriminator loss gradients") {
    const std::size_t dz = 5, B = 4;
    Discriminator<double> d(dz, 7);
    Rng rng(8);
    d.init(rng);
    Tensor<double> z_real({B, dz}), z_fake({B, dz});
    for (auto& v : z_real.data) v = rng.uniform(-1, 1);
    for (auto& v : z_fake.data) v = rng.uniform(-1, 1);
    auto f = [&](ParamStore<double>& ps, bool with_grad) {
        (void)ps;
        (void)with_grad;
        return static_cast<double>(discriminator_loss(d, z_real, z_fake));
    };
    CHECK(finite_diff_check(f, d.params) <= 1e-4);
}

TEST_CASE("generator loss gradients through D and the aux classifier") {
    const std::size_t dz = 5, dn = 4, K = 3, B = 4;
    Generator<double> g(dn, dz, 6);
    Discriminator<double> d(dz, 6);
    AuxClassifier<double> c(dz, K, 6);
    Rng rng(9);
    g.init(rng);
    d.init(rng);
    c.init(rng);
    Tensor<double> eps({B, dn});
    for (auto& v : eps.data) v = rng.normal();

    SECTION("generator parameters, alpha 1") {
        auto f = [&](ParamStore<double>& ps, bool with_grad) {
            (void)ps;
            (void)with_grad;
            return static_cast<double>(generator_loss(g, d, c, eps, 1.0));
        };
        CHECK(finite_diff_check(f, g.params) <= 1e-4);
    }
    SECTION("aux parameters see the entropy term") {
        auto f = [&](ParamStore<double>& ps, bool with_grad) {
            (void)ps;
            (void)with_grad;
            return static_cast<double>(generator_loss(g, d, c, eps, 1.0));
        };
        CHECK(finite_diff_check(f, c.params) <= 1e-4);
    }
    SECTION("alpha 0 drops the entropy term entirely") {
        double h = 0;
        double loss = generator_loss(g, d, c, eps, 0.0, &h);
        for (const auto& e : c.params.entries)
            for (double v : e.grad.data) CHECK(v == 0.0);
        // loss is the pure adversarial term
        Tensor<double> z = g.forward(eps);
        Tensor<double> dl = d.forward(z);
        double expect = 0;
        for (std::size_t i = 0; i < B; ++i) expect += softplus(-dl(i, 0)) / B;
        CHECK(loss == Catch::Approx(expect).margin(1e-12));
        CHECK(h > 0.0);
    }
}

TEST_CASE("adversarial training on a toy latent space") {
    const std::size_t V = 15, L = 5, K = 4;
    auto xs = toy_corpus(40, V, L, 10);
    std::vector<std::size_t> ys;
    for (std::size_t i = 0; i < xs.size(); ++i) ys.push_back(i % K);

    PogConfig cfg = tiny_cfg();
    cfg.ae_epochs = 60;
    cfg.adv_steps = 500;
    Autoencoder<float> ae(cfg, V, L);
    Rng rng(11);
    train_autoencoder(ae, xs, rng);
    auto ens = adversarial_train(ae, xs, ys, K, cfg);

    REQUIRE(ens.log.records.size() == cfg.adv_steps);
    for (std::size_t i = 0; i < ens.log.records.size(); ++i)
        CHECK(ens.log.records[i].step == i);

    // fresh aux params sit near chance, far below a trained classifier
    CHECK(ens.aux_accuracy_step0 <= 0.75);

    // joint aux training drives its loss down
    auto mean_over = [&](std::size_t from, std::size_t to, auto field) {
        double s = 0;
        for (std::size_t i = from; i < to; ++i) s += field(ens.log.records[i]);
        return s / static_cast<double>(to - from);
    };
    double c0 = mean_over(0, 50, [](const AdvStepRecord& r) { return r.c_loss; });
    double c1 = mean_over(450, 500, [](const AdvStepRecord& r) { return r.c_loss; });
    CHECK(c1 < c0);

    // the generator keeps the discriminator off the perfect-separation regime
    double d1 = mean_over(450, 500, [](const AdvStepRecord& r) { return r.d_accuracy; });
    CHECK(d1 <= 0.95);

    // entropy regularization pushes generated latents toward uncertainty
    double h0 = ens.log.records.front().aux_entropy;
    double h1 = mean_over(450, 500, [](const AdvStepRecord& r) { return r.aux_entropy; });
    CHECK(h1 > h0);
    CHECK(h1 <= std::log(static_cast<double>(K)) + 1e-9);
}

TEST_CASE("adversarial training is seed-deterministic") {
    const std::size_t V = 12, L = 4, K = 2;
    auto xs = toy_corpus(20, V, L, 12);
    std::vector<std::size_t> ys;
    for (std::size_t i = 0; i < xs.size(); ++i) ys.push_back(i % K);
    PogConfig cfg = tiny_cfg();
    cfg.adv_steps = 30;
    auto run_once = [&] {
        Autoencoder<float> ae(cfg, V, L);
        Rng rng(13);
        train_autoencoder(ae, xs, rng);
        return adversarial_train(ae, xs, ys, K, cfg);
    };
    auto a = run_once();
    auto b = run_once();
    REQUIRE(a.log.records.size() == b.log.records.size());
    for (std::size_t i = 0; i < a.log.records.size(); ++i) {
        CHECK(a.log.records[i].d_loss == b.log.records[i].d_loss);
        CHECK(a.log.records[i].g_loss == b.log.records[i].g_loss);
        CHECK(a.log.records[i].c_loss == b.log.records[i].c_loss);
    }
}

TEST_CASE("generate contract") {
    const std::size_t V = 12, L = 4;
    auto xs = toy_corpus(15, V, L, 14);
    PogConfig cfg = tiny_cfg();
    cfg.ae_epochs = 20;
    Autoencoder<float> ae(cfg, V, L);
    Rng ae_rng(15);
    train_autoencoder(ae, xs, ae_rng);
    Generator<float> g(cfg.d_noise, cfg.d_z);
    Rng g_rng(16);
    g.init(g_rng);

    Rng s1(17);
    auto seqs = generate(g, ae, 5, s1);
    REQUIRE(seqs.size() == 5);
    for (const auto& s : seqs) {
        CHECK(!s.empty());
        CHECK(s.size() <= L);
        for (auto id : s) CHECK(id < V);
    }
    Rng s2(17);
    CHECK(generate(g, ae, 5, s2) == seqs);
    Rng s3(17);
    CHECK(generate(g, ae, 0, s3).empty());
    // big n spans several chunks
    Rng s4(18);
    CHECK(generate(g, ae, 150, s4).size() == 150);
}

TEST_CASE("post_filter rules") {
    using Toks = std::vector<std::string>;
    std::vector<Toks> ind = {
        {"check", "my", "bank", "balance", "please"},
        {"a0", "a1", "a2", "a3", "a4", "a5", "a6", "a7", "a8", "a9"},
    };
    auto low_conf = [](const Toks&) { return 0.1; };

    SECTION("exact duplicates rejected first") {
        auto r = post_filter({{"check", "my", "bank", "balance", "please"}}, ind, low_conf);
        CHECK(r.report.exact_duplicate == 1);
        CHECK(r.kept.empty());
    }
    SECTION("token-set jaccard at 9/11 rejected, 8/12 kept") {
        Toks near = {"a0", "a1", "a2", "a3", "a4", "a5", "a6", "a7", "a8", "b0"};
        Toks far = {"a0", "a1", "a2", "a3", "a4", "a5", "a6", "a7", "b0", "b1"};
        auto r = post_filter({near, far}, ind, low_conf);
        CHECK(r.report.jaccard_overlap == 1);
        CHECK(r.report.kept == 1);
        REQUIRE(r.kept.size() == 1);
        CHECK(r.kept[0] == far);
    }
    SECTION("duplicate tokens count once in the set comparison") {
        Toks repeated = {"a0", "a0", "a0", "a1", "a2", "a3", "a4",
                         "a5", "a6", "a7", "a8", "b0"};
        auto r = post_filter({repeated}, ind, low_conf);
        CHECK(r.report.jaccard_overlap == 1);
    }
    SECTION("confident candidates rejected, uncertain kept") {
        auto conf = [](const Toks& t) { return t[0] == "easy" ? 0.95 : 1.0 / 150.0; };
        auto r = post_filter({{"easy", "one"}, {"gibberish", "tokens"}}, ind, conf);
        CHECK(r.report.high_confidence == 1);
        CHECK(r.report.kept == 1);
        CHECK(r.kept[0] == Toks{"gibberish", "tokens"});
    }
    SECTION("filter is idempotent on its own output") {
        std::vector<Toks> cands = {{"x", "y"}, {"check", "my", "bank", "balance", "please"},
                                   {"z", "w", "v"}};
        auto once = post_filter(cands, ind, low_conf);
        auto twice = post_filter(once.kept, ind, low_conf);
        CHECK(twice.kept == once.kept);
        CHECK(twice.report.kept == once.report.kept);
        CHECK(twice.report.exact_duplicate == 0);
    }
    SECTION("planted IND duplicates are all rejected") {
        std::vector<Toks> many_ind;
        for (int i = 0; i < 60; ++i)
            many_ind.push_back({"u" + std::to_string(i), "v" + std::to_string(i), "w"});
        std::vector<Toks> cands;
        for (int i = 0; i < 50; ++i) cands.push_back(many_ind[i]);
        for (int i = 0; i < 10; ++i)
            cands.push_back({"novel" + std::to_string(i), "stuff" + std::to_string(i)});
        auto r = post_filter(cands, many_ind, low_conf);
        CHECK(r.report.exact_duplicate == 50);
        CHECK(r.report.kept == 10);
        for (const auto& k : r.kept)
            CHECK(k[0].rfind("novel", 0) == 0);
    }
    SECTION("custom thresholds are honored") {
        Toks half = {"a0", "a1", "a2", "a3", "a4", "b0", "b1", "b2", "b3", "b4"};
        auto strict = post_filter({half}, ind, low_conf, 0.3, 0.9);
        CHECK(strict.report.jaccard_overlap == 1);
        auto loose = post_filter({half}, ind, low_conf, 0.8, 0.9);
        CHECK(loose.report.kept == 1);
    }
}
