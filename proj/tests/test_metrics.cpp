#include <catch2/catch_amalgamated.hpp>

#include "ood/metrics.hpp"
#include "ood/rng.hpp"
#include "oracles.hpp"

using namespace ood;

namespace {

// mixes continuous scores with a coarse grid so ties actually occur
std::vector<double> random_scores(Rng& rng, std::size_t n) {
    std::vector<double> out;
    for (std::size_t i = 0; i < n; ++i) {
        if (rng.uniform() < 0.5) out.push_back(rng.uniform());
        else out.push_back(std::floor(rng.uniform() * 5.0) / 5.0);
    }
    return out;
}

}  // namespace

TEST_CASE("auroc hand cases") {
    CHECK(auroc({0.8, 0.9}, {0.1, 0.2}) == 1.0);
    CHECK(auroc({0.3, 0.7}, {0.3, 0.7}) == 0.5);
    CHECK(auroc({0.4, 0.3}, {0.1, 0.35}) == Catch::Approx(0.75).epsilon(1e-12));
    CHECK_THROWS_AS(auroc({}, {0.5}), Error);
}

TEST_CASE("auroc complement identity and transform invariance") {
    Rng rng(101);
    for (int trial = 0; trial < 50; ++trial) {
        auto pos = random_scores(rng, 1 + rng.index(30));
        auto neg = random_scores(rng, 1 + rng.index(30));
        double a = auroc(pos, neg);
        CHECK(a + auroc(neg, pos) == 1.0);

        auto squash = [](std::vector<double> v) {
            for (auto& x : v) x = std::tanh(3.0 * x) + 2.0;
            return v;
        };
        CHECK(auroc(squash(pos), squash(neg)) == Catch::Approx(a).margin(1e-12));
    }
}

TEST_CASE("auroc matches exhaustive pairwise oracle") {
    Rng rng(202);
    for (int trial = 0; trial < 150; ++trial) {
        auto pos = random_scores(rng, 1 + rng.index(50));
        auto neg = random_scores(rng, 1 + rng.index(50));
        CHECK(auroc(pos, neg) ==
              Catch::Approx(oracle::auroc_pairwise(pos, neg)).margin(1e-12));
    }
}

TEST_CASE("average precision hand cases") {
    CHECK(average_precision({0.8, 0.9}, {0.1, 0.2}) == 1.0);
    // all scores identical -> one tie block -> AP = prevalence
    CHECK(average_precision({0.5, 0.5}, {0.5, 0.5, 0.5, 0.5, 0.5, 0.5}) ==
          Catch::Approx(0.25).margin(1e-15));
    CHECK(average_precision({0.9, 0.2}, {0.5}) == Catch::Approx(5.0 / 6.0).margin(1e-15));
}

TEST_CASE("average precision matches per-positive oracle") {
    Rng rng(303);
    for (int trial = 0; trial < 150; ++trial) {
        auto pos = random_scores(rng, 1 + rng.index(50));
        auto neg = random_scores(rng, 1 + rng.index(50));
        CHECK(average_precision(pos, neg) ==
              Catch::Approx(oracle::average_precision_per_positive(pos, neg)).margin(1e-12));
    }
}

TEST_CASE("fpr_at_tpr hand cases") {
    CHECK(fpr_at_tpr({0.8, 0.9}, {0.1, 0.2}, 0.95) == 0.0);
    CHECK(fpr_at_tpr({0.8, 0.9}, {0.1, 0.2}, 0.90) == 0.0);
    CHECK(fpr_at_tpr({0.9, 0.8, 0.2}, {0.7, 0.1}, 0.90) == 0.5);
    CHECK(fpr_at_tpr({0.9, 0.8, 0.2}, {0.7, 0.1}, 0.60) == 0.0);
}

TEST_CASE("fpr_at_tpr matches enumeration oracle; level ordering") {
    Rng rng(404);
    for (int trial = 0; trial < 150; ++trial) {
        auto pos = random_scores(rng, 1 + rng.index(50));
        auto neg = random_scores(rng, 1 + rng.index(50));
        for (double level : {0.95, 0.90, 0.60}) {
            CHECK(fpr_at_tpr(pos, neg, level) == oracle::fpr_at_tpr_enumerate(pos, neg, level));
        }
        CHECK(fpr_at_tpr(pos, neg, 0.95) >= fpr_at_tpr(pos, neg, 0.90));
    }
}

TEST_CASE("metric_block composition") {
    SECTION("perfect separation") {
        ScoreSet s;
        s.ind_scores = {0.99, 0.95, 0.9};   // confident IND
        s.ood_scores = {0.2, 0.3};          // low-confidence OOD
        MetricBlock m = metric_block(s);
        CHECK(m.auroc == 1.0);
        CHECK(m.aupr_ood_positive == 1.0);
        CHECK(m.aupr_ind_positive == 1.0);
        CHECK(m.fpr_at_95tpr == 0.0);
        CHECK(m.fpr_at_90tpr == 0.0);
    }
    SECTION("identical score lists") {
        ScoreSet s;
        s.ind_scores = {0.5, 0.5, 0.5};
        s.ood_scores = {0.5, 0.5};
        MetricBlock m = metric_block(s);
        CHECK(m.auroc == 0.5);
        CHECK(m.aupr_ood_positive == Catch::Approx(2.0 / 5.0).margin(1e-15));
        CHECK(m.aupr_ind_positive == Catch::Approx(3.0 / 5.0).margin(1e-15));
        CHECK(m.fpr_at_95tpr == 1.0);
        CHECK(m.fpr_at_90tpr == 1.0);
    }
    SECTION("random scores land near chance") {
        Rng rng(77);
        ScoreSet s;
        for (int i = 0; i < 50; ++i) s.ind_scores.push_back(rng.uniform());
        for (int i = 0; i < 50; ++i) s.ood_scores.push_back(rng.uniform());
        MetricBlock m = metric_block(s);
        CHECK(m.auroc > 0.3);
        CHECK(m.auroc < 0.7);
        CHECK(m.fpr_at_95tpr >= m.fpr_at_90tpr);
    }
    SECTION("empty list rejected") {
        ScoreSet s;
        s.ind_scores = {0.5};
        CHECK_THROWS_AS(metric_block(s), Error);
    }
}

TEST_CASE("metric json reports x100 two-decimal values plus raw") {
    MetricBlock m;
    m.auroc = 0.928611;
    m.aupr_ood_positive = 0.5;
    m.aupr_ind_positive = 0.9824;
    m.fpr_at_95tpr = 0.397249;
    m.fpr_at_90tpr = 0.2176;
    auto j = metric_block_json(m);
    CHECK(j["auroc"].get<double>() == 92.86);
    CHECK(j["fpr_at_95tpr"].get<double>() == 39.72);
    CHECK(j["raw"]["auroc"].get<double>() == 0.928611);
}
