#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "ood/rng.hpp"

namespace ood {

struct SynthConfig {
    std::size_t num_classes = 20;
    std::size_t train_per_class = 40;
    std::size_t val_per_class = 8;
    std::size_t test_per_class = 12;
    std::size_t oos_train = 60;
    std::size_t oos_val = 60;
    std::size_t oos_test = 200;
    std::size_t words_per_class = 6;
    std::size_t filler_words = 40;
    std::size_t oos_words = 60;
    std::uint64_t seed = 7;
};

// CLINC-shaped synthetic intent corpus: each class owns a small dedicated
// vocabulary mixed with shared filler; OOS utterances mix filler with words
// never seen in IND training (so they encode to UNK downstream).
inline nlohmann::ordered_json make_synthetic_clinc(const SynthConfig& cfg) {
    Rng rng(cfg.seed);
    auto class_word = [&](std::size_t c, std::size_t i) {
        return "intent" + std::to_string(c) + "word" + std::to_string(i);
    };
    auto filler_word = [&](std::size_t i) { return "filler" + std::to_string(i); };
    auto oos_word = [&](std::size_t i) { return "novel" + std::to_string(i); };

    auto make_ind = [&](std::size_t c) {
        std::size_t len = 5 + rng.index(8);
        std::string text;
        for (std::size_t t = 0; t < len; ++t) {
            if (t) text += " ";
            if (rng.uniform() < 0.6) text += class_word(c, rng.index(cfg.words_per_class));
            else text += filler_word(rng.index(cfg.filler_words));
        }
        return text;
    };
    auto make_oos = [&]() {
        std::size_t len = 5 + rng.index(8);
        std::string text;
        for (std::size_t t = 0; t < len; ++t) {
            if (t) text += " ";
            if (rng.uniform() < 0.5) text += oos_word(rng.index(cfg.oos_words));
            else text += filler_word(rng.index(cfg.filler_words));
        }
        return text;
    };

    nlohmann::ordered_json j;
    for (const char* split : {"train", "val", "test"}) {
        auto arr = nlohmann::ordered_json::array();
        std::size_t per = split == std::string("train")   ? cfg.train_per_class
                          : split == std::string("val") ? cfg.val_per_class
                                                        : cfg.test_per_class;
        for (std::size_t c = 0; c < cfg.num_classes; ++c)
            for (std::size_t i = 0; i < per; ++i)
                arr.push_back({make_ind(c), "intent_" + std::to_string(c)});
        j[split] = std::move(arr);
    }
    for (const auto& [split, n] : std::vector<std::pair<std::string, std::size_t>>{
             {"oos_train", cfg.oos_train}, {"oos_val", cfg.oos_val}, {"oos_test", cfg.oos_test}}) {
        auto arr = nlohmann::ordered_json::array();
        for (std::size_t i = 0; i < n; ++i) arr.push_back({make_oos(), "oos"});
        j[split] = std::move(arr);
    }
    return j;
}

}  // namespace ood
