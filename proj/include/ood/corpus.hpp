#pragma once

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "ood/common.hpp"
#include "ood/layers.hpp"

namespace ood {

constexpr int kOosLabel = -1;  // OOS marker, deliberately outside {0..K−1}

struct Utterance {
    std::string text;
    std::vector<std::string> tokens;
};

struct LabeledExample {
    Utterance utterance;
    int label = kOosLabel;  // intent id < K, or kOosLabel
};

// Lowercase, split on whitespace, punctuation as standalone tokens,
// apostrophe suffixes ('s n't 're 'm 'll 've 'd) split off.
inline std::vector<std::string> tokenize(const std::string& text) {
    static const std::vector<std::string> kSuffixes = {"'s", "'re", "'m", "'ll", "'ve", "'d"};
    std::string lower;
    lower.reserve(text.size());
    for (unsigned char c : text) lower.push_back(static_cast<char>(std::tolower(c)));

    std::vector<std::string> out;
    std::string buf;
    auto flush = [&] {
        if (!buf.empty()) {
            out.push_back(buf);
            buf.clear();
        }
    };
    auto is_word_char = [](unsigned char c) { return std::isalnum(c) || c >= 0x80; };

    std::size_t i = 0;
    while (i < lower.size()) {
        unsigned char c = lower[i];
        if (std::isspace(c)) {
            flush();
            ++i;
        } else if (c == '\'') {
            // "n't": apostrophe preceded by n, followed by t at a word boundary
            if (!buf.empty() && buf.back() == 'n' && i + 1 < lower.size() && lower[i + 1] == 't' &&
                (i + 2 >= lower.size() || !is_word_char(lower[i + 2]))) {
                buf.pop_back();
                flush();
                out.push_back("n't");
                i += 2;
                continue;
            }
            bool matched = false;
            for (const auto& suf : kSuffixes) {
                if (lower.compare(i, suf.size(), suf) == 0 &&
                    (i + suf.size() >= lower.size() || !is_word_char(lower[i + suf.size()]))) {
                    flush();
                    out.push_back(suf);
                    i += suf.size();
                    matched = true;
                    break;
                }
            }
            if (!matched) {
                flush();
                out.push_back("'");
                ++i;
            }
        } else if (is_word_char(c)) {
            buf.push_back(static_cast<char>(c));
            ++i;
        } else {
            flush();
            out.push_back(std::string(1, static_cast<char>(c)));
            ++i;
        }
    }
    flush();
    return out;
}

struct Vocabulary {
    std::unordered_map<std::string, std::size_t> token_to_id;
    std::vector<std::string> id_to_token;  // [0]=PAD, [1]=UNK

    std::size_t size() const { return id_to_token.size(); }

    std::size_t id_of(const std::string& tok) const {
        auto it = token_to_id.find(tok);
        return it == token_to_id.end() ? kUnkId : it->second;
    }

    void save(const std::string& path) const {
        std::ofstream out(path);
        require(out.good(), "cannot write vocabulary: " + path);
        for (std::size_t i = 0; i < id_to_token.size(); ++i)
            out << id_to_token[i] << "\t" << i << "\n";
    }

    static Vocabulary load(const std::string& path) {
        std::ifstream in(path);
        require(in.good(), "cannot read vocabulary: " + path);
        Vocabulary v;
        std::string line;
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            auto tab = line.find('\t');
            require(tab != std::string::npos, "vocabulary: malformed line");
            std::string tok = line.substr(0, tab);
            std::size_t id = std::stoul(line.substr(tab + 1));
            require(id == v.id_to_token.size(), "vocabulary: ids not consecutive");
            v.id_to_token.push_back(tok);
            v.token_to_id[tok] = id;
        }
        return v;
    }
};

// Ids 2.. assigned in descending-frequency order, ties lexicographic.
// Built from the IND training split only.
inline Vocabulary build_vocab(const std::vector<LabeledExample>& examples,
                              std::size_t min_freq = 1) {
    require(!examples.empty(), "build_vocab: empty example list");
    std::map<std::string, std::size_t> freq;
    for (const auto& ex : examples)
        for (const auto& tok : ex.utterance.tokens) ++freq[tok];
    std::vector<std::pair<std::string, std::size_t>> items(freq.begin(), freq.end());
    std::stable_sort(items.begin(), items.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });
    Vocabulary v;
    v.id_to_token = {"<pad>", "<unk>"};
    v.token_to_id = {{"<pad>", kPadId}, {"<unk>", kUnkId}};
    for (const auto& [tok, n] : items) {
        if (n < min_freq) continue;
        if (v.token_to_id.count(tok)) continue;  // corpus token colliding with a special name
        v.token_to_id[tok] = v.id_to_token.size();
        v.id_to_token.push_back(tok);
    }
    return v;
}

struct Encoded {
    std::vector<std::size_t> ids;  // exactly max_len, right-padded with PAD
    std::size_t length = 0;        // true (pre-padding) length, capped at max_len
};

inline Encoded encode(const std::vector<std::string>& tokens, const Vocabulary& vocab,
                      std::size_t max_len) {
    require(max_len >= 1, "encode: max_len must be >= 1");
    Encoded e;
    e.ids.assign(max_len, kPadId);
    e.length = std::min(tokens.size(), max_len);
    for (std::size_t i = 0; i < e.length; ++i) e.ids[i] = vocab.id_of(tokens[i]);
    return e;
}

struct DatasetBundle {
    std::vector<LabeledExample> train_ind, val_ind, test_ind;
    std::vector<LabeledExample> train_oos, val_oos, test_oos;
    std::vector<std::string> label_names;  // intent id -> name
    std::size_t K = 0;
};

// CLINC150 data_full.json layout: object with keys train/val/test/
// oos_train/oos_val/oos_test, each a list of [utterance, label] pairs.
inline DatasetBundle load_clinc(const std::string& path) {
    std::ifstream in(path);
    require(in.good(), "cannot open dataset: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        throw Error(std::string("dataset is not valid JSON: ") + e.what());
    }
    require(j.is_object(), "dataset root must be a JSON object");

    auto read_split = [&](const std::string& key) {
        require(j.contains(key), "dataset missing key: " + key);
        require(j[key].is_array(), "dataset key is not a list: " + key);
        std::vector<std::pair<std::string, std::string>> pairs;
        for (const auto& item : j[key]) {
            require(item.is_array() && item.size() == 2 && item[0].is_string() &&
                        item[1].is_string(),
                    "malformed [utterance, label] pair in split: " + key);
            pairs.emplace_back(item[0].get<std::string>(), item[1].get<std::string>());
        }
        return pairs;
    };

    auto train_p = read_split("train");
    auto val_p = read_split("val");
    auto test_p = read_split("test");
    auto oos_train_p = read_split("oos_train");
    auto oos_val_p = read_split("oos_val");
    auto oos_test_p = read_split("oos_test");
    require(!train_p.empty(), "empty split: train");
    require(!oos_train_p.empty(), "empty split: oos_train");

    DatasetBundle b;
    std::map<std::string, int> label_ids;
    for (const auto& [text, label] : train_p) label_ids.emplace(label, 0);
    int next = 0;
    for (auto& [name, id] : label_ids) id = next++;
    b.K = label_ids.size();
    b.label_names.resize(b.K);
    for (const auto& [name, id] : label_ids) b.label_names[id] = name;

    auto to_ind = [&](const std::vector<std::pair<std::string, std::string>>& pairs,
                      const std::string& key) {
        std::vector<LabeledExample> out;
        for (const auto& [text, label] : pairs) {
            auto it = label_ids.find(label);
            require(it != label_ids.end(),
                    "label \"" + label + "\" in split " + key + " absent from train");
            out.push_back({{text, tokenize(text)}, it->second});
        }
        return out;
    };
    auto to_oos = [&](const std::vector<std::pair<std::string, std::string>>& pairs) {
        std::vector<LabeledExample> out;
        for (const auto& [text, label] : pairs) out.push_back({{text, tokenize(text)}, kOosLabel});
        return out;
    };

    b.train_ind = to_ind(train_p, "train");
    b.val_ind = to_ind(val_p, "val");
    b.test_ind = to_ind(test_p, "test");
    b.train_oos = to_oos(oos_train_p);
    b.val_oos = to_oos(oos_val_p);
    b.test_oos = to_oos(oos_test_p);
    return b;
}

}  // namespace ood
