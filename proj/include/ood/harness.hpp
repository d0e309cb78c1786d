#pragma once

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "ood/classifier.hpp"
#include "ood/corpus.hpp"
#include "ood/detector.hpp"
#include "ood/metrics.hpp"
#include "ood/pog.hpp"

namespace ood {

enum class Mode { Baseline, EntropyOos, EntropyPog };

inline Mode parse_mode(const std::string& s) {
    if (s == "baseline") return Mode::Baseline;
    if (s == "entropy-oos") return Mode::EntropyOos;
    if (s == "entropy-pog") return Mode::EntropyPog;
    throw Error("unknown mode \"" + s + "\"; valid modes: baseline, entropy-oos, entropy-pog");
}

inline std::string mode_name(Mode m) {
    switch (m) {
        case Mode::Baseline: return "baseline";
        case Mode::EntropyOos: return "entropy-oos";
        default: return "entropy-pog";
    }
}

struct ExperimentConfig {
    Mode mode = Mode::Baseline;
    std::string data_path;
    std::string out_dir;
    std::uint64_t seed = 0;
    std::size_t max_len = 28;
    std::size_t min_freq = 1;
    std::size_t generate_count = 5000;
    ClassifierConfig classifier;  // vocab_size/num_classes filled at run time
    TrainConfig train;
    PogConfig pog;

    static ExperimentConfig from_json(const nlohmann::json& j) {
        ExperimentConfig c;
        if (j.contains("mode")) c.mode = parse_mode(j["mode"].get<std::string>());
        c.data_path = j.value("data", c.data_path);
        c.out_dir = j.value("out", c.out_dir);
        c.seed = j.value("seed", c.seed);
        c.max_len = j.value("max_len", c.max_len);
        c.min_freq = j.value("min_freq", c.min_freq);
        c.generate_count = j.value("generate_count", c.generate_count);
        if (j.contains("classifier")) {
            const auto& jc = j["classifier"];
            std::string arch = jc.value("arch", "cnn");
            if (arch == "cnn") c.classifier.arch = Arch::Cnn;
            else if (arch == "mean-pool-mlp") c.classifier.arch = Arch::MeanPoolMlp;
            else throw Error("unknown arch \"" + arch + "\"; valid: cnn, mean-pool-mlp");
            c.classifier.embedding_dim = jc.value("embedding_dim", c.classifier.embedding_dim);
            c.classifier.conv_widths = jc.value("conv_widths", c.classifier.conv_widths);
            c.classifier.conv_filters = jc.value("conv_filters", c.classifier.conv_filters);
            c.classifier.hidden_dim = jc.value("hidden_dim", c.classifier.hidden_dim);
            c.classifier.dropout = jc.value("dropout", c.classifier.dropout);
        }
        if (j.contains("train")) {
            const auto& jt = j["train"];
            c.train.learning_rate = jt.value("learning_rate", c.train.learning_rate);
            c.train.batch_size = jt.value("batch_size", c.train.batch_size);
            c.train.epochs = jt.value("epochs", c.train.epochs);
            c.train.beta = jt.value("beta", c.train.beta);
            c.train.patience = jt.value("patience", c.train.patience);
        }
        if (j.contains("pog")) {
            const auto& jp = j["pog"];
            c.pog.d_z = jp.value("d_z", c.pog.d_z);
            c.pog.d_noise = jp.value("d_noise", c.pog.d_noise);
            c.pog.ae_emb_dim = jp.value("ae_emb_dim", c.pog.ae_emb_dim);
            c.pog.dec_hidden = jp.value("dec_hidden", c.pog.dec_hidden);
            std::string dec = jp.value("decoder", "mlp");
            if (dec == "mlp") c.pog.decoder = DecoderKind::Mlp;
            else if (dec == "gru") c.pog.decoder = DecoderKind::Gru;
            else throw Error("unknown decoder \"" + dec + "\"; valid: mlp, gru");
            c.pog.ae_epochs = jp.value("ae_epochs", c.pog.ae_epochs);
            c.pog.ae_lr = jp.value("ae_lr", c.pog.ae_lr);
            c.pog.ae_batch = jp.value("ae_batch", c.pog.ae_batch);
            c.pog.adv_steps = jp.value("adv_steps", c.pog.adv_steps);
            c.pog.adv_lr = jp.value("adv_lr", c.pog.adv_lr);
            c.pog.adv_batch = jp.value("adv_batch", c.pog.adv_batch);
            c.pog.alpha = jp.value("alpha", c.pog.alpha);
            c.pog.jaccard_threshold = jp.value("jaccard_threshold", c.pog.jaccard_threshold);
            c.pog.confidence_threshold =
                jp.value("confidence_threshold", c.pog.confidence_threshold);
        }
        return c;
    }

    static ExperimentConfig from_file(const std::string& path) {
        std::ifstream in(path);
        require(in.good(), "cannot open config: " + path);
        nlohmann::json j;
        in >> j;
        return from_json(j);
    }

    nlohmann::ordered_json to_json() const {
        nlohmann::ordered_json j;
        j["mode"] = mode_name(mode);
        j["data"] = data_path;
        j["out"] = out_dir;
        j["seed"] = seed;
        j["max_len"] = max_len;
        j["min_freq"] = min_freq;
        j["generate_count"] = generate_count;
        j["classifier"] = {
            {"arch", classifier.arch == Arch::Cnn ? "cnn" : "mean-pool-mlp"},
            {"embedding_dim", classifier.embedding_dim},
            {"conv_widths", classifier.conv_widths},
            {"conv_filters", classifier.conv_filters},
            {"hidden_dim", classifier.hidden_dim},
            {"dropout", classifier.dropout}};
        j["train"] = {{"learning_rate", train.learning_rate},
                      {"batch_size", train.batch_size},
                      {"epochs", train.epochs},
                      {"beta", train.beta},
                      {"patience", train.patience}};
        j["pog"] = {{"d_z", pog.d_z},
                    {"d_noise", pog.d_noise},
                    {"ae_emb_dim", pog.ae_emb_dim},
                    {"dec_hidden", pog.dec_hidden},
                    {"decoder", pog.decoder == DecoderKind::Mlp ? "mlp" : "gru"},
                    {"ae_epochs", pog.ae_epochs},
                    {"ae_lr", pog.ae_lr},
                    {"ae_batch", pog.ae_batch},
                    {"adv_steps", pog.adv_steps},
                    {"adv_lr", pog.adv_lr},
                    {"adv_batch", pog.adv_batch},
                    {"alpha", pog.alpha},
                    {"jaccard_threshold", pog.jaccard_threshold},
                    {"confidence_threshold", pog.confidence_threshold}};
        return j;
    }
};

inline std::string emit_curves(const TrainLog& log) {
    require(!log.records.empty(), "emit_curves: empty training log");
    std::string out = "epoch,train_acc,dev_acc,loss,ood_entropy\n";
    char buf[256];
    for (const auto& r : log.records) {
        std::snprintf(buf, sizeof(buf), "%zu,%.17g,%.17g,%.17g,%.17g\n", r.epoch, r.train_acc,
                      r.dev_acc, r.loss, r.ood_entropy);
        out += buf;
    }
    return out;
}

inline std::string emit_scores(const ScoreSet& scores) {
    std::string out = "split,score\n";
    char buf[128];
    for (double s : scores.ind_scores) {
        std::snprintf(buf, sizeof(buf), "ind,%.17g\n", s);
        out += buf;
    }
    for (double s : scores.ood_scores) {
        std::snprintf(buf, sizeof(buf), "ood,%.17g\n", s);
        out += buf;
    }
    return out;
}

struct ExperimentReport {
    ExperimentConfig config;
    TrainLog train_log;
    double test_ind_accuracy = -1;
    double best_dev_accuracy = -1;
    MetricBlock metrics;
    ScoreSet scores;
    double eta_at_tpr90 = -1, eta_at_tpr95 = -1;
    bool pog_fallback = false;
    nlohmann::ordered_json dataset_info;
    nlohmann::ordered_json pog_info;  // null unless entropy-pog
    double wall_clock_seconds = 0;

    nlohmann::ordered_json to_json() const {
        nlohmann::ordered_json j;
        j["config"] = config.to_json();
        j["dataset"] = dataset_info;
        auto log = nlohmann::ordered_json::array();
        for (const auto& r : train_log.records)
            log.push_back({{"epoch", r.epoch},
                           {"train_acc", r.train_acc},
                           {"dev_acc", r.dev_acc},
                           {"loss", r.loss},
                           {"ood_entropy", r.ood_entropy}});
        j["train_log"] = std::move(log);
        j["final"] = {{"test_ind_accuracy", test_ind_accuracy},
                      {"best_dev_accuracy", best_dev_accuracy}};
        j["metrics"] = metric_block_json(metrics);
        j["thresholds"] = {{"eta_at_tpr90", eta_at_tpr90}, {"eta_at_tpr95", eta_at_tpr95}};
        j["flags"] = {{"pog_fallback_to_baseline", pog_fallback}};
        if (!pog_info.is_null()) j["pog"] = pog_info;
        j["wall_clock_seconds"] = wall_clock_seconds;
        return j;
    }
};

namespace detail {

inline void encode_split(const std::vector<LabeledExample>& split, const Vocabulary& vocab,
                         std::size_t max_len, std::vector<Encoded>& xs,
                         std::vector<std::size_t>* ys) {
    xs.clear();
    if (ys) ys->clear();
    for (const auto& ex : split) {
        xs.push_back(encode(ex.utterance.tokens, vocab, max_len));
        if (ys) {
            require(ex.label != kOosLabel, "encode_split: OOS example where IND expected");
            ys->push_back(static_cast<std::size_t>(ex.label));
        }
    }
}

inline void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    require(out.good(), "cannot write: " + path);
    out << content;
}

}  // namespace detail

// End-to-end experiment: ingestion → (optional POG) → training → scoring →
// metrics. Everything downstream of (config, seed) is deterministic; only
// wall_clock_seconds varies between identical runs.
inline ExperimentReport run(const ExperimentConfig& config_in) {
    auto t0 = std::chrono::steady_clock::now();
    ExperimentConfig config = config_in;
    require(!config.data_path.empty(), "run: no dataset path given");
    require(!config.out_dir.empty(), "run: no output directory given");
    config.train.seed = config.seed;
    config.pog.seed = config.seed;

    DatasetBundle bundle = load_clinc(config.data_path);
    require(bundle.K >= 2, "run: need at least 2 IND classes");
    Vocabulary vocab = build_vocab(bundle.train_ind, config.min_freq);

    std::vector<Encoded> train_x, dev_x, test_x, oos_train_x, oos_val_x, oos_test_x;
    std::vector<std::size_t> train_y, dev_y, test_y;
    detail::encode_split(bundle.train_ind, vocab, config.max_len, train_x, &train_y);
    detail::encode_split(bundle.val_ind, vocab, config.max_len, dev_x, &dev_y);
    detail::encode_split(bundle.test_ind, vocab, config.max_len, test_x, &test_y);
    detail::encode_split(bundle.train_oos, vocab, config.max_len, oos_train_x, nullptr);
    detail::encode_split(bundle.val_oos, vocab, config.max_len, oos_val_x, nullptr);
    detail::encode_split(bundle.test_oos, vocab, config.max_len, oos_test_x, nullptr);

    ExperimentReport report;
    report.config = config;
    report.dataset_info = {{"path", config.data_path},
                           {"K", bundle.K},
                           {"sizes",
                            {{"train_ind", train_x.size()},
                             {"val_ind", dev_x.size()},
                             {"test_ind", test_x.size()},
                             {"train_oos", oos_train_x.size()},
                             {"val_oos", oos_val_x.size()},
                             {"test_oos", oos_test_x.size()}}},
                           {"vocab_size", vocab.size()}};

    std::filesystem::create_directories(config.out_dir);

    // OOD source per mode
    std::vector<Encoded> ood_source;
    std::vector<std::vector<std::string>> pseudo_kept;
    if (config.mode == Mode::EntropyOos) {
        ood_source = oos_train_x;
    } else if (config.mode == Mode::EntropyPog) {
        Autoencoder<float> ae(config.pog, vocab.size(), config.max_len);
        Rng ae_rng = Rng::derive(config.seed, 41);
        AeTrainResult ae_res = train_autoencoder(ae, train_x, ae_rng);
        PogEnsemble<float> ens = adversarial_train(ae, train_x, train_y, bundle.K, config.pog);
        Rng gen_rng = Rng::derive(config.seed, 42);
        auto generated = generate(ens.generator, ae, config.generate_count, gen_rng);

        std::vector<std::vector<std::string>> cand_tokens;
        for (const auto& ids : generated) {
            std::vector<std::string> toks;
            for (auto id : ids) toks.push_back(vocab.id_to_token[id]);
            cand_tokens.push_back(std::move(toks));
        }
        std::vector<std::vector<std::string>> ind_tokens;
        for (const auto& ex : bundle.train_ind) ind_tokens.push_back(ex.utterance.tokens);

        auto confidence = [&](const std::vector<std::string>& toks) {
            std::vector<Encoded> one = {encode(toks, vocab, config.max_len)};
            Batch b = make_batch(one, {0});
            return max_softmax_score(ens.aux.forward(ae.encode(b)));
        };
        FilterResult filtered = post_filter(cand_tokens, ind_tokens, confidence,
                                            config.pog.jaccard_threshold,
                                            config.pog.confidence_threshold);
        pseudo_kept = filtered.kept;
        for (const auto& toks : filtered.kept)
            ood_source.push_back(encode(toks, vocab, config.max_len));

        report.pog_info = {
            {"ae_final_reconstruction_loss", ae_res.final_loss},
            {"aux_accuracy_step0", ens.aux_accuracy_step0},
            {"adv_steps", ens.log.records.size()},
            {"d_accuracy_final",
             ens.log.records.empty() ? 0.0 : ens.log.records.back().d_accuracy},
            {"aux_entropy_step0",
             ens.log.records.empty() ? 0.0 : ens.log.records.front().aux_entropy},
            {"aux_entropy_final",
             ens.log.records.empty() ? 0.0 : ens.log.records.back().aux_entropy},
            {"generated", generated.size()},
            {"rejections",
             {{"exact_duplicate", filtered.report.exact_duplicate},
              {"jaccard_overlap", filtered.report.jaccard_overlap},
              {"high_confidence", filtered.report.high_confidence},
              {"kept", filtered.report.kept}}}};

        nlohmann::ordered_json rej = report.pog_info["rejections"];
        detail::write_file(config.out_dir + "/rejections.json", rej.dump(1) + "\n");
        std::string lines;
        for (const auto& toks : pseudo_kept) {
            std::string line;
            for (std::size_t i = 0; i < toks.size(); ++i) {
                if (i) line += " ";
                line += toks[i];
            }
            lines += line + "\n";
        }
        detail::write_file(config.out_dir + "/pseudo_ood.txt", lines);

        if (ood_source.empty()) {
            std::fprintf(stderr,
                         "warning: post-filter rejected every generated sample; "
                         "falling back to baseline behaviour\n");
            report.pog_fallback = true;
        }
    }

    // classifier training
    ClassifierConfig ccfg = config.classifier;
    ccfg.vocab_size = vocab.size();
    ccfg.num_classes = bundle.K;
    TextClassifier<float> model(ccfg);
    Rng init_rng = Rng::derive(config.seed, 31);
    model.init(init_rng);
    TrainResult<float> tr = train(model, train_x, train_y, dev_x, dev_y, ood_source, config.train);
    model.params = tr.best_params;

    report.train_log = tr.log;
    report.best_dev_accuracy = tr.best_dev_acc;
    if (!test_x.empty()) report.test_ind_accuracy = ind_accuracy(model, test_x, test_y);

    // detection scores + metrics on test_ind vs test_oos
    report.scores.ind_scores = score_all(model, test_x);
    report.scores.ood_scores = score_all(model, oos_test_x);
    if (!report.scores.ind_scores.empty() && !report.scores.ood_scores.empty())
        report.metrics = metric_block(report.scores);
    if (!oos_val_x.empty()) {
        auto val_scores = score_all(model, oos_val_x);
        report.eta_at_tpr90 = select_threshold(val_scores, 0.90).eta;
        report.eta_at_tpr95 = select_threshold(val_scores, 0.95).eta;
    }

    auto t1 = std::chrono::steady_clock::now();
    report.wall_clock_seconds = std::chrono::duration<double>(t1 - t0).count();

    detail::write_file(config.out_dir + "/report.json", report.to_json().dump(1) + "\n");
    detail::write_file(config.out_dir + "/curves.csv", emit_curves(report.train_log));
    detail::write_file(config.out_dir + "/scores.csv", emit_scores(report.scores));
    tr.best_params.save(config.out_dir + "/checkpoint.json");
    return report;
}

// Per-metric signed differences (b − a), IND accuracy first.
inline std::string compare(const nlohmann::json& report_a, const nlohmann::json& report_b) {
    require(report_a.at("dataset").at("K") == report_b.at("dataset").at("K") &&
                report_a.at("dataset").at("sizes") == report_b.at("dataset").at("sizes"),
            "compare: reports come from different datasets");
    auto ra = report_a.at("metrics").at("raw");
    auto rb = report_b.at("metrics").at("raw");
    std::ostringstream out;
    char buf[160];
    auto row = [&](const std::string& name, double a, double b) {
        std::snprintf(buf, sizeof(buf), "%-22s %12.4f %12.4f %+12.4f\n", name.c_str(), a, b,
                      b - a);
        out << buf;
    };
    std::snprintf(buf, sizeof(buf), "%-22s %12s %12s %12s\n", "metric", "a", "b", "delta");
    out << buf;
    row("ind_test_accuracy", report_a.at("final").at("test_ind_accuracy").get<double>(),
        report_b.at("final").at("test_ind_accuracy").get<double>());
    for (const char* m : {"auroc", "aupr_ood_positive", "aupr_ind_positive", "fpr_at_95tpr",
                          "fpr_at_90tpr"})
        row(m, ra.at(m).get<double>() * 100.0, rb.at(m).get<double>() * 100.0);
    return out.str();
}

}  // namespace ood
