#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "ood/harness.hpp"
#include "ood/synth.hpp"

int main(int argc, char** argv) {
    CLI::App app{"entropy-regularized OOD detection experiments"};
    app.require_subcommand(1);

    // run
    auto* run_cmd = app.add_subcommand("run", "run one experiment end to end");
    std::string config_path, mode, data, out;
    std::uint64_t seed = 0;
    bool seed_set = false;
    run_cmd->add_option("--config", config_path, "JSON config file");
    run_cmd->add_option("--mode", mode, "baseline | entropy-oos | entropy-pog");
    run_cmd->add_option("--data", data, "dataset JSON (CLINC150 data_full.json layout)");
    run_cmd->add_option("--out", out, "output directory");
    run_cmd->add_option("--seed", seed, "random seed")->each([&](const std::string&) {
        seed_set = true;
    });

    // compare
    auto* cmp_cmd = app.add_subcommand("compare", "delta table between two report.json files");
    std::string report_a, report_b;
    cmp_cmd->add_option("a", report_a, "first report.json")->required();
    cmp_cmd->add_option("b", report_b, "second report.json")->required();

    // synth
    auto* synth_cmd = app.add_subcommand("synth", "write a synthetic CLINC-shaped dataset");
    std::string synth_out = "synthetic.json";
    ood::SynthConfig scfg;
    synth_cmd->add_option("--out", synth_out, "output path");
    synth_cmd->add_option("--classes", scfg.num_classes, "number of IND intents");
    synth_cmd->add_option("--train-per-class", scfg.train_per_class, "IND train per class");
    synth_cmd->add_option("--seed", scfg.seed, "generator seed");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*run_cmd) {
            ood::ExperimentConfig cfg;
            if (!config_path.empty()) cfg = ood::ExperimentConfig::from_file(config_path);
            if (!mode.empty()) cfg.mode = ood::parse_mode(mode);
            if (!data.empty()) cfg.data_path = data;
            if (!out.empty()) cfg.out_dir = out;
            if (seed_set) cfg.seed = seed;
            if (cfg.out_dir.empty()) cfg.out_dir = "out";
            ood::ExperimentReport report = ood::run(cfg);
            std::printf("mode=%s test_ind_accuracy=%.4f auroc=%.2f aupr_ind=%.2f fpr95=%.2f "
                        "fpr90=%.2f\n",
                        ood::mode_name(cfg.mode).c_str(), report.test_ind_accuracy,
                        report.metrics.auroc * 100.0, report.metrics.aupr_ind_positive * 100.0,
                        report.metrics.fpr_at_95tpr * 100.0, report.metrics.fpr_at_90tpr * 100.0);
            std::printf("report written to %s/report.json\n", cfg.out_dir.c_str());
        } else if (*cmp_cmd) {
            std::ifstream fa(report_a), fb(report_b);
            ood::require(fa.good(), "cannot open " + report_a);
            ood::require(fb.good(), "cannot open " + report_b);
            nlohmann::json ja, jb;
            fa >> ja;
            fb >> jb;
            std::cout << ood::compare(ja, jb);
        } else if (*synth_cmd) {
            std::ofstream f(synth_out);
            ood::require(f.good(), "cannot write " + synth_out);
            f << ood::make_synthetic_clinc(scfg).dump() << "\n";
            std::printf("wrote %s\n", synth_out.c_str());
        }
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
