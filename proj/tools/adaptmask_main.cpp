#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "adaptmask/config.hpp"
#include "adaptmask/dataset.hpp"
#include "adaptmask/metrics.hpp"
#include "adaptmask/trainer.hpp"

using namespace adaptmask;

int main(int argc, char** argv) {
    CLI::App app{"semi-supervised 2D pose estimation with adaptive keypoint masking"};
    app.require_subcommand(1);

    // ---- synth-data
    auto* synth = app.add_subcommand("synth-data", "generate a synthetic stick-figure dataset");
    SyntheticConfig scfg;
    std::string synth_out;
    synth->add_option("--count", scfg.count, "number of samples")->required();
    synth->add_option("--occlusion-frac", scfg.occlusion_frac,
                      "fraction of low-contrast / occluded samples");
    synth->add_option("--seed", scfg.seed, "generator seed");
    synth->add_option("--image-size", scfg.image_size, "square image side, pixels");
    synth->add_option("--out", synth_out, "output directory")->required();

    // ---- train
    auto* train = app.add_subcommand("train", "run the training loop");
    std::string train_config, train_method, train_out;
    int train_labels = -1;
    long train_seed = -1;
    bool resume = false;
    train->add_option("--config", train_config, "config file (key = value)")->required();
    train->add_option("--method", train_method,
                      "supervised|pseudo-pose|single|adaptive|adaptive+mixup");
    train->add_option("--labels", train_labels, "labeled sample count override");
    train->add_option("--seed", train_seed, "training seed override");
    train->add_option("--out", train_out, "run directory override");
    train->add_flag("--resume", resume, "resume from ckpt-last in the run directory");

    // ---- eval
    auto* eval = app.add_subcommand("eval", "evaluate a checkpoint on a dataset");
    std::string eval_ckpt, eval_data, eval_protocol = "pck", eval_config;
    eval->add_option("--ckpt", eval_ckpt, "checkpoint file")->required();
    eval->add_option("--data", eval_data, "dataset directory")->required();
    eval->add_option("--protocol", eval_protocol, "oks|pck");
    eval->add_option("--config", eval_config, "config file for the model shape");

    // ---- allocate-masks
    auto* alloc = app.add_subcommand("allocate-masks",
                                     "dump per-sample mask budgets as JSON lines");
    std::string alloc_ckpt, alloc_data, alloc_config;
    alloc->add_option("--ckpt", alloc_ckpt, "checkpoint file")->required();
    alloc->add_option("--data", alloc_data, "dataset directory")->required();
    alloc->add_option("--config", alloc_config, "config file for the model shape");

    // ---- plot
    auto* plot = app.add_subcommand("plot", "emit SVG charts from run directories");
    std::vector<std::string> plot_runs;
    std::string plot_out = "plots";
    plot->add_option("--runs", plot_runs, "run directories")->required();
    plot->add_option("--out", plot_out, "output directory for charts");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*synth) {
            auto records = generate_stick_figures(scfg);
            save_synthetic_dataset(records, synth_out);
            std::cout << "wrote " << records.size() << " samples to " << synth_out
                      << "\n";
        } else if (*train) {
            TrainConfig cfg = TrainConfig::from_file(train_config);
            if (!train_method.empty()) cfg.method = parse_method(train_method);
            if (train_labels >= 0) cfg.labels = train_labels;
            if (train_seed >= 0) cfg.seed = static_cast<uint64_t>(train_seed);
            if (!train_out.empty()) cfg.out_dir = train_out;
            Trainer trainer(cfg);
            std::string dir = trainer.fit(resume);
            EvalMetrics em = trainer.evaluate_split(trainer.validation());
            std::cout << "run directory: " << dir << "\n"
                      << metrics_to_json(em.ap, em.pck) << "\n";
        } else if (*eval) {
            TrainConfig cfg;
            if (!eval_config.empty()) cfg = TrainConfig::from_file(eval_config);
            EvalMetrics em = evaluate_checkpoint(eval_ckpt, eval_data, eval_protocol, cfg);
            std::cout << metrics_to_json(em.ap, em.pck) << "\n";
        } else if (*alloc) {
            TrainConfig cfg;
            if (!alloc_config.empty()) cfg = TrainConfig::from_file(alloc_config);
            cfg.data_dir = alloc_data;
            auto records = load_synthetic_dataset(alloc_data);
            Trainer trainer(cfg, records, {}, records);
            load_checkpoint(alloc_ckpt, trainer.model(), nullptr);
            auto budgets = trainer.allocate_masks_for(records);
            for (size_t i = 0; i < budgets.size(); ++i) {
                nlohmann::json line;
                line["sample_id"] = records[i].meta.source_id;
                line["n_simple"] = budgets[i].n_simple;
                line["count"] = budgets[i].count;
                line["extreme"] = budgets[i].extreme;
                line["relative_response"] = budgets[i].relative_response;
                std::cout << line.dump() << "\n";
            }
        } else if (*plot) {
            auto files = emit_plots(plot_runs, plot_out);
            for (const auto& f : files) std::cout << f << "\n";
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
