#include <cstdio>
#include <exception>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "bip/errors.hpp"
#include "bip/experiment.hpp"
#include "bip/toml.hpp"
#include "bip/toy_bilevel.hpp"

namespace {

struct CliState {
    bip::ExperimentConfig cfg;
    std::string config_path;
    std::string bip_scheme = "random";
    std::string dense_schedule = "cosine";
    std::string retrain_schedule = "step";
    double prune_sparsity = -1.0;
    std::int64_t prune_seed = -1;
};

// The config file is loaded before CLI11 binds the remaining options, so
// explicit flags override config values.
std::string scan_config_path(int argc, char** argv) {
    for (int i = 1; i < argc; ++i) {
        const std::string arg = argv[i];
        if (arg == "--config" && i + 1 < argc) return argv[i + 1];
        if (arg.rfind("--config=", 0) == 0) return arg.substr(9);
    }
    return "";
}

void bind_experiment_options(CLI::App* cmd, CliState& st) {
    cmd->add_option("--config", st.config_path, "TOML experiment config (flags override its keys)");
    bip::ExperimentConfig& cfg = st.cfg;
    cmd->add_option("--model", cfg.model, "mlp-tiny|mlp-small|cnn-tiny")->capture_default_str();
    cmd->add_option("--method", cfg.method, "dense|bip|omp|imp|random|snip|hydra")->capture_default_str();
    cmd->add_option("--granularity", cfg.granularity, "element|filter|channel")->capture_default_str();
    cmd->add_option("--sparsity", cfg.sparsities, "target pruning ratios")->capture_default_str();
    cmd->add_option("--seeds", cfg.seeds, "run seeds")->capture_default_str();
    cmd->add_option("--out-dir", cfg.out_dir, "output directory")->capture_default_str();
    cmd->add_flag("--force", cfg.force, "overwrite an existing output directory");
    cmd->add_flag("--per-layer-budget", cfg.per_layer_budget, "apply the sparsity budget per layer");
    cmd->add_option("--rewind-epoch", cfg.rewind_epoch, "dense snapshot epoch (-1: 10% of dense epochs)")
        ->capture_default_str();
    cmd->add_flag("--bip-retrain-after", cfg.bip_retrain_after, "masked retraining pass after bip");
    cmd->add_option("--snip-batch", cfg.snip_batch, "saliency batch size")->capture_default_str();

    cmd->add_option("--data.dataset", cfg.dataset, "blobs|idx")->capture_default_str();
    cmd->add_option("--data.blobs_classes", cfg.blobs_classes)->capture_default_str();
    cmd->add_option("--data.blobs_per_class", cfg.blobs_per_class)->capture_default_str();
    cmd->add_option("--data.blobs_dim", cfg.blobs_dim)->capture_default_str();
    cmd->add_option("--data.blobs_separation", cfg.blobs_separation)->capture_default_str();
    cmd->add_option("--data.data_seed", cfg.data_seed)->capture_default_str();
    cmd->add_option("--data.idx_images", cfg.idx_images);
    cmd->add_option("--data.idx_labels", cfg.idx_labels);
    cmd->add_option("--data.idx_test_images", cfg.idx_test_images);
    cmd->add_option("--data.idx_test_labels", cfg.idx_test_labels);
    cmd->add_option("--data.idx_pool8", cfg.idx_pool8)->capture_default_str();

    cmd->add_option("--dense.epochs", cfg.dense.epochs)->capture_default_str();
    cmd->add_option("--dense.lr", cfg.dense.lr)->capture_default_str();
    cmd->add_option("--dense.schedule", st.dense_schedule, "cosine|step")->capture_default_str();
    cmd->add_option("--dense.weight_decay", cfg.dense.weight_decay)->capture_default_str();
    cmd->add_option("--dense.batch_size", cfg.dense.batch_size)->capture_default_str();

    cmd->add_option("--retrain.epochs", cfg.retrain.epochs)->capture_default_str();
    cmd->add_option("--retrain.lr", cfg.retrain.lr)->capture_default_str();
    cmd->add_option("--retrain.schedule", st.retrain_schedule, "cosine|step")->capture_default_str();
    cmd->add_option("--retrain.weight_decay", cfg.retrain.weight_decay)->capture_default_str();
    cmd->add_option("--retrain.batch_size", cfg.retrain.batch_size)->capture_default_str();

    cmd->add_option("--bip.alpha", cfg.bip.alpha, "lower-level learning rate")->capture_default_str();
    cmd->add_option("--bip.beta", cfg.bip.beta, "upper-level learning rate")->capture_default_str();
    cmd->add_option("--bip.gamma", cfg.bip.gamma, "IG convexification coefficient")->capture_default_str();
    cmd->add_option("--bip.theta_decay", cfg.bip.theta_decay, "theta-step decay (<0: use gamma)")
        ->capture_default_str();
    cmd->add_option("--bip.lower_steps", cfg.bip.lower_steps, "SGD steps per iteration")->capture_default_str();
    cmd->add_option("--bip.epochs", cfg.bip.epochs)->capture_default_str();
    cmd->add_option("--bip.batch_size", cfg.bip.batch_size)->capture_default_str();
    cmd->add_option("--bip.batch_scheme", st.bip_scheme, "random|same|reverse")->capture_default_str();
    cmd->add_option("--bip.ig_free", cfg.bip.ig_free, "drop the IG correction (gamma -> inf)")
        ->capture_default_str();
    cmd->add_option("--bip.group_reduce_mean", cfg.bip.group_reduce_mean)->capture_default_str();
    cmd->add_option("--bip.ig_binary_mask", cfg.bip.ig_binary_mask)->capture_default_str();
    cmd->add_option("--bip.debug_checks", cfg.bip.debug_checks)->capture_default_str();

    cmd->add_option("--imp.rounds", cfg.imp.rounds)->capture_default_str();
    cmd->add_option("--imp.retrain_epochs", cfg.imp.retrain_epochs, "per round (0: retrain.epochs)")
        ->capture_default_str();
}

void finish_config(CliState& st) {
    st.cfg.bip.batch_scheme = bip::parse_batch_scheme(st.bip_scheme);
    st.cfg.dense.schedule = bip::parse_schedule(st.dense_schedule);
    st.cfg.retrain.schedule = bip::parse_schedule(st.retrain_schedule);
}

int run_gradcheck_cmd(std::uint64_t seed) {
    const auto rows = bip::run_gradcheck(seed);
    std::printf("%-44s %12s %12s  %s\n", "identity", "max_rel_err", "threshold", "status");
    bool all_pass = true;
    for (const auto& r : rows) {
        if (r.threshold >= 0.0) {
            std::printf("%-44s %12.3e %12.1e  %s\n", r.name.c_str(), r.error, r.threshold,
                        r.pass ? "pass" : "FAIL");
            all_pass = all_pass && r.pass;
        } else {
            std::printf("%-44s %12.3e %12s  %s\n", r.name.c_str(), r.error, "-", "reported");
        }
    }
    return all_pass ? 0 : 3;
}

std::vector<bip::RunRecord> load_summaries(const std::vector<std::string>& paths) {
    std::vector<bip::RunRecord> all;
    for (const std::string& p : paths) {
        std::ifstream f(p);
        if (!f) throw bip::config_error("cannot open " + p);
        auto part = bip::read_summary_csv(f);
        all.insert(all.end(), part.begin(), part.end());
    }
    return all;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"bi-level pruning: optimizer, baselines and experiment harness"};
    app.require_subcommand(1);

    CliState st;
    try {
        const std::string config_path = scan_config_path(argc, argv);
        if (!config_path.empty()) {
            bip::apply_toml(st.cfg, bip::parse_toml_file(config_path));
            st.bip_scheme = bip::to_string(st.cfg.bip.batch_scheme);
            st.dense_schedule = bip::to_string(st.cfg.dense.schedule);
            st.retrain_schedule = bip::to_string(st.cfg.retrain.schedule);
        }
    } catch (const bip::config_error& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    }

    CLI::App* train = app.add_subcommand("train-dense", "train the dense reference model");
    bind_experiment_options(train, st);

    CLI::App* prune = app.add_subcommand("prune", "run one pruning method at a single (sparsity, seed)");
    bind_experiment_options(prune, st);
    prune->add_option("--at-sparsity", st.prune_sparsity, "single sparsity (overrides the list)");
    prune->add_option("--at-seed", st.prune_seed, "single seed (overrides the list)");

    CLI::App* sweep = app.add_subcommand("sweep", "run the full sparsity x seed grid");
    bind_experiment_options(sweep, st);

    std::uint64_t gc_seed = 17;
    CLI::App* gradcheck = app.add_subcommand("gradcheck", "verify every derivative identity against FD oracles");
    gradcheck->add_option("--seed", gc_seed, "probe seed")->capture_default_str();

    std::vector<std::string> runs_paths;
    std::string dense_path, report_out;
    CLI::App* report = app.add_subcommand("report", "winning-ticket and cost tables from summary CSVs");
    report->add_option("--runs", runs_paths, "summary.csv files of pruning runs")->required();
    report->add_option("--dense", dense_path, "summary.csv of the dense runs")->required();

    CLI::App* plot = app.add_subcommand("plot", "emit tradeoff CSV and gnuplot script");
    plot->add_option("--runs", runs_paths, "summary.csv files of pruning runs")->required();
    plot->add_option("--dense", dense_path, "summary.csv of the dense runs");
    plot->add_option("--out", report_out, "output directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 2;
    }

    try {
        if (gradcheck->parsed()) return run_gradcheck_cmd(gc_seed);

        if (report->parsed()) {
            const auto dense = load_summaries({dense_path});
            const auto runs = load_summaries(runs_paths);
            const auto tickets = bip::winning_ticket_report(runs, dense);
            bip::print_ticket_report(std::cout, tickets);
            std::cout << '\n';
            const auto costs = bip::cost_report(runs);
            bip::print_cost_report(std::cout, costs);
            return costs.violations.empty() ? 0 : 3;
        }

        if (plot->parsed()) {
            const auto runs = load_summaries(runs_paths);
            std::vector<bip::RunRecord> dense;
            if (!dense_path.empty()) dense = load_summaries({dense_path});
            bip::emit_tradeoff_plot(runs, dense, report_out);
            std::cout << "wrote " << report_out << "/tradeoff.csv and plot.gp\n";
            return 0;
        }

        finish_config(st);
        if (train->parsed()) st.cfg.method = "dense";
        if (prune->parsed()) {
            if (st.prune_sparsity >= 0.0) st.cfg.sparsities = {st.prune_sparsity};
            if (st.prune_seed >= 0) st.cfg.seeds = {static_cast<std::uint64_t>(st.prune_seed)};
            if (!st.cfg.sparsities.empty()) st.cfg.sparsities.resize(1);
            if (!st.cfg.seeds.empty()) st.cfg.seeds.resize(1);
        }
        const auto records = bip::run_experiment(st.cfg);
        double mean = 0.0;
        for (const auto& r : records) mean += r.final_test_acc / static_cast<double>(records.size());
        std::printf("%zu run(s) complete; mean final test accuracy %.4f; outputs in %s\n",
                    records.size(), mean, st.cfg.out_dir.c_str());
        return 0;
    } catch (const bip::config_error& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 3;
    }
}
