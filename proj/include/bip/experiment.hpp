#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "bip/baselines.hpp"
#include "bip/data.hpp"
#include "bip/optimizer.hpp"
#include "bip/record.hpp"

namespace bip {

struct ExperimentConfig {
    std::string model = "mlp-small";
    std::string method = "bip";  // dense|bip|omp|imp|random|snip|hydra
    std::string granularity = "element";
    std::vector<double> sparsities = {0.5};
    std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5};
    std::string out_dir = "runs/exp";
    bool force = false;
    bool per_layer_budget = false;

    std::string dataset = "blobs";  // blobs|idx
    int blobs_classes = 4;
    int blobs_per_class = 100;
    int blobs_dim = 10;
    double blobs_separation = 6.0;
    std::uint64_t data_seed = 7;
    std::string idx_images, idx_labels, idx_test_images, idx_test_labels;
    bool idx_pool8 = true;

    RetrainConfig dense{50, 0.1, LrSchedule::cosine, 5e-4, 64, 0};
    RetrainConfig retrain{40, 0.1, LrSchedule::step, 5e-4, 64, 0};
    int rewind_epoch = -1;  // -1: 10% of the dense epochs

    BipConfig bip;
    ImpSchedule imp;
    bool bip_retrain_after = false;
    int snip_batch = 128;
};

// Returns every violation, not just the first.
std::vector<std::string> validate_config(const ExperimentConfig& cfg);

// Runs one (sparsity, seed) cell per combination, writes per-run CSVs,
// checkpoints and the experiment summary into cfg.out_dir. Refuses to reuse
// an output directory that already holds a summary unless cfg.force. The
// BIP_THREADS environment variable caps the worker fan-out.
std::vector<RunRecord> run_experiment(const ExperimentConfig& cfg);

struct TicketCell {
    std::string method;
    double sparsity = 0.0;
    double sparse_mean = 0.0;
    double dense_mean = 0.0;
    bool winning = false;
};

struct TicketReport {
    std::vector<TicketCell> cells;
    // method -> sparsest winning sparsity; empty optional renders as x
    std::map<std::string, std::optional<double>> sparsest;
};

TicketReport winning_ticket_report(std::span<const RunRecord> records,
                                   std::span<const RunRecord> dense_records);
void print_ticket_report(std::ostream& os, const TicketReport& rep);

struct TradeoffRow {
    std::string method;
    double sparsity = 0.0;
    double acc_mean = 0.0;
    double acc_std = 0.0;  // population std over seeds
};

// Writes tradeoff.csv and a gnuplot script (plot.gp) with mean curves,
// +-std bands and the dense reference line.
std::vector<TradeoffRow> emit_tradeoff_plot(std::span<const RunRecord> records,
                                            std::span<const RunRecord> dense_records,
                                            const std::string& out_dir);

struct CostRow {
    std::string method;
    double sparsity = 0.0;
    int rounds = 0;
    std::int64_t theta_grad_evals = 0;
    std::int64_t m_grad_evals = 0;
};

struct CostReport {
    std::vector<CostRow> rows;
    std::vector<std::string> violations;  // sparsity-agnostic methods must have constant counters
};

CostReport cost_report(std::span<const RunRecord> records);
void print_cost_report(std::ostream& os, const CostReport& rep);

void write_config_toml(std::ostream& os, const ExperimentConfig& cfg);

}  // namespace bip
