#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace bip {

struct EpochRow {
    int epoch = 0;
    double train_loss = 0.0;
    double test_acc = 0.0;
    double sparsity = 0.0;  // realized parameter-level sparsity
    double mask_iou = 1.0;  // vs previous epoch's mask
    std::int64_t theta_grad_evals = 0;
    std::int64_t m_grad_evals = 0;
};

struct RunRecord {
    std::string method;
    std::uint64_t seed = 0;
    double target_sparsity = 0.0;
    int rounds = 0;  // IMP rounds; 0 elsewhere
    std::vector<EpochRow> rows;
    double final_test_acc = 0.0;
    double realized_sparsity = 0.0;
    std::int64_t theta_grad_evals = 0;
    std::int64_t m_grad_evals = 0;
};

// Exact decimal round-trip for doubles (17 significant digits).
std::string fmt_g17(double v);

void write_run_csv(std::ostream& os, const RunRecord& r);
RunRecord read_run_csv(std::istream& is);

void write_summary_csv(std::ostream& os, std::span<const RunRecord> records);
std::vector<RunRecord> read_summary_csv(std::istream& is);  // rows are left empty

}  // namespace bip
