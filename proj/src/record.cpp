#include "bip/record.hpp"

#include <cstdio>
#include <cstdlib>
#include <istream>
#include <ostream>
#include <sstream>

#include "bip/errors.hpp"

namespace bip {

std::string fmt_g17(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

namespace {

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    out.push_back(cur);
    return out;
}

double to_double(const std::string& s) { return std::strtod(s.c_str(), nullptr); }
std::int64_t to_i64(const std::string& s) { return std::strtoll(s.c_str(), nullptr, 10); }
std::uint64_t to_u64(const std::string& s) { return std::strtoull(s.c_str(), nullptr, 10); }

constexpr const char* kRunHeader =
    "method,seed,target_sparsity,rounds,epoch,train_loss,test_acc,sparsity_param_level,"
    "mask_iou_vs_prev,theta_grad_evals,m_grad_evals";

constexpr const char* kSummaryHeader =
    "method,seed,target_sparsity,rounds,final_test_acc,realized_sparsity,theta_grad_evals,m_grad_evals";

}  // namespace

void write_run_csv(std::ostream& os, const RunRecord& r) {
    os << kRunHeader << '\n';
    for (const EpochRow& row : r.rows) {
        os << r.method << ',' << r.seed << ',' << fmt_g17(r.target_sparsity) << ',' << r.rounds << ','
           << row.epoch << ',' << fmt_g17(row.train_loss) << ',' << fmt_g17(row.test_acc) << ','
           << fmt_g17(row.sparsity) << ',' << fmt_g17(row.mask_iou) << ',' << row.theta_grad_evals << ','
           << row.m_grad_evals << '\n';
    }
}

RunRecord read_run_csv(std::istream& is) {
    std::string line;
    if (!std::getline(is, line) || line != kRunHeader) throw config_error("run csv: unexpected header");
    RunRecord r;
    bool first = true;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        const auto f = split_csv(line);
        if (f.size() != 11) throw config_error("run csv: expected 11 fields, got " + std::to_string(f.size()));
        if (first) {
            r.method = f[0];
            r.seed = to_u64(f[1]);
            r.target_sparsity = to_double(f[2]);
            r.rounds = static_cast<int>(to_i64(f[3]));
            first = false;
        }
        EpochRow row;
        row.epoch = static_cast<int>(to_i64(f[4]));
        row.train_loss = to_double(f[5]);
        row.test_acc = to_double(f[6]);
        row.sparsity = to_double(f[7]);
        row.mask_iou = to_double(f[8]);
        row.theta_grad_evals = to_i64(f[9]);
        row.m_grad_evals = to_i64(f[10]);
        r.rows.push_back(row);
    }
    if (!r.rows.empty()) {
        const EpochRow& last = r.rows.back();
        r.final_test_acc = last.test_acc;
        r.realized_sparsity = last.sparsity;
        r.theta_grad_evals = last.theta_grad_evals;
        r.m_grad_evals = last.m_grad_evals;
    }
    return r;
}

void write_summary_csv(std::ostream& os, std::span<const RunRecord> records) {
    os << kSummaryHeader << '\n';
    for (const RunRecord& r : records) {
        os << r.method << ',' << r.seed << ',' << fmt_g17(r.target_sparsity) << ',' << r.rounds << ','
           << fmt_g17(r.final_test_acc) << ',' << fmt_g17(r.realized_sparsity) << ','
           << r.theta_grad_evals << ',' << r.m_grad_evals << '\n';
    }
}

std::vector<RunRecord> read_summary_csv(std::istream& is) {
    std::string line;
    if (!std::getline(is, line) || line != kSummaryHeader) throw config_error("summary csv: unexpected header");
    std::vector<RunRecord> out;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        const auto f = split_csv(line);
        if (f.size() != 8) throw config_error("summary csv: expected 8 fields, got " + std::to_string(f.size()));
        RunRecord r;
        r.method = f[0];
        r.seed = to_u64(f[1]);
        r.target_sparsity = to_double(f[2]);
        r.rounds = static_cast<int>(to_i64(f[3]));
        r.final_test_acc = to_double(f[4]);
        r.realized_sparsity = to_double(f[5]);
        r.theta_grad_evals = to_i64(f[6]);
        r.m_grad_evals = to_i64(f[7]);
        out.push_back(std::move(r));
    }
    return out;
}

}  // namespace bip
