#include "bip/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <numeric>
#include <ostream>
#include <set>
#include <sstream>
#include <thread>

#include "bip/checkpoint.hpp"
#include "bip/errors.hpp"
#include "bip/rng.hpp"

namespace fs = std::filesystem;

namespace bip {

namespace {

const std::set<std::string> kMethods = {"dense", "bip", "omp", "imp", "random", "snip", "hydra"};
const std::set<std::string> kModels = {"mlp-tiny", "mlp-small", "cnn-tiny"};
const std::set<std::string> kGranularities = {"element", "filter", "channel"};

std::string sparsity_tag(double p) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", p);
    return buf;
}

}  // namespace

std::vector<std::string> validate_config(const ExperimentConfig& cfg) {
    std::vector<std::string> bad;
    if (!kMethods.count(cfg.method)) bad.push_back("method '" + cfg.method + "' unknown");
    if (!kModels.count(cfg.model)) bad.push_back("model '" + cfg.model + "' unknown");
    if (!kGranularities.count(cfg.granularity)) bad.push_back("granularity '" + cfg.granularity + "' unknown");
    if (cfg.seeds.empty()) bad.push_back("seeds list is empty");
    if (cfg.sparsities.empty() && cfg.method != "dense") bad.push_back("sparsity list is empty");
    for (double p : cfg.sparsities) {
        if (p < 0.0 || p >= 1.0) bad.push_back("sparsity " + sparsity_tag(p) + " outside [0,1)");
    }
    if (cfg.dataset != "blobs" && cfg.dataset != "idx") bad.push_back("dataset '" + cfg.dataset + "' unknown");
    if (cfg.dataset == "blobs") {
        if (cfg.blobs_classes < 2) bad.push_back("blobs_classes must be >= 2");
        if (cfg.blobs_per_class < 2) bad.push_back("blobs_per_class must be >= 2");
        if (cfg.blobs_dim < 2) bad.push_back("blobs_dim must be >= 2");
    } else {
        if (cfg.idx_images.empty() || cfg.idx_labels.empty()) bad.push_back("idx dataset needs idx_images and idx_labels");
        if (cfg.idx_test_images.empty() || cfg.idx_test_labels.empty())
            bad.push_back("idx dataset needs idx_test_images and idx_test_labels");
    }
    if (cfg.dense.epochs < 1) bad.push_back("dense.epochs must be >= 1");
    if (cfg.dense.lr < 0.0) bad.push_back("dense.lr must be >= 0");
    if (cfg.retrain.epochs < 1) bad.push_back("retrain.epochs must be >= 1");
    if (cfg.dense.batch_size < 1) bad.push_back("dense.batch_size must be >= 1");
    if (cfg.retrain.batch_size < 1) bad.push_back("retrain.batch_size must be >= 1");
    if (cfg.method == "bip") {
        if (cfg.bip.alpha <= 0.0) bad.push_back("bip.alpha must be > 0");
        if (cfg.bip.beta <= 0.0) bad.push_back("bip.beta must be > 0");
        if (cfg.bip.gamma <= 0.0) bad.push_back("bip.gamma must be > 0");
        if (cfg.bip.lower_steps < 1) bad.push_back("bip.lower_steps must be >= 1");
        if (cfg.bip.epochs < 1) bad.push_back("bip.epochs must be >= 1");
        if (cfg.bip.batch_size < 1) bad.push_back("bip.batch_size must be >= 1");
    }
    if (cfg.method == "imp") {
        if (cfg.imp.rounds < 1) bad.push_back("imp.rounds must be >= 1");
        if (cfg.imp.retrain_epochs < 0) bad.push_back("imp.retrain_epochs must be >= 0");
    }
    if (cfg.method == "snip" && cfg.snip_batch < 1) bad.push_back("snip_batch must be >= 1");
    if (cfg.rewind_epoch >= cfg.dense.epochs) bad.push_back("rewind_epoch beyond dense epochs");
    if (cfg.out_dir.empty()) bad.push_back("out_dir is empty");
    return bad;
}

namespace {

struct Workspace {
    DatasetPair data;
    Network net;
    GroupMap gm;
};

Workspace build_workspace(const ExperimentConfig& cfg) {
    DatasetPair data;
    if (cfg.dataset == "blobs") {
        data = make_blobs(cfg.blobs_classes, cfg.blobs_per_class, cfg.blobs_dim, cfg.blobs_separation,
                          cfg.data_seed);
    } else {
        data.train = load_idx(cfg.idx_images, cfg.idx_labels, cfg.idx_pool8);
        data.test = load_idx(cfg.idx_test_images, cfg.idx_test_labels, cfg.idx_pool8);
        data.test.split = "test";
    }
    const int input_dim = data.train.inputs.shape.size() == 2 ? data.train.inputs.shape[1] : 0;
    Network net = Network::by_id(cfg.model, input_dim, data.train.classes);
    if (net.input_shape().size() != data.train.inputs.shape.size() - 1) {
        throw config_error("model " + cfg.model + " expects " +
                           std::to_string(net.input_shape().size()) + "-d inputs, dataset has " +
                           std::to_string(data.train.inputs.shape.size() - 1));
    }
    GroupMap gm = build_group_map(net, parse_granularity(cfg.granularity));
    return Workspace{std::move(data), std::move(net), std::move(gm)};
}

int rewind_epoch_of(const ExperimentConfig& cfg) {
    return cfg.rewind_epoch >= 0 ? cfg.rewind_epoch : std::max(1, cfg.dense.epochs / 10);
}

// Dense pretraining is shared across cells of the same seed.
class DenseCache {
public:
    DenseCache(const Workspace& ws, const ExperimentConfig& cfg) : ws_(ws), cfg_(cfg) {}

    const DenseResult& get(std::uint64_t seed) {
        std::lock_guard<std::mutex> lock(mu_);
        auto it = cache_.find(seed);
        if (it != cache_.end()) return it->second;
        RetrainConfig dc = cfg_.dense;
        dc.seed = seed;
        const ParamVector theta0 = ws_.net.init_params(seed);
        DenseResult res = train_dense(ws_.net, ws_.data.train, ws_.data.test, dc, theta0,
                                      rewind_epoch_of(cfg_));
        res.record.seed = seed;
        return cache_.emplace(seed, std::move(res)).first->second;
    }

private:
    const Workspace& ws_;
    const ExperimentConfig& cfg_;
    std::mutex mu_;
    std::map<std::uint64_t, DenseResult> cache_;
};

struct CellOutput {
    RunRecord record;
    BinaryMask mask;
    ParamVector theta;
    bool has_mask = false;
    MaskScores scores;
    bool has_scores = false;
};

CellOutput run_cell(const Workspace& ws, const ExperimentConfig& cfg, DenseCache& cache, double p,
                    std::uint64_t seed) {
    CellOutput out;
    const Network& net = ws.net;
    const Dataset& train = ws.data.train;
    const Dataset& test = ws.data.test;
    const auto target = cfg.method == "dense"
                            ? SparsityTarget::make(0.0, ws.gm.n, ws.gm.group_count())
                            : SparsityTarget::make(p, ws.gm.n, ws.gm.group_count(), cfg.per_layer_budget);

    RetrainConfig retrain = cfg.retrain;
    retrain.seed = seed;

    if (cfg.method == "dense") {
        const DenseResult& dense = cache.get(seed);
        out.record = dense.record;
        out.theta = dense.theta;
        return out;
    }
    if (cfg.method == "bip") {
        const DenseResult& dense = cache.get(seed);
        BipConfig bc = cfg.bip;
        bc.seed = seed;
        BipResult res = bip_train(net, train, test, target, ws.gm, bc, dense.theta);
        out.record = std::move(res.record);
        out.mask = std::move(res.mask);
        out.theta = std::move(res.theta);
        out.scores = std::move(res.scores);
        out.has_mask = out.has_scores = true;
        if (cfg.bip_retrain_after) {
            GradCounters counters{out.record.theta_grad_evals, out.record.m_grad_evals};
            retrain_masked(net, train, test, out.mask, retrain, out.theta, out.record, counters);
            out.record.final_test_acc = out.record.rows.back().test_acc;
            out.record.theta_grad_evals = counters.theta;
        }
        return out;
    }
    if (cfg.method == "omp") {
        const DenseResult& dense = cache.get(seed);
        PruneResult res = omp_run(net, train, test, target, ws.gm, retrain, dense.theta,
                                  dense.snapshots.back().params);
        out.record = std::move(res.record);
        out.mask = std::move(res.mask);
        out.theta = std::move(res.theta);
        out.has_mask = true;
        return out;
    }
    if (cfg.method == "random") {
        const DenseResult& dense = cache.get(seed);
        out.mask = random_mask(target, ws.gm, seed);
        out.theta = dense.snapshots.back().params;
        out.record.method = "random";
        out.record.seed = seed;
        out.record.target_sparsity = target.p;
        GradCounters counters;
        retrain_masked(net, train, test, out.mask, retrain, out.theta, out.record, counters);
        out.record.final_test_acc = out.record.rows.back().test_acc;
        out.record.realized_sparsity = out.record.rows.back().sparsity;
        out.record.theta_grad_evals = counters.theta;
        out.has_mask = true;
        return out;
    }
    if (cfg.method == "snip") {
        const ParamVector theta0 = net.init_params(seed);
        std::vector<int> order(static_cast<std::size_t>(train.size()));
        std::iota(order.begin(), order.end(), 0);
        Rng rng(mix64(seed, 0x541b));
        rng.shuffle(order);
        order.resize(static_cast<std::size_t>(
            std::min<std::int64_t>(train.size(), cfg.snip_batch)));
        out.mask = snip_mask(net, theta0, train.gather(order), target, ws.gm);
        out.theta = theta0;
        out.record.method = "snip";
        out.record.seed = seed;
        out.record.target_sparsity = target.p;
        GradCounters counters;
        counters.theta = 1;  // the saliency gradient
        retrain_masked(net, train, test, out.mask, retrain, out.theta, out.record, counters);
        out.record.final_test_acc = out.record.rows.back().test_acc;
        out.record.realized_sparsity = out.record.rows.back().sparsity;
        out.record.theta_grad_evals = counters.theta;
        out.has_mask = true;
        return out;
    }
    if (cfg.method == "hydra") {
        const DenseResult& dense = cache.get(seed);
        BipConfig mask_cfg = cfg.bip;
        mask_cfg.seed = seed;
        PruneResult res = hydra_run(net, train, test, target, ws.gm, mask_cfg, retrain, dense.theta);
        out.record = std::move(res.record);
        out.mask = std::move(res.mask);
        out.theta = std::move(res.theta);
        out.has_mask = true;
        return out;
    }
    if (cfg.method == "imp") {
        ImpSchedule sched = cfg.imp;
        sched.p = p;
        if (sched.rewind_epoch < 0) sched.rewind_epoch = rewind_epoch_of(cfg);
        RetrainConfig dc = cfg.dense;
        dc.seed = seed;
        if (sched.retrain_epochs <= 0) sched.retrain_epochs = cfg.retrain.epochs;
        PruneResult res = imp_run(net, train, test, ws.gm, sched, dc, net.init_params(seed));
        out.record = std::move(res.record);
        out.record.seed = seed;
        out.mask = std::move(res.mask);
        out.theta = std::move(res.theta);
        out.has_mask = true;
        return out;
    }
    throw config_error("unhandled method " + cfg.method);
}

}  // namespace

std::vector<RunRecord> run_experiment(const ExperimentConfig& cfg) {
    const auto violations = validate_config(cfg);
    if (!violations.empty()) {
        std::string msg = "invalid configuration:";
        for (const std::string& v : violations) msg += "\n  - " + v;
        throw config_error(msg);
    }

    const fs::path out_dir(cfg.out_dir);
    if (fs::exists(out_dir / "summary.csv") && !cfg.force) {
        throw config_error("output directory '" + cfg.out_dir +
                           "' already holds results; pass --force to overwrite");
    }
    fs::create_directories(out_dir);

    const Workspace ws = build_workspace(cfg);
    DenseCache cache(ws, cfg);

    std::vector<std::pair<double, std::uint64_t>> cells;
    if (cfg.method == "dense") {
        for (std::uint64_t s : cfg.seeds) cells.emplace_back(0.0, s);
    } else {
        for (double p : cfg.sparsities)
            for (std::uint64_t s : cfg.seeds) cells.emplace_back(p, s);
    }

    int threads = 1;
    if (const char* env = std::getenv("BIP_THREADS")) {
        threads = std::max(1, std::atoi(env));
    }
    threads = std::min<int>(threads, static_cast<int>(cells.size()));

    std::vector<CellOutput> outputs(cells.size());
    std::atomic<std::size_t> next{0};
    std::mutex err_mu;
    std::exception_ptr first_error;

    auto worker = [&]() {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= cells.size()) return;
            try {
                outputs[i] = run_cell(ws, cfg, cache, cells[i].first, cells[i].second);
            } catch (...) {
                std::lock_guard<std::mutex> lock(err_mu);
                if (!first_error) first_error = std::current_exception();
                return;
            }
        }
    };
    if (threads <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
        for (std::thread& t : pool) t.join();
    }
    if (first_error) std::rethrow_exception(first_error);

    // deterministic output order regardless of the worker schedule
    std::vector<std::size_t> order(cells.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (cells[a].first != cells[b].first) return cells[a].first < cells[b].first;
        return cells[a].second < cells[b].second;
    });

    std::vector<RunRecord> records;
    for (std::size_t idx : order) {
        const CellOutput& out = outputs[idx];
        const std::string stem = "run_" + cfg.method + "_p" + sparsity_tag(cells[idx].first) + "_s" +
                                 std::to_string(cells[idx].second);
        {
            std::ofstream f(out_dir / (stem + ".csv"));
            if (!f) throw config_error("cannot write " + (out_dir / (stem + ".csv")).string());
            write_run_csv(f, out.record);
        }
        write_checkpoint_file((out_dir / (stem + ".ckpt")).string(), ws.net.layout(), out.theta,
                              out.has_mask ? &out.mask.bits : nullptr);
        if (out.has_scores) {
            std::ofstream f(out_dir / (stem + "_mask.csv"));
            write_mask_csv(f, out.scores, out.mask, ws.gm);
        }
        records.push_back(out.record);
    }
    {
        std::ofstream f(out_dir / "summary.csv");
        write_summary_csv(f, records);
    }
    {
        std::ofstream f(out_dir / "config.toml");
        write_config_toml(f, cfg);
    }
    return records;
}

namespace {

struct Key {
    std::string method;
    double p;
    bool operator<(const Key& o) const {
        if (method != o.method) return method < o.method;
        return p < o.p;
    }
};

std::map<Key, std::map<std::uint64_t, double>> accuracy_table(std::span<const RunRecord> records) {
    std::map<Key, std::map<std::uint64_t, double>> table;
    for (const RunRecord& r : records) {
        table[{r.method, r.target_sparsity}][r.seed] = r.final_test_acc;
    }
    return table;
}

double mean_of(const std::map<std::uint64_t, double>& by_seed) {
    double acc = 0.0;
    for (const auto& [_, v] : by_seed) acc += v;
    return acc / static_cast<double>(by_seed.size());
}

}  // namespace

TicketReport winning_ticket_report(std::span<const RunRecord> records,
                                   std::span<const RunRecord> dense_records) {
    if (dense_records.empty()) throw config_error("winning_ticket_report: no dense records");
    std::map<std::uint64_t, double> dense_by_seed;
    for (const RunRecord& r : dense_records) dense_by_seed[r.seed] = r.final_test_acc;

    TicketReport rep;
    for (const auto& [key, by_seed] : accuracy_table(records)) {
        if (key.method == "dense") continue;
        std::string mismatch;
        if (by_seed.size() != dense_by_seed.size()) mismatch = "seed count differs";
        for (const auto& [s, _] : by_seed) {
            if (!dense_by_seed.count(s)) mismatch = "seed " + std::to_string(s) + " missing from dense";
        }
        if (!mismatch.empty()) {
            throw config_error("winning_ticket_report: seed sets mismatch for " + key.method + " (" +
                               mismatch + ")");
        }
        TicketCell cell;
        cell.method = key.method;
        cell.sparsity = key.p;
        cell.sparse_mean = mean_of(by_seed);
        cell.dense_mean = mean_of(dense_by_seed);
        cell.winning = cell.sparse_mean >= cell.dense_mean;
        if (!rep.sparsest.count(cell.method)) rep.sparsest[cell.method] = std::nullopt;
        if (cell.winning) {
            auto& best = rep.sparsest[cell.method];
            if (!best || cell.sparsity > *best) best = cell.sparsity;
        }
        rep.cells.push_back(std::move(cell));
    }
    return rep;
}

void print_ticket_report(std::ostream& os, const TicketReport& rep) {
    os << "method      sparsity  sparse_acc  dense_acc  winning\n";
    char buf[160];
    for (const TicketCell& c : rep.cells) {
        std::snprintf(buf, sizeof buf, "%-10s  %8.4f  %10.4f  %9.4f  %s\n", c.method.c_str(), c.sparsity,
                      c.sparse_mean, c.dense_mean, c.winning ? "yes" : "no");
        os << buf;
    }
    os << "\nsparsest winning ticket per method:\n";
    for (const auto& [method, p] : rep.sparsest) {
        if (p) {
            std::snprintf(buf, sizeof buf, "  %-10s %.4f\n", method.c_str(), *p);
            os << buf;
        } else {
            os << "  " << method << " x (none found)\n";
        }
    }
}

std::vector<TradeoffRow> emit_tradeoff_plot(std::span<const RunRecord> records,
                                            std::span<const RunRecord> dense_records,
                                            const std::string& out_dir) {
    if (records.empty()) throw config_error("emit_tradeoff_plot: no records");
    std::vector<TradeoffRow> rows;
    for (const auto& [key, by_seed] : accuracy_table(records)) {
        TradeoffRow row;
        row.method = key.method;
        row.sparsity = key.p;
        row.acc_mean = mean_of(by_seed);
        double var = 0.0;
        for (const auto& [_, v] : by_seed) var += (v - row.acc_mean) * (v - row.acc_mean);
        row.acc_std = std::sqrt(var / static_cast<double>(by_seed.size()));
        rows.push_back(std::move(row));
    }

    double dense_mean = 0.0;
    if (!dense_records.empty()) {
        for (const RunRecord& r : dense_records) dense_mean += r.final_test_acc;
        dense_mean /= static_cast<double>(dense_records.size());
    }

    fs::create_directories(out_dir);
    {
        std::ofstream f(fs::path(out_dir) / "tradeoff.csv");
        f << "method,sparsity,acc_mean,acc_std\n";
        for (const TradeoffRow& r : rows) {
            f << r.method << ',' << fmt_g17(r.sparsity) << ',' << fmt_g17(r.acc_mean) << ','
              << fmt_g17(r.acc_std) << '\n';
        }
    }
    {
        std::ofstream f(fs::path(out_dir) / "plot.gp");
        f << "set datafile separator ','\n"
          << "set xlabel 'sparsity'\nset ylabel 'test accuracy'\nset key bottom left\n"
          << "set term pngcairo size 800,600\nset output 'tradeoff.png'\n";
        std::set<std::string> methods;
        for (const TradeoffRow& r : rows) methods.insert(r.method);
        f << "plot ";
        bool first = true;
        for (const std::string& m : methods) {
            if (!first) f << ", \\\n     ";
            first = false;
            f << "'< grep \"^" << m << ",\" tradeoff.csv' using 2:($3-$4):($3+$4) "
              << "with filledcurves fs transparent solid 0.2 notitle, \\\n     "
              << "'< grep \"^" << m << ",\" tradeoff.csv' using 2:3 with linespoints title '" << m << "'";
        }
        if (!dense_records.empty()) {
            f << ", \\\n     " << dense_mean << " with lines dashtype 2 lc rgb 'black' title 'dense'";
        }
        f << '\n';
    }
    return rows;
}

CostReport cost_report(std::span<const RunRecord> records) {
    CostReport rep;
    std::map<std::string, std::map<std::pair<double, int>, CostRow>> by_method;
    for (const RunRecord& r : records) {
        CostRow row;
        row.method = r.method;
        row.sparsity = r.target_sparsity;
        row.rounds = r.rounds;
        row.theta_grad_evals = r.theta_grad_evals;
        row.m_grad_evals = r.m_grad_evals;
        auto& slot = by_method[r.method];
        const auto key = std::make_pair(r.target_sparsity, r.rounds);
        if (auto it = slot.find(key); it != slot.end()) {
            // seeds share the loop structure; counters must agree exactly
            if (it->second.theta_grad_evals != row.theta_grad_evals ||
                it->second.m_grad_evals != row.m_grad_evals) {
                rep.violations.push_back(r.method + ": counters differ across seeds at p=" +
                                         sparsity_tag(r.target_sparsity));
            }
        } else {
            slot[key] = row;
        }
    }
    const std::set<std::string> agnostic = {"bip", "omp", "snip", "hydra", "random", "dense"};
    for (const auto& [method, cells] : by_method) {
        const CostRow* first = nullptr;
        for (const auto& [key, row] : cells) {
            rep.rows.push_back(row);
            if (!agnostic.count(method)) continue;
            if (!first) {
                first = &row;
            } else if (row.theta_grad_evals != first->theta_grad_evals ||
                       row.m_grad_evals != first->m_grad_evals) {
                rep.violations.push_back(method + ": gradient counters vary with sparsity");
            }
        }
    }
    // IMP cost must grow with the round count when several are present
    std::map<int, std::int64_t> imp_by_rounds;
    for (const RunRecord& r : records) {
        if (r.method == "imp") imp_by_rounds[r.rounds] = r.theta_grad_evals;
    }
    std::int64_t prev = -1;
    for (const auto& [rounds, evals] : imp_by_rounds) {
        if (prev >= 0 && evals <= prev) rep.violations.push_back("imp: cost does not grow with rounds");
        prev = evals;
    }
    return rep;
}

void print_cost_report(std::ostream& os, const CostReport& rep) {
    os << "method      sparsity  rounds  theta_grad_evals  m_grad_evals\n";
    char buf[160];
    for (const CostRow& r : rep.rows) {
        std::snprintf(buf, sizeof buf, "%-10s  %8.4f  %6d  %16lld  %12lld\n", r.method.c_str(), r.sparsity,
                      r.rounds, static_cast<long long>(r.theta_grad_evals),
                      static_cast<long long>(r.m_grad_evals));
        os << buf;
    }
    for (const std::string& v : rep.violations) os << "VIOLATION: " << v << '\n';
}

void write_config_toml(std::ostream& os, const ExperimentConfig& cfg) {
    auto list_d = [](const std::vector<double>& v) {
        std::string s = "[";
        for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + fmt_g17(v[i]);
        return s + "]";
    };
    auto list_u = [](const std::vector<std::uint64_t>& v) {
        std::string s = "[";
        for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + std::to_string(v[i]);
        return s + "]";
    };
    os << "model = \"" << cfg.model << "\"\n"
       << "method = \"" << cfg.method << "\"\n"
       << "granularity = \"" << cfg.granularity << "\"\n"
       << "sparsity = " << list_d(cfg.sparsities) << "\n"
       << "seeds = " << list_u(cfg.seeds) << "\n"
       << "out_dir = \"" << cfg.out_dir << "\"\n"
       << "per_layer_budget = " << (cfg.per_layer_budget ? "true" : "false") << "\n"
       << "rewind_epoch = " << cfg.rewind_epoch << "\n"
       << "bip_retrain_after = " << (cfg.bip_retrain_after ? "true" : "false") << "\n"
       << "snip_batch = " << cfg.snip_batch << "\n\n"
       << "[data]\n"
       << "dataset = \"" << cfg.dataset << "\"\n"
       << "blobs_classes = " << cfg.blobs_classes << "\n"
       << "blobs_per_class = " << cfg.blobs_per_class << "\n"
       << "blobs_dim = " << cfg.blobs_dim << "\n"
       << "blobs_separation = " << fmt_g17(cfg.blobs_separation) << "\n"
       << "data_seed = " << cfg.data_seed << "\n"
       << "idx_images = \"" << cfg.idx_images << "\"\n"
       << "idx_labels = \"" << cfg.idx_labels << "\"\n"
       << "idx_test_images = \"" << cfg.idx_test_images << "\"\n"
       << "idx_test_labels = \"" << cfg.idx_test_labels << "\"\n"
       << "idx_pool8 = " << (cfg.idx_pool8 ? "true" : "false") << "\n\n"
       << "[dense]\n"
       << "epochs = " << cfg.dense.epochs << "\n"
       << "lr = " << fmt_g17(cfg.dense.lr) << "\n"
       << "schedule = \"" << to_string(cfg.dense.schedule) << "\"\n"
       << "weight_decay = " << fmt_g17(cfg.dense.weight_decay) << "\n"
       << "batch_size = " << cfg.dense.batch_size << "\n\n"
       << "[retrain]\n"
       << "epochs = " << cfg.retrain.epochs << "\n"
       << "lr = " << fmt_g17(cfg.retrain.lr) << "\n"
       << "schedule = \"" << to_string(cfg.retrain.schedule) << "\"\n"
       << "weight_decay = " << fmt_g17(cfg.retrain.weight_decay) << "\n"
       << "batch_size = " << cfg.retrain.batch_size << "\n\n"
       << "[bip]\n"
       << "alpha = " << fmt_g17(cfg.bip.alpha) << "\n"
       << "beta = " << fmt_g17(cfg.bip.beta) << "\n"
       << "gamma = " << fmt_g17(cfg.bip.gamma) << "\n"
       << "theta_decay = " << fmt_g17(cfg.bip.theta_decay) << "\n"
       << "lower_steps = " << cfg.bip.lower_steps << "\n"
       << "epochs = " << cfg.bip.epochs << "\n"
       << "batch_size = " << cfg.bip.batch_size << "\n"
       << "batch_scheme = \"" << to_string(cfg.bip.batch_scheme) << "\"\n"
       << "ig_free = " << (cfg.bip.ig_free ? "true" : "false") << "\n"
       << "group_reduce_mean = " << (cfg.bip.group_reduce_mean ? "true" : "false") << "\n"
       << "ig_binary_mask = " << (cfg.bip.ig_binary_mask ? "true" : "false") << "\n"
       << "debug_checks = " << (cfg.bip.debug_checks ? "true" : "false") << "\n\n"
       << "[imp]\n"
       << "rounds = " << cfg.imp.rounds << "\n"
       << "retrain_epochs = " << cfg.imp.retrain_epochs << "\n";
}

}  // namespace bip
