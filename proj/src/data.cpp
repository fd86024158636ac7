#include "bip/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>

#include "bip/errors.hpp"
#include "bip/rng.hpp"

namespace bip {

Batch Dataset::gather(std::span<const int> idx) const {
    if (idx.empty()) throw usage_error("gather: empty index set");
    std::vector<int> shape = inputs.shape;
    const std::int64_t row = shape_numel(shape) / shape[0];
    shape[0] = static_cast<int>(idx.size());
    Tensor x = Tensor::zeros(shape);
    std::vector<int> y(idx.size());
    for (std::size_t i = 0; i < idx.size(); ++i) {
        const int r = idx[i];
        if (r < 0 || r >= size()) throw usage_error("gather: index out of range");
        std::copy_n(inputs.data.begin() + r * row, row, x.data.begin() + static_cast<std::int64_t>(i) * row);
        y[i] = labels[static_cast<std::size_t>(r)];
    }
    return Batch{std::move(x), std::move(y)};
}

DatasetPair make_blobs(int classes, int per_class, int dim, double separation, std::uint64_t seed) {
    if (classes < 2) throw config_error("make_blobs: need at least 2 classes");
    if (per_class < 2 || dim < 2) throw config_error("make_blobs: per_class >= 2 and dim >= 2 required");
    Rng rng(mix64(seed, 0xb10b5));
    const int n = classes * per_class;
    Tensor x = Tensor::zeros({n, dim});
    std::vector<int> y(static_cast<std::size_t>(n));
    const double two_pi = 6.283185307179586476925286766559;
    for (int c = 0; c < classes; ++c) {
        const double cx = separation * std::cos(two_pi * c / classes);
        const double cy = separation * std::sin(two_pi * c / classes);
        for (int s = 0; s < per_class; ++s) {
            const int r = c * per_class + s;
            double* row = &x.data[static_cast<std::size_t>(r) * static_cast<std::size_t>(dim)];
            for (int d = 0; d < dim; ++d) row[d] = rng.gauss();
            row[0] += cx;
            row[1] += cy;
            y[static_cast<std::size_t>(r)] = c;
        }
    }
    std::vector<int> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    rng.shuffle(order);

    const int n_test = n / 5;
    const int n_train = n - n_test;
    auto take = [&](int begin, int count, const char* split) {
        Dataset d;
        d.classes = classes;
        d.split = split;
        d.inputs = Tensor::zeros({count, dim});
        d.labels.resize(static_cast<std::size_t>(count));
        for (int i = 0; i < count; ++i) {
            const int src = order[static_cast<std::size_t>(begin + i)];
            std::copy_n(x.data.begin() + static_cast<std::int64_t>(src) * dim, dim,
                        d.inputs.data.begin() + static_cast<std::int64_t>(i) * dim);
            d.labels[static_cast<std::size_t>(i)] = y[static_cast<std::size_t>(src)];
        }
        return d;
    };
    DatasetPair pair{take(0, n_train, "train"), take(n_train, n_test, "test")};

    // standardize with train statistics only
    std::vector<double> mean(static_cast<std::size_t>(dim), 0.0), var(static_cast<std::size_t>(dim), 0.0);
    for (int i = 0; i < n_train; ++i)
        for (int d = 0; d < dim; ++d) mean[static_cast<std::size_t>(d)] += pair.train.inputs.data[static_cast<std::size_t>(i * dim + d)];
    for (double& m : mean) m /= n_train;
    for (int i = 0; i < n_train; ++i)
        for (int d = 0; d < dim; ++d) {
            const double v = pair.train.inputs.data[static_cast<std::size_t>(i * dim + d)] - mean[static_cast<std::size_t>(d)];
            var[static_cast<std::size_t>(d)] += v * v;
        }
    for (double& v : var) v = std::sqrt(v / n_train + 1e-12);
    for (Dataset* ds : {&pair.train, &pair.test}) {
        const int rows = static_cast<int>(ds->size());
        for (int i = 0; i < rows; ++i)
            for (int d = 0; d < dim; ++d) {
                double& v = ds->inputs.data[static_cast<std::size_t>(i * dim + d)];
                v = (v - mean[static_cast<std::size_t>(d)]) / var[static_cast<std::size_t>(d)];
            }
    }
    return pair;
}

namespace {

std::uint32_t read_be32(std::ifstream& f, const std::string& path, std::size_t& offset) {
    unsigned char b[4];
    f.read(reinterpret_cast<char*>(b), 4);
    if (!f) throw config_error(path + ": truncated at byte " + std::to_string(offset));
    offset += 4;
    return (static_cast<std::uint32_t>(b[0]) << 24) | (static_cast<std::uint32_t>(b[1]) << 16) |
           (static_cast<std::uint32_t>(b[2]) << 8) | static_cast<std::uint32_t>(b[3]);
}

}  // namespace

Dataset load_idx(const std::string& images_path, const std::string& labels_path, bool pool8) {
    std::ifstream fi(images_path, std::ios::binary);
    if (!fi) throw config_error("cannot open " + images_path);
    std::size_t off = 0;
    const std::uint32_t magic_i = read_be32(fi, images_path, off);
    if (magic_i != 0x00000803u) {
        throw config_error(images_path + ": bad magic 0x" + [&] {
            char buf[16];
            std::snprintf(buf, sizeof buf, "%08x", magic_i);
            return std::string(buf);
        }() + " at byte 0 (want 00000803)");
    }
    const std::uint32_t count = read_be32(fi, images_path, off);
    const std::uint32_t rows = read_be32(fi, images_path, off);
    const std::uint32_t cols = read_be32(fi, images_path, off);
    std::vector<unsigned char> pixels(static_cast<std::size_t>(count) * rows * cols);
    fi.read(reinterpret_cast<char*>(pixels.data()), static_cast<std::streamsize>(pixels.size()));
    if (static_cast<std::size_t>(fi.gcount()) != pixels.size()) {
        throw config_error(images_path + ": truncated at byte " + std::to_string(off + static_cast<std::size_t>(std::max<std::streamsize>(fi.gcount(), 0))));
    }

    std::ifstream fl(labels_path, std::ios::binary);
    if (!fl) throw config_error("cannot open " + labels_path);
    std::size_t loff = 0;
    const std::uint32_t magic_l = read_be32(fl, labels_path, loff);
    if (magic_l != 0x00000801u) throw config_error(labels_path + ": bad magic at byte 0 (want 00000801)");
    const std::uint32_t lcount = read_be32(fl, labels_path, loff);
    if (lcount != count) {
        throw config_error("image count " + std::to_string(count) + " != label count " + std::to_string(lcount));
    }
    std::vector<unsigned char> raw_labels(lcount);
    fl.read(reinterpret_cast<char*>(raw_labels.data()), static_cast<std::streamsize>(raw_labels.size()));
    if (static_cast<std::size_t>(fl.gcount()) != raw_labels.size()) {
        throw config_error(labels_path + ": truncated at byte " + std::to_string(loff));
    }

    Dataset d;
    d.split = "train";
    int maxlab = 0;
    d.labels.resize(count);
    for (std::uint32_t i = 0; i < count; ++i) {
        d.labels[i] = raw_labels[i];
        maxlab = std::max(maxlab, d.labels[i]);
    }
    d.classes = maxlab + 1;

    const int H = static_cast<int>(rows), W = static_cast<int>(cols);
    if (pool8) {
        const int T = 8;
        d.inputs = Tensor::zeros({static_cast<int>(count), 1, T, T});
        for (std::uint32_t i = 0; i < count; ++i) {
            const unsigned char* img = &pixels[static_cast<std::size_t>(i) * H * W];
            for (int a = 0; a < T; ++a) {
                const int r0 = a * H / T, r1 = (a + 1) * H / T;
                for (int b = 0; b < T; ++b) {
                    const int c0 = b * W / T, c1 = (b + 1) * W / T;
                    double acc = 0.0;
                    for (int r = r0; r < r1; ++r)
                        for (int c = c0; c < c1; ++c) acc += img[r * W + c] / 255.0;
                    d.inputs.data[(static_cast<std::size_t>(i) * T + a) * T + b] = acc / ((r1 - r0) * (c1 - c0));
                }
            }
        }
    } else {
        d.inputs = Tensor::zeros({static_cast<int>(count), 1, H, W});
        for (std::size_t i = 0; i < pixels.size(); ++i) d.inputs.data[i] = pixels[i] / 255.0;
    }
    return d;
}

BatchScheme parse_batch_scheme(const std::string& s) {
    if (s == "random") return BatchScheme::random;
    if (s == "same") return BatchScheme::same;
    if (s == "reverse") return BatchScheme::reverse;
    throw config_error("unknown batch scheme '" + s + "' (random|same|reverse)");
}

std::string to_string(BatchScheme s) {
    switch (s) {
        case BatchScheme::random: return "random";
        case BatchScheme::same: return "same";
        case BatchScheme::reverse: return "reverse";
    }
    return "?";
}

BatchScheduler::BatchScheduler(const Dataset& ds, BatchScheme scheme, int batch_size, std::uint64_t seed)
    : ds_(&ds), scheme_(scheme), batch_size_(batch_size), seed_(seed) {
    if (batch_size <= 0) throw config_error("batch size must be positive");
    if (ds.size() == 0) throw config_error("empty dataset");
    batches_ = static_cast<int>((ds.size() + batch_size - 1) / batch_size);
}

std::vector<int> BatchScheduler::perm(int epoch, int level) const {
    std::vector<int> p(static_cast<std::size_t>(ds_->size()));
    std::iota(p.begin(), p.end(), 0);
    Rng rng(mix64(seed_, static_cast<std::uint64_t>(epoch) + 1, static_cast<std::uint64_t>(level) + 17));
    rng.shuffle(p);
    return p;
}

std::vector<int> BatchScheduler::slice(const std::vector<int>& p, int step) const {
    const std::int64_t begin = static_cast<std::int64_t>(step) * batch_size_;
    const std::int64_t end = std::min<std::int64_t>(begin + batch_size_, ds_->size());
    return std::vector<int>(p.begin() + begin, p.begin() + end);  // short last batch kept
}

std::vector<int> BatchScheduler::lower_indices(int epoch, int step) const {
    if (step < 0 || step >= batches_) throw usage_error("step out of range");
    return slice(perm(epoch, 0), step);
}

std::vector<int> BatchScheduler::upper_indices(int epoch, int step) const {
    if (step < 0 || step >= batches_) throw usage_error("step out of range");
    switch (scheme_) {
        case BatchScheme::same: return lower_indices(epoch, step);
        case BatchScheme::reverse: return slice(perm(epoch, 0), batches_ - 1 - step);
        case BatchScheme::random: return slice(perm(epoch, 1), step);
    }
    return {};
}

std::pair<Batch, Batch> BatchScheduler::next_batches(int epoch, int step) const {
    return {ds_->gather(lower_indices(epoch, step)), ds_->gather(upper_indices(epoch, step))};
}

Batch BatchScheduler::lower_batch(int epoch, int step, int extra) const {
    const auto p = perm(epoch, 0);
    return ds_->gather(slice(p, (step + extra) % batches_));
}

}  // namespace bip
