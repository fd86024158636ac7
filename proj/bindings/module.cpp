#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cstring>

#include "bip/baselines.hpp"
#include "bip/errors.hpp"
#include "bip/data.hpp"
#include "bip/experiment.hpp"
#include "bip/masking.hpp"
#include "bip/nn.hpp"
#include "bip/optimizer.hpp"
#include "bip/toy_bilevel.hpp"

namespace py = pybind11;
using namespace bip;

namespace {

py::array_t<double> to_array(const std::vector<double>& v) {
    return py::array_t<double>(static_cast<py::ssize_t>(v.size()), v.data());
}

py::array_t<double> tensor_to_array(const Tensor& t) {
    const std::vector<py::ssize_t> shape(t.shape.begin(), t.shape.end());
    return py::array_t<double>(shape, t.data.data());
}

std::vector<double> from_array(py::array_t<double, py::array::c_style | py::array::forcecast> a) {
    return std::vector<double>(a.data(), a.data() + a.size());
}

Tensor array_to_tensor(py::array_t<double, py::array::c_style | py::array::forcecast> a) {
    std::vector<int> shape(a.ndim());
    for (py::ssize_t i = 0; i < a.ndim(); ++i) shape[static_cast<std::size_t>(i)] = static_cast<int>(a.shape(i));
    return Tensor(shape, std::vector<double>(a.data(), a.data() + a.size()));
}

Batch make_batch(py::array_t<double, py::array::c_style | py::array::forcecast> x, std::vector<int> y) {
    return Batch{array_to_tensor(std::move(x)), std::move(y)};
}

BinaryMask mask_from_bits(const std::vector<std::uint8_t>& bits) {
    BinaryMask m;
    m.bits = bits;
    for (auto b : bits) m.retained += b;
    return m;
}

py::dict record_to_dict(const RunRecord& r) {
    py::dict d;
    d["method"] = r.method;
    d["seed"] = r.seed;
    d["target_sparsity"] = r.target_sparsity;
    d["final_test_acc"] = r.final_test_acc;
    d["realized_sparsity"] = r.realized_sparsity;
    d["theta_grad_evals"] = r.theta_grad_evals;
    d["m_grad_evals"] = r.m_grad_evals;
    py::list rows;
    for (const EpochRow& row : r.rows) {
        py::dict e;
        e["epoch"] = row.epoch;
        e["train_loss"] = row.train_loss;
        e["test_acc"] = row.test_acc;
        e["sparsity"] = row.sparsity;
        e["mask_iou"] = row.mask_iou;
        rows.append(e);
    }
    d["rows"] = rows;
    return d;
}

BipConfig bip_config_from_kwargs(double alpha, double beta, double gamma, double theta_decay,
                                 int lower_steps, int epochs, int batch_size,
                                 const std::string& batch_scheme, std::uint64_t seed, bool ig_free) {
    BipConfig cfg;
    cfg.alpha = alpha;
    cfg.beta = beta;
    cfg.gamma = gamma;
    cfg.theta_decay = theta_decay;
    cfg.lower_steps = lower_steps;
    cfg.epochs = epochs;
    cfg.batch_size = batch_size;
    cfg.batch_scheme = parse_batch_scheme(batch_scheme);
    cfg.seed = seed;
    cfg.ig_free = ig_free;
    return cfg;
}

}  // namespace

PYBIND11_MODULE(_bip, m) {
    m.doc() = "bi-level pruning core: masked training, top-k projection, baselines and FD oracles";

    py::class_<Dataset>(m, "Dataset")
        .def_property_readonly("inputs", [](const Dataset& d) { return tensor_to_array(d.inputs); })
        .def_property_readonly("labels", [](const Dataset& d) { return d.labels; })
        .def_readonly("classes", &Dataset::classes)
        .def_property_readonly("size", [](const Dataset& d) { return d.size(); });

    m.def(
        "make_blobs",
        [](int classes, int per_class, int dim, double separation, std::uint64_t seed) {
            DatasetPair p = make_blobs(classes, per_class, dim, separation, seed);
            return py::make_tuple(std::move(p.train), std::move(p.test));
        },
        py::arg("classes") = 4, py::arg("per_class") = 100, py::arg("dim") = 10,
        py::arg("separation") = 6.0, py::arg("seed") = 7);

    m.def("load_idx", &load_idx, py::arg("images_path"), py::arg("labels_path"), py::arg("pool8") = false);

    py::class_<Network>(m, "Network")
        .def_static("mlp_tiny", &Network::mlp_tiny)
        .def_static("mlp_small", &Network::mlp_small, py::arg("input_dim"), py::arg("classes"))
        .def_static("cnn_tiny", &Network::cnn_tiny, py::arg("classes"))
        .def_property_readonly("id", &Network::id)
        .def_property_readonly("num_params", &Network::num_params)
        .def("init_params", [](const Network& n, std::uint64_t seed) { return to_array(n.init_params(seed)); })
        .def("loss_at",
             [](const Network& n, py::array_t<double, py::array::c_style | py::array::forcecast> z,
                py::array_t<double, py::array::c_style | py::array::forcecast> x, std::vector<int> y) {
                 return n.loss_at(from_array(std::move(z)), make_batch(std::move(x), std::move(y)));
             },
             py::arg("z"), py::arg("x"), py::arg("y"))
        .def("grad_z",
             [](const Network& n, py::array_t<double, py::array::c_style | py::array::forcecast> z,
                py::array_t<double, py::array::c_style | py::array::forcecast> x, std::vector<int> y) {
                 return to_array(n.grad_z(from_array(std::move(z)), make_batch(std::move(x), std::move(y))));
             },
             py::arg("z"), py::arg("x"), py::arg("y"))
        .def("accuracy",
             [](const Network& n, py::array_t<double, py::array::c_style | py::array::forcecast> z,
                const Dataset& ds) { return n.accuracy(from_array(std::move(z)), ds); },
             py::arg("z"), py::arg("dataset"));

    m.def(
        "build_group_map",
        [](const Network& net, const std::string& granularity) {
            const GroupMap gm = build_group_map(net, parse_granularity(granularity));
            return gm.groups;
        },
        py::arg("net"), py::arg("granularity") = "element",
        "Returns the list of parameter-index groups for the granularity.");

    m.def(
        "project_topk",
        [](const std::vector<double>& scores, double p) {
            GroupMap gm;
            gm.n = static_cast<std::int64_t>(scores.size());
            for (std::int64_t i = 0; i < gm.n; ++i) {
                gm.groups.push_back({i});
                gm.group_layer.push_back(0);
            }
            const auto target = SparsityTarget::make(p, gm.n, gm.n);
            return project_topk(scores, target, gm).bits;
        },
        py::arg("scores"), py::arg("p"),
        "Element-granularity top-k hard thresholding of a score vector.");

    m.def(
        "mask_iou",
        [](const std::vector<std::uint8_t>& a, const std::vector<std::uint8_t>& b) {
            return mask_iou(mask_from_bits(a), mask_from_bits(b));
        },
        py::arg("a"), py::arg("b"));

    m.def(
        "init_scores",
        [](py::array_t<double, py::array::c_style | py::array::forcecast> theta, const Network& net,
           const std::string& granularity) {
            const GroupMap gm = build_group_map(net, parse_granularity(granularity));
            return init_scores(from_array(std::move(theta)), gm);
        },
        py::arg("theta"), py::arg("net"), py::arg("granularity") = "element");

    m.def(
        "train_dense",
        [](const Network& net, const Dataset& train, const Dataset& test, int epochs, double lr,
           double weight_decay, int batch_size, std::uint64_t seed, int rewind_epoch) {
            RetrainConfig cfg{epochs, lr, LrSchedule::cosine, weight_decay, batch_size, seed};
            DenseResult res = train_dense(net, train, test, cfg, net.init_params(seed), rewind_epoch);
            py::dict d;
            d["theta"] = to_array(res.theta);
            d["theta_rewind"] = to_array(res.snapshots.back().params);
            d["record"] = record_to_dict(res.record);
            return d;
        },
        py::arg("net"), py::arg("train"), py::arg("test"), py::arg("epochs") = 50, py::arg("lr") = 0.1,
        py::arg("weight_decay") = 5e-4, py::arg("batch_size") = 64, py::arg("seed") = 1,
        py::arg("rewind_epoch") = 5);

    m.def(
        "bip_train",
        [](const Network& net, const Dataset& train, const Dataset& test,
           py::array_t<double, py::array::c_style | py::array::forcecast> theta0, double p,
           const std::string& granularity, double alpha, double beta, double gamma, double theta_decay,
           int lower_steps, int epochs, int batch_size, const std::string& batch_scheme,
           std::uint64_t seed, bool ig_free) {
            const GroupMap gm = build_group_map(net, parse_granularity(granularity));
            const auto target = SparsityTarget::make(p, gm.n, gm.group_count());
            const BipConfig cfg = bip_config_from_kwargs(alpha, beta, gamma, theta_decay, lower_steps,
                                                         epochs, batch_size, batch_scheme, seed, ig_free);
            BipResult res = bip_train(net, train, test, target, gm, cfg, from_array(std::move(theta0)));
            py::dict d;
            d["mask"] = res.mask.bits;
            d["theta"] = to_array(res.theta);
            d["record"] = record_to_dict(res.record);
            return d;
        },
        py::arg("net"), py::arg("train"), py::arg("test"), py::arg("theta0"), py::arg("p"),
        py::arg("granularity") = "element", py::arg("alpha") = 0.01, py::arg("beta") = 0.1,
        py::arg("gamma") = 1.0, py::arg("theta_decay") = 0.1, py::arg("lower_steps") = 1,
        py::arg("epochs") = 30, py::arg("batch_size") = 64, py::arg("batch_scheme") = "random",
        py::arg("seed") = 1, py::arg("ig_free") = false);

    m.def(
        "omp_run",
        [](const Network& net, const Dataset& train, const Dataset& test,
           py::array_t<double, py::array::c_style | py::array::forcecast> theta_dense,
           py::array_t<double, py::array::c_style | py::array::forcecast> theta_rewind, double p,
           const std::string& granularity, int epochs, double lr, std::uint64_t seed) {
            const GroupMap gm = build_group_map(net, parse_granularity(granularity));
            const auto target = SparsityTarget::make(p, gm.n, gm.group_count());
            RetrainConfig cfg{epochs, lr, LrSchedule::step, 5e-4, 64, seed};
            PruneResult res = omp_run(net, train, test, target, gm, cfg, from_array(std::move(theta_dense)),
                                      from_array(std::move(theta_rewind)));
            py::dict d;
            d["mask"] = res.mask.bits;
            d["theta"] = to_array(res.theta);
            d["record"] = record_to_dict(res.record);
            return d;
        },
        py::arg("net"), py::arg("train"), py::arg("test"), py::arg("theta_dense"), py::arg("theta_rewind"),
        py::arg("p"), py::arg("granularity") = "element", py::arg("epochs") = 40, py::arg("lr") = 0.1,
        py::arg("seed") = 1);

    m.def(
        "magnitude_mask",
        [](py::array_t<double, py::array::c_style | py::array::forcecast> theta, double p) {
            const auto v = from_array(std::move(theta));
            GroupMap gm;
            gm.n = static_cast<std::int64_t>(v.size());
            for (std::int64_t i = 0; i < gm.n; ++i) {
                gm.groups.push_back({i});
                gm.group_layer.push_back(0);
            }
            return magnitude_mask(v, SparsityTarget::make(p, gm.n, gm.n), gm).bits;
        },
        py::arg("theta"), py::arg("p"));

    m.def(
        "gradcheck",
        [](std::uint64_t seed) {
            py::list rows;
            for (const GradCheckRow& r : run_gradcheck(seed)) {
                py::dict d;
                d["name"] = r.name;
                d["error"] = r.error;
                d["threshold"] = r.threshold;
                d["pass"] = r.pass;
                rows.append(d);
            }
            return rows;
        },
        py::arg("seed") = 17);

    py::register_exception<config_error>(m, "ConfigError");
    py::register_exception<numeric_error>(m, "NumericError");
}
