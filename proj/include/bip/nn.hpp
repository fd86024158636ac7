#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "bip/data.hpp"
#include "bip/tensor.hpp"

namespace bip {

// Flat view of all model parameters; z = m .* theta lives in vectors of this
// layout's total length.
using ParamVector = std::vector<double>;

struct LayoutEntry {
    std::string name;
    std::vector<int> shape;
    std::int64_t offset = 0;
    std::int64_t size = 0;
};

struct Layout {
    std::vector<LayoutEntry> entries;
    std::int64_t total = 0;
};

enum class Act { none, relu, tanh };

struct DenseSpec {
    int in = 0, out = 0;
    Act act = Act::none;
};
struct ConvSpec {
    int cin = 0, cout = 0, k = 3;
    Act act = Act::none;
};
struct FlattenSpec {};

using LayerSpec = std::variant<DenseSpec, ConvSpec, FlattenSpec>;

// Immutable model description. Evaluation is a pure function of (z, batch):
// all state lives in the arguments, so calls are re-entrant.
class Network {
public:
    static Network mlp_tiny();                             // 2-8-2, tanh
    static Network mlp_small(int input_dim, int classes);  // D-32-32-C, relu
    static Network cnn_tiny(int classes);                  // 1x8x8 in, two 3x3 conv x8, relu, dense head
    static Network by_id(const std::string& id, int input_dim, int classes);

    const std::string& id() const { return id_; }
    const Layout& layout() const { return layout_; }
    std::int64_t num_params() const { return layout_.total; }
    int num_classes() const { return classes_; }
    const std::vector<int>& input_shape() const { return input_shape_; }  // without batch dim
    const std::vector<LayerSpec>& layers() const { return layers_; }
    bool uses_relu() const;

    double loss_at(std::span<const double> z, const Batch& batch) const;
    // Gradient of the mean batch loss with respect to z, length n. Optionally
    // returns the loss evaluated on the same forward pass.
    ParamVector grad_z(std::span<const double> z, const Batch& batch, double* loss_out = nullptr) const;
    ParamVector init_params(std::uint64_t seed) const;
    double accuracy(std::span<const double> z, const Dataset& ds) const;

private:
    Network(std::string id, std::vector<LayerSpec> layers, std::vector<int> input_shape, int classes);

    Tape::NodeId build_forward(Tape& tape, std::span<const double> z, const Tensor& x,
                               std::vector<Tape::NodeId>* param_nodes) const;

    std::string id_;
    std::vector<LayerSpec> layers_;
    std::vector<int> input_shape_;
    int classes_ = 0;
    Layout layout_;
};

// Training checkpoint: parameters plus the derived batch-stream state. Batch
// permutations are pure functions of (seed, epoch), so seed and epoch fully
// describe the generator state.
struct Snapshot {
    int epoch = 0;
    ParamVector params;
    std::uint64_t rng_state = 0;
};

}  // namespace bip
