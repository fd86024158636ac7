#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace bip {

// Dense row-major tensor, 64-bit values. Plain value type; safe to copy and
// move across threads. Shape [] is not used; scalars are shape {1}.
struct Tensor {
    std::vector<int> shape;
    std::vector<double> data;

    Tensor() = default;
    Tensor(std::vector<int> s, std::vector<double> d);

    static Tensor zeros(std::vector<int> shape);
    static Tensor scalar(double v) { return Tensor({1}, {v}); }

    std::int64_t size() const { return static_cast<std::int64_t>(data.size()); }
    bool same_shape(const Tensor& o) const { return shape == o.shape; }
    std::string shape_str() const;
};

std::int64_t shape_numel(const std::vector<int>& shape);

// Reverse-mode tape. Nodes are appended in topological order by the op
// builders; backward() walks them once in reverse. One tape per evaluation,
// confined to a single thread.
class Tape {
public:
    using NodeId = int;

    NodeId input(Tensor value);

    NodeId matmul(NodeId a, NodeId b);
    NodeId conv2d(NodeId x, NodeId kernel);  // x [B,Cin,H,W], kernel [Cout,Cin,kh,kw]; stride 1, no padding
    NodeId bias_add(NodeId x, NodeId bias);  // x [B,D]+[D] or [B,C,H,W]+[C]
    NodeId relu(NodeId x);
    NodeId tanh(NodeId x);
    NodeId flatten(NodeId x);  // [B,...] -> [B, prod]
    NodeId mul(NodeId a, NodeId b);
    NodeId add(NodeId a, NodeId b);
    NodeId sum(NodeId x);  // -> scalar
    NodeId softmax_cross_entropy(NodeId logits, std::vector<int> labels);  // mean CE -> scalar

    const Tensor& value(NodeId id) const;

    // Seeds the output node and propagates to every node once. Gradients for
    // all nodes (leaves included) are then available through grad().
    void backward(NodeId output, const Tensor& seed);
    const Tensor& grad(NodeId id) const;

    // Error messages are prefixed with the current context (set by callers
    // that know which model layer is being evaluated).
    void set_context(std::string ctx) { context_ = std::move(ctx); }

    int node_count() const { return static_cast<int>(nodes_.size()); }

private:
    enum class Op : std::uint8_t {
        input, matmul, conv2d, bias_add, relu, tanh, flatten, mul, add, sum, softmax_ce
    };

    struct Node {
        Op op;
        std::array<NodeId, 2> parents{-1, -1};
        Tensor value;
        Tensor aux;               // softmax probabilities
        std::vector<int> labels;  // softmax_ce only
    };

    NodeId push(Node n);
    const Tensor& val(NodeId id) const { return nodes_[static_cast<std::size_t>(id)].value; }
    void check_id(NodeId id, const char* who) const;
    void check_finite(const Tensor& t, const char* op) const;
    [[noreturn]] void fail_shape(const char* op, const std::string& detail) const;

    std::vector<Node> nodes_;
    std::vector<Tensor> grads_;
    bool backward_done_ = false;
    std::string context_;
};

}  // namespace bip
