#pragma once

#include <cstdint>
#include <unordered_map>
#include <vector>

#include "schnet/tensor.hpp"

namespace schnet::ad {

class Graph;

// Handle to a node on a Graph. Cheap to copy; the Graph owns all storage.
struct Variable {
    Graph* graph = nullptr;
    std::uint32_t id = 0;

    bool valid() const { return graph != nullptr; }
    const Tensor& value() const;
    const std::vector<std::size_t>& shape() const;
    bool requires_grad() const;
};

enum class Op : std::uint8_t {
    leaf,
    constant,
    add,
    sub,
    mul,
    div_safe,
    scale,
    exp_op,
    square,
    sigmoid,
    ssp,
    matmul,
    transpose,
    sum_all,
    broadcast_scalar,
    broadcast_rows,
    sum_over_rows,
    broadcast_cols,
    sum_over_cols,
    segment_sum,
    gather_rows,
    concat_rows,
    slice_rows,
    pad_rows,
    l2_norm_rows,
};

struct Node {
    Op op;
    bool requires_grad = false;
    std::uint32_t inputs[2] = {0, 0};
    std::uint8_t n_inputs = 0;
    Tensor value;
    std::vector<std::int64_t> idx;  // segment ids / gather indices / row offsets
    double c = 0.0;                 // scale constant
};

// Gradients returned by backward(). unreachable lists requested variables
// that were not connected to the loss; their gradients are zero.
struct GradientMap {
    std::unordered_map<std::uint32_t, Variable> grads;
    std::vector<std::uint32_t> unreachable;

    const Variable& at(const Variable& v) const { return grads.at(v.id); }
    bool was_unreachable(const Variable& v) const;
};

// Append-only computation tape. Forward values are computed eagerly as
// nodes are appended; backward() appends the gradient computation as new
// nodes, which is what makes second derivatives possible.
class Graph {
public:
    Variable leaf(Tensor value, bool requires_grad = true);
    Variable constant(Tensor value);

    std::size_t size() const { return nodes_.size(); }
    const Node& node(std::uint32_t id) const { return nodes_[id]; }

    // Re-runs every forward computation in place; used by tests to check
    // that backward never disturbs existing nodes.
    void recompute_forward();

    friend Variable add(Variable a, Variable b);
    friend Variable sub(Variable a, Variable b);
    friend Variable mul(Variable a, Variable b);
    friend Variable div_safe(Variable a, Variable b);
    friend Variable scale(Variable a, double c);
    friend Variable exp(Variable a);
    friend Variable square(Variable a);
    friend Variable sigmoid(Variable a);
    friend Variable ssp(Variable a);
    friend Variable matmul(Variable a, Variable b);
    friend Variable transpose(Variable a);
    friend Variable sum_all(Variable a);
    friend Variable broadcast_scalar(Variable s, std::vector<std::size_t> shape);
    friend Variable broadcast_rows(Variable v, std::size_t n);
    friend Variable sum_over_rows(Variable x);
    friend Variable broadcast_cols(Variable v, std::size_t d);
    friend Variable sum_over_cols(Variable x);
    friend Variable segment_sum(Variable x, std::vector<std::int64_t> seg,
                                std::size_t n_segments);
    friend Variable gather_rows(Variable x, std::vector<std::int64_t> idx);
    friend Variable concat_rows(Variable a, Variable b);
    friend Variable slice_rows(Variable x, std::size_t begin, std::size_t count);
    friend Variable pad_rows(Variable x, std::size_t begin, std::size_t total_rows);
    friend Variable l2_norm_rows(Variable x);

    friend GradientMap backward(Variable loss, const std::vector<Variable>& wrt,
                                bool create_graph);

private:
    Variable append(Node n);
    std::vector<Node> nodes_;
    bool grad_enabled_ = true;
};

Variable add(Variable a, Variable b);
Variable sub(Variable a, Variable b);
Variable mul(Variable a, Variable b);
Variable div_safe(Variable a, Variable b);
Variable scale(Variable a, double c);
Variable exp(Variable a);
Variable square(Variable a);
Variable sigmoid(Variable a);
Variable ssp(Variable a);
Variable matmul(Variable a, Variable b);
Variable transpose(Variable a);
Variable sum_all(Variable a);
Variable broadcast_scalar(Variable s, std::vector<std::size_t> shape);
Variable broadcast_rows(Variable v, std::size_t n);
Variable sum_over_rows(Variable x);
Variable broadcast_cols(Variable v, std::size_t d);
Variable sum_over_cols(Variable x);
Variable segment_sum(Variable x, std::vector<std::int64_t> seg,
                     std::size_t n_segments);
Variable gather_rows(Variable x, std::vector<std::int64_t> idx);
Variable concat_rows(Variable a, Variable b);
Variable slice_rows(Variable x, std::size_t begin, std::size_t count);
Variable pad_rows(Variable x, std::size_t begin, std::size_t total_rows);
Variable l2_norm_rows(Variable x);

// Dense layer applied row-wise: x[n x d_in] * w[d_in x d_out] + b[d_out].
Variable linear(Variable x, Variable w, Variable b);

// Reverse-mode gradients of a scalar loss. With create_graph=true the
// returned gradients can be differentiated again.
GradientMap backward(Variable loss, const std::vector<Variable>& wrt,
                     bool create_graph = false);

// Scalar reference versions used by the op implementations and by tests.
double ssp_scalar(double x);
double sigmoid_scalar(double x);

}  // namespace schnet::ad
