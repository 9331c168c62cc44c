#include "schnet/graph.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "schnet/kernels.hpp"

namespace schnet::ad {

namespace {
constexpr double kLn2 = 0.6931471805599453;

[[noreturn]] void shape_error(const char* op, const Tensor& a, const Tensor& b) {
    throw std::invalid_argument(std::string(op) + ": shape mismatch " +
                                shape_str(a.shape) + " vs " + shape_str(b.shape));
}

void require_same_graph(Variable a, Variable b) {
    if (a.graph != b.graph)
        throw std::invalid_argument("variables belong to different graphs");
}
}  // namespace

double ssp_scalar(double x) {
    // ln(0.5 e^x + 0.5) = softplus(x) - ln 2, overflow-safe.
    if (x > 0.0) return x + std::log1p(std::exp(-x)) - kLn2;
    return std::log1p(std::exp(x)) - kLn2;
}

double sigmoid_scalar(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

const Tensor& Variable::value() const { return graph->node(id).value; }
const std::vector<std::size_t>& Variable::shape() const { return value().shape; }
bool Variable::requires_grad() const { return graph->node(id).requires_grad; }

bool GradientMap::was_unreachable(const Variable& v) const {
    return std::find(unreachable.begin(), unreachable.end(), v.id) !=
           unreachable.end();
}

namespace {

void compute_forward(Node& n, const std::vector<Node>& nodes) {
    auto in = [&](int i) -> const Tensor& { return nodes[n.inputs[i]].value; };
    using kernels::EwOp;
    switch (n.op) {
        case Op::leaf:
        case Op::constant:
            break;
        case Op::add:
        case Op::sub:
        case Op::mul:
        case Op::div_safe: {
            const Tensor& a = in(0);
            const Tensor& b = in(1);
            n.value.shape = a.shape;
            n.value.data.resize(a.size());
            EwOp op = n.op == Op::add   ? EwOp::add
                      : n.op == Op::sub ? EwOp::sub
                      : n.op == Op::mul ? EwOp::mul
                                        : EwOp::div_safe;
            kernels::ew_binary(op, a.data.data(), b.data.data(),
                               n.value.data.data(), a.size());
            break;
        }
        case Op::scale: {
            const Tensor& a = in(0);
            n.value.shape = a.shape;
            n.value.data.resize(a.size());
            for (std::size_t i = 0; i < a.size(); ++i)
                n.value.data[i] = n.c * a.data[i];
            break;
        }
        case Op::exp_op: {
            const Tensor& a = in(0);
            n.value.shape = a.shape;
            n.value.data.resize(a.size());
            for (std::size_t i = 0; i < a.size(); ++i)
                n.value.data[i] = std::exp(a.data[i]);
            break;
        }
        case Op::square: {
            const Tensor& a = in(0);
            n.value.shape = a.shape;
            n.value.data.resize(a.size());
            for (std::size_t i = 0; i < a.size(); ++i)
                n.value.data[i] = a.data[i] * a.data[i];
            break;
        }
        case Op::sigmoid: {
            const Tensor& a = in(0);
            n.value.shape = a.shape;
            n.value.data.resize(a.size());
            for (std::size_t i = 0; i < a.size(); ++i)
                n.value.data[i] = sigmoid_scalar(a.data[i]);
            break;
        }
        case Op::ssp: {
            const Tensor& a = in(0);
            n.value.shape = a.shape;
            n.value.data.resize(a.size());
            for (std::size_t i = 0; i < a.size(); ++i)
                n.value.data[i] = ssp_scalar(a.data[i]);
            break;
        }
        case Op::matmul: {
            const Tensor& a = in(0);
            const Tensor& b = in(1);
            n.value.shape = {a.shape[0], b.shape[1]};
            n.value.data.resize(a.shape[0] * b.shape[1]);
            kernels::matmul(a.data.data(), b.data.data(), n.value.data.data(),
                            a.shape[0], a.shape[1], b.shape[1]);
            break;
        }
        case Op::transpose: {
            const Tensor& a = in(0);
            const std::size_t r = a.shape[0], c = a.shape[1];
            n.value.shape = {c, r};
            n.value.data.resize(r * c);
            for (std::size_t i = 0; i < r; ++i)
                for (std::size_t j = 0; j < c; ++j)
                    n.value.data[j * r + i] = a.data[i * c + j];
            break;
        }
        case Op::sum_all: {
            const Tensor& a = in(0);
            double s = 0.0;
            for (double v : a.data) s += v;
            n.value = Tensor::scalar(s);
            break;
        }
        case Op::broadcast_scalar: {
            const double s = in(0).data[0];
            std::vector<std::size_t> shape(n.idx.begin(), n.idx.end());
            n.value = Tensor::full(shape, s);
            break;
        }
        case Op::broadcast_rows: {
            const Tensor& v = in(0);
            const std::size_t rows = static_cast<std::size_t>(n.idx[0]);
            const std::size_t d = v.size();
            n.value.shape = {rows, d};
            n.value.data.resize(rows * d);
            for (std::size_t i = 0; i < rows; ++i)
                std::copy(v.data.begin(), v.data.end(),
                          n.value.data.begin() + i * d);
            break;
        }
        case Op::sum_over_rows: {
            const Tensor& x = in(0);
            const std::size_t rows = x.shape[0], d = x.shape[1];
            n.value.shape = {d};
            n.value.data.assign(d, 0.0);
            for (std::size_t i = 0; i < rows; ++i)
                for (std::size_t k = 0; k < d; ++k)
                    n.value.data[k] += x.data[i * d + k];
            break;
        }
        case Op::broadcast_cols: {
            const Tensor& v = in(0);
            const std::size_t rows = v.size();
            const std::size_t d = static_cast<std::size_t>(n.idx[0]);
            n.value.shape = {rows, d};
            n.value.data.resize(rows * d);
            for (std::size_t i = 0; i < rows; ++i)
                for (std::size_t k = 0; k < d; ++k)
                    n.value.data[i * d + k] = v.data[i];
            break;
        }
        case Op::sum_over_cols: {
            const Tensor& x = in(0);
            const std::size_t rows = x.shape[0], d = x.shape[1];
            n.value.shape = {rows};
            n.value.data.assign(rows, 0.0);
            for (std::size_t i = 0; i < rows; ++i)
                for (std::size_t k = 0; k < d; ++k)
                    n.value.data[i] += x.data[i * d + k];
            break;
        }
        case Op::segment_sum: {
            const Tensor& x = in(0);
            const std::size_t rows = x.shape[0];
            const std::size_t d = x.rank() == 1 ? 1 : x.shape[1];
            const std::size_t nseg = static_cast<std::size_t>(n.c);
            n.value.shape = x.rank() == 1 ? std::vector<std::size_t>{nseg}
                                          : std::vector<std::size_t>{nseg, d};
            n.value.data.assign(nseg * d, 0.0);
            kernels::segment_sum(x.data.data(), n.idx.data(),
                                 n.value.data.data(), rows, d, nseg);
            break;
        }
        case Op::gather_rows: {
            const Tensor& x = in(0);
            const std::size_t d = x.rank() == 1 ? 1 : x.shape[1];
            const std::size_t k = n.idx.size();
            n.value.shape = x.rank() == 1 ? std::vector<std::size_t>{k}
                                          : std::vector<std::size_t>{k, d};
            n.value.data.resize(k * d);
            kernels::gather_rows(x.data.data(), n.idx.data(),
                                 n.value.data.data(), k, d);
            break;
        }
        case Op::concat_rows: {
            const Tensor& a = in(0);
            const Tensor& b = in(1);
            n.value.shape = {a.shape[0] + b.shape[0], a.shape[1]};
            n.value.data.resize(Tensor::count_of(n.value.shape));
            std::copy(a.data.begin(), a.data.end(), n.value.data.begin());
            std::copy(b.data.begin(), b.data.end(),
                      n.value.data.begin() + a.size());
            break;
        }
        case Op::slice_rows: {
            const Tensor& x = in(0);
            const std::size_t d = x.rank() == 1 ? 1 : x.shape[1];
            const std::size_t begin = static_cast<std::size_t>(n.idx[0]);
            const std::size_t count = static_cast<std::size_t>(n.idx[1]);
            n.value.shape = x.rank() == 1 ? std::vector<std::size_t>{count}
                                          : std::vector<std::size_t>{count, d};
            n.value.data.assign(x.data.begin() + begin * d,
                                x.data.begin() + (begin + count) * d);
            break;
        }
        case Op::pad_rows: {
            const Tensor& x = in(0);
            const std::size_t d = x.rank() == 1 ? 1 : x.shape[1];
            const std::size_t begin = static_cast<std::size_t>(n.idx[0]);
            const std::size_t total = static_cast<std::size_t>(n.idx[1]);
            n.value.shape = x.rank() == 1 ? std::vector<std::size_t>{total}
                                          : std::vector<std::size_t>{total, d};
            n.value.data.assign(total * d, 0.0);
            std::copy(x.data.begin(), x.data.end(),
                      n.value.data.begin() + begin * d);
            break;
        }
        case Op::l2_norm_rows: {
            const Tensor& x = in(0);
            const std::size_t rows = x.shape[0], d = x.shape[1];
            n.value.shape = {rows};
            n.value.data.resize(rows);
            for (std::size_t i = 0; i < rows; ++i) {
                double s = 0.0;
                for (std::size_t k = 0; k < d; ++k) {
                    const double v = x.data[i * d + k];
                    s += v * v;
                }
                n.value.data[i] = std::sqrt(s);
            }
            break;
        }
    }
}

}  // namespace

Variable Graph::append(Node n) {
    if (!grad_enabled_) n.requires_grad = false;
    compute_forward(n, nodes_);
    nodes_.push_back(std::move(n));
    return Variable{this, static_cast<std::uint32_t>(nodes_.size() - 1)};
}

Variable Graph::leaf(Tensor value, bool requires_grad) {
    Node n;
    n.op = Op::leaf;
    n.requires_grad = requires_grad;
    n.value = std::move(value);
    return append(std::move(n));
}

Variable Graph::constant(Tensor value) {
    Node n;
    n.op = Op::constant;
    n.value = std::move(value);
    return append(std::move(n));
}

void Graph::recompute_forward() {
    for (std::size_t i = 0; i < nodes_.size(); ++i)
        compute_forward(nodes_[i], nodes_);
}

namespace {
Node binary_node(Op op, Variable a, Variable b) {
    require_same_graph(a, b);
    Node n;
    n.op = op;
    n.inputs[0] = a.id;
    n.inputs[1] = b.id;
    n.n_inputs = 2;
    n.requires_grad = a.requires_grad() || b.requires_grad();
    return n;
}

Node unary_node(Op op, Variable a) {
    Node n;
    n.op = op;
    n.inputs[0] = a.id;
    n.n_inputs = 1;
    n.requires_grad = a.requires_grad();
    return n;
}
}  // namespace

Variable add(Variable a, Variable b) {
    if (!a.value().same_shape(b.value())) shape_error("add", a.value(), b.value());
    return a.graph->append(binary_node(Op::add, a, b));
}

Variable sub(Variable a, Variable b) {
    if (!a.value().same_shape(b.value())) shape_error("sub", a.value(), b.value());
    return a.graph->append(binary_node(Op::sub, a, b));
}

Variable mul(Variable a, Variable b) {
    if (!a.value().same_shape(b.value())) shape_error("mul", a.value(), b.value());
    return a.graph->append(binary_node(Op::mul, a, b));
}

Variable div_safe(Variable a, Variable b) {
    if (!a.value().same_shape(b.value()))
        shape_error("div_safe", a.value(), b.value());
    return a.graph->append(binary_node(Op::div_safe, a, b));
}

Variable scale(Variable a, double c) {
    Node n = unary_node(Op::scale, a);
    n.c = c;
    return a.graph->append(std::move(n));
}

Variable exp(Variable a) { return a.graph->append(unary_node(Op::exp_op, a)); }
Variable square(Variable a) { return a.graph->append(unary_node(Op::square, a)); }
Variable sigmoid(Variable a) { return a.graph->append(unary_node(Op::sigmoid, a)); }
Variable ssp(Variable a) { return a.graph->append(unary_node(Op::ssp, a)); }

Variable matmul(Variable a, Variable b) {
    const Tensor& ta = a.value();
    const Tensor& tb = b.value();
    if (ta.rank() != 2 || tb.rank() != 2 || ta.shape[1] != tb.shape[0])
        shape_error("matmul", ta, tb);
    return a.graph->append(binary_node(Op::matmul, a, b));
}

Variable transpose(Variable a) {
    if (a.value().rank() != 2)
        throw std::invalid_argument("transpose: rank-2 input required, got " +
                                    shape_str(a.shape()));
    return a.graph->append(unary_node(Op::transpose, a));
}

Variable sum_all(Variable a) { return a.graph->append(unary_node(Op::sum_all, a)); }

Variable broadcast_scalar(Variable s, std::vector<std::size_t> shape) {
    if (s.value().size() != 1)
        throw std::invalid_argument("broadcast_scalar: scalar input required");
    Node n = unary_node(Op::broadcast_scalar, s);
    n.idx.assign(shape.begin(), shape.end());
    return s.graph->append(std::move(n));
}

Variable broadcast_rows(Variable v, std::size_t n_rows) {
    if (v.value().rank() != 1)
        throw std::invalid_argument("broadcast_rows: rank-1 input required");
    Node n = unary_node(Op::broadcast_rows, v);
    n.idx = {static_cast<std::int64_t>(n_rows)};
    return v.graph->append(std::move(n));
}

Variable sum_over_rows(Variable x) {
    if (x.value().rank() != 2)
        throw std::invalid_argument("sum_over_rows: rank-2 input required");
    return x.graph->append(unary_node(Op::sum_over_rows, x));
}

Variable broadcast_cols(Variable v, std::size_t d) {
    if (v.value().rank() != 1)
        throw std::invalid_argument("broadcast_cols: rank-1 input required");
    Node n = unary_node(Op::broadcast_cols, v);
    n.idx = {static_cast<std::int64_t>(d)};
    return v.graph->append(std::move(n));
}

Variable sum_over_cols(Variable x) {
    if (x.value().rank() != 2)
        throw std::invalid_argument("sum_over_cols: rank-2 input required");
    return x.graph->append(unary_node(Op::sum_over_cols, x));
}

Variable segment_sum(Variable x, std::vector<std::int64_t> seg,
                     std::size_t n_segments) {
    if (seg.size() != x.value().shape[0])
        throw std::invalid_argument("segment_sum: one segment id per row required");
    for (auto s : seg)
        if (s < 0 || static_cast<std::size_t>(s) >= n_segments)
            throw std::out_of_range("segment_sum: segment id " +
                                    std::to_string(s) + " out of range [0," +
                                    std::to_string(n_segments) + ")");
    Node n = unary_node(Op::segment_sum, x);
    n.idx = std::move(seg);
    n.c = static_cast<double>(n_segments);
    return x.graph->append(std::move(n));
}

Variable gather_rows(Variable x, std::vector<std::int64_t> idx) {
    const std::size_t rows = x.value().shape[0];
    for (auto i : idx)
        if (i < 0 || static_cast<std::size_t>(i) >= rows)
            throw std::out_of_range("gather_rows: index " + std::to_string(i) +
                                    " out of range [0," + std::to_string(rows) +
                                    ")");
    Node n = unary_node(Op::gather_rows, x);
    n.idx = std::move(idx);
    return x.graph->append(std::move(n));
}

Variable concat_rows(Variable a, Variable b) {
    const Tensor& ta = a.value();
    const Tensor& tb = b.value();
    if (ta.rank() != 2 || tb.rank() != 2 || ta.shape[1] != tb.shape[1])
        shape_error("concat_rows", ta, tb);
    return a.graph->append(binary_node(Op::concat_rows, a, b));
}

Variable slice_rows(Variable x, std::size_t begin, std::size_t count) {
    if (begin + count > x.value().shape[0])
        throw std::out_of_range("slice_rows: range exceeds " +
                                shape_str(x.shape()));
    Node n = unary_node(Op::slice_rows, x);
    n.idx = {static_cast<std::int64_t>(begin), static_cast<std::int64_t>(count)};
    return x.graph->append(std::move(n));
}

Variable pad_rows(Variable x, std::size_t begin, std::size_t total_rows) {
    if (begin + x.value().shape[0] > total_rows)
        throw std::out_of_range("pad_rows: block exceeds target rows");
    Node n = unary_node(Op::pad_rows, x);
    n.idx = {static_cast<std::int64_t>(begin),
             static_cast<std::int64_t>(total_rows)};
    return x.graph->append(std::move(n));
}

Variable l2_norm_rows(Variable x) {
    if (x.value().rank() != 2)
        throw std::invalid_argument("l2_norm_rows: rank-2 input required");
    return x.graph->append(unary_node(Op::l2_norm_rows, x));
}

Variable linear(Variable x, Variable w, Variable b) {
    Variable y = matmul(x, w);
    return add(y, broadcast_rows(b, x.value().shape[0]));
}

namespace {

// Builds the gradient expressions for one node. Each rule is expressed in
// the primitive set itself, which closes the system under differentiation.
void input_grads(Graph& g, const Node& n, Variable out, Variable grad,
                 Variable* din) {
    switch (n.op) {
        case Op::leaf:
        case Op::constant:
            break;
        case Op::add:
            din[0] = grad;
            din[1] = grad;
            break;
        case Op::sub:
            din[0] = grad;
            din[1] = scale(grad, -1.0);
            break;
        case Op::mul:
            din[0] = mul(grad, Variable{&g, n.inputs[1]});
            din[1] = mul(grad, Variable{&g, n.inputs[0]});
            break;
        case Op::div_safe: {
            Variable b{&g, n.inputs[1]};
            din[0] = div_safe(grad, b);
            din[1] = scale(div_safe(mul(grad, out), b), -1.0);
            break;
        }
        case Op::scale:
            din[0] = scale(grad, n.c);
            break;
        case Op::exp_op:
            din[0] = mul(grad, out);
            break;
        case Op::square:
            din[0] = scale(mul(grad, Variable{&g, n.inputs[0]}), 2.0);
            break;
        case Op::sigmoid: {
            Variable ones = g.constant(Tensor::full(out.shape(), 1.0));
            din[0] = mul(grad, mul(out, sub(ones, out)));
            break;
        }
        case Op::ssp:
            din[0] = mul(grad, sigmoid(Variable{&g, n.inputs[0]}));
            break;
        case Op::matmul: {
            Variable a{&g, n.inputs[0]};
            Variable b{&g, n.inputs[1]};
            din[0] = matmul(grad, transpose(b));
            din[1] = matmul(transpose(a), grad);
            break;
        }
        case Op::transpose:
            din[0] = transpose(grad);
            break;
        case Op::sum_all:
            din[0] = broadcast_scalar(grad, Variable{&g, n.inputs[0]}.shape());
            break;
        case Op::broadcast_scalar:
            din[0] = sum_all(grad);
            break;
        case Op::broadcast_rows:
            din[0] = sum_over_rows(grad);
            break;
        case Op::sum_over_rows:
            din[0] = broadcast_rows(grad, Variable{&g, n.inputs[0]}.shape()[0]);
            break;
        case Op::broadcast_cols:
            din[0] = sum_over_cols(grad);
            break;
        case Op::sum_over_cols:
            din[0] = broadcast_cols(grad, Variable{&g, n.inputs[0]}.shape()[1]);
            break;
        case Op::segment_sum:
            din[0] = gather_rows(grad, n.idx);
            break;
        case Op::gather_rows:
            din[0] = segment_sum(grad, n.idx, Variable{&g, n.inputs[0]}.shape()[0]);
            break;
        case Op::concat_rows: {
            const std::size_t ra = Variable{&g, n.inputs[0]}.shape()[0];
            const std::size_t rb = Variable{&g, n.inputs[1]}.shape()[0];
            din[0] = slice_rows(grad, 0, ra);
            din[1] = slice_rows(grad, ra, rb);
            break;
        }
        case Op::slice_rows:
            din[0] = pad_rows(grad, static_cast<std::size_t>(n.idx[0]),
                              Variable{&g, n.inputs[0]}.shape()[0]);
            break;
        case Op::pad_rows:
            din[0] = slice_rows(grad, static_cast<std::size_t>(n.idx[0]),
                                Variable{&g, n.inputs[0]}.shape()[0]);
            break;
        case Op::l2_norm_rows: {
            Variable x{&g, n.inputs[0]};
            const std::size_t d = x.shape()[1];
            // d/dx ||x|| = x / ||x||, with the 0/0 case mapped to 0.
            din[0] = mul(broadcast_cols(div_safe(grad, out), d), x);
            break;
        }
    }
}

}  // namespace

GradientMap backward(Variable loss, const std::vector<Variable>& wrt,
                     bool create_graph) {
    Graph& g = *loss.graph;
    if (loss.value().size() != 1)
        throw std::invalid_argument("backward: loss must be scalar, got " +
                                    shape_str(loss.shape()));

    const bool saved_grad_mode = g.grad_enabled_;
    g.grad_enabled_ = create_graph;

    std::unordered_map<std::uint32_t, Variable> acc;
    acc[loss.id] = g.constant(Tensor::scalar(1.0));

    for (std::uint32_t id = loss.id + 1; id-- > 0;) {
        auto it = acc.find(id);
        if (it == acc.end()) continue;
        const Node& n = g.node(id);
        if (n.n_inputs == 0) continue;
        Variable grad = it->second;
        Variable din[2];
        input_grads(g, n, Variable{&g, id}, grad, din);
        for (std::uint8_t k = 0; k < n.n_inputs; ++k) {
            const std::uint32_t in_id = n.inputs[k];
            if (!din[k].valid() || !g.node(in_id).requires_grad) continue;
            auto jt = acc.find(in_id);
            if (jt == acc.end())
                acc[in_id] = din[k];
            else
                jt->second = add(jt->second, din[k]);
        }
    }

    GradientMap out;
    for (const Variable& v : wrt) {
        auto it = acc.find(v.id);
        if (it != acc.end()) {
            out.grads[v.id] = it->second;
        } else {
            out.grads[v.id] = g.constant(Tensor::zeros(v.shape()));
            out.unreachable.push_back(v.id);
        }
    }

    g.grad_enabled_ = saved_grad_mode;
    return out;
}

}  // namespace schnet::ad
