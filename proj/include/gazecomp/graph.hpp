#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "gazecomp/tensor.hpp"

namespace gazecomp {

// One node of the reverse-mode compute graph: the op kind, references to the
// inputs, the cached forward output and a closure that scatters the node's
// adjoint back into its inputs. The graph is a DAG; backward() visits every
// reachable node exactly once in reverse topological order.
struct GraphNode {
    const char* op = "leaf";
    Tensor value;
    Tensor grad;  // allocated lazily, same shape as value
    bool requires_grad = false;
    std::vector<std::shared_ptr<GraphNode>> inputs;
    std::function<void(GraphNode&)> backward_fn;

    Tensor& ensure_grad() {
        if (!grad.same_shape(value)) grad = Tensor::zeros(value.shape());
        return grad;
    }
    void zero_grad() {
        if (grad.same_shape(value)) grad.fill(0.0);
    }
};

// Lightweight handle to a graph node. Ops below are free functions building
// new nodes; calling backward() on a scalar-valued Var runs reverse-mode
// accumulation into every reachable leaf that requires gradients.
class Var {
public:
    Var() = default;
    explicit Var(std::shared_ptr<GraphNode> n) : node_(std::move(n)) {}

    static Var leaf(Tensor value, bool requires_grad);
    static Var constant(Tensor value) { return leaf(std::move(value), false); }
    static Var scalar(double v) { return constant(Tensor::scalar(v)); }

    bool defined() const { return node_ != nullptr; }
    const Tensor& value() const { return node_->value; }
    Tensor& mutable_value() { return node_->value; }
    const Tensor& grad() const { return node_->grad; }
    bool requires_grad() const { return node_ && node_->requires_grad; }
    void zero_grad() { node_->zero_grad(); }
    std::shared_ptr<GraphNode> node() const { return node_; }

    double scalar_value() const;

    // Reverse-mode sweep seeded with d(self)/d(self) = 1. Only valid on
    // scalar outputs.
    void backward();

private:
    std::shared_ptr<GraphNode> node_;
};

// --- graph ops ------------------------------------------------------------

Var matmul(const Var& a, const Var& b);
Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);  // elementwise
Var scale(const Var& a, double c);
// Broadcast-add a length-n row vector to every row of an [m, n] matrix.
Var add_rowvec(const Var& a, const Var& bias);
Var transpose(const Var& a);
Var slice_cols(const Var& a, int col0, int len);
Var concat_cols(const std::vector<Var>& parts);
Var slice_rows(const Var& a, int row0, int len);
Var concat_rows(const std::vector<Var>& parts);
// Reinterpret the row-major buffer under a new shape (element count preserved).
Var reshape(const Var& a, const std::vector<int>& shape);
// Numerically stabilized softmax along `axis` (max subtraction).
Var softmax(const Var& a, int axis);
Var layer_norm(const Var& x, const Var& gamma, const Var& beta, double eps = 1e-5);
Var gelu(const Var& x);

// KL divergence between per-row probability distributions, summed over rows
// [row_from, row_to) and all columns. Default direction puts the prediction
// in the first slot: sum p * log(p / q). Both p and q are clamped below at
// `eps` inside the log. `reverse` swaps the roles (sum q * log(q / p)).
// Differentiable w.r.t. `pred` only; `target` is data.
Var kl_divergence(const Var& pred, const Tensor& target, double eps = 1e-8,
                  bool reverse = false, int row_from = 0, int row_to = -1);

}  // namespace gazecomp
