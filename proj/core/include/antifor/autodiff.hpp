#pragma once

#include <functional>
#include <vector>

#include "antifor/tensor.hpp"

namespace antifor {

// Handle to a tensor recorded on a Tape.
struct Var {
    int id = -1;
    bool valid() const { return id >= 0; }
};

// Eager, single-use reverse-mode tape. Ops append nodes in execution order,
// so walking the record backwards visits every node after all of its
// consumers. A tensor consumed by several ops accumulates the sum of the
// partials. After backward() the tape is sealed: further ops or a second
// backward are rejected.
class Tape {
  public:
    Var leaf(Tensor value);

    const Tensor& value(Var v) const;
    // Gradient of the most recent backward() with respect to v.
    const Tensor& grad(Var v) const;

    Var conv2d(Var input, Var kernel, int stride, int padding);
    Var channel_bias(Var x, Var bias);  // x: [N,F,H,W], bias: [F]
    Var dense(Var x, Var weight, Var bias);  // x: [N,D], weight: [D,M], bias: [M]
    Var relu(Var x);
    Var sigmoid(Var x);
    Var avg_pool2d(Var x, int k);
    Var max_pool2d(Var x, int k);
    Var flatten(Var x);  // [N,C,H,W] -> [N,C*H*W]
    Var add(Var a, Var b);
    Var affine(Var x, float mul, float shift);
    Var layer_norm(Var x, float eps = 1e-5f);  // per-row standardization of [N,D]
    Var sum(Var x);
    Var square(Var x);
    Var bce_loss(Var scores, const std::vector<float>& labels);

    void backward(Var loss);
    void backward_seeded(Var out, const Tensor& seed);

    std::size_t node_count() const { return nodes_.size(); }
    bool finished() const { return finished_; }

  private:
    using BackFn = std::function<void(Tape&, const Tensor& gout)>;

    struct Node {
        Tensor value;
        Tensor grad;
        BackFn back;  // empty for leaves
    };

    Var push(Tensor value, BackFn back);
    Tensor& grad_mut(Var v) { return nodes_[static_cast<std::size_t>(v.id)].grad; }
    const Tensor& val(Var v) const { return nodes_[static_cast<std::size_t>(v.id)].value; }
    void check_open() const;
    void check_var(Var v) const;

    std::vector<Node> nodes_;
    bool finished_ = false;
};

// Elementwise sign on plain tensors: +1 for positive, -1 for negative, 0 at 0.
Tensor sign(const Tensor& t);

}  // namespace antifor
