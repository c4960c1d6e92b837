#pragma once
// Reverse-mode autodiff over Tensor. A Tape records every op in execution
// order (which is already topological); backward() replays the recorded
// closures in reverse exactly once, accumulating gradients with += so
// fan-out is handled naturally.
//
// A Tape is single-owner and good for one forward + one backward. Models
// re-register their parameters as leaves on a fresh tape every step.

#include <functional>
#include <vector>

#include "planlink/rng.hpp"
#include "planlink/tensor.hpp"

namespace planlink {

enum class DropoutMode { kTrain, kEval };

struct Var {
  int id = -1;
  bool valid() const { return id >= 0; }
};

class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  // Leaves. leaf() participates in backward; constant() never does.
  Var leaf(const Tensor& value);
  Var constant(Tensor value);

  Var matmul(Var a, Var b);
  // Elementwise add; also accepts a 1 x cols b broadcast over a's rows.
  Var add(Var a, Var b);
  Var mul(Var a, Var b);
  Var scale(Var a, double k);
  Var concat(const std::vector<Var>& parts, int axis);
  Var slice(Var a, int axis, int start, int len);
  Var transpose(Var a);
  Var mean_over(Var a, int axis);
  Var softmax_rows(Var a);
  Var sigmoid(Var a);
  Var tanh_act(Var a);
  Var gelu(Var a);
  Var leaky_relu(Var a, double slope);
  Var dropout(Var a, double p, DropoutMode mode, Rng& rng);
  // Gathers rows of `table` by index; duplicate ids accumulate gradient.
  Var embedding_lookup(Var table, const std::vector<int>& ids);
  // Per-row normalization with learned gain/bias (both 1 x cols).
  Var layer_norm(Var x, Var gain, Var bias);

  // Losses. Sums, not means, per the negative-sampling objective.
  // Either side may be empty (0 rows) as long as one logit exists.
  Var bce_with_logits(Var pos_logits, Var neg_logits);
  Var cross_entropy(Var logits_row, int klass);
  // Mean of per-row cross entropies.
  Var cross_entropy_rows(Var logits, const std::vector<int>& classes);

  void backward(Var loss);

  const Tensor& value(Var v) const { return node(v.id).value; }
  const Tensor& grad(Var v) const;
  std::size_t size() const { return nodes_.size(); }

 private:
  // back(tape, g) scatters the output gradient g into the parents' sinks.
  using BackFn = std::function<void(Tape&, const Tensor&)>;

  struct Node {
    Tensor value;
    Tensor grad;
    bool requires_grad = false;
    std::vector<int> parents;
    BackFn back;
  };

  const Node& node(int id) const;
  Node& node(int id);
  Var push(Tensor value, std::vector<int> parents, BackFn back);
  // Gradient sink for parent `id`; null when the parent does not need one.
  Tensor* sink(int id);
  static void check_same_shape(const char* op, const Tensor& a, const Tensor& b);

  std::vector<Node> nodes_;
  bool backward_done_ = false;
};

}  // namespace planlink
