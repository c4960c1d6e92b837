#pragma once
// Adam with bias correction, and a central-finite-difference gradient checker.

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "planlink/tensor.hpp"

namespace planlink {

struct AdamConfig {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.99;
  double eps = 1e-8;
};

class AdamState {
 public:
  explicit AdamState(AdamConfig cfg = {}) : cfg_(cfg) {}

  // Applies one update in place. Parameter order must be stable across calls;
  // moments are allocated per tensor on the first step.
  void step(const std::vector<Tensor*>& params, const std::vector<const Tensor*>& grads);

  long steps() const { return t_; }
  const AdamConfig& config() const { return cfg_; }

 private:
  AdamConfig cfg_;
  long t_ = 0;
  std::vector<Tensor> m_;
  std::vector<Tensor> v_;
};

struct GradCheckReport {
  double max_rel_error = 0.0;
  bool pass = false;
  std::string worst;  // "param_index[coord]" of the worst coordinate
};

// Compares analytic gradients against central differences.
//   f           scalar loss at the current parameter values
//   analytic    gradients w.r.t. params, same order (full forward + backward)
//   params      tensors perturbed in place (restored afterwards)
//   coords_per_param  < 0 checks every coordinate; otherwise that many
//                     coordinates sampled per tensor with `seed`
// Relative error per coordinate: |fd - ad| / max(1, |fd|, |ad|).
GradCheckReport grad_check(const std::function<double()>& f,
                           const std::function<std::vector<Tensor>()>& analytic,
                           const std::vector<Tensor*>& params, double h = 1e-5,
                           double tol = 1e-4, int coords_per_param = -1,
                           std::uint64_t seed = 0);

}  // namespace planlink
