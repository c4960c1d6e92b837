#include "planlink/optim.hpp"

#include <cmath>
#include <stdexcept>

#include "planlink/rng.hpp"

namespace planlink {

void AdamState::step(const std::vector<Tensor*>& params,
                     const std::vector<const Tensor*>& grads) {
  if (params.size() != grads.size())
    throw std::invalid_argument("AdamState::step: params/grads size mismatch");
  if (m_.empty()) {
    for (const Tensor* p : params) {
      m_.emplace_back(p->rows, p->cols);
      v_.emplace_back(p->rows, p->cols);
    }
  }
  if (m_.size() != params.size())
    throw std::invalid_argument("AdamState::step: parameter count changed");
  ++t_;
  const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    Tensor& w = *params[i];
    const Tensor& g = *grads[i];
    if (!w.same_shape(g))
      throw std::invalid_argument("AdamState::step: grad shape " + g.shape_str() +
                                  " vs param " + w.shape_str());
    Tensor& m = m_[i];
    Tensor& v = v_[i];
    for (int j = 0; j < w.size(); ++j) {
      m.data[j] = cfg_.beta1 * m.data[j] + (1.0 - cfg_.beta1) * g.data[j];
      v.data[j] = cfg_.beta2 * v.data[j] + (1.0 - cfg_.beta2) * g.data[j] * g.data[j];
      const double mhat = m.data[j] / bc1;
      const double vhat = v.data[j] / bc2;
      w.data[j] -= cfg_.lr * mhat / (std::sqrt(vhat) + cfg_.eps);
    }
  }
}

GradCheckReport grad_check(const std::function<double()>& f,
                           const std::function<std::vector<Tensor>()>& analytic,
                           const std::vector<Tensor*>& params, double h, double tol,
                           int coords_per_param, std::uint64_t seed) {
  GradCheckReport report;
  const std::vector<Tensor> grads = analytic();
  if (grads.size() != params.size())
    throw std::invalid_argument("grad_check: analytic() returned wrong count");
  Rng rng(seed);
  for (std::size_t i = 0; i < params.size(); ++i) {
    Tensor& w = *params[i];
    const Tensor& g = grads[i];
    if (!w.same_shape(g))
      throw std::invalid_argument("grad_check: grad shape mismatch at param " +
                                  std::to_string(i));
    std::vector<int> coords;
    if (coords_per_param < 0 || coords_per_param >= w.size()) {
      coords.resize(static_cast<std::size_t>(w.size()));
      for (int j = 0; j < w.size(); ++j) coords[static_cast<std::size_t>(j)] = j;
    } else {
      for (int j = 0; j < coords_per_param; ++j)
        coords.push_back(rng.uniform_int(0, w.size() - 1));
    }
    for (int j : coords) {
      const double saved = w.data[j];
      w.data[j] = saved + h;
      const double fp = f();
      w.data[j] = saved - h;
      const double fm = f();
      w.data[j] = saved;
      const double fd = (fp - fm) / (2.0 * h);
      const double ad = g.data[j];
      const double rel =
          std::fabs(fd - ad) / std::max({1.0, std::fabs(fd), std::fabs(ad)});
      if (rel > report.max_rel_error) {
        report.max_rel_error = rel;
        report.worst = std::to_string(i) + "[" + std::to_string(j) + "]";
      }
    }
  }
  report.pass = report.max_rel_error <= tol;
  return report;
}

}  // namespace planlink
