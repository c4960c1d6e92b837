#include "planlink/tape.hpp"

#include <cblas.h>

#include <algorithm>
#include <cmath>
#include <memory>
#include <stdexcept>

namespace planlink {
namespace {

constexpr double kInvSqrt2 = 0.7071067811865476;
constexpr double kInvSqrt2Pi = 0.3989422804014327;
constexpr double kLayerNormEps = 1e-5;

// c = alpha * op(a) op(b) + beta * c, row-major.
void gemm(const Tensor& a, const Tensor& b, Tensor& c, bool trans_a, bool trans_b,
          double alpha, double beta) {
  const int m = trans_a ? a.cols : a.rows;
  const int k = trans_a ? a.rows : a.cols;
  const int n = trans_b ? b.rows : b.cols;
  if (m == 0 || n == 0) return;
  if (k == 0) {
    if (beta == 0.0) std::fill(c.data.begin(), c.data.end(), 0.0);
    return;
  }
  cblas_dgemm(CblasRowMajor, trans_a ? CblasTrans : CblasNoTrans,
              trans_b ? CblasTrans : CblasNoTrans, m, n, k, alpha, a.data.data(),
              std::max(a.cols, 1), b.data.data(), std::max(b.cols, 1), beta,
              c.data.data(), std::max(c.cols, 1));
}

// log(1 + exp(t)) without overflow.
double softplus(double t) {
  return std::max(t, 0.0) + std::log1p(std::exp(-std::fabs(t)));
}

double sigmoid_scalar(double x) {
  return x >= 0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
}

double norm_cdf(double x) { return 0.5 * (1.0 + std::erf(x * kInvSqrt2)); }
double norm_pdf(double x) { return kInvSqrt2Pi * std::exp(-0.5 * x * x); }

}  // namespace

const Tape::Node& Tape::node(int id) const {
  if (id < 0 || id >= static_cast<int>(nodes_.size()))
    throw std::invalid_argument("Tape: invalid Var");
  return nodes_[static_cast<std::size_t>(id)];
}

Tape::Node& Tape::node(int id) {
  return const_cast<Node&>(static_cast<const Tape*>(this)->node(id));
}

Var Tape::push(Tensor value, std::vector<int> parents, BackFn back) {
#ifndef NDEBUG
  if (!value.all_finite()) throw std::logic_error("Tape: op produced non-finite values");
#endif
  Node n;
  n.value = std::move(value);
  n.parents = std::move(parents);
  for (int p : n.parents)
    if (node(p).requires_grad) n.requires_grad = true;
  if (n.requires_grad) n.back = std::move(back);
  nodes_.push_back(std::move(n));
  return Var{static_cast<int>(nodes_.size()) - 1};
}

Tensor* Tape::sink(int id) {
  Node& n = node(id);
  if (!n.requires_grad) return nullptr;
  if (n.grad.size() == 0 && n.value.size() != 0)
    n.grad = Tensor(n.value.rows, n.value.cols);
  n.grad.rows = n.value.rows;
  n.grad.cols = n.value.cols;
  return &n.grad;
}

void Tape::check_same_shape(const char* op, const Tensor& a, const Tensor& b) {
  if (!a.same_shape(b))
    throw std::invalid_argument(std::string(op) + ": shape mismatch " + a.shape_str() +
                                " vs " + b.shape_str());
}

Var Tape::leaf(const Tensor& value) {
  Node n;
  n.value = value;
  n.requires_grad = true;
  nodes_.push_back(std::move(n));
  return Var{static_cast<int>(nodes_.size()) - 1};
}

Var Tape::constant(Tensor value) {
  Node n;
  n.value = std::move(value);
  nodes_.push_back(std::move(n));
  return Var{static_cast<int>(nodes_.size()) - 1};
}

Var Tape::matmul(Var a, Var b) {
  const Tensor& ta = value(a);
  const Tensor& tb = value(b);
  if (ta.cols != tb.rows)
    throw std::invalid_argument("matmul: shape mismatch " + ta.shape_str() + " vs " +
                                tb.shape_str());
  Tensor out(ta.rows, tb.cols);
  gemm(ta, tb, out, false, false, 1.0, 0.0);
  const int ia = a.id, ib = b.id;
  return push(std::move(out), {ia, ib}, [ia, ib](Tape& t, const Tensor& g) {
    const Tensor& va = t.node(ia).value;
    const Tensor& vb = t.node(ib).value;
    if (Tensor* ga = t.sink(ia)) gemm(g, vb, *ga, false, true, 1.0, 1.0);
    if (Tensor* gb = t.sink(ib)) gemm(va, g, *gb, true, false, 1.0, 1.0);
  });
}

Var Tape::add(Var a, Var b) {
  const Tensor& ta = value(a);
  const Tensor& tb = value(b);
  const bool broadcast = tb.rows == 1 && ta.rows != 1 && tb.cols == ta.cols;
  if (!broadcast) check_same_shape("add", ta, tb);
  Tensor out = ta;
  if (broadcast) {
    for (int r = 0; r < out.rows; ++r)
      for (int c = 0; c < out.cols; ++c) out.at(r, c) += tb.at(0, c);
  } else {
    for (int i = 0; i < out.size(); ++i) out.data[i] += tb.data[i];
  }
  const int ia = a.id, ib = b.id;
  return push(std::move(out), {ia, ib}, [ia, ib, broadcast](Tape& t, const Tensor& g) {
    if (Tensor* ga = t.sink(ia))
      for (int i = 0; i < g.size(); ++i) ga->data[i] += g.data[i];
    if (Tensor* gb = t.sink(ib)) {
      if (broadcast) {
        for (int r = 0; r < g.rows; ++r)
          for (int c = 0; c < g.cols; ++c) gb->at(0, c) += g.at(r, c);
      } else {
        for (int i = 0; i < g.size(); ++i) gb->data[i] += g.data[i];
      }
    }
  });
}

Var Tape::mul(Var a, Var b) {
  const Tensor& ta = value(a);
  const Tensor& tb = value(b);
  check_same_shape("mul", ta, tb);
  Tensor out = ta;
  for (int i = 0; i < out.size(); ++i) out.data[i] *= tb.data[i];
  const int ia = a.id, ib = b.id;
  return push(std::move(out), {ia, ib}, [ia, ib](Tape& t, const Tensor& g) {
    const Tensor& va = t.node(ia).value;
    const Tensor& vb = t.node(ib).value;
    if (Tensor* ga = t.sink(ia))
      for (int i = 0; i < g.size(); ++i) ga->data[i] += g.data[i] * vb.data[i];
    if (Tensor* gb = t.sink(ib))
      for (int i = 0; i < g.size(); ++i) gb->data[i] += g.data[i] * va.data[i];
  });
}

Var Tape::scale(Var a, double k) {
  Tensor out = value(a);
  for (double& v : out.data) v *= k;
  const int ia = a.id;
  return push(std::move(out), {ia}, [ia, k](Tape& t, const Tensor& g) {
    if (Tensor* ga = t.sink(ia))
      for (int i = 0; i < g.size(); ++i) ga->data[i] += k * g.data[i];
  });
}

Var Tape::concat(const std::vector<Var>& parts, int axis) {
  if (parts.empty()) throw std::invalid_argument("concat: no parts");
  if (axis != 0 && axis != 1) throw std::invalid_argument("concat: axis must be 0 or 1");
  int rows = value(parts[0]).rows, cols = value(parts[0]).cols;
  int total = 0;
  for (Var p : parts) {
    const Tensor& tp = value(p);
    if (axis == 0 && tp.cols != cols)
      throw std::invalid_argument("concat: column mismatch " + tp.shape_str());
    if (axis == 1 && tp.rows != rows)
      throw std::invalid_argument("concat: row mismatch " + tp.shape_str());
    total += axis == 0 ? tp.rows : tp.cols;
  }
  Tensor out(axis == 0 ? total : rows, axis == 0 ? cols : total);
  std::vector<int> ids;
  std::vector<int> offsets;
  int off = 0;
  for (Var p : parts) {
    const Tensor& tp = value(p);
    ids.push_back(p.id);
    offsets.push_back(off);
    if (axis == 0) {
      std::copy(tp.data.begin(), tp.data.end(),
                out.data.begin() + static_cast<std::size_t>(off) * cols);
      off += tp.rows;
    } else {
      for (int r = 0; r < rows; ++r)
        for (int c = 0; c < tp.cols; ++c) out.at(r, off + c) = tp.at(r, c);
      off += tp.cols;
    }
  }
  return push(std::move(out), ids, [ids, offsets, axis](Tape& t, const Tensor& g) {
    for (std::size_t i = 0; i < ids.size(); ++i) {
      Tensor* gp = t.sink(ids[i]);
      if (!gp) continue;
      const Tensor& vp = t.node(ids[i]).value;
      if (axis == 0) {
        for (int r = 0; r < vp.rows; ++r)
          for (int c = 0; c < vp.cols; ++c) gp->at(r, c) += g.at(offsets[i] + r, c);
      } else {
        for (int r = 0; r < vp.rows; ++r)
          for (int c = 0; c < vp.cols; ++c) gp->at(r, c) += g.at(r, offsets[i] + c);
      }
    }
  });
}

Var Tape::slice(Var a, int axis, int start, int len) {
  const Tensor& ta = value(a);
  if (axis != 0 && axis != 1) throw std::invalid_argument("slice: axis must be 0 or 1");
  const int extent = axis == 0 ? ta.rows : ta.cols;
  if (start < 0 || len < 0 || start + len > extent)
    throw std::invalid_argument("slice: out of range on " + ta.shape_str());
  Tensor out(axis == 0 ? len : ta.rows, axis == 0 ? ta.cols : len);
  for (int r = 0; r < out.rows; ++r)
    for (int c = 0; c < out.cols; ++c)
      out.at(r, c) = axis == 0 ? ta.at(start + r, c) : ta.at(r, start + c);
  const int ia = a.id;
  return push(std::move(out), {ia}, [ia, axis, start](Tape& t, const Tensor& g) {
    if (Tensor* ga = t.sink(ia)) {
      for (int r = 0; r < g.rows; ++r)
        for (int c = 0; c < g.cols; ++c) {
          if (axis == 0)
            ga->at(start + r, c) += g.at(r, c);
          else
            ga->at(r, start + c) += g.at(r, c);
        }
    }
  });
}

Var Tape::transpose(Var a) {
  const Tensor& ta = value(a);
  Tensor out(ta.cols, ta.rows);
  for (int r = 0; r < ta.rows; ++r)
    for (int c = 0; c < ta.cols; ++c) out.at(c, r) = ta.at(r, c);
  const int ia = a.id;
  return push(std::move(out), {ia}, [ia](Tape& t, const Tensor& g) {
    if (Tensor* ga = t.sink(ia))
      for (int r = 0; r < g.rows; ++r)
        for (int c = 0; c < g.cols; ++c) ga->at(c, r) += g.at(r, c);
  });
}

Var Tape::mean_over(Var a, int axis) {
  const Tensor& ta = value(a);
  if (axis != 0 && axis != 1) throw std::invalid_argument("mean_over: axis must be 0 or 1");
  const int n = axis == 0 ? ta.rows : ta.cols;
  if (n == 0) throw std::invalid_argument("mean_over: empty axis on " + ta.shape_str());
  Tensor out(axis == 0 ? 1 : ta.rows, axis == 0 ? ta.cols : 1);
  for (int r = 0; r < ta.rows; ++r)
    for (int c = 0; c < ta.cols; ++c) {
      if (axis == 0)
        out.at(0, c) += ta.at(r, c) / n;
      else
        out.at(r, 0) += ta.at(r, c) / n;
    }
  const int ia = a.id;
  return push(std::move(out), {ia}, [ia, axis, n](Tape& t, const Tensor& g) {
    if (Tensor* ga = t.sink(ia)) {
      for (int r = 0; r < ga->rows; ++r)
        for (int c = 0; c < ga->cols; ++c)
          ga->at(r, c) += (axis == 0 ? g.at(0, c) : g.at(r, 0)) / n;
    }
  });
}

Var Tape::softmax_rows(Var a) {
  Tensor out = value(a);
  for (int r = 0; r < out.rows; ++r) {
    double mx = -HUGE_VAL;
    for (int c = 0; c < out.cols; ++c) mx = std::max(mx, out.at(r, c));
    double sum = 0.0;
    for (int c = 0; c < out.cols; ++c) {
      out.at(r, c) = std::exp(out.at(r, c) - mx);
      sum += out.at(r, c);
    }
    for (int c = 0; c < out.cols; ++c) out.at(r, c) /= sum;
  }
  const int ia = a.id;
  const int self = static_cast<int>(nodes_.size());
  return push(std::move(out), {ia}, [ia, self](Tape& t, const Tensor& g) {
    if (Tensor* ga = t.sink(ia)) {
      const Tensor& y = t.node(self).value;
      for (int r = 0; r < y.rows; ++r) {
        double dot = 0.0;
        for (int c = 0; c < y.cols; ++c) dot += g.at(r, c) * y.at(r, c);
        for (int c = 0; c < y.cols; ++c)
          ga->at(r, c) += y.at(r, c) * (g.at(r, c) - dot);
      }
    }
  });
}

Var Tape::sigmoid(Var a) {
  Tensor out = value(a);
  for (double& v : out.data) v = sigmoid_scalar(v);
  const int ia = a.id;
  const int self = static_cast<int>(nodes_.size());
  return push(std::move(out), {ia}, [ia, self](Tape& t, const Tensor& g) {
    if (Tensor* ga = t.sink(ia)) {
      const Tensor& y = t.node(self).value;
      for (int i = 0; i < g.size(); ++i)
        ga->data[i] += g.data[i] * y.data[i] * (1.0 - y.data[i]);
    }
  });
}

Var Tape::tanh_act(Var a) {
  Tensor out = value(a);
  for (double& v : out.data) v = std::tanh(v);
  const int ia = a.id;
  const int self = static_cast<int>(nodes_.size());
  return push(std::move(out), {ia}, [ia, self](Tape& t, const Tensor& g) {
    if (Tensor* ga = t.sink(ia)) {
      const Tensor& y = t.node(self).value;
      for (int i = 0; i < g.size(); ++i)
        ga->data[i] += g.data[i] * (1.0 - y.data[i] * y.data[i]);
    }
  });
}

Var Tape::gelu(Var a) {
  Tensor out = value(a);
  for (double& v : out.data) v = v * norm_cdf(v);
  const int ia = a.id;
  return push(std::move(out), {ia}, [ia](Tape& t, const Tensor& g) {
    if (Tensor* ga = t.sink(ia)) {
      const Tensor& x = t.node(ia).value;
      for (int i = 0; i < g.size(); ++i) {
        const double xi = x.data[i];
        ga->data[i] += g.data[i] * (norm_cdf(xi) + xi * norm_pdf(xi));
      }
    }
  });
}

Var Tape::leaky_relu(Var a, double slope) {
  Tensor out = value(a);
  for (double& v : out.data) v = v > 0 ? v : slope * v;
  const int ia = a.id;
  return push(std::move(out), {ia}, [ia, slope](Tape& t, const Tensor& g) {
    if (Tensor* ga = t.sink(ia)) {
      const Tensor& x = t.node(ia).value;
      for (int i = 0; i < g.size(); ++i)
        ga->data[i] += g.data[i] * (x.data[i] > 0 ? 1.0 : slope);
    }
  });
}

Var Tape::dropout(Var a, double p, DropoutMode mode, Rng& rng) {
  if (p < 0.0 || p >= 1.0) throw std::invalid_argument("dropout: p must be in [0, 1)");
  if (mode == DropoutMode::kEval || p == 0.0) {
    // Identity, bit for bit; still a node so gradients flow.
    Tensor out = value(a);
    const int ia = a.id;
    return push(std::move(out), {ia}, [ia](Tape& t, const Tensor& g) {
      if (Tensor* ga = t.sink(ia))
        for (int i = 0; i < g.size(); ++i) ga->data[i] += g.data[i];
    });
  }
  const Tensor& ta = value(a);
  auto mask = std::make_shared<std::vector<double>>(ta.data.size());
  const double keep_scale = 1.0 / (1.0 - p);
  for (auto& m : *mask) m = rng.bernoulli(p) ? 0.0 : keep_scale;
  Tensor out = ta;
  for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] *= (*mask)[i];
  const int ia = a.id;
  return push(std::move(out), {ia}, [ia, mask](Tape& t, const Tensor& g) {
    if (Tensor* ga = t.sink(ia))
      for (int i = 0; i < g.size(); ++i)
        ga->data[i] += g.data[i] * (*mask)[static_cast<std::size_t>(i)];
  });
}

Var Tape::embedding_lookup(Var table, const std::vector<int>& ids) {
  const Tensor& tt = value(table);
  Tensor out(static_cast<int>(ids.size()), tt.cols);
  for (std::size_t i = 0; i < ids.size(); ++i) {
    const int id = ids[i];
    if (id < 0 || id >= tt.rows)
      throw std::invalid_argument("embedding_lookup: id " + std::to_string(id) +
                                  " out of range for " + tt.shape_str());
    for (int c = 0; c < tt.cols; ++c) out.at(static_cast<int>(i), c) = tt.at(id, c);
  }
  const int it = table.id;
  return push(std::move(out), {it}, [it, ids](Tape& t, const Tensor& g) {
    if (Tensor* gt = t.sink(it)) {
      for (std::size_t i = 0; i < ids.size(); ++i)
        for (int c = 0; c < g.cols; ++c)
          gt->at(ids[i], c) += g.at(static_cast<int>(i), c);
    }
  });
}

Var Tape::layer_norm(Var x, Var gain, Var bias) {
  const Tensor& tx = value(x);
  const Tensor& tg = value(gain);
  const Tensor& tb = value(bias);
  if (tg.rows != 1 || tg.cols != tx.cols || tb.rows != 1 || tb.cols != tx.cols)
    throw std::invalid_argument("layer_norm: gain/bias must be 1x" +
                                std::to_string(tx.cols));
  const int n = tx.cols;
  if (n == 0) throw std::invalid_argument("layer_norm: empty rows");
  auto stats = std::make_shared<Tensor>(tx.rows, 2);  // per-row (mean, inv_std)
  Tensor out(tx.rows, tx.cols);
  for (int r = 0; r < tx.rows; ++r) {
    double mean = 0.0;
    for (int c = 0; c < n; ++c) mean += tx.at(r, c);
    mean /= n;
    double var = 0.0;
    for (int c = 0; c < n; ++c) {
      const double d = tx.at(r, c) - mean;
      var += d * d;
    }
    var /= n;
    const double inv_std = 1.0 / std::sqrt(var + kLayerNormEps);
    stats->at(r, 0) = mean;
    stats->at(r, 1) = inv_std;
    for (int c = 0; c < n; ++c)
      out.at(r, c) = (tx.at(r, c) - mean) * inv_std * tg.at(0, c) + tb.at(0, c);
  }
  const int ix = x.id, ig = gain.id, ib = bias.id;
  return push(std::move(out), {ix, ig, ib}, [ix, ig, ib, stats](Tape& t, const Tensor& g) {
    const Tensor& vx = t.node(ix).value;
    const Tensor& vg = t.node(ig).value;
    const int n = vx.cols;
    Tensor* gx = t.sink(ix);
    Tensor* gg = t.sink(ig);
    Tensor* gb = t.sink(ib);
    for (int r = 0; r < vx.rows; ++r) {
      const double mean = stats->at(r, 0);
      const double inv_std = stats->at(r, 1);
      // dxhat, plus the two row-level reductions the chain rule needs.
      double sum_dxhat = 0.0, sum_dxhat_xhat = 0.0;
      for (int c = 0; c < n; ++c) {
        const double xhat = (vx.at(r, c) - mean) * inv_std;
        const double dxhat = g.at(r, c) * vg.at(0, c);
        sum_dxhat += dxhat;
        sum_dxhat_xhat += dxhat * xhat;
        if (gg) gg->at(0, c) += g.at(r, c) * xhat;
        if (gb) gb->at(0, c) += g.at(r, c);
      }
      if (gx) {
        for (int c = 0; c < n; ++c) {
          const double xhat = (vx.at(r, c) - mean) * inv_std;
          const double dxhat = g.at(r, c) * vg.at(0, c);
          gx->at(r, c) +=
              inv_std * (dxhat - sum_dxhat / n - xhat * sum_dxhat_xhat / n);
        }
      }
    }
  });
}

Var Tape::bce_with_logits(Var pos_logits, Var neg_logits) {
  const Tensor empty(0, 1);
  const Tensor& tp = pos_logits.valid() ? value(pos_logits) : empty;
  const Tensor& tn = neg_logits.valid() ? value(neg_logits) : empty;
  if (tp.size() + tn.size() < 1)
    throw std::invalid_argument("bce_with_logits: needs at least one logit");
  double loss = 0.0;
  for (double v : tp.data) loss += softplus(-v);  // -log sigmoid(v)
  for (double v : tn.data) loss += softplus(v);   // -log(1 - sigmoid(v))
  std::vector<int> parents;
  if (pos_logits.valid()) parents.push_back(pos_logits.id);
  if (neg_logits.valid()) parents.push_back(neg_logits.id);
  const int ip = pos_logits.id, in = neg_logits.id;
  return push(Tensor::scalar(loss), parents, [ip, in](Tape& t, const Tensor& g) {
    const double s = g.data[0];
    if (ip >= 0) {
      if (Tensor* gp = t.sink(ip)) {
        const Tensor& vp = t.node(ip).value;
        for (int i = 0; i < vp.size(); ++i)
          gp->data[i] += s * (sigmoid_scalar(vp.data[i]) - 1.0);
      }
    }
    if (in >= 0) {
      if (Tensor* gn = t.sink(in)) {
        const Tensor& vn = t.node(in).value;
        for (int i = 0; i < vn.size(); ++i)
          gn->data[i] += s * sigmoid_scalar(vn.data[i]);
      }
    }
  });
}

Var Tape::cross_entropy(Var logits_row, int klass) {
  const Tensor& tl = value(logits_row);
  if (tl.rows != 1) throw std::invalid_argument("cross_entropy: expected a 1xC row");
  return cross_entropy_rows(logits_row, {klass});
}

Var Tape::cross_entropy_rows(Var logits, const std::vector<int>& classes) {
  const Tensor& tl = value(logits);
  if (tl.rows != static_cast<int>(classes.size()))
    throw std::invalid_argument("cross_entropy_rows: one class per row required");
  if (tl.rows == 0 || tl.cols == 0)
    throw std::invalid_argument("cross_entropy_rows: empty logits");
  const int m = tl.rows;
  double loss = 0.0;
  for (int r = 0; r < m; ++r) {
    const int k = classes[static_cast<std::size_t>(r)];
    if (k < 0 || k >= tl.cols)
      throw std::invalid_argument("cross_entropy: class " + std::to_string(k) +
                                  " outside " + tl.shape_str());
    double mx = -HUGE_VAL;
    for (int c = 0; c < tl.cols; ++c) mx = std::max(mx, tl.at(r, c));
    double sum = 0.0;
    for (int c = 0; c < tl.cols; ++c) sum += std::exp(tl.at(r, c) - mx);
    loss += (mx + std::log(sum) - tl.at(r, k)) / m;
  }
  const int il = logits.id;
  return push(Tensor::scalar(loss), {il}, [il, classes, m](Tape& t, const Tensor& g) {
    if (Tensor* gl = t.sink(il)) {
      const Tensor& vl = t.node(il).value;
      const double s = g.data[0] / m;
      for (int r = 0; r < vl.rows; ++r) {
        double mx = -HUGE_VAL;
        for (int c = 0; c < vl.cols; ++c) mx = std::max(mx, vl.at(r, c));
        double sum = 0.0;
        for (int c = 0; c < vl.cols; ++c) sum += std::exp(vl.at(r, c) - mx);
        for (int c = 0; c < vl.cols; ++c) {
          const double p = std::exp(vl.at(r, c) - mx) / sum;
          gl->at(r, c) +=
              s * (p - (c == classes[static_cast<std::size_t>(r)] ? 1.0 : 0.0));
        }
      }
    }
  });
}

const Tensor& Tape::grad(Var v) const {
  const Node& n = node(v.id);
  if (!backward_done_) throw std::logic_error("Tape::grad: backward() not run");
  if (n.grad.size() == 0) {
    static const Tensor kEmpty;
    if (n.value.size() == 0) return kEmpty;
    // Unused in the graph: gradient is identically zero.
    const_cast<Node&>(n).grad = Tensor(n.value.rows, n.value.cols);
  }
  return n.grad;
}

void Tape::backward(Var loss) {
  if (backward_done_) throw std::logic_error("Tape::backward: already run");
  const Node& ln = node(loss.id);
  if (ln.value.size() != 1)
    throw std::invalid_argument("backward: loss must be scalar, got " +
                                ln.value.shape_str());
  backward_done_ = true;
  if (!ln.requires_grad) return;  // nothing differentiable upstream

  std::vector<char> needed(nodes_.size(), 0);
  needed[static_cast<std::size_t>(loss.id)] = 1;
  for (int i = loss.id; i >= 0; --i) {
    if (!needed[static_cast<std::size_t>(i)]) continue;
    for (int p : nodes_[static_cast<std::size_t>(i)].parents)
      if (node(p).requires_grad) needed[static_cast<std::size_t>(p)] = 1;
  }
  sink(loss.id)->data[0] = 1.0;
  for (int i = loss.id; i >= 0; --i) {
    Node& n = nodes_[static_cast<std::size_t>(i)];
    if (!needed[static_cast<std::size_t>(i)] || !n.back) continue;
    if (n.grad.size() == 0) continue;  // no gradient ever reached this node
    n.back(*this, n.grad);
  }
}

}  // namespace planlink
