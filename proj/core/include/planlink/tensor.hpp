#pragma once
// Dense row-major matrix of 64-bit floats. Scalars are 1x1, row vectors 1xN.
// Everything the models need is two-dimensional, so the shape is fixed at
// rank 2 rather than carrying a general dim list.

#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <stdexcept>
#include <string>
#include <vector>

namespace planlink {

struct Tensor {
  int rows = 0;
  int cols = 0;
  std::vector<double> data;

  Tensor() = default;
  Tensor(int r, int c, double fill = 0.0)
      : rows(r), cols(c), data(static_cast<std::size_t>(r) * c, fill) {
    if (r < 0 || c < 0) throw std::invalid_argument("Tensor: negative dims");
  }

  static Tensor scalar(double v) {
    Tensor t(1, 1);
    t.data[0] = v;
    return t;
  }

  static Tensor row(std::vector<double> v) {
    Tensor t;
    t.rows = 1;
    t.cols = static_cast<int>(v.size());
    t.data = std::move(v);
    return t;
  }

  static Tensor from(std::initializer_list<std::initializer_list<double>> rows_init) {
    Tensor t(static_cast<int>(rows_init.size()),
             rows_init.size() ? static_cast<int>(rows_init.begin()->size()) : 0);
    int r = 0;
    for (const auto& row : rows_init) {
      if (static_cast<int>(row.size()) != t.cols)
        throw std::invalid_argument("Tensor::from: ragged rows");
      int c = 0;
      for (double v : row) t.at(r, c++) = v;
      ++r;
    }
    return t;
  }

  double& at(int r, int c) { return data[static_cast<std::size_t>(r) * cols + c]; }
  double at(int r, int c) const { return data[static_cast<std::size_t>(r) * cols + c]; }

  int size() const { return rows * cols; }
  bool same_shape(const Tensor& o) const { return rows == o.rows && cols == o.cols; }

  std::string shape_str() const {
    return "[" + std::to_string(rows) + "x" + std::to_string(cols) + "]";
  }

  bool all_finite() const {
    for (double v : data)
      if (!std::isfinite(v)) return false;
    return true;
  }

  double item() const {
    if (size() != 1) throw std::invalid_argument("Tensor::item: not a scalar " + shape_str());
    return data[0];
  }
};

}  // namespace planlink
