#pragma once
// Named-tensor container: binary file with a version header, a JSON metadata
// string, and raw little-endian f64 payloads. Round-trips exactly.

#include <string>
#include <utility>
#include <vector>

#include "planlink/tensor.hpp"

namespace planlink {

struct NamedTensors {
  std::string meta_json = "{}";
  std::vector<std::pair<std::string, Tensor>> items;

  const Tensor& get(const std::string& name) const;
  bool has(const std::string& name) const;
};

void save_tensors(const std::string& path, const NamedTensors& bundle);
NamedTensors load_tensors(const std::string& path);

}  // namespace planlink
