#pragma once

#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

namespace morphbench {

// Dense row-major tensor of doubles. Activations are NCHW; 2D feature maps
// are [N, F]; weights follow the owning layer's convention.
struct Tensor {
  std::vector<int> shape;
  std::vector<double> data;

  Tensor() = default;
  explicit Tensor(std::vector<int> s) : shape(std::move(s)) { data.assign(numel(shape), 0.0); }

  static int64_t numel(const std::vector<int>& s) {
    int64_t n = 1;
    for (int d : s) n *= d;
    return n;
  }
  int64_t size() const { return static_cast<int64_t>(data.size()); }
  int dim(int i) const { return shape[i]; }

  double* ptr() { return data.data(); }
  const double* ptr() const { return data.data(); }

  double& operator[](int64_t i) { return data[static_cast<size_t>(i)]; }
  double operator[](int64_t i) const { return data[static_cast<size_t>(i)]; }

  void zero() { std::fill(data.begin(), data.end(), 0.0); }
};

// Model state: named tensors plus a trainable flag (batch-norm running
// statistics ride along untrained).
struct ParameterSet {
  std::vector<std::string> names;
  std::vector<Tensor> tensors;
  std::vector<char> trainable;

  int add(std::string name, Tensor t, bool is_trainable) {
    names.push_back(std::move(name));
    tensors.push_back(std::move(t));
    trainable.push_back(is_trainable ? 1 : 0);
    return static_cast<int>(tensors.size()) - 1;
  }
  size_t count() const { return tensors.size(); }
  int64_t trainable_count() const {
    int64_t n = 0;
    for (size_t i = 0; i < tensors.size(); ++i)
      if (trainable[i]) n += tensors[i].size();
    return n;
  }
};

// Sum of trainable tensor sizes (batch-norm statistics excluded).
inline int64_t parameter_count(const ParameterSet& params) { return params.trainable_count(); }

// Same names/shapes/flags, all values zero (gradient and moment buffers).
inline ParameterSet zeros_like(const ParameterSet& params) {
  ParameterSet out;
  for (size_t i = 0; i < params.count(); ++i)
    out.add(params.names[i], Tensor(params.tensors[i].shape), params.trainable[i] != 0);
  return out;
}

}  // namespace morphbench
