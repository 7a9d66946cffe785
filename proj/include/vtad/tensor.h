// Copyright (c) 2025 The vtad Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//   http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef VTAD_TENSOR_H_
#define VTAD_TENSOR_H_

#include <cstddef>
#include <string>
#include <vector>

namespace vtad {

class Rng;

// Dense row-major double tensor: just enough structure for the hand-written
// forward/backward passes in this library.  All network math runs in 64-bit;
// 32-bit floats appear only inside layer-stack payloads.
struct Tensor {
  std::vector<size_t> shape;
  std::vector<double> v;

  Tensor() = default;
  static Tensor Zeros(std::vector<size_t> shape);
  static Tensor ZerosLike(const Tensor& t);

  size_t NumEl() const { return v.size(); }
  size_t Rank() const { return shape.size(); }
  size_t Rows() const;  // rank-2 only
  size_t Cols() const;  // rank-2 only

  double& At(size_t i);
  double At(size_t i) const;
  double& At(size_t i, size_t j);
  double At(size_t i, size_t j) const;

  void Fill(double value);
  // Independent U(-bound, bound) entries drawn in flat index order.
  void FillUniform(Rng* rng, double bound);
};

// Named view over a module's parameter tensors; optimizer and checkpoint
// code zip these lists by position, so every producer must emit a stable
// order.
struct ParamRef {
  std::string name;
  Tensor* tensor;
};

}  // namespace vtad

#endif  // VTAD_TENSOR_H_
