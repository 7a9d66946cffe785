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

#include "vtad/tensor.h"

#include <numeric>

#include "vtad/common.h"
#include "vtad/rng.h"

namespace vtad {

Tensor Tensor::Zeros(std::vector<size_t> shape) {
  size_t n = 1;
  for (size_t d : shape) {
    if (d == 0) throw ContractError("Tensor: zero-sized dimension");
    n *= d;
  }
  Tensor t;
  t.shape = std::move(shape);
  t.v.assign(n, 0.0);
  return t;
}

Tensor Tensor::ZerosLike(const Tensor& t) { return Zeros(t.shape); }

size_t Tensor::Rows() const {
  if (shape.size() != 2) throw ContractError("Tensor::Rows: rank != 2");
  return shape[0];
}

size_t Tensor::Cols() const {
  if (shape.size() != 2) throw ContractError("Tensor::Cols: rank != 2");
  return shape[1];
}

double& Tensor::At(size_t i) {
  if (shape.size() != 1 || i >= shape[0]) {
    throw ContractError("Tensor::At(i): bad index or rank");
  }
  return v[i];
}

double Tensor::At(size_t i) const {
  return const_cast<Tensor*>(this)->At(i);
}

double& Tensor::At(size_t i, size_t j) {
  if (shape.size() != 2 || i >= shape[0] || j >= shape[1]) {
    throw ContractError("Tensor::At(i,j): bad index or rank");
  }
  return v[i * shape[1] + j];
}

double Tensor::At(size_t i, size_t j) const {
  return const_cast<Tensor*>(this)->At(i, j);
}

void Tensor::Fill(double value) {
  std::fill(v.begin(), v.end(), value);
}

void Tensor::FillUniform(Rng* rng, double bound) {
  for (double& x : v) x = rng->Uniform(-bound, bound);
}

}  // namespace vtad
