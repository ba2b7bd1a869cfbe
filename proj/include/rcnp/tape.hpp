// Copyright 2026 The rcnp authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstdint>
#include <vector>

#include "rcnp/tensor.hpp"

namespace rcnp {

/// Handle to a node on a Tape.
struct Val {
  int id = -1;
  bool valid() const { return id >= 0; }
};

/// Reverse-mode autodiff over a tape of coarse tensor primitives. Nodes are
/// appended in evaluation order, so inputs always reference earlier nodes
/// and the reverse sweep is a plain backwards iteration. Single-threaded.
class Tape {
 public:
  enum class Op : std::uint8_t {
    kConst,
    kParam,
    kMatmul,
    kTranspose,
    kAdd,
    kSub,
    kMul,
    kDiv,
    kScale,
    kAddScalar,
    kRelu,
    kTanh,
    kExp,
    kLog,
    kSoftplus,
    kReduceSum,
    kReduceSumAll,
    kReshape,
    kConcatCols,
    kSliceCols,
    kTileRows,
    kAddRowVec,
    kAddColVec,
    kAddDiag,
    kDiagPart,
    kCholesky,
    kTriSolve,
  };

  Val constant(Tensor t) { return leaf(std::move(t), false); }
  Val param(Tensor t) { return leaf(std::move(t), true); }

  Val matmul(Val a, Val b);
  Val transpose(Val a);

  // Elementwise binaries: equal shapes, or either side a one-element tensor
  // broadcast over the other.
  Val add(Val a, Val b);
  Val sub(Val a, Val b);
  Val mul(Val a, Val b);
  Val div(Val a, Val b);

  Val scale(Val a, double c);
  Val add_scalar(Val a, double c);

  Val relu(Val a);
  Val tanh(Val a);
  Val exp(Val a);
  Val log(Val a);  // throws on any nonpositive entry
  Val softplus(Val a);

  Val reduce_sum(Val a, std::size_t axis);
  Val reduce_sum_all(Val a);
  Val reshape(Val a, std::vector<std::size_t> shape);

  Val concat_cols(const std::vector<Val>& parts);
  Val slice_cols(Val a, std::size_t c0, std::size_t c1);
  /// Repeat a rank-1 vector [n] as the rows of an [m x n] matrix.
  Val tile_rows(Val a, std::size_t m);
  /// a[m x n] + row vector v[n] broadcast over rows.
  Val add_rowvec(Val a, Val v);
  /// a[m x n] + column vector u[m] broadcast over columns.
  Val add_colvec(Val a, Val u);
  /// a[n x n] + diag(d).
  Val add_diag(Val a, Val d);
  Val diag_part(Val a);

  /// Lower Cholesky factor of a + jitter*I, with the escalation policy of
  /// rcnp::cholesky. Differentiable w.r.t. a.
  Val cholesky(Val a, double jitter = 1e-8);
  /// Solve L x = b (or L^T x = b). b must be rank 2 [n x k].
  Val tri_solve(Val L, Val b, bool transpose);

  const Tensor& value(Val v) const { return nodes_[v.id].val; }
  /// Adjoint of a node after backward(); zero tensor if it was never reached.
  const Tensor& grad(Val v);
  bool requires_grad(Val v) const { return nodes_[v.id].rg; }

  /// Reverse sweep from a scalar loss node.
  void backward(Val loss);

  std::size_t size() const { return nodes_.size(); }

  // Node inspection (used by differentiability diagnostics).
  Op op_at(std::size_t i) const { return nodes_[i].op; }
  const Tensor& value_at(std::size_t i) const { return nodes_[i].val; }
  const std::vector<int>& inputs_at(std::size_t i) const { return nodes_[i].in; }

 private:
  struct Node {
    Op op;
    std::vector<int> in;
    Tensor val;
    Tensor adj;
    bool rg = false;
    bool touched = false;
    double c = 0.0;        // scale factor / added scalar / jitter used
    std::size_t s0 = 0;    // axis / slice start / tile count
    std::size_t s1 = 0;    // slice end
    bool tflag = false;    // tri_solve transpose
  };

  Val leaf(Tensor t, bool rg);
  Val push(Node n);
  void accumulate(int id, const Tensor& delta);
  Tensor& adj_of(int id);
  void backprop_node(int id);

  std::vector<Node> nodes_;
  bool ran_backward_ = false;
};

}  // namespace rcnp
