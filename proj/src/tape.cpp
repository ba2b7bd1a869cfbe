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

#include "rcnp/tape.hpp"

#include <cmath>
#include <cstring>
#include <stdexcept>

#include "rcnp/linalg.hpp"

namespace rcnp {

namespace {

bool is_scalar_like(const Tensor& t) { return t.size() == 1; }

double stable_sigmoid(double x) {
  if (x >= 0.0) {
    return 1.0 / (1.0 + std::exp(-x));
  }
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double stable_softplus(double x) {
  // max(x, 0) + log1p(exp(-|x|)) never overflows.
  return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x)));
}

void check_rank2(const Tensor& t, const char* who) {
  if (t.rank() != 2) {
    throw std::invalid_argument(std::string(who) + ": expected rank-2 tensor, got " +
                                t.shape_str());
  }
}

}  // namespace

Val Tape::leaf(Tensor t, bool rg) {
  Node n;
  n.op = rg ? Op::kParam : Op::kConst;
  n.val = std::move(t);
  n.rg = rg;
  return push(std::move(n));
}

Val Tape::push(Node n) {
  nodes_.push_back(std::move(n));
  return Val{static_cast<int>(nodes_.size()) - 1};
}

Val Tape::matmul(Val a, Val b) {
  const Tensor& ta = value(a);
  const Tensor& tb = value(b);
  if (ta.rank() != 2 || tb.rank() != 2 || ta.dim(1) != tb.dim(0)) {
    throw std::invalid_argument("matmul: incompatible shapes " + ta.shape_str() + " and " +
                                tb.shape_str());
  }
  Node n;
  n.op = Op::kMatmul;
  n.in = {a.id, b.id};
  n.rg = nodes_[a.id].rg || nodes_[b.id].rg;
  n.val = Tensor({ta.dim(0), tb.dim(1)});
  detail::gemm_nn(ta.data(), tb.data(), n.val.data(), ta.dim(0), ta.dim(1), tb.dim(1));
  return push(std::move(n));
}

Val Tape::transpose(Val a) {
  const Tensor& ta = value(a);
  check_rank2(ta, "transpose");
  Node n;
  n.op = Op::kTranspose;
  n.in = {a.id};
  n.rg = nodes_[a.id].rg;
  n.val = Tensor({ta.dim(1), ta.dim(0)});
  for (std::size_t i = 0; i < ta.dim(0); ++i)
    for (std::size_t j = 0; j < ta.dim(1); ++j) n.val.at(j, i) = ta.at(i, j);
  return push(std::move(n));
}

namespace {
void check_broadcast(const Tensor& a, const Tensor& b, const char* who) {
  if (!a.same_shape(b) && !is_scalar_like(a) && !is_scalar_like(b)) {
    throw std::invalid_argument(std::string(who) + ": shapes " + a.shape_str() + " and " +
                                b.shape_str() + " are not broadcast-compatible");
  }
}
}  // namespace

Val Tape::add(Val a, Val b) {
  const Tensor& ta = value(a);
  const Tensor& tb = value(b);
  check_broadcast(ta, tb, "add");
  Node n;
  n.op = Op::kAdd;
  n.in = {a.id, b.id};
  n.rg = nodes_[a.id].rg || nodes_[b.id].rg;
  const Tensor& big = is_scalar_like(ta) ? tb : ta;
  n.val = Tensor(big.shape());
  const bool sa = is_scalar_like(ta), sb = is_scalar_like(tb);
  for (std::size_t i = 0; i < big.size(); ++i)
    n.val[i] = (sa ? ta[0] : ta[i]) + (sb ? tb[0] : tb[i]);
  return push(std::move(n));
}

Val Tape::sub(Val a, Val b) {
  const Tensor& ta = value(a);
  const Tensor& tb = value(b);
  check_broadcast(ta, tb, "sub");
  Node n;
  n.op = Op::kSub;
  n.in = {a.id, b.id};
  n.rg = nodes_[a.id].rg || nodes_[b.id].rg;
  const Tensor& big = is_scalar_like(ta) ? tb : ta;
  n.val = Tensor(big.shape());
  const bool sa = is_scalar_like(ta), sb = is_scalar_like(tb);
  for (std::size_t i = 0; i < big.size(); ++i)
    n.val[i] = (sa ? ta[0] : ta[i]) - (sb ? tb[0] : tb[i]);
  return push(std::move(n));
}

Val Tape::mul(Val a, Val b) {
  const Tensor& ta = value(a);
  const Tensor& tb = value(b);
  check_broadcast(ta, tb, "mul");
  Node n;
  n.op = Op::kMul;
  n.in = {a.id, b.id};
  n.rg = nodes_[a.id].rg || nodes_[b.id].rg;
  const Tensor& big = is_scalar_like(ta) ? tb : ta;
  n.val = Tensor(big.shape());
  const bool sa = is_scalar_like(ta), sb = is_scalar_like(tb);
  for (std::size_t i = 0; i < big.size(); ++i)
    n.val[i] = (sa ? ta[0] : ta[i]) * (sb ? tb[0] : tb[i]);
  return push(std::move(n));
}

Val Tape::div(Val a, Val b) {
  const Tensor& ta = value(a);
  const Tensor& tb = value(b);
  check_broadcast(ta, tb, "div");
  Node n;
  n.op = Op::kDiv;
  n.in = {a.id, b.id};
  n.rg = nodes_[a.id].rg || nodes_[b.id].rg;
  const Tensor& big = is_scalar_like(ta) ? tb : ta;
  n.val = Tensor(big.shape());
  const bool sa = is_scalar_like(ta), sb = is_scalar_like(tb);
  for (std::size_t i = 0; i < big.size(); ++i)
    n.val[i] = (sa ? ta[0] : ta[i]) / (sb ? tb[0] : tb[i]);
  return push(std::move(n));
}

Val Tape::scale(Val a, double c) {
  const Tensor& ta = value(a);
  Node n;
  n.op = Op::kScale;
  n.in = {a.id};
  n.rg = nodes_[a.id].rg;
  n.c = c;
  n.val = Tensor(ta.shape());
  for (std::size_t i = 0; i < ta.size(); ++i) n.val[i] = c * ta[i];
  return push(std::move(n));
}

Val Tape::add_scalar(Val a, double c) {
  const Tensor& ta = value(a);
  Node n;
  n.op = Op::kAddScalar;
  n.in = {a.id};
  n.rg = nodes_[a.id].rg;
  n.c = c;
  n.val = Tensor(ta.shape());
  for (std::size_t i = 0; i < ta.size(); ++i) n.val[i] = ta[i] + c;
  return push(std::move(n));
}

Val Tape::relu(Val a) {
  const Tensor& ta = value(a);
  Node n;
  n.op = Op::kRelu;
  n.in = {a.id};
  n.rg = nodes_[a.id].rg;
  n.val = Tensor(ta.shape());
  for (std::size_t i = 0; i < ta.size(); ++i) n.val[i] = ta[i] > 0.0 ? ta[i] : 0.0;
  return push(std::move(n));
}

Val Tape::tanh(Val a) {
  const Tensor& ta = value(a);
  Node n;
  n.op = Op::kTanh;
  n.in = {a.id};
  n.rg = nodes_[a.id].rg;
  n.val = Tensor(ta.shape());
  for (std::size_t i = 0; i < ta.size(); ++i) n.val[i] = std::tanh(ta[i]);
  return push(std::move(n));
}

Val Tape::exp(Val a) {
  const Tensor& ta = value(a);
  Node n;
  n.op = Op::kExp;
  n.in = {a.id};
  n.rg = nodes_[a.id].rg;
  n.val = Tensor(ta.shape());
  for (std::size_t i = 0; i < ta.size(); ++i) n.val[i] = std::exp(ta[i]);
  return push(std::move(n));
}

Val Tape::log(Val a) {
  const Tensor& ta = value(a);
  Node n;
  n.op = Op::kLog;
  n.in = {a.id};
  n.rg = nodes_[a.id].rg;
  n.val = Tensor(ta.shape());
  for (std::size_t i = 0; i < ta.size(); ++i) {
    if (!(ta[i] > 0.0)) {
      throw std::invalid_argument("log: nonpositive entry " + std::to_string(ta[i]) +
                                  " at flat index " + std::to_string(i));
    }
    n.val[i] = std::log(ta[i]);
  }
  return push(std::move(n));
}

Val Tape::softplus(Val a) {
  const Tensor& ta = value(a);
  Node n;
  n.op = Op::kSoftplus;
  n.in = {a.id};
  n.rg = nodes_[a.id].rg;
  n.val = Tensor(ta.shape());
  for (std::size_t i = 0; i < ta.size(); ++i) n.val[i] = stable_softplus(ta[i]);
  return push(std::move(n));
}

Val Tape::reduce_sum(Val a, std::size_t axis) {
  const Tensor& ta = value(a);
  if (axis >= ta.rank()) {
    throw std::invalid_argument("reduce_sum: axis " + std::to_string(axis) +
                                " out of range for shape " + ta.shape_str());
  }
  std::vector<std::size_t> out_shape;
  for (std::size_t i = 0; i < ta.rank(); ++i)
    if (i != axis) out_shape.push_back(ta.dim(i));
  // outer / axis / inner decomposition of the row-major layout
  std::size_t outer = 1, inner = 1;
  for (std::size_t i = 0; i < axis; ++i) outer *= ta.dim(i);
  for (std::size_t i = axis + 1; i < ta.rank(); ++i) inner *= ta.dim(i);
  const std::size_t mid = ta.dim(axis);

  Node n;
  n.op = Op::kReduceSum;
  n.in = {a.id};
  n.rg = nodes_[a.id].rg;
  n.s0 = axis;
  n.val = Tensor(out_shape);
  const double* src = ta.data();
  double* dst = n.val.data();
  for (std::size_t o = 0; o < outer; ++o) {
    double* drow = dst + o * inner;
    for (std::size_t m = 0; m < mid; ++m) {
      const double* srow = src + (o * mid + m) * inner;
      for (std::size_t i = 0; i < inner; ++i) drow[i] += srow[i];
    }
  }
  return push(std::move(n));
}

Val Tape::reduce_sum_all(Val a) {
  const Tensor& ta = value(a);
  Node n;
  n.op = Op::kReduceSumAll;
  n.in = {a.id};
  n.rg = nodes_[a.id].rg;
  double s = 0.0;
  for (std::size_t i = 0; i < ta.size(); ++i) s += ta[i];
  n.val = Tensor::scalar(s);
  return push(std::move(n));
}

Val Tape::reshape(Val a, std::vector<std::size_t> shape) {
  const Tensor& ta = value(a);
  if (shape_numel(shape) != ta.size()) {
    throw std::invalid_argument("reshape: cannot view " + ta.shape_str() + " as " +
                                Tensor::shape_str(shape));
  }
  Node n;
  n.op = Op::kReshape;
  n.in = {a.id};
  n.rg = nodes_[a.id].rg;
  n.val = Tensor(std::move(shape), std::vector<double>(ta.data(), ta.data() + ta.size()));
  return push(std::move(n));
}

Val Tape::concat_cols(const std::vector<Val>& parts) {
  if (parts.empty()) throw std::invalid_argument("concat_cols: no inputs");
  std::size_t rows = value(parts[0]).dim(0), cols = 0;
  Node n;
  n.op = Op::kConcatCols;
  for (Val p : parts) {
    const Tensor& tp = value(p);
    check_rank2(tp, "concat_cols");
    if (tp.dim(0) != rows) {
      throw std::invalid_argument("concat_cols: row mismatch " + tp.shape_str());
    }
    cols += tp.dim(1);
    n.in.push_back(p.id);
    n.rg = n.rg || nodes_[p.id].rg;
  }
  n.val = Tensor({rows, cols});
  std::size_t off = 0;
  for (Val p : parts) {
    const Tensor& tp = value(p);
    for (std::size_t r = 0; r < rows; ++r)
      std::memcpy(n.val.data() + r * cols + off, tp.data() + r * tp.dim(1),
                  tp.dim(1) * sizeof(double));
    off += tp.dim(1);
  }
  return push(std::move(n));
}

Val Tape::slice_cols(Val a, std::size_t c0, std::size_t c1) {
  const Tensor& ta = value(a);
  check_rank2(ta, "slice_cols");
  if (c0 >= c1 || c1 > ta.dim(1)) {
    throw std::invalid_argument("slice_cols: range [" + std::to_string(c0) + "," +
                                std::to_string(c1) + ") invalid for " + ta.shape_str());
  }
  Node n;
  n.op = Op::kSliceCols;
  n.in = {a.id};
  n.rg = nodes_[a.id].rg;
  n.s0 = c0;
  n.s1 = c1;
  n.val = Tensor({ta.dim(0), c1 - c0});
  for (std::size_t r = 0; r < ta.dim(0); ++r)
    std::memcpy(n.val.data() + r * (c1 - c0), ta.data() + r * ta.dim(1) + c0,
                (c1 - c0) * sizeof(double));
  return push(std::move(n));
}

Val Tape::tile_rows(Val a, std::size_t m) {
  const Tensor& ta = value(a);
  if (ta.rank() != 1) {
    throw std::invalid_argument("tile_rows: expected rank-1 vector, got " + ta.shape_str());
  }
  Node n;
  n.op = Op::kTileRows;
  n.in = {a.id};
  n.rg = nodes_[a.id].rg;
  n.s0 = m;
  n.val = Tensor({m, ta.dim(0)});
  for (std::size_t r = 0; r < m; ++r)
    std::memcpy(n.val.data() + r * ta.dim(0), ta.data(), ta.dim(0) * sizeof(double));
  return push(std::move(n));
}

Val Tape::add_rowvec(Val a, Val v) {
  const Tensor& ta = value(a);
  const Tensor& tv = value(v);
  check_rank2(ta, "add_rowvec");
  if (tv.rank() != 1 || tv.dim(0) != ta.dim(1)) {
    throw std::invalid_argument("add_rowvec: vector " + tv.shape_str() + " incompatible with " +
                                ta.shape_str());
  }
  Node n;
  n.op = Op::kAddRowVec;
  n.in = {a.id, v.id};
  n.rg = nodes_[a.id].rg || nodes_[v.id].rg;
  n.val = ta;
  for (std::size_t r = 0; r < ta.dim(0); ++r)
    for (std::size_t c = 0; c < ta.dim(1); ++c) n.val.at(r, c) += tv[c];
  return push(std::move(n));
}

Val Tape::add_colvec(Val a, Val u) {
  const Tensor& ta = value(a);
  const Tensor& tu = value(u);
  check_rank2(ta, "add_colvec");
  if (tu.rank() != 1 || tu.dim(0) != ta.dim(0)) {
    throw std::invalid_argument("add_colvec: vector " + tu.shape_str() + " incompatible with " +
                                ta.shape_str());
  }
  Node n;
  n.op = Op::kAddColVec;
  n.in = {a.id, u.id};
  n.rg = nodes_[a.id].rg || nodes_[u.id].rg;
  n.val = ta;
  for (std::size_t r = 0; r < ta.dim(0); ++r)
    for (std::size_t c = 0; c < ta.dim(1); ++c) n.val.at(r, c) += tu[r];
  return push(std::move(n));
}

Val Tape::add_diag(Val a, Val d) {
  const Tensor& ta = value(a);
  const Tensor& td = value(d);
  check_rank2(ta, "add_diag");
  if (ta.dim(0) != ta.dim(1) || td.rank() != 1 || td.dim(0) != ta.dim(0)) {
    throw std::invalid_argument("add_diag: diag " + td.shape_str() + " incompatible with " +
                                ta.shape_str());
  }
  Node n;
  n.op = Op::kAddDiag;
  n.in = {a.id, d.id};
  n.rg = nodes_[a.id].rg || nodes_[d.id].rg;
  n.val = ta;
  for (std::size_t i = 0; i < ta.dim(0); ++i) n.val.at(i, i) += td[i];
  return push(std::move(n));
}

Val Tape::diag_part(Val a) {
  const Tensor& ta = value(a);
  check_rank2(ta, "diag_part");
  if (ta.dim(0) != ta.dim(1)) {
    throw std::invalid_argument("diag_part: expected square matrix, got " + ta.shape_str());
  }
  Node n;
  n.op = Op::kDiagPart;
  n.in = {a.id};
  n.rg = nodes_[a.id].rg;
  n.val = Tensor({ta.dim(0)});
  for (std::size_t i = 0; i < ta.dim(0); ++i) n.val[i] = ta.at(i, i);
  return push(std::move(n));
}

Val Tape::cholesky(Val a, double jitter) {
  CholeskyResult r = rcnp::cholesky(value(a), jitter);
  Node n;
  n.op = Op::kCholesky;
  n.in = {a.id};
  n.rg = nodes_[a.id].rg;
  n.c = r.jitter_used;
  n.val = std::move(r.L);
  return push(std::move(n));
}

Val Tape::tri_solve(Val L, Val b, bool transpose) {
  const Tensor& tb = value(b);
  check_rank2(tb, "tri_solve(rhs)");
  Node n;
  n.op = Op::kTriSolve;
  n.in = {L.id, b.id};
  n.rg = nodes_[L.id].rg || nodes_[b.id].rg;
  n.tflag = transpose;
  n.val = rcnp::tri_solve(value(L), tb, transpose);
  return push(std::move(n));
}

const Tensor& Tape::grad(Val v) {
  if (!ran_backward_) throw std::logic_error("Tape::grad called before backward");
  return adj_of(v.id);
}

Tensor& Tape::adj_of(int id) {
  Node& n = nodes_[id];
  if (!n.touched) {
    n.adj = Tensor(n.val.shape());
    n.touched = true;
  }
  return n.adj;
}

void Tape::accumulate(int id, const Tensor& delta) {
  Tensor& a = adj_of(id);
  for (std::size_t i = 0; i < a.size(); ++i) a[i] += delta[i];
}

void Tape::backward(Val loss) {
  const Node& ln = nodes_[loss.id];
  if (ln.val.size() != 1) {
    throw std::invalid_argument("backward: loss must be scalar, got " + ln.val.shape_str());
  }
  if (!ln.rg) {
    throw std::logic_error("backward: loss does not depend on any parameter");
  }
  adj_of(loss.id)[0] = 1.0;
  for (int id = loss.id; id >= 0; --id) {
    Node& n = nodes_[id];
    if (!n.touched || !n.rg) continue;
    backprop_node(id);
  }
  ran_backward_ = true;
}

void Tape::backprop_node(int id) {
  Node& n = nodes_[id];
  const Tensor& g = n.adj;
  auto rg = [&](int k) { return nodes_[k].rg; };
  auto in_val = [&](int slot) -> const Tensor& { return nodes_[n.in[slot]].val; };

  switch (n.op) {
    case Op::kConst:
    case Op::kParam:
      break;

    case Op::kMatmul: {
      const Tensor& ta = in_val(0);
      const Tensor& tb = in_val(1);
      if (rg(n.in[0])) {
        Tensor& ga = adj_of(n.in[0]);
        detail::gemm_nt_acc(g.data(), tb.data(), ga.data(), ta.dim(0), ta.dim(1), tb.dim(1));
      }
      if (rg(n.in[1])) {
        Tensor& gb = adj_of(n.in[1]);
        detail::gemm_tn_acc(ta.data(), g.data(), gb.data(), ta.dim(0), ta.dim(1), tb.dim(1));
      }
      break;
    }

    case Op::kTranspose: {
      if (rg(n.in[0])) {
        Tensor& ga = adj_of(n.in[0]);
        for (std::size_t i = 0; i < g.dim(0); ++i)
          for (std::size_t j = 0; j < g.dim(1); ++j) ga.at(j, i) += g.at(i, j);
      }
      break;
    }

    case Op::kAdd:
    case Op::kSub: {
      const double sign1 = n.op == Op::kAdd ? 1.0 : -1.0;
      for (int slot = 0; slot < 2; ++slot) {
        if (!rg(n.in[slot])) continue;
        const double s = slot == 0 ? 1.0 : sign1;
        Tensor& ga = adj_of(n.in[slot]);
        if (ga.size() == g.size()) {
          for (std::size_t i = 0; i < g.size(); ++i) ga[i] += s * g[i];
        } else {  // broadcast scalar input
          double acc = 0.0;
          for (std::size_t i = 0; i < g.size(); ++i) acc += g[i];
          ga[0] += s * acc;
        }
      }
      break;
    }

    case Op::kMul: {
      const Tensor& ta = in_val(0);
      const Tensor& tb = in_val(1);
      const bool sa = is_scalar_like(ta), sb = is_scalar_like(tb);
      if (rg(n.in[0])) {
        Tensor& ga = adj_of(n.in[0]);
        if (!sa) {
          for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * (sb ? tb[0] : tb[i]);
        } else {
          double acc = 0.0;
          for (std::size_t i = 0; i < g.size(); ++i) acc += g[i] * tb[i];
          ga[0] += acc;
        }
      }
      if (rg(n.in[1])) {
        Tensor& gb = adj_of(n.in[1]);
        if (!sb) {
          for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * (sa ? ta[0] : ta[i]);
        } else {
          double acc = 0.0;
          for (std::size_t i = 0; i < g.size(); ++i) acc += g[i] * ta[i];
          gb[0] += acc;
        }
      }
      break;
    }

    case Op::kDiv: {
      const Tensor& ta = in_val(0);
      const Tensor& tb = in_val(1);
      const bool sa = is_scalar_like(ta), sb = is_scalar_like(tb);
      if (rg(n.in[0])) {
        Tensor& ga = adj_of(n.in[0]);
        if (!sa) {
          for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] / (sb ? tb[0] : tb[i]);
        } else {
          double acc = 0.0;
          for (std::size_t i = 0; i < g.size(); ++i) acc += g[i] / tb[i];
          ga[0] += acc;
        }
      }
      if (rg(n.in[1])) {
        Tensor& gb = adj_of(n.in[1]);
        if (!sb) {
          for (std::size_t i = 0; i < g.size(); ++i) {
            const double bi = tb[i];
            gb[i] -= g[i] * (sa ? ta[0] : ta[i]) / (bi * bi);
          }
        } else {
          double acc = 0.0;
          for (std::size_t i = 0; i < g.size(); ++i) acc += g[i] * ta[i];
          gb[0] -= acc / (tb[0] * tb[0]);
        }
      }
      break;
    }

    case Op::kScale: {
      if (rg(n.in[0])) {
        Tensor& ga = adj_of(n.in[0]);
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += n.c * g[i];
      }
      break;
    }

    case Op::kAddScalar:
    case Op::kReshape: {
      if (rg(n.in[0])) {
        Tensor& ga = adj_of(n.in[0]);
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
      }
      break;
    }

    case Op::kRelu: {
      if (rg(n.in[0])) {
        const Tensor& ta = in_val(0);
        Tensor& ga = adj_of(n.in[0]);
        for (std::size_t i = 0; i < g.size(); ++i)
          if (ta[i] > 0.0) ga[i] += g[i];
      }
      break;
    }

    case Op::kTanh: {
      if (rg(n.in[0])) {
        Tensor& ga = adj_of(n.in[0]);
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * (1.0 - n.val[i] * n.val[i]);
      }
      break;
    }

    case Op::kExp: {
      if (rg(n.in[0])) {
        Tensor& ga = adj_of(n.in[0]);
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * n.val[i];
      }
      break;
    }

    case Op::kLog: {
      if (rg(n.in[0])) {
        const Tensor& ta = in_val(0);
        Tensor& ga = adj_of(n.in[0]);
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] / ta[i];
      }
      break;
    }

    case Op::kSoftplus: {
      if (rg(n.in[0])) {
        const Tensor& ta = in_val(0);
        Tensor& ga = adj_of(n.in[0]);
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * stable_sigmoid(ta[i]);
      }
      break;
    }

    case Op::kReduceSum: {
      if (rg(n.in[0])) {
        const Tensor& ta = in_val(0);
        Tensor& ga = adj_of(n.in[0]);
        const std::size_t axis = n.s0;
        std::size_t outer = 1, inner = 1;
        for (std::size_t i = 0; i < axis; ++i) outer *= ta.dim(i);
        for (std::size_t i = axis + 1; i < ta.rank(); ++i) inner *= ta.dim(i);
        const std::size_t mid = ta.dim(axis);
        for (std::size_t o = 0; o < outer; ++o) {
          const double* grow = g.data() + o * inner;
          for (std::size_t m = 0; m < mid; ++m) {
            double* arow = ga.data() + (o * mid + m) * inner;
            for (std::size_t i = 0; i < inner; ++i) arow[i] += grow[i];
          }
        }
      }
      break;
    }

    case Op::kReduceSumAll: {
      if (rg(n.in[0])) {
        Tensor& ga = adj_of(n.in[0]);
        const double gv = g[0];
        for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += gv;
      }
      break;
    }

    case Op::kConcatCols: {
      const std::size_t rows = n.val.dim(0), cols = n.val.dim(1);
      std::size_t off = 0;
      for (int pid : n.in) {
        const Tensor& tp = nodes_[pid].val;
        const std::size_t w = tp.dim(1);
        if (rg(pid)) {
          Tensor& gp = adj_of(pid);
          for (std::size_t r = 0; r < rows; ++r)
            for (std::size_t c = 0; c < w; ++c) gp.at(r, c) += g.data()[r * cols + off + c];
        }
        off += w;
      }
      break;
    }

    case Op::kSliceCols: {
      if (rg(n.in[0])) {
        const Tensor& ta = in_val(0);
        Tensor& ga = adj_of(n.in[0]);
        const std::size_t w = n.s1 - n.s0;
        for (std::size_t r = 0; r < ta.dim(0); ++r)
          for (std::size_t c = 0; c < w; ++c) ga.at(r, n.s0 + c) += g.data()[r * w + c];
      }
      break;
    }

    case Op::kTileRows: {
      if (rg(n.in[0])) {
        Tensor& ga = adj_of(n.in[0]);
        const std::size_t nc = ga.dim(0);
        for (std::size_t r = 0; r < n.s0; ++r)
          for (std::size_t c = 0; c < nc; ++c) ga[c] += g.data()[r * nc + c];
      }
      break;
    }

    case Op::kAddRowVec: {
      if (rg(n.in[0])) accumulate(n.in[0], g);
      if (rg(n.in[1])) {
        Tensor& gv = adj_of(n.in[1]);
        for (std::size_t r = 0; r < g.dim(0); ++r)
          for (std::size_t c = 0; c < g.dim(1); ++c) gv[c] += g.at(r, c);
      }
      break;
    }

    case Op::kAddColVec: {
      if (rg(n.in[0])) accumulate(n.in[0], g);
      if (rg(n.in[1])) {
        Tensor& gu = adj_of(n.in[1]);
        for (std::size_t r = 0; r < g.dim(0); ++r)
          for (std::size_t c = 0; c < g.dim(1); ++c) gu[r] += g.at(r, c);
      }
      break;
    }

    case Op::kAddDiag: {
      if (rg(n.in[0])) accumulate(n.in[0], g);
      if (rg(n.in[1])) {
        Tensor& gd = adj_of(n.in[1]);
        for (std::size_t i = 0; i < gd.dim(0); ++i) gd[i] += g.at(i, i);
      }
      break;
    }

    case Op::kDiagPart: {
      if (rg(n.in[0])) {
        Tensor& ga = adj_of(n.in[0]);
        for (std::size_t i = 0; i < g.dim(0); ++i) ga.at(i, i) += g[i];
      }
      break;
    }

    case Op::kCholesky: {
      if (rg(n.in[0])) {
        // Adjoint of A -> L where L L^T = A + jitter*I.
        // P = Phi(L^T Lbar) with Phi keeping the lower triangle and halving
        // the diagonal; Abar = (1/2)(S + S^T) with S = L^-T P L^-1.
        const Tensor& L = n.val;
        const std::size_t m = L.dim(0);
        Tensor P({m, m});
        detail::gemm_tn_acc(L.data(), g.data(), P.data(), m, m, m);  // P = L^T * Lbar
        for (std::size_t i = 0; i < m; ++i) {
          for (std::size_t j = 0; j < m; ++j) {
            if (j > i) P.at(i, j) = 0.0;
            if (j == i) P.at(i, j) *= 0.5;
          }
        }
        Tensor X = rcnp::tri_solve(L, P, /*transpose=*/true);  // X = L^-T P
        // S^T = L^-T X^T  =>  S = (tri_solve(L, X^T, true))^T
        Tensor Xt({m, m});
        for (std::size_t i = 0; i < m; ++i)
          for (std::size_t j = 0; j < m; ++j) Xt.at(j, i) = X.at(i, j);
        Tensor St = rcnp::tri_solve(L, Xt, /*transpose=*/true);
        Tensor& ga = adj_of(n.in[0]);
        for (std::size_t i = 0; i < m; ++i)
          for (std::size_t j = 0; j < m; ++j) ga.at(i, j) += 0.5 * (St.at(j, i) + St.at(i, j));
      }
      break;
    }

    case Op::kTriSolve: {
      const Tensor& L = in_val(0);
      const Tensor& X = n.val;
      // Adjoint of the rhs: L^-T g (forward solve) or L^-1 g (transposed).
      Tensor gb = rcnp::tri_solve(L, g, !n.tflag);
      if (rg(n.in[1])) accumulate(n.in[1], gb);
      if (rg(n.in[0])) {
        Tensor& gl = adj_of(n.in[0]);
        const std::size_t m = L.dim(0), k = X.rank() == 2 ? X.dim(1) : 1;
        if (!n.tflag) {
          // Lbar -= tril(gb * X^T)
          for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j <= i; ++j) {
              double acc = 0.0;
              for (std::size_t c = 0; c < k; ++c) acc += gb[i * k + c] * X[j * k + c];
              gl.at(i, j) -= acc;
            }
        } else {
          // Lbar -= tril(X * gb^T)
          for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j <= i; ++j) {
              double acc = 0.0;
              for (std::size_t c = 0; c < k; ++c) acc += X[i * k + c] * gb[j * k + c];
              gl.at(i, j) -= acc;
            }
        }
      }
      break;
    }
  }
}

}  // namespace rcnp
