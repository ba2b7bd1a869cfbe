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

#include "rcnp/encoders.hpp"

#include <cmath>
#include <stdexcept>

namespace rcnp::encoding {

std::size_t comparison_dim(Comparison g, std::size_t d_x) {
  return g == Comparison::kDifference ? d_x : 1;
}

namespace {

void write_comparison(Comparison g, const double* x, const double* xs, std::size_t d,
                      double* out) {
  if (g == Comparison::kDifference) {
    for (std::size_t j = 0; j < d; ++j) out[j] = xs[j] - x[j];
  } else {
    double sq = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      const double diff = xs[j] - x[j];
      sq += diff * diff;
    }
    out[0] = std::sqrt(sq);
  }
}

void require_context(const Tensor& ctx_x, const char* who) {
  if (ctx_x.dim(0) == 0) {
    throw std::invalid_argument(std::string(who) + ": empty context set is unsupported");
  }
}

}  // namespace

Tensor compare(Comparison g, const Tensor& x, const Tensor& x_star) {
  if (x.rank() != 1 || x_star.rank() != 1 || x.dim(0) != x_star.dim(0)) {
    throw std::invalid_argument("compare: dimension mismatch " + x.shape_str() + " vs " +
                                x_star.shape_str());
  }
  Tensor out({comparison_dim(g, x.dim(0))});
  write_comparison(g, x.data(), x_star.data(), x.dim(0), out.data());
  return out;
}

Val rho_diag_all(Tape& tape, Comparison g, const BatchNet& f_r, const Tensor& ctx_x,
                 const Tensor& ctx_y, const Tensor& tgt_x, bool mean_aggregation) {
  require_context(ctx_x, "rho_diag");
  const std::size_t n = ctx_x.dim(0), m = tgt_x.dim(0);
  const std::size_t d = ctx_x.dim(1), dy = ctx_y.dim(1);
  const std::size_t dc = comparison_dim(g, d);
  Tensor in({m * n, dc + dy});
  for (std::size_t mi = 0; mi < m; ++mi) {
    for (std::size_t ni = 0; ni < n; ++ni) {
      double* row = in.data() + (mi * n + ni) * (dc + dy);
      write_comparison(g, ctx_x.data() + ni * d, tgt_x.data() + mi * d, d, row);
      for (std::size_t j = 0; j < dy; ++j) row[dc + j] = ctx_y.at(ni, j);
    }
  }
  Val enc = f_r(tape, tape.constant(std::move(in)));
  const std::size_t d_rel = tape.value(enc).dim(1);
  Val agg = tape.reduce_sum(tape.reshape(enc, {m, n, d_rel}), 1);
  if (mean_aggregation) agg = tape.scale(agg, 1.0 / static_cast<double>(n));
  return agg;
}

Val rho_full_all(Tape& tape, Comparison g, const BatchNet& f_r, const Tensor& ctx_x,
                 const Tensor& ctx_y, const Tensor& tgt_x, bool mean_aggregation) {
  require_context(ctx_x, "rho_full");
  const std::size_t n = ctx_x.dim(0), m = tgt_x.dim(0);
  const std::size_t d = ctx_x.dim(1), dy = ctx_y.dim(1);
  const std::size_t dc = comparison_dim(g, d);
  const std::size_t width = 2 * dc + 2 * dy;
  Tensor in({m * n * n, width});
  for (std::size_t mi = 0; mi < m; ++mi) {
    for (std::size_t ni = 0; ni < n; ++ni) {
      for (std::size_t nj = 0; nj < n; ++nj) {
        double* row = in.data() + ((mi * n + ni) * n + nj) * width;
        write_comparison(g, ctx_x.data() + ni * d, tgt_x.data() + mi * d, d, row);
        write_comparison(g, ctx_x.data() + ni * d, ctx_x.data() + nj * d, d, row + dc);
        for (std::size_t j = 0; j < dy; ++j) {
          row[2 * dc + j] = ctx_y.at(ni, j);
          row[2 * dc + dy + j] = ctx_y.at(nj, j);
        }
      }
    }
  }
  Val enc = f_r(tape, tape.constant(std::move(in)));
  const std::size_t d_rel = tape.value(enc).dim(1);
  Val agg = tape.reduce_sum(tape.reshape(enc, {m, n * n, d_rel}), 1);
  if (mean_aggregation) agg = tape.scale(agg, 1.0 / static_cast<double>(n * n));
  return agg;
}

namespace {
Tensor as_single_row(const Tensor& x_star) {
  if (x_star.rank() != 1) {
    throw std::invalid_argument("rho_*: x_star must be rank-1, got " + x_star.shape_str());
  }
  return Tensor({1, x_star.dim(0)},
                std::vector<double>(x_star.data(), x_star.data() + x_star.dim(0)));
}
}  // namespace

Val rho_diag(Tape& tape, Comparison g, const BatchNet& f_r, const Tensor& x_star,
             const Tensor& ctx_x, const Tensor& ctx_y) {
  return rho_diag_all(tape, g, f_r, ctx_x, ctx_y, as_single_row(x_star));
}

Val rho_full(Tape& tape, Comparison g, const BatchNet& f_r, const Tensor& x_star,
             const Tensor& ctx_x, const Tensor& ctx_y) {
  return rho_full_all(tape, g, f_r, ctx_x, ctx_y, as_single_row(x_star));
}

Val deepset_encode(Tape& tape, const BatchNet& f_e, const Tensor& ctx_x, const Tensor& ctx_y,
                   bool mean_aggregation) {
  require_context(ctx_x, "deepset_encode");
  const std::size_t n = ctx_x.dim(0), d = ctx_x.dim(1), dy = ctx_y.dim(1);
  Tensor in({n, d + dy});
  for (std::size_t i = 0; i < n; ++i) {
    double* row = in.data() + i * (d + dy);
    for (std::size_t j = 0; j < d; ++j) row[j] = ctx_x.at(i, j);
    for (std::size_t j = 0; j < dy; ++j) row[d + j] = ctx_y.at(i, j);
  }
  Val enc = f_e(tape, tape.constant(std::move(in)));
  Val agg = tape.reduce_sum(enc, 0);
  if (mean_aggregation) agg = tape.scale(agg, 1.0 / static_cast<double>(n));
  return agg;
}

}  // namespace rcnp::encoding
