#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "rcnp/encoders.hpp"
#include "rcnp/grad_check.hpp"
#include "rcnp/rng.hpp"
#include "support/oracles.hpp"

using namespace rcnp;
using namespace rcnp::encoding;

namespace {

Tensor random_matrix(std::size_t r, std::size_t c, Rng& rng, double scale = 1.0) {
  Tensor t({r, c});
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = scale * rng.normal();
  return t;
}

// Tiny one-layer network: tanh(X W + b) row-wise, with explicit weights.
struct TinyNet {
  Tensor w;  // [in x out]
  Tensor b;  // [out]

  static TinyNet make(std::size_t in, std::size_t out, Rng& rng) {
    TinyNet n;
    n.w = random_matrix(in, out, rng, 0.7);
    n.b = Tensor({out});
    for (std::size_t i = 0; i < out; ++i) n.b[i] = 0.3 * rng.normal();
    return n;
  }

  BatchNet as_batchnet(bool trainable, std::vector<Val>* bound = nullptr) const {
    Tensor wl = w, bl = b;
    return [wl, bl, trainable, bound](Tape& t, Val in) {
      Val vw = trainable ? t.param(wl) : t.constant(wl);
      Val vb = trainable ? t.param(bl) : t.constant(bl);
      if (bound) {
        bound->push_back(vw);
        bound->push_back(vb);
      }
      return t.tanh(t.add_rowvec(t.matmul(in, vw), vb));
    };
  }

  // plain evaluation of one row
  std::vector<double> eval(const std::vector<double>& row) const {
    std::vector<double> out(w.dim(1));
    for (std::size_t j = 0; j < w.dim(1); ++j) {
      double acc = b[j];
      for (std::size_t i = 0; i < row.size(); ++i) acc += row[i] * w.at(i, j);
      out[j] = std::tanh(acc);
    }
    return out;
  }
};

// 2D rotation matrix.
Tensor rotation2(double angle) {
  return Tensor({2, 2}, {std::cos(angle), -std::sin(angle), std::sin(angle), std::cos(angle)});
}

Tensor apply_affine(const Tensor& X, const Tensor& Q, const Tensor& c) {
  Tensor out({X.dim(0), X.dim(1)});
  for (std::size_t i = 0; i < X.dim(0); ++i)
    for (std::size_t r = 0; r < X.dim(1); ++r) {
      double acc = c[r];
      for (std::size_t k = 0; k < X.dim(1); ++k) acc += Q.at(r, k) * X.at(i, k);
      out.at(i, r) = acc;
    }
  return out;
}

}  // namespace

TEST_CASE("compare closed forms") {
  CHECK(compare(Comparison::kDifference, Tensor({1}, {0.5}), Tensor({1}, {1.5}))[0] == 1.0);
  const Tensor d = compare(Comparison::kDistance, Tensor({2}, {0, 0}), Tensor({2}, {3, 4}));
  CHECK(d.size() == 1);
  CHECK(d[0] == 5.0);
  const Tensor z = compare(Comparison::kDifference, Tensor({3}, {1, 2, 3}), Tensor({3}, {1, 2, 3}));
  for (std::size_t i = 0; i < 3; ++i) CHECK(z[i] == 0.0);
  CHECK_THROWS_AS(compare(Comparison::kDifference, Tensor({2}), Tensor({3})),
                  std::invalid_argument);
}

TEST_CASE("comparison invariances") {
  Rng rng(31);
  for (int t = 0; t < 30; ++t) {
    Tensor x({2}, {rng.normal(), rng.normal()});
    Tensor xs({2}, {rng.normal(), rng.normal()});
    Tensor c({2}, {rng.uniform(-10, 10), rng.uniform(-10, 10)});
    Tensor xc({2}, {x[0] + c[0], x[1] + c[1]});
    Tensor xsc({2}, {xs[0] + c[0], xs[1] + c[1]});
    const Tensor d0 = compare(Comparison::kDifference, x, xs);
    const Tensor d1 = compare(Comparison::kDifference, xc, xsc);
    for (std::size_t i = 0; i < 2; ++i) CHECK(std::abs(d0[i] - d1[i]) < 1e-9);

    const Tensor Q = rotation2(rng.uniform(0, 2 * M_PI));
    Tensor xm({1, 2}, {x[0], x[1]}), xsm({1, 2}, {xs[0], xs[1]});
    const Tensor xr = apply_affine(xm, Q, c);
    const Tensor xsr = apply_affine(xsm, Q, c);
    const double r0 = compare(Comparison::kDistance, x, xs)[0];
    const double r1 = compare(Comparison::kDistance, Tensor({2}, {xr[0], xr[1]}),
                              Tensor({2}, {xsr[0], xsr[1]}))[0];
    CHECK(std::abs(r0 - r1) < 1e-9);
  }
}

TEST_CASE("deepset_encode equals loop oracle and is permutation invariant") {
  Rng rng(1);
  const TinyNet net = TinyNet::make(3, 5, rng);  // d_x=2, d_y=1
  const Tensor cx = random_matrix(4, 2, rng);
  const Tensor cy = random_matrix(4, 1, rng);

  Tape tape;
  Val e = deepset_encode(tape, net.as_batchnet(false), cx, cy);
  const Tensor& ev = tape.value(e);
  REQUIRE(ev.rank() == 1);
  REQUIRE(ev.dim(0) == 5);

  std::vector<double> oracle(5, 0.0);
  for (int n = 0; n < 4; ++n) {
    const auto row = net.eval({cx.at(n, 0), cx.at(n, 1), cy.at(n, 0)});
    for (int j = 0; j < 5; ++j) oracle[j] += row[j];
  }
  for (int j = 0; j < 5; ++j) CHECK(std::abs(ev[j] - oracle[j]) < 1e-12);

  // permute rows 0<->3, 1<->2
  Tensor px({4, 2}), py({4, 1});
  const int perm[4] = {3, 2, 1, 0};
  for (int n = 0; n < 4; ++n) {
    px.at(n, 0) = cx.at(perm[n], 0);
    px.at(n, 1) = cx.at(perm[n], 1);
    py.at(n, 0) = cy.at(perm[n], 0);
  }
  Tape tape2;
  const Tensor& ep = tape2.value(deepset_encode(tape2, net.as_batchnet(false), px, py));
  for (int j = 0; j < 5; ++j) CHECK(std::abs(ev[j] - ep[j]) < 1e-9);

  Tape tape3;
  CHECK_THROWS_AS(deepset_encode(tape3, net.as_batchnet(false), Tensor({0, 2}), Tensor({0, 1})),
                  std::invalid_argument);
}

TEST_CASE("rho_diag matches single-pair form and loop oracle") {
  Rng rng(2);
  const TinyNet net = TinyNet::make(2, 4, rng);  // d_comp=1 (dist), d_y=1
  const Tensor cx = random_matrix(3, 2, rng);
  const Tensor cy = random_matrix(3, 1, rng);
  const Tensor xs({2}, {0.3, -0.4});

  Tape tape;
  Val r = rho_diag(tape, Comparison::kDistance, net.as_batchnet(false), xs, cx, cy);
  const Tensor& rv = tape.value(r);
  REQUIRE(rv.dim(0) == 1);
  REQUIRE(rv.dim(1) == 4);

  std::vector<double> oracle(4, 0.0);
  for (int n = 0; n < 3; ++n) {
    const double dx = xs[0] - cx.at(n, 0), dy = xs[1] - cx.at(n, 1);
    const auto row = net.eval({std::sqrt(dx * dx + dy * dy), cy.at(n, 0)});
    for (int j = 0; j < 4; ++j) oracle[j] += row[j];
  }
  for (int j = 0; j < 4; ++j) CHECK(std::abs(rv.at(0, j) - oracle[j]) < 1e-12);

  // N=1 single term
  Tensor cx1({1, 2}, {cx.at(0, 0), cx.at(0, 1)});
  Tensor cy1({1, 1}, {cy.at(0, 0)});
  Tape t1;
  const Tensor& r1 = t1.value(rho_diag(t1, Comparison::kDistance, net.as_batchnet(false), xs, cx1, cy1));
  const double dx = xs[0] - cx.at(0, 0), dy = xs[1] - cx.at(0, 1);
  const auto row = net.eval({std::sqrt(dx * dx + dy * dy), cy.at(0, 0)});
  for (int j = 0; j < 4; ++j) CHECK(std::abs(r1.at(0, j) - row[j]) < 1e-14);
}

TEST_CASE("rho_full equals 9-term loop oracle for N=3") {
  Rng rng(4);
  const TinyNet net = TinyNet::make(4, 3, rng);  // diff d_x=1: 2*1 + 2*1 = 4 inputs
  const Tensor cx = random_matrix(3, 1, rng);
  const Tensor cy = random_matrix(3, 1, rng);
  const Tensor xs({1}, {0.7});

  Tape tape;
  Val r = rho_full(tape, Comparison::kDifference, net.as_batchnet(false), xs, cx, cy);
  const Tensor& rv = tape.value(r);

  std::vector<double> oracle(3, 0.0);
  for (int n = 0; n < 3; ++n) {
    for (int np = 0; np < 3; ++np) {
      const auto row = net.eval(
          {xs[0] - cx.at(n, 0), cx.at(np, 0) - cx.at(n, 0), cy.at(n, 0), cy.at(np, 0)});
      for (int j = 0; j < 3; ++j) oracle[j] += row[j];
    }
  }
  for (int j = 0; j < 3; ++j) CHECK(std::abs(rv.at(0, j) - oracle[j]) < 1e-12);

  // N=1: single term f_r(g(x1,x*), g(x1,x1), y1, y1)
  Tensor cx1({1, 1}, {cx.at(0, 0)});
  Tensor cy1({1, 1}, {cy.at(0, 0)});
  Tape t1;
  const Tensor& r1 =
      t1.value(rho_full(t1, Comparison::kDifference, net.as_batchnet(false), xs, cx1, cy1));
  const auto row = net.eval({xs[0] - cx.at(0, 0), 0.0, cy.at(0, 0), cy.at(0, 0)});
  for (int j = 0; j < 3; ++j) CHECK(std::abs(r1.at(0, j) - row[j]) < 1e-14);
}

TEST_CASE("rho_diag equals rho_full restricted to diagonal pairs") {
  // Build an f_r that reads only the (g(x_n,x*), y_n) slots of the full
  // input layout; then rho_full over the diagonal-only context (N=1 blocks)
  // must agree with rho_diag under a matched reduced net.
  Rng rng(6);
  const std::size_t d_rel = 4;
  // full layout for diff d_x=1: [g_t (1), g_cc (1), y_n (1), y_np (1)]
  TinyNet full = TinyNet::make(4, d_rel, rng);
  // zero out the rows of W touching g_cc and y_np so the net ignores them
  for (std::size_t j = 0; j < d_rel; ++j) {
    full.w.at(1, j) = 0.0;
    full.w.at(3, j) = 0.0;
  }
  // reduced net on [g_t, y_n] with identical remaining weights
  TinyNet reduced;
  reduced.w = Tensor({2, d_rel});
  reduced.b = full.b;
  for (std::size_t j = 0; j < d_rel; ++j) {
    reduced.w.at(0, j) = full.w.at(0, j);
    reduced.w.at(1, j) = full.w.at(2, j);
  }

  const Tensor xs({1}, {0.4});
  const Tensor cx = random_matrix(1, 1, rng);
  const Tensor cy = random_matrix(1, 1, rng);
  Tape tf, td;
  const Tensor& rf =
      tf.value(rho_full(tf, Comparison::kDifference, full.as_batchnet(false), xs, cx, cy));
  const Tensor& rd =
      td.value(rho_diag(td, Comparison::kDifference, reduced.as_batchnet(false), xs, cx, cy));
  for (std::size_t j = 0; j < d_rel; ++j) CHECK(std::abs(rf.at(0, j) - rd.at(0, j)) < 1e-12);
}

TEST_CASE("rho encoders are permutation invariant") {
  Rng rng(8);
  const TinyNet net_diag = TinyNet::make(2, 3, rng);
  const TinyNet net_full = TinyNet::make(4, 3, rng);
  const Tensor cx = random_matrix(5, 1, rng);
  const Tensor cy = random_matrix(5, 1, rng);
  const Tensor xs({1}, {-0.2});

  Tensor px({5, 1}), py({5, 1});
  const int perm[5] = {2, 0, 4, 1, 3};
  for (int n = 0; n < 5; ++n) {
    px.at(n, 0) = cx.at(perm[n], 0);
    py.at(n, 0) = cy.at(perm[n], 0);
  }

  Tape a, b, c, d;
  const Tensor& r0 =
      a.value(rho_diag(a, Comparison::kDifference, net_diag.as_batchnet(false), xs, cx, cy));
  const Tensor& r1 =
      b.value(rho_diag(b, Comparison::kDifference, net_diag.as_batchnet(false), xs, px, py));
  CHECK(testsupport::max_abs_diff(r0, r1) < 1e-9);

  const Tensor& f0 =
      c.value(rho_full(c, Comparison::kDifference, net_full.as_batchnet(false), xs, cx, cy));
  const Tensor& f1 =
      d.value(rho_full(d, Comparison::kDifference, net_full.as_batchnet(false), xs, px, py));
  CHECK(testsupport::max_abs_diff(f0, f1) < 1e-9);
}

TEST_CASE("mean aggregation divides the sum by the term count") {
  Rng rng(77);
  const TinyNet net = TinyNet::make(2, 3, rng);
  const Tensor cx = random_matrix(4, 1, rng);
  const Tensor cy = random_matrix(4, 1, rng);
  const Tensor tx = random_matrix(2, 1, rng);
  Tape a, b;
  const Tensor& sum =
      a.value(rho_diag_all(a, Comparison::kDifference, net.as_batchnet(false), cx, cy, tx));
  const Tensor& mean = b.value(
      rho_diag_all(b, Comparison::kDifference, net.as_batchnet(false), cx, cy, tx, true));
  for (std::size_t i = 0; i < sum.size(); ++i) {
    CHECK(mean[i] == doctest::Approx(sum[i] / 4.0).epsilon(1e-14));
  }
}

TEST_CASE("encoder gradients w.r.t. network parameters pass grad_check") {
  Rng rng(10);
  const Tensor cx = random_matrix(3, 1, rng);
  const Tensor cy = random_matrix(3, 1, rng);
  const Tensor tx = random_matrix(2, 1, rng);

  for (bool full : {false, true}) {
    CAPTURE(full);
    const std::size_t in_dim = full ? 4 : 2;
    const TinyNet net = TinyNet::make(in_dim, 3, rng);
    auto run = [&](const Tensor& wflat) {
      TinyNet n2 = net;
      for (std::size_t i = 0; i < n2.w.size(); ++i) n2.w[i] = wflat[i];
      Tape t;
      std::vector<Val> bound;
      auto bn = n2.as_batchnet(true, &bound);
      Val r = full ? rho_full_all(t, Comparison::kDifference, bn, cx, cy, tx)
                   : rho_diag_all(t, Comparison::kDifference, bn, cx, cy, tx);
      Val loss = t.reduce_sum_all(t.mul(r, r));
      return std::tuple<Tape, std::vector<Val>, Val>(std::move(t), bound, loss);
    };
    const Tensor w0 = net.w;
    Tensor wflat({w0.size()}, std::vector<double>(w0.data(), w0.data() + w0.size()));
    auto [tape, bound, loss] = run(wflat);
    tape.backward(loss);
    const Tensor gw = tape.grad(bound[0]);
    Tensor gflat({gw.size()}, std::vector<double>(gw.data(), gw.data() + gw.size()));
    ScalarFn f{[&](const Tensor& w) {
                 auto [t2, b2, l2] = run(w);
                 return t2.value(l2)[0];
               },
               [&](const Tensor&) { return gflat; }};
    CHECK(grad_check(f, wflat) < 1e-4);
  }
}
