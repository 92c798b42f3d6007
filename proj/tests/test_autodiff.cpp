#include <cmath>
#include <functional>
#include <random>

#include "doctest.h"

#include "cascade/autodiff.hpp"
#include "cascade/errors.hpp"

using namespace cascade;
using namespace cascade::ad;

namespace {

Matrix random_matrix(Index r, Index c, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> n(0.0, scale);
  Matrix m(r, c);
  for (Index i = 0; i < m.size(); ++i) m(i) = n(rng);
  return m;
}

/// Reduces an arbitrary output to a scalar with fixed random weights.
Var weighted_sum(Graph& g, Var y, const Matrix& w) {
  const Var ones_l = g.constant(Matrix::Ones(1, w.rows()));
  const Var ones_r = g.constant(Matrix::Ones(w.cols(), 1));
  return g.matmul(g.matmul(ones_l, g.mul(y, g.constant(w))), ones_r);
}

/// Builds y = f(g, params) and checks every parameter entry against central
/// differences.
double max_gradient_error(ParameterStore& store, const std::function<Var(Graph&)>& f, std::uint64_t seed = 1,
                          double h = 1e-6) {
  std::mt19937_64 rng(seed);
  Matrix w;
  auto loss = [&](bool backward) {
    Graph g;
    const Var y = f(g);
    if (w.size() == 0) w = random_matrix(g.value(y).rows(), g.value(y).cols(), rng);
    const Var l = weighted_sum(g, y, w);
    if (backward) g.backward(l);
    return g.scalar(l);
  };
  store.zero_grad();
  loss(true);
  double worst = 0.0;
  for (auto& [name, p] : store) {
    for (Index i = 0; i < p.value.size(); ++i) {
      const double saved = p.value(i);
      p.value(i) = saved + h;
      const double up = loss(false);
      p.value(i) = saved - h;
      const double down = loss(false);
      p.value(i) = saved;
      const double num = (up - down) / (2 * h);
      const double err = std::abs(num - p.grad(i)) / std::max({std::abs(num), std::abs(p.grad(i)), 1e-6});
      worst = std::max(worst, err);
    }
  }
  return worst;
}

}  // namespace

TEST_CASE("parameter store") {
  ParameterStore s;
  auto& p = s.create("a", 2, 3);
  CHECK(p.value.isZero());
  CHECK(p.grad.rows() == 2);
  CHECK_THROWS(s.create("a", 1, 1));
  CHECK_THROWS(s.get("b"));
  CHECK(s.size() == 6);
  p.grad.setOnes();
  s.scale_grad(0.5);
  CHECK(p.grad(0, 0) == 0.5);
  s.zero_grad();
  CHECK(p.grad.isZero());
}

TEST_CASE("elementwise and linear ops have exact gradients") {
  ParameterStore s;
  std::mt19937_64 rng(7);
  auto& a = s.create("a", 3, 4);
  auto& b = s.create("b", 4, 2);
  auto& c = s.create("c", 3, 4);
  auto& r = s.create("r", 1, 4);
  a.value = random_matrix(3, 4, rng);
  b.value = random_matrix(4, 2, rng);
  c.value = random_matrix(3, 4, rng);
  r.value = random_matrix(1, 4, rng);

  CHECK(max_gradient_error(s, [&](Graph& g) { return g.matmul(g.param(a), g.param(b)); }) < 1e-7);
  CHECK(max_gradient_error(s, [&](Graph& g) { return g.matmul_nt(g.param(a), g.param(c)); }) < 1e-7);
  CHECK(max_gradient_error(s, [&](Graph& g) { return g.add(g.param(a), g.param(c)); }) < 1e-7);
  CHECK(max_gradient_error(s, [&](Graph& g) { return g.add_row(g.param(a), g.param(r)); }) < 1e-7);
  CHECK(max_gradient_error(s, [&](Graph& g) { return g.mul(g.param(a), g.param(c)); }) < 1e-7);
  CHECK(max_gradient_error(s, [&](Graph& g) { return g.scale(g.param(a), -2.5); }) < 1e-7);
  CHECK(max_gradient_error(s, [&](Graph& g) { return g.tanh(g.param(a)); }) < 1e-7);
  CHECK(max_gradient_error(s, [&](Graph& g) { return g.sigmoid(g.param(a)); }) < 1e-7);
  CHECK(max_gradient_error(s, [&](Graph& g) { return g.gelu(g.param(a)); }) < 1e-7);
  CHECK(max_gradient_error(s, [&](Graph& g) { return g.softmax_rows(g.param(a)); }) < 1e-7);
  CHECK(max_gradient_error(s, [&](Graph& g) { return g.repeat_rows(g.param(r), 5); }) < 1e-7);
  CHECK(max_gradient_error(s, [&](Graph& g) { return g.slice_rows(g.param(a), 1, 2); }) < 1e-7);
  CHECK(max_gradient_error(s, [&](Graph& g) { return g.slice_cols(g.param(a), 1, 2); }) < 1e-7);
  CHECK(max_gradient_error(s, [&](Graph& g) {
          const Var parts[] = {g.param(a), g.param(c), g.param(a)};
          return g.concat_cols(parts);
        }) < 1e-7);
  // a parameter used twice accumulates both contributions
  CHECK(max_gradient_error(s, [&](Graph& g) { return g.mul(g.param(a), g.tanh(g.param(a))); }) < 1e-7);
}

TEST_CASE("layer norm, lookup and sum") {
  ParameterStore s;
  std::mt19937_64 rng(9);
  auto& x = s.create("x", 3, 5);
  auto& gamma = s.create("gamma", 1, 5);
  auto& beta = s.create("beta", 1, 5);
  auto& table = s.create("table", 4, 3);
  x.value = random_matrix(3, 5, rng);
  gamma.value = random_matrix(1, 5, rng);
  beta.value = random_matrix(1, 5, rng);
  table.value = random_matrix(4, 3, rng);
  CHECK(max_gradient_error(s, [&](Graph& g) {
          return g.layer_norm_rows(g.param(x), g.param(gamma), g.param(beta), 1e-12);
        }) < 1e-6);
  const int ids[] = {2, 0, 2, 3};
  CHECK(max_gradient_error(s, [&](Graph& g) { return g.lookup(table, ids); }) < 1e-7);
  CHECK(max_gradient_error(s, [&](Graph& g) {
          const Var parts[] = {g.matmul(g.slice_rows(g.param(x), 0, 1), g.constant(Matrix::Ones(5, 1))),
                               g.matmul(g.slice_rows(g.param(table), 1, 1), g.constant(Matrix::Ones(3, 1)))};
          return g.sum(parts);
        }) < 1e-7);
}

TEST_CASE("lstm forward matches a direct recurrence and has exact gradients") {
  ParameterStore s;
  std::mt19937_64 rng(13);
  const Index T = 5, in = 3, h = 4;
  auto& x = s.create("x", T, in);
  auto& wx = s.create("wx", in, 4 * h);
  auto& wh = s.create("wh", h, 4 * h);
  auto& b = s.create("b", 1, 4 * h);
  x.value = random_matrix(T, in, rng);
  wx.value = random_matrix(in, 4 * h, rng, 0.5);
  wh.value = random_matrix(h, 4 * h, rng, 0.5);
  b.value = random_matrix(1, 4 * h, rng, 0.5);

  for (bool reverse : {false, true}) {
    Graph g;
    const Matrix out = g.value(g.lstm(g.param(x), g.param(wx), g.param(wh), g.param(b), reverse));
    RowVector hp = RowVector::Zero(h), cp = RowVector::Zero(h);
    auto sig = [](double v) { return 1.0 / (1.0 + std::exp(-v)); };
    for (Index s2 = 0; s2 < T; ++s2) {
      const Index t = reverse ? T - 1 - s2 : s2;
      const RowVector z = x.value.row(t) * wx.value + hp * wh.value + b.value.row(0);
      RowVector c(h), hn(h);
      for (Index j = 0; j < h; ++j) {
        c(j) = sig(z(h + j)) * cp(j) + sig(z(j)) * std::tanh(z(2 * h + j));
        hn(j) = sig(z(3 * h + j)) * std::tanh(c(j));
      }
      CHECK((out.row(t) - hn).cwiseAbs().maxCoeff() < 1e-14);
      hp = hn;
      cp = c;
    }
    // absolute gaps sit near 1e-11, the differencing noise floor here
    CHECK(max_gradient_error(s, [&](Graph& g2) {
            return g2.lstm(g2.param(x), g2.param(wx), g2.param(wh), g2.param(b), reverse);
          }, 1, 1e-5) < 1e-5);
  }
}

TEST_CASE("bernoulli_nll values, clamping and gradient") {
  Graph g;
  Matrix p(1, 2);
  p << 0.9, 0.1;
  Matrix y(1, 2);
  y << 1, 0;
  CHECK(g.scalar(g.bernoulli_nll(g.constant(p), y, 1e-12)) == doctest::Approx(-2 * std::log(0.9)).epsilon(1e-14));
  Matrix zero(1, 1);
  zero << 0.0;
  Matrix one(1, 1);
  one << 1.0;
  CHECK(g.scalar(g.bernoulli_nll(g.constant(zero), one, 1e-12)) == doctest::Approx(-std::log(1e-12)));

  ParameterStore s;
  auto& q = s.create("q", 2, 3);
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0.05, 0.95);
  for (Index i = 0; i < q.value.size(); ++i) q.value(i) = u(rng);
  Matrix t(2, 3);
  t << 1, 0, 1, 0, 0, 1;
  CHECK(max_gradient_error(s, [&](Graph& g2) { return g2.bernoulli_nll(g2.param(q), t, 1e-12); }) < 1e-6);
}

TEST_CASE("shape errors are reported") {
  Graph g;
  const Var a = g.constant(Matrix::Ones(2, 3));
  const Var b = g.constant(Matrix::Ones(2, 3));
  CHECK_THROWS_AS(g.matmul(a, b), Error);
  CHECK_THROWS_AS(g.add(a, g.constant(Matrix::Ones(3, 2))), Error);
}
