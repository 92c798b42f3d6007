#include "cascade/autodiff.hpp"

#include <cmath>
#include <memory>
#include <numbers>

#include "cascade/errors.hpp"

namespace cascade::ad {

Parameter& ParameterStore::create(const std::string& name, Index rows, Index cols) {
  auto [it, inserted] = params_.try_emplace(name);
  if (!inserted) throw ConfigError("duplicate parameter '" + name + "'");
  it->second.value = Matrix::Zero(rows, cols);
  it->second.grad = Matrix::Zero(rows, cols);
  return it->second;
}

Parameter& ParameterStore::get(const std::string& name) {
  auto it = params_.find(name);
  if (it == params_.end()) throw ConfigError("unknown parameter '" + name + "'");
  return it->second;
}

const Parameter& ParameterStore::get(const std::string& name) const {
  auto it = params_.find(name);
  if (it == params_.end()) throw ConfigError("unknown parameter '" + name + "'");
  return it->second;
}

void ParameterStore::zero_grad() {
  for (auto& [name, p] : params_) p.grad.setZero();
}

void ParameterStore::scale_grad(double factor) {
  for (auto& [name, p] : params_) p.grad *= factor;
}

Index ParameterStore::size() const {
  Index n = 0;
  for (const auto& [name, p] : params_) n += p.value.size();
  return n;
}

Var Graph::push(Matrix value, std::function<void()> backward) {
  Node n;
  n.value = std::move(value);
  n.backward = std::move(backward);
  nodes_.push_back(std::move(n));
  return Var{static_cast<int>(nodes_.size()) - 1};
}

Var Graph::constant(Matrix value) { return push(std::move(value)); }

Var Graph::param(Parameter& p) {
  Node n;
  n.param = &p;
  nodes_.push_back(std::move(n));
  return Var{static_cast<int>(nodes_.size()) - 1};
}

const Matrix& Graph::value(Var v) const {
  const Node& n = nodes_.at(static_cast<std::size_t>(v.id));
  return n.param ? n.param->value : n.value;
}

double Graph::scalar(Var v) const {
  const Matrix& m = value(v);
  if (m.size() != 1) throw ConfigError("scalar() on a non-scalar node");
  return m(0, 0);
}

Matrix& Graph::grad(int id) {
  Node& n = node(id);
  if (n.param) return n.param->grad;
  if (n.grad.size() == 0) n.grad = Matrix::Zero(n.value.rows(), n.value.cols());
  return n.grad;
}

void Graph::backward(Var loss) {
  if (value(loss).size() != 1) throw ConfigError("backward() needs a scalar loss");
  grad(loss.id)(0, 0) += 1.0;
  for (int i = loss.id; i >= 0; --i) {
    Node& n = node(i);
    if (n.param || !n.backward || n.grad.size() == 0) continue;
    n.backward();
  }
}

namespace {

void require(bool ok, const char* what) {
  if (!ok) throw ConfigError(std::string("dimension mismatch in ") + what);
}

}  // namespace

Var Graph::matmul(Var a, Var b) {
  require(value(a).cols() == value(b).rows(), "matmul");
  Var out = push(value(a) * value(b));
  node(out.id).backward = [this, a, b, o = out.id] {
    const Matrix& g = out_grad(o);
    grad(a.id).noalias() += g * value(b).transpose();
    grad(b.id).noalias() += value(a).transpose() * g;
  };
  return out;
}

Var Graph::matmul_nt(Var a, Var b) {
  require(value(a).cols() == value(b).cols(), "matmul_nt");
  Var out = push(value(a) * value(b).transpose());
  node(out.id).backward = [this, a, b, o = out.id] {
    const Matrix& g = out_grad(o);
    grad(a.id).noalias() += g * value(b);
    grad(b.id).noalias() += g.transpose() * value(a);
  };
  return out;
}

Var Graph::add(Var a, Var b) {
  require(value(a).rows() == value(b).rows() && value(a).cols() == value(b).cols(), "add");
  Var out = push(value(a) + value(b));
  node(out.id).backward = [this, a, b, o = out.id] {
    grad(a.id) += out_grad(o);
    grad(b.id) += out_grad(o);
  };
  return out;
}

Var Graph::add_row(Var x, Var row) {
  require(value(row).rows() == 1 && value(row).cols() == value(x).cols(), "add_row");
  Matrix v = value(x);
  v.rowwise() += value(row).row(0);
  Var out = push(std::move(v));
  node(out.id).backward = [this, x, row, o = out.id] {
    grad(x.id) += out_grad(o);
    grad(row.id) += out_grad(o).colwise().sum();
  };
  return out;
}

Var Graph::mul(Var a, Var b) {
  require(value(a).rows() == value(b).rows() && value(a).cols() == value(b).cols(), "mul");
  Var out = push(value(a).cwiseProduct(value(b)));
  node(out.id).backward = [this, a, b, o = out.id] {
    grad(a.id) += out_grad(o).cwiseProduct(value(b));
    grad(b.id) += out_grad(o).cwiseProduct(value(a));
  };
  return out;
}

Var Graph::scale(Var a, double s) {
  Var out = push(value(a) * s);
  node(out.id).backward = [this, a, s, o = out.id] { grad(a.id) += out_grad(o) * s; };
  return out;
}

Var Graph::tanh(Var a) {
  Var out = push(value(a).array().tanh().matrix());
  node(out.id).backward = [this, a, o = out.id] {
    const auto& y = node(o).value.array();
    grad(a.id).array() += out_grad(o).array() * (1.0 - y.square());
  };
  return out;
}

Var Graph::sigmoid(Var a) {
  Var out = push((1.0 / (1.0 + (-value(a).array()).exp())).matrix());
  node(out.id).backward = [this, a, o = out.id] {
    const auto& y = node(o).value.array();
    grad(a.id).array() += out_grad(o).array() * y * (1.0 - y);
  };
  return out;
}

Var Graph::gelu(Var a) {
  const Matrix& x = value(a);
  Matrix y = x.unaryExpr([](double v) { return 0.5 * v * (1.0 + std::erf(v / std::numbers::sqrt2)); });
  Var out = push(std::move(y));
  node(out.id).backward = [this, a, o = out.id] {
    const Matrix d = value(a).unaryExpr([](double v) {
      const double cdf = 0.5 * (1.0 + std::erf(v / std::numbers::sqrt2));
      const double pdf = std::exp(-0.5 * v * v) / std::sqrt(2.0 * std::numbers::pi);
      return cdf + v * pdf;
    });
    grad(a.id) += out_grad(o).cwiseProduct(d);
  };
  return out;
}

Var Graph::softmax_rows(Var a) {
  const Matrix& x = value(a);
  Matrix y(x.rows(), x.cols());
  for (Index r = 0; r < x.rows(); ++r) {
    const double mx = x.row(r).maxCoeff();
    y.row(r) = (x.row(r).array() - mx).exp().matrix();
    y.row(r) /= y.row(r).sum();
  }
  Var out = push(std::move(y));
  node(out.id).backward = [this, a, o = out.id] {
    const Matrix& y = node(o).value;
    const Matrix& g = out_grad(o);
    Matrix& ga = grad(a.id);
    for (Index r = 0; r < y.rows(); ++r) {
      const double dot = g.row(r).dot(y.row(r));
      ga.row(r).array() += y.row(r).array() * (g.row(r).array() - dot);
    }
  };
  return out;
}

Var Graph::layer_norm_rows(Var x, Var gamma, Var beta, double eps) {
  const Matrix& xv = value(x);
  require(value(gamma).rows() == 1 && value(gamma).cols() == xv.cols(), "layer_norm gamma");
  require(value(beta).rows() == 1 && value(beta).cols() == xv.cols(), "layer_norm beta");
  const Index n = xv.cols();
  auto xhat = std::make_shared<Matrix>(xv.rows(), n);
  auto inv_std = std::make_shared<Vector>(xv.rows());
  for (Index r = 0; r < xv.rows(); ++r) {
    const double mean = xv.row(r).mean();
    const double var = (xv.row(r).array() - mean).square().mean();
    (*inv_std)(r) = 1.0 / std::sqrt(var + eps);
    xhat->row(r) = (xv.row(r).array() - mean) * (*inv_std)(r);
  }
  Matrix y = xhat->array().rowwise() * value(gamma).row(0).array();
  y.rowwise() += value(beta).row(0);
  Var out = push(std::move(y));
  node(out.id).backward = [this, x, gamma, beta, xhat, inv_std, o = out.id] {
    const Matrix& g = out_grad(o);
    grad(gamma.id) += g.cwiseProduct(*xhat).colwise().sum();
    grad(beta.id) += g.colwise().sum();
    const Matrix dxhat = g.array().rowwise() * value(gamma).row(0).array();
    Matrix& gx = grad(x.id);
    for (Index r = 0; r < g.rows(); ++r) {
      const double m1 = dxhat.row(r).mean();
      const double m2 = dxhat.row(r).dot(xhat->row(r)) / static_cast<double>(g.cols());
      gx.row(r).array() += (*inv_std)(r) * (dxhat.row(r).array() - m1 - xhat->row(r).array() * m2);
    }
  };
  return out;
}

Var Graph::concat_cols(std::span<const Var> parts) {
  require(!parts.empty(), "concat_cols");
  const Index rows = value(parts[0]).rows();
  Index cols = 0;
  for (Var p : parts) {
    require(value(p).rows() == rows, "concat_cols");
    cols += value(p).cols();
  }
  Matrix v(rows, cols);
  Index at = 0;
  for (Var p : parts) {
    v.middleCols(at, value(p).cols()) = value(p);
    at += value(p).cols();
  }
  Var out = push(std::move(v));
  node(out.id).backward = [this, ids = std::vector<Var>(parts.begin(), parts.end()), o = out.id] {
    Index at = 0;
    for (Var p : ids) {
      const Index c = value(p).cols();
      grad(p.id) += out_grad(o).middleCols(at, c);
      at += c;
    }
  };
  return out;
}

Var Graph::repeat_rows(Var row, Index n) {
  require(value(row).rows() == 1, "repeat_rows");
  Matrix v = value(row).replicate(n, 1);
  Var out = push(std::move(v));
  node(out.id).backward = [this, row, o = out.id] { grad(row.id) += out_grad(o).colwise().sum(); };
  return out;
}

Var Graph::slice_rows(Var x, Index begin, Index count) {
  require(begin >= 0 && count >= 0 && begin + count <= value(x).rows(), "slice_rows");
  Var out = push(value(x).middleRows(begin, count));
  node(out.id).backward = [this, x, begin, count, o = out.id] {
    grad(x.id).middleRows(begin, count) += out_grad(o);
  };
  return out;
}

Var Graph::slice_cols(Var x, Index begin, Index count) {
  require(begin >= 0 && count >= 0 && begin + count <= value(x).cols(), "slice_cols");
  Var out = push(value(x).middleCols(begin, count));
  node(out.id).backward = [this, x, begin, count, o = out.id] {
    grad(x.id).middleCols(begin, count) += out_grad(o);
  };
  return out;
}

Var Graph::lookup(Parameter& table, std::span<const int> ids) {
  Matrix v(static_cast<Index>(ids.size()), table.value.cols());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    require(ids[i] >= 0 && ids[i] < table.value.rows(), "lookup (id out of range)");
    v.row(static_cast<Index>(i)) = table.value.row(ids[i]);
  }
  Var out = push(std::move(v));
  node(out.id).backward = [this, &table, ids = std::vector<int>(ids.begin(), ids.end()), o = out.id] {
    const Matrix& g = out_grad(o);
    for (std::size_t i = 0; i < ids.size(); ++i) table.grad.row(ids[i]) += g.row(static_cast<Index>(i));
  };
  return out;
}

namespace {

struct LstmCache {
  Matrix gates;   // T x 4h, post-activation [i f g o]
  Matrix cells;   // T x h
  Matrix tanh_c;  // T x h
};

}  // namespace

Var Graph::lstm(Var x, Var wx, Var wh, Var b, bool reverse) {
  const Matrix& X = value(x);
  const Matrix& Wx = value(wx);
  const Matrix& Wh = value(wh);
  const Index h = Wh.rows();
  require(Wx.rows() == X.cols() && Wx.cols() == 4 * h, "lstm input weights");
  require(Wh.cols() == 4 * h, "lstm recurrent weights");
  require(value(b).rows() == 1 && value(b).cols() == 4 * h, "lstm bias");
  const Index T = X.rows();

  auto cache = std::make_shared<LstmCache>();
  Matrix Z = X * Wx;
  Z.rowwise() += value(b).row(0);
  cache->gates.resize(T, 4 * h);
  cache->cells.resize(T, h);
  cache->tanh_c.resize(T, h);
  Matrix H(T, h);
  RowVector h_prev = RowVector::Zero(h);
  RowVector z(4 * h);
  auto sig = [](double v) { return 1.0 / (1.0 + std::exp(-v)); };
  for (Index s = 0; s < T; ++s) {
    const Index t = reverse ? T - 1 - s : s;
    z = Z.row(t);
    if (s > 0) z.noalias() += h_prev * Wh;
    const Index prev = reverse ? t + 1 : t - 1;
    for (Index j = 0; j < h; ++j) {
      const double gi = sig(z(j));
      const double gf = sig(z(h + j));
      const double gg = std::tanh(z(2 * h + j));
      const double go = sig(z(3 * h + j));
      const double c = gi * gg + (s > 0 ? gf * cache->cells(prev, j) : 0.0);
      const double tc = std::tanh(c);
      cache->gates(t, j) = gi;
      cache->gates(t, h + j) = gf;
      cache->gates(t, 2 * h + j) = gg;
      cache->gates(t, 3 * h + j) = go;
      cache->cells(t, j) = c;
      cache->tanh_c(t, j) = tc;
      H(t, j) = go * tc;
    }
    h_prev = H.row(t);
  }

  Var out = push(std::move(H));
  node(out.id).backward = [this, x, wx, wh, b, reverse, cache, h, T, o = out.id] {
    const Matrix& dH = out_grad(o);
    const Matrix& Hv = node(o).value;
    const Matrix& Whv = value(wh);
    Matrix dZ(T, 4 * h);
    Matrix dWh = Matrix::Zero(h, 4 * h);
    RowVector dh_next = RowVector::Zero(h);
    RowVector dc_next = RowVector::Zero(h);
    for (Index s = T - 1; s >= 0; --s) {
      const Index t = reverse ? T - 1 - s : s;
      const Index prev = reverse ? t + 1 : t - 1;
      const bool has_prev = s > 0;
      const auto gi = cache->gates.row(t).segment(0, h).array();
      const auto gf = cache->gates.row(t).segment(h, h).array();
      const auto gg = cache->gates.row(t).segment(2 * h, h).array();
      const auto go = cache->gates.row(t).segment(3 * h, h).array();
      const auto tc = cache->tanh_c.row(t).array();
      const RowVector dh = dH.row(t) + dh_next;
      const RowVector dc = (dh.array() * go * (1.0 - tc.square())).matrix() + dc_next;
      RowVector c_prev = has_prev ? RowVector(cache->cells.row(prev)) : RowVector::Zero(h);
      dZ.row(t).segment(0, h) = (dc.array() * gg * gi * (1.0 - gi)).matrix();
      dZ.row(t).segment(h, h) = (dc.array() * c_prev.array() * gf * (1.0 - gf)).matrix();
      dZ.row(t).segment(2 * h, h) = (dc.array() * gi * (1.0 - gg.square())).matrix();
      dZ.row(t).segment(3 * h, h) = (dh.array() * tc * go * (1.0 - go)).matrix();
      dc_next = (dc.array() * gf).matrix();
      dh_next = dZ.row(t) * Whv.transpose();
      if (has_prev) dWh.noalias() += Hv.row(prev).transpose() * dZ.row(t);
    }
    grad(wh.id) += dWh;
    grad(x.id).noalias() += dZ * value(wx).transpose();
    grad(wx.id).noalias() += value(x).transpose() * dZ;
    grad(b.id) += dZ.colwise().sum();
  };
  return out;
}

Var Graph::bernoulli_nll(Var probs, const Matrix& targets, double eps) {
  const Matrix& p = value(probs);
  require(p.rows() == targets.rows() && p.cols() == targets.cols(), "bernoulli_nll");
  double loss = 0.0;
  for (Index i = 0; i < p.size(); ++i) {
    const double y = targets(i);
    const double pi = p(i);
    if (y != 0.0) loss -= y * std::log(std::max(pi, eps));
    if (y != 1.0) loss -= (1.0 - y) * std::log(std::max(1.0 - pi, eps));
  }
  Var out = push(Matrix::Constant(1, 1, loss));
  node(out.id).backward = [this, probs, targets, eps, o = out.id] {
    const double g = out_grad(o)(0, 0);
    const Matrix& p = value(probs);
    Matrix& gp = grad(probs.id);
    for (Index i = 0; i < p.size(); ++i) {
      const double y = targets(i);
      const double pi = p(i);
      double d = 0.0;
      if (y != 0.0 && pi > eps) d -= y / pi;
      if (y != 1.0 && 1.0 - pi > eps) d += (1.0 - y) / (1.0 - pi);
      gp(i) += g * d;
    }
  };
  return out;
}

Var Graph::sum(std::span<const Var> scalars) {
  double total = 0.0;
  for (Var s : scalars) total += scalar(s);
  Var out = push(Matrix::Constant(1, 1, total));
  node(out.id).backward = [this, ids = std::vector<Var>(scalars.begin(), scalars.end()), o = out.id] {
    const double g = out_grad(o)(0, 0);
    for (Var s : ids) grad(s.id)(0, 0) += g;
  };
  return out;
}

}  // namespace cascade::ad
