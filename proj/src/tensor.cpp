#include "tawrmac/tensor.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <numeric>
#include <random>

#include "tawrmac/errors.hpp"

#if defined(__GLIBC__)
#include <malloc.h>
#endif

namespace tawrmac::ad {
namespace {

#if defined(__GLIBC__)
// Every batch allocates and frees many multi-megabyte tape buffers. With the
// default thresholds glibc maps and unmaps each one, and the page faults cost
// about a fifth of the run time.
const bool kAllocatorTuned = [] {
  mallopt(M_MMAP_THRESHOLD, 32 * 1024 * 1024);
  mallopt(M_TRIM_THRESHOLD, 512 * 1024 * 1024);
  mallopt(M_TOP_PAD, 64 * 1024 * 1024);
  return true;
}();
#endif

void require(bool ok, const char* what) {
  if (!ok) throw DimensionError(what);
}

bool any_grad(std::initializer_list<Var> vs) {
  for (const auto& v : vs) {
    if (v.requires_grad()) return true;
  }
  return false;
}

void add_into(Tensor& dst, const Tensor& src) {
  for (std::size_t i = 0; i < dst.data.size(); ++i) dst.data[i] += src.data[i];
}

}  // namespace

Tensor::Tensor(std::size_t r, std::size_t c, std::vector<double> values)
    : rows(r), cols(c), data(std::move(values)) {
  require(data.size() == r * c, "Tensor: data length != rows * cols");
}

Tensor Tensor::row_vector(std::span<const double> values) {
  return Tensor(1, values.size(), std::vector<double>(values.begin(), values.end()));
}

Tensor Tensor::column(std::span<const double> values) {
  return Tensor(values.size(), 1, std::vector<double>(values.begin(), values.end()));
}

void gemm_acc(const Tensor& a, const Tensor& b, Tensor& c) {
  require(a.cols == b.rows, "matmul: inner dimensions differ");
  require(c.rows == a.rows && c.cols == b.cols, "matmul: output shape mismatch");
  const std::size_t n = a.rows, k = a.cols, m = b.cols;
  const double* A = a.data.data();
  const double* B = b.data.data();
  double* C = c.data.data();
  constexpr std::size_t kMr = 4, kNr = 16;

  std::size_t i = 0;
  for (; i + kMr <= n; i += kMr) {
    std::size_t j0 = 0;
    for (; j0 + kNr <= m; j0 += kNr) {
      double acc[kMr][kNr];
      for (std::size_t r = 0; r < kMr; ++r)
        for (std::size_t jj = 0; jj < kNr; ++jj) acc[r][jj] = C[(i + r) * m + j0 + jj];
      for (std::size_t kk = 0; kk < k; ++kk) {
        const double* br = B + kk * m + j0;
        for (std::size_t r = 0; r < kMr; ++r) {
          const double x = A[(i + r) * k + kk];
          for (std::size_t jj = 0; jj < kNr; ++jj) acc[r][jj] += x * br[jj];
        }
      }
      for (std::size_t r = 0; r < kMr; ++r)
        for (std::size_t jj = 0; jj < kNr; ++jj) C[(i + r) * m + j0 + jj] = acc[r][jj];
    }
    for (std::size_t r = 0; r < kMr; ++r) {
      for (std::size_t j = j0; j < m; ++j) {
        double s = C[(i + r) * m + j];
        for (std::size_t kk = 0; kk < k; ++kk) s += A[(i + r) * k + kk] * B[kk * m + j];
        C[(i + r) * m + j] = s;
      }
    }
  }
  for (; i < n; ++i) {
    std::size_t j0 = 0;
    for (; j0 + kNr <= m; j0 += kNr) {
      double acc[kNr];
      for (std::size_t jj = 0; jj < kNr; ++jj) acc[jj] = C[i * m + j0 + jj];
      for (std::size_t kk = 0; kk < k; ++kk) {
        const double x = A[i * k + kk];
        const double* br = B + kk * m + j0;
        for (std::size_t jj = 0; jj < kNr; ++jj) acc[jj] += x * br[jj];
      }
      for (std::size_t jj = 0; jj < kNr; ++jj) C[i * m + j0 + jj] = acc[jj];
    }
    for (std::size_t j = j0; j < m; ++j) {
      double s = C[i * m + j];
      for (std::size_t kk = 0; kk < k; ++kk) s += A[i * k + kk] * B[kk * m + j];
      C[i * m + j] = s;
    }
  }
}

Tensor transpose(const Tensor& a) {
  Tensor t(a.cols, a.rows);
  for (std::size_t r = 0; r < a.rows; ++r)
    for (std::size_t c = 0; c < a.cols; ++c) t.data[c * a.rows + r] = a.data[r * a.cols + c];
  return t;
}

// ---- parameters ------------------------------------------------------------

Parameter& ParameterStore::add(const std::string& name, std::size_t rows, std::size_t cols,
                               bool frozen) {
  if (by_name_.contains(name)) throw std::invalid_argument("duplicate parameter " + name);
  auto p = std::make_unique<Parameter>();
  p->name = name;
  p->value = Tensor(rows, cols);
  p->grad = Tensor(rows, cols);
  p->frozen = frozen;
  auto* raw = p.get();
  params_.push_back(std::move(p));
  by_name_[name] = raw;
  return *raw;
}

Parameter& ParameterStore::add_uniform(const std::string& name, std::size_t rows,
                                       std::size_t cols, std::size_t fan_in, Rng& rng) {
  auto& p = add(name, rows, cols);
  const double bound = 1.0 / std::sqrt(static_cast<double>(std::max<std::size_t>(fan_in, 1)));
  for (auto& x : p.value.data) x = (2.0 * rng.uniform() - 1.0) * bound;
  return p;
}

std::vector<Parameter*> ParameterStore::all() const {
  std::vector<Parameter*> out;
  out.reserve(params_.size());
  for (const auto& p : params_) out.push_back(p.get());
  return out;
}

std::vector<Parameter*> ParameterStore::trainable() const {
  std::vector<Parameter*> out;
  for (const auto& p : params_) {
    if (!p->frozen) out.push_back(p.get());
  }
  return out;
}

Parameter* ParameterStore::find(const std::string& name) const {
  const auto it = by_name_.find(name);
  return it == by_name_.end() ? nullptr : it->second;
}

std::size_t ParameterStore::num_scalars() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += p->value.size();
  return n;
}

void ParameterStore::zero_grad() {
  for (auto& p : params_) std::fill(p->grad.data.begin(), p->grad.data.end(), 0.0);
}

std::vector<Tensor> ParameterStore::snapshot() const {
  std::vector<Tensor> out;
  out.reserve(params_.size());
  for (const auto& p : params_) out.push_back(p->value);
  return out;
}

void ParameterStore::restore(const std::vector<Tensor>& values) {
  require(values.size() == params_.size(), "restore: parameter count mismatch");
  for (std::size_t i = 0; i < values.size(); ++i) {
    require(values[i].rows == params_[i]->value.rows &&
                values[i].cols == params_[i]->value.cols,
            "restore: parameter shape mismatch");
    params_[i]->value = values[i];
  }
}

// ---- tape ------------------------------------------------------------------

const Tensor& Var::value() const { return tape_->value(id_); }
bool Var::requires_grad() const { return tape_->requires_grad(id_); }

Var Tape::constant(Tensor value) { return push(std::move(value), false, nullptr); }

Var Tape::constant(std::size_t rows, std::size_t cols, double fill) {
  return constant(Tensor(rows, cols, fill));
}

Var Tape::param(Parameter& p) {
  if (const auto it = param_nodes_.find(&p); it != param_nodes_.end()) {
    return Var(this, it->second);
  }
  const bool rg = record_ && !p.frozen;
  nodes_.push_back(Node{p.value, Tensor{}, rg, nullptr, rg ? &p : nullptr});
  const auto id = nodes_.size() - 1;
  param_nodes_[&p] = id;
  return Var(this, id);
}

Var Tape::push(Tensor value, bool requires_grad, Backward backward) {
  const bool rg = record_ && requires_grad;
  nodes_.push_back(Node{std::move(value), Tensor{}, rg, rg ? std::move(backward) : nullptr,
                        nullptr});
  return Var(this, nodes_.size() - 1);
}

Tensor& Tape::grad(std::size_t id) {
  auto& n = nodes_[id];
  if (n.grad.empty() && !n.value.empty()) n.grad = Tensor(n.value.rows, n.value.cols);
  return n.grad;
}

void Tape::backward(Var out) {
  require(out.rows() == 1 && out.cols() == 1, "backward: output must be 1x1");
  if (!requires_grad(out.id())) return;
  grad(out.id()).data[0] = 1.0;
  for (std::size_t id = out.id() + 1; id-- > 0;) {
    auto& n = nodes_[id];
    if (!n.requires_grad || n.grad.empty()) continue;
    if (n.backward) n.backward(*this, id);
    if (n.param != nullptr) add_into(n.param->grad, n.grad);
  }
}

// ---- ops -------------------------------------------------------------------

Var matmul(Var a, Var b) {
  require(a.cols() == b.rows(), "matmul: inner dimensions differ");
  Tensor out(a.rows(), b.cols());
  gemm_acc(a.value(), b.value(), out);
  const auto ia = a.id(), ib = b.id();
  return a.tape().push(std::move(out), any_grad({a, b}), [ia, ib](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    if (t.requires_grad(ia)) gemm_acc(g, transpose(t.value(ib)), t.grad(ia));
    if (t.requires_grad(ib)) gemm_acc(transpose(t.value(ia)), g, t.grad(ib));
  });
}

namespace {

template <typename Fwd, typename BwdA, typename BwdB>
Var binary_same_shape(Var a, Var b, Fwd fwd, BwdA da, BwdB db) {
  require(a.rows() == b.rows() && a.cols() == b.cols(), "elementwise: shape mismatch");
  const auto& av = a.value();
  const auto& bv = b.value();
  Tensor out(av.rows, av.cols);
  for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] = fwd(av.data[i], bv.data[i]);
  const auto ia = a.id(), ib = b.id();
  return a.tape().push(std::move(out), any_grad({a, b}),
                       [ia, ib, da, db](Tape& t, std::size_t self) {
                         const Tensor& g = t.grad(self);
                         const auto& x = t.value(ia);
                         const auto& y = t.value(ib);
                         if (t.requires_grad(ia)) {
                           auto& gx = t.grad(ia);
                           for (std::size_t i = 0; i < g.data.size(); ++i)
                             gx.data[i] += da(g.data[i], x.data[i], y.data[i]);
                         }
                         if (t.requires_grad(ib)) {
                           auto& gy = t.grad(ib);
                           for (std::size_t i = 0; i < g.data.size(); ++i)
                             gy.data[i] += db(g.data[i], x.data[i], y.data[i]);
                         }
                       });
}

// Elementwise op whose derivative is expressed through input x and output y.
template <typename Fwd, typename Deriv>
Var unary(Var a, Fwd fwd, Deriv deriv) {
  const auto& av = a.value();
  Tensor out(av.rows, av.cols);
  for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] = fwd(av.data[i]);
  const auto ia = a.id();
  return a.tape().push(std::move(out), a.requires_grad(), [ia, deriv](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    const auto& x = t.value(ia);
    const auto& y = t.value(self);
    auto& gx = t.grad(ia);
    for (std::size_t i = 0; i < g.data.size(); ++i) gx.data[i] += g.data[i] * deriv(x.data[i], y.data[i]);
  });
}

}  // namespace

Var add(Var a, Var b) {
  return binary_same_shape(
      a, b, [](double x, double y) { return x + y; },
      [](double g, double, double) { return g; }, [](double g, double, double) { return g; });
}

Var sub(Var a, Var b) {
  return binary_same_shape(
      a, b, [](double x, double y) { return x - y; },
      [](double g, double, double) { return g; }, [](double g, double, double) { return -g; });
}

Var mul(Var a, Var b) {
  return binary_same_shape(
      a, b, [](double x, double y) { return x * y; },
      [](double g, double, double y) { return g * y; },
      [](double g, double x, double) { return g * x; });
}

Var add_row(Var a, Var b) {
  require(b.rows() == 1 && b.cols() == a.cols(), "add_row: bias shape mismatch");
  Tensor out = a.value();
  const auto& bv = b.value();
  for (std::size_t r = 0; r < out.rows; ++r) {
    auto row = out.row(r);
    for (std::size_t c = 0; c < out.cols; ++c) row[c] += bv.data[c];
  }
  const auto ia = a.id(), ib = b.id();
  return a.tape().push(std::move(out), any_grad({a, b}), [ia, ib](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    if (t.requires_grad(ia)) add_into(t.grad(ia), g);
    if (t.requires_grad(ib)) {
      auto& gb = t.grad(ib);
      for (std::size_t r = 0; r < g.rows; ++r) {
        const auto row = g.row(r);
        for (std::size_t c = 0; c < g.cols; ++c) gb.data[c] += row[c];
      }
    }
  });
}

Var mul_col(Var a, Var s) {
  require(s.cols() == 1 && s.rows() == a.rows(), "mul_col: scale shape mismatch");
  Tensor out = a.value();
  const auto& sv = s.value();
  for (std::size_t r = 0; r < out.rows; ++r)
    for (auto& x : out.row(r)) x *= sv.data[r];
  const auto ia = a.id(), is = s.id();
  return a.tape().push(std::move(out), any_grad({a, s}), [ia, is](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    const auto& av = t.value(ia);
    const auto& sv = t.value(is);
    if (t.requires_grad(ia)) {
      auto& ga = t.grad(ia);
      for (std::size_t r = 0; r < g.rows; ++r)
        for (std::size_t c = 0; c < g.cols; ++c) ga(r, c) += g(r, c) * sv.data[r];
    }
    if (t.requires_grad(is)) {
      auto& gs = t.grad(is);
      for (std::size_t r = 0; r < g.rows; ++r) {
        double acc = 0.0;
        for (std::size_t c = 0; c < g.cols; ++c) acc += g(r, c) * av(r, c);
        gs.data[r] += acc;
      }
    }
  });
}

Var scale(Var a, double s) {
  return unary(a, [s](double x) { return s * x; }, [s](double, double) { return s; });
}

Var sigmoid(Var a) {
  return unary(
      a, [](double x) { return 1.0 / (1.0 + std::exp(-x)); },
      [](double, double y) { return y * (1.0 - y); });
}

Var tanh(Var a) {
  return unary(a, [](double x) { return std::tanh(x); },
               [](double, double y) { return 1.0 - y * y; });
}

Var relu(Var a) {
  return unary(a, [](double x) { return x > 0.0 ? x : 0.0; },
               [](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
}

Var cos(Var a) {
  return unary(a, [](double x) { return std::cos(x); },
               [](double x, double) { return -std::sin(x); });
}

Var concat_cols(std::span<const Var> parts) {
  require(!parts.empty(), "concat_cols: no inputs");
  const auto rows = parts.front().rows();
  std::size_t cols = 0;
  bool rg = false;
  for (const auto& p : parts) {
    require(p.rows() == rows, "concat_cols: row count mismatch");
    cols += p.cols();
    rg = rg || p.requires_grad();
  }
  Tensor out(rows, cols);
  std::vector<std::size_t> ids, offsets;
  std::size_t off = 0;
  for (const auto& p : parts) {
    const auto& v = p.value();
    for (std::size_t r = 0; r < rows; ++r)
      std::copy(v.row(r).begin(), v.row(r).end(), out.row(r).begin() + static_cast<std::ptrdiff_t>(off));
    ids.push_back(p.id());
    offsets.push_back(off);
    off += v.cols;
  }
  return parts.front().tape().push(
      std::move(out), rg, [ids, offsets](Tape& t, std::size_t self) {
        const Tensor& g = t.grad(self);
        for (std::size_t i = 0; i < ids.size(); ++i) {
          if (!t.requires_grad(ids[i])) continue;
          auto& gp = t.grad(ids[i]);
          for (std::size_t r = 0; r < gp.rows; ++r)
            for (std::size_t c = 0; c < gp.cols; ++c) gp(r, c) += g(r, offsets[i] + c);
        }
      });
}

Var concat_rows(std::span<const Var> parts) {
  require(!parts.empty(), "concat_rows: no inputs");
  const auto cols = parts.front().cols();
  std::size_t rows = 0;
  bool rg = false;
  for (const auto& p : parts) {
    require(p.cols() == cols, "concat_rows: column count mismatch");
    rows += p.rows();
    rg = rg || p.requires_grad();
  }
  Tensor out(rows, cols);
  std::vector<std::size_t> ids, offsets;
  std::size_t off = 0;
  for (const auto& p : parts) {
    const auto& v = p.value();
    std::copy(v.data.begin(), v.data.end(), out.data.begin() + static_cast<std::ptrdiff_t>(off * cols));
    ids.push_back(p.id());
    offsets.push_back(off);
    off += v.rows;
  }
  return parts.front().tape().push(
      std::move(out), rg, [ids, offsets](Tape& t, std::size_t self) {
        const Tensor& g = t.grad(self);
        for (std::size_t i = 0; i < ids.size(); ++i) {
          if (!t.requires_grad(ids[i])) continue;
          auto& gp = t.grad(ids[i]);
          const auto* src = g.data.data() + offsets[i] * g.cols;
          for (std::size_t j = 0; j < gp.data.size(); ++j) gp.data[j] += src[j];
        }
      });
}

Var slice_cols(Var a, std::size_t start, std::size_t len) {
  require(start + len <= a.cols(), "slice_cols: out of range");
  const auto& av = a.value();
  Tensor out(av.rows, len);
  for (std::size_t r = 0; r < av.rows; ++r)
    for (std::size_t c = 0; c < len; ++c) out(r, c) = av(r, start + c);
  const auto ia = a.id();
  return a.tape().push(std::move(out), a.requires_grad(), [ia, start](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    auto& ga = t.grad(ia);
    for (std::size_t r = 0; r < g.rows; ++r)
      for (std::size_t c = 0; c < g.cols; ++c) ga(r, start + c) += g(r, c);
  });
}

Var gather_rows(Var a, std::span<const std::int64_t> idx) {
  const auto& av = a.value();
  Tensor out(idx.size(), av.cols);
  for (std::size_t i = 0; i < idx.size(); ++i) {
    if (idx[i] < 0) continue;
    require(static_cast<std::size_t>(idx[i]) < av.rows, "gather_rows: index out of range");
    const auto src = av.row(static_cast<std::size_t>(idx[i]));
    std::copy(src.begin(), src.end(), out.row(i).begin());
  }
  const auto ia = a.id();
  std::vector<std::int64_t> index(idx.begin(), idx.end());
  return a.tape().push(std::move(out), a.requires_grad(),
                       [ia, index = std::move(index)](Tape& t, std::size_t self) {
                         const Tensor& g = t.grad(self);
                         auto& ga = t.grad(ia);
                         for (std::size_t i = 0; i < index.size(); ++i) {
                           if (index[i] < 0) continue;
                           auto dst = ga.row(static_cast<std::size_t>(index[i]));
                           const auto src = g.row(i);
                           for (std::size_t c = 0; c < g.cols; ++c) dst[c] += src[c];
                         }
                       });
}

Var reshape(Var a, std::size_t rows, std::size_t cols) {
  require(rows * cols == a.value().size(), "reshape: element count mismatch");
  Tensor out(rows, cols, a.value().data);
  const auto ia = a.id();
  return a.tape().push(std::move(out), a.requires_grad(), [ia](Tape& t, std::size_t self) {
    add_into(t.grad(ia), t.grad(self));
  });
}

Var group_mean_rows(Var a, std::size_t group) {
  require(group > 0 && a.rows() % group == 0, "group_mean_rows: rows not divisible by group");
  const auto& av = a.value();
  const std::size_t n = av.rows / group;
  Tensor out(n, av.cols);
  const double inv = 1.0 / static_cast<double>(group);
  for (std::size_t i = 0; i < n; ++i) {
    auto dst = out.row(i);
    for (std::size_t j = 0; j < group; ++j) {
      const auto src = av.row(i * group + j);
      for (std::size_t c = 0; c < av.cols; ++c) dst[c] += src[c];
    }
    for (auto& x : dst) x *= inv;
  }
  const auto ia = a.id();
  return a.tape().push(std::move(out), a.requires_grad(), [ia, group, inv](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    auto& ga = t.grad(ia);
    for (std::size_t i = 0; i < g.rows; ++i)
      for (std::size_t j = 0; j < group; ++j)
        for (std::size_t c = 0; c < g.cols; ++c) ga(i * group + j, c) += g(i, c) * inv;
  });
}

Var sum_all(Var a) {
  const auto& av = a.value();
  double s = 0.0;
  for (double x : av.data) s += x;
  const auto ia = a.id();
  return a.tape().push(Tensor(1, 1, s), a.requires_grad(), [ia](Tape& t, std::size_t self) {
    const double g = t.grad(self).data[0];
    for (auto& x : t.grad(ia).data) x += g;
  });
}

Var mean_all(Var a) {
  const auto n = static_cast<double>(a.value().size());
  return scale(sum_all(a), 1.0 / n);
}

Var softmax_rows(Var a) {
  const auto& av = a.value();
  Tensor out(av.rows, av.cols);
  for (std::size_t r = 0; r < av.rows; ++r) {
    const auto x = av.row(r);
    auto y = out.row(r);
    const double mx = *std::max_element(x.begin(), x.end());
    double z = 0.0;
    for (std::size_t c = 0; c < x.size(); ++c) z += (y[c] = std::exp(x[c] - mx));
    for (auto& v : y) v /= z;
  }
  const auto ia = a.id();
  return a.tape().push(std::move(out), a.requires_grad(), [ia](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    const Tensor& y = t.value(self);
    auto& ga = t.grad(ia);
    for (std::size_t r = 0; r < g.rows; ++r) {
      double dot = 0.0;
      for (std::size_t c = 0; c < g.cols; ++c) dot += g(r, c) * y(r, c);
      for (std::size_t c = 0; c < g.cols; ++c) ga(r, c) += y(r, c) * (g(r, c) - dot);
    }
  });
}

Var time_encode(std::span<const double> dt, Var omega, Var bias) {
  require(omega.rows() == 1 && bias.rows() == 1 && omega.cols() == bias.cols(),
          "time_encode: omega/bias must be matching row vectors");
  const auto d = omega.cols();
  const auto& w = omega.value();
  const auto& b = bias.value();
  Tensor out(dt.size(), d);
  for (std::size_t i = 0; i < dt.size(); ++i)
    for (std::size_t j = 0; j < d; ++j) out(i, j) = std::cos(dt[i] * w.data[j] + b.data[j]);
  const auto iw = omega.id(), ib = bias.id();
  std::vector<double> times(dt.begin(), dt.end());
  return omega.tape().push(
      std::move(out), any_grad({omega, bias}),
      [iw, ib, times = std::move(times)](Tape& t, std::size_t self) {
        const Tensor& g = t.grad(self);
        const auto& w = t.value(iw);
        const auto& b = t.value(ib);
        const bool gw = t.requires_grad(iw), gb = t.requires_grad(ib);
        std::vector<double> dw(w.cols, 0.0), db(w.cols, 0.0);
        for (std::size_t i = 0; i < times.size(); ++i) {
          for (std::size_t j = 0; j < w.cols; ++j) {
            const double s = -std::sin(times[i] * w.data[j] + b.data[j]) * g(i, j);
            dw[j] += s * times[i];
            db[j] += s;
          }
        }
        if (gw) {
          auto& gwt = t.grad(iw);
          for (std::size_t j = 0; j < w.cols; ++j) gwt.data[j] += dw[j];
        }
        if (gb) {
          auto& gbt = t.grad(ib);
          for (std::size_t j = 0; j < w.cols; ++j) gbt.data[j] += db[j];
        }
      });
}

Var attend(Var q, Var k, Var v, std::span<const std::uint8_t> valid, std::size_t n,
           std::size_t heads) {
  const auto B = q.rows();
  const auto D = q.cols();
  require(heads > 0 && D % heads == 0, "attend: model dim not divisible by heads");
  require(k.cols() == D && v.cols() == D, "attend: key/value width mismatch");
  require(k.rows() == B * n && v.rows() == B * n && valid.size() == B * n,
          "attend: key/value rows must be B * n");
  const std::size_t dh = D / heads;
  const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(dh));
  const auto& Q = q.value();
  const auto& K = k.value();
  const auto& V = v.value();

  auto weights = std::make_shared<std::vector<double>>(B * heads * n, 0.0);
  Tensor out(B, D);
  std::vector<double> scores(n);
  for (std::size_t b = 0; b < B; ++b) {
    for (std::size_t h = 0; h < heads; ++h) {
      const std::size_t off = h * dh;
      double mx = -std::numeric_limits<double>::infinity();
      for (std::size_t j = 0; j < n; ++j) {
        if (!valid[b * n + j]) continue;
        double s = 0.0;
        for (std::size_t c = 0; c < dh; ++c) s += Q(b, off + c) * K(b * n + j, off + c);
        scores[j] = s * inv_sqrt;
        mx = std::max(mx, scores[j]);
      }
      if (mx == -std::numeric_limits<double>::infinity()) continue;  // nothing to attend
      double z = 0.0;
      double* a = weights->data() + (b * heads + h) * n;
      for (std::size_t j = 0; j < n; ++j) {
        if (!valid[b * n + j]) continue;
        a[j] = std::exp(scores[j] - mx);
        z += a[j];
      }
      for (std::size_t j = 0; j < n; ++j) a[j] /= z;
      for (std::size_t j = 0; j < n; ++j) {
        if (a[j] == 0.0) continue;
        for (std::size_t c = 0; c < dh; ++c) out(b, off + c) += a[j] * V(b * n + j, off + c);
      }
    }
  }
  const auto iq = q.id(), ik = k.id(), iv = v.id();
  return q.tape().push(
      std::move(out), any_grad({q, k, v}),
      [iq, ik, iv, weights, n, heads, dh, inv_sqrt](Tape& t, std::size_t self) {
        const Tensor& G = t.grad(self);
        const auto& Q = t.value(iq);
        const auto& K = t.value(ik);
        const auto& V = t.value(iv);
        const bool gq = t.requires_grad(iq), gk = t.requires_grad(ik), gv = t.requires_grad(iv);
        Tensor* dQ = gq ? &t.grad(iq) : nullptr;
        Tensor* dK = gk ? &t.grad(ik) : nullptr;
        Tensor* dV = gv ? &t.grad(iv) : nullptr;
        std::vector<double> da(n), ds(n);
        for (std::size_t b = 0; b < G.rows; ++b) {
          for (std::size_t h = 0; h < heads; ++h) {
            const std::size_t off = h * dh;
            const double* a = weights->data() + (b * heads + h) * n;
            double dot = 0.0;
            for (std::size_t j = 0; j < n; ++j) {
              da[j] = 0.0;
              if (a[j] == 0.0) continue;
              for (std::size_t c = 0; c < dh; ++c) {
                da[j] += G(b, off + c) * V(b * n + j, off + c);
                if (dV) (*dV)(b * n + j, off + c) += a[j] * G(b, off + c);
              }
              dot += a[j] * da[j];
            }
            for (std::size_t j = 0; j < n; ++j) ds[j] = a[j] * (da[j] - dot) * inv_sqrt;
            for (std::size_t j = 0; j < n; ++j) {
              if (a[j] == 0.0) continue;
              for (std::size_t c = 0; c < dh; ++c) {
                if (dQ) (*dQ)(b, off + c) += ds[j] * K(b * n + j, off + c);
                if (dK) (*dK)(b * n + j, off + c) += ds[j] * Q(b, off + c);
              }
            }
          }
        }
      });
}

Var bce(Var p, std::span<const double> labels) {
  require(p.cols() == 1 && p.rows() == labels.size() && !labels.empty(),
          "bce: probabilities must be an n x 1 column matching the labels");
  static constexpr double kLo = 1e-7, kHi = 1.0 - 1e-7;
  const auto& pv = p.value();
  const double n = static_cast<double>(labels.size());
  double loss = 0.0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const double pc = std::clamp(pv.data[i], kLo, kHi);
    loss -= labels[i] * std::log(pc) + (1.0 - labels[i]) * std::log(1.0 - pc);
  }
  const auto ip = p.id();
  std::vector<double> y(labels.begin(), labels.end());
  return p.tape().push(Tensor(1, 1, loss / n), p.requires_grad(),
                       [ip, y = std::move(y), n](Tape& t, std::size_t self) {
                         const double g = t.grad(self).data[0];
                         const auto& pv = t.value(ip);
                         auto& gp = t.grad(ip);
                         for (std::size_t i = 0; i < y.size(); ++i) {
                           const double pc = pv.data[i];
                           if (pc < kLo || pc > kHi) continue;
                           gp.data[i] += g * (-y[i] / pc + (1.0 - y[i]) / (1.0 - pc)) / n;
                         }
                       });
}

Var nll(Var probs, std::span<const int> labels) {
  require(probs.rows() == labels.size() && !labels.empty(), "nll: label count mismatch");
  const auto& pv = probs.value();
  const double n = static_cast<double>(labels.size());
  double loss = 0.0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    require(labels[i] >= 0 && static_cast<std::size_t>(labels[i]) < pv.cols, "nll: bad label");
    loss -= std::log(std::max(pv(i, static_cast<std::size_t>(labels[i])), 1e-12));
  }
  const auto ip = probs.id();
  std::vector<int> y(labels.begin(), labels.end());
  return probs.tape().push(Tensor(1, 1, loss / n), probs.requires_grad(),
                           [ip, y = std::move(y), n](Tape& t, std::size_t self) {
                             const double g = t.grad(self).data[0];
                             const auto& pv = t.value(ip);
                             auto& gp = t.grad(ip);
                             for (std::size_t i = 0; i < y.size(); ++i) {
                               const auto c = static_cast<std::size_t>(y[i]);
                               gp(i, c) -= g / (std::max(pv(i, c), 1e-12) * n);
                             }
                           });
}

Var dropout(Var a, double rate, Rng& rng) {
  if (rate <= 0.0) return a;
  const double keep = 1.0 - rate;
  Tensor mask(a.rows(), a.cols());
  for (auto& m : mask.data) m = rng.uniform() < keep ? 1.0 / keep : 0.0;
  return mul(a, a.tape().constant(std::move(mask)));
}

}  // namespace tawrmac::ad
