#include "tawrmac/kernels.hpp"

#include <array>
#include <cmath>

#include "tawrmac/errors.hpp"

namespace tawrmac {

Dense Dense::create(ParameterStore& store, const std::string& name, std::size_t in,
                    std::size_t out, Rng& rng) {
  Dense d;
  d.weight = &store.add_uniform(name + ".weight", in, out, in, rng);
  d.bias = &store.add_uniform(name + ".bias", 1, out, in, rng);
  return d;
}

Var dense(Var x, Var weight, Var bias) {
  if (x.cols() != weight.rows()) {
    throw DimensionError("dense: input width " + std::to_string(x.cols()) +
                         " != weight rows " + std::to_string(weight.rows()));
  }
  return ad::add_row(ad::matmul(x, weight), bias);
}

Var Dense::operator()(Var x) const {
  auto& tape = x.tape();
  return dense(x, tape.param(*weight), tape.param(*bias));
}

Mlp Mlp::create(ParameterStore& store, const std::string& name, std::size_t in,
                std::size_t hidden_dim, std::size_t out_dim, Rng& rng, double dropout) {
  Mlp m;
  m.hidden = Dense::create(store, name + ".fc1", in, hidden_dim, rng);
  m.out = Dense::create(store, name + ".fc2", hidden_dim, out_dim, rng);
  m.dropout = dropout;
  return m;
}

Var Mlp::operator()(Var x, Rng* dropout_rng) const {
  auto h = ad::relu(hidden(x));
  if (dropout_rng != nullptr && dropout > 0.0) h = ad::dropout(h, dropout, *dropout_rng);
  return out(h);
}

GruCell GruCell::create(ParameterStore& store, const std::string& name, std::size_t in,
                        std::size_t hidden, Rng& rng) {
  GruCell g;
  const auto fan_in = in + hidden;
  g.w_zr = &store.add_uniform(name + ".w_zr", fan_in, 2 * hidden, fan_in, rng);
  g.b_zr = &store.add_uniform(name + ".b_zr", 1, 2 * hidden, fan_in, rng);
  g.w_h = &store.add_uniform(name + ".w_h", fan_in, hidden, fan_in, rng);
  g.b_h = &store.add_uniform(name + ".b_h", 1, hidden, fan_in, rng);
  return g;
}

Var GruCell::operator()(Var x, Var h) const {
  const auto dh = hidden_dim();
  if (x.cols() != in_dim() || h.cols() != dh || x.rows() != h.rows()) {
    throw DimensionError("gru_cell: input/hidden shape mismatch");
  }
  auto& tape = x.tape();
  const std::array<Var, 2> xh{x, h};
  const auto gates = ad::sigmoid(dense(ad::concat_cols(xh), tape.param(*w_zr), tape.param(*b_zr)));
  const auto z = ad::slice_cols(gates, 0, dh);
  const auto r = ad::slice_cols(gates, dh, dh);
  const std::array<Var, 2> xrh{x, ad::mul(r, h)};
  const auto cand = ad::tanh(dense(ad::concat_cols(xrh), tape.param(*w_h), tape.param(*b_h)));
  return ad::add(h, ad::mul(z, ad::sub(cand, h)));
}

MultiHeadAttention MultiHeadAttention::create(ParameterStore& store, const std::string& name,
                                              std::size_t query_dim, std::size_t key_dim,
                                              std::size_t value_dim, std::size_t heads,
                                              Rng& rng) {
  if (heads == 0 || query_dim % heads != 0) {
    throw DimensionError(name + ": query width " + std::to_string(query_dim) +
                         " not divisible by " + std::to_string(heads) + " heads");
  }
  MultiHeadAttention a;
  a.proj_q = Dense::create(store, name + ".q", query_dim, query_dim, rng);
  a.proj_k = Dense::create(store, name + ".k", key_dim, query_dim, rng);
  a.proj_v = Dense::create(store, name + ".v", value_dim, query_dim, rng);
  a.proj_out = Dense::create(store, name + ".out", query_dim, query_dim, rng);
  a.heads = heads;
  return a;
}

Var MultiHeadAttention::operator()(Var q, Var k, Var v, std::span<const std::uint8_t> valid,
                                   std::size_t n) const {
  const auto attended = ad::attend(proj_q(q), proj_k(k), proj_v(v), valid, n, heads);
  auto out = proj_out(attended);
  // Zero rows whose neighbourhood is empty, including the output bias.
  Tensor live(q.rows(), 1, 0.0);
  bool any_dead = false;
  for (std::size_t b = 0; b < q.rows(); ++b) {
    for (std::size_t j = 0; j < n; ++j) {
      if (valid[b * n + j]) {
        live.data[b] = 1.0;
        break;
      }
    }
    any_dead = any_dead || live.data[b] == 0.0;
  }
  if (!any_dead) return out;
  return ad::mul_col(out, q.tape().constant(std::move(live)));
}

std::vector<double> frequency_ladder(std::size_t dim) {
  std::vector<double> w(dim, 1.0);
  if (dim <= 1) return w;
  for (std::size_t i = 0; i < dim; ++i) {
    w[i] = std::pow(10.0, -9.0 * static_cast<double>(i) / static_cast<double>(dim - 1));
  }
  return w;
}

LearnableTimeEncoder LearnableTimeEncoder::create(ParameterStore& store,
                                                  const std::string& name, std::size_t dim) {
  LearnableTimeEncoder e;
  e.omega = &store.add(name + ".omega", 1, dim);
  e.bias = &store.add(name + ".bias", 1, dim);
  e.omega->value.data = frequency_ladder(dim);
  return e;
}

Var LearnableTimeEncoder::operator()(Tape& tape, std::span<const double> dt) const {
  return ad::time_encode(dt, tape.param(*omega), tape.param(*bias));
}

FixedTimeEncoder FixedTimeEncoder::create(ParameterStore& store, const std::string& name,
                                          std::size_t dim) {
  FixedTimeEncoder e;
  e.omega = &store.add(name + ".omega", 1, dim, /*frozen=*/true);
  e.bias = &store.add(name + ".bias", 1, dim, /*frozen=*/true);
  e.omega->value.data = frequency_ladder(dim);
  return e;
}

Var FixedTimeEncoder::operator()(Tape& tape, std::span<const double> dt) const {
  return ad::time_encode(dt, tape.param(*omega), tape.param(*bias));
}

Var bce_loss(Var p, std::span<const double> labels) { return ad::bce(p, labels); }

Adam::Adam(const ParameterStore& store, AdamOptions opts)
    : params_(store.trainable()), opts_(opts) {
  for (const auto* p : params_) {
    m_.emplace_back(p->value.rows, p->value.cols);
    v_.emplace_back(p->value.rows, p->value.cols);
  }
}

void Adam::step() {
  ++t_;
  const double c1 = 1.0 - std::pow(opts_.beta1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(opts_.beta2, static_cast<double>(t_));
  for (std::size_t i = 0; i < params_.size(); ++i) {
    auto& p = *params_[i];
    auto& m = m_[i].data;
    auto& v = v_[i].data;
    for (std::size_t j = 0; j < p.value.data.size(); ++j) {
      const double g = p.grad.data[j];
      m[j] = opts_.beta1 * m[j] + (1.0 - opts_.beta1) * g;
      v[j] = opts_.beta2 * v[j] + (1.0 - opts_.beta2) * g * g;
      const double mhat = m[j] / c1;
      const double vhat = v[j] / c2;
      p.value.data[j] -= opts_.lr * mhat / (std::sqrt(vhat) + opts_.eps);
      p.grad.data[j] = 0.0;
    }
  }
}

double grad_check(const std::function<Var(Tape&)>& fn, std::span<Parameter* const> params,
                  double eps) {
  for (auto* p : params) std::fill(p->grad.data.begin(), p->grad.data.end(), 0.0);
  {
    Tape tape;
    tape.backward(fn(tape));
  }
  const auto eval = [&fn] {
    Tape tape(/*record=*/false);
    return fn(tape).value().data[0];
  };
  double worst = 0.0;
  for (auto* p : params) {
    if (p->frozen) continue;
    for (std::size_t j = 0; j < p->value.data.size(); ++j) {
      const double orig = p->value.data[j];
      p->value.data[j] = orig + eps;
      const double up = eval();
      p->value.data[j] = orig - eps;
      const double down = eval();
      p->value.data[j] = orig;
      const double numeric = (up - down) / (2.0 * eps);
      const double analytic = p->grad.data[j];
      const double rel =
          std::abs(analytic - numeric) / std::max(1e-6, std::abs(analytic) + std::abs(numeric));
      worst = std::max(worst, rel);
    }
  }
  for (auto* p : params) std::fill(p->grad.data.begin(), p->grad.data.end(), 0.0);
  return worst;
}

}  // namespace tawrmac
