#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "tawrmac/tensor.hpp"

namespace tawrmac {

using ad::Parameter;
using ad::ParameterStore;
using ad::Tape;
using ad::Tensor;
using ad::Var;

// y = xW + b
struct Dense {
  Parameter* weight = nullptr;  // [in, out]
  Parameter* bias = nullptr;    // [1, out]

  static Dense create(ParameterStore& store, const std::string& name, std::size_t in,
                      std::size_t out, Rng& rng);
  std::size_t in_dim() const { return weight->value.rows; }
  std::size_t out_dim() const { return weight->value.cols; }
  Var operator()(Var x) const;
};

Var dense(Var x, Var weight, Var bias);

// Two dense layers with a ReLU between them; optional dropout on the hidden
// activations when `dropout_rng` is set.
struct Mlp {
  Dense hidden;
  Dense out;
  double dropout = 0.0;

  static Mlp create(ParameterStore& store, const std::string& name, std::size_t in,
                    std::size_t hidden_dim, std::size_t out_dim, Rng& rng,
                    double dropout = 0.0);
  Var operator()(Var x, Rng* dropout_rng = nullptr) const;
};

// z = s(Wz[x|h] + bz), r = s(Wr[x|h] + br), h~ = tanh(Wh[x | r*h] + bh),
// h' = (1 - z) * h + z * h~. Rows are independent cells.
struct GruCell {
  Parameter* w_zr = nullptr;  // [in + hidden, 2 * hidden], z block first
  Parameter* b_zr = nullptr;
  Parameter* w_h = nullptr;   // [in + hidden, hidden]
  Parameter* b_h = nullptr;

  static GruCell create(ParameterStore& store, const std::string& name, std::size_t in,
                        std::size_t hidden, Rng& rng);
  std::size_t in_dim() const { return w_h->value.rows - hidden_dim(); }
  std::size_t hidden_dim() const { return w_h->value.cols; }
  Var operator()(Var x, Var h) const;
};

// Multi-head attention with query/key/value/output projections. The model
// width equals the query width; keys and values may be wider or narrower.
struct MultiHeadAttention {
  Dense proj_q, proj_k, proj_v, proj_out;
  std::size_t heads = 1;

  static MultiHeadAttention create(ParameterStore& store, const std::string& name,
                                   std::size_t query_dim, std::size_t key_dim,
                                   std::size_t value_dim, std::size_t heads, Rng& rng);
  std::size_t model_dim() const { return proj_q.out_dim(); }

  // q: [B, dq]; k, v: [B*n, dk/dv]; valid marks real (unpadded) rows.
  // Queries with no valid key produce a zero output row.
  Var operator()(Var q, Var k, Var v, std::span<const std::uint8_t> valid,
                 std::size_t n) const;
};

// Geometric frequency ladder w_i = 10^(-9 (i-1)/(d-1)); w = [1] when d = 1.
std::vector<double> frequency_ladder(std::size_t dim);

// phi(dt)_i = cos(w_i dt + b_i) with trainable w and b.
struct LearnableTimeEncoder {
  Parameter* omega = nullptr;
  Parameter* bias = nullptr;

  static LearnableTimeEncoder create(ParameterStore& store, const std::string& name,
                                     std::size_t dim);
  std::size_t dim() const { return omega->value.cols; }
  Var operator()(Tape& tape, std::span<const double> dt) const;
};

// phi(dt)_i = cos(w_i dt) with the frozen frequency ladder.
struct FixedTimeEncoder {
  Parameter* omega = nullptr;  // frozen
  Parameter* bias = nullptr;   // frozen zeros

  static FixedTimeEncoder create(ParameterStore& store, const std::string& name,
                                 std::size_t dim);
  std::size_t dim() const { return omega->value.cols; }
  Var operator()(Tape& tape, std::span<const double> dt) const;
};

Var bce_loss(Var p, std::span<const double> labels);

struct AdamOptions {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

class Adam {
 public:
  explicit Adam(const ParameterStore& store, AdamOptions opts = {});

  // Bias-corrected update of every trainable parameter, then zeroes grads.
  void step();
  std::size_t steps() const { return t_; }
  const AdamOptions& options() const { return opts_; }

 private:
  std::vector<Parameter*> params_;
  std::vector<Tensor> m_, v_;
  AdamOptions opts_;
  std::size_t t_ = 0;
};

// Central-difference check of d fn / d params. Frozen parameters are skipped.
// Returns the maximum over coordinates of |a - n| / max(1e-6, |a| + |n|);
// the floor keeps round-off on (near-)zero gradients, about 1e-11 at
// eps = 1e-5, from reading as a relative error.
double grad_check(const std::function<Var(Tape&)>& fn, std::span<Parameter* const> params,
                  double eps = 1e-5);

}  // namespace tawrmac
