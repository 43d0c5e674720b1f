#pragma once

// Minimal dynamic-tape reverse-mode differentiation over row-major float64
// matrices. Every value is 2-D; vectors are 1 x n rows, batches stack rows.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "tawrmac/rng.hpp"

namespace tawrmac::ad {

struct Tensor {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Tensor() = default;
  Tensor(std::size_t r, std::size_t c, double fill = 0.0)
      : rows(r), cols(c), data(r * c, fill) {}
  Tensor(std::size_t r, std::size_t c, std::vector<double> values);

  static Tensor row_vector(std::span<const double> values);
  static Tensor column(std::span<const double> values);

  std::size_t size() const { return data.size(); }
  bool empty() const { return data.empty(); }
  double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
  std::span<double> row(std::size_t r) { return {data.data() + r * cols, cols}; }
  std::span<const double> row(std::size_t r) const { return {data.data() + r * cols, cols}; }
};

// C += A * B. Each output element accumulates over the inner dimension in
// ascending order, so a row of C depends only on the matching row of A.
void gemm_acc(const Tensor& a, const Tensor& b, Tensor& c);
Tensor transpose(const Tensor& a);

struct Parameter {
  std::string name;
  Tensor value;
  Tensor grad;
  bool frozen = false;
};

class ParameterStore {
 public:
  Parameter& add(const std::string& name, std::size_t rows, std::size_t cols,
                 bool frozen = false);
  // uniform(-1/sqrt(fan_in), 1/sqrt(fan_in))
  Parameter& add_uniform(const std::string& name, std::size_t rows, std::size_t cols,
                         std::size_t fan_in, Rng& rng);

  std::vector<Parameter*> all() const;
  std::vector<Parameter*> trainable() const;
  Parameter* find(const std::string& name) const;
  std::size_t size() const { return params_.size(); }
  std::size_t num_scalars() const;
  void zero_grad();

  // Values only; used for best-epoch snapshots.
  std::vector<Tensor> snapshot() const;
  void restore(const std::vector<Tensor>& values);

 private:
  std::vector<std::unique_ptr<Parameter>> params_;
  std::unordered_map<std::string, Parameter*> by_name_;
};

class Tape;

class Var {
 public:
  Var() = default;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  Tape& tape() const { return *tape_; }
  std::size_t id() const { return id_; }
  const Tensor& value() const;
  std::size_t rows() const { return value().rows; }
  std::size_t cols() const { return value().cols; }
  bool valid() const { return tape_ != nullptr; }
  bool requires_grad() const;

 private:
  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

class Tape {
 public:
  using Backward = std::function<void(Tape&, std::size_t self)>;

  // With record = false no backward closures are kept (inference mode).
  explicit Tape(bool record = true) : record_(record) {}
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  bool recording() const { return record_; }

  Var constant(Tensor value);
  Var constant(std::size_t rows, std::size_t cols, double fill = 0.0);
  // Leaf bound to a parameter; repeated calls reuse the same node.
  Var param(Parameter& p);

  Var push(Tensor value, bool requires_grad, Backward backward);

  const Tensor& value(std::size_t id) const { return nodes_[id].value; }
  bool requires_grad(std::size_t id) const { return nodes_[id].requires_grad; }
  // Gradient slot of node `id`, allocated on first use.
  Tensor& grad(std::size_t id);
  const Tensor& grad_of(Var v) const { return nodes_[v.id()].grad; }

  // Seeds d(out)/d(out) = 1 for a 1x1 output, back-propagates, and adds leaf
  // gradients into the bound Parameter::grad slots.
  void backward(Var out);

  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    bool requires_grad = false;
    Backward backward;
    Parameter* param = nullptr;
  };
  std::vector<Node> nodes_;
  std::unordered_map<const Parameter*, std::size_t> param_nodes_;
  bool record_;
};

// ---- differentiable ops ----------------------------------------------------

Var matmul(Var a, Var b);
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
// a[n,c] + b[1,c]
Var add_row(Var a, Var b);
// a[n,c] * s[n,1]
Var mul_col(Var a, Var s);
Var scale(Var a, double s);
Var sigmoid(Var a);
Var tanh(Var a);
Var relu(Var a);
Var cos(Var a);

Var concat_cols(std::span<const Var> parts);
Var concat_rows(std::span<const Var> parts);
Var slice_cols(Var a, std::size_t start, std::size_t len);
// Row i of the output is row idx[i] of `a`; negative indices give zero rows.
Var gather_rows(Var a, std::span<const std::int64_t> idx);
Var reshape(Var a, std::size_t rows, std::size_t cols);
// Mean over consecutive groups of `group` rows: [n*group, c] -> [n, c].
Var group_mean_rows(Var a, std::size_t group);
Var sum_all(Var a);
Var mean_all(Var a);
Var softmax_rows(Var a);

// cos(dt_i * omega_j + bias_j) for a column of time deltas.
Var time_encode(std::span<const double> dt, Var omega, Var bias);

// Scaled dot-product attention for B queries, each over its own block of n
// key/value rows. q: [B, D]; k, v: [B*n, D]; valid: B*n flags. Heads split D
// evenly. A query whose keys are all masked yields a zero row.
Var attend(Var q, Var k, Var v, std::span<const std::uint8_t> valid,
           std::size_t n, std::size_t heads);

// Mean binary cross-entropy over a column of probabilities, clamped to
// [1e-7, 1 - 1e-7].
Var bce(Var p, std::span<const double> labels);
// Mean negative log-likelihood of class probabilities (rows sum to 1).
Var nll(Var probs, std::span<const int> labels);

Var dropout(Var a, double rate, Rng& rng);

}  // namespace tawrmac::ad
