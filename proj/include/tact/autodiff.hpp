#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace tact::ad {

// Dense row-major float64 matrix.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), data(r * c, fill) {}
  Matrix(std::size_t r, std::size_t c, std::vector<double> values);

  static Matrix row(std::vector<double> values);

  double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }

  std::size_t size() const { return data.size(); }
  bool empty() const { return data.empty(); }
  bool same_shape(const Matrix& o) const { return rows == o.rows && cols == o.cols; }
  std::string shape_string() const;

  friend bool operator==(const Matrix&, const Matrix&) = default;
};

using NodeId = std::size_t;
class Tape;

// Handle to a value recorded on a tape. Cheap to copy; valid while the tape lives.
class Var {
 public:
  Var() = default;
  Var(Tape* tape, NodeId id) : tape_(tape), id_(id) {}

  Tape& tape() const { return *tape_; }
  NodeId id() const { return id_; }
  const Matrix& value() const;
  std::size_t rows() const { return value().rows; }
  std::size_t cols() const { return value().cols; }
  double scalar() const;

 private:
  Tape* tape_ = nullptr;
  NodeId id_ = 0;
};

// Records operations in execution order so parents always precede children.
// Single-threaded; use one tape per worker.
class Tape {
 public:
  using BackwardFn = std::function<void(Tape&, NodeId)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Matrix value);
  Var variable(Matrix value);

  // Seeds d(loss)/d(loss) = 1 and propagates to every node that requires grad.
  void backward(Var loss);

  const Matrix& value(NodeId id) const { return nodes_[id].value; }
  // Zero-shaped matrix when the node received no gradient.
  const Matrix& grad(NodeId id) const;
  const Matrix& grad(Var v) const { return grad(v.id()); }
  bool requires_grad(NodeId id) const { return nodes_[id].requires_grad; }

  // Gradient buffer of a parent, allocated on first use. For op implementations.
  Matrix& grad_buffer(NodeId id);

  Var record(Matrix value, std::initializer_list<Var> parents, BackwardFn backward, const char* op);
  Var record(Matrix value, std::span<const Var> parents, BackwardFn backward, const char* op);

  std::size_t size() const { return nodes_.size(); }
  // Rows of masked_softmax with an empty mask (returned as zeros).
  std::size_t empty_softmax_rows() const { return empty_softmax_rows_; }
  void note_empty_softmax_row() { ++empty_softmax_rows_; }

 private:
  struct Node {
    Matrix value;
    Matrix grad;
    bool requires_grad = false;
    BackwardFn backward;
  };
  std::vector<Node> nodes_;
  std::size_t empty_softmax_rows_ = 0;
  bool backward_done_ = false;
};

// Forward primitives. Shape mismatches raise ShapeError naming both shapes;
// non-finite results raise NumericError naming the op.
Var matmul(Var a, Var b);
Var transpose(Var a);
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var hadamard(Var a, Var b);
Var scale(Var a, double factor);
Var add_scalar(Var a, double c);
Var relu(Var x);  // relu'(0) = 0
Var sum_all(Var x);
Var mean_rows(Var m);
Var index_row(Var m, std::size_t row);
Var repeat_rows(Var row, std::size_t times);
Var concat_cols(std::span<const Var> parts);
Var concat_cols(Var a, Var b);

// Row-wise softmax restricted to `mask` (same shape as scores, nonzero = in).
// Entries outside the mask are exactly 0; a row with an empty mask is all
// zeros and is counted on the tape.
Var masked_softmax(Var scores, const std::vector<std::uint8_t>& mask);

// Elementwise sum of equally shaped terms. Each output entry adds its terms in
// ascending value order, so the result does not depend on term order.
Var add_n(std::span<const Var> terms);

// Sparse constant aggregation: out[dst] += weight * x[src] for each entry.
struct AggregateEntry {
  std::uint32_t dst;
  std::uint32_t src;
  double weight;
};
Var aggregate_rows(Var x, std::span<const AggregateEntry> entries, std::size_t out_rows);

inline Var operator+(Var a, Var b) { return add(a, b); }
inline Var operator-(Var a, Var b) { return sub(a, b); }
inline Var operator*(double c, Var a) { return scale(a, c); }

// Central-difference gradient check. `objective` must build a 1x1 loss from
// the given parameter variables. Up to `coords_per_tensor` coordinates per
// tensor are sampled (all of them when the tensor is smaller). Relative error
// is |a - n| / max(|a|, |n|, floor); the floor keeps finite-difference noise on
// gradients that are truly zero from reading as a large relative error.
struct GradCheckResult {
  double max_rel_error = 0.0;
  std::size_t worst_tensor = 0;
  std::size_t worst_coord = 0;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
  std::vector<double> per_tensor;  // max relative error per tensor
  std::size_t coords_checked = 0;
  double max_abs_error = 0.0;
};

using Objective = std::function<Var(Tape&, std::span<const Var>)>;

GradCheckResult grad_check(const Objective& objective, std::vector<Matrix> params, double eps = 1e-5,
                           std::size_t coords_per_tensor = 50, std::uint64_t seed = 0, double floor = 1e-8);

}  // namespace tact::ad
