#include "tact/autodiff.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>

#include "tact/error.hpp"
#include "tact/random.hpp"

namespace tact::ad {

Matrix::Matrix(std::size_t r, std::size_t c, std::vector<double> values) : rows(r), cols(c), data(std::move(values)) {
  if (data.size() != r * c) {
    throw ShapeError("matrix data length " + std::to_string(data.size()) + " does not match shape " +
                     std::to_string(r) + "x" + std::to_string(c));
  }
}

Matrix Matrix::row(std::vector<double> values) {
  const auto n = values.size();
  return Matrix(1, n, std::move(values));
}

std::string Matrix::shape_string() const { return std::to_string(rows) + "x" + std::to_string(cols); }

const Matrix& Var::value() const { return tape_->value(id_); }

double Var::scalar() const {
  const auto& v = value();
  if (v.rows != 1 || v.cols != 1) {
    throw ShapeError("scalar() on a " + v.shape_string() + " value");
  }
  return v.data[0];
}

namespace {

void check_finite(const Matrix& m, const char* op) {
  for (double x : m.data) {
    if (!std::isfinite(x)) {
      throw NumericError(std::string("non-finite value produced by ") + op);
    }
  }
}

[[noreturn]] void shape_fail(const char* op, const Matrix& a, const Matrix& b) {
  throw ShapeError(std::string(op) + ": incompatible shapes " + a.shape_string() + " and " + b.shape_string());
}

void accumulate(Matrix& dst, const Matrix& src) {
  for (std::size_t i = 0; i < dst.data.size(); ++i) {
    dst.data[i] += src.data[i];
  }
}

}  // namespace

Var Tape::constant(Matrix value) {
  check_finite(value, "constant");
  nodes_.push_back({std::move(value), {}, false, {}});
  return {this, nodes_.size() - 1};
}

Var Tape::variable(Matrix value) {
  check_finite(value, "variable");
  nodes_.push_back({std::move(value), {}, true, {}});
  return {this, nodes_.size() - 1};
}

const Matrix& Tape::grad(NodeId id) const { return nodes_[id].grad; }

Matrix& Tape::grad_buffer(NodeId id) {
  auto& n = nodes_[id];
  if (n.grad.empty()) {
    n.grad = Matrix(n.value.rows, n.value.cols);
  }
  return n.grad;
}

Var Tape::record(Matrix value, std::initializer_list<Var> parents, BackwardFn backward, const char* op) {
  return record(std::move(value), std::span<const Var>(parents.begin(), parents.size()), std::move(backward), op);
}

Var Tape::record(Matrix value, std::span<const Var> parents, BackwardFn backward, const char* op) {
  check_finite(value, op);
  bool needs = false;
  for (const auto& p : parents) {
    if (&p.tape() != this) {
      throw ContractError(std::string(op) + ": operands recorded on different tapes");
    }
    needs = needs || nodes_[p.id()].requires_grad;
  }
  nodes_.push_back({std::move(value), {}, needs, needs ? std::move(backward) : BackwardFn{}});
  return {this, nodes_.size() - 1};
}

void Tape::backward(Var loss) {
  if (&loss.tape() != this) {
    throw ContractError("backward: loss belongs to another tape");
  }
  const auto& v = loss.value();
  if (v.rows != 1 || v.cols != 1) {
    throw ContractError("backward: loss must be 1x1, got " + v.shape_string());
  }
  if (backward_done_) {
    throw ContractError("backward: tape already differentiated");
  }
  backward_done_ = true;
  if (!nodes_[loss.id()].requires_grad) {
    return;
  }
  grad_buffer(loss.id()).data[0] = 1.0;
  for (NodeId id = loss.id() + 1; id-- > 0;) {
    auto& n = nodes_[id];
    if (n.backward && !n.grad.empty()) {
      n.backward(*this, id);
    }
  }
}

Var matmul(Var a, Var b) {
  const auto& A = a.value();
  const auto& B = b.value();
  if (A.cols != B.rows) {
    shape_fail("matmul", A, B);
  }
  Matrix out(A.rows, B.cols);
  for (std::size_t i = 0; i < A.rows; ++i) {
    for (std::size_t k = 0; k < A.cols; ++k) {
      const double aik = A(i, k);
      if (aik == 0.0) {
        continue;
      }
      const double* brow = &B.data[k * B.cols];
      double* orow = &out.data[i * out.cols];
      for (std::size_t j = 0; j < B.cols; ++j) {
        orow[j] += aik * brow[j];
      }
    }
  }
  const auto ia = a.id();
  const auto ib = b.id();
  return a.tape().record(
      std::move(out), {a, b},
      [ia, ib](Tape& t, NodeId self) {
        const auto& G = t.grad(self);
        const auto& A = t.value(ia);
        const auto& B = t.value(ib);
        if (t.requires_grad(ia)) {
          // dA = G B^T
          auto& gA = t.grad_buffer(ia);
          for (std::size_t i = 0; i < A.rows; ++i) {
            for (std::size_t k = 0; k < A.cols; ++k) {
              double s = 0.0;
              for (std::size_t j = 0; j < B.cols; ++j) {
                s += G(i, j) * B(k, j);
              }
              gA(i, k) += s;
            }
          }
        }
        if (t.requires_grad(ib)) {
          // dB = A^T G
          auto& gB = t.grad_buffer(ib);
          for (std::size_t i = 0; i < A.rows; ++i) {
            for (std::size_t k = 0; k < A.cols; ++k) {
              const double aik = A(i, k);
              if (aik == 0.0) {
                continue;
              }
              for (std::size_t j = 0; j < B.cols; ++j) {
                gB(k, j) += aik * G(i, j);
              }
            }
          }
        }
      },
      "matmul");
}

Var transpose(Var a) {
  const auto& A = a.value();
  Matrix out(A.cols, A.rows);
  for (std::size_t i = 0; i < A.rows; ++i) {
    for (std::size_t j = 0; j < A.cols; ++j) {
      out(j, i) = A(i, j);
    }
  }
  const auto ia = a.id();
  return a.tape().record(
      std::move(out), {a},
      [ia](Tape& t, NodeId self) {
        const auto& G = t.grad(self);
        auto& gA = t.grad_buffer(ia);
        for (std::size_t i = 0; i < gA.rows; ++i) {
          for (std::size_t j = 0; j < gA.cols; ++j) {
            gA(i, j) += G(j, i);
          }
        }
      },
      "transpose");
}

namespace {

template <typename Fwd, typename GradA, typename GradB>
Var binary_elementwise(Var a, Var b, const char* op, Fwd fwd, GradA grad_a, GradB grad_b) {
  const auto& A = a.value();
  const auto& B = b.value();
  if (!A.same_shape(B)) {
    shape_fail(op, A, B);
  }
  Matrix out(A.rows, A.cols);
  for (std::size_t i = 0; i < out.data.size(); ++i) {
    out.data[i] = fwd(A.data[i], B.data[i]);
  }
  const auto ia = a.id();
  const auto ib = b.id();
  return a.tape().record(
      std::move(out), {a, b},
      [ia, ib, grad_a, grad_b](Tape& t, NodeId self) {
        const auto& G = t.grad(self);
        const auto& A = t.value(ia);
        const auto& B = t.value(ib);
        if (t.requires_grad(ia)) {
          auto& gA = t.grad_buffer(ia);
          for (std::size_t i = 0; i < G.data.size(); ++i) {
            gA.data[i] += grad_a(G.data[i], A.data[i], B.data[i]);
          }
        }
        if (t.requires_grad(ib)) {
          auto& gB = t.grad_buffer(ib);
          for (std::size_t i = 0; i < G.data.size(); ++i) {
            gB.data[i] += grad_b(G.data[i], A.data[i], B.data[i]);
          }
        }
      },
      op);
}

}  // namespace

Var add(Var a, Var b) {
  return binary_elementwise(
      a, b, "add", [](double x, double y) { return x + y; }, [](double g, double, double) { return g; },
      [](double g, double, double) { return g; });
}

Var sub(Var a, Var b) {
  return binary_elementwise(
      a, b, "sub", [](double x, double y) { return x - y; }, [](double g, double, double) { return g; },
      [](double g, double, double) { return -g; });
}

Var hadamard(Var a, Var b) {
  return binary_elementwise(
      a, b, "hadamard", [](double x, double y) { return x * y; }, [](double g, double, double y) { return g * y; },
      [](double g, double x, double) { return g * x; });
}

Var scale(Var a, double factor) {
  Matrix out = a.value();
  for (auto& x : out.data) {
    x *= factor;
  }
  const auto ia = a.id();
  return a.tape().record(
      std::move(out), {a},
      [ia, factor](Tape& t, NodeId self) {
        const auto& G = t.grad(self);
        auto& gA = t.grad_buffer(ia);
        for (std::size_t i = 0; i < G.data.size(); ++i) {
          gA.data[i] += factor * G.data[i];
        }
      },
      "scale");
}

Var add_scalar(Var a, double c) {
  Matrix out = a.value();
  for (auto& x : out.data) {
    x += c;
  }
  const auto ia = a.id();
  return a.tape().record(
      std::move(out), {a}, [ia](Tape& t, NodeId self) { accumulate(t.grad_buffer(ia), t.grad(self)); },
      "add_scalar");
}

Var relu(Var x) {
  Matrix out = x.value();
  for (auto& v : out.data) {
    v = v > 0.0 ? v : 0.0;
  }
  const auto ix = x.id();
  return x.tape().record(
      std::move(out), {x},
      [ix](Tape& t, NodeId self) {
        const auto& G = t.grad(self);
        const auto& X = t.value(ix);
        auto& gX = t.grad_buffer(ix);
        for (std::size_t i = 0; i < G.data.size(); ++i) {
          if (X.data[i] > 0.0) {
            gX.data[i] += G.data[i];
          }
        }
      },
      "relu");
}

Var sum_all(Var x) {
  double s = 0.0;
  for (double v : x.value().data) {
    s += v;
  }
  const auto ix = x.id();
  return x.tape().record(
      Matrix(1, 1, s), {x},
      [ix](Tape& t, NodeId self) {
        const double g = t.grad(self).data[0];
        for (auto& v : t.grad_buffer(ix).data) {
          v += g;
        }
      },
      "sum_all");
}

Var mean_rows(Var m) {
  const auto& M = m.value();
  if (M.rows == 0) {
    throw ShapeError("mean_rows: no rows in " + M.shape_string());
  }
  Matrix out(1, M.cols);
  for (std::size_t i = 0; i < M.rows; ++i) {
    for (std::size_t j = 0; j < M.cols; ++j) {
      out.data[j] += M(i, j);
    }
  }
  const double inv = 1.0 / static_cast<double>(M.rows);
  for (auto& v : out.data) {
    v *= inv;
  }
  const auto im = m.id();
  return m.tape().record(
      std::move(out), {m},
      [im, inv](Tape& t, NodeId self) {
        const auto& G = t.grad(self);
        auto& gM = t.grad_buffer(im);
        for (std::size_t i = 0; i < gM.rows; ++i) {
          for (std::size_t j = 0; j < gM.cols; ++j) {
            gM(i, j) += inv * G.data[j];
          }
        }
      },
      "mean_rows");
}

Var index_row(Var m, std::size_t row) {
  const auto& M = m.value();
  if (row >= M.rows) {
    throw ShapeError("index_row: row " + std::to_string(row) + " out of range for " + M.shape_string());
  }
  Matrix out(1, M.cols, std::vector<double>(M.data.begin() + row * M.cols, M.data.begin() + (row + 1) * M.cols));
  const auto im = m.id();
  return m.tape().record(
      std::move(out), {m},
      [im, row](Tape& t, NodeId self) {
        const auto& G = t.grad(self);
        auto& gM = t.grad_buffer(im);
        for (std::size_t j = 0; j < gM.cols; ++j) {
          gM(row, j) += G.data[j];
        }
      },
      "index_row");
}

Var repeat_rows(Var row, std::size_t times) {
  const auto& R = row.value();
  if (R.rows != 1) {
    throw ShapeError("repeat_rows: expected a 1xn row, got " + R.shape_string());
  }
  Matrix out(times, R.cols);
  for (std::size_t i = 0; i < times; ++i) {
    std::copy(R.data.begin(), R.data.end(), out.data.begin() + i * R.cols);
  }
  const auto ir = row.id();
  return row.tape().record(
      std::move(out), {row},
      [ir](Tape& t, NodeId self) {
        const auto& G = t.grad(self);
        auto& gR = t.grad_buffer(ir);
        for (std::size_t i = 0; i < G.rows; ++i) {
          for (std::size_t j = 0; j < G.cols; ++j) {
            gR.data[j] += G(i, j);
          }
        }
      },
      "repeat_rows");
}

Var concat_cols(std::span<const Var> parts) {
  if (parts.empty()) {
    throw ShapeError("concat_cols: no operands");
  }
  const auto rows = parts.front().rows();
  std::size_t cols = 0;
  for (const auto& p : parts) {
    if (p.rows() != rows) {
      shape_fail("concat_cols", parts.front().value(), p.value());
    }
    cols += p.cols();
  }
  Matrix out(rows, cols);
  std::vector<NodeId> ids;
  std::vector<std::size_t> offsets;
  std::size_t off = 0;
  for (const auto& p : parts) {
    const auto& P = p.value();
    for (std::size_t i = 0; i < rows; ++i) {
      std::copy(P.data.begin() + i * P.cols, P.data.begin() + (i + 1) * P.cols, out.data.begin() + i * cols + off);
    }
    ids.push_back(p.id());
    offsets.push_back(off);
    off += P.cols;
  }
  return parts.front().tape().record(
      std::move(out), parts,
      [ids, offsets](Tape& t, NodeId self) {
        const auto& G = t.grad(self);
        for (std::size_t k = 0; k < ids.size(); ++k) {
          if (!t.requires_grad(ids[k])) {
            continue;
          }
          auto& gP = t.grad_buffer(ids[k]);
          for (std::size_t i = 0; i < gP.rows; ++i) {
            for (std::size_t j = 0; j < gP.cols; ++j) {
              gP(i, j) += G(i, offsets[k] + j);
            }
          }
        }
      },
      "concat_cols");
}

Var concat_cols(Var a, Var b) {
  const std::array<Var, 2> parts{a, b};
  return concat_cols(parts);
}

Var masked_softmax(Var scores, const std::vector<std::uint8_t>& mask) {
  const auto& S = scores.value();
  if (mask.size() != S.size()) {
    throw ShapeError("masked_softmax: mask has " + std::to_string(mask.size()) + " entries for scores " +
                     S.shape_string());
  }
  Matrix out(S.rows, S.cols);
  std::size_t empty_rows = 0;
  for (std::size_t i = 0; i < S.rows; ++i) {
    double hi = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < S.cols; ++j) {
      if (mask[i * S.cols + j]) {
        hi = std::max(hi, S(i, j));
      }
    }
    if (hi == -std::numeric_limits<double>::infinity()) {
      ++empty_rows;
      continue;
    }
    double z = 0.0;
    for (std::size_t j = 0; j < S.cols; ++j) {
      if (mask[i * S.cols + j]) {
        out(i, j) = std::exp(S(i, j) - hi);
        z += out(i, j);
      }
    }
    for (std::size_t j = 0; j < S.cols; ++j) {
      out(i, j) /= z;
    }
  }
  auto& tape = scores.tape();
  for (std::size_t i = 0; i < empty_rows; ++i) {
    tape.note_empty_softmax_row();
  }
  const auto is = scores.id();
  return tape.record(
      std::move(out), {scores},
      [is](Tape& t, NodeId self) {
        const auto& G = t.grad(self);
        const auto& Y = t.value(self);
        auto& gS = t.grad_buffer(is);
        for (std::size_t i = 0; i < Y.rows; ++i) {
          double dot = 0.0;
          for (std::size_t j = 0; j < Y.cols; ++j) {
            dot += G(i, j) * Y(i, j);
          }
          for (std::size_t j = 0; j < Y.cols; ++j) {
            gS(i, j) += Y(i, j) * (G(i, j) - dot);
          }
        }
      },
      "masked_softmax");
}

Var add_n(std::span<const Var> terms) {
  if (terms.empty()) {
    throw ShapeError("add_n: no operands");
  }
  const auto& first = terms.front().value();
  for (const auto& t : terms) {
    if (!t.value().same_shape(first)) {
      shape_fail("add_n", first, t.value());
    }
  }
  Matrix out(first.rows, first.cols);
  std::vector<double> column(terms.size());
  for (std::size_t i = 0; i < out.data.size(); ++i) {
    for (std::size_t k = 0; k < terms.size(); ++k) {
      column[k] = terms[k].value().data[i];
    }
    std::sort(column.begin(), column.end());
    double s = 0.0;
    for (double v : column) {
      s += v;
    }
    out.data[i] = s;
  }
  std::vector<NodeId> ids;
  ids.reserve(terms.size());
  for (const auto& t : terms) {
    ids.push_back(t.id());
  }
  return terms.front().tape().record(
      std::move(out), terms,
      [ids](Tape& t, NodeId self) {
        const auto& G = t.grad(self);
        for (auto id : ids) {
          if (t.requires_grad(id)) {
            accumulate(t.grad_buffer(id), G);
          }
        }
      },
      "add_n");
}

Var aggregate_rows(Var x, std::span<const AggregateEntry> entries, std::size_t out_rows) {
  const auto& X = x.value();
  Matrix out(out_rows, X.cols);
  for (const auto& e : entries) {
    if (e.dst >= out_rows || e.src >= X.rows) {
      throw ShapeError("aggregate_rows: entry (" + std::to_string(e.dst) + "," + std::to_string(e.src) +
                       ") out of range for " + X.shape_string() + " -> " + std::to_string(out_rows) + " rows");
    }
    const double* src = &X.data[e.src * X.cols];
    double* dst = &out.data[e.dst * X.cols];
    for (std::size_t j = 0; j < X.cols; ++j) {
      dst[j] += e.weight * src[j];
    }
  }
  const auto ix = x.id();
  return x.tape().record(
      std::move(out), {x},
      [ix, list = std::vector<AggregateEntry>(entries.begin(), entries.end())](Tape& t, NodeId self) {
        const auto& G = t.grad(self);
        auto& gX = t.grad_buffer(ix);
        for (const auto& e : list) {
          const double* g = &G.data[e.dst * G.cols];
          double* dst = &gX.data[e.src * gX.cols];
          for (std::size_t j = 0; j < G.cols; ++j) {
            dst[j] += e.weight * g[j];
          }
        }
      },
      "aggregate_rows");
}

GradCheckResult grad_check(const Objective& objective, std::vector<Matrix> params, double eps,
                           std::size_t coords_per_tensor, std::uint64_t seed, double floor) {
  auto evaluate = [&](bool with_grad, std::vector<Matrix>* grads) {
    Tape tape;
    std::vector<Var> vars;
    vars.reserve(params.size());
    for (const auto& p : params) {
      vars.push_back(tape.variable(p));
    }
    auto loss = objective(tape, vars);
    const double value = loss.scalar();
    if (with_grad) {
      tape.backward(loss);
      grads->clear();
      for (std::size_t k = 0; k < vars.size(); ++k) {
        const auto& g = tape.grad(vars[k]);
        grads->push_back(g.empty() ? Matrix(params[k].rows, params[k].cols) : g);
      }
    }
    return value;
  };

  std::vector<Matrix> analytic;
  evaluate(true, &analytic);

  GradCheckResult result;
  result.per_tensor.assign(params.size(), 0.0);
  Rng rng(seed);
  for (std::size_t k = 0; k < params.size(); ++k) {
    const auto n = params[k].size();
    std::vector<std::size_t> coords(n);
    std::iota(coords.begin(), coords.end(), 0);
    if (n > coords_per_tensor) {
      rng.shuffle(coords);
      coords.resize(coords_per_tensor);
      std::sort(coords.begin(), coords.end());
    }
    for (auto c : coords) {
      const double saved = params[k].data[c];
      params[k].data[c] = saved + eps;
      const double plus = evaluate(false, nullptr);
      params[k].data[c] = saved - eps;
      const double minus = evaluate(false, nullptr);
      params[k].data[c] = saved;
      const double numeric = (plus - minus) / (2.0 * eps);
      const double a = analytic[k].data[c];
      const double denom = std::max({std::abs(a), std::abs(numeric), floor});
      const double rel = std::abs(a - numeric) / denom;
      ++result.coords_checked;
      result.max_abs_error = std::max(result.max_abs_error, std::abs(a - numeric));
      result.per_tensor[k] = std::max(result.per_tensor[k], rel);
      if (rel > result.max_rel_error) {
        result.max_rel_error = rel;
        result.worst_tensor = k;
        result.worst_coord = c;
        result.worst_analytic = a;
        result.worst_numeric = numeric;
      }
    }
  }
  return result;
}

}  // namespace tact::ad
