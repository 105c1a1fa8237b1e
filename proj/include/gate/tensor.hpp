#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <span>
#include <vector>

#include "gate/common.hpp"

namespace gate {

using Shape = std::vector<std::size_t>;

std::size_t shape_size(const Shape& shape);
std::string shape_str(const Shape& shape);

class Tape;

// Dense 64-bit real tensor. A tensor produced by an op on tape-tracked input
// carries the id of its tape node; plain value tensors have node() == -1.
class Tensor {
 public:
  Tensor() = default;
  Tensor(Shape shape, std::vector<double> values);

  static Tensor zeros(Shape shape);
  static Tensor full(Shape shape, double value);
  static Tensor scalar(double value);
  static Tensor vector(std::vector<double> values);
  static Tensor matrix(std::size_t rows, std::size_t cols,
                       std::vector<double> values);
  static Tensor identity(std::size_t n);

  const Shape& shape() const { return shape_; }
  std::size_t size() const { return values_.size(); }
  std::size_t rows() const;
  std::size_t cols() const;

  std::span<const double> values() const { return values_; }
  std::vector<double>& mutable_values() { return values_; }
  double operator[](std::size_t i) const { return values_[i]; }
  double at(std::size_t r, std::size_t c) const;

  // Value of a one-element tensor.
  double item() const;

  bool tracked() const { return tape_ != nullptr; }
  Tape* tape() const { return tape_; }
  int node() const { return node_; }

  bool all_finite() const;
  bool same_values(const Tensor& other) const;  // bitwise

 private:
  friend class Tape;
  Shape shape_;
  std::vector<double> values_;
  Tape* tape_ = nullptr;
  int node_ = -1;
};

enum class OpKind : std::uint8_t {
  leaf,
  constant,
  add,
  sub,
  mul,         // elementwise, equal shapes
  scalar_mul,  // one-element tensor times tensor
  matmul,
  matmul_nt,   // a times b-transpose
  add_rowvec,  // matrix plus row vector on every row
  tanh,
  reshape,
  mean_sq_diff,
  euclidean_norm,
  row_norms,
  sum,
  detach,
};

const char* op_name(OpKind kind);

// Gradients of one backward pass, keyed by leaf node id. Every leaf that was
// registered on the tape has an entry; leaves the loss does not reach map to
// zero tensors.
class GradientMap {
 public:
  const Tensor& at(const Tensor& leaf) const;
  const Tensor& at(int node_id) const;
  bool contains(int node_id) const { return grads_.count(node_id) != 0; }
  std::size_t size() const { return grads_.size(); }

 private:
  friend GradientMap backward(const Tensor& loss);
  std::map<int, Tensor> grads_;
};

// Append-only record of forward ops. Parents of node k always precede k, so
// one reverse sweep accumulates all adjoints. Single-threaded per tape.
class Tape {
 public:
  Tensor leaf(Tensor value);
  Tensor leaf(Shape shape, std::vector<double> values);
  Tensor constant(Tensor value);

  const std::vector<int>& leaf_ids() const { return leaf_ids_; }
  std::size_t node_count() const { return nodes_.size(); }

  struct Node {
    OpKind kind;
    int a = -1;
    int b = -1;
    Shape shape;
    std::vector<double> values;  // forward cache for the reverse sweep
  };

  const Node& node(int id) const { return nodes_[id]; }

  // Internal: used by the op builders.
  Tensor emit(OpKind kind, int a, int b, Shape shape,
              std::vector<double> values);
  int track_operand(const Tensor& t);

 private:
  std::vector<Node> nodes_;
  std::vector<int> leaf_ids_;
};

// Forward ops. A node is recorded whenever any input is tape-tracked; inputs
// from two different tapes are an error.
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scalar_mul(const Tensor& scalar, const Tensor& t);
Tensor scalar_mul(double scalar, const Tensor& t);
Tensor matmul(const Tensor& a, const Tensor& b);
Tensor matmul_nt(const Tensor& a, const Tensor& b);
Tensor add_rowvec(const Tensor& mat, const Tensor& row);
Tensor tanh(const Tensor& t);
Tensor reshape(const Tensor& t, Shape shape);
Tensor mean_sq_diff(const Tensor& a, const Tensor& b);
Tensor euclidean_norm(const Tensor& t);
Tensor row_norms(const Tensor& mat);
Tensor sum(const Tensor& t);

// Value-preserving, gradient-annihilating: ancestors of t receive nothing.
Tensor detach(const Tensor& t);

// Reverse accumulation from a scalar loss recorded on a tape.
GradientMap backward(const Tensor& loss);

// Max relative error between backward() and central finite differences, over
// every entry of every leaf: |analytic - numeric| / (|analytic| + |numeric| +
// 1e-12). f must build a scalar loss on the given tape from the given leaves.
using ScalarFn =
    std::function<Tensor(Tape&, const std::vector<Tensor>&)>;
double grad_check(const ScalarFn& f, const std::vector<Tensor>& leaf_values,
                  double epsilon);

}  // namespace gate
