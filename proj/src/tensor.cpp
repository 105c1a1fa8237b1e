#include "gate/tensor.hpp"

#include <cmath>
#include <sstream>

namespace gate {

std::size_t shape_size(const Shape& shape) {
  std::size_t n = 1;
  for (std::size_t d : shape) n *= d;
  return n;
}

std::string shape_str(const Shape& shape) {
  std::ostringstream os;
  os << "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << "x";
    os << shape[i];
  }
  os << "]";
  return os.str();
}

Tensor::Tensor(Shape shape, std::vector<double> values)
    : shape_(std::move(shape)), values_(std::move(values)) {
  for (std::size_t d : shape_) {
    if (d == 0) fail(ErrorCode::shape, "Tensor: zero dimension in " + shape_str(shape_));
  }
  if (values_.size() != shape_size(shape_)) {
    fail(ErrorCode::shape, "Tensor: " + std::to_string(values_.size()) +
                               " values for shape " + shape_str(shape_));
  }
}

Tensor Tensor::zeros(Shape shape) {
  std::vector<double> v(shape_size(shape), 0.0);
  return Tensor(std::move(shape), std::move(v));
}

Tensor Tensor::full(Shape shape, double value) {
  std::vector<double> v(shape_size(shape), value);
  return Tensor(std::move(shape), std::move(v));
}

Tensor Tensor::scalar(double value) { return Tensor({1}, {value}); }

Tensor Tensor::vector(std::vector<double> values) {
  Shape shape{values.size()};
  return Tensor(std::move(shape), std::move(values));
}

Tensor Tensor::matrix(std::size_t rows, std::size_t cols,
                      std::vector<double> values) {
  return Tensor({rows, cols}, std::move(values));
}

Tensor Tensor::identity(std::size_t n) {
  Tensor t = zeros({n, n});
  for (std::size_t i = 0; i < n; ++i) t.values_[i * n + i] = 1.0;
  return t;
}

std::size_t Tensor::rows() const {
  if (shape_.size() != 2) fail(ErrorCode::shape, "rows: not a matrix " + shape_str(shape_));
  return shape_[0];
}

std::size_t Tensor::cols() const {
  if (shape_.size() != 2) fail(ErrorCode::shape, "cols: not a matrix " + shape_str(shape_));
  return shape_[1];
}

double Tensor::at(std::size_t r, std::size_t c) const {
  return values_[r * cols() + c];
}

double Tensor::item() const {
  if (values_.size() != 1) {
    fail(ErrorCode::shape, "item: tensor " + shape_str(shape_) + " is not a scalar");
  }
  return values_[0];
}

bool Tensor::all_finite() const {
  for (double v : values_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

bool Tensor::same_values(const Tensor& other) const {
  return shape_ == other.shape_ && values_ == other.values_;
}

const char* op_name(OpKind kind) {
  switch (kind) {
    case OpKind::leaf: return "leaf";
    case OpKind::constant: return "constant";
    case OpKind::add: return "add";
    case OpKind::sub: return "sub";
    case OpKind::mul: return "mul";
    case OpKind::scalar_mul: return "scalar_mul";
    case OpKind::matmul: return "matmul";
    case OpKind::matmul_nt: return "matmul_nt";
    case OpKind::add_rowvec: return "add_rowvec";
    case OpKind::tanh: return "tanh";
    case OpKind::reshape: return "reshape";
    case OpKind::mean_sq_diff: return "mean_sq_diff";
    case OpKind::euclidean_norm: return "euclidean_norm";
    case OpKind::row_norms: return "row_norms";
    case OpKind::sum: return "sum";
    case OpKind::detach: return "detach";
  }
  return "?";
}

const Tensor& GradientMap::at(const Tensor& leaf) const {
  if (!leaf.tracked()) fail(ErrorCode::invalid, "GradientMap: tensor is not on a tape");
  return at(leaf.node());
}

const Tensor& GradientMap::at(int node_id) const {
  auto it = grads_.find(node_id);
  if (it == grads_.end()) {
    fail(ErrorCode::invalid,
         "GradientMap: node " + std::to_string(node_id) + " is not a registered leaf");
  }
  return it->second;
}

Tensor Tape::leaf(Tensor value) {
  return leaf(value.shape(), std::vector<double>(value.values().begin(),
                                                 value.values().end()));
}

Tensor Tape::leaf(Shape shape, std::vector<double> values) {
  Tensor t = emit(OpKind::leaf, -1, -1, std::move(shape), std::move(values));
  leaf_ids_.push_back(t.node());
  return t;
}

Tensor Tape::constant(Tensor value) {
  return emit(OpKind::constant, -1, -1, value.shape(),
              std::vector<double>(value.values().begin(), value.values().end()));
}

Tensor Tape::emit(OpKind kind, int a, int b, Shape shape,
                  std::vector<double> values) {
  Node n;
  n.kind = kind;
  n.a = a;
  n.b = b;
  n.shape = shape;
  n.values = values;
  nodes_.push_back(std::move(n));
  Tensor t(std::move(shape), std::move(values));
  t.tape_ = this;
  t.node_ = static_cast<int>(nodes_.size()) - 1;
  return t;
}

int Tape::track_operand(const Tensor& t) {
  if (t.tracked()) {
    if (t.tape() != this) fail(ErrorCode::invalid, "op: inputs from two different tapes");
    return t.node();
  }
  Tensor c = constant(t);
  return c.node();
}

namespace {

// Picks the tape of the tracked operand(s); null when all inputs are plain.
Tape* common_tape(const Tensor& a, const Tensor& b) {
  if (a.tracked() && b.tracked() && a.tape() != b.tape()) {
    fail(ErrorCode::invalid, "op: inputs from two different tapes");
  }
  return a.tracked() ? a.tape() : b.tape();
}

Tensor finish(Tape* tape, OpKind kind, const Tensor& a, const Tensor& b,
              Shape shape, std::vector<double> values) {
  if (!tape) return Tensor(std::move(shape), std::move(values));
  const int ia = tape->track_operand(a);
  const int ib = tape->track_operand(b);
  return tape->emit(kind, ia, ib, std::move(shape), std::move(values));
}

Tensor finish_unary(Tape* tape, OpKind kind, const Tensor& a, Shape shape,
                    std::vector<double> values) {
  if (!tape) return Tensor(std::move(shape), std::move(values));
  const int ia = tape->track_operand(a);
  return tape->emit(kind, ia, -1, std::move(shape), std::move(values));
}

void require_same_shape(OpKind kind, const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) {
    fail(ErrorCode::shape, std::string(op_name(kind)) + ": shape mismatch " +
                               shape_str(a.shape()) + " vs " + shape_str(b.shape()));
  }
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
  require_same_shape(OpKind::add, a, b);
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] + b[i];
  return finish(common_tape(a, b), OpKind::add, a, b, a.shape(), std::move(out));
}

Tensor sub(const Tensor& a, const Tensor& b) {
  require_same_shape(OpKind::sub, a, b);
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] - b[i];
  return finish(common_tape(a, b), OpKind::sub, a, b, a.shape(), std::move(out));
}

Tensor mul(const Tensor& a, const Tensor& b) {
  require_same_shape(OpKind::mul, a, b);
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] * b[i];
  return finish(common_tape(a, b), OpKind::mul, a, b, a.shape(), std::move(out));
}

Tensor scalar_mul(const Tensor& scalar, const Tensor& t) {
  if (scalar.size() != 1) {
    fail(ErrorCode::shape,
         "scalar_mul: first operand " + shape_str(scalar.shape()) + " is not one element");
  }
  const double s = scalar[0];
  std::vector<double> out(t.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = s * t[i];
  return finish(common_tape(scalar, t), OpKind::scalar_mul, scalar, t, t.shape(),
                std::move(out));
}

Tensor scalar_mul(double scalar, const Tensor& t) {
  return scalar_mul(Tensor::scalar(scalar), t);
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.shape().size() != 2 || b.shape().size() != 2 || a.cols() != b.rows()) {
    fail(ErrorCode::shape, "matmul: shape mismatch " + shape_str(a.shape()) +
                               " vs " + shape_str(b.shape()));
  }
  const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
  std::vector<double> out(m * n, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t kk = 0; kk < k; ++kk) {
      const double av = a[i * k + kk];
      for (std::size_t j = 0; j < n; ++j) out[i * n + j] += av * b[kk * n + j];
    }
  }
  return finish(common_tape(a, b), OpKind::matmul, a, b, Shape{m, n}, std::move(out));
}

Tensor matmul_nt(const Tensor& a, const Tensor& b) {
  if (a.shape().size() != 2 || b.shape().size() != 2 || a.cols() != b.cols()) {
    fail(ErrorCode::shape, "matmul_nt: shape mismatch " + shape_str(a.shape()) +
                               " vs " + shape_str(b.shape()));
  }
  const std::size_t m = a.rows(), k = a.cols(), n = b.rows();
  std::vector<double> out(m * n, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      double acc = 0.0;
      for (std::size_t kk = 0; kk < k; ++kk) acc += a[i * k + kk] * b[j * k + kk];
      out[i * n + j] = acc;
    }
  }
  return finish(common_tape(a, b), OpKind::matmul_nt, a, b, Shape{m, n}, std::move(out));
}

Tensor add_rowvec(const Tensor& mat, const Tensor& row) {
  if (mat.shape().size() != 2 || row.shape().size() != 1 ||
      mat.cols() != row.shape()[0]) {
    fail(ErrorCode::shape, "add_rowvec: shape mismatch " + shape_str(mat.shape()) +
                               " vs " + shape_str(row.shape()));
  }
  const std::size_t m = mat.rows(), n = mat.cols();
  std::vector<double> out(m * n);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) out[i * n + j] = mat[i * n + j] + row[j];
  }
  return finish(common_tape(mat, row), OpKind::add_rowvec, mat, row, mat.shape(),
                std::move(out));
}

Tensor tanh(const Tensor& t) {
  std::vector<double> out(t.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::tanh(t[i]);
  return finish_unary(t.tape(), OpKind::tanh, t, t.shape(), std::move(out));
}

Tensor reshape(const Tensor& t, Shape shape) {
  if (shape_size(shape) != t.size()) {
    fail(ErrorCode::shape, "reshape: " + shape_str(t.shape()) + " to " + shape_str(shape));
  }
  std::vector<double> out(t.values().begin(), t.values().end());
  return finish_unary(t.tape(), OpKind::reshape, t, std::move(shape), std::move(out));
}

Tensor mean_sq_diff(const Tensor& a, const Tensor& b) {
  require_same_shape(OpKind::mean_sq_diff, a, b);
  std::vector<double> sq(a.size());
  for (std::size_t i = 0; i < sq.size(); ++i) {
    const double d = a[i] - b[i];
    sq[i] = d * d;
  }
  const double mean = pairwise_sum(sq) / static_cast<double>(sq.size());
  return finish(common_tape(a, b), OpKind::mean_sq_diff, a, b, Shape{1}, {mean});
}

Tensor euclidean_norm(const Tensor& t) {
  std::vector<double> sq(t.size());
  for (std::size_t i = 0; i < sq.size(); ++i) sq[i] = t[i] * t[i];
  const double norm = std::sqrt(pairwise_sum(sq));
  return finish_unary(t.tape(), OpKind::euclidean_norm, t, Shape{1}, {norm});
}

Tensor row_norms(const Tensor& mat) {
  if (mat.shape().size() != 2) {
    fail(ErrorCode::shape, "row_norms: input " + shape_str(mat.shape()) + " is not a matrix");
  }
  const std::size_t m = mat.rows(), n = mat.cols();
  std::vector<double> out(m);
  std::vector<double> sq(n);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const double v = mat[i * n + j];
      sq[j] = v * v;
    }
    out[i] = std::sqrt(pairwise_sum(sq));
  }
  return finish_unary(mat.tape(), OpKind::row_norms, mat, Shape{m}, std::move(out));
}

Tensor sum(const Tensor& t) {
  const double s = pairwise_sum(t.values());
  return finish_unary(t.tape(), OpKind::sum, t, Shape{1}, {s});
}

Tensor detach(const Tensor& t) {
  std::vector<double> out(t.values().begin(), t.values().end());
  if (!t.tracked()) return Tensor(t.shape(), std::move(out));
  return t.tape()->emit(OpKind::detach, t.node(), -1, t.shape(), std::move(out));
}

namespace {

struct Adjoints {
  // Lazily allocated per-node adjoint buffers.
  std::vector<std::vector<double>> grads;
  std::vector<bool> live;

  explicit Adjoints(std::size_t n) : grads(n), live(n, false) {}

  std::vector<double>& touch(const Tape& tape, int id) {
    if (!live[id]) {
      grads[id].assign(shape_size(tape.node(id).shape), 0.0);
      live[id] = true;
    }
    return grads[id];
  }
};

void accumulate_parents(const Tape& tape, int id, const std::vector<double>& g,
                        Adjoints& adj) {
  const Tape::Node& n = tape.node(id);
  const auto parent_values = [&](int pid) -> const std::vector<double>& {
    return tape.node(pid).values;
  };
  switch (n.kind) {
    case OpKind::leaf:
    case OpKind::constant:
    case OpKind::detach:
      break;
    case OpKind::add: {
      auto& ga = adj.touch(tape, n.a);
      auto& gb = adj.touch(tape, n.b);
      for (std::size_t i = 0; i < g.size(); ++i) {
        ga[i] += g[i];
        gb[i] += g[i];
      }
      break;
    }
    case OpKind::sub: {
      auto& ga = adj.touch(tape, n.a);
      auto& gb = adj.touch(tape, n.b);
      for (std::size_t i = 0; i < g.size(); ++i) {
        ga[i] += g[i];
        gb[i] -= g[i];
      }
      break;
    }
    case OpKind::mul: {
      const auto& va = parent_values(n.a);
      const auto& vb = parent_values(n.b);
      auto& ga = adj.touch(tape, n.a);
      auto& gb = adj.touch(tape, n.b);
      for (std::size_t i = 0; i < g.size(); ++i) {
        ga[i] += g[i] * vb[i];
        gb[i] += g[i] * va[i];
      }
      break;
    }
    case OpKind::scalar_mul: {
      const double s = parent_values(n.a)[0];
      const auto& vb = parent_values(n.b);
      auto& ga = adj.touch(tape, n.a);
      auto& gb = adj.touch(tape, n.b);
      std::vector<double> terms(g.size());
      for (std::size_t i = 0; i < g.size(); ++i) {
        terms[i] = g[i] * vb[i];
        gb[i] += s * g[i];
      }
      ga[0] += pairwise_sum(terms);
      break;
    }
    case OpKind::matmul: {
      const auto& va = parent_values(n.a);
      const auto& vb = parent_values(n.b);
      const std::size_t m = tape.node(n.a).shape[0];
      const std::size_t k = tape.node(n.a).shape[1];
      const std::size_t nn = tape.node(n.b).shape[1];
      auto& ga = adj.touch(tape, n.a);
      auto& gb = adj.touch(tape, n.b);
      // dA = G * B^T, dB = A^T * G
      for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < nn; ++j) {
          const double gv = g[i * nn + j];
          if (gv == 0.0) continue;
          for (std::size_t kk = 0; kk < k; ++kk) {
            ga[i * k + kk] += gv * vb[kk * nn + j];
            gb[kk * nn + j] += gv * va[i * k + kk];
          }
        }
      }
      break;
    }
    case OpKind::matmul_nt: {
      // C = A * B^T with A: m x k, B: n x k; dA = G * B, dB = G^T * A
      const auto& va = parent_values(n.a);
      const auto& vb = parent_values(n.b);
      const std::size_t m = tape.node(n.a).shape[0];
      const std::size_t k = tape.node(n.a).shape[1];
      const std::size_t nn = tape.node(n.b).shape[0];
      auto& ga = adj.touch(tape, n.a);
      auto& gb = adj.touch(tape, n.b);
      for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < nn; ++j) {
          const double gv = g[i * nn + j];
          if (gv == 0.0) continue;
          for (std::size_t kk = 0; kk < k; ++kk) {
            ga[i * k + kk] += gv * vb[j * k + kk];
            gb[j * k + kk] += gv * va[i * k + kk];
          }
        }
      }
      break;
    }
    case OpKind::add_rowvec: {
      const std::size_t m = n.shape[0];
      const std::size_t cols = n.shape[1];
      auto& gmat = adj.touch(tape, n.a);
      auto& grow = adj.touch(tape, n.b);
      for (std::size_t i = 0; i < g.size(); ++i) gmat[i] += g[i];
      std::vector<double> col(m);
      for (std::size_t j = 0; j < cols; ++j) {
        for (std::size_t i = 0; i < m; ++i) col[i] = g[i * cols + j];
        grow[j] += pairwise_sum(col);
      }
      break;
    }
    case OpKind::tanh: {
      auto& ga = adj.touch(tape, n.a);
      for (std::size_t i = 0; i < g.size(); ++i) {
        const double y = n.values[i];
        ga[i] += g[i] * (1.0 - y * y);
      }
      break;
    }
    case OpKind::reshape: {
      auto& ga = adj.touch(tape, n.a);
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
      break;
    }
    case OpKind::mean_sq_diff: {
      const auto& va = parent_values(n.a);
      const auto& vb = parent_values(n.b);
      auto& ga = adj.touch(tape, n.a);
      auto& gb = adj.touch(tape, n.b);
      const double scale = 2.0 * g[0] / static_cast<double>(va.size());
      for (std::size_t i = 0; i < va.size(); ++i) {
        const double d = scale * (va[i] - vb[i]);
        ga[i] += d;
        gb[i] -= d;
      }
      break;
    }
    case OpKind::euclidean_norm: {
      const auto& va = parent_values(n.a);
      auto& ga = adj.touch(tape, n.a);
      const double norm = n.values[0];
      if (norm > 0.0) {  // subgradient 0 at the origin
        const double scale = g[0] / norm;
        for (std::size_t i = 0; i < va.size(); ++i) ga[i] += scale * va[i];
      }
      break;
    }
    case OpKind::row_norms: {
      const auto& va = parent_values(n.a);
      auto& ga = adj.touch(tape, n.a);
      const std::size_t cols = tape.node(n.a).shape[1];
      for (std::size_t i = 0; i < n.values.size(); ++i) {
        const double norm = n.values[i];
        if (norm == 0.0) continue;
        const double scale = g[i] / norm;
        for (std::size_t j = 0; j < cols; ++j) {
          ga[i * cols + j] += scale * va[i * cols + j];
        }
      }
      break;
    }
    case OpKind::sum: {
      auto& ga = adj.touch(tape, n.a);
      for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += g[0];
      break;
    }
  }
}

}  // namespace

GradientMap backward(const Tensor& loss) {
  if (!loss.tracked()) fail(ErrorCode::invalid, "backward: loss is not on a tape");
  if (loss.size() != 1) {
    fail(ErrorCode::invalid, "backward: loss " + shape_str(loss.shape()) + " is not a scalar");
  }
  const Tape& tape = *loss.tape();
  Adjoints adj(tape.node_count());
  adj.touch(tape, loss.node())[0] = 1.0;
  for (int id = loss.node(); id >= 0; --id) {
    if (!adj.live[id]) continue;
    accumulate_parents(tape, id, adj.grads[id], adj);
  }
  GradientMap out;
  for (int leaf_id : tape.leaf_ids()) {
    const Tape::Node& n = tape.node(leaf_id);
    if (adj.live[leaf_id]) {
      out.grads_.emplace(leaf_id, Tensor(n.shape, std::move(adj.grads[leaf_id])));
    } else {
      out.grads_.emplace(leaf_id, Tensor::zeros(n.shape));
    }
  }
  return out;
}

double grad_check(const ScalarFn& f, const std::vector<Tensor>& leaf_values,
                  double epsilon) {
  if (!(epsilon > 0.0 && epsilon <= 1e-2)) {
    fail(ErrorCode::invalid, "grad_check: epsilon must be in (0, 1e-2]");
  }

  const auto eval = [&](const std::vector<Tensor>& values) {
    Tape tape;
    std::vector<Tensor> leaves;
    leaves.reserve(values.size());
    for (const Tensor& v : values) leaves.push_back(tape.leaf(v));
    const Tensor loss = f(tape, leaves);
    const double y = loss.item();
    if (!std::isfinite(y)) fail(ErrorCode::invalid, "grad_check: non-finite loss at probe point");
    return y;
  };

  Tape tape;
  std::vector<Tensor> leaves;
  leaves.reserve(leaf_values.size());
  for (const Tensor& v : leaf_values) leaves.push_back(tape.leaf(v));
  const Tensor loss = f(tape, leaves);
  if (!std::isfinite(loss.item())) {
    fail(ErrorCode::invalid, "grad_check: non-finite loss at base point");
  }
  const GradientMap grads = backward(loss);

  double worst = 0.0;
  std::vector<Tensor> probe = leaf_values;
  for (std::size_t li = 0; li < leaf_values.size(); ++li) {
    const Tensor& analytic = grads.at(leaves[li]);
    for (std::size_t i = 0; i < leaf_values[li].size(); ++i) {
      const double base = leaf_values[li][i];
      probe[li].mutable_values()[i] = base + epsilon;
      const double up = eval(probe);
      probe[li].mutable_values()[i] = base - epsilon;
      const double down = eval(probe);
      probe[li].mutable_values()[i] = base;
      const double numeric = (up - down) / (2.0 * epsilon);
      const double denom = std::abs(analytic[i]) + std::abs(numeric) + 1e-12;
      worst = std::max(worst, std::abs(analytic[i] - numeric) / denom);
    }
  }
  return worst;
}

}  // namespace gate
