#include "hrgr/numerics/tape.hpp"

#include <algorithm>
#include <cmath>

#include "hrgr/errors.hpp"

namespace hrgr::num {

namespace {

[[noreturn]] void shape_error(OpKind kind, const Array& a, const Array& b) {
  throw DimensionError(std::string(op_name(kind)) + ": incompatible shapes " + a.shape().str() +
                       " and " + b.shape().str());
}

void require_matrix(OpKind kind, const Array& a) {
  if (a.shape().rank() != 2) {
    throw DimensionError(std::string(op_name(kind)) + ": expected a 2-D array, got " +
                         a.shape().str());
  }
}

double sigmoid_scalar(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

// log(sigmoid(x)) without overflow.
double log_sigmoid_scalar(double x) { return std::min(x, 0.0) - std::log1p(std::exp(-std::abs(x))); }

// c (m x n) += a (m x k) * b (k x n)
void gemm_nn(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
             std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    double* ci = c + i * n;
    const double* ai = a + i * k;
    for (std::size_t p = 0; p < k; ++p) {
      const double av = ai[p];
      if (av == 0.0) continue;
      const double* bp = b + p * n;
      for (std::size_t j = 0; j < n; ++j) ci[j] += av * bp[j];
    }
  }
}

// c (m x k) += a (m x n) * b^T, b is (k x n)
void gemm_nt(const double* a, const double* b, double* c, std::size_t m, std::size_t n,
             std::size_t k) {
  for (std::size_t i = 0; i < m; ++i) {
    const double* ai = a + i * n;
    double* ci = c + i * k;
    for (std::size_t p = 0; p < k; ++p) {
      const double* bp = b + p * n;
      double acc = 0.0;
      for (std::size_t j = 0; j < n; ++j) acc += ai[j] * bp[j];
      ci[p] += acc;
    }
  }
}

// c (k x n) += a^T * b, a is (m x k), b is (m x n)
void gemm_tn(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
             std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    const double* ai = a + i * k;
    const double* bi = b + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const double av = ai[p];
      if (av == 0.0) continue;
      double* cp = c + p * n;
      for (std::size_t j = 0; j < n; ++j) cp[j] += av * bi[j];
    }
  }
}

Array& ensure(std::vector<Array>& grads, std::uint32_t id, const Shape& shape) {
  Array& g = grads[id];
  if (g.empty()) g = Array(shape);
  return g;
}

}  // namespace

const char* op_name(OpKind kind) {
  switch (kind) {
    case OpKind::Constant: return "constant";
    case OpKind::Param: return "param";
    case OpKind::MatMul: return "matmul";
    case OpKind::Add: return "add";
    case OpKind::Sub: return "sub";
    case OpKind::Mul: return "elementwise_mul";
    case OpKind::Scale: return "scale";
    case OpKind::Concat: return "concat";
    case OpKind::Sigmoid: return "sigmoid";
    case OpKind::Tanh: return "tanh";
    case OpKind::Relu: return "relu";
    case OpKind::SoftmaxLastDim: return "softmax_lastdim";
    case OpKind::LogSoftmaxLastDim: return "log_softmax_lastdim";
    case OpKind::LogSigmoid: return "log_sigmoid";
    case OpKind::EmbeddingLookup: return "embedding_lookup";
    case OpKind::MeanRows: return "mean_rows";
    case OpKind::Transpose: return "transpose";
    case OpKind::Sum: return "sum";
    case OpKind::Pick: return "pick";
  }
  return "?";
}

const Array& Tape::val(std::uint32_t id) const {
  const Node& n = nodes_[id];
  return n.external ? *n.external : n.value;
}

const Array& Tape::value(Var v) const {
  check(v);
  return val(v.id);
}

double Tape::scalar(Var v) const {
  const Array& a = value(v);
  if (a.size() != 1) throw ContractError("Tape::scalar: node has shape " + a.shape().str());
  return a[0];
}

void Tape::check(Var v) const {
  if (v.id >= nodes_.size()) throw ContractError("Tape: Var does not belong to this tape");
}

void Tape::clear() {
  nodes_.clear();
  param_names_.clear();
  param_index_.clear();
}

Var Tape::push(Node node) {
  nodes_.push_back(std::move(node));
  param_names_.emplace_back();
  return Var{static_cast<std::uint32_t>(nodes_.size() - 1)};
}

Var Tape::constant(Array value) {
  Node n;
  n.kind = OpKind::Constant;
  n.value = std::move(value);
  return push(std::move(n));
}

Var Tape::param(std::string_view name, const Array& value) {
  std::string key(name);
  if (auto it = param_index_.find(key); it != param_index_.end()) {
    if (nodes_[it->second].external != &value) {
      throw ContractError("Tape::param: '" + key + "' already bound to a different array");
    }
    return Var{it->second};
  }
  Node n;
  n.kind = OpKind::Param;
  n.external = &value;
  Var v = push(std::move(n));
  param_names_[v.id] = key;
  param_index_.emplace(std::move(key), v.id);
  return v;
}

Var Tape::matmul(Var a, Var b) {
  check(a);
  check(b);
  const Array& x = val(a.id);
  const Array& y = val(b.id);
  require_matrix(OpKind::MatMul, x);
  require_matrix(OpKind::MatMul, y);
  if (x.cols() != y.rows()) shape_error(OpKind::MatMul, x, y);
  Node n;
  n.kind = OpKind::MatMul;
  n.n_parents = 2;
  n.parents = {a.id, b.id};
  n.value = Array::zeros(x.rows(), y.cols());
  gemm_nn(x.data().data(), y.data().data(), n.value.data().data(), x.rows(), x.cols(), y.cols());
  return push(std::move(n));
}

Var Tape::add(Var a, Var b) {
  check(a);
  check(b);
  const Array& x = val(a.id);
  const Array& y = val(b.id);
  Node n;
  n.kind = OpKind::Add;
  n.n_parents = 2;
  n.parents = {a.id, b.id};
  n.value = x;
  auto out = n.value.data();
  if (x.shape() == y.shape()) {
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += y[i];
  } else if (y.rows() == 1 && y.cols() == x.cols() && x.shape().rank() == 2) {
    const std::size_t c = x.cols();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += y[i % c];
  } else {
    shape_error(OpKind::Add, x, y);
  }
  return push(std::move(n));
}

Var Tape::sub(Var a, Var b) {
  check(a);
  check(b);
  const Array& x = val(a.id);
  const Array& y = val(b.id);
  if (x.shape() != y.shape()) shape_error(OpKind::Sub, x, y);
  Node n;
  n.kind = OpKind::Sub;
  n.n_parents = 2;
  n.parents = {a.id, b.id};
  n.value = x;
  auto out = n.value.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= y[i];
  return push(std::move(n));
}

Var Tape::mul(Var a, Var b) {
  check(a);
  check(b);
  const Array& x = val(a.id);
  const Array& y = val(b.id);
  if (x.shape() != y.shape()) shape_error(OpKind::Mul, x, y);
  Node n;
  n.kind = OpKind::Mul;
  n.n_parents = 2;
  n.parents = {a.id, b.id};
  n.value = x;
  auto out = n.value.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= y[i];
  return push(std::move(n));
}

Var Tape::scale(Var a, double factor) {
  check(a);
  Node n;
  n.kind = OpKind::Scale;
  n.n_parents = 1;
  n.parents = {a.id};
  n.factor = factor;
  n.value = val(a.id);
  for (double& v : n.value.data()) v *= factor;
  return push(std::move(n));
}

Var Tape::concat(std::initializer_list<Var> parts) {
  if (parts.size() == 0 || parts.size() > kMaxParents) {
    throw DimensionError("concat: expected 1.." + std::to_string(kMaxParents) + " inputs, got " +
                         std::to_string(parts.size()));
  }
  Node n;
  n.kind = OpKind::Concat;
  std::size_t rows = 0;
  std::size_t cols = 0;
  for (Var p : parts) {
    check(p);
    const Array& x = val(p.id);
    require_matrix(OpKind::Concat, x);
    if (n.n_parents == 0) {
      rows = x.rows();
    } else if (x.rows() != rows) {
      shape_error(OpKind::Concat, val(n.parents[0]), x);
    }
    cols += x.cols();
    n.parents[n.n_parents++] = p.id;
  }
  n.value = Array::zeros(rows, cols);
  std::size_t offset = 0;
  for (std::size_t k = 0; k < n.n_parents; ++k) {
    const Array& x = val(n.parents[k]);
    for (std::size_t r = 0; r < rows; ++r) {
      for (std::size_t c = 0; c < x.cols(); ++c) n.value.at(r, offset + c) = x.at(r, c);
    }
    offset += x.cols();
  }
  return push(std::move(n));
}

Var Tape::unary(OpKind kind, Var a) {
  check(a);
  Node n;
  n.kind = kind;
  n.n_parents = 1;
  n.parents = {a.id};
  n.value = val(a.id);
  auto out = n.value.data();
  switch (kind) {
    case OpKind::Sigmoid:
      for (double& v : out) v = sigmoid_scalar(v);
      break;
    case OpKind::Tanh:
      for (double& v : out) v = std::tanh(v);
      break;
    case OpKind::Relu:
      for (double& v : out) v = v > 0.0 ? v : 0.0;
      break;
    case OpKind::LogSigmoid:
      for (double& v : out) v = log_sigmoid_scalar(v);
      break;
    case OpKind::SoftmaxLastDim:
    case OpKind::LogSoftmaxLastDim: {
      const std::size_t c = n.value.cols();
      for (std::size_t r = 0; r < n.value.rows(); ++r) {
        double* row = out.data() + r * c;
        const double mx = *std::max_element(row, row + c);
        double z = 0.0;
        for (std::size_t j = 0; j < c; ++j) z += std::exp(row[j] - mx);
        if (kind == OpKind::SoftmaxLastDim) {
          for (std::size_t j = 0; j < c; ++j) row[j] = std::exp(row[j] - mx) / z;
        } else {
          const double lz = mx + std::log(z);
          for (std::size_t j = 0; j < c; ++j) row[j] -= lz;
        }
      }
      break;
    }
    default:
      throw ContractError(std::string("Tape::unary: not a unary op: ") + op_name(kind));
  }
  return push(std::move(n));
}

Var Tape::sigmoid(Var a) { return unary(OpKind::Sigmoid, a); }
Var Tape::tanh(Var a) { return unary(OpKind::Tanh, a); }
Var Tape::relu(Var a) { return unary(OpKind::Relu, a); }
Var Tape::softmax(Var a) { return unary(OpKind::SoftmaxLastDim, a); }
Var Tape::log_softmax(Var a) { return unary(OpKind::LogSoftmaxLastDim, a); }
Var Tape::log_sigmoid(Var a) { return unary(OpKind::LogSigmoid, a); }

Var Tape::embedding(Var table, std::size_t row) {
  check(table);
  const Array& t = val(table.id);
  require_matrix(OpKind::EmbeddingLookup, t);
  if (row >= t.rows()) {
    throw DimensionError("embedding_lookup: row " + std::to_string(row) + " out of range for " +
                         t.shape().str());
  }
  Node n;
  n.kind = OpKind::EmbeddingLookup;
  n.n_parents = 1;
  n.parents = {table.id};
  n.index = row;
  const auto src = t.data().subspan(row * t.cols(), t.cols());
  n.value = Array(Shape{1, t.cols()}, std::vector<double>(src.begin(), src.end()));
  return push(std::move(n));
}

Var Tape::mean_rows(Var a) {
  check(a);
  const Array& x = val(a.id);
  require_matrix(OpKind::MeanRows, x);
  Node n;
  n.kind = OpKind::MeanRows;
  n.n_parents = 1;
  n.parents = {a.id};
  n.value = Array::zeros(1, x.cols());
  for (std::size_t r = 0; r < x.rows(); ++r) {
    for (std::size_t c = 0; c < x.cols(); ++c) n.value[c] += x.at(r, c);
  }
  for (double& v : n.value.data()) v /= static_cast<double>(x.rows());
  return push(std::move(n));
}

Var Tape::transpose(Var a) {
  check(a);
  const Array& x = val(a.id);
  require_matrix(OpKind::Transpose, x);
  Node n;
  n.kind = OpKind::Transpose;
  n.n_parents = 1;
  n.parents = {a.id};
  n.value = Array::zeros(x.cols(), x.rows());
  for (std::size_t r = 0; r < x.rows(); ++r) {
    for (std::size_t c = 0; c < x.cols(); ++c) n.value.at(c, r) = x.at(r, c);
  }
  return push(std::move(n));
}

Var Tape::sum(Var a) {
  check(a);
  Node n;
  n.kind = OpKind::Sum;
  n.n_parents = 1;
  n.parents = {a.id};
  double s = 0.0;
  for (double v : val(a.id).data()) s += v;
  n.value = Array::scalar(s);
  return push(std::move(n));
}

Var Tape::pick(Var a, std::size_t index) {
  check(a);
  const Array& x = val(a.id);
  if (x.rows() != 1 || index >= x.cols()) {
    throw DimensionError("pick: index " + std::to_string(index) + " invalid for shape " +
                         x.shape().str());
  }
  Node n;
  n.kind = OpKind::Pick;
  n.n_parents = 1;
  n.parents = {a.id};
  n.index = index;
  n.value = Array::scalar(x[index]);
  return push(std::move(n));
}

Var Tape::forward_op(OpKind kind, std::span<const Var> in) {
  auto arity = [&](std::size_t k) {
    if (in.size() != k) {
      throw DimensionError(std::string(op_name(kind)) + ": expected " + std::to_string(k) +
                           " inputs, got " + std::to_string(in.size()));
    }
  };
  switch (kind) {
    case OpKind::MatMul: arity(2); return matmul(in[0], in[1]);
    case OpKind::Add: arity(2); return add(in[0], in[1]);
    case OpKind::Sub: arity(2); return sub(in[0], in[1]);
    case OpKind::Mul: arity(2); return mul(in[0], in[1]);
    case OpKind::Sigmoid: arity(1); return sigmoid(in[0]);
    case OpKind::Tanh: arity(1); return tanh(in[0]);
    case OpKind::Relu: arity(1); return relu(in[0]);
    case OpKind::SoftmaxLastDim: arity(1); return softmax(in[0]);
    case OpKind::LogSoftmaxLastDim: arity(1); return log_softmax(in[0]);
    case OpKind::LogSigmoid: arity(1); return log_sigmoid(in[0]);
    case OpKind::MeanRows: arity(1); return mean_rows(in[0]);
    case OpKind::Transpose: arity(1); return transpose(in[0]);
    case OpKind::Sum: arity(1); return sum(in[0]);
    case OpKind::Concat:
      switch (in.size()) {
        case 1: return concat({in[0]});
        case 2: return concat({in[0], in[1]});
        case 3: return concat({in[0], in[1], in[2]});
        case 4: return concat({in[0], in[1], in[2], in[3]});
        default: arity(kMaxParents);
      }
      break;
    default: break;
  }
  throw ContractError(std::string("forward_op: ") + op_name(kind) +
                      " needs extra arguments; call the dedicated method");
}

Gradients Tape::backward(Var loss) const {
  check(loss);
  if (val(loss.id).size() != 1) {
    throw ContractError("backward: loss must be scalar, got shape " + val(loss.id).shape().str());
  }
  std::vector<Array> grads(loss.id + 1);
  grads[loss.id] = Array::scalar(1.0);

  for (std::uint32_t id = loss.id + 1; id-- > 0;) {
    if (grads[id].empty()) continue;
    const Node& n = nodes_[id];
    const Array& g = grads[id];
    const Array& out = val(id);
    switch (n.kind) {
      case OpKind::Constant:
      case OpKind::Param:
        break;
      case OpKind::MatMul: {
        const Array& a = val(n.parents[0]);
        const Array& b = val(n.parents[1]);
        Array& ga = ensure(grads, n.parents[0], a.shape());
        gemm_nt(g.data().data(), b.data().data(), ga.data().data(), a.rows(), b.cols(), a.cols());
        Array& gb = ensure(grads, n.parents[1], b.shape());
        gemm_tn(a.data().data(), g.data().data(), gb.data().data(), a.rows(), a.cols(), b.cols());
        break;
      }
      case OpKind::Add:
      case OpKind::Sub: {
        const double sign = n.kind == OpKind::Add ? 1.0 : -1.0;
        Array& ga = ensure(grads, n.parents[0], val(n.parents[0]).shape());
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
        const Array& b = val(n.parents[1]);
        Array& gb = ensure(grads, n.parents[1], b.shape());
        if (b.size() == g.size()) {
          for (std::size_t i = 0; i < g.size(); ++i) gb[i] += sign * g[i];
        } else {
          const std::size_t c = b.cols();
          for (std::size_t i = 0; i < g.size(); ++i) gb[i % c] += sign * g[i];
        }
        break;
      }
      case OpKind::Mul: {
        const Array& a = val(n.parents[0]);
        const Array& b = val(n.parents[1]);
        Array& ga = ensure(grads, n.parents[0], a.shape());
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * b[i];
        Array& gb = ensure(grads, n.parents[1], b.shape());
        for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * a[i];
        break;
      }
      case OpKind::Scale: {
        Array& ga = ensure(grads, n.parents[0], out.shape());
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += n.factor * g[i];
        break;
      }
      case OpKind::Concat: {
        std::size_t offset = 0;
        for (std::size_t k = 0; k < n.n_parents; ++k) {
          const Array& x = val(n.parents[k]);
          Array& gx = ensure(grads, n.parents[k], x.shape());
          for (std::size_t r = 0; r < x.rows(); ++r) {
            for (std::size_t c = 0; c < x.cols(); ++c) gx.at(r, c) += g.at(r, offset + c);
          }
          offset += x.cols();
        }
        break;
      }
      case OpKind::Sigmoid: {
        Array& ga = ensure(grads, n.parents[0], out.shape());
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * out[i] * (1.0 - out[i]);
        break;
      }
      case OpKind::Tanh: {
        Array& ga = ensure(grads, n.parents[0], out.shape());
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * (1.0 - out[i] * out[i]);
        break;
      }
      case OpKind::Relu: {
        const Array& a = val(n.parents[0]);
        Array& ga = ensure(grads, n.parents[0], out.shape());
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += a[i] > 0.0 ? g[i] : 0.0;
        break;
      }
      case OpKind::LogSigmoid: {
        const Array& a = val(n.parents[0]);
        Array& ga = ensure(grads, n.parents[0], out.shape());
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * sigmoid_scalar(-a[i]);
        break;
      }
      case OpKind::SoftmaxLastDim: {
        Array& ga = ensure(grads, n.parents[0], out.shape());
        const std::size_t c = out.cols();
        for (std::size_t r = 0; r < out.rows(); ++r) {
          double dot = 0.0;
          for (std::size_t j = 0; j < c; ++j) dot += g.at(r, j) * out.at(r, j);
          for (std::size_t j = 0; j < c; ++j) ga.at(r, j) += out.at(r, j) * (g.at(r, j) - dot);
        }
        break;
      }
      case OpKind::LogSoftmaxLastDim: {
        Array& ga = ensure(grads, n.parents[0], out.shape());
        const std::size_t c = out.cols();
        for (std::size_t r = 0; r < out.rows(); ++r) {
          double gsum = 0.0;
          for (std::size_t j = 0; j < c; ++j) gsum += g.at(r, j);
          for (std::size_t j = 0; j < c; ++j) {
            ga.at(r, j) += g.at(r, j) - std::exp(out.at(r, j)) * gsum;
          }
        }
        break;
      }
      case OpKind::EmbeddingLookup: {
        const Array& t = val(n.parents[0]);
        Array& gt = ensure(grads, n.parents[0], t.shape());
        for (std::size_t c = 0; c < t.cols(); ++c) gt.at(n.index, c) += g[c];
        break;
      }
      case OpKind::MeanRows: {
        const Array& a = val(n.parents[0]);
        Array& ga = ensure(grads, n.parents[0], a.shape());
        const double inv = 1.0 / static_cast<double>(a.rows());
        for (std::size_t r = 0; r < a.rows(); ++r) {
          for (std::size_t c = 0; c < a.cols(); ++c) ga.at(r, c) += g[c] * inv;
        }
        break;
      }
      case OpKind::Transpose: {
        const Array& a = val(n.parents[0]);
        Array& ga = ensure(grads, n.parents[0], a.shape());
        for (std::size_t r = 0; r < a.rows(); ++r) {
          for (std::size_t c = 0; c < a.cols(); ++c) ga.at(r, c) += g.at(c, r);
        }
        break;
      }
      case OpKind::Sum: {
        const Array& a = val(n.parents[0]);
        Array& ga = ensure(grads, n.parents[0], a.shape());
        for (double& v : ga.data()) v += g[0];
        break;
      }
      case OpKind::Pick: {
        Array& ga = ensure(grads, n.parents[0], val(n.parents[0]).shape());
        ga[n.index] += g[0];
        break;
      }
    }
  }

  Gradients out;
  for (std::uint32_t id = 0; id <= loss.id; ++id) {
    if (nodes_[id].kind != OpKind::Param) continue;
    Array g = grads[id].empty() ? Array(val(id).shape()) : std::move(grads[id]);
    out.emplace(param_names_[id], std::move(g));
  }
  return out;
}

}  // namespace hrgr::num
