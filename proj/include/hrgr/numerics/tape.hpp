#pragma once

#include <array>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "hrgr/numerics/array.hpp"

namespace hrgr::num {

enum class OpKind : std::uint8_t {
  Constant,
  Param,
  MatMul,
  Add,  // same shape, or a 1 x n row broadcast over every row of the left operand
  Sub,
  Mul,
  Scale,
  Concat,  // along the last dimension
  Sigmoid,
  Tanh,
  Relu,
  SoftmaxLastDim,
  LogSoftmaxLastDim,
  LogSigmoid,
  EmbeddingLookup,
  MeanRows,
  Transpose,
  Sum,
  Pick,
};

const char* op_name(OpKind kind);

// Handle to a node recorded on a Tape.
struct Var {
  std::uint32_t id = 0;
};

// Records a computation over Arrays and replays it backwards. Parameters are
// bound by name and referenced, not copied; the referenced arrays must outlive
// the tape. A tape is single-threaded; use one tape per sample to evaluate
// samples concurrently.
class Tape {
 public:
  static constexpr std::size_t kMaxParents = 4;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;
  Tape(Tape&&) = default;
  Tape& operator=(Tape&&) = default;

  Var constant(Array value);
  // Binding the same name twice returns the same node, so its gradient
  // accumulates over every use.
  Var param(std::string_view name, const Array& value);

  const Array& value(Var v) const;
  double scalar(Var v) const;
  std::size_t size() const { return nodes_.size(); }
  void clear();

  Var matmul(Var a, Var b);
  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  Var mul(Var a, Var b);
  Var scale(Var a, double factor);
  Var concat(std::initializer_list<Var> parts);
  Var sigmoid(Var a);
  Var tanh(Var a);
  Var relu(Var a);
  Var softmax(Var a);
  Var log_softmax(Var a);
  Var log_sigmoid(Var a);
  // Row `row` of a 2-D table, as a 1 x cols array.
  Var embedding(Var table, std::size_t row);
  Var mean_rows(Var a);
  Var transpose(Var a);
  Var sum(Var a);
  // Element `index` of a 1 x n row, as a 1 x 1 array.
  Var pick(Var a, std::size_t index);

  // Generic entry point over the op kinds that take only array inputs.
  Var forward_op(OpKind kind, std::span<const Var> inputs);

  // Gradient of a 1 x 1 loss with respect to every bound parameter.
  Gradients backward(Var loss) const;

 private:
  struct Node {
    OpKind kind = OpKind::Constant;
    std::uint8_t n_parents = 0;
    std::array<std::uint32_t, kMaxParents> parents{};
    std::size_t index = 0;  // row/element index for EmbeddingLookup and Pick
    double factor = 0.0;    // Scale
    const Array* external = nullptr;  // Param: the bound array
    Array value;                      // everything else
  };

  const Array& val(std::uint32_t id) const;
  Var push(Node node);
  void check(Var v) const;
  Var unary(OpKind kind, Var a);

  std::vector<Node> nodes_;
  std::vector<std::string> param_names_;  // parallel to nodes_; empty unless Param
  std::unordered_map<std::string, std::uint32_t> param_index_;
};

}  // namespace hrgr::num
