#pragma once

// Small tape-based reverse-mode differentiation over dense float64 arrays.
//
// Only the primitives the MixSP pipeline needs are provided; shapes are
// checked eagerly and there is no broadcasting.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace mixsp::diff {

using Shape = std::vector<std::size_t>;

std::size_t shape_size(const Shape& shape);
std::string shape_str(const Shape& shape);

/// Dense row-major array with an optional gradient slot.
struct Tensor {
  Shape shape;
  std::vector<double> values;
  bool requires_grad = false;
  std::vector<double> grad;

  Tensor() = default;
  Tensor(Shape shape, std::vector<double> values, bool requires_grad = false);

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor vector(std::vector<double> values, bool requires_grad = false);

  std::size_t size() const { return values.size(); }
  std::size_t rows() const { return shape.empty() ? 0 : shape[0]; }
  std::size_t cols() const { return shape.size() < 2 ? 1 : shape[1]; }

  double& at(std::size_t r, std::size_t c) { return values[r * cols() + c]; }
  double at(std::size_t r, std::size_t c) const { return values[r * cols() + c]; }

  /// Allocates (if needed) and clears the gradient.
  void zero_grad();
};

class Tape;

/// Handle to a node recorded on a tape. Only valid while the tape lives.
class Var {
 public:
  Var() = default;

  const std::vector<double>& value() const;
  const Shape& shape() const;
  std::size_t size() const { return value().size(); }
  double scalar() const;
  /// Gradient accumulated by the last backward pass (zeros if unreached).
  std::vector<double> grad() const;

  std::size_t id() const { return id_; }
  Tape* tape() const { return tape_; }

 private:
  friend class Tape;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

enum class Op : std::uint8_t {
  Leaf,
  Constant,
  Linear,
  Softmax,
  Sigmoid,
  Tanh,
  Bce,
  Nll,
  MeanPool,
  GatherRows,
  Add,
  Mul,
  Concat,
  Scale,
  ScaleConst,
  AddConst,
  Pick,
  Sum,
  Cosine,
};

const char* op_name(Op op);

/// Lower clamp applied to probabilities before taking logarithms.
inline constexpr double kProbEpsilon = 1e-12;

/// Ordered record of primitive applications. Nodes are appended in
/// evaluation order, so inputs always precede their consumers.
class Tape {
 public:
  struct Node {
    Op op = Op::Constant;
    std::size_t in[3] = {0, 0, 0};
    std::uint8_t n_in = 0;
    Shape shape;
    std::vector<double> value;
    std::vector<double> grad;
    std::vector<std::int32_t> indices;
    double constant = 0.0;
    Tensor* param = nullptr;
  };

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;
  Tape(Tape&&) = delete;
  Tape& operator=(Tape&&) = delete;

  /// Binds a parameter tensor. Binding the same tensor twice returns the
  /// same node. Gradients are accumulated into `param.grad` by backward()
  /// when `param.requires_grad` is set.
  Var leaf(Tensor& param);
  Var constant(std::vector<double> values);
  Var constant(Shape shape, std::vector<double> values);

  /// W[m×n]·x[n] + b[m]
  Var linear(Var W, Var b, Var x);
  Var softmax(Var v);
  Var sigmoid(Var s);
  Var tanh(Var v);
  /// Binary cross-entropy −t·ln p − (1−t)·ln(1−p) with p clamped to [ε, 1−ε].
  Var bce(double target, Var p);
  /// −ln p[index] with p[index] clamped to ε.
  Var nll(Var p, std::size_t index);
  /// Columnwise mean of a [t×d] matrix.
  Var mean_pool(Var rows);
  /// Selects rows of a [V×d] table; result is [t×d].
  Var gather_rows(Var table, std::span<const std::int32_t> ids);
  Var add(Var a, Var b);
  Var mul(Var a, Var b);
  Var concat(Var a, Var b);
  /// Vector times a scalar node.
  Var scale(Var v, Var s);
  Var scale(Var v, double c);
  Var add_constant(Var v, double c);
  Var pick(Var v, std::size_t index);
  Var sum(Var v);
  Var cosine(Var a, Var b);

  /// Reverse sweep from a scalar node. Parameters bound with leaf() that
  /// are not reachable from `loss` still get a (zero) gradient buffer.
  void backward(Var loss);

  std::size_t size() const { return nodes_.size(); }
  const Node& node(std::size_t id) const { return nodes_.at(id); }

 private:
  friend class Var;

  Var push(Node node);
  const Node& checked(Var v, const char* op) const;

  std::vector<Node> nodes_;
  std::unordered_map<const Tensor*, std::size_t> bound_;
};

/// Maximum relative error |a − fd| / (|a| + 1e-8) between the tape gradient
/// of `f` and central finite differences at `point`.
///
/// Non-smooth functions (|x| at 0, argmax switches) are not meaningful here.
double grad_check(const std::function<Var(Tape&, Var)>& f, std::span<const double> point,
                  double h = 1e-5);

/// Same check over every element of every tensor in `params`. `loss` must
/// bind the tensors through Tape::leaf().
double grad_check(std::span<Tensor* const> params, const std::function<Var(Tape&)>& loss,
                  double h = 1e-5);

// ---------------------------------------------------------------------------
// Optimiser

struct AdamWConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.01;
};

/// Adaptive moments with decoupled weight decay.
struct OptimizerState {
  AdamWConfig config;
  std::int64_t t = 0;
  std::vector<std::vector<double>> m;
  std::vector<std::vector<double>> v;

  OptimizerState() = default;
  explicit OptimizerState(AdamWConfig cfg) : config(cfg) {}
};

/// One bias-corrected AdamW update using each tensor's `grad` (an empty
/// gradient counts as zero). Rejects the whole step if any gradient is
/// non-finite; parameters are untouched in that case.
void adamw_step(std::span<Tensor* const> params, OptimizerState& state);

}  // namespace mixsp::diff
