#include "mixsp/diffkit.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "mixsp/errors.hpp"

namespace mixsp::diff {

std::size_t shape_size(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

std::string shape_str(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? "x" : "") << shape[i];
  os << ']';
  return os.str();
}

Tensor::Tensor(Shape s, std::vector<double> v, bool rg)
    : shape(std::move(s)), values(std::move(v)), requires_grad(rg) {
  if (shape_size(shape) != values.size())
    throw DimensionError("tensor shape " + shape_str(shape) + " does not match " +
                         std::to_string(values.size()) + " values");
}

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
  const std::size_t n = shape_size(shape);
  return Tensor(std::move(shape), std::vector<double>(n, 0.0), requires_grad);
}

Tensor Tensor::vector(std::vector<double> values, bool requires_grad) {
  Shape s{values.size()};
  return Tensor(std::move(s), std::move(values), requires_grad);
}

void Tensor::zero_grad() { grad.assign(values.size(), 0.0); }

// ---------------------------------------------------------------------------

const std::vector<double>& Var::value() const { return tape_->nodes_.at(id_).value; }
const Shape& Var::shape() const { return tape_->nodes_.at(id_).shape; }

double Var::scalar() const {
  const auto& v = value();
  if (v.size() != 1) throw DimensionError("scalar() on node of shape " + shape_str(shape()));
  return v[0];
}

std::vector<double> Var::grad() const {
  const auto& n = tape_->nodes_.at(id_);
  if (n.grad.empty()) return std::vector<double>(n.value.size(), 0.0);
  return n.grad;
}

const char* op_name(Op op) {
  switch (op) {
    case Op::Leaf: return "leaf";
    case Op::Constant: return "constant";
    case Op::Linear: return "linear";
    case Op::Softmax: return "softmax";
    case Op::Sigmoid: return "sigmoid";
    case Op::Tanh: return "tanh";
    case Op::Bce: return "bce";
    case Op::Nll: return "nll";
    case Op::MeanPool: return "mean_pool";
    case Op::GatherRows: return "gather_rows";
    case Op::Add: return "add";
    case Op::Mul: return "mul";
    case Op::Concat: return "concat";
    case Op::Scale: return "scale";
    case Op::ScaleConst: return "scale_const";
    case Op::AddConst: return "add_constant";
    case Op::Pick: return "pick";
    case Op::Sum: return "sum";
    case Op::Cosine: return "cosine";
  }
  return "?";
}

// ---------------------------------------------------------------------------

namespace {

double clamp_prob(double p) { return std::clamp(p, kProbEpsilon, 1.0 - kProbEpsilon); }

double stable_sigmoid(double s) {
  if (s >= 0) return 1.0 / (1.0 + std::exp(-s));
  const double e = std::exp(s);
  return e / (1.0 + e);
}

double norm2(const std::vector<double>& v) {
  double s = 0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

}  // namespace

Var Tape::push(Node node) {
  nodes_.push_back(std::move(node));
  return Var(this, nodes_.size() - 1);
}

const Tape::Node& Tape::checked(Var v, const char* op) const {
  if (v.tape_ != this || v.id_ >= nodes_.size())
    throw Error(std::string(op) + ": operand does not belong to this tape");
  return nodes_[v.id_];
}

Var Tape::leaf(Tensor& param) {
  if (auto it = bound_.find(&param); it != bound_.end()) return Var(this, it->second);
  Node n;
  n.op = Op::Leaf;
  n.shape = param.shape;
  n.value = param.values;
  n.param = &param;
  Var v = push(std::move(n));
  bound_.emplace(&param, v.id_);
  return v;
}

Var Tape::constant(std::vector<double> values) {
  Shape s{values.size()};
  return constant(std::move(s), std::move(values));
}

Var Tape::constant(Shape shape, std::vector<double> values) {
  if (shape_size(shape) != values.size())
    throw DimensionError("constant: shape " + shape_str(shape) + " vs " +
                         std::to_string(values.size()) + " values");
  Node n;
  n.op = Op::Constant;
  n.shape = std::move(shape);
  n.value = std::move(values);
  return push(std::move(n));
}

Var Tape::linear(Var W, Var b, Var x) {
  const Node& w = checked(W, "linear");
  const Node& bn = checked(b, "linear");
  const Node& xn = checked(x, "linear");
  if (w.shape.size() != 2 || bn.value.size() != w.shape[0] || xn.value.size() != w.shape[1])
    throw DimensionError("linear: W" + shape_str(w.shape) + ", b" + shape_str(bn.shape) +
                         ", x" + shape_str(xn.shape) + " do not conform");
  const std::size_t m = w.shape[0], k = w.shape[1];
  Node n;
  n.op = Op::Linear;
  n.in[0] = W.id_;
  n.in[1] = b.id_;
  n.in[2] = x.id_;
  n.n_in = 3;
  n.shape = {m};
  n.value.resize(m);
  for (std::size_t i = 0; i < m; ++i) {
    double acc = bn.value[i];
    for (std::size_t j = 0; j < k; ++j) acc += w.value[i * k + j] * xn.value[j];
    n.value[i] = acc;
  }
  return push(std::move(n));
}

Var Tape::softmax(Var v) {
  const Node& in = checked(v, "softmax");
  if (in.value.size() < 1) throw DimensionError("softmax: empty input");
  Node n;
  n.op = Op::Softmax;
  n.in[0] = v.id_;
  n.n_in = 1;
  n.shape = in.shape;
  const double mx = *std::max_element(in.value.begin(), in.value.end());
  n.value.resize(in.value.size());
  double z = 0;
  for (std::size_t i = 0; i < in.value.size(); ++i) {
    n.value[i] = std::exp(in.value[i] - mx);
    z += n.value[i];
  }
  for (double& p : n.value) p /= z;
  return push(std::move(n));
}

Var Tape::sigmoid(Var s) {
  const Node& in = checked(s, "sigmoid");
  Node n;
  n.op = Op::Sigmoid;
  n.in[0] = s.id_;
  n.n_in = 1;
  n.shape = in.shape;
  n.value.resize(in.value.size());
  for (std::size_t i = 0; i < in.value.size(); ++i) n.value[i] = stable_sigmoid(in.value[i]);
  return push(std::move(n));
}

Var Tape::tanh(Var v) {
  const Node& in = checked(v, "tanh");
  Node n;
  n.op = Op::Tanh;
  n.in[0] = v.id_;
  n.n_in = 1;
  n.shape = in.shape;
  n.value.resize(in.value.size());
  for (std::size_t i = 0; i < in.value.size(); ++i) n.value[i] = std::tanh(in.value[i]);
  return push(std::move(n));
}

Var Tape::bce(double target, Var p) {
  const Node& in = checked(p, "bce");
  if (!(target >= 0.0 && target <= 1.0))
    throw DomainError("bce: target " + std::to_string(target) + " outside [0, 1]");
  if (in.value.size() != 1) throw DimensionError("bce: probability must be scalar, got " +
                                                 shape_str(in.shape));
  const double pc = clamp_prob(in.value[0]);
  Node n;
  n.op = Op::Bce;
  n.in[0] = p.id_;
  n.n_in = 1;
  n.shape = {1};
  n.constant = target;
  n.value = {-target * std::log(pc) - (1.0 - target) * std::log(1.0 - pc)};
  return push(std::move(n));
}

Var Tape::nll(Var p, std::size_t index) {
  const Node& in = checked(p, "nll");
  if (index >= in.value.size())
    throw DimensionError("nll: index " + std::to_string(index) + " out of range for " +
                         shape_str(in.shape));
  Node n;
  n.op = Op::Nll;
  n.in[0] = p.id_;
  n.n_in = 1;
  n.shape = {1};
  n.indices = {static_cast<std::int32_t>(index)};
  n.value = {-std::log(std::max(in.value[index], kProbEpsilon))};
  return push(std::move(n));
}

Var Tape::mean_pool(Var rows) {
  const Node& in = checked(rows, "mean_pool");
  if (in.shape.size() != 2) throw DimensionError("mean_pool: expected a matrix, got " +
                                                 shape_str(in.shape));
  const std::size_t t = in.shape[0], d = in.shape[1];
  if (t == 0) throw DomainError("mean_pool: empty sequence");
  Node n;
  n.op = Op::MeanPool;
  n.in[0] = rows.id_;
  n.n_in = 1;
  n.shape = {d};
  n.value.assign(d, 0.0);
  for (std::size_t r = 0; r < t; ++r)
    for (std::size_t c = 0; c < d; ++c) n.value[c] += in.value[r * d + c];
  for (double& x : n.value) x /= static_cast<double>(t);
  return push(std::move(n));
}

Var Tape::gather_rows(Var table, std::span<const std::int32_t> ids) {
  const Node& in = checked(table, "gather_rows");
  if (in.shape.size() != 2) throw DimensionError("gather_rows: table must be a matrix");
  const std::size_t V = in.shape[0], d = in.shape[1];
  Node n;
  n.op = Op::GatherRows;
  n.in[0] = table.id_;
  n.n_in = 1;
  n.shape = {ids.size(), d};
  n.indices.assign(ids.begin(), ids.end());
  n.value.resize(ids.size() * d);
  for (std::size_t r = 0; r < ids.size(); ++r) {
    if (ids[r] < 0 || static_cast<std::size_t>(ids[r]) >= V)
      throw DimensionError("gather_rows: token id " + std::to_string(ids[r]) +
                           " outside vocabulary of size " + std::to_string(V));
    std::copy_n(in.value.begin() + static_cast<std::ptrdiff_t>(ids[r] * d), d,
                n.value.begin() + static_cast<std::ptrdiff_t>(r * d));
  }
  return push(std::move(n));
}

Var Tape::add(Var a, Var b) {
  const Node& x = checked(a, "add");
  const Node& y = checked(b, "add");
  if (x.value.size() != y.value.size())
    throw DimensionError("add: " + shape_str(x.shape) + " vs " + shape_str(y.shape));
  Node n;
  n.op = Op::Add;
  n.in[0] = a.id_;
  n.in[1] = b.id_;
  n.n_in = 2;
  n.shape = x.shape;
  n.value.resize(x.value.size());
  for (std::size_t i = 0; i < x.value.size(); ++i) n.value[i] = x.value[i] + y.value[i];
  return push(std::move(n));
}

Var Tape::mul(Var a, Var b) {
  const Node& x = checked(a, "mul");
  const Node& y = checked(b, "mul");
  if (x.value.size() != y.value.size())
    throw DimensionError("mul: " + shape_str(x.shape) + " vs " + shape_str(y.shape));
  Node n;
  n.op = Op::Mul;
  n.in[0] = a.id_;
  n.in[1] = b.id_;
  n.n_in = 2;
  n.shape = x.shape;
  n.value.resize(x.value.size());
  for (std::size_t i = 0; i < x.value.size(); ++i) n.value[i] = x.value[i] * y.value[i];
  return push(std::move(n));
}

Var Tape::concat(Var a, Var b) {
  const Node& x = checked(a, "concat");
  const Node& y = checked(b, "concat");
  if (x.shape.size() != 1 || y.shape.size() != 1)
    throw DimensionError("concat: vectors required, got " + shape_str(x.shape) + " and " +
                         shape_str(y.shape));
  Node n;
  n.op = Op::Concat;
  n.in[0] = a.id_;
  n.in[1] = b.id_;
  n.n_in = 2;
  n.shape = {x.value.size() + y.value.size()};
  n.value = x.value;
  n.value.insert(n.value.end(), y.value.begin(), y.value.end());
  return push(std::move(n));
}

Var Tape::scale(Var v, Var s) {
  const Node& x = checked(v, "scale");
  const Node& c = checked(s, "scale");
  if (c.value.size() != 1) throw DimensionError("scale: factor must be scalar, got " +
                                                shape_str(c.shape));
  Node n;
  n.op = Op::Scale;
  n.in[0] = v.id_;
  n.in[1] = s.id_;
  n.n_in = 2;
  n.shape = x.shape;
  n.value.resize(x.value.size());
  for (std::size_t i = 0; i < x.value.size(); ++i) n.value[i] = x.value[i] * c.value[0];
  return push(std::move(n));
}

Var Tape::scale(Var v, double c) {
  const Node& x = checked(v, "scale");
  Node n;
  n.op = Op::ScaleConst;
  n.in[0] = v.id_;
  n.n_in = 1;
  n.shape = x.shape;
  n.constant = c;
  n.value.resize(x.value.size());
  for (std::size_t i = 0; i < x.value.size(); ++i) n.value[i] = x.value[i] * c;
  return push(std::move(n));
}

Var Tape::add_constant(Var v, double c) {
  const Node& x = checked(v, "add_constant");
  Node n;
  n.op = Op::AddConst;
  n.in[0] = v.id_;
  n.n_in = 1;
  n.shape = x.shape;
  n.constant = c;
  n.value.resize(x.value.size());
  for (std::size_t i = 0; i < x.value.size(); ++i) n.value[i] = x.value[i] + c;
  return push(std::move(n));
}

Var Tape::pick(Var v, std::size_t index) {
  const Node& x = checked(v, "pick");
  if (index >= x.value.size())
    throw DimensionError("pick: index " + std::to_string(index) + " out of range for " +
                         shape_str(x.shape));
  Node n;
  n.op = Op::Pick;
  n.in[0] = v.id_;
  n.n_in = 1;
  n.shape = {1};
  n.indices = {static_cast<std::int32_t>(index)};
  n.value = {x.value[index]};
  return push(std::move(n));
}

Var Tape::sum(Var v) {
  const Node& x = checked(v, "sum");
  Node n;
  n.op = Op::Sum;
  n.in[0] = v.id_;
  n.n_in = 1;
  n.shape = {1};
  n.value = {std::accumulate(x.value.begin(), x.value.end(), 0.0)};
  return push(std::move(n));
}

Var Tape::cosine(Var a, Var b) {
  const Node& x = checked(a, "cosine");
  const Node& y = checked(b, "cosine");
  if (x.value.size() != y.value.size())
    throw DimensionError("cosine: " + shape_str(x.shape) + " vs " + shape_str(y.shape));
  const double nx = norm2(x.value), ny = norm2(y.value);
  if (nx == 0.0 || ny == 0.0) throw DomainError("cosine: degenerate (zero-norm) vector");
  double dot = 0;
  for (std::size_t i = 0; i < x.value.size(); ++i) dot += x.value[i] * y.value[i];
  Node n;
  n.op = Op::Cosine;
  n.in[0] = a.id_;
  n.in[1] = b.id_;
  n.n_in = 2;
  n.shape = {1};
  n.value = {dot / (nx * ny)};
  return push(std::move(n));
}

// ---------------------------------------------------------------------------

void Tape::backward(Var loss) {
  const Node& root = checked(loss, "backward");
  if (root.value.size() != 1)
    throw Error("backward: loss must be a scalar, got shape " + shape_str(root.shape));

  for (auto& n : nodes_) n.grad.clear();
  nodes_[loss.id_].grad = {1.0};

  auto acc = [this](std::size_t id) -> std::vector<double>& {
    Node& n = nodes_[id];
    if (n.grad.empty()) n.grad.assign(n.value.size(), 0.0);
    return n.grad;
  };

  for (std::size_t id = loss.id_ + 1; id-- > 0;) {
    Node& n = nodes_[id];
    if (n.grad.empty()) continue;
    const std::vector<double>& g = n.grad;

    switch (n.op) {
      case Op::Leaf:
      case Op::Constant:
        break;

      case Op::Linear: {
        const Node& w = nodes_[n.in[0]];
        const Node& x = nodes_[n.in[2]];
        const std::size_t m = w.shape[0], k = w.shape[1];
        auto& gw = acc(n.in[0]);
        auto& gb = acc(n.in[1]);
        auto& gx = acc(n.in[2]);
        for (std::size_t i = 0; i < m; ++i) {
          gb[i] += g[i];
          for (std::size_t j = 0; j < k; ++j) {
            gw[i * k + j] += g[i] * x.value[j];
            gx[j] += g[i] * w.value[i * k + j];
          }
        }
        break;
      }

      case Op::Softmax: {
        double dot = 0;
        for (std::size_t i = 0; i < g.size(); ++i) dot += g[i] * n.value[i];
        auto& gi = acc(n.in[0]);
        for (std::size_t i = 0; i < g.size(); ++i) gi[i] += n.value[i] * (g[i] - dot);
        break;
      }

      case Op::Sigmoid: {
        auto& gi = acc(n.in[0]);
        for (std::size_t i = 0; i < g.size(); ++i)
          gi[i] += g[i] * n.value[i] * (1.0 - n.value[i]);
        break;
      }

      case Op::Tanh: {
        auto& gi = acc(n.in[0]);
        for (std::size_t i = 0; i < g.size(); ++i)
          gi[i] += g[i] * (1.0 - n.value[i] * n.value[i]);
        break;
      }

      case Op::Bce: {
        const double p = nodes_[n.in[0]].value[0];
        const double t = n.constant;
        auto& gi = acc(n.in[0]);
        // The clamp is flat outside [ε, 1−ε].
        if (p > kProbEpsilon && p < 1.0 - kProbEpsilon)
          gi[0] += g[0] * (-t / p + (1.0 - t) / (1.0 - p));
        break;
      }

      case Op::Nll: {
        const auto idx = static_cast<std::size_t>(n.indices[0]);
        const double p = nodes_[n.in[0]].value[idx];
        auto& gi = acc(n.in[0]);
        if (p > kProbEpsilon) gi[idx] += -g[0] / p;
        break;
      }

      case Op::MeanPool: {
        const Node& in = nodes_[n.in[0]];
        const std::size_t t = in.shape[0], d = in.shape[1];
        auto& gi = acc(n.in[0]);
        const double inv = 1.0 / static_cast<double>(t);
        for (std::size_t r = 0; r < t; ++r)
          for (std::size_t c = 0; c < d; ++c) gi[r * d + c] += g[c] * inv;
        break;
      }

      case Op::GatherRows: {
        const std::size_t d = n.shape[1];
        auto& gi = acc(n.in[0]);
        for (std::size_t r = 0; r < n.indices.size(); ++r) {
          const auto row = static_cast<std::size_t>(n.indices[r]);
          for (std::size_t c = 0; c < d; ++c) gi[row * d + c] += g[r * d + c];
        }
        break;
      }

      case Op::Add: {
        {
          auto& ga = acc(n.in[0]);
          for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
        }
        auto& gb = acc(n.in[1]);
        for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i];
        break;
      }

      case Op::Mul: {
        // Copies guard against a == b aliasing the same accumulator.
        const std::vector<double> a = nodes_[n.in[0]].value;
        const std::vector<double> b = nodes_[n.in[1]].value;
        {
          auto& ga = acc(n.in[0]);
          for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * b[i];
        }
        auto& gb = acc(n.in[1]);
        for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * a[i];
        break;
      }

      case Op::Concat: {
        const std::size_t na = nodes_[n.in[0]].value.size();
        {
          auto& ga = acc(n.in[0]);
          for (std::size_t i = 0; i < na; ++i) ga[i] += g[i];
        }
        auto& gb = acc(n.in[1]);
        for (std::size_t i = na; i < g.size(); ++i) gb[i - na] += g[i];
        break;
      }

      case Op::Scale: {
        const std::vector<double> v = nodes_[n.in[0]].value;
        const double s = nodes_[n.in[1]].value[0];
        double gs = 0;
        {
          auto& gv = acc(n.in[0]);
          for (std::size_t i = 0; i < g.size(); ++i) {
            gv[i] += g[i] * s;
            gs += g[i] * v[i];
          }
        }
        acc(n.in[1])[0] += gs;
        break;
      }

      case Op::ScaleConst: {
        auto& gi = acc(n.in[0]);
        for (std::size_t i = 0; i < g.size(); ++i) gi[i] += g[i] * n.constant;
        break;
      }

      case Op::AddConst: {
        auto& gi = acc(n.in[0]);
        for (std::size_t i = 0; i < g.size(); ++i) gi[i] += g[i];
        break;
      }

      case Op::Pick: {
        acc(n.in[0])[static_cast<std::size_t>(n.indices[0])] += g[0];
        break;
      }

      case Op::Sum: {
        auto& gi = acc(n.in[0]);
        for (double& x : gi) x += g[0];
        break;
      }

      case Op::Cosine: {
        const std::vector<double> a = nodes_[n.in[0]].value;
        const std::vector<double> b = nodes_[n.in[1]].value;
        const double na = norm2(a), nb = norm2(b), c = n.value[0];
        {
          auto& ga = acc(n.in[0]);
          for (std::size_t i = 0; i < a.size(); ++i)
            ga[i] += g[0] * (b[i] / (na * nb) - c * a[i] / (na * na));
        }
        auto& gb = acc(n.in[1]);
        for (std::size_t i = 0; i < b.size(); ++i)
          gb[i] += g[0] * (a[i] / (na * nb) - c * b[i] / (nb * nb));
        break;
      }
    }
  }

  for (auto& n : nodes_) {
    if (n.op != Op::Leaf || n.param == nullptr || !n.param->requires_grad) continue;
    Tensor& p = *n.param;
    if (p.grad.size() != p.values.size()) p.grad.assign(p.values.size(), 0.0);
    if (n.grad.empty()) continue;
    for (std::size_t i = 0; i < n.grad.size(); ++i) p.grad[i] += n.grad[i];
  }
}

// ---------------------------------------------------------------------------

double grad_check(const std::function<Var(Tape&, Var)>& f, std::span<const double> point,
                  double h) {
  std::vector<double> analytic;
  {
    Tape tape;
    Var x = tape.constant(std::vector<double>(point.begin(), point.end()));
    tape.backward(f(tape, x));
    analytic = x.grad();
  }
  auto eval = [&](const std::vector<double>& at) {
    Tape tape;
    return f(tape, tape.constant(at)).scalar();
  };
  double worst = 0;
  std::vector<double> probe(point.begin(), point.end());
  for (std::size_t i = 0; i < probe.size(); ++i) {
    const double x0 = probe[i];
    probe[i] = x0 + h;
    const double fp = eval(probe);
    probe[i] = x0 - h;
    const double fm = eval(probe);
    probe[i] = x0;
    const double fd = (fp - fm) / (2 * h);
    worst = std::max(worst, std::abs(analytic[i] - fd) / (std::abs(analytic[i]) + 1e-8));
  }
  return worst;
}

double grad_check(std::span<Tensor* const> params, const std::function<Var(Tape&)>& loss,
                  double h) {
  std::vector<bool> saved_flags;
  for (Tensor* p : params) {
    saved_flags.push_back(p->requires_grad);
    p->requires_grad = true;
    p->zero_grad();
  }
  {
    Tape tape;
    tape.backward(loss(tape));
  }
  auto eval = [&] {
    Tape tape;
    return loss(tape).scalar();
  };
  double worst = 0;
  for (Tensor* p : params) {
    for (std::size_t i = 0; i < p->values.size(); ++i) {
      const double x0 = p->values[i];
      p->values[i] = x0 + h;
      const double fp = eval();
      p->values[i] = x0 - h;
      const double fm = eval();
      p->values[i] = x0;
      const double fd = (fp - fm) / (2 * h);
      const double a = p->grad[i];
      worst = std::max(worst, std::abs(a - fd) / (std::abs(a) + 1e-8));
    }
  }
  for (std::size_t i = 0; i < params.size(); ++i) params[i]->requires_grad = saved_flags[i];
  return worst;
}

// ---------------------------------------------------------------------------

void adamw_step(std::span<Tensor* const> params, OptimizerState& state) {
  const AdamWConfig& c = state.config;
  if (!(c.lr > 0)) throw ConfigError("adamw: learning rate must be positive");
  if (!(c.beta1 >= 0 && c.beta1 < 1 && c.beta2 >= 0 && c.beta2 < 1))
    throw ConfigError("adamw: betas must lie in [0, 1)");

  if (state.m.empty() && state.t == 0) {
    for (Tensor* p : params) {
      state.m.emplace_back(p->values.size(), 0.0);
      state.v.emplace_back(p->values.size(), 0.0);
    }
  }
  if (state.m.size() != params.size())
    throw DimensionError("adamw: optimizer state tracks " + std::to_string(state.m.size()) +
                         " tensors, got " + std::to_string(params.size()));
  for (std::size_t k = 0; k < params.size(); ++k) {
    const Tensor& p = *params[k];
    if (state.m[k].size() != p.values.size() || state.v[k].size() != p.values.size())
      throw DimensionError("adamw: moment shape mismatch for tensor " + std::to_string(k) +
                           " " + shape_str(p.shape));
    if (!p.grad.empty() && p.grad.size() != p.values.size())
      throw DimensionError("adamw: gradient shape mismatch for tensor " + std::to_string(k));
    for (double g : p.grad)
      if (!std::isfinite(g)) throw NumericError("adamw: non-finite gradient, step rejected");
  }

  state.t += 1;
  const double bc1 = 1.0 - std::pow(c.beta1, static_cast<double>(state.t));
  const double bc2 = 1.0 - std::pow(c.beta2, static_cast<double>(state.t));
  for (std::size_t k = 0; k < params.size(); ++k) {
    Tensor& p = *params[k];
    auto& m = state.m[k];
    auto& v = state.v[k];
    for (std::size_t i = 0; i < p.values.size(); ++i) {
      const double g = p.grad.empty() ? 0.0 : p.grad[i];
      p.values[i] -= c.lr * c.weight_decay * p.values[i];
      m[i] = c.beta1 * m[i] + (1.0 - c.beta1) * g;
      v[i] = c.beta2 * v[i] + (1.0 - c.beta2) * g * g;
      const double mhat = m[i] / bc1;
      const double vhat = v[i] / bc2;
      p.values[i] -= c.lr * mhat / (std::sqrt(vhat) + c.eps);
    }
  }
}

}  // namespace mixsp::diff
