#include "deephedge/autodiff.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <limits>

#include "deephedge/errors.hpp"

namespace deephedge::ad {

std::string_view op_name(Op op) {
  switch (op) {
    case Op::constant: return "constant";
    case Op::parameter: return "parameter";
    case Op::add: return "add";
    case Op::sub: return "sub";
    case Op::mul: return "mul";
    case Op::div: return "div";
    case Op::add_scalar: return "add_scalar";
    case Op::scale: return "scale";
    case Op::exp: return "exp";
    case Op::log: return "log";
    case Op::expm1: return "expm1";
    case Op::log1p: return "log1p";
    case Op::pow_const: return "pow_const";
    case Op::pos_part: return "pos_part";
    case Op::neg_part: return "neg_part";
    case Op::sqrt: return "sqrt";
    case Op::tanh: return "tanh";
    case Op::greater_than: return "greater_than";
    case Op::affine: return "affine";
    case Op::concat_rows: return "concat_rows";
    case Op::mean: return "mean";
    case Op::sum: return "sum";
  }
  return "?";
}

bool all_finite(const Matrix& m) { return m.allFinite(); }

const Matrix& Var::value() const { return tape_->value(id_); }

Gradients::Gradients(std::vector<Matrix> adjoints, const Tape& tape)
    : adjoints_(std::move(adjoints)), tape_(&tape) {}

Matrix Gradients::wrt(Var var) const {
  const auto& adj = adjoints_[static_cast<std::size_t>(var.id())];
  if (adj.size() == 0) {
    const auto& v = tape_->value(var.id());
    return Matrix::Zero(v.rows(), v.cols());
  }
  return adj;
}

Var Tape::constant(Matrix value) {
  nodes_.push_back(Node{Op::constant, 0.0, {}, std::move(value), false});
  return Var(this, static_cast<int>(nodes_.size()) - 1);
}

Var Tape::constant(double value, Eigen::Index rows, Eigen::Index cols) {
  return constant(Matrix::Constant(rows, cols, value));
}

Var Tape::parameter(Matrix value) {
  nodes_.push_back(Node{Op::parameter, 0.0, {}, std::move(value), true});
  return Var(this, static_cast<int>(nodes_.size()) - 1);
}

Var Tape::record(Op op, std::initializer_list<Var> inputs, double k) {
  return record(op, std::span<const Var>(inputs.begin(), inputs.size()), k);
}

Var Tape::record(Op op, std::span<const Var> inputs, double k) {
  for (const auto& in : inputs) {
    if (in.tape() != this) throw ContractViolation("tape: input recorded on another tape");
  }
  Matrix out = forward(op, inputs, k);
  std::vector<int> ids;
  ids.reserve(inputs.size());
  bool is_active = false;
  for (const auto& in : inputs) {
    ids.push_back(in.id());
    is_active = is_active || active(in.id());
  }
  if (op == Op::greater_than) is_active = false;
  nodes_.push_back(Node{op, k, std::move(ids), std::move(out), is_active});
  return Var(this, static_cast<int>(nodes_.size()) - 1);
}

namespace {

void require_arity(Op op, std::size_t got, std::size_t want) {
  if (got != want) {
    throw ContractViolation(fmt::format("tape: {} takes {} inputs, got {}", op_name(op), want, got));
  }
}

void require_same_shape(Op op, const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw ContractViolation(fmt::format("tape: {} shape mismatch {}x{} vs {}x{}", op_name(op),
                                        a.rows(), a.cols(), b.rows(), b.cols()));
  }
}

// adj += delta, allocating on first touch.
template <class Expr>
void accumulate(Matrix& adj, const Expr& delta) {
  if (adj.size() == 0) {
    adj = delta;
  } else {
    adj += delta;
  }
}

}  // namespace

Matrix Tape::forward(Op op, std::span<const Var> in, double k) const {
  auto v = [&](std::size_t i) -> const Matrix& { return value(in[i].id()); };
  switch (op) {
    case Op::constant:
    case Op::parameter:
      throw ContractViolation("tape: leaves are created with constant()/parameter()");
    case Op::add:
    case Op::sub:
    case Op::mul:
    case Op::div: {
      require_arity(op, in.size(), 2);
      require_same_shape(op, v(0), v(1));
      if (op == Op::add) return v(0) + v(1);
      if (op == Op::sub) return v(0) - v(1);
      if (op == Op::mul) return v(0).cwiseProduct(v(1));
      return v(0).cwiseQuotient(v(1));
    }
    case Op::affine: {
      require_arity(op, in.size(), 3);
      const Matrix& w = v(0);
      const Matrix& x = v(1);
      const Matrix& b = v(2);
      if (w.cols() != x.rows() || b.rows() != w.rows() || b.cols() != 1) {
        throw ContractViolation("tape: affine shape mismatch");
      }
      Matrix out = w * x;
      out.colwise() += b.col(0);
      return out;
    }
    case Op::concat_rows: {
      if (in.empty()) throw ContractViolation("tape: concat_rows needs inputs");
      Eigen::Index rows = 0;
      const Eigen::Index cols = v(0).cols();
      for (std::size_t i = 0; i < in.size(); ++i) {
        if (v(i).cols() != cols) throw ContractViolation("tape: concat_rows column mismatch");
        rows += v(i).rows();
      }
      Matrix out(rows, cols);
      Eigen::Index r = 0;
      for (std::size_t i = 0; i < in.size(); ++i) {
        out.middleRows(r, v(i).rows()) = v(i);
        r += v(i).rows();
      }
      return out;
    }
    default:
      break;
  }

  require_arity(op, in.size(), 1);
  const auto a = v(0).array();
  switch (op) {
    case Op::add_scalar: return (a + k).matrix();
    case Op::scale: return (k * a).matrix();
    case Op::exp: return a.exp().matrix();
    case Op::log: return a.log().matrix();
    case Op::expm1: return a.unaryExpr([](double x) { return std::expm1(x); }).matrix();
    case Op::log1p: return a.unaryExpr([](double x) { return std::log1p(x); }).matrix();
    case Op::pow_const:
      if (k == 1.0) return v(0);
      if (k == 2.0) return a.square().matrix();
      return a.pow(k).matrix();
    case Op::pos_part: return a.max(0.0).matrix();
    case Op::neg_part: return (-a).max(0.0).matrix();
    case Op::sqrt: return a.sqrt().matrix();
    case Op::tanh: return a.tanh().matrix();
    case Op::greater_than: return (a > k).cast<double>().matrix();
    case Op::mean: return Matrix::Constant(1, 1, v(0).mean());
    case Op::sum: return Matrix::Constant(1, 1, v(0).sum());
    default: break;
  }
  throw ContractViolation(fmt::format("tape: unhandled op {}", op_name(op)));
}

double Tape::kink_margin() const {
  double margin = std::numeric_limits<double>::infinity();
  for (const auto& node : nodes_) {
    if (node.op != Op::pos_part && node.op != Op::neg_part && node.op != Op::greater_than) continue;
    if (!active(node.inputs[0])) continue;
    const Matrix& in = nodes_[static_cast<std::size_t>(node.inputs[0])].value;
    const double shift = node.op == Op::greater_than ? node.k : 0.0;
    margin = std::min(margin, (in.array() - shift).abs().minCoeff());
  }
  return margin;
}

Gradients Tape::backward(Var loss) const {
  if (loss.tape() != this) throw ContractViolation("backward: loss belongs to another tape");
  const Matrix& loss_value = value(loss.id());
  if (loss_value.rows() != 1 || loss_value.cols() != 1) {
    throw ContractViolation("backward: loss must be 1 x 1");
  }
  if (!std::isfinite(loss_value(0, 0))) throw NumericalError("backward: loss is not finite");

  std::vector<Matrix> adj(nodes_.size());
  adj[static_cast<std::size_t>(loss.id())] = Matrix::Ones(1, 1);

  for (int id = loss.id(); id >= 0; --id) {
    const auto uid = static_cast<std::size_t>(id);
    if (adj[uid].size() == 0) continue;
    const Node& node = nodes_[uid];
    if (!node.active) continue;
    const Matrix& g = adj[uid];
    if (!g.allFinite()) {
      throw NumericalError(
          fmt::format("backward: non-finite adjoint at node {} ({})", id, op_name(node.op)));
    }
    auto in = [&](std::size_t i) { return static_cast<std::size_t>(node.inputs[i]); };
    auto x = [&](std::size_t i) -> const Matrix& { return nodes_[in(i)].value; };
    const Matrix& y = node.value;
    // Only parameter-dependent inputs need adjoints; unevaluated Eigen
    // expressions for the others are dropped without being computed.
    auto acc = [&](std::size_t i, const auto& delta) {
      if (nodes_[in(i)].active) accumulate(adj[in(i)], delta);
    };

    switch (node.op) {
      case Op::constant:
      case Op::parameter:
      case Op::greater_than:
        break;
      case Op::add:
        acc(0, g);
        acc(1, g);
        break;
      case Op::sub:
        acc(0, g);
        acc(1, -g);
        break;
      case Op::mul:
        acc(0, g.cwiseProduct(x(1)));
        acc(1, g.cwiseProduct(x(0)));
        break;
      case Op::div:
        acc(0, g.cwiseQuotient(x(1)));
        acc(1, (-g.array() * y.array() / x(1).array()).matrix());
        break;
      case Op::add_scalar:
        acc(0, g);
        break;
      case Op::scale:
        acc(0, node.k * g);
        break;
      case Op::exp:
        acc(0, g.cwiseProduct(y));
        break;
      case Op::log:
        acc(0, g.cwiseQuotient(x(0)));
        break;
      case Op::expm1:
        acc(0, (g.array() * (y.array() + 1.0)).matrix());
        break;
      case Op::log1p:
        acc(0, (g.array() / (x(0).array() + 1.0)).matrix());
        break;
      case Op::pow_const: {
        const double k = node.k;
        if (k == 1.0) {
          acc(0, g);
        } else if (k == 2.0) {
          acc(0, (2.0 * g.array() * x(0).array()).matrix());
        } else {
          acc(0, (k * g.array() * x(0).array().pow(k - 1.0)).matrix());
        }
        break;
      }
      case Op::pos_part:
        acc(0, (g.array() * (x(0).array() > 0.0).cast<double>()).matrix());
        break;
      case Op::neg_part:
        acc(0, (-g.array() * (x(0).array() < 0.0).cast<double>()).matrix());
        break;
      case Op::sqrt:
        acc(0, (0.5 * g.array() / y.array()).matrix());
        break;
      case Op::tanh:
        acc(0, (g.array() * (1.0 - y.array().square())).matrix());
        break;
      case Op::affine: {
        const Matrix& w = x(0);
        const Matrix& input = x(1);
        acc(0, g * input.transpose());
        acc(1, w.transpose() * g);
        acc(2, g.rowwise().sum());
        break;
      }
      case Op::concat_rows: {
        Eigen::Index r = 0;
        for (std::size_t i = 0; i < node.inputs.size(); ++i) {
          const Eigen::Index rows = x(i).rows();
          acc(i, g.middleRows(r, rows));
          r += rows;
        }
        break;
      }
      case Op::mean: {
        const Matrix& a = x(0);
        accumulate(adj[in(0)],
                   Matrix::Constant(a.rows(), a.cols(), g(0, 0) / static_cast<double>(a.size())));
        break;
      }
      case Op::sum: {
        const Matrix& a = x(0);
        acc(0, Matrix::Constant(a.rows(), a.cols(), g(0, 0)));
        break;
      }
    }
  }
  return Gradients(std::move(adj), *this);
}

Var operator+(Var a, Var b) { return a.tape()->record(Op::add, {a, b}); }
Var operator-(Var a, Var b) { return a.tape()->record(Op::sub, {a, b}); }
Var operator*(Var a, Var b) { return a.tape()->record(Op::mul, {a, b}); }
Var operator/(Var a, Var b) { return a.tape()->record(Op::div, {a, b}); }
Var operator+(Var a, double k) { return a.tape()->record(Op::add_scalar, {a}, k); }
Var operator+(double k, Var a) { return a + k; }
Var operator-(Var a, double k) { return a + (-k); }
Var operator-(double k, Var a) { return (-a) + k; }
Var operator*(Var a, double k) { return a.tape()->record(Op::scale, {a}, k); }
Var operator*(double k, Var a) { return a * k; }
Var operator/(Var a, double k) { return a * (1.0 / k); }
Var operator/(double k, Var a) { return constant_like(a, k) / a; }
Var operator-(Var a) { return a * -1.0; }

Var exp(Var a) { return a.tape()->record(Op::exp, {a}); }
Var log(Var a) { return a.tape()->record(Op::log, {a}); }
Var expm1(Var a) { return a.tape()->record(Op::expm1, {a}); }
Var log1p(Var a) { return a.tape()->record(Op::log1p, {a}); }
Var sqrt(Var a) { return a.tape()->record(Op::sqrt, {a}); }
Var tanh(Var a) { return a.tape()->record(Op::tanh, {a}); }
Var pow_const(Var a, double exponent) { return a.tape()->record(Op::pow_const, {a}, exponent); }
Var pos_part(Var a) { return a.tape()->record(Op::pos_part, {a}); }
Var neg_part(Var a) { return a.tape()->record(Op::neg_part, {a}); }
Var greater_than(Var a, double threshold) {
  return a.tape()->record(Op::greater_than, {a}, threshold);
}
Var affine(Var weights, Var input, Var bias) {
  return weights.tape()->record(Op::affine, {weights, input, bias});
}
Var concat_rows(std::span<const Var> parts) {
  if (parts.empty()) throw ContractViolation("concat_rows: no inputs");
  return parts.front().tape()->record(Op::concat_rows, parts);
}
Var mean(Var a) { return a.tape()->record(Op::mean, {a}); }
Var sum(Var a) { return a.tape()->record(Op::sum, {a}); }

Var constant_like(Var like, double value) {
  return like.tape()->constant(value, like.rows(), like.cols());
}

const Matrix& value_of(Var a) { return a.value(); }

}  // namespace deephedge::ad
