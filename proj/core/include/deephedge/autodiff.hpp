#pragma once

// Reverse-mode automatic differentiation on a linear tape.
//
// Every node holds a dense matrix. Episode quantities are 1 x N rows (one
// column per simulated path) and dense layers work on units x N activations,
// so a whole minibatch of episodes is recorded as one tape. Elementwise binary
// operations require equal shapes; scalar constants enter through the
// add_scalar / scale primitives.

#include <Eigen/Dense>

#include <cstdint>
#include <initializer_list>
#include <span>
#include <string_view>
#include <vector>

namespace deephedge::ad {

using Matrix = Eigen::MatrixXd;

enum class Op : std::uint8_t {
  constant,
  parameter,
  add,
  sub,
  mul,
  div,
  add_scalar,  // a + k
  scale,       // k * a
  exp,
  log,
  expm1,
  log1p,
  pow_const,  // a^k
  pos_part,   // max(0, a); subgradient 0 at 0
  neg_part,   // max(0, -a)
  sqrt,
  tanh,
  greater_than,  // 1{a > k}; zero partials
  affine,        // W X + b, b broadcast over columns
  concat_rows,
  mean,  // 1 x 1
  sum,   // 1 x 1
};

std::string_view op_name(Op op);

class Tape;

// Handle to a node on a tape. Cheap to copy; valid while the tape lives.
class Var {
 public:
  Var() = default;
  Var(Tape* tape, int id) : tape_(tape), id_(id) {}

  const Matrix& value() const;
  Tape* tape() const { return tape_; }
  int id() const { return id_; }
  Eigen::Index rows() const { return value().rows(); }
  Eigen::Index cols() const { return value().cols(); }

 private:
  Tape* tape_ = nullptr;
  int id_ = -1;
};

// Adjoints of every node after a backward pass.
class Gradients {
 public:
  explicit Gradients(std::vector<Matrix> adjoints, const Tape& tape);
  // d loss / d var; zeros when the loss does not depend on var.
  Matrix wrt(Var var) const;

 private:
  std::vector<Matrix> adjoints_;
  const Tape* tape_;
};

class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Matrix value);
  Var constant(double value, Eigen::Index rows, Eigen::Index cols);
  Var parameter(Matrix value);

  // Computes the forward value of `op` and appends the node.
  Var record(Op op, std::initializer_list<Var> inputs, double k = 0.0);
  Var record(Op op, std::span<const Var> inputs, double k = 0.0);

  const Matrix& value(int id) const { return nodes_[static_cast<std::size_t>(id)].value; }
  std::size_t size() const { return nodes_.size(); }
  Op op(int id) const { return nodes_[static_cast<std::size_t>(id)].op; }

  // True when the node depends on at least one parameter leaf.
  bool active(int id) const { return nodes_[static_cast<std::size_t>(id)].active; }

  // Smallest distance of any parameter-dependent pos_part / neg_part input
  // from 0, or greater_than input from its threshold. Finite-difference checks
  // are only meaningful when this is bounded away from zero.
  double kink_margin() const;
  void reserve(std::size_t n) { nodes_.reserve(n); }

  // Reverse sweep from a finite 1 x 1 loss. Throws NumericalError when an
  // adjoint becomes non-finite.
  Gradients backward(Var loss) const;

 private:
  struct Node {
    Op op;
    double k;
    std::vector<int> inputs;
    Matrix value;
    bool active = false;
  };

  Matrix forward(Op op, std::span<const Var> inputs, double k) const;

  std::vector<Node> nodes_;
};

Var operator+(Var a, Var b);
Var operator-(Var a, Var b);
Var operator*(Var a, Var b);
Var operator/(Var a, Var b);
Var operator+(Var a, double k);
Var operator+(double k, Var a);
Var operator-(Var a, double k);
Var operator-(double k, Var a);
Var operator*(Var a, double k);
Var operator*(double k, Var a);
Var operator/(Var a, double k);
Var operator/(double k, Var a);
Var operator-(Var a);

Var exp(Var a);
Var log(Var a);
Var expm1(Var a);
Var log1p(Var a);
Var sqrt(Var a);
Var tanh(Var a);
Var pow_const(Var a, double exponent);
Var pos_part(Var a);
Var neg_part(Var a);
Var greater_than(Var a, double threshold);
Var affine(Var weights, Var input, Var bias);
Var concat_rows(std::span<const Var> parts);
Var mean(Var a);
Var sum(Var a);

// Same-shaped constant filled with `value`.
Var constant_like(Var like, double value);
const Matrix& value_of(Var a);

bool all_finite(const Matrix& m);

}  // namespace deephedge::ad
