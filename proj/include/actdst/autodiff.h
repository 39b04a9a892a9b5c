// Reverse-mode differentiation over dense Eigen matrices.
//
// A Tape records every operation of one forward pass. Var is a cheap handle
// into the tape. Parameters live outside the tape; a Var created from a
// Parameter aliases its storage and backward() accumulates straight into
// Parameter::grad, so a trainer can run many tapes before one optimizer step.

#ifndef ACTDST_AUTODIFF_H_
#define ACTDST_AUTODIFF_H_

#include <Eigen/Dense>

#include <cstdint>
#include <deque>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace actdst {

using Matrix = Eigen::MatrixXd;
using Mask = std::vector<std::uint8_t>;

// Surrogate for -infinity added to masked logits before normalization.
inline constexpr double kMaskedLogit = -1e9;

struct Parameter {
  std::string name;
  Matrix value;
  Matrix grad;
  bool trainable = true;

  Parameter() = default;
  Parameter(std::string n, Matrix v, bool train = true)
      : name(std::move(n)), value(std::move(v)), trainable(train) {
    grad = Matrix::Zero(value.rows(), value.cols());
  }

  void zero_grad() { grad.setZero(value.rows(), value.cols()); }
};

// Deterministic parameter initialization. Each parameter draws from its own
// stream seeded by (seed, name), so adding or removing one parameter leaves
// every other initial value unchanged.
std::uint64_t parameter_seed(std::uint64_t seed, std::string_view name);
// Uniform in [-bound, bound].
Parameter uniform_parameter(std::string name, Eigen::Index rows,
                            Eigen::Index cols, double bound, std::uint64_t seed,
                            bool trainable = true);
// Uniform fan-in scaling: bound = 1 / sqrt(fan_in).
Parameter fan_in_parameter(std::string name, Eigen::Index rows,
                           Eigen::Index cols, Eigen::Index fan_in,
                           std::uint64_t seed);
Parameter zero_parameter(std::string name, Eigen::Index rows,
                         Eigen::Index cols);

class Tape;

class Var {
 public:
  Var() = default;

  const Matrix& value() const;
  // Gradient accumulated by the last backward(); empty if none reached it.
  const Matrix& grad() const;
  Eigen::Index rows() const { return value().rows(); }
  Eigen::Index cols() const { return value().cols(); }
  double scalar() const { return value()(0, 0); }

  Tape* tape() const { return tape_; }
  int id() const { return id_; }
  bool valid() const { return tape_ != nullptr; }

 private:
  friend class Tape;
  Var(Tape* tape, int id) : tape_(tape), id_(id) {}

  Tape* tape_ = nullptr;
  int id_ = -1;
};

class Tape {
 public:
  using Backward = std::function<void(Tape&, int self)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Matrix value);
  Var zeros(Eigen::Index rows, Eigen::Index cols);
  // Aliases p.value. Gradients flow into p.grad only when p.trainable.
  Var param(Parameter& p);
  // Selected rows of an embedding table; backward scatters into table.grad.
  Var lookup(Parameter& table, std::span<const int> ids);

  // Seeds d(root)/d(root) = 1 and propagates. root must be 1x1.
  void backward(Var root);

  std::size_t size() const { return nodes_.size(); }

  // Smallest |pre-activation| seen by relu(), and smallest gap between the
  // top two candidates seen by max_rows(). Finite-difference checks use these
  // to avoid sampling at a kink.
  double kink_margin() const { return kink_margin_; }
  void note_kink(double distance) {
    if (distance < kink_margin_) kink_margin_ = distance;
  }
  // Hash of every branch taken by relu() (sign pattern) and max_rows()
  // (argmax rows). Two passes with equal signatures lie on the same smooth
  // piece of the function.
  std::uint64_t branch_signature() const { return branch_signature_; }
  void note_branch(std::uint64_t value) {
    branch_signature_ = (branch_signature_ ^ value) * 1099511628211ULL;
  }

  // Per-tape memo for values that are reused inside one forward pass (name
  // embeddings, character encodings).
  std::unordered_map<std::string, Var>& memo() { return memo_; }

  // Op-implementation interface.
  Var push(Matrix value, bool needs_grad, Backward backward);
  const Matrix& value(int id) const { return *nodes_[id].value; }
  const Matrix& grad(int id) const { return nodes_[id].grad; }
  bool needs_grad(int id) const { return nodes_[id].needs_grad; }
  void accumulate(int id, const Matrix& delta);
  template <typename Fn>
  void accumulate_with(int id, Fn&& fn) {
    Node& n = nodes_[id];
    if (!n.needs_grad) return;
    Matrix& g = n.param != nullptr ? n.param->grad : ensure_grad(n);
    fn(g);
  }

 private:
  struct Node {
    Matrix own;
    const Matrix* value = nullptr;
    Matrix grad;
    bool needs_grad = false;
    Parameter* param = nullptr;
    Backward backward;
  };

  Matrix& ensure_grad(Node& n);

  std::deque<Node> nodes_;
  std::unordered_map<const Parameter*, int> param_ids_;
  std::unordered_map<std::string, Var> memo_;
  double kink_margin_ = std::numeric_limits<double>::infinity();
  std::uint64_t branch_signature_ = 14695981039346656037ULL;
};

// Elementwise and shape ops. All operands must live on the same tape.
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var hadamard(Var a, Var b);
Var scale(Var a, double c);
// a (n x d) plus b broadcast over rows; b is 1 x d or 1 x 1.
Var broadcast_add(Var a, Var b);
Var matmul(Var a, Var b);
Var transpose(Var a);
Var relu(Var a);
Var sigmoid(Var a);
Var tanh(Var a);
Var one_minus(Var a);

Var hconcat(std::span<const Var> parts);
// Stacks rows; every part must be `cols` wide. Use Tape::zeros(0, cols) for
// an empty stack.
Var vconcat(std::span<const Var> parts, Eigen::Index cols);
Var row(Var a, Eigen::Index i);
Var slice_cols(Var a, Eigen::Index start, Eigen::Index n);
Var gather_rows(Var a, std::span<const int> ids);
// Appends zero rows up to `total` rows.
Var pad_rows(Var a, Eigen::Index total);
// Sliding windows of `width` rows, each flattened row-major:
// (n - width + 1) x (width * d).
Var unfold_rows(Var a, Eigen::Index width);

Var sum(Var a);
Var mean_rows(Var a);
// Column-wise max over rows (max-over-time pooling).
Var max_rows(Var a);

// Column vector n x 1 -> n x 1. Masked entries get kMaskedLogit before
// normalization and exactly zero afterwards. mask may be empty (all valid).
Var masked_softmax(Var logits, const Mask& mask);
Var masked_log_softmax(Var logits, const Mask& mask);
Var pick(Var a, Eigen::Index r, Eigen::Index c);

}  // namespace actdst

#endif  // ACTDST_AUTODIFF_H_
