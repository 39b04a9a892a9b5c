#include "actdst/autodiff.h"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

namespace actdst {

std::uint64_t parameter_seed(std::uint64_t seed, std::string_view name) {
  std::uint64_t h = 1469598103934665603ULL ^ seed;
  for (unsigned char c : name) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

Parameter uniform_parameter(std::string name, Eigen::Index rows,
                            Eigen::Index cols, double bound, std::uint64_t seed,
                            bool trainable) {
  std::mt19937_64 rng(parameter_seed(seed, name));
  Matrix v(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c) {
      // 53-bit uniform in [0, 1); avoids implementation-defined distributions.
      const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
      v(r, c) = (2.0 * u - 1.0) * bound;
    }
  return Parameter(std::move(name), std::move(v), trainable);
}

Parameter fan_in_parameter(std::string name, Eigen::Index rows,
                           Eigen::Index cols, Eigen::Index fan_in,
                           std::uint64_t seed) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(std::max<Eigen::Index>(fan_in, 1)));
  return uniform_parameter(std::move(name), rows, cols, bound, seed);
}

Parameter zero_parameter(std::string name, Eigen::Index rows,
                         Eigen::Index cols) {
  return Parameter(std::move(name), Matrix::Zero(rows, cols));
}

const Matrix& Var::value() const { return tape_->value(id_); }
const Matrix& Var::grad() const { return tape_->grad(id_); }

Var Tape::push(Matrix value, bool needs_grad, Backward backward) {
  Node& n = nodes_.emplace_back();
  n.own = std::move(value);
  n.value = &n.own;
  n.needs_grad = needs_grad;
  if (needs_grad) n.backward = std::move(backward);
  return Var(this, static_cast<int>(nodes_.size()) - 1);
}

Var Tape::constant(Matrix value) { return push(std::move(value), false, {}); }

Var Tape::zeros(Eigen::Index rows, Eigen::Index cols) {
  return constant(Matrix::Zero(rows, cols));
}

Var Tape::param(Parameter& p) {
  auto it = param_ids_.find(&p);
  if (it != param_ids_.end()) return Var(this, it->second);
  Node& n = nodes_.emplace_back();
  n.value = &p.value;
  n.needs_grad = p.trainable;
  n.param = &p;
  const int id = static_cast<int>(nodes_.size()) - 1;
  param_ids_.emplace(&p, id);
  return Var(this, id);
}

Var Tape::lookup(Parameter& table, std::span<const int> ids) {
  Matrix out(static_cast<Eigen::Index>(ids.size()), table.value.cols());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] < 0 || ids[i] >= table.value.rows())
      throw std::out_of_range("lookup: row " + std::to_string(ids[i]) +
                              " outside table " + table.name);
    out.row(static_cast<Eigen::Index>(i)) = table.value.row(ids[i]);
  }
  std::vector<int> rows(ids.begin(), ids.end());
  Parameter* p = &table;
  return push(std::move(out), table.trainable,
              [p, rows = std::move(rows)](Tape& t, int self) {
                const Matrix& g = t.grad(self);
                for (std::size_t i = 0; i < rows.size(); ++i)
                  p->grad.row(rows[i]) += g.row(static_cast<Eigen::Index>(i));
              });
}

Matrix& Tape::ensure_grad(Node& n) {
  if (n.grad.rows() != n.value->rows() || n.grad.cols() != n.value->cols() ||
      n.grad.size() == 0)
    n.grad = Matrix::Zero(n.value->rows(), n.value->cols());
  return n.grad;
}

void Tape::accumulate(int id, const Matrix& delta) {
  accumulate_with(id, [&](Matrix& g) { g += delta; });
}

void Tape::backward(Var root) {
  if (root.tape() != this) throw std::invalid_argument("backward: foreign var");
  if (root.rows() != 1 || root.cols() != 1)
    throw std::invalid_argument("backward: root must be a scalar");
  for (Node& n : nodes_)
    if (n.param == nullptr) n.grad.resize(0, 0);
  Node& r = nodes_[root.id()];
  if (!r.needs_grad) return;
  if (r.param != nullptr) {
    r.param->grad(0, 0) += 1.0;
    return;
  }
  r.grad = Matrix::Constant(1, 1, 1.0);
  for (int i = root.id(); i >= 0; --i) {
    Node& n = nodes_[i];
    if (n.param != nullptr || !n.backward || n.grad.size() == 0) continue;
    n.backward(*this, i);
  }
}

namespace {

Tape& same_tape(Var a, Var b) {
  if (a.tape() == nullptr || a.tape() != b.tape())
    throw std::invalid_argument("operands live on different tapes");
  return *a.tape();
}

void require_shape(bool ok, const char* op) {
  if (!ok) throw std::invalid_argument(std::string(op) + ": shape mismatch");
}

}  // namespace

Var add(Var a, Var b) {
  Tape& t = same_tape(a, b);
  require_shape(a.rows() == b.rows() && a.cols() == b.cols(), "add");
  const int ia = a.id(), ib = b.id();
  return t.push(a.value() + b.value(), t.needs_grad(ia) || t.needs_grad(ib),
                [ia, ib](Tape& t, int self) {
                  t.accumulate(ia, t.grad(self));
                  t.accumulate(ib, t.grad(self));
                });
}

Var sub(Var a, Var b) {
  Tape& t = same_tape(a, b);
  require_shape(a.rows() == b.rows() && a.cols() == b.cols(), "sub");
  const int ia = a.id(), ib = b.id();
  return t.push(a.value() - b.value(), t.needs_grad(ia) || t.needs_grad(ib),
                [ia, ib](Tape& t, int self) {
                  t.accumulate(ia, t.grad(self));
                  t.accumulate_with(ib, [&](Matrix& g) { g -= t.grad(self); });
                });
}

Var hadamard(Var a, Var b) {
  Tape& t = same_tape(a, b);
  require_shape(a.rows() == b.rows() && a.cols() == b.cols(), "hadamard");
  const int ia = a.id(), ib = b.id();
  return t.push(a.value().cwiseProduct(b.value()),
                t.needs_grad(ia) || t.needs_grad(ib),
                [ia, ib](Tape& t, int self) {
                  const Matrix& g = t.grad(self);
                  t.accumulate_with(ia, [&](Matrix& ga) {
                    ga += g.cwiseProduct(t.value(ib));
                  });
                  t.accumulate_with(ib, [&](Matrix& gb) {
                    gb += g.cwiseProduct(t.value(ia));
                  });
                });
}

Var scale(Var a, double c) {
  Tape& t = *a.tape();
  const int ia = a.id();
  return t.push(a.value() * c, t.needs_grad(ia), [ia, c](Tape& t, int self) {
    t.accumulate_with(ia, [&](Matrix& g) { g += c * t.grad(self); });
  });
}

Var broadcast_add(Var a, Var b) {
  Tape& t = same_tape(a, b);
  require_shape(b.rows() == 1 && (b.cols() == a.cols() || b.cols() == 1),
                "broadcast_add");
  Matrix out = a.value();
  if (b.cols() == 1)
    out.array() += b.scalar();
  else
    out.rowwise() += b.value().row(0);
  const int ia = a.id(), ib = b.id();
  return t.push(std::move(out), t.needs_grad(ia) || t.needs_grad(ib),
                [ia, ib](Tape& t, int self) {
                  const Matrix& g = t.grad(self);
                  t.accumulate(ia, g);
                  t.accumulate_with(ib, [&](Matrix& gb) {
                    if (gb.cols() == 1 && g.cols() != 1)
                      gb(0, 0) += g.sum();
                    else
                      gb += g.colwise().sum();
                  });
                });
}

Var matmul(Var a, Var b) {
  Tape& t = same_tape(a, b);
  require_shape(a.cols() == b.rows(), "matmul");
  const int ia = a.id(), ib = b.id();
  return t.push(a.value() * b.value(), t.needs_grad(ia) || t.needs_grad(ib),
                [ia, ib](Tape& t, int self) {
                  const Matrix& g = t.grad(self);
                  t.accumulate_with(ia, [&](Matrix& ga) {
                    ga.noalias() += g * t.value(ib).transpose();
                  });
                  t.accumulate_with(ib, [&](Matrix& gb) {
                    gb.noalias() += t.value(ia).transpose() * g;
                  });
                });
}

Var transpose(Var a) {
  Tape& t = *a.tape();
  const int ia = a.id();
  return t.push(a.value().transpose(), t.needs_grad(ia),
                [ia](Tape& t, int self) {
                  t.accumulate_with(ia, [&](Matrix& g) {
                    g += t.grad(self).transpose();
                  });
                });
}

Var relu(Var a) {
  Tape& t = *a.tape();
  if (a.value().size() > 0) t.note_kink(a.value().cwiseAbs().minCoeff());
  for (Eigen::Index i = 0; i < a.value().size(); ++i)
    t.note_branch(a.value().data()[i] > 0.0 ? 1 : 0);
  const int ia = a.id();
  return t.push(a.value().cwiseMax(0.0), t.needs_grad(ia),
                [ia](Tape& t, int self) {
                  t.accumulate_with(ia, [&](Matrix& g) {
                    g += (t.value(ia).array() > 0.0)
                             .select(t.grad(self).array(), 0.0)
                             .matrix();
                  });
                });
}

Var sigmoid(Var a) {
  Tape& t = *a.tape();
  const int ia = a.id();
  Matrix out = (1.0 / (1.0 + (-a.value().array()).exp())).matrix();
  return t.push(std::move(out), t.needs_grad(ia), [ia](Tape& t, int self) {
    const Matrix& y = t.value(self);
    t.accumulate_with(ia, [&](Matrix& g) {
      g += (t.grad(self).array() * y.array() * (1.0 - y.array())).matrix();
    });
  });
}

Var tanh(Var a) {
  Tape& t = *a.tape();
  const int ia = a.id();
  return t.push(a.value().array().tanh().matrix(), t.needs_grad(ia),
                [ia](Tape& t, int self) {
                  const Matrix& y = t.value(self);
                  t.accumulate_with(ia, [&](Matrix& g) {
                    g += (t.grad(self).array() * (1.0 - y.array().square()))
                             .matrix();
                  });
                });
}

Var one_minus(Var a) {
  Tape& t = *a.tape();
  const int ia = a.id();
  return t.push((1.0 - a.value().array()).matrix(), t.needs_grad(ia),
                [ia](Tape& t, int self) {
                  t.accumulate_with(ia, [&](Matrix& g) { g -= t.grad(self); });
                });
}

Var hconcat(std::span<const Var> parts) {
  if (parts.empty()) throw std::invalid_argument("hconcat: no parts");
  Tape& t = *parts.front().tape();
  const Eigen::Index rows = parts.front().rows();
  Eigen::Index cols = 0;
  bool needs = false;
  std::vector<int> ids;
  for (const Var& p : parts) {
    require_shape(p.tape() == &t && p.rows() == rows, "hconcat");
    cols += p.cols();
    needs = needs || t.needs_grad(p.id());
    ids.push_back(p.id());
  }
  Matrix out(rows, cols);
  Eigen::Index c = 0;
  for (const Var& p : parts) {
    out.middleCols(c, p.cols()) = p.value();
    c += p.cols();
  }
  return t.push(std::move(out), needs, [ids](Tape& t, int self) {
    const Matrix& g = t.grad(self);
    Eigen::Index c = 0;
    for (int id : ids) {
      const Eigen::Index w = t.value(id).cols();
      t.accumulate_with(id, [&](Matrix& gi) { gi += g.middleCols(c, w); });
      c += w;
    }
  });
}

Var vconcat(std::span<const Var> parts, Eigen::Index cols) {
  // An empty stack has no tape to live on; callers use Tape::zeros(0, cols).
  if (parts.empty()) throw std::invalid_argument("vconcat: no parts");
  Tape& t = *parts.front().tape();
  Eigen::Index rows = 0;
  bool needs = false;
  std::vector<int> ids;
  for (const Var& p : parts) {
    require_shape(p.tape() == &t && p.cols() == cols, "vconcat");
    rows += p.rows();
    needs = needs || t.needs_grad(p.id());
    ids.push_back(p.id());
  }
  Matrix out(rows, cols);
  Eigen::Index r = 0;
  for (const Var& p : parts) {
    out.middleRows(r, p.rows()) = p.value();
    r += p.rows();
  }
  return t.push(std::move(out), needs, [ids](Tape& t, int self) {
    const Matrix& g = t.grad(self);
    Eigen::Index r = 0;
    for (int id : ids) {
      const Eigen::Index h = t.value(id).rows();
      t.accumulate_with(id, [&](Matrix& gi) { gi += g.middleRows(r, h); });
      r += h;
    }
  });
}

Var row(Var a, Eigen::Index i) {
  Tape& t = *a.tape();
  require_shape(i >= 0 && i < a.rows(), "row");
  const int ia = a.id();
  return t.push(a.value().row(i), t.needs_grad(ia), [ia, i](Tape& t, int self) {
    t.accumulate_with(ia, [&](Matrix& g) { g.row(i) += t.grad(self).row(0); });
  });
}

Var slice_cols(Var a, Eigen::Index start, Eigen::Index n) {
  Tape& t = *a.tape();
  require_shape(start >= 0 && n >= 0 && start + n <= a.cols(), "slice_cols");
  const int ia = a.id();
  return t.push(a.value().middleCols(start, n), t.needs_grad(ia),
                [ia, start, n](Tape& t, int self) {
                  t.accumulate_with(ia, [&](Matrix& g) {
                    g.middleCols(start, n) += t.grad(self);
                  });
                });
}

Var gather_rows(Var a, std::span<const int> ids) {
  Tape& t = *a.tape();
  Matrix out(static_cast<Eigen::Index>(ids.size()), a.cols());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    require_shape(ids[i] >= 0 && ids[i] < a.rows(), "gather_rows");
    out.row(static_cast<Eigen::Index>(i)) = a.value().row(ids[i]);
  }
  const int ia = a.id();
  std::vector<int> rows(ids.begin(), ids.end());
  return t.push(std::move(out), t.needs_grad(ia),
                [ia, rows = std::move(rows)](Tape& t, int self) {
                  const Matrix& g = t.grad(self);
                  t.accumulate_with(ia, [&](Matrix& ga) {
                    for (std::size_t i = 0; i < rows.size(); ++i)
                      ga.row(rows[i]) += g.row(static_cast<Eigen::Index>(i));
                  });
                });
}

Var pad_rows(Var a, Eigen::Index total) {
  Tape& t = *a.tape();
  require_shape(total >= a.rows(), "pad_rows");
  if (total == a.rows()) return a;
  Matrix out = Matrix::Zero(total, a.cols());
  const Eigen::Index n = a.rows();
  out.topRows(n) = a.value();
  const int ia = a.id();
  return t.push(std::move(out), t.needs_grad(ia), [ia, n](Tape& t, int self) {
    t.accumulate_with(ia, [&](Matrix& g) { g += t.grad(self).topRows(n); });
  });
}

Var unfold_rows(Var a, Eigen::Index width) {
  Tape& t = *a.tape();
  require_shape(width >= 1 && width <= a.rows(), "unfold_rows");
  const Eigen::Index n = a.rows() - width + 1;
  const Eigen::Index d = a.cols();
  Matrix out(n, width * d);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index k = 0; k < width; ++k)
      out.block(i, k * d, 1, d) = a.value().row(i + k);
  const int ia = a.id();
  return t.push(std::move(out), t.needs_grad(ia),
                [ia, width, n, d](Tape& t, int self) {
                  const Matrix& g = t.grad(self);
                  t.accumulate_with(ia, [&](Matrix& ga) {
                    for (Eigen::Index i = 0; i < n; ++i)
                      for (Eigen::Index k = 0; k < width; ++k)
                        ga.row(i + k) += g.block(i, k * d, 1, d);
                  });
                });
}

Var sum(Var a) {
  Tape& t = *a.tape();
  const int ia = a.id();
  return t.push(Matrix::Constant(1, 1, a.value().sum()), t.needs_grad(ia),
                [ia](Tape& t, int self) {
                  const double g = t.grad(self)(0, 0);
                  t.accumulate_with(ia, [&](Matrix& ga) { ga.array() += g; });
                });
}

Var mean_rows(Var a) {
  Tape& t = *a.tape();
  require_shape(a.rows() > 0, "mean_rows");
  const int ia = a.id();
  const double inv = 1.0 / static_cast<double>(a.rows());
  return t.push(a.value().colwise().mean(), t.needs_grad(ia),
                [ia, inv](Tape& t, int self) {
                  t.accumulate_with(ia, [&](Matrix& g) {
                    g.rowwise() += inv * t.grad(self).row(0);
                  });
                });
}

Var max_rows(Var a) {
  Tape& t = *a.tape();
  require_shape(a.rows() > 0, "max_rows");
  const Matrix& v = a.value();
  Matrix out(1, v.cols());
  std::vector<Eigen::Index> arg(v.cols());
  for (Eigen::Index c = 0; c < v.cols(); ++c) {
    Eigen::Index best = 0;
    for (Eigen::Index r = 1; r < v.rows(); ++r)
      if (v(r, c) > v(best, c)) best = r;
    arg[c] = best;
    t.note_branch(static_cast<std::uint64_t>(best) + 2);
    out(0, c) = v(best, c);
    for (Eigen::Index r = 0; r < v.rows(); ++r)
      if (r != best) t.note_kink(v(best, c) - v(r, c));
  }
  const int ia = a.id();
  return t.push(std::move(out), t.needs_grad(ia),
                [ia, arg = std::move(arg)](Tape& t, int self) {
                  const Matrix& g = t.grad(self);
                  t.accumulate_with(ia, [&](Matrix& ga) {
                    for (std::size_t c = 0; c < arg.size(); ++c)
                      ga(arg[c], static_cast<Eigen::Index>(c)) +=
                          g(0, static_cast<Eigen::Index>(c));
                  });
                });
}

namespace {

Matrix masked_logits(const Matrix& logits, const Mask& mask) {
  Matrix z = logits;
  if (!mask.empty())
    for (Eigen::Index i = 0; i < z.rows(); ++i)
      if (!mask[static_cast<std::size_t>(i)]) z(i, 0) += kMaskedLogit;
  return z;
}

void check_softmax_input(Var logits, const Mask& mask, const char* op) {
  if (logits.cols() != 1)
    throw std::invalid_argument(std::string(op) + ": expects a column vector");
  if (!mask.empty() && mask.size() != static_cast<std::size_t>(logits.rows()))
    throw std::invalid_argument(std::string(op) + ": mask length mismatch");
}

}  // namespace

Var masked_softmax(Var logits, const Mask& mask) {
  check_softmax_input(logits, mask, "masked_softmax");
  Tape& t = *logits.tape();
  Matrix z = masked_logits(logits.value(), mask);
  Matrix p(z.rows(), 1);
  if (z.rows() > 0) {
    const double m = z.maxCoeff();
    p = (z.array() - m).exp().matrix();
    p /= p.sum();
    if (!mask.empty())
      for (Eigen::Index i = 0; i < p.rows(); ++i)
        if (!mask[static_cast<std::size_t>(i)]) p(i, 0) = 0.0;
  }
  const int ia = logits.id();
  return t.push(std::move(p), t.needs_grad(ia), [ia](Tape& t, int self) {
    const Matrix& y = t.value(self);
    const Matrix& g = t.grad(self);
    const double dot = (y.array() * g.array()).sum();
    t.accumulate_with(ia, [&](Matrix& ga) {
      ga += (y.array() * (g.array() - dot)).matrix();
    });
  });
}

Var masked_log_softmax(Var logits, const Mask& mask) {
  check_softmax_input(logits, mask, "masked_log_softmax");
  Tape& t = *logits.tape();
  Matrix z = masked_logits(logits.value(), mask);
  Matrix out(z.rows(), 1);
  if (z.rows() > 0) {
    const double m = z.maxCoeff();
    const double lse = m + std::log((z.array() - m).exp().sum());
    out = (z.array() - lse).matrix();
  }
  const int ia = logits.id();
  return t.push(std::move(out), t.needs_grad(ia), [ia](Tape& t, int self) {
    const Matrix& y = t.value(self);
    const Matrix& g = t.grad(self);
    const double gs = g.sum();
    t.accumulate_with(ia, [&](Matrix& ga) {
      ga += (g.array() - y.array().exp() * gs).matrix();
    });
  });
}

Var pick(Var a, Eigen::Index r, Eigen::Index c) {
  Tape& t = *a.tape();
  if (r < 0 || r >= a.rows() || c < 0 || c >= a.cols())
    throw std::out_of_range("pick: index outside matrix");
  const int ia = a.id();
  return t.push(Matrix::Constant(1, 1, a.value()(r, c)), t.needs_grad(ia),
                [ia, r, c](Tape& t, int self) {
                  t.accumulate_with(ia, [&](Matrix& g) {
                    g(r, c) += t.grad(self)(0, 0);
                  });
                });
}

}  // namespace actdst
