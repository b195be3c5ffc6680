#pragma once

// Reverse-mode differentiation over batched Eigen matrices.
//
// Every operation appends a node holding its output value and a closure that
// pushes the node's incoming gradient to its inputs. Nodes are appended in
// evaluation order, so walking them backwards is a valid topological order.

#include <cmath>
#include <cstddef>
#include <functional>
#include <map>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "alea/aleatoric.hpp"
#include "alea/errors.hpp"
#include "alea/nn/activation.hpp"
#include "alea/nn/parameters.hpp"
#include "alea/nn/tensor.hpp"

namespace alea::nn {

struct Var {
  std::size_t id = 0;
};

class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;
  Tape(Tape&&) = default;
  Tape& operator=(Tape&&) = default;

  std::size_t size() const { return nodes_.size(); }

  const Matrix& value(Var v) const {
    const Node& n = nodes_.at(v.id);
    return n.ref ? *n.ref : n.value;
  }

  Var constant(Matrix v) { return push(std::move(v), nullptr); }

  /// Leaf bound to params[index]. The matrix is referenced, not copied, so
  /// the ParameterSet must outlive the tape and stay unmodified meanwhile.
  Var parameter(const ParameterSet& params, std::size_t index) {
    if (index >= params.size()) throw UsageError("parameter index out of range");
    const auto key = std::make_pair(&params, index);
    if (auto it = leaves_.find(key); it != leaves_.end()) return it->second;
    Node n;
    n.ref = &params[index].value;
    n.owner = &params;
    n.param_index = index;
    nodes_.push_back(std::move(n));
    Var v{nodes_.size() - 1};
    leaves_.emplace(key, v);
    return v;
  }

  Var matmul(Var a, Var b) {
    const Matrix& av = value(a);
    const Matrix& bv = value(b);
    if (av.cols() != bv.rows()) {
      throw ShapeError("matmul: " + shape_str(av) + " * " + shape_str(bv));
    }
    Matrix out = av * bv;
    return push(std::move(out), [a, b](Tape& t, const Matrix& g, const Matrix&) {
      t.accumulate(a, g * t.value(b).transpose());
      t.accumulate(b, t.value(a).transpose() * g);
    });
  }

  Var add(Var a, Var b) {
    check_same(a, b, "add");
    Matrix out = value(a) + value(b);
    return push(std::move(out), [a, b](Tape& t, const Matrix& g, const Matrix&) {
      t.accumulate(a, g);
      t.accumulate(b, g);
    });
  }

  Var sub(Var a, Var b) {
    check_same(a, b, "sub");
    Matrix out = value(a) - value(b);
    return push(std::move(out), [a, b](Tape& t, const Matrix& g, const Matrix&) {
      t.accumulate(a, g);
      t.accumulate(b, -g);
    });
  }

  /// Elementwise product.
  Var mul(Var a, Var b) {
    check_same(a, b, "mul");
    Matrix out = value(a).cwiseProduct(value(b));
    return push(std::move(out), [a, b](Tape& t, const Matrix& g, const Matrix&) {
      t.accumulate(a, g.cwiseProduct(t.value(b)));
      t.accumulate(b, g.cwiseProduct(t.value(a)));
    });
  }

  /// x (r x n) + bias (r x 1) broadcast over columns.
  Var add_bias(Var x, Var bias) {
    const Matrix& xv = value(x);
    const Matrix& bv = value(bias);
    if (bv.cols() != 1 || bv.rows() != xv.rows()) {
      throw ShapeError("add_bias: " + shape_str(xv) + " + " + shape_str(bv));
    }
    Matrix out = xv.colwise() + bv.col(0);
    return push(std::move(out), [x, bias](Tape& t, const Matrix& g, const Matrix&) {
      t.accumulate(x, g);
      t.accumulate(bias, g.rowwise().sum());
    });
  }

  /// Repeats a single column n times.
  Var broadcast_cols(Var x, Eigen::Index n) {
    const Matrix& xv = value(x);
    if (xv.cols() != 1) throw ShapeError("broadcast_cols: expected a column, got " + shape_str(xv));
    Matrix out = xv.replicate(1, n);
    return push(std::move(out), [x](Tape& t, const Matrix& g, const Matrix&) {
      t.accumulate(x, g.rowwise().sum());
    });
  }

  Var activate(Var x, Activation act) {
    if (act == Activation::identity) return x;
    Matrix out = nn::activate(act, value(x));
    return push(std::move(out), [x, act](Tape& t, const Matrix& g, const Matrix& y) {
      const Matrix& in = t.value(x);
      Matrix d = g;
      for (Eigen::Index i = 0; i < d.size(); ++i) {
        d(i) *= activate_derivative(act, in(i), y(i));
      }
      t.accumulate(x, d);
    });
  }

  Var sigmoid(Var x) { return activate(x, Activation::sigmoid); }
  Var tanh(Var x) { return activate(x, Activation::tanh); }

  /// Stacks operands vertically; all must share the column count.
  Var concat_rows(const std::vector<Var>& parts) {
    if (parts.empty()) throw UsageError("concat_rows: no operands");
    const Eigen::Index cols = value(parts.front()).cols();
    Eigen::Index rows = 0;
    for (Var p : parts) {
      if (value(p).cols() != cols) throw ShapeError("concat_rows: column count mismatch");
      rows += value(p).rows();
    }
    Matrix out(rows, cols);
    Eigen::Index r = 0;
    for (Var p : parts) {
      out.middleRows(r, value(p).rows()) = value(p);
      r += value(p).rows();
    }
    return push(std::move(out), [parts](Tape& t, const Matrix& g, const Matrix&) {
      Eigen::Index r = 0;
      for (Var p : parts) {
        const Eigen::Index n = t.value(p).rows();
        t.accumulate(p, g.middleRows(r, n));
        r += n;
      }
    });
  }

  Var slice_rows(Var x, Eigen::Index start, Eigen::Index count) {
    const Matrix& xv = value(x);
    if (start < 0 || count < 0 || start + count > xv.rows()) {
      throw ShapeError("slice_rows: rows [" + std::to_string(start) + ", " +
                       std::to_string(start + count) + ") of " + shape_str(xv));
    }
    Matrix out = xv.middleRows(start, count);
    const Eigen::Index rows = xv.rows();
    return push(std::move(out), [x, start, count, rows](Tape& t, const Matrix& g, const Matrix&) {
      Matrix d = Matrix::Zero(rows, g.cols());
      d.middleRows(start, count) = g;
      t.accumulate(x, d);
    });
  }

  /// Inverted dropout: zero with probability p, scale survivors by 1/(1-p).
  template <typename Rng>
  Var dropout(Var x, double p, Rng& rng) {
    if (!(p >= 0.0 && p < 1.0)) throw DomainError("dropout: p must be in [0, 1)");
    if (p == 0.0) return x;
    const Matrix& xv = value(x);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    Matrix mask(xv.rows(), xv.cols());
    const double keep_scale = 1.0 / (1.0 - p);
    for (Eigen::Index i = 0; i < mask.size(); ++i) mask(i) = unif(rng) < p ? 0.0 : keep_scale;
    Matrix out = xv.cwiseProduct(mask);
    return push(std::move(out), [x, mask = std::move(mask)](Tape& t, const Matrix& g, const Matrix&) {
      t.accumulate(x, g.cwiseProduct(mask));
    });
  }

  /// Elementwise max(ELU(alpha, x) + 1, floor).
  Var positive_scale(Var x, const ScaleSpec& spec) {
    Matrix out = value(x).unaryExpr([spec](double v) { return alea::positive_scale(v, spec); });
    return push(std::move(out), [x, spec](Tape& t, const Matrix& g, const Matrix&) {
      const Matrix& in = t.value(x);
      Matrix d = g;
      for (Eigen::Index i = 0; i < d.size(); ++i) {
        d(i) *= alea::positive_scale_derivative(in(i), spec);
      }
      t.accumulate(x, d);
    });
  }

  /// Sum of all entries, as a 1x1 node.
  Var sum(Var x) {
    Matrix out(1, 1);
    out(0, 0) = value(x).sum();
    return push(std::move(out), [x](Tape& t, const Matrix& g, const Matrix&) {
      const Matrix& xv = t.value(x);
      t.accumulate(x, Matrix::Constant(xv.rows(), xv.cols(), g(0, 0)));
    });
  }

  /// Mean absolute error between a 1 x n prediction row and constant targets.
  Var mae_mean(Var pred, const Matrix& targets) {
    const Matrix& pv = value(pred);
    require_shape(targets, pv.rows(), pv.cols(), "mae_mean targets");
    if (pv.size() == 0) throw DomainError("mae_mean: empty batch");
    const double n = static_cast<double>(pv.size());
    Matrix out(1, 1);
    out(0, 0) = (targets - pv).cwiseAbs().sum() / n;
    return push(std::move(out), [pred, targets, n](Tape& t, const Matrix& g, const Matrix&) {
      const Matrix& p = t.value(pred);
      Matrix d(p.rows(), p.cols());
      for (Eigen::Index i = 0; i < d.size(); ++i) {
        const double r = targets(i) - p(i);
        d(i) = -g(0, 0) * static_cast<double>((r > 0.0) - (r < 0.0)) / n;
      }
      t.accumulate(pred, d);
    });
  }

  /// Mean over the batch of log b + |y - mu| / b.
  Var laplace_nll_mean(Var mu, Var scale, const Matrix& targets) {
    const Matrix& mv = value(mu);
    const Matrix& sv = value(scale);
    require_shape(sv, mv.rows(), mv.cols(), "laplace_nll_mean scales");
    require_shape(targets, mv.rows(), mv.cols(), "laplace_nll_mean targets");
    if (mv.size() == 0) throw DomainError("laplace_nll_mean: empty batch");
    const std::span<const double> ys(targets.data(), static_cast<std::size_t>(targets.size()));
    const std::span<const double> ms(mv.data(), static_cast<std::size_t>(mv.size()));
    const std::span<const double> bs(sv.data(), static_cast<std::size_t>(sv.size()));
    const double n = static_cast<double>(mv.size());
    Matrix out(1, 1);
    out(0, 0) = alea::laplace_nll(ys, ms, bs) / n;
    return push(std::move(out), [mu, scale, targets, n](Tape& t, const Matrix& g, const Matrix&) {
      const Matrix& m = t.value(mu);
      const Matrix& s = t.value(scale);
      const auto grad = alea::laplace_nll_gradient(
          std::span<const double>(targets.data(), static_cast<std::size_t>(targets.size())),
          std::span<const double>(m.data(), static_cast<std::size_t>(m.size())),
          std::span<const double>(s.data(), static_cast<std::size_t>(s.size())));
      const double w = g(0, 0) / n;
      Matrix dm(m.rows(), m.cols());
      Matrix ds(s.rows(), s.cols());
      for (Eigen::Index i = 0; i < dm.size(); ++i) {
        dm(i) = w * grad.d_mus[static_cast<std::size_t>(i)];
        ds(i) = w * grad.d_scales[static_cast<std::size_t>(i)];
      }
      t.accumulate(mu, dm);
      t.accumulate(scale, ds);
    });
  }

  /// d loss / d params[i] for every parameter of `params`. Parameters that the
  /// loss does not depend on receive zero gradients.
  Gradients backward(Var loss, const ParameterSet& params) {
    const Matrix& lv = value(loss);
    if (lv.rows() != 1 || lv.cols() != 1) {
      throw UsageError("backward: loss must be a scalar, got " + shape_str(lv));
    }
    grads_.assign(nodes_.size(), Matrix());
    grads_[loss.id] = Matrix::Ones(1, 1);
    Gradients out = zero_gradients(params);
    for (std::size_t id = loss.id + 1; id-- > 0;) {
      Node& n = nodes_[id];
      if (grads_[id].size() == 0) continue;
      if (n.backward) {
        n.backward(*this, grads_[id], n.value);
      } else if (n.owner == &params) {
        out[n.param_index] += grads_[id];
      }
    }
    grads_.clear();
    return out;
  }

 private:
  using Backward = std::function<void(Tape&, const Matrix& grad, const Matrix& output)>;

  struct Node {
    Matrix value;
    const Matrix* ref = nullptr;
    const ParameterSet* owner = nullptr;
    std::size_t param_index = 0;
    Backward backward;
  };

  Var push(Matrix value, Backward backward) {
    Node n;
    n.value = std::move(value);
    n.backward = std::move(backward);
    nodes_.push_back(std::move(n));
    return Var{nodes_.size() - 1};
  }

  void accumulate(Var v, const Matrix& g) {
    Matrix& slot = grads_[v.id];
    if (slot.size() == 0) {
      slot = g;
    } else {
      slot += g;
    }
  }

  void check_same(Var a, Var b, const char* what) const {
    const Matrix& av = value(a);
    const Matrix& bv = value(b);
    if (av.rows() != bv.rows() || av.cols() != bv.cols()) {
      throw ShapeError(std::string(what) + ": " + shape_str(av) + " vs " + shape_str(bv));
    }
  }

  std::vector<Node> nodes_;
  std::vector<Matrix> grads_;
  std::map<std::pair<const ParameterSet*, std::size_t>, Var> leaves_;
};

}  // namespace alea::nn
