#include "medkg/tensor.hpp"

#include <algorithm>
#include <cmath>

namespace medkg {

Tensor Tensor::randn(int rows, int cols, double stddev, Rng& rng) {
  Tensor t(rows, cols);
  for (auto& v : t.data) v = medkg::randn(rng, stddev);
  return t;
}

std::string Tensor::shape_str() const {
  return "[" + std::to_string(n_rows) + "x" + std::to_string(n_cols) + "]";
}

bool Tensor::all_finite() const {
  for (double v : data)
    if (!std::isfinite(v)) return false;
  return true;
}

void Tape::check_open() const {
  if (backward_done_) throw ContractError("tape already ran backward; create a fresh tape");
}

Var Tape::make(Tensor value, bool requires_grad, std::function<void()> backprop) {
  Node n;
  n.value = std::move(value);
  n.requires_grad = requires_grad;
  n.backprop = std::move(backprop);
  nodes_.push_back(std::move(n));
  return Var{static_cast<int>(nodes_.size()) - 1};
}

Tensor& Tape::grad_buf(int id) {
  Node& n = node(id);
  if (!n.grad_alloc) {
    n.grad = Tensor(n.value.n_rows, n.value.n_cols);
    n.grad_alloc = true;
  }
  return n.grad;
}

Var Tape::input(Tensor value, bool requires_grad) {
  check_open();
  return make(std::move(value), requires_grad, nullptr);
}

const Tensor& Tape::grad(Var v) const {
  if (!backward_done_) throw ContractError("grad queried before backward");
  const Node& n = node(v.id);
  if (!n.grad_alloc) {
    static thread_local Tensor zero;
    zero = Tensor(n.value.n_rows, n.value.n_cols);
    return zero;
  }
  return n.grad;
}

Var Tape::matmul(Var a, Var b) {
  check_open();
  const Tensor& A = value(a);
  const Tensor& B = value(b);
  if (A.n_cols != B.n_rows)
    throw ShapeError("matmul inner dimensions disagree: " + A.shape_str() + " x " + B.shape_str());
  const int m = A.n_rows, k = A.n_cols, n = B.n_cols;
  Tensor C(m, n);
  for (int i = 0; i < m; ++i) {
    const double* arow = &A.data[static_cast<std::size_t>(i) * k];
    double* crow = &C.data[static_cast<std::size_t>(i) * n];
    for (int p = 0; p < k; ++p) {
      const double av = arow[p];
      if (av == 0.0) continue;
      const double* brow = &B.data[static_cast<std::size_t>(p) * n];
      for (int j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
  bool rg = node(a.id).requires_grad || node(b.id).requires_grad;
  Var out = make(std::move(C), rg, nullptr);
  if (rg) {
    node(out.id).backprop = [this, a, b, out, m, k, n]() {
      const Tensor& g = node(out.id).grad;
      const Tensor& A2 = value(a);
      const Tensor& B2 = value(b);
      if (node(a.id).requires_grad) {
        Tensor& ga = grad_buf(a.id);  // dA = g * B^T
        for (int i = 0; i < m; ++i)
          for (int p = 0; p < k; ++p) {
            double acc = 0.0;
            const double* grow = &g.data[static_cast<std::size_t>(i) * n];
            const double* brow = &B2.data[static_cast<std::size_t>(p) * n];
            for (int j = 0; j < n; ++j) acc += grow[j] * brow[j];
            ga.at(i, p) += acc;
          }
      }
      if (node(b.id).requires_grad) {
        Tensor& gb = grad_buf(b.id);  // dB = A^T * g
        for (int i = 0; i < m; ++i) {
          const double* arow = &A2.data[static_cast<std::size_t>(i) * k];
          const double* grow = &g.data[static_cast<std::size_t>(i) * n];
          for (int p = 0; p < k; ++p) {
            const double av = arow[p];
            if (av == 0.0) continue;
            double* gbrow = &gb.data[static_cast<std::size_t>(p) * n];
            for (int j = 0; j < n; ++j) gbrow[j] += av * grow[j];
          }
        }
      }
    };
  }
  return out;
}

Var Tape::transpose(Var a) {
  check_open();
  const Tensor& A = value(a);
  Tensor T(A.n_cols, A.n_rows);
  for (int i = 0; i < A.n_rows; ++i)
    for (int j = 0; j < A.n_cols; ++j) T.at(j, i) = A.at(i, j);
  bool rg = node(a.id).requires_grad;
  Var out = make(std::move(T), rg, nullptr);
  if (rg) {
    node(out.id).backprop = [this, a, out]() {
      const Tensor& g = node(out.id).grad;
      Tensor& ga = grad_buf(a.id);
      for (int i = 0; i < g.n_rows; ++i)
        for (int j = 0; j < g.n_cols; ++j) ga.at(j, i) += g.at(i, j);
    };
  }
  return out;
}

// Elementwise binary op. Shapes must match exactly, or one side is a 1x1
// scalar broadcast over the other.
Var Tape::binary_ew(Var a, Var b, char op) {
  check_open();
  const Tensor& A = value(a);
  const Tensor& B = value(b);
  const bool a_scalar = A.is_scalar() && !B.is_scalar();
  const bool b_scalar = B.is_scalar() && !A.is_scalar();
  if (!A.same_shape(B) && !a_scalar && !b_scalar)
    throw ShapeError(std::string("elementwise '") + op + "' shapes incompatible: " + A.shape_str() + " vs " +
                     B.shape_str());
  const Tensor& big = a_scalar ? B : A;
  Tensor C(big.n_rows, big.n_cols);
  const std::size_t n = C.size();
  for (std::size_t i = 0; i < n; ++i) {
    double x = a_scalar ? A.data[0] : A.data[i];
    double y = b_scalar ? B.data[0] : B.data[i];
    C.data[i] = op == '+' ? x + y : op == '-' ? x - y : x * y;
  }
  bool rg = node(a.id).requires_grad || node(b.id).requires_grad;
  Var out = make(std::move(C), rg, nullptr);
  if (rg) {
    node(out.id).backprop = [this, a, b, out, op, a_scalar, b_scalar, n]() {
      const Tensor& g = node(out.id).grad;
      if (node(a.id).requires_grad) {
        Tensor& ga = grad_buf(a.id);
        const Tensor& B2 = value(b);
        for (std::size_t i = 0; i < n; ++i) {
          double d = op == '*' ? g.data[i] * (b_scalar ? B2.data[0] : B2.data[i]) : g.data[i];
          ga.data[a_scalar ? 0 : i] += d;
        }
      }
      if (node(b.id).requires_grad) {
        Tensor& gb = grad_buf(b.id);
        const Tensor& A2 = value(a);
        for (std::size_t i = 0; i < n; ++i) {
          double d;
          if (op == '*')
            d = g.data[i] * (a_scalar ? A2.data[0] : A2.data[i]);
          else if (op == '-')
            d = -g.data[i];
          else
            d = g.data[i];
          gb.data[b_scalar ? 0 : i] += d;
        }
      }
    };
  }
  return out;
}

Var Tape::add(Var a, Var b) { return binary_ew(a, b, '+'); }
Var Tape::sub(Var a, Var b) { return binary_ew(a, b, '-'); }
Var Tape::mul(Var a, Var b) { return binary_ew(a, b, '*'); }

Var Tape::unary(Var a, std::function<double(double)> f, std::function<double(double, double)> dfdx_from_xy) {
  check_open();
  const Tensor& A = value(a);
  Tensor C(A.n_rows, A.n_cols);
  for (std::size_t i = 0; i < A.size(); ++i) C.data[i] = f(A.data[i]);
  bool rg = node(a.id).requires_grad;
  Var out = make(std::move(C), rg, nullptr);
  if (rg) {
    node(out.id).backprop = [this, a, out, dfdx_from_xy]() {
      const Tensor& g = node(out.id).grad;
      const Tensor& x = value(a);
      const Tensor& y = value(out);
      Tensor& ga = grad_buf(a.id);
      for (std::size_t i = 0; i < x.size(); ++i) ga.data[i] += g.data[i] * dfdx_from_xy(x.data[i], y.data[i]);
    };
  }
  return out;
}

Var Tape::scale(Var a, double c) {
  return unary(a, [c](double x) { return c * x; }, [c](double, double) { return c; });
}

Var Tape::shift(Var a, double c) {
  return unary(a, [c](double x) { return x + c; }, [](double, double) { return 1.0; });
}

Var Tape::sigmoid(Var a) {
  return unary(
      a,
      [](double x) { return x >= 0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x)); },
      [](double, double y) { return y * (1.0 - y); });
}

Var Tape::tanh_(Var a) {
  return unary(a, [](double x) { return std::tanh(x); }, [](double, double y) { return 1.0 - y * y; });
}

Var Tape::relu(Var a) {
  return unary(a, [](double x) { return x > 0 ? x : 0.0; }, [](double x, double) { return x > 0 ? 1.0 : 0.0; });
}

Var Tape::leaky_relu(Var a, double slope) {
  return unary(
      a, [slope](double x) { return x > 0 ? x : slope * x; },
      [slope](double x, double) { return x > 0 ? 1.0 : slope; });
}

Var Tape::elu(Var a) {
  return unary(
      a, [](double x) { return x > 0 ? x : std::expm1(x); },
      [](double x, double y) { return x > 0 ? 1.0 : y + 1.0; });
}

Var Tape::exp_(Var a) {
  return unary(a, [](double x) { return std::exp(x); }, [](double, double y) { return y; });
}

Var Tape::log_(Var a) {
  return unary(a, [](double x) { return std::log(x); }, [](double x, double) { return 1.0 / x; });
}

Var Tape::sqrt_(Var a) {
  return unary(a, [](double x) { return std::sqrt(x); }, [](double, double y) { return 0.5 / y; });
}

Var Tape::softmax(Var a, int axis) {
  check_open();
  const Tensor& A = value(a);
  if (axis != 0 && axis != 1) throw ContractError("softmax axis must be 0 or 1");
  const int along = axis == 1 ? A.n_cols : A.n_rows;
  const int slices = axis == 1 ? A.n_rows : A.n_cols;
  if (along == 0) throw ContractError("softmax over an empty axis");
  Tensor C(A.n_rows, A.n_cols);
  auto get = [axis](const Tensor& t, int s, int k) { return axis == 1 ? t.at(s, k) : t.at(k, s); };
  auto set = [axis](Tensor& t, int s, int k, double v) {
    if (axis == 1)
      t.at(s, k) = v;
    else
      t.at(k, s) = v;
  };
  for (int s = 0; s < slices; ++s) {
    double mx = get(A, s, 0);
    for (int k = 1; k < along; ++k) mx = std::max(mx, get(A, s, k));
    double z = 0.0;
    for (int k = 0; k < along; ++k) z += std::exp(get(A, s, k) - mx);
    for (int k = 0; k < along; ++k) set(C, s, k, std::exp(get(A, s, k) - mx) / z);
  }
  bool rg = node(a.id).requires_grad;
  Var out = make(std::move(C), rg, nullptr);
  if (rg) {
    node(out.id).backprop = [this, a, out, axis, along, slices, get, set]() {
      const Tensor& g = node(out.id).grad;
      const Tensor& y = value(out);
      Tensor& ga = grad_buf(a.id);
      for (int s = 0; s < slices; ++s) {
        double dot = 0.0;
        for (int k = 0; k < along; ++k) dot += get(g, s, k) * get(y, s, k);
        for (int k = 0; k < along; ++k) {
          double d = get(y, s, k) * (get(g, s, k) - dot);
          if (axis == 1)
            ga.at(s, k) += d;
          else
            ga.at(k, s) += d;
        }
      }
    };
  }
  return out;
}

Var Tape::concat(const std::vector<Var>& parts, int axis) {
  check_open();
  if (parts.empty()) throw ContractError("concat of zero tensors");
  if (axis != 0 && axis != 1) throw ContractError("concat axis must be 0 or 1");
  const Tensor& first = value(parts[0]);
  int total = 0;
  bool rg = false;
  for (Var p : parts) {
    const Tensor& t = value(p);
    if (axis == 0 ? t.n_cols != first.n_cols : t.n_rows != first.n_rows)
      throw ShapeError("concat non-axis dimension mismatch: " + first.shape_str() + " vs " + t.shape_str());
    total += axis == 0 ? t.n_rows : t.n_cols;
    rg = rg || node(p.id).requires_grad;
  }
  Tensor C = axis == 0 ? Tensor(total, first.n_cols) : Tensor(first.n_rows, total);
  int off = 0;
  for (Var p : parts) {
    const Tensor& t = value(p);
    if (axis == 0) {
      std::copy(t.data.begin(), t.data.end(), C.data.begin() + static_cast<std::size_t>(off) * first.n_cols);
      off += t.n_rows;
    } else {
      for (int i = 0; i < t.n_rows; ++i)
        for (int j = 0; j < t.n_cols; ++j) C.at(i, off + j) = t.at(i, j);
      off += t.n_cols;
    }
  }
  std::vector<Var> parts_copy = parts;
  Var out = make(std::move(C), rg, nullptr);
  if (rg) {
    node(out.id).backprop = [this, parts_copy, out, axis]() {
      const Tensor& g = node(out.id).grad;
      int off = 0;
      for (Var p : parts_copy) {
        const Tensor& t = value(p);
        if (node(p.id).requires_grad) {
          Tensor& gp = grad_buf(p.id);
          if (axis == 0) {
            for (int i = 0; i < t.n_rows; ++i)
              for (int j = 0; j < t.n_cols; ++j) gp.at(i, j) += g.at(off + i, j);
          } else {
            for (int i = 0; i < t.n_rows; ++i)
              for (int j = 0; j < t.n_cols; ++j) gp.at(i, j) += g.at(i, off + j);
          }
        }
        off += axis == 0 ? t.n_rows : t.n_cols;
      }
    };
  }
  return out;
}

Var Tape::slice_cols(Var a, int begin, int end) {
  check_open();
  const Tensor& A = value(a);
  if (begin < 0 || end > A.n_cols || begin >= end)
    throw ContractError("slice_cols range [" + std::to_string(begin) + "," + std::to_string(end) +
                        ") invalid for " + A.shape_str());
  Tensor C(A.n_rows, end - begin);
  for (int i = 0; i < A.n_rows; ++i)
    for (int j = begin; j < end; ++j) C.at(i, j - begin) = A.at(i, j);
  bool rg = node(a.id).requires_grad;
  Var out = make(std::move(C), rg, nullptr);
  if (rg) {
    node(out.id).backprop = [this, a, out, begin]() {
      const Tensor& g = node(out.id).grad;
      Tensor& ga = grad_buf(a.id);
      for (int i = 0; i < g.n_rows; ++i)
        for (int j = 0; j < g.n_cols; ++j) ga.at(i, begin + j) += g.at(i, j);
    };
  }
  return out;
}

Var Tape::row(Var a, int r) { return rows(a, {r}); }

Var Tape::rows(Var a, const std::vector<int>& idx) {
  check_open();
  const Tensor& A = value(a);
  for (int r : idx)
    if (r < 0 || r >= A.n_rows) throw ContractError("row index " + std::to_string(r) + " out of " + A.shape_str());
  Tensor C(static_cast<int>(idx.size()), A.n_cols);
  for (std::size_t i = 0; i < idx.size(); ++i)
    for (int j = 0; j < A.n_cols; ++j) C.at(static_cast<int>(i), j) = A.at(idx[i], j);
  bool rg = node(a.id).requires_grad;
  std::vector<int> idx_copy = idx;
  Var out = make(std::move(C), rg, nullptr);
  if (rg) {
    node(out.id).backprop = [this, a, out, idx_copy]() {
      const Tensor& g = node(out.id).grad;
      Tensor& ga = grad_buf(a.id);
      for (std::size_t i = 0; i < idx_copy.size(); ++i)
        for (int j = 0; j < g.n_cols; ++j) ga.at(idx_copy[i], j) += g.at(static_cast<int>(i), j);
    };
  }
  return out;
}

Var Tape::sum(Var a) {
  check_open();
  const Tensor& A = value(a);
  double s = 0.0;
  for (double v : A.data) s += v;
  bool rg = node(a.id).requires_grad;
  Var out = make(Tensor::scalar(s), rg, nullptr);
  if (rg) {
    node(out.id).backprop = [this, a, out]() {
      double g = node(out.id).grad.data[0];
      Tensor& ga = grad_buf(a.id);
      for (double& v : ga.data) v += g;
    };
  }
  return out;
}

Var Tape::mean_rows(Var a) {
  check_open();
  const Tensor& A = value(a);
  if (A.n_rows == 0) throw ContractError("mean_rows of empty tensor");
  Tensor C(1, A.n_cols);
  for (int i = 0; i < A.n_rows; ++i)
    for (int j = 0; j < A.n_cols; ++j) C.at(0, j) += A.at(i, j) / A.n_rows;
  bool rg = node(a.id).requires_grad;
  Var out = make(std::move(C), rg, nullptr);
  if (rg) {
    node(out.id).backprop = [this, a, out]() {
      const Tensor& g = node(out.id).grad;
      const Tensor& A2 = value(a);
      Tensor& ga = grad_buf(a.id);
      for (int i = 0; i < A2.n_rows; ++i)
        for (int j = 0; j < A2.n_cols; ++j) ga.at(i, j) += g.at(0, j) / A2.n_rows;
    };
  }
  return out;
}

Var Tape::vmax(const std::vector<Var>& scalars) {
  check_open();
  if (scalars.empty()) throw ContractError("vmax of zero scalars");
  int best = 0;
  double bestv = value(scalars[0]).data[0];
  bool rg = false;
  for (std::size_t i = 0; i < scalars.size(); ++i) {
    const Tensor& t = value(scalars[i]);
    if (!t.is_scalar()) throw ShapeError("vmax expects 1x1 scalars, got " + t.shape_str());
    rg = rg || node(scalars[i].id).requires_grad;
    if (t.data[0] > bestv) {
      bestv = t.data[0];
      best = static_cast<int>(i);
    }
  }
  Var winner = scalars[static_cast<std::size_t>(best)];
  Var out = make(Tensor::scalar(bestv), rg, nullptr);
  if (rg) {
    node(out.id).backprop = [this, winner, out]() {
      if (node(winner.id).requires_grad || node(winner.id).backprop)
        grad_buf(winner.id).data[0] += node(out.id).grad.data[0];
    };
  }
  return out;
}

Var Tape::stack_scalars(const std::vector<Var>& scalars) {
  check_open();
  if (scalars.empty()) throw ContractError("stack_scalars of zero scalars");
  for (Var s : scalars)
    if (!value(s).is_scalar()) throw ShapeError("stack_scalars expects 1x1 scalars");
  return concat(scalars, 1);
}

void Tape::backward(Var loss) {
  if (backward_done_) throw ContractError("backward called twice on one tape");
  const Tensor& L = value(loss);
  if (!L.is_scalar()) throw ContractError("backward requires a scalar loss, got " + L.shape_str());
  backward_done_ = true;
  grad_buf(loss.id).data[0] = 1.0;
  for (int id = loss.id; id >= 0; --id) {
    Node& n = node(id);
    if (n.grad_alloc && n.backprop) n.backprop();
  }
}

Tensor& Optimizer::state(std::vector<std::pair<std::string, Tensor>>& store, const std::string& name,
                         const Tensor& like) {
  for (auto& [k, t] : store)
    if (k == name) return t;
  store.emplace_back(name, Tensor(like.n_rows, like.n_cols));
  return store.back().second;
}

void Optimizer::step(std::vector<std::pair<std::string, Tensor*>> params,
                     const std::vector<std::pair<std::string, const Tensor*>>& grads) {
  ++t_;
  for (auto& [name, p] : params) {
    const Tensor* g = nullptr;
    for (auto& [gn, gt] : grads)
      if (gn == name) g = gt;
    if (!g) throw ContractError("missing gradient for parameter: " + name);
    if (!p->same_shape(*g))
      throw ShapeError("gradient shape " + g->shape_str() + " mismatches parameter " + name + " " + p->shape_str());
    if (cfg_.lr == 0.0) continue;
    if (cfg_.kind == OptimConfig::Kind::Sgd) {
      for (std::size_t i = 0; i < p->size(); ++i) p->data[i] -= cfg_.lr * g->data[i];
    } else {
      Tensor& m = state(m_, name, *p);
      Tensor& v = state(v_, name, *p);
      const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
      const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
      for (std::size_t i = 0; i < p->size(); ++i) {
        m.data[i] = cfg_.beta1 * m.data[i] + (1.0 - cfg_.beta1) * g->data[i];
        v.data[i] = cfg_.beta2 * v.data[i] + (1.0 - cfg_.beta2) * g->data[i] * g->data[i];
        p->data[i] -= cfg_.lr * (m.data[i] / bc1) / (std::sqrt(v.data[i] / bc2) + cfg_.eps);
      }
    }
  }
}

}  // namespace medkg
