#ifndef MEDKG_TENSOR_HPP
#define MEDKG_TENSOR_HPP

#include <functional>
#include <string>
#include <vector>

#include "medkg/common.hpp"

namespace medkg {

// Dense row-major 2-d tensor of doubles. Vectors are 1xN.
struct Tensor {
  int n_rows = 0;
  int n_cols = 0;
  std::vector<double> data;

  Tensor() = default;
  Tensor(int rows, int cols) : n_rows(rows), n_cols(cols), data(static_cast<std::size_t>(rows) * cols, 0.0) {
    if (rows < 0 || cols < 0) throw ShapeError("negative tensor dimension");
  }
  Tensor(int rows, int cols, std::vector<double> values) : n_rows(rows), n_cols(cols), data(std::move(values)) {
    if (static_cast<std::size_t>(rows) * cols != data.size())
      throw ShapeError("tensor value count does not match shape " + shape_str());
  }

  static Tensor scalar(double v) { return Tensor(1, 1, {v}); }
  static Tensor zeros(int rows, int cols) { return Tensor(rows, cols); }
  static Tensor randn(int rows, int cols, double stddev, Rng& rng);

  double& at(int r, int c) { return data[static_cast<std::size_t>(r) * n_cols + c]; }
  double at(int r, int c) const { return data[static_cast<std::size_t>(r) * n_cols + c]; }
  std::size_t size() const { return data.size(); }
  bool is_scalar() const { return n_rows == 1 && n_cols == 1; }
  bool same_shape(const Tensor& o) const { return n_rows == o.n_rows && n_cols == o.n_cols; }
  std::string shape_str() const;
  bool all_finite() const;
};

struct Var {
  int id = -1;
  bool valid() const { return id >= 0; }
};

// Dynamic tape: records every primitive op at execution time and replays
// them in exact reverse order on backward(). One tape per thread of
// execution; tensors are immutable once recorded.
class Tape {
 public:
  Var input(Tensor value, bool requires_grad = false);

  Var matmul(Var a, Var b);
  Var transpose(Var a);
  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  Var mul(Var a, Var b);
  Var scale(Var a, double c);
  Var shift(Var a, double c);
  Var sigmoid(Var a);
  Var tanh_(Var a);
  Var relu(Var a);
  Var leaky_relu(Var a, double slope);
  Var elu(Var a);
  Var exp_(Var a);
  Var log_(Var a);
  Var sqrt_(Var a);
  // axis=1 normalizes each row, axis=0 each column
  Var softmax(Var a, int axis);
  // axis 0 stacks rows, axis 1 stacks columns
  Var concat(const std::vector<Var>& parts, int axis);
  Var slice_cols(Var a, int begin, int end);
  Var row(Var a, int r);
  // row gather; backward scatter-adds (repeated indices accumulate)
  Var rows(Var a, const std::vector<int>& idx);
  Var sum(Var a);
  Var mean_rows(Var a);
  // max of 1x1 scalars; gradient routed to the first argmax
  Var vmax(const std::vector<Var>& scalars);
  Var stack_scalars(const std::vector<Var>& scalars);

  void backward(Var loss);
  const Tensor& value(Var v) const { return node(v.id).value; }
  const Tensor& grad(Var v) const;
  std::size_t num_ops() const { return nodes_.size(); }
  bool backward_done() const { return backward_done_; }

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    bool requires_grad = false;
    bool grad_alloc = false;
    std::function<void()> backprop;  // empty for leaves
  };

  std::vector<Node> nodes_;
  bool backward_done_ = false;

  Node& node(int id) { return nodes_[static_cast<std::size_t>(id)]; }
  const Node& node(int id) const { return nodes_[static_cast<std::size_t>(id)]; }
  Var make(Tensor value, bool requires_grad, std::function<void()> backprop);
  Tensor& grad_buf(int id);
  void check_open() const;
  Var unary(Var a, std::function<double(double)> f, std::function<double(double, double)> dfdx_from_xy);
  Var binary_ew(Var a, Var b, char op);
};

// Parameter update rules. Both leave parameters untouched at lr=0.
struct OptimConfig {
  enum class Kind { Sgd, Adam };
  Kind kind = Kind::Adam;
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

class Optimizer {
 public:
  explicit Optimizer(OptimConfig cfg) : cfg_(cfg) {}

  // Applies one update to each named parameter. Every parameter passed in
  // must have a matching gradient entry.
  void step(std::vector<std::pair<std::string, Tensor*>> params,
            const std::vector<std::pair<std::string, const Tensor*>>& grads);

 private:
  OptimConfig cfg_;
  std::int64_t t_ = 0;
  std::vector<std::pair<std::string, Tensor>> m_, v_;
  Tensor& state(std::vector<std::pair<std::string, Tensor>>& store, const std::string& name, const Tensor& like);
};

}  // namespace medkg

#endif
