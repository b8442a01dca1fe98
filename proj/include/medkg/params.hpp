#ifndef MEDKG_PARAMS_HPP
#define MEDKG_PARAMS_HPP

#include <map>
#include <string>

#include "medkg/tensor.hpp"

namespace medkg {

// Named trainable tensors. Map order keeps every iteration deterministic.
struct ParamStore {
  std::map<std::string, Tensor> tensors;

  Tensor& create(const std::string& name, int rows, int cols, double stddev, Rng& rng) {
    if (tensors.count(name)) throw ContractError("duplicate parameter: " + name);
    return tensors[name] = Tensor::randn(rows, cols, stddev, rng);
  }
  Tensor& at(const std::string& name) {
    auto it = tensors.find(name);
    if (it == tensors.end()) throw ContractError("unknown parameter: " + name);
    return it->second;
  }
  const Tensor& at(const std::string& name) const {
    auto it = tensors.find(name);
    if (it == tensors.end()) throw ContractError("unknown parameter: " + name);
    return it->second;
  }
};

// Registers parameters on a tape on first use, so gradients exist exactly
// for the parameters a forward pass touched.
class BoundParams {
 public:
  BoundParams(Tape& tape, ParamStore& store) : tape_(tape), store_(store) {}

  Var operator()(const std::string& name) {
    auto it = vars_.find(name);
    if (it != vars_.end()) return it->second;
    Var v = tape_.input(store_.at(name), /*requires_grad=*/true);
    vars_[name] = v;
    return v;
  }

  const std::map<std::string, Var>& used() const { return vars_; }
  Tape& tape() { return tape_; }

 private:
  Tape& tape_;
  ParamStore& store_;
  std::map<std::string, Var> vars_;
};

// Bidirectional LSTM encoder; out_dim is split evenly across directions.
void init_bilstm(ParamStore& store, const std::string& prefix, int in_dim, int out_dim, Rng& rng);
// seq: T x in_dim -> T x out_dim
Var bilstm(BoundParams& bp, const std::string& prefix, Var seq, int out_dim);

// Two-layer perceptron with tanh hidden activation and scalar output.
void init_mlp(ParamStore& store, const std::string& prefix, int in_dim, int hidden_dim, Rng& rng);
Var mlp_scalar(BoundParams& bp, const std::string& prefix, Var x);

}  // namespace medkg

#endif
