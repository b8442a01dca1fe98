#include "medkg/params.hpp"

#include <cmath>

namespace medkg {

void init_bilstm(ParamStore& store, const std::string& prefix, int in_dim, int out_dim, Rng& rng) {
  if (out_dim % 2 != 0) throw ContractError("bilstm output dim must be even: " + prefix);
  const int u = out_dim / 2;
  const double sx = 1.0 / std::sqrt(static_cast<double>(in_dim));
  const double sh = 1.0 / std::sqrt(static_cast<double>(u));
  for (const char* dir : {"fw", "bw"}) {
    store.create(prefix + "." + dir + ".Wx", in_dim, 4 * u, sx, rng);
    store.create(prefix + "." + dir + ".Wh", u, 4 * u, sh, rng);
    store.create(prefix + "." + dir + ".b", 1, 4 * u, 0.0, rng);
  }
}

namespace {

std::vector<Var> lstm_direction(BoundParams& bp, const std::string& prefix, Var seq, int u, bool reverse) {
  Tape& tape = bp.tape();
  Var Wx = bp(prefix + ".Wx");
  Var Wh = bp(prefix + ".Wh");
  Var b = bp(prefix + ".b");
  const int T = tape.value(seq).n_rows;
  Var h = tape.input(Tensor(1, u));
  Var c = tape.input(Tensor(1, u));
  std::vector<Var> states(static_cast<std::size_t>(T));
  for (int step = 0; step < T; ++step) {
    int t = reverse ? T - 1 - step : step;
    Var x = tape.row(seq, t);
    Var z = tape.add(tape.add(tape.matmul(x, Wx), tape.matmul(h, Wh)), b);
    Var i = tape.sigmoid(tape.slice_cols(z, 0, u));
    Var f = tape.sigmoid(tape.slice_cols(z, u, 2 * u));
    Var g = tape.tanh_(tape.slice_cols(z, 2 * u, 3 * u));
    Var o = tape.sigmoid(tape.slice_cols(z, 3 * u, 4 * u));
    c = tape.add(tape.mul(f, c), tape.mul(i, g));
    h = tape.mul(o, tape.tanh_(c));
    states[static_cast<std::size_t>(t)] = h;
  }
  return states;
}

}  // namespace

Var bilstm(BoundParams& bp, const std::string& prefix, Var seq, int out_dim) {
  Tape& tape = bp.tape();
  const int T = tape.value(seq).n_rows;
  if (T == 0) throw ContractError("bilstm over an empty sequence: " + prefix);
  const int u = out_dim / 2;
  auto fw = lstm_direction(bp, prefix + ".fw", seq, u, false);
  auto bw = lstm_direction(bp, prefix + ".bw", seq, u, true);
  std::vector<Var> rows(static_cast<std::size_t>(T));
  for (int t = 0; t < T; ++t)
    rows[static_cast<std::size_t>(t)] = tape.concat({fw[static_cast<std::size_t>(t)], bw[static_cast<std::size_t>(t)]}, 1);
  return T == 1 ? rows[0] : tape.concat(rows, 0);
}

void init_mlp(ParamStore& store, const std::string& prefix, int in_dim, int hidden_dim, Rng& rng) {
  const double s1 = 1.0 / std::sqrt(static_cast<double>(in_dim));
  const double s2 = 1.0 / std::sqrt(static_cast<double>(hidden_dim));
  store.create(prefix + ".W1", in_dim, hidden_dim, s1, rng);
  store.create(prefix + ".b1", 1, hidden_dim, 0.0, rng);
  store.create(prefix + ".W2", hidden_dim, 1, s2, rng);
  store.create(prefix + ".b2", 1, 1, 0.0, rng);
}

Var mlp_scalar(BoundParams& bp, const std::string& prefix, Var x) {
  Tape& tape = bp.tape();
  Var hid = tape.tanh_(tape.add(tape.matmul(x, bp(prefix + ".W1")), bp(prefix + ".b1")));
  return tape.add(tape.matmul(hid, bp(prefix + ".W2")), bp(prefix + ".b2"));
}

}  // namespace medkg
