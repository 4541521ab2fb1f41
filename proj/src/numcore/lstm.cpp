#include "numcore/lstm.hpp"

#include <vector>

namespace vlnlab::num {

void init_lstm(ParameterStore& store, const LstmSpec& spec, Rng& rng) {
  store.create_xavier(spec.prefix + ".W", spec.in_dim, 4 * spec.hidden, rng);
  store.create_xavier(spec.prefix + ".U", spec.hidden, 4 * spec.hidden, rng);
  store.create(spec.prefix + ".b", 1, 4 * spec.hidden);
}

LstmState lstm_zero_state(Tape& tape, int hidden) {
  return {tape.constant(Tensor(1, hidden)), tape.constant(Tensor(1, hidden))};
}

LstmState lstm_step(Tape& tape, const LstmSpec& spec, Var x, LstmState state) {
  const int h = spec.hidden;
  Var gates = tape.add(
      tape.add(tape.matmul(x, tape.param(spec.prefix + ".W")),
               tape.matmul(state.h, tape.param(spec.prefix + ".U"))),
      tape.param(spec.prefix + ".b"));
  Var i_gate = tape.sigmoid(tape.slice_cols(gates, 0, h));
  Var f_gate = tape.sigmoid(tape.slice_cols(gates, h, 2 * h));
  Var g_cell = tape.tanh_op(tape.slice_cols(gates, 2 * h, 3 * h));
  Var o_gate = tape.sigmoid(tape.slice_cols(gates, 3 * h, 4 * h));
  Var c_next = tape.add(tape.mul(f_gate, state.c), tape.mul(i_gate, g_cell));
  Var h_next = tape.mul(o_gate, tape.tanh_op(c_next));
  return {h_next, c_next};
}

Var lstm_sequence(Tape& tape, const LstmSpec& spec, Var inputs) {
  const int rows = tape.val(inputs).rows();
  if (rows == 0) throw InvalidInputError("lstm_sequence: empty input");
  LstmState state = lstm_zero_state(tape, spec.hidden);
  std::vector<Var> hs;
  hs.reserve(rows);
  for (int t = 0; t < rows; ++t) {
    Var x = tape.slice_rows(inputs, t, t + 1);
    state = lstm_step(tape, spec, x, state);
    hs.push_back(state.h);
  }
  if (hs.size() == 1) return hs[0];
  return tape.concat_rows(hs);
}

}  // namespace vlnlab::num
