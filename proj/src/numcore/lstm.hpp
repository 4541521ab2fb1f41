#ifndef VLNLAB_NUMCORE_LSTM_HPP
#define VLNLAB_NUMCORE_LSTM_HPP

#include <string>

#include "numcore/tape.hpp"

namespace vlnlab::num {

// Standard LSTM cell. Parameters live in a ParameterStore under
// "<prefix>.W" (in x 4h), "<prefix>.U" (h x 4h), "<prefix>.b" (1 x 4h).
// Gate order along the 4h axis: input, forget, cell, output.
struct LstmSpec {
  std::string prefix;
  int in_dim = 0;
  int hidden = 0;
};

void init_lstm(ParameterStore& store, const LstmSpec& spec, Rng& rng);

struct LstmState {
  Var h, c;
};

LstmState lstm_zero_state(Tape& tape, int hidden);

// One step: input x is 1 x in_dim.
LstmState lstm_step(Tape& tape, const LstmSpec& spec, Var x, LstmState state);

// Runs the cell over the rows of `inputs` (L x in_dim) from a zero state and
// returns the stacked hidden states (L x hidden).
Var lstm_sequence(Tape& tape, const LstmSpec& spec, Var inputs);

}  // namespace vlnlab::num

#endif  // VLNLAB_NUMCORE_LSTM_HPP
