#ifndef VLNLAB_TRANSLATOR_TRANSLATOR_HPP
#define VLNLAB_TRANSLATOR_TRANSLATOR_HPP

#include <span>
#include <string>
#include <vector>

#include "numcore/lstm.hpp"
#include "numcore/tape.hpp"
#include "syfis/records.hpp"

namespace vlnlab::trans {

using num::Tape;
using num::Tensor;
using num::Var;

struct TranslatorConfig {
  int vocab = 0;      // tokenizer size
  int cand_dim = 0;   // candidate input width (labels + orientation + stop)
  int embed_dim = 32;
  int hidden = 32;    // LSTM + attention width; must equal the agent text dim
  int mlp_hidden = 64;
  double margin = 0.5;
  int l_cap = 64;
  // Realizes the paper equation's literal second distance term on generated
  // token distributions instead of encoder states.
  bool dsl_literal_generated = false;
};

// Encodes sub-instruction text against the current candidate views, emits
// per-token distributions, and predicts the per-token split mask. Parameters
// live under "translator." in the bound store.
class TranslatorModel {
 public:
  // Creates fresh parameters.
  TranslatorModel(num::ParameterStore& store, const TranslatorConfig& config,
                  Rng& rng);
  // Binds to parameters that already exist in the store (checkpoint load).
  static TranslatorModel attach(num::ParameterStore& store,
                                const TranslatorConfig& config);

  const TranslatorConfig& config() const { return config_; }

  // Soft attention encode: hidden states of the text LSTM attend over the
  // vision LSTM outputs; every output row is a convex combination of the
  // candidate encodings. The vision cell runs one step per candidate from a
  // zero state, so candidate encodings are permutation-equivariant.
  // `out_attention` / `out_vision` expose the attention matrix (L x n) and
  // candidate encodings (n x h) when non-null.
  Var encode(Tape& tape, std::span<const int> tokens,
             const Tensor& candidate_features, Var* out_attention = nullptr,
             Var* out_vision = nullptr) const;

  // Row-wise token distributions from the encoded representation.
  Var generate_tokens(Tape& tape, Var encoded) const;

  // Per-token scalar gate in (0,1).
  Var split_mask(Tape& tape, Var encoded) const;

  // X'' = mask ⊙ X, broadcast per row.
  static Var attended_instruction(Tape& tape, Var mask, Var text);

  // Cross-entropy of `dists` rows against target tokens; PAD positions are
  // excluded from the mean.
  static Var loss_sig(Tape& tape, Var dists, std::span<const int> targets,
                      int pad_id);

  // Triplet hinge on pooled encodings with the configured margin.
  Var loss_dsl(Tape& tape, std::span<const int> anchor,
               std::span<const int> positive, std::span<const int> negative,
               const Tensor& candidate_features) const;

 private:
  TranslatorModel(num::ParameterStore* store, const TranslatorConfig& config);
  Var mlp(Tape& tape, Var x, const std::string& prefix) const;

  num::ParameterStore* store_;
  TranslatorConfig config_;
  num::LstmSpec text_lstm_;
  num::LstmSpec vision_lstm_;

  friend Var dsl_hinge(Tape&, Var, Var, Var, double);
};

// max(D(a,p) - D(a,n) + m, 0) on mean-pooled rows.
Var dsl_hinge(Tape& tape, Var enc_anchor, Var enc_positive, Var enc_negative,
              double margin);

// One pretraining example: token sequences plus the frozen candidate input
// matrix for the record's step.
struct PretrainExample {
  std::vector<int> positive;
  std::vector<int> anchor;
  std::vector<std::vector<int>> negatives;  // exactly 3
  Tensor candidate_features;
};

struct PretrainLosses {
  double total = 0.0;
  double sig = 0.0;
  double dsl = 0.0;
};

// Eq-8-shaped combined step: alpha1 * L_SIG + alpha2 * mean-of-3-triplets
// L_DSL, one AdamW update over the translator parameters.
PretrainLosses pretrain_step(num::ParameterStore& store,
                             const TranslatorModel& model,
                             std::span<const PretrainExample> batch,
                             double alpha1, double alpha2,
                             const num::AdamConfig& adam);

// Argmax decode of the generated distributions.
std::vector<int> argmax_decode(const Tensor& dists);

}  // namespace vlnlab::trans

#endif  // VLNLAB_TRANSLATOR_TRANSLATOR_HPP
