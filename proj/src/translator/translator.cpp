#include "translator/translator.hpp"

#include <array>

namespace vlnlab::trans {

TranslatorModel::TranslatorModel(num::ParameterStore* store,
                                 const TranslatorConfig& config)
    : store_(store), config_(config) {
  if (config_.vocab < 2 || config_.cand_dim < 1)
    throw InvalidParameterError("translator config missing vocab/cand_dim");
  text_lstm_ = {"translator.text_lstm", config_.embed_dim, config_.hidden};
  vision_lstm_ = {"translator.vision_lstm", config_.cand_dim, config_.hidden};
}

TranslatorModel::TranslatorModel(num::ParameterStore& store,
                                 const TranslatorConfig& config, Rng& rng)
    : TranslatorModel(&store, config) {
  store.create_xavier("translator.embed", config_.vocab, config_.embed_dim,
                      rng);
  num::init_lstm(store, text_lstm_, rng);
  num::init_lstm(store, vision_lstm_, rng);
  store.create_xavier("translator.attn.W", config_.hidden, config_.hidden,
                      rng);
  store.create_xavier("translator.gen.W1", config_.hidden, config_.mlp_hidden,
                      rng);
  store.create("translator.gen.b1", 1, config_.mlp_hidden);
  store.create_xavier("translator.gen.W2", config_.mlp_hidden, config_.vocab,
                      rng);
  store.create("translator.gen.b2", 1, config_.vocab);
  store.create_xavier("translator.split.W1", config_.hidden,
                      config_.mlp_hidden, rng);
  store.create("translator.split.b1", 1, config_.mlp_hidden);
  store.create_xavier("translator.split.W2", config_.mlp_hidden, 1, rng);
  store.create("translator.split.b2", 1, 1);
}

TranslatorModel TranslatorModel::attach(num::ParameterStore& store,
                                        const TranslatorConfig& config) {
  TranslatorModel m(&store, config);
  for (const char* name :
       {"translator.embed", "translator.attn.W", "translator.gen.W1",
        "translator.gen.W2", "translator.split.W1", "translator.split.W2"})
    if (!store.has(name))
      throw NotFoundError(std::string("translator parameter missing: ") + name);
  return m;
}

Var TranslatorModel::mlp(Tape& tape, Var x, const std::string& prefix) const {
  const int rows = tape.val(x).rows();
  const auto add_bias = [&](Var v, const std::string& name) {
    std::vector<Var> bias_rows(rows, tape.param(name));
    return tape.add(v, tape.concat_rows(bias_rows));
  };
  Var hidden = tape.tanh_op(
      add_bias(tape.matmul(x, tape.param(prefix + ".W1")), prefix + ".b1"));
  if (store_->has(prefix + ".W1b"))
    hidden = tape.tanh_op(add_bias(
        tape.matmul(hidden, tape.param(prefix + ".W1b")), prefix + ".b1b"));
  return add_bias(tape.matmul(hidden, tape.param(prefix + ".W2")),
                  prefix + ".b2");
}

Var TranslatorModel::encode(Tape& tape, std::span<const int> tokens,
                            const Tensor& candidate_features,
                            Var* out_attention, Var* out_vision) const {
  if (tokens.empty()) throw InvalidInputError("encode: empty token sequence");
  if (static_cast<int>(tokens.size()) > config_.l_cap)
    throw InvalidInputError("encode: sequence longer than cap " +
                            std::to_string(config_.l_cap));
  if (candidate_features.rows() < 1)
    throw InvalidInputError("encode: needs at least one candidate");
  if (candidate_features.cols() != config_.cand_dim)
    throw ShapeError("encode: candidate width " +
                     std::to_string(candidate_features.cols()) +
                     " != configured " + std::to_string(config_.cand_dim));

  Var text = tape.embedding(tape.param("translator.embed"),
                            std::vector<int>(tokens.begin(), tokens.end()));
  Var xt = num::lstm_sequence(tape, text_lstm_, text);  // L x h

  // One cell step per candidate, each from the zero state: candidates are a
  // set, not a sequence.
  Var cand = tape.constant(candidate_features);
  std::vector<Var> vrows;
  for (int i = 0; i < candidate_features.rows(); ++i) {
    const auto state =
        num::lstm_step(tape, vision_lstm_, tape.slice_rows(cand, i, i + 1),
                       num::lstm_zero_state(tape, config_.hidden));
    vrows.push_back(state.h);
  }
  Var vt = vrows.size() == 1 ? vrows[0] : tape.concat_rows(vrows);  // n x h

  Var scores = tape.matmul(tape.matmul(xt, tape.param("translator.attn.W")),
                           tape.transpose(vt));  // L x n
  Var attn = tape.softmax_rows(scores);
  if (out_attention) *out_attention = attn;
  if (out_vision) *out_vision = vt;
  return tape.matmul(attn, vt);  // L x h
}

Var TranslatorModel::generate_tokens(Tape& tape, Var encoded) const {
  return tape.softmax_rows(mlp(tape, encoded, "translator.gen"));
}

Var TranslatorModel::split_mask(Tape& tape, Var encoded) const {
  return tape.sigmoid(mlp(tape, encoded, "translator.split"));
}

Var TranslatorModel::attended_instruction(Tape& tape, Var mask, Var text) {
  return tape.row_scale(text, mask);
}

Var TranslatorModel::loss_sig(Tape& tape, Var dists,
                              std::span<const int> targets, int pad_id) {
  const Tensor& d = tape.val(dists);
  if (d.rows() != static_cast<int>(targets.size()))
    throw ShapeError("loss_sig: " + std::to_string(d.rows()) +
                     " rows vs " + std::to_string(targets.size()) +
                     " target tokens");
  Tensor onehot(d.rows(), d.cols());
  int effective = 0;
  for (int t = 0; t < d.rows(); ++t) {
    if (targets[t] == pad_id) continue;
    if (targets[t] < 0 || targets[t] >= d.cols())
      throw IndexError("loss_sig: target token out of vocabulary");
    onehot.at(t, targets[t]) = 1.0;
    ++effective;
  }
  if (effective == 0)
    throw InvalidInputError("loss_sig: no non-pad target positions");
  Var picked = tape.mul(tape.log_op(dists), tape.constant(std::move(onehot)));
  return tape.scale(tape.sum(picked), -1.0 / effective);
}

Var dsl_hinge(Tape& tape, Var enc_anchor, Var enc_positive, Var enc_negative,
              double margin) {
  Var d_ap = tape.pairwise_distance(enc_anchor, enc_positive);
  Var d_an = tape.pairwise_distance(enc_anchor, enc_negative);
  return tape.relu(tape.add_scalar(tape.sub(d_ap, d_an), margin));
}

Var TranslatorModel::loss_dsl(Tape& tape, std::span<const int> anchor,
                              std::span<const int> positive,
                              std::span<const int> negative,
                              const Tensor& candidate_features) const {
  Var ea = encode(tape, anchor, candidate_features);
  Var ep = encode(tape, positive, candidate_features);
  Var en = encode(tape, negative, candidate_features);
  if (config_.dsl_literal_generated) {
    ea = generate_tokens(tape, ea);
    ep = generate_tokens(tape, ep);
    en = generate_tokens(tape, en);
  }
  return dsl_hinge(tape, ea, ep, en, config_.margin);
}

PretrainLosses pretrain_step(num::ParameterStore& store,
                             const TranslatorModel& model,
                             std::span<const PretrainExample> batch,
                             double alpha1, double alpha2,
                             const num::AdamConfig& adam) {
  if (batch.empty()) throw InvalidInputError("pretrain_step: empty batch");
  Tape tape(&store);
  std::vector<Var> sig_terms, dsl_terms;
  for (const auto& ex : batch) {
    Var enc_p = model.encode(tape, ex.positive, ex.candidate_features);
    Var dists = model.generate_tokens(tape, enc_p);
    sig_terms.push_back(TranslatorModel::loss_sig(tape, dists, ex.positive,
                                                  /*pad_id=*/0));
    if (ex.negatives.size() != 3)
      throw InvalidInputError("pretrain example needs exactly 3 negatives");
    Var enc_a = model.encode(tape, ex.anchor, ex.candidate_features);
    Var ea = enc_a, ep = enc_p;
    if (model.config().dsl_literal_generated) {
      ea = model.generate_tokens(tape, ea);
      ep = dists;
    }
    std::vector<Var> triplets;
    for (const auto& neg : ex.negatives) {
      Var en = model.encode(tape, neg, ex.candidate_features);
      if (model.config().dsl_literal_generated)
        en = model.generate_tokens(tape, en);
      triplets.push_back(dsl_hinge(tape, ea, ep, en, model.config().margin));
    }
    dsl_terms.push_back(tape.mean(tape.concat_rows(triplets)));
  }
  Var sig = tape.mean(tape.concat_rows(sig_terms));
  Var dsl = tape.mean(tape.concat_rows(dsl_terms));
  Var total = tape.add(tape.scale(sig, alpha1), tape.scale(dsl, alpha2));

  PretrainLosses out;
  out.total = tape.scalar_of(total);
  out.sig = tape.scalar_of(sig);
  out.dsl = tape.scalar_of(dsl);
  tape.backward(total);
  store.adamw_update(adam);
  return out;
}

std::vector<int> argmax_decode(const Tensor& dists) {
  std::vector<int> out(dists.rows());
  for (int t = 0; t < dists.rows(); ++t) {
    int best = 0;
    for (int c = 1; c < dists.cols(); ++c)
      if (dists.at(t, c) > dists.at(t, best)) best = c;
    out[t] = best;
  }
  return out;
}

}  // namespace vlnlab::trans
