#include <doctest.h>

#include <cmath>
#include <sstream>

#include "expcli/pipeline.hpp"
#include "fd_check.hpp"
#include "translator/translator.hpp"

using namespace vlnlab;
using namespace vlnlab::trans;
using vlnlab::testing::fd_check;
using vlnlab::testing::random_tensor;

namespace {

// Tiny synthetic setup: the translator only needs token ids < vocab and a
// candidate matrix of the configured width.
struct Tiny {
  num::ParameterStore store;
  TranslatorConfig config;
  Rng rng{4242};

  explicit Tiny(int vocab = 12, int cand_dim = 7, int dim = 8) {
    config.vocab = vocab;
    config.cand_dim = cand_dim;
    config.embed_dim = dim;
    config.hidden = dim;
    config.mlp_hidden = dim;
  }

  TranslatorModel make() { return TranslatorModel(store, config, rng); }
};

}  // namespace

TEST_CASE("encode: single candidate forces every row to that encoding") {
  Tiny tiny;
  auto model = tiny.make();
  num::Tensor cand = random_tensor(1, tiny.config.cand_dim, tiny.rng);
  num::Tape tape(&tiny.store);
  Var vt;
  Var enc = model.encode(tape, std::vector<int>{1, 2, 3, 4}, cand, nullptr,
                         &vt);
  const auto& e = tape.val(enc);
  const auto& v = tape.val(vt);
  for (int t = 0; t < e.rows(); ++t)
    for (int c = 0; c < e.cols(); ++c)
      CHECK(e.at(t, c) == doctest::Approx(v.at(0, c)).epsilon(1e-12));

  // Output is text-independent with one candidate.
  Var enc2 = model.encode(tape, std::vector<int>{5, 5}, cand);
  for (int c = 0; c < e.cols(); ++c)
    CHECK(tape.val(enc2).at(0, c) == doctest::Approx(e.at(0, c)));
}

TEST_CASE("encode: attention rows sum to 1, rows stay in the convex hull") {
  Tiny tiny;
  auto model = tiny.make();
  num::Tensor cand = random_tensor(4, tiny.config.cand_dim, tiny.rng);
  num::Tape tape(&tiny.store);
  Var attn, vt;
  Var enc = model.encode(tape, std::vector<int>{1, 2, 3, 4, 5}, cand, &attn,
                         &vt);
  const auto& a = tape.val(attn);
  for (int t = 0; t < a.rows(); ++t) {
    double sum = 0.0;
    for (int j = 0; j < a.cols(); ++j) sum += a.at(t, j);
    CHECK(std::abs(sum - 1.0) < 1e-9);
  }
  const auto& e = tape.val(enc);
  const auto& v = tape.val(vt);
  for (int c = 0; c < e.cols(); ++c) {
    double lo = v.at(0, c), hi = v.at(0, c);
    for (int j = 1; j < v.rows(); ++j) {
      lo = std::min(lo, v.at(j, c));
      hi = std::max(hi, v.at(j, c));
    }
    for (int t = 0; t < e.rows(); ++t) {
      CHECK(e.at(t, c) >= lo - 1e-12);
      CHECK(e.at(t, c) <= hi + 1e-12);
    }
  }
}

TEST_CASE("encode: W = 0 gives the candidate mean, permutation-invariant") {
  Tiny tiny;
  auto model = tiny.make();
  tiny.store.value("translator.attn.W").fill(0.0);
  num::Tensor cand = random_tensor(3, tiny.config.cand_dim, tiny.rng);
  num::Tensor permuted(3, tiny.config.cand_dim);
  const int perm[3] = {2, 0, 1};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < tiny.config.cand_dim; ++j)
      permuted.at(i, j) = cand.at(perm[i], j);

  num::Tape tape(&tiny.store);
  const std::vector<int> tokens{1, 2, 3};
  const auto& a = tape.val(model.encode(tape, tokens, cand));
  const auto& b = tape.val(model.encode(tape, tokens, permuted));
  for (int t = 0; t < a.rows(); ++t)
    for (int c = 0; c < a.cols(); ++c)
      CHECK(a.at(t, c) == doctest::Approx(b.at(t, c)).epsilon(1e-12));
}

TEST_CASE("encode rejects bad inputs") {
  Tiny tiny;
  auto model = tiny.make();
  num::Tape tape(&tiny.store);
  num::Tensor cand = random_tensor(2, tiny.config.cand_dim, tiny.rng);
  CHECK_THROWS_AS(model.encode(tape, std::vector<int>{}, cand),
                  InvalidInputError);
  num::Tensor bad = random_tensor(2, tiny.config.cand_dim + 1, tiny.rng);
  CHECK_THROWS_AS(model.encode(tape, std::vector<int>{1}, bad), ShapeError);
}

TEST_CASE("generate_tokens: simplex rows; zero weights give uniform") {
  Tiny tiny;
  auto model = tiny.make();
  num::Tape tape(&tiny.store);
  num::Tensor cand = random_tensor(3, tiny.config.cand_dim, tiny.rng);
  Var enc = model.encode(tape, std::vector<int>{1, 2, 3}, cand);
  const auto& dists = tape.val(model.generate_tokens(tape, enc));
  for (int t = 0; t < dists.rows(); ++t) {
    double sum = 0.0;
    for (int c = 0; c < dists.cols(); ++c) {
      CHECK(dists.at(t, c) > 0.0);
      sum += dists.at(t, c);
    }
    CHECK(std::abs(sum - 1.0) < 1e-9);
  }

  tiny.store.value("translator.gen.W1").fill(0.0);
  tiny.store.value("translator.gen.b1").fill(0.0);
  tiny.store.value("translator.gen.W2").fill(0.0);
  tiny.store.value("translator.gen.b2").fill(0.0);
  num::Tape tape2(&tiny.store);  // params snapshot at first use per tape
  Var enc2 = model.encode(tape2, std::vector<int>{1, 2, 3}, cand);
  const auto& uniform = tape2.val(model.generate_tokens(tape2, enc2));
  for (int t = 0; t < uniform.rows(); ++t)
    for (int c = 0; c < uniform.cols(); ++c)
      CHECK(uniform.at(t, c) ==
            doctest::Approx(1.0 / tiny.config.vocab).epsilon(1e-12));
}

TEST_CASE("split mask: sigmoid(0) = 0.5 exactly halves the text") {
  Tiny tiny;
  auto model = tiny.make();
  for (const char* name : {"translator.split.W1", "translator.split.b1",
                           "translator.split.W2", "translator.split.b2"})
    tiny.store.value(name).fill(0.0);
  num::Tape tape(&tiny.store);
  num::Tensor cand = random_tensor(2, tiny.config.cand_dim, tiny.rng);
  const std::vector<int> tokens{1, 2, 3, 4};
  Var enc = model.encode(tape, tokens, cand);
  Var mask = model.split_mask(tape, enc);
  for (int t = 0; t < 4; ++t) CHECK(tape.val(mask).at(t, 0) == 0.5);

  Var text = tape.constant(random_tensor(4, 8, tiny.rng));
  Var attended = TranslatorModel::attended_instruction(tape, mask, text);
  for (int t = 0; t < 4; ++t)
    for (int c = 0; c < 8; ++c)
      CHECK(tape.val(attended).at(t, c) == tape.val(text).at(t, c) * 0.5);

  // Saturated positive bias pins the mask at ~1 and X'' == X.
  tiny.store.value("translator.split.b2").fill(50.0);
  num::Tape tape2(&tiny.store);
  Var text2 = tape2.constant(tape.val(text));
  Var mask1 = model.split_mask(tape2, model.encode(tape2, tokens, cand));
  Var attended1 = TranslatorModel::attended_instruction(tape2, mask1, text2);
  for (int t = 0; t < 4; ++t)
    for (int c = 0; c < 8; ++c)
      CHECK(tape2.val(attended1).at(t, c) ==
            doctest::Approx(tape2.val(text2).at(t, c)).epsilon(1e-9));
}

TEST_CASE("loss_sig: near-one-hot is ~0, uniform is ln(vocab)") {
  num::Tape tape;
  const int vocab = 10;
  SUBCASE("correct near-one-hot predictions") {
    const double eps = 1e-12;
    num::Tensor dists(3, vocab, eps);
    const std::vector<int> targets{2, 5, 7};
    for (int t = 0; t < 3; ++t)
      dists.at(t, targets[t]) = 1.0 - (vocab - 1) * eps;
    Var loss = TranslatorModel::loss_sig(tape, tape.constant(dists), targets,
                                         0);
    CHECK(tape.scalar_of(loss) < 1e-9);
  }
  SUBCASE("uniform rows") {
    num::Tensor dists(4, vocab, 1.0 / vocab);
    const std::vector<int> targets{1, 2, 3, 4};
    Var loss = TranslatorModel::loss_sig(tape, tape.constant(dists), targets,
                                         0);
    CHECK(tape.scalar_of(loss) ==
          doctest::Approx(std::log(double(vocab))).epsilon(1e-12));
  }
  SUBCASE("pad positions are excluded from the mean") {
    num::Tensor dists(2, vocab, 1.0 / vocab);
    const std::vector<int> targets{3, 0};  // second position is PAD
    Var loss = TranslatorModel::loss_sig(tape, tape.constant(dists), targets,
                                         0);
    CHECK(tape.scalar_of(loss) ==
          doctest::Approx(std::log(double(vocab))).epsilon(1e-12));
  }
  SUBCASE("all-pad target is an error") {
    num::Tensor dists(1, vocab, 1.0 / vocab);
    CHECK_THROWS_AS(TranslatorModel::loss_sig(
                        tape, tape.constant(dists), std::vector<int>{0}, 0),
                    InvalidInputError);
  }
}

TEST_CASE("dsl hinge arithmetic") {
  num::Tape tape;
  const auto row = [&](double x, double y) {
    return tape.constant(num::Tensor::from_data(1, 2, {x, y}));
  };
  SUBCASE("inactive hinge") {
    // D(a,p) = 0.2, D(a,n) = 0.9, m = 0.5 -> 0.
    Var loss = dsl_hinge(tape, row(0, 0), row(0.2, 0), row(0.9, 0), 0.5);
    CHECK(tape.scalar_of(loss) == 0.0);
  }
  SUBCASE("active hinge") {
    // D(a,p) = 0.8, D(a,n) = 0.3, m = 0.5 -> 1.0.
    Var loss = dsl_hinge(tape, row(0, 0), row(0.8, 0), row(0.3, 0), 0.5);
    CHECK(tape.scalar_of(loss) == doctest::Approx(1.0).epsilon(1e-12));
  }
  SUBCASE("negative == positive collapses to the margin") {
    Var p = row(0.37, -0.8);
    Var loss = dsl_hinge(tape, row(0.1, 0.2), p, p, 0.5);
    CHECK(tape.scalar_of(loss) == 0.5);
  }
}

TEST_CASE("loss_dsl is non-negative and bounded by m when D(a,p)=0") {
  Tiny tiny;
  auto model = tiny.make();
  num::Tape tape(&tiny.store);
  num::Tensor cand = random_tensor(3, tiny.config.cand_dim, tiny.rng);
  const std::vector<int> a{1, 2, 3}, p{4, 5}, n{6, 7, 8};
  const double loss =
      tape.scalar_of(model.loss_dsl(tape, a, p, n, cand));
  CHECK(loss >= 0.0);
  // anchor == positive (D(a,p) = 0) caps the hinge at the margin.
  const double capped =
      tape.scalar_of(model.loss_dsl(tape, a, a, n, cand));
  CHECK(capped <= tiny.config.margin + 1e-12);
}

TEST_CASE("translator loss gradients match finite differences") {
  Tiny tiny(10, 6, 6);
  auto model = tiny.make();
  num::Tensor cand = random_tensor(3, tiny.config.cand_dim, tiny.rng);
  const std::vector<int> positive{1, 2, 3}, anchor{4, 2, 3}, neg{5, 6, 3};

  SUBCASE("SIG gradient") {
    const auto report = fd_check(tiny.store, [&](num::Tape& t) {
      Var enc = model.encode(t, positive, cand);
      return TranslatorModel::loss_sig(t, model.generate_tokens(t, enc),
                                       positive, 0);
    });
    CAPTURE(report.worst_param);
    CHECK(report.max_rel_error < 1e-4);
  }
  SUBCASE("DSL gradient") {
    const auto report = fd_check(tiny.store, [&](num::Tape& t) {
      return model.loss_dsl(t, anchor, positive, neg, cand);
    });
    CAPTURE(report.worst_param);
    CHECK(report.max_rel_error < 1e-4);
  }
  SUBCASE("combined pretraining gradient (Eq.8 shape)") {
    const auto report = fd_check(tiny.store, [&](num::Tape& t) {
      Var enc = model.encode(t, positive, cand);
      Var sig = TranslatorModel::loss_sig(t, model.generate_tokens(t, enc),
                                          positive, 0);
      Var enc_a = model.encode(t, anchor, cand);
      Var dsl = dsl_hinge(t, enc_a, enc, model.encode(t, neg, cand),
                          tiny.config.margin);
      return t.add(sig, dsl);
    });
    CAPTURE(report.worst_param);
    CHECK(report.max_rel_error < 1e-4);
  }
}

TEST_CASE("pretrain_step: weight algebra and loss decrease") {
  // Build real examples from a generated world so the candidate context is
  // honest; 16 records, 200 steps.
  cli::RunConfig config;
  config.worldgen.node_count = 25;
  config.worldgen.label_count = 24;
  config.worldgen.seen_worlds = 1;
  config.seed = 913;
  const auto toolkit = cli::Toolkit::from_config(config);
  const auto g = world::generate_world(cli::world_seed(config, "seen", 0),
                                       cli::worldgen_params(config), "seen");

  std::ostringstream jsonl;
  syfis::DatasetConfig dcfg;
  dcfg.record = toolkit.record_config;
  dcfg.trajectories_per_world = 30;
  dcfg.path_len_min = 4;
  dcfg.path_len_max = 7;
  syfis::generate_dataset({&g}, toolkit.detector, toolkit.dictionary,
                          toolkit.tokenizer, toolkit.labels, dcfg, 7, jsonl);
  std::vector<syfis::SyfisRecord> records;
  std::istringstream in(jsonl.str());
  std::string line;
  while (std::getline(in, line))
    if (!line.empty()) records.push_back(syfis::record_from_jsonl(line));
  const auto data = cli::build_pretrain_examples(records, {{g.world_id, &g}},
                                                 0.0);
  REQUIRE(data.train.size() >= 16);
  const std::span<const PretrainExample> batch(data.train.data(), 16);

  num::ParameterStore store;
  Rng rng(5);
  TranslatorConfig tc = cli::translator_config(config, toolkit);
  TranslatorModel model(store, tc, rng);
  num::AdamConfig adam;

  SUBCASE("alpha weights") {
    const auto only_sig = pretrain_step(store, model, batch, 1.0, 0.0, adam);
    CHECK(only_sig.total == doctest::Approx(only_sig.sig).epsilon(1e-12));
    const auto both = pretrain_step(store, model, batch, 1.0, 1.0, adam);
    CHECK(both.total ==
          doctest::Approx(both.sig + both.dsl).epsilon(1e-12));
  }
  SUBCASE("200 steps on a fixed batch reduce the loss") {
    double initial = 0.0, last = 0.0;
    for (int step = 0; step < 200; ++step) {
      const auto losses = pretrain_step(store, model, batch, 1.0, 1.0, adam);
      if (step == 0) initial = losses.total;
      last = losses.total;
    }
    CHECK(last < initial);
  }
}

TEST_CASE("literal-form DSL switch changes the loss but stays finite") {
  Tiny tiny;
  tiny.config.dsl_literal_generated = true;
  auto model = tiny.make();
  num::Tape tape(&tiny.store);
  num::Tensor cand = random_tensor(2, tiny.config.cand_dim, tiny.rng);
  const double literal = tape.scalar_of(
      model.loss_dsl(tape, std::vector<int>{1, 2}, std::vector<int>{3, 4},
                     std::vector<int>{5, 6}, cand));
  CHECK(std::isfinite(literal));
  CHECK(literal >= 0.0);
}

TEST_CASE("argmax_decode picks row maxima") {
  num::Tensor dists(2, 4);
  dists.at(0, 2) = 0.9;
  dists.at(1, 1) = 0.8;
  CHECK(argmax_decode(dists) == std::vector<int>{2, 1});
}
