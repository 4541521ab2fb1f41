#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>

#include "fd_check.hpp"
#include "numcore/checkpoint.hpp"
#include "numcore/lstm.hpp"
#include "numcore/tape.hpp"

using namespace vlnlab;
using namespace vlnlab::num;
using vlnlab::testing::fd_check;
using vlnlab::testing::random_tensor;

TEST_CASE("evaluate_and_grad: sum of squares") {
  ParameterStore store;
  store.create("w", 1, 2);
  store.value("w").raw() = {1.0, 2.0};
  const double loss = evaluate_and_grad(store, [](Tape& t) {
    Var w = t.param("w");
    return t.sum(t.mul(w, w));
  });
  CHECK(loss == doctest::Approx(5.0));
  CHECK(store.grad("w").raw()[0] == doctest::Approx(2.0));
  CHECK(store.grad("w").raw()[1] == doctest::Approx(4.0));
}

TEST_CASE("softmax of equal entries has zero gradient on the picked one") {
  ParameterStore store;
  store.create("a", 1, 1);
  store.value("a").raw() = {0.7};
  evaluate_and_grad(store, [](Tape& t) {
    Var a = t.param("a");
    Var both = t.concat_rows(std::array<Var, 2>{a, a});
    Var row = t.transpose(both);  // 1x2 with equal entries
    Var sm = t.softmax_rows(row);
    return t.pick(sm, 0, 0);
  });
  CHECK(std::abs(store.grad("a").raw()[0]) < 1e-14);
}

TEST_CASE("softmax rows sum to 1 and survive large inputs") {
  Tape t;
  Tensor big(2, 3);
  big.raw() = {700.0, -700.0, 0.0, 650.0, 649.0, -650.0};
  Var sm = t.softmax_rows(t.constant(big));
  for (int i = 0; i < 2; ++i) {
    double s = 0.0;
    for (int j = 0; j < 3; ++j) s += t.val(sm).at(i, j);
    CHECK(std::abs(s - 1.0) < 1e-12);
  }
}

TEST_CASE("shape errors name both shapes") {
  Tape t;
  Var a = t.constant(Tensor(2, 3));
  Var b = t.constant(Tensor(2, 3));
  CHECK_THROWS_WITH_AS(t.matmul(a, b),
                       doctest::Contains("2x3"), ShapeError);
}

TEST_CASE("non-finite forward values raise numeric errors") {
  Tape t;
  Tensor zero(1, 1, 0.0);
  CHECK_THROWS_AS(t.log_op(t.constant(zero)), NumericError);
}

TEST_CASE("per-primitive gradients match finite differences") {
  Rng rng(1234);
  const auto check_builder =
      [&](const std::function<Var(Tape&)>& build, ParameterStore& store) {
        const auto report = fd_check(store, build);
        CAPTURE(report.worst_param);
        CHECK(report.max_rel_error < 1e-4);
      };

  SUBCASE("matmul + add + tanh") {
    ParameterStore store;
    store.create("A", 3, 4).raw() = random_tensor(3, 4, rng).raw();
    store.create("B", 4, 2).raw() = random_tensor(4, 2, rng).raw();
    check_builder(
        [](Tape& t) {
          return t.sum(t.tanh_op(t.matmul(t.param("A"), t.param("B"))));
        },
        store);
  }
  SUBCASE("softmax + log + mul") {
    ParameterStore store;
    store.create("X", 2, 5).raw() = random_tensor(2, 5, rng).raw();
    check_builder(
        [](Tape& t) {
          Var sm = t.softmax_rows(t.param("X"));
          return t.mean(t.mul(t.log_op(sm), sm));
        },
        store);
  }
  SUBCASE("sigmoid + relu + slice + concat") {
    ParameterStore store;
    store.create("X", 4, 4).raw() = random_tensor(4, 4, rng).raw();
    check_builder(
        [](Tape& t) {
          Var x = t.param("X");
          Var top = t.slice_rows(x, 0, 2);
          Var bottom = t.slice_cols(t.slice_rows(x, 2, 4), 0, 4);
          Var both = t.concat_rows(std::array<Var, 2>{t.sigmoid(top),
                                                      t.relu(bottom)});
          return t.sum(both);
        },
        store);
  }
  SUBCASE("embedding + mean_rows + sqdist") {
    ParameterStore store;
    store.create("E", 6, 3).raw() = random_tensor(6, 3, rng).raw();
    check_builder(
        [](Tape& t) {
          Var rows = t.embedding(t.param("E"), {0, 2, 2, 5});
          Var pooled = t.mean_rows(rows);
          Var other = t.mean_rows(t.embedding(t.param("E"), {1, 3}));
          return t.sqdist(pooled, other);
        },
        store);
  }
  SUBCASE("pairwise distance + row_scale + transpose") {
    ParameterStore store;
    store.create("A", 3, 4).raw() = random_tensor(3, 4, rng).raw();
    store.create("B", 2, 4).raw() = random_tensor(2, 4, rng).raw();
    store.create("m", 3, 1).raw() = random_tensor(3, 1, rng).raw();
    check_builder(
        [](Tape& t) {
          Var scaled = t.row_scale(t.param("A"), t.param("m"));
          Var d = t.pairwise_distance(scaled, t.param("B"));
          return t.add(d, t.mean(t.transpose(scaled)));
        },
        store);
  }
  SUBCASE("scale + add_scalar + sub + clamp inside the linear region") {
    ParameterStore store;
    store.create("X", 2, 3).raw() = random_tensor(2, 3, rng, 0.4).raw();
    check_builder(
        [](Tape& t) {
          Var x = t.param("X");
          Var y = t.clamp(t.scale(x, 0.5), -0.9, 0.9);
          return t.sum(t.sub(t.add_scalar(y, 0.25), x));
        },
        store);
  }
}

TEST_CASE("random composite graphs match finite differences") {
  // 20 random small expression graphs built from the primitive pool.
  for (int trial = 0; trial < 20; ++trial) {
    Rng rng(9000 + trial);
    ParameterStore store;
    store.create("P", 3, 3).raw() = random_tensor(3, 3, rng).raw();
    store.create("Q", 3, 3).raw() = random_tensor(3, 3, rng).raw();
    const int variant = trial % 4;
    const auto report = fd_check(store, [variant](Tape& t) {
      Var p = t.param("P");
      Var q = t.param("Q");
      Var x = t.matmul(p, q);
      switch (variant) {
        case 0: x = t.softmax_rows(x); break;
        case 1: x = t.sigmoid(t.mul(x, q)); break;
        case 2: x = t.tanh_op(t.add(x, p)); break;
        default: x = t.relu(t.sub(x, q)); break;
      }
      return t.add(t.mean(x), t.scale(t.pairwise_distance(x, q), 0.5));
    });
    CAPTURE(trial);
    CHECK(report.max_rel_error < 1e-4);
  }
}

TEST_CASE("lstm_step zero weights from zero state gives zero output") {
  ParameterStore store;
  Rng rng(5);
  LstmSpec spec{"cell", 3, 4};
  init_lstm(store, spec, rng);
  store.value("cell.W").fill(0.0);
  store.value("cell.U").fill(0.0);
  store.value("cell.b").fill(0.0);
  Tape t(&store);
  Var x = t.constant(random_tensor(1, 3, rng));
  auto state = lstm_step(t, spec, x, lstm_zero_state(t, 4));
  for (double v : t.val(state.h).raw()) CHECK(v == 0.0);
  for (double v : t.val(state.c).raw()) CHECK(v == 0.0);
}

TEST_CASE("lstm hidden outputs stay within tanh bounds") {
  ParameterStore store;
  Rng rng(7);
  LstmSpec spec{"cell", 5, 6};
  init_lstm(store, spec, rng);
  Tape t(&store);
  Var inputs = t.constant(random_tensor(10, 5, rng, 3.0));
  Var hs = lstm_sequence(t, spec, inputs);
  for (double v : t.val(hs).raw()) CHECK(std::abs(v) <= 1.0);
}

TEST_CASE("lstm gradient through 3 chained steps matches finite differences") {
  ParameterStore store;
  Rng rng(11);
  LstmSpec spec{"cell", 3, 3};
  init_lstm(store, spec, rng);
  const Tensor inputs = random_tensor(3, 3, rng);
  const auto report = fd_check(store, [&](Tape& t) {
    Var seq = lstm_sequence(t, spec, t.constant(inputs));
    return t.sum(seq);
  });
  CAPTURE(report.worst_param);
  CHECK(report.max_rel_error < 1e-4);
}

TEST_CASE("adamw: zero gradient and zero decay is a fixed point") {
  ParameterStore store;
  store.create("w", 1, 3).raw() = {1.0, -2.0, 3.0};
  AdamConfig cfg;
  cfg.weight_decay = 0.0;
  store.adamw_update(cfg);
  CHECK(store.value("w").raw()[0] == 1.0);
  CHECK(store.value("w").raw()[1] == -2.0);
  CHECK(store.value("w").raw()[2] == 3.0);
}

TEST_CASE("adamw: decoupled decay scales values by (1 - lr*wd)") {
  ParameterStore store;
  store.create("w", 1, 2).raw() = {2.0, -4.0};
  AdamConfig cfg;
  cfg.lr = 0.1;
  cfg.weight_decay = 0.1;
  store.adamw_update(cfg);
  CHECK(store.value("w").raw()[0] == doctest::Approx(2.0 * 0.99));
  CHECK(store.value("w").raw()[1] == doctest::Approx(-4.0 * 0.99));
}

TEST_CASE("adamw: constant gradient moves against the gradient sign") {
  ParameterStore store;
  store.create("w", 1, 2).raw() = {0.0, 0.0};
  AdamConfig cfg;
  cfg.weight_decay = 0.0;
  double prev0 =  0.0, prev1 = 0.0;
  for (int step = 0; step < 25; ++step) {
    store.grad("w").raw() = {0.5, -0.25};
    store.adamw_update(cfg);
    CHECK(store.value("w").raw()[0] < prev0);
    CHECK(store.value("w").raw()[1] > prev1);
    prev0 = store.value("w").raw()[0];
    prev1 = store.value("w").raw()[1];
  }
}

TEST_CASE("adamw rejects non-positive learning rate") {
  ParameterStore store;
  store.create("w", 1, 1);
  AdamConfig cfg;
  cfg.lr = 0.0;
  CHECK_THROWS_AS(store.adamw_update(cfg), InvalidParameterError);
}

TEST_CASE("pairwise_distance basics") {
  Tape t;
  SUBCASE("identical inputs give zero") {
    Tensor a = Tensor::from_data(2, 2, {1.0, 2.0, 3.0, 4.0});
    CHECK(t.scalar_of(t.pairwise_distance(t.constant(a), t.constant(a))) ==
          0.0);
  }
  SUBCASE("3-4-5 on pooled vectors") {
    Tensor a = Tensor::from_data(1, 2, {0.0, 0.0});
    Tensor b = Tensor::from_data(1, 2, {3.0, 4.0});
    CHECK(t.scalar_of(t.pairwise_distance(t.constant(a), t.constant(b))) ==
          doctest::Approx(5.0));
  }
  SUBCASE("symmetric on random inputs") {
    Rng rng(3);
    Tensor a = random_tensor(3, 4, rng);
    Tensor b = random_tensor(5, 4, rng);
    const double ab =
        t.scalar_of(t.pairwise_distance(t.constant(a), t.constant(b)));
    const double ba =
        t.scalar_of(t.pairwise_distance(t.constant(b), t.constant(a)));
    CHECK(ab == doctest::Approx(ba));
  }
}

TEST_CASE("checkpoint round-trip is bit-exact") {
  ParameterStore store;
  Rng rng(77);
  store.create("alpha", 3, 4).raw() = random_tensor(3, 4, rng).raw();
  store.create("beta", 2, 2).raw() = {0.1, -0.0, 1e-300, 3.14159};
  const std::string path = "test_ckpt_roundtrip.bin";
  save_checkpoint(store, path);
  const auto loaded = load_checkpoint(path);
  REQUIRE(loaded.size() == 2);
  for (const auto& name : store.names()) {
    const Tensor& original = store.value(name);
    const Tensor& copy = loaded.at(name);
    REQUIRE(copy.same_shape(original));
    for (std::size_t i = 0; i < original.size(); ++i)
      CHECK(copy.raw()[i] == original.raw()[i]);
  }
  std::remove(path.c_str());
}

TEST_CASE("checkpoint load rejects mismatched shapes naming the parameter") {
  ParameterStore saved;
  saved.create("w", 2, 2);
  const std::string path = "test_ckpt_shape.bin";
  save_checkpoint(saved, path);
  ParameterStore target;
  target.create("w", 3, 2);
  const auto values = load_checkpoint(path);
  CHECK_THROWS_WITH_AS(target.load_values(values, true),
                       doctest::Contains("w"), ShapeError);
  std::remove(path.c_str());
}

TEST_CASE("corrupted checkpoint payload fails without partial load") {
  ParameterStore store;
  store.create("w", 4, 4);
  const std::string path = "test_ckpt_corrupt.bin";
  save_checkpoint(store, path);
  // Truncate the payload.
  {
    std::ifstream in(path, std::ios::binary);
    std::string all((std::istreambuf_iterator<char>(in)),
                    std::istreambuf_iterator<char>());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out << all.substr(0, all.size() - 8);
  }
  CHECK_THROWS_AS(load_checkpoint(path), CorruptionError);
  std::remove(path.c_str());
}
