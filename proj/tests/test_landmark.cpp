#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <sstream>

#include "common/rng.hpp"
#include "landmark/landmark.hpp"

using namespace vlnlab;
using namespace vlnlab::landmark;

namespace {

std::vector<double> bag_feature(const std::vector<int>& labels, int m,
                                Rng* noise = nullptr, double sigma = 0.0) {
  std::vector<double> f(m, 0.0);
  if (!labels.empty()) {
    const double unit = 1.0 / std::sqrt(static_cast<double>(labels.size()));
    for (int label : labels) f[label] = unit;
  }
  if (noise)
    for (double& v : f) v += sigma * noise->normal();
  return f;
}

}  // namespace

TEST_CASE("similarity scores: present label is the maximum, all in [-1,1]") {
  const int m = 8;
  BagOfObjectsDetector det(m);
  const auto f = bag_feature({3}, m);
  const auto scores = similarity_scores(det, f);
  REQUIRE(scores.size() == 8);
  const int argmax = static_cast<int>(
      std::max_element(scores.begin(), scores.end()) - scores.begin());
  CHECK(argmax == 3);
  for (double s : scores) {
    CHECK(s >= -1.0);
    CHECK(s <= 1.0);
  }
}

TEST_CASE("similarity scores: empty object set scores all labels equally") {
  BagOfObjectsDetector det(5);
  const auto scores = similarity_scores(det, bag_feature({}, 5));
  for (double s : scores) CHECK(s == 0.0);
}

TEST_CASE("similarity scores: deterministic") {
  BagOfObjectsDetector det(6);
  Rng rng(8);
  const auto f = bag_feature({1, 4}, 6, &rng, 0.05);
  CHECK(similarity_scores(det, f) == similarity_scores(det, f));
}

TEST_CASE("detector rejects dimension mismatch") {
  BagOfObjectsDetector det(6);
  CHECK_THROWS_AS(det.score(std::vector<double>(4, 0.0), 1), ContractError);
}

TEST_CASE("label_probabilities: uniform on equal scores") {
  const auto p = label_probabilities({0.3, 0.3, 0.3, 0.3}, 0.1);
  for (double v : p) CHECK(v == doctest::Approx(0.25).epsilon(1e-12));
}

TEST_CASE("label_probabilities: matches independent evaluation") {
  // softmax([1,0]) at tau = 1: e/(e+1) computed with a separate formula.
  const auto p = label_probabilities({1.0, 0.0}, 1.0);
  CHECK(p[0] == doctest::Approx(0.7310586).epsilon(1e-6));
  CHECK(p[1] == doctest::Approx(0.2689414).epsilon(1e-6));
}

TEST_CASE("label_probabilities: smaller temperature sharpens") {
  const std::vector<double> scores{0.9, 0.5, 0.1};
  const auto warm = label_probabilities(scores, 1.0);
  const auto sharp = label_probabilities(scores, 0.01);
  CHECK(sharp[0] > warm[0]);
}

TEST_CASE("label_probabilities: non-positive temperature rejected") {
  CHECK_THROWS_AS(label_probabilities({1.0, 2.0}, 0.0), InvalidParameterError);
  CHECK_THROWS_AS(label_probabilities({1.0, 2.0}, -0.5), InvalidParameterError);
}

TEST_CASE("label_probabilities: sums to one and is permutation-equivariant") {
  Rng rng(21);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> scores(7);
    for (double& s : scores) s = rng.uniform(-1, 1);
    const auto p = label_probabilities(scores, 0.1);
    CHECK(std::abs(std::accumulate(p.begin(), p.end(), 0.0) - 1.0) < 1e-12);

    std::vector<int> perm(scores.size());
    std::iota(perm.begin(), perm.end(), 0);
    for (int i = static_cast<int>(perm.size()) - 1; i > 0; --i)
      std::swap(perm[i], perm[rng.uniform_int(i + 1)]);
    std::vector<double> permuted(scores.size());
    for (std::size_t i = 0; i < perm.size(); ++i)
      permuted[i] = scores[perm[i]];
    const auto pp = label_probabilities(permuted, 0.1);
    for (std::size_t i = 0; i < perm.size(); ++i)
      CHECK(pp[i] == doctest::Approx(p[perm[i]]).epsilon(1e-12));
  }
}

TEST_CASE("label_probabilities: scale scores and temperature together") {
  Rng rng(22);
  std::vector<double> scores(6);
  for (double& s : scores) s = rng.uniform(-1, 1);
  const auto p1 = label_probabilities(scores, 0.1);
  std::vector<double> scaled = scores;
  for (double& s : scaled) s *= 3.7;
  const auto p2 = label_probabilities(scaled, 0.37);
  for (std::size_t i = 0; i < scores.size(); ++i)
    CHECK(p2[i] == doctest::Approx(p1[i]).epsilon(1e-12));
}

TEST_CASE("recognizable_landmarks: exhaustive and dominant cases") {
  const int m = 6;
  BagOfObjectsDetector det(m);
  const auto f = bag_feature({2}, m);
  const auto all = recognizable_landmarks(det, f, m, 0.1);
  CHECK(all.size() == static_cast<std::size_t>(m));
  const auto one = recognizable_landmarks(det, f, 1, 0.1);
  REQUIRE(one.size() == 1);
  CHECK(one[0] == 2);
}

TEST_CASE("recognizable_landmarks: equals brute-force full sort on 100 views") {
  const int m = 10;
  BagOfObjectsDetector det(m);
  Rng rng(31);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<int> labels;
    const int count = 1 + rng.uniform_int(3);
    while (static_cast<int>(labels.size()) < count) {
      const int l = rng.uniform_int(m);
      if (std::find(labels.begin(), labels.end(), l) == labels.end())
        labels.push_back(l);
    }
    const auto f = bag_feature(labels, m, &rng, 0.05);
    const int k = 1 + rng.uniform_int(m);

    // Oracle: full sort of (probability, index) pairs, independent path.
    const auto probs = label_probabilities(similarity_scores(det, f), 0.1);
    std::vector<std::pair<double, int>> ranked;
    for (int i = 0; i < m; ++i) ranked.emplace_back(-probs[i], i);
    std::sort(ranked.begin(), ranked.end());
    std::vector<int> expected;
    for (int i = 0; i < k; ++i) expected.push_back(ranked[i].second);

    CHECK(recognizable_landmarks(det, f, k, 0.1) == expected);
  }
}

TEST_CASE("classify_landmarks: set definitions on the worked example") {
  // target top-k {sofa, room} = {0, 1}; others' union {room, door} = {1, 2}.
  const int m = 4;
  BagOfObjectsDetector det(m);
  const auto target = bag_feature({0, 1}, m);
  const auto other = bag_feature({1, 2}, m);
  const auto part = classify_landmarks(target, {&other}, det, 2, 0.1);
  CHECK(part.distinctive == std::vector<int>{0});
  CHECK(part.nondistinctive == std::vector<int>{1});
  CHECK(part.irrelevant == std::vector<int>{2});
}

TEST_CASE("classify_landmarks: no other candidates") {
  BagOfObjectsDetector det(5);
  const auto target = bag_feature({1, 3}, 5);
  const auto part = classify_landmarks(target, {}, det, 2, 0.1);
  CHECK(part.distinctive == part.target_recognizable);
  CHECK(part.nondistinctive.empty());
  CHECK(part.irrelevant.empty());
}

TEST_CASE("classify_landmarks: covered target has empty distinctive set") {
  BagOfObjectsDetector det(4);
  const auto target = bag_feature({0, 1}, 4);
  const auto a = bag_feature({0}, 4);
  const auto b = bag_feature({1}, 4);
  const auto part = classify_landmarks(target, {&a, &b}, det, 2, 0.1);
  CHECK(part.distinctive.empty());
}

TEST_CASE("classify_landmarks: partition invariants on 1000 random inputs") {
  const int m = 12;
  BagOfObjectsDetector det(m);
  Rng rng(77);
  for (int trial = 0; trial < 1000; ++trial) {
    const int n_others = rng.uniform_int(5);
    const int k = 1 + rng.uniform_int(5);
    auto make = [&]() {
      std::vector<int> labels;
      const int count = 1 + rng.uniform_int(3);
      while (static_cast<int>(labels.size()) < count) {
        const int l = rng.uniform_int(m);
        if (std::find(labels.begin(), labels.end(), l) == labels.end())
          labels.push_back(l);
      }
      return bag_feature(labels, m, &rng, 0.05);
    };
    const auto target = make();
    std::vector<std::vector<double>> others;
    for (int i = 0; i < n_others; ++i) others.push_back(make());
    std::vector<const std::vector<double>*> refs;
    for (const auto& o : others) refs.push_back(&o);

    const auto part = classify_landmarks(target, refs, det, k, 0.1);
    const std::set<int> distinctive(part.distinctive.begin(),
                                    part.distinctive.end());
    const std::set<int> nondistinctive(part.nondistinctive.begin(),
                                       part.nondistinctive.end());
    const std::set<int> irrelevant(part.irrelevant.begin(),
                                   part.irrelevant.end());
    const std::set<int> target_topk(part.target_recognizable.begin(),
                                    part.target_recognizable.end());
    // distinctive and nondistinctive are disjoint and partition target topk.
    for (int l : distinctive) CHECK(!nondistinctive.count(l));
    std::set<int> unioned = distinctive;
    unioned.insert(nondistinctive.begin(), nondistinctive.end());
    CHECK(unioned == target_topk);
    // irrelevant never intersects the target's recognizable set.
    for (int l : irrelevant) CHECK(!target_topk.count(l));
  }
}

TEST_CASE("score CSV dump has one row per label") {
  BagOfObjectsDetector det(4);
  const auto vocab = LabelVocabulary::builtin(4);
  std::ostringstream out;
  dump_scores_csv(det, vocab, bag_feature({1}, 4), out);
  int lines = 0;
  for (char c : out.str())
    if (c == '\n') ++lines;
  CHECK(lines == 5);  // header + 4 labels
}
