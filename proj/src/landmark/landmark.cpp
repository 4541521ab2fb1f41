#include "landmark/landmark.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "common/textfmt.hpp"

namespace vlnlab::landmark {

namespace {
const std::vector<std::string>& builtin_labels() {
  static const std::vector<std::string> kLabels = {
      "room",      "door",     "wall",     "window",   "hallway",
      "floor",     "table",    "chair",    "lamp",     "sofa",
      "bed",       "shelf",    "mirror",   "rug",      "stairs",
      "plant",     "kitchen",  "counter",  "cabinet",  "sink",
      "oven",      "fridge",   "couch",    "desk",     "toilet",
      "bathtub",   "shower",   "towel",    "closet",   "dresser",
      "painting",  "vase",     "bookshelf", "fireplace", "piano",
      "television", "speaker", "pillow",   "blanket",  "bench",
      "stool",     "wardrobe", "curtain",  "clock",    "statue",
      "aquarium",  "treadmill", "balcony"};
  return kLabels;
}
}  // namespace

LabelVocabulary::LabelVocabulary(std::vector<std::string> labels)
    : labels_(std::move(labels)) {
  if (labels_.size() < 2)
    throw InvalidParameterError("label vocabulary needs at least 2 labels");
  std::set<std::string> unique(labels_.begin(), labels_.end());
  if (unique.size() != labels_.size())
    throw InvalidParameterError("label vocabulary has duplicate labels");
}

LabelVocabulary LabelVocabulary::builtin(int m) {
  const auto& all = builtin_labels();
  if (m < 2 || m > static_cast<int>(all.size()))
    throw InvalidParameterError("builtin vocabulary supports 2.." +
                                std::to_string(all.size()) + " labels, got " +
                                std::to_string(m));
  return LabelVocabulary(
      std::vector<std::string>(all.begin(), all.begin() + m));
}

int LabelVocabulary::builtin_size() {
  return static_cast<int>(builtin_labels().size());
}

const std::string& LabelVocabulary::label(int index) const {
  if (index < 0 || index >= size())
    throw IndexError("label index out of range: " + std::to_string(index));
  return labels_[index];
}

int LabelVocabulary::index_of(const std::string& label) const {
  const auto it = std::find(labels_.begin(), labels_.end(), label);
  if (it == labels_.end())
    throw VocabularyError("unknown landmark label: " + label);
  return static_cast<int>(it - labels_.begin());
}

double BagOfObjectsDetector::score(const std::vector<double>& feature,
                                   int label) const {
  if (static_cast<int>(feature.size()) != vocab_size_)
    throw ContractError("detector expects feature dim " +
                        std::to_string(vocab_size_) + ", got " +
                        std::to_string(feature.size()));
  if (label < 0 || label >= vocab_size_)
    throw IndexError("label out of vocabulary: " + std::to_string(label));
  double norm = 0.0;
  for (double f : feature) norm += f * f;
  norm = std::sqrt(norm);
  if (norm == 0.0) return 0.0;
  const double s = feature[label] / norm;
  return std::clamp(s, -1.0, 1.0);
}

std::vector<double> similarity_scores(const Detector& detector,
                                      const std::vector<double>& feature) {
  std::vector<double> out(detector.vocab_size());
  for (int c = 0; c < detector.vocab_size(); ++c)
    out[c] = detector.score(feature, c);
  return out;
}

std::vector<double> label_probabilities(const std::vector<double>& scores,
                                        double tau1) {
  if (tau1 <= 0.0)
    throw InvalidParameterError("temperature tau1 must be positive");
  if (scores.empty()) throw InvalidInputError("label_probabilities: no scores");
  const double mx = *std::max_element(scores.begin(), scores.end());
  std::vector<double> out(scores.size());
  double z = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    out[i] = std::exp((scores[i] - mx) / tau1);
    z += out[i];
  }
  for (double& p : out) p /= z;
  return out;
}

std::vector<int> recognizable_landmarks(const Detector& detector,
                                        const std::vector<double>& feature,
                                        int k, double tau1) {
  if (k < 1) throw InvalidParameterError("top-k needs k >= 1");
  const std::vector<double> probs =
      label_probabilities(similarity_scores(detector, feature), tau1);
  std::vector<int> order(probs.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return probs[a] > probs[b];  // stable keeps vocabulary order on ties
  });
  order.resize(std::min<std::size_t>(order.size(), k));
  return order;
}

LandmarkPartition classify_landmarks(
    const std::vector<double>& target_feature,
    const std::vector<const std::vector<double>*>& other_features,
    const Detector& detector, int k, double tau1) {
  LandmarkPartition out;
  out.target_recognizable =
      recognizable_landmarks(detector, target_feature, k, tau1);
  std::set<int> target_set(out.target_recognizable.begin(),
                           out.target_recognizable.end());
  std::set<int> others_union;
  for (const auto* feature : other_features) {
    out.other_recognizable.push_back(
        recognizable_landmarks(detector, *feature, k, tau1));
    others_union.insert(out.other_recognizable.back().begin(),
                        out.other_recognizable.back().end());
  }
  // Keep the target's probability ranking in distinctive/nondistinctive so
  // downstream "highest-probability" selections are just front().
  for (int label : out.target_recognizable) {
    if (others_union.count(label))
      out.nondistinctive.push_back(label);
    else
      out.distinctive.push_back(label);
  }
  for (int label : others_union)
    if (!target_set.count(label)) out.irrelevant.push_back(label);
  return out;
}

void dump_scores_csv(const Detector& detector, const LabelVocabulary& vocab,
                     const std::vector<double>& feature, std::ostream& out) {
  const auto scores = similarity_scores(detector, feature);
  out << "label,score\n";
  for (int c = 0; c < vocab.size(); ++c)
    out << vocab.label(c) << ',' << fmt_double17(scores[c]) << '\n';
}

}  // namespace vlnlab::landmark
