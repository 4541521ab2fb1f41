#ifndef VLNLAB_LANDMARK_LANDMARK_HPP
#define VLNLAB_LANDMARK_LANDMARK_HPP

#include <memory>
#include <ostream>
#include <string>
#include <vector>

#include "common/errors.hpp"

namespace vlnlab::landmark {

class LabelVocabulary {
 public:
  explicit LabelVocabulary(std::vector<std::string> labels);
  static LabelVocabulary builtin(int m);
  static int builtin_size();

  int size() const { return static_cast<int>(labels_.size()); }
  const std::string& label(int index) const;
  int index_of(const std::string& label) const;  // VocabularyError if unknown
  const std::vector<std::string>& labels() const { return labels_; }

 private:
  std::vector<std::string> labels_;
};

// Scores a view feature against every label; stands in for the role a frozen
// CLIP plays in the original pipeline. Deterministic for fixed inputs.
class Detector {
 public:
  virtual ~Detector() = default;
  virtual int feature_dim() const = 0;
  virtual int vocab_size() const = 0;
  // Cosine similarity in [-1, 1].
  virtual double score(const std::vector<double>& feature, int label) const = 0;
};

// Label embeddings are one-hot, so the score is the normalized feature
// coordinate. A zero feature scores 0 against every label.
class BagOfObjectsDetector : public Detector {
 public:
  explicit BagOfObjectsDetector(int vocab_size) : vocab_size_(vocab_size) {}
  int feature_dim() const override { return vocab_size_; }
  int vocab_size() const override { return vocab_size_; }
  double score(const std::vector<double>& feature, int label) const override;

 private:
  int vocab_size_;
};

std::vector<double> similarity_scores(const Detector& detector,
                                      const std::vector<double>& feature);

// Softmax of scores / tau1 (Eq. 3 shape). tau1 must be positive.
std::vector<double> label_probabilities(const std::vector<double>& scores,
                                        double tau1);

// Top-k labels by probability, ties broken by vocabulary order.
std::vector<int> recognizable_landmarks(const Detector& detector,
                                        const std::vector<double>& feature,
                                        int k, double tau1);

struct LandmarkPartition {
  std::vector<int> target_recognizable;            // target's top-k, ranked
  std::vector<std::vector<int>> other_recognizable;  // per other candidate
  std::vector<int> distinctive;     // target top-k, in no other's top-k
  std::vector<int> nondistinctive;  // target top-k, in some other's top-k
  std::vector<int> irrelevant;      // other's top-k only
};

LandmarkPartition classify_landmarks(
    const std::vector<double>& target_feature,
    const std::vector<const std::vector<double>*>& other_features,
    const Detector& detector, int k, double tau1);

// Debug aid: "label,score" rows.
void dump_scores_csv(const Detector& detector, const LabelVocabulary& vocab,
                     const std::vector<double>& feature, std::ostream& out);

}  // namespace vlnlab::landmark

#endif  // VLNLAB_LANDMARK_LANDMARK_HPP
