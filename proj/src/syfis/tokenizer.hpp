#ifndef VLNLAB_SYFIS_TOKENIZER_HPP
#define VLNLAB_SYFIS_TOKENIZER_HPP

#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "landmark/landmark.hpp"
#include "syfis/motion.hpp"

namespace vlnlab::syfis {

// Whitespace word tokenizer over a closed vocabulary built deterministically
// from the motion dictionary, the determiner, and the label vocabulary.
// Token id 0 is PAD.
class Tokenizer {
 public:
  static Tokenizer build(const MotionDictionary& dictionary,
                         const landmark::LabelVocabulary& labels);

  int size() const { return static_cast<int>(words_.size()); }
  int pad_id() const { return 0; }

  int id(const std::string& word) const;  // VocabularyError if unknown
  const std::string& word(int id) const;

  std::vector<int> tokenize(const std::string& text) const;
  std::string detokenize(std::span<const int> tokens) const;  // skips PAD

 private:
  void add(const std::string& word);
  std::vector<std::string> words_;
  std::unordered_map<std::string, int> index_;
};

}  // namespace vlnlab::syfis

#endif  // VLNLAB_SYFIS_TOKENIZER_HPP
