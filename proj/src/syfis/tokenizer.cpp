#include "syfis/tokenizer.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>

namespace vlnlab::syfis {

namespace {
std::string lowercase(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return s;
}
}  // namespace

void Tokenizer::add(const std::string& word) {
  const std::string w = lowercase(word);
  if (index_.count(w)) return;
  index_.emplace(w, static_cast<int>(words_.size()));
  words_.push_back(w);
}

Tokenizer Tokenizer::build(const MotionDictionary& dictionary,
                           const landmark::LabelVocabulary& labels) {
  Tokenizer t;
  t.add("<pad>");
  for (int c = 0; c < kMotionCategoryCount; ++c) {
    for (const auto& phrase :
         dictionary.phrases(static_cast<MotionCategory>(c))) {
      std::istringstream words(phrase);
      std::string w;
      while (words >> w) t.add(w);
    }
  }
  t.add("the");
  for (const auto& label : labels.labels()) {
    std::istringstream words(label);
    std::string w;
    while (words >> w) t.add(w);
  }
  return t;
}

int Tokenizer::id(const std::string& word) const {
  const auto it = index_.find(lowercase(word));
  if (it == index_.end())
    throw VocabularyError("word not in tokenizer vocabulary: " + word);
  return it->second;
}

const std::string& Tokenizer::word(int token_id) const {
  if (token_id < 0 || token_id >= size())
    throw IndexError("token id out of range: " + std::to_string(token_id));
  return words_[token_id];
}

std::vector<int> Tokenizer::tokenize(const std::string& text) const {
  std::vector<int> out;
  std::istringstream words(text);
  std::string w;
  while (words >> w) out.push_back(id(w));
  return out;
}

std::string Tokenizer::detokenize(std::span<const int> tokens) const {
  std::string out;
  for (int t : tokens) {
    if (t == pad_id()) continue;
    if (!out.empty()) out += ' ';
    out += word(t);
  }
  return out;
}

}  // namespace vlnlab::syfis
