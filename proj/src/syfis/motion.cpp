#include "syfis/motion.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace vlnlab::syfis {

namespace {
const std::array<const char*, kMotionCategoryCount> kCategoryNames = {
    "FORWARD", "LEFT", "RIGHT", "UP", "DOWN", "STOP"};
}

const char* category_name(MotionCategory c) {
  return kCategoryNames[static_cast<int>(c)];
}

MotionCategory category_from_name(const std::string& name) {
  for (int i = 0; i < kMotionCategoryCount; ++i)
    if (name == kCategoryNames[i]) return static_cast<MotionCategory>(i);
  throw InvalidParameterError("unknown motion category: " + name);
}

MotionCategory select_motion_category(double rel_heading_deg,
                                      double rel_elevation_deg, bool is_stop,
                                      double threshold_deg) {
  if (is_stop) return MotionCategory::kStop;
  if (std::abs(rel_elevation_deg) > threshold_deg)
    return rel_elevation_deg > 0.0 ? MotionCategory::kUp
                                   : MotionCategory::kDown;
  if (std::abs(rel_heading_deg) > threshold_deg)
    return rel_heading_deg > 0.0 ? MotionCategory::kRight
                                 : MotionCategory::kLeft;
  return MotionCategory::kForward;
}

MotionDictionary MotionDictionary::builtin() {
  MotionDictionary d;
  d.phrases_[static_cast<int>(MotionCategory::kForward)] = {
      "go straight toward", "walk toward",     "head to",
      "continue to",        "move toward",     "walk straight to",
      "go forward to",      "proceed to"};
  d.phrases_[static_cast<int>(MotionCategory::kLeft)] = {
      "turn left to",      "turn left toward", "take a left to",
      "veer left toward",  "bear left to",     "go left toward",
      "swing left to",     "turn left facing"};
  d.phrases_[static_cast<int>(MotionCategory::kRight)] = {
      "turn right to",     "turn right toward", "take a right to",
      "veer right toward", "bear right to",     "go right toward",
      "swing right to",    "turn right facing"};
  d.phrases_[static_cast<int>(MotionCategory::kUp)] = {
      "go up to",       "walk up to",   "climb up to", "head up toward",
      "ascend to",      "go upstairs to", "climb toward", "move up to"};
  d.phrases_[static_cast<int>(MotionCategory::kDown)] = {
      "go down to",     "walk down to", "head down toward", "descend to",
      "go downstairs to", "climb down to", "step down to",  "move down to"};
  d.phrases_[static_cast<int>(MotionCategory::kStop)] = {
      "stop at",  "stop by",   "wait at", "stand by",
      "stay at",  "stop near", "halt at", "remain by"};
  return d;
}

MotionDictionary MotionDictionary::from_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open motion dictionary: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("motion dictionary " + path + ": " + e.what());
  }
  MotionDictionary d;
  for (int i = 0; i < kMotionCategoryCount; ++i) {
    const std::string key = kCategoryNames[i];
    if (!j.contains(key))
      throw FormatError("motion dictionary missing category " + key);
    d.phrases_[i] = j.at(key).get<std::vector<std::string>>();
  }
  return d;
}

void MotionDictionary::validate(int max_phrase_words) const {
  for (int i = 0; i < kMotionCategoryCount; ++i) {
    const auto& list = phrases_[i];
    if (list.size() < 3)
      throw InvalidParameterError(std::string("motion category ") +
                                  kCategoryNames[i] +
                                  " needs at least 3 phrases");
    std::set<std::string> unique(list.begin(), list.end());
    if (unique.size() != list.size())
      throw InvalidParameterError(std::string("duplicate phrase in ") +
                                  kCategoryNames[i]);
    for (const auto& phrase : list) {
      std::istringstream words(phrase);
      int count = 0;
      std::string w;
      while (words >> w) ++count;
      if (count == 0 || count > max_phrase_words)
        throw InvalidParameterError("phrase \"" + phrase + "\" must have 1.." +
                                    std::to_string(max_phrase_words) +
                                    " words");
    }
  }
}

}  // namespace vlnlab::syfis
