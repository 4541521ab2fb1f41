#ifndef VLNLAB_SYFIS_MOTION_HPP
#define VLNLAB_SYFIS_MOTION_HPP

#include <array>
#include <string>
#include <vector>

#include "common/errors.hpp"
#include "common/rng.hpp"

namespace vlnlab::syfis {

enum class MotionCategory { kForward = 0, kLeft, kRight, kUp, kDown, kStop };

inline constexpr int kMotionCategoryCount = 6;

const char* category_name(MotionCategory c);
MotionCategory category_from_name(const std::string& name);

// Category rule for one step. Precedence: STOP, then elevation, then
// heading, then FORWARD. Positive heading difference means RIGHT, positive
// elevation difference means UP.
MotionCategory select_motion_category(double rel_heading_deg,
                                      double rel_elevation_deg, bool is_stop,
                                      double threshold_deg = 30.0);

// Verb phrases per category. Every phrase already carries its preposition so
// "<phrase> the <landmark>" is grammatical.
class MotionDictionary {
 public:
  static MotionDictionary builtin();
  static MotionDictionary from_json_file(const std::string& path);

  const std::vector<std::string>& phrases(MotionCategory c) const {
    return phrases_[static_cast<int>(c)];
  }

  // At least 3 unique phrases per category, each short enough to fit the
  // sub-instruction token budget.
  void validate(int max_phrase_words) const;

 private:
  std::array<std::vector<std::string>, kMotionCategoryCount> phrases_;
};

}  // namespace vlnlab::syfis

#endif  // VLNLAB_SYFIS_MOTION_HPP
