#pragma once

#include <string>
#include <string_view>

namespace therif {

inline constexpr int kMinAge = 18;
inline constexpr int kMaxAge = 87;
inline constexpr double kDefaultDyslexiaThreshold = 45.0;

enum class AgeBucket { Age18To25, Age26To35, Age36To45, Age46To55, Age56To87 };

inline constexpr AgeBucket kAllAgeBuckets[] = {AgeBucket::Age18To25, AgeBucket::Age26To35,
                                               AgeBucket::Age36To45, AgeBucket::Age46To55,
                                               AgeBucket::Age56To87};

// Throws RangeError outside [18, 87].
AgeBucket age_bucket(int age_years);
std::string_view age_bucket_label(AgeBucket bucket);
AgeBucket parse_age_bucket(std::string_view label);

struct Participant {
  std::string participant_id;
  int age_years = kMinAge;
  bool dyslexia = false;
  double dyslexia_score = 0.0;

  AgeBucket bucket() const { return age_bucket(age_years); }
  bool operator==(const Participant&) const = default;
};

// dyslexia is derived from the questionnaire score.
Participant make_participant(std::string id, int age_years, double dyslexia_score,
                             double threshold = kDefaultDyslexiaThreshold);

}  // namespace therif
