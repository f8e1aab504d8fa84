#include "therif/core/participant.hpp"

#include "therif/core/error.hpp"

namespace therif {

AgeBucket age_bucket(int age_years) {
  if (age_years < kMinAge || age_years > kMaxAge) {
    throw RangeError("age_years", "age " + std::to_string(age_years) + " outside [18, 87]");
  }
  if (age_years <= 25) return AgeBucket::Age18To25;
  if (age_years <= 35) return AgeBucket::Age26To35;
  if (age_years <= 45) return AgeBucket::Age36To45;
  if (age_years <= 55) return AgeBucket::Age46To55;
  return AgeBucket::Age56To87;
}

std::string_view age_bucket_label(AgeBucket bucket) {
  switch (bucket) {
    case AgeBucket::Age18To25: return "18-25";
    case AgeBucket::Age26To35: return "26-35";
    case AgeBucket::Age36To45: return "36-45";
    case AgeBucket::Age46To55: return "46-55";
    case AgeBucket::Age56To87: return "56-87";
  }
  return "?";
}

AgeBucket parse_age_bucket(std::string_view label) {
  for (auto b : kAllAgeBuckets) {
    if (age_bucket_label(b) == label) return b;
  }
  throw ParseError("unknown age bucket '" + std::string(label) + "'");
}

Participant make_participant(std::string id, int age_years, double dyslexia_score, double threshold) {
  age_bucket(age_years);  // range check
  if (id.empty()) throw Error("participant id must not be empty");
  return Participant{std::move(id), age_years, dyslexia_score > threshold, dyslexia_score};
}

}  // namespace therif
