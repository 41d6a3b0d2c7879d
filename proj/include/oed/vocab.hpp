// Category and predicate vocabulary shared by the generator, model and metrics.
#pragma once

#include <string>
#include <vector>

#include "oed/common.hpp"

namespace oed {

enum class PredicateType { kAttention = 0, kSpatial = 1, kContacting = 2 };

inline const char* to_string(PredicateType t) {
  switch (t) {
    case PredicateType::kAttention: return "attention";
    case PredicateType::kSpatial: return "spatial";
    case PredicateType::kContacting: return "contacting";
  }
  return "?";
}

inline PredicateType predicate_type_from_string(const std::string& s) {
  if (s == "attention") return PredicateType::kAttention;
  if (s == "spatial") return PredicateType::kSpatial;
  if (s == "contacting") return PredicateType::kContacting;
  fail("unknown predicate type: " + s);
}

// Index 0 of object_categories is the background sentinel; real categories
// start at 1. Predicates have no background class.
struct Vocabulary {
  std::vector<std::string> object_categories;
  std::vector<std::string> predicate_categories;
  std::vector<PredicateType> predicate_type;

  // Number of real (non-background) object categories.
  int num_object_classes() const {
    return static_cast<int>(object_categories.size()) - 1;
  }
  int num_predicates() const {
    return static_cast<int>(predicate_categories.size());
  }

  bool valid_object_index(int c) const {
    return c >= 0 && c < static_cast<int>(object_categories.size());
  }
  bool valid_real_object_index(int c) const {
    return c >= 1 && c < static_cast<int>(object_categories.size());
  }
  bool valid_predicate_index(int p) const {
    return p >= 0 && p < num_predicates();
  }

  void check() const {
    require(object_categories.size() >= 2,
            "vocabulary needs background plus at least one real category");
    require(predicate_categories.size() == predicate_type.size(),
            "each predicate needs exactly one type");
  }
};

// Synthetic benchmark vocabulary: one agent plus five thing categories and
// nine typed predicates. The spatial rules always assign one horizontal and
// one vertical predicate per pair, so these dominate the frequency ranking;
// "holding" is the rarest, giving the dataset a mild long tail.
namespace synth_predicates {
inline constexpr int kFacing = 0;
inline constexpr int kLeftOf = 1;
inline constexpr int kRightOf = 2;
inline constexpr int kAbove = 3;
inline constexpr int kBelow = 4;
inline constexpr int kOverlapping = 5;
inline constexpr int kTouching = 6;
inline constexpr int kHolding = 7;
inline constexpr int kApproaching = 8;
}  // namespace synth_predicates

inline Vocabulary synthetic_vocabulary() {
  Vocabulary v;
  v.object_categories = {"__background__", "agent", "box",  "ball",
                         "wedge",          "slab",  "ring"};
  v.predicate_categories = {"facing",      "left-of",  "right-of",
                            "above",       "below",    "overlapping",
                            "touching",    "holding",  "approaching"};
  v.predicate_type = {
      PredicateType::kAttention, PredicateType::kSpatial,
      PredicateType::kSpatial,   PredicateType::kSpatial,
      PredicateType::kSpatial,   PredicateType::kSpatial,
      PredicateType::kContacting, PredicateType::kContacting,
      PredicateType::kContacting};
  v.check();
  return v;
}

}  // namespace oed
