// Canonical data model: boxes, triplet annotations, frames and clips.
#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "oed/common.hpp"
#include "oed/image.hpp"
#include "oed/vocab.hpp"

namespace oed {

// Normalized center-size box. Corner form is derived, never stored.
struct Box {
  double cx = 0, cy = 0, w = 0, h = 0;

  bool operator==(const Box& o) const {
    return cx == o.cx && cy == o.cy && w == o.w && h == o.h;
  }
};

// One annotated subject-object pair. Multi-predicate ground truth lives in a
// single annotation; metrics expand it to per-predicate triplets.
struct TripletAnnotation {
  int subject_category = 0;
  int object_category = 0;
  Box subject_box;
  Box object_box;
  std::vector<int> predicates;  // sorted, duplicate-free, non-empty

  bool operator==(const TripletAnnotation& o) const {
    return subject_category == o.subject_category &&
           object_category == o.object_category &&
           subject_box == o.subject_box && object_box == o.object_box &&
           predicates == o.predicates;
  }
};

struct FrameAnnotation {
  int frame_index = 0;
  std::vector<TripletAnnotation> triplets;
  // Generator metadata, never visible to training: per-triplet dropout flags
  // and the world object ids behind each subject/object.
  std::vector<uint8_t> dropped_flags;             // empty or one per triplet
  std::vector<std::array<int, 2>> instance_ids;   // empty or one per triplet

  // Triplets visible to the training loss (dropout applied).
  std::vector<TripletAnnotation> training_view() const {
    if (dropped_flags.empty()) return triplets;
    std::vector<TripletAnnotation> out;
    for (size_t i = 0; i < triplets.size(); ++i)
      if (!dropped_flags[i]) out.push_back(triplets[i]);
    return out;
  }

  bool operator==(const FrameAnnotation& o) const {
    return frame_index == o.frame_index && triplets == o.triplets &&
           dropped_flags == o.dropped_flags && instance_ids == o.instance_ids;
  }
};

// Per-object simulation state recorded by the generator. Kept with the clip
// so relations can be re-derived and occlusion-restricted evaluations can
// identify which triplets reference hidden objects.
struct ObjectState {
  int id = 0;
  int category = 0;
  ShapeKind shape = ShapeKind::kDisc;
  Rgb color = {0, 0, 0};
  double cx = 0, cy = 0, w = 0, h = 0;
  double vx = 0, vy = 0;

  Box box() const { return Box{cx, cy, w, h}; }

  bool operator==(const ObjectState& o) const {
    return id == o.id && category == o.category && shape == o.shape &&
           color == o.color && cx == o.cx && cy == o.cy && w == o.w &&
           h == o.h && vx == o.vx && vy == o.vy;
  }
};

struct WorldFrame {
  std::vector<ObjectState> objects;
  std::vector<int> occluded_ids;  // objects masked in this frame's render

  bool operator==(const WorldFrame& o) const {
    return objects == o.objects && occluded_ids == o.occluded_ids;
  }
};

struct WorldRecord {
  std::vector<WorldFrame> frames;

  bool operator==(const WorldRecord& o) const { return frames == o.frames; }
};

struct VideoClip {
  std::string clip_id;
  std::vector<Image> frames;
  std::vector<FrameAnnotation> annotations;  // complete (pre-dropout) view
  int target_index = 0;
  std::vector<int> reference_indices;
  WorldRecord world;  // generator metadata

  bool operator==(const VideoClip& o) const {
    return clip_id == o.clip_id && frames == o.frames &&
           annotations == o.annotations && target_index == o.target_index &&
           reference_indices == o.reference_indices && world == o.world;
  }
};

struct ValidationReport {
  std::vector<std::string> violations;
  bool ok() const { return violations.empty(); }
};

namespace detail {
inline bool degenerate_box(const Box& b) { return !(b.w > 0) || !(b.h > 0); }

inline void validate_box(const Box& b, const std::string& where,
                         ValidationReport& report) {
  if (b.cx < 0 || b.cx > 1 || b.cy < 0 || b.cy > 1)
    report.violations.push_back(where + ": box center out of range");
  if (detail::degenerate_box(b))
    report.violations.push_back(where + ": degenerate box");
  else if (b.w > 1 || b.h > 1)
    report.violations.push_back(where + ": box size out of range");
}
}  // namespace detail

// Reports every invariant violation; never throws.
inline ValidationReport validate_clip(const VideoClip& clip,
                                      const Vocabulary& vocab) {
  ValidationReport report;
  auto add = [&](const std::string& msg) { report.violations.push_back(msg); };

  if (clip.frames.size() != clip.annotations.size())
    add("clip " + clip.clip_id + ": frames/annotations length mismatch");
  int num_frames = static_cast<int>(clip.frames.size());
  if (clip.target_index < 0 || clip.target_index >= num_frames)
    add("clip " + clip.clip_id + ": target index out of range");
  std::vector<int> seen_refs;
  for (int r : clip.reference_indices) {
    if (r < 0 || r >= num_frames) {
      add("clip " + clip.clip_id + ": reference index out of range");
      continue;
    }
    bool dup = false;
    for (int s : seen_refs) dup = dup || s == r;
    if (dup) add("clip " + clip.clip_id + ": duplicate reference index");
    seen_refs.push_back(r);
    if (r == clip.target_index && num_frames > 1)
      add("clip " + clip.clip_id + ": reference equals target");
  }

  for (size_t fi = 0; fi < clip.annotations.size(); ++fi) {
    const FrameAnnotation& frame = clip.annotations[fi];
    const std::string fwhere =
        "clip " + clip.clip_id + " frame " + std::to_string(frame.frame_index);
    if (!frame.dropped_flags.empty() &&
        frame.dropped_flags.size() != frame.triplets.size())
      add(fwhere + ": dropped_flags length mismatch");
    for (size_t ti = 0; ti < frame.triplets.size(); ++ti) {
      const TripletAnnotation& t = frame.triplets[ti];
      const std::string twhere = fwhere + " triplet " + std::to_string(ti);
      if (!vocab.valid_real_object_index(t.subject_category))
        add(twhere + ": subject category index out of range");
      if (!vocab.valid_real_object_index(t.object_category))
        add(twhere + ": object category index out of range");
      detail::validate_box(t.subject_box, twhere + " subject", report);
      detail::validate_box(t.object_box, twhere + " object", report);
      if (t.predicates.empty()) add(twhere + ": empty predicate set");
      int attention_count = 0;
      for (size_t pi = 0; pi < t.predicates.size(); ++pi) {
        int p = t.predicates[pi];
        if (!vocab.valid_predicate_index(p)) {
          add(twhere + ": predicate index out of range");
          continue;
        }
        for (size_t pj = 0; pj < pi; ++pj)
          if (t.predicates[pj] == p) add(twhere + ": duplicate predicate");
        if (vocab.predicate_type[p] == PredicateType::kAttention)
          ++attention_count;
      }
      if (attention_count > 1)
        add(twhere + ": more than one attention predicate");
      for (size_t tj = 0; tj < ti; ++tj) {
        const TripletAnnotation& u = frame.triplets[tj];
        if (u.subject_category == t.subject_category &&
            u.object_category == t.object_category &&
            u.subject_box == t.subject_box && u.object_box == t.object_box)
          add(twhere + ": duplicate pair key");
      }
    }
  }
  return report;
}

// Deterministic injective key over (subject, predicate, object) label triples.
inline uint64_t canonical_triplet_key(int subject_category, int predicate,
                                      int object_category,
                                      const Vocabulary& vocab) {
  require(vocab.valid_object_index(subject_category),
          "canonical_triplet_key: subject index out of range");
  require(vocab.valid_predicate_index(predicate),
          "canonical_triplet_key: predicate index out of range");
  require(vocab.valid_object_index(object_category),
          "canonical_triplet_key: object index out of range");
  uint64_t num_obj = vocab.object_categories.size();
  uint64_t num_pred = vocab.predicate_categories.size();
  return (static_cast<uint64_t>(subject_category) * num_pred +
          static_cast<uint64_t>(predicate)) *
             num_obj +
         static_cast<uint64_t>(object_category);
}

}  // namespace oed
