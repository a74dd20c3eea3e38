#include "markbench/model.hpp"

#include <algorithm>
#include <set>

namespace markbench {

BoxCheck validate_box(const BoundingBox& b, std::int64_t width, std::int64_t height) {
  if (b.x1 < 0) return {"x1 >= 0 violated"};
  if (b.y1 < 0) return {"y1 >= 0 violated"};
  if (!(b.x1 < b.x2)) return {"x1 < x2 violated"};
  if (!(b.y1 < b.y2)) return {"y1 < y2 violated"};
  if (b.x2 > width) return {"x2 <= width violated"};
  if (b.y2 > height) return {"y2 <= height violated"};
  return {};
}

std::int64_t box_area(const BoundingBox& b) { return (b.x2 - b.x1) * (b.y2 - b.y1); }

std::string_view to_string(BoxSource source) {
  switch (source) {
    case BoxSource::manual:
      return "manual";
    case BoxSource::predicted:
      return "predicted";
    case BoxSource::corrected:
      return "corrected";
  }
  return "unknown";
}

std::optional<BoxSource> parse_box_source(std::string_view text) {
  if (text == "manual") return BoxSource::manual;
  if (text == "predicted") return BoxSource::predicted;
  if (text == "corrected") return BoxSource::corrected;
  return std::nullopt;
}

namespace {

template <class Boxes>
auto lower_bound_frame(Boxes& boxes, FrameIndex frame) {
  return std::lower_bound(boxes.begin(), boxes.end(), frame,
                          [](const KeyedBox& kb, FrameIndex f) { return kb.frame < f; });
}

}  // namespace

const KeyedBox* Track::find(FrameIndex frame) const {
  auto it = lower_bound_frame(boxes_, frame);
  return it != boxes_.end() && it->frame == frame ? &*it : nullptr;
}

const KeyedBox* Track::find_id(std::string_view box_id) const {
  auto it = std::find_if(boxes_.begin(), boxes_.end(),
                         [&](const KeyedBox& kb) { return kb.box_id == box_id; });
  return it != boxes_.end() ? &*it : nullptr;
}

void Track::upsert(KeyedBox kb) {
  auto it = lower_bound_frame(boxes_, kb.frame);
  if (it != boxes_.end() && it->frame == kb.frame)
    *it = std::move(kb);
  else
    boxes_.insert(it, std::move(kb));
}

bool Track::erase_frame(FrameIndex frame) {
  auto it = lower_bound_frame(boxes_, frame);
  if (it == boxes_.end() || it->frame != frame) return false;
  boxes_.erase(it);
  return true;
}

bool Track::erase_id(std::string_view box_id) {
  auto it = std::find_if(boxes_.begin(), boxes_.end(),
                         [&](const KeyedBox& kb) { return kb.box_id == box_id; });
  if (it == boxes_.end()) return false;
  boxes_.erase(it);
  return true;
}

void Track::assign(std::vector<KeyedBox> boxes) {
  for (std::size_t i = 1; i < boxes.size(); ++i) {
    if (boxes[i - 1].frame >= boxes[i].frame)
      throw TrackError("track '" + track_id_ + "': frame " + std::to_string(boxes[i].frame) +
                       " is not after frame " + std::to_string(boxes[i - 1].frame));
  }
  boxes_ = std::move(boxes);
}

std::vector<KeyedBox> Track::keypoints() const {
  std::vector<KeyedBox> out;
  std::copy_if(boxes_.begin(), boxes_.end(), std::back_inserter(out),
               [](const KeyedBox& kb) { return kb.is_keypoint(); });
  return out;
}

std::size_t Track::keypoint_count() const {
  return static_cast<std::size_t>(std::count_if(
      boxes_.begin(), boxes_.end(), [](const KeyedBox& kb) { return kb.is_keypoint(); }));
}

Track* AnnotationDocument::find_track(std::string_view track_id) {
  auto it = std::find_if(tracks.begin(), tracks.end(),
                         [&](const Track& t) { return t.track_id() == track_id; });
  return it != tracks.end() ? &*it : nullptr;
}

const Track* AnnotationDocument::find_track(std::string_view track_id) const {
  return const_cast<AnnotationDocument*>(this)->find_track(track_id);
}

Track& AnnotationDocument::ensure_track(const std::string& track_id) {
  if (Track* t = find_track(track_id)) return *t;
  return tracks.emplace_back(track_id);
}

std::string describe(const DocumentIssue& issue) {
  std::string out = "track '" + issue.track_id + "'";
  if (issue.frame) out += " frame " + std::to_string(*issue.frame);
  return out + ": " + issue.message;
}

std::vector<DocumentIssue> validate_document(const AnnotationDocument& doc,
                                             const SequencePair& pair) {
  std::vector<DocumentIssue> issues;
  if (doc.sequence_id != pair.sequence_id) {
    issues.push_back({"", std::nullopt,
                      "sequence_id '" + doc.sequence_id + "' does not match pair '" +
                          pair.sequence_id + "'"});
    return issues;
  }
  std::set<std::string> track_ids;
  for (const Track& track : doc.tracks) {
    if (!track_ids.insert(track.track_id()).second)
      issues.push_back({track.track_id(), std::nullopt, "duplicate track_id"});
    std::set<std::string> box_ids;
    const KeyedBox* prev = nullptr;
    for (const KeyedBox& kb : track.boxes()) {
      if (prev && prev->frame >= kb.frame)
        issues.push_back({track.track_id(), kb.frame, "frames not strictly increasing"});
      if (kb.frame < 0 || kb.frame >= pair.frame_count)
        issues.push_back({track.track_id(), kb.frame,
                          "frame outside [0, " + std::to_string(pair.frame_count) + ")"});
      if (auto check = validate_box(kb.box, pair.width, pair.height); !check)
        issues.push_back({track.track_id(), kb.frame, *check.violation});
      if (!box_ids.insert(kb.box_id).second)
        issues.push_back({track.track_id(), kb.frame, "duplicate box_id '" + kb.box_id + "'"});
      prev = &kb;
    }
  }
  return issues;
}

}  // namespace markbench
