#include "markbench/interpolation.hpp"

#include <string>

namespace markbench {

std::int64_t round_fraction(std::int64_t num, std::int64_t den) {
  if (den <= 0) throw InterpolationError("round_fraction: den must be positive");
  std::int64_t q = num / den;  // truncates toward zero
  std::int64_t r = num % den;
  if (r < 0) r = -r;
  if (2 * r >= den) q += num < 0 ? -1 : 1;
  return q;
}

namespace {

std::int64_t lerp_coordinate(std::int64_t a, std::int64_t b, FrameIndex m, FrameIndex n,
                             FrameIndex k) {
  const std::int64_t span = n - m;
  // a + (b - a)(k - m)/(n - m) as a single fraction over `span`.
  return round_fraction(a * span + (b - a) * (k - m), span);
}

}  // namespace

BoundingBox interpolate_box(FrameIndex m, const BoundingBox& box_m, FrameIndex n,
                            const BoundingBox& box_n, FrameIndex k) {
  if (!(m < n))
    throw InterpolationError("interpolate_box: requires m < n (m=" + std::to_string(m) +
                             ", n=" + std::to_string(n) + ")");
  if (k < m || k > n)
    throw InterpolationError("interpolate_box: requires m <= k <= n (m=" + std::to_string(m) +
                             ", k=" + std::to_string(k) + ", n=" + std::to_string(n) + ")");
  if (k == m) return box_m;
  if (k == n) return box_n;
  return {lerp_coordinate(box_m.x1, box_n.x1, m, n, k),
          lerp_coordinate(box_m.y1, box_n.y1, m, n, k),
          lerp_coordinate(box_m.x2, box_n.x2, m, n, k),
          lerp_coordinate(box_m.y2, box_n.y2, m, n, k)};
}

std::string predicted_box_id(std::string_view track_id, FrameIndex frame) {
  std::string id(track_id);
  if (!id.empty()) id += '-';
  return id + "p" + std::to_string(frame);
}

std::vector<KeyedBox> predict_segment(const Segment& seg, std::string_view track_id) {
  const FrameIndex m = seg.start.frame;
  const FrameIndex n = seg.end.frame;
  if (!(m < n))
    throw InterpolationError("predict_segment: start frame " + std::to_string(m) +
                             " must precede end frame " + std::to_string(n));
  if (!seg.start.is_keypoint() || !seg.end.is_keypoint())
    throw InterpolationError("predict_segment: endpoints must be manual or corrected");

  std::vector<KeyedBox> out;
  out.reserve(static_cast<std::size_t>(n - m - 1));
  for (FrameIndex k = m + 1; k < n; ++k) {
    KeyedBox kb;
    kb.frame = k;
    kb.box = interpolate_box(m, seg.start.box, n, seg.end.box, k);
    kb.source = BoxSource::predicted;
    kb.box_id = predicted_box_id(track_id, k);
    out.push_back(std::move(kb));
  }
  return out;
}

std::vector<Segment> segments_of(const Track& track) {
  std::vector<Segment> segments;
  const KeyedBox* start = nullptr;
  for (const KeyedBox& kb : track.boxes()) {
    if (!kb.is_keypoint()) continue;
    if (start) segments.push_back({*start, kb});
    start = &kb;
  }
  return segments;
}

Track predict_track(const Track& track) {
  const std::vector<Segment> segments = segments_of(track);
  if (segments.empty()) throw InsufficientKeypoints(track.track_id());

  std::vector<KeyedBox> completed;
  completed.reserve(static_cast<std::size_t>(segments.back().end.frame -
                                             segments.front().start.frame + 1));
  completed.push_back(segments.front().start);
  for (const Segment& seg : segments) {
    for (KeyedBox& kb : predict_segment(seg, track.track_id())) completed.push_back(std::move(kb));
    completed.push_back(seg.end);
  }

  Track out(track.track_id(), track.label());
  out.extra() = track.extra();
  out.assign(std::move(completed));
  return out;
}

}  // namespace markbench
