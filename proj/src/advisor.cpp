#include "markbench/advisor.hpp"

#include <algorithm>
#include <cstdlib>
#include <string>

#include "markbench/interpolation.hpp"

namespace markbench {

FrameBoxes frame_boxes(const Track& track) {
  FrameBoxes out;
  for (const KeyedBox& kb : track.boxes()) out.emplace(kb.frame, kb.box);
  return out;
}

double iou(const BoundingBox& a, const BoundingBox& b) {
  const std::int64_t ix = std::min(a.x2, b.x2) - std::max(a.x1, b.x1);
  const std::int64_t iy = std::min(a.y2, b.y2) - std::max(a.y1, b.y1);
  if (ix <= 0 || iy <= 0) return 0.0;
  const std::int64_t inter = ix * iy;
  const std::int64_t uni = box_area(a) + box_area(b) - inter;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

std::int64_t corner_error(const BoundingBox& a, const BoundingBox& b) {
  return std::max({std::abs(a.x1 - b.x1), std::abs(a.y1 - b.y1), std::abs(a.x2 - b.x2),
                   std::abs(a.y2 - b.y2)});
}

TrackMetrics evaluate_track(const FrameBoxes& predicted, const FrameBoxes& reference) {
  auto p = predicted.begin();
  auto r = reference.begin();
  while (p != predicted.end() && r != reference.end() && p->first == r->first) {
    ++p;
    ++r;
  }
  if (p != predicted.end() || r != reference.end()) {
    FrameIndex missing;
    if (p == predicted.end())
      missing = r->first;
    else if (r == reference.end())
      missing = p->first;
    else
      missing = std::min(p->first, r->first);
    throw AdvisorError("frame ranges differ: frame " + std::to_string(missing) +
                       " missing from " + (predicted.count(missing) ? "reference" : "predicted"));
  }

  TrackMetrics m;
  if (reference.empty()) return m;
  double sum = 0.0;
  m.min_iou = 1.0;
  for (const auto& [frame, ref] : reference) {
    const BoundingBox& pred = predicted.at(frame);
    const double v = iou(pred, ref);
    sum += v;
    m.min_iou = std::min(m.min_iou, v);
    m.max_corner_error = std::max(m.max_corner_error, corner_error(pred, ref));
  }
  m.frames_compared = static_cast<std::int64_t>(reference.size());
  m.mean_iou = sum / static_cast<double>(reference.size());
  // Keep min <= mean despite summation rounding.
  m.mean_iou = std::clamp(m.mean_iou, m.min_iou, 1.0);
  return m;
}

namespace {

void require_contiguous(const FrameBoxes& reference) {
  if (reference.size() < 2) throw AdvisorError("range too short");
  const FrameIndex first = reference.begin()->first;
  const FrameIndex last = reference.rbegin()->first;
  if (last - first + 1 != static_cast<FrameIndex>(reference.size()))
    throw AdvisorError("reference frames are not contiguous");
}

void subdivide(const std::vector<BoundingBox>& ref, std::size_t lo, std::size_t hi,
               std::int64_t tolerance, std::vector<std::size_t>& keep) {
  if (hi - lo < 2) return;
  const auto m = static_cast<FrameIndex>(lo);
  const auto n = static_cast<FrameIndex>(hi);
  std::int64_t worst = -1;
  std::size_t worst_at = lo;
  for (std::size_t k = lo + 1; k < hi; ++k) {
    const BoundingBox predicted = interpolate_box(m, ref[lo], n, ref[hi], static_cast<FrameIndex>(k));
    const std::int64_t err = corner_error(predicted, ref[k]);
    if (err > worst) {  // strict: ties stay on the lowest frame
      worst = err;
      worst_at = k;
    }
  }
  if (worst <= tolerance) return;
  subdivide(ref, lo, worst_at, tolerance, keep);
  keep.push_back(worst_at);
  subdivide(ref, worst_at, hi, tolerance, keep);
}

}  // namespace

std::vector<FrameIndex> suggest_keypoints(const FrameBoxes& reference, std::int64_t tolerance) {
  if (tolerance < 0) throw AdvisorError("tolerance must be non-negative");
  require_contiguous(reference);

  std::vector<BoundingBox> ref;
  ref.reserve(reference.size());
  for (const auto& [frame, box] : reference) ref.push_back(box);

  std::vector<std::size_t> keep{0};
  subdivide(ref, 0, ref.size() - 1, tolerance, keep);
  keep.push_back(ref.size() - 1);

  const FrameIndex first = reference.begin()->first;
  std::vector<FrameIndex> frames;
  frames.reserve(keep.size());
  for (std::size_t i : keep) frames.push_back(first + static_cast<FrameIndex>(i));
  return frames;
}

FrameBoxes reconstruct(const FrameBoxes& reference, const std::vector<FrameIndex>& keyframes) {
  Track track("reconstruct");
  for (FrameIndex f : keyframes) {
    auto it = reference.find(f);
    if (it == reference.end())
      throw AdvisorError("keyframe " + std::to_string(f) + " not in reference");
    track.upsert({f, it->second, BoxSource::manual, "k" + std::to_string(f)});
  }
  return frame_boxes(predict_track(track));
}

}  // namespace markbench
