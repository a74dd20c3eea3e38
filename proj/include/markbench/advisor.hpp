#pragma once

#include <map>
#include <stdexcept>
#include <vector>

#include "markbench/model.hpp"

namespace markbench {

// One box per frame, keyed by frame index.
using FrameBoxes = std::map<FrameIndex, BoundingBox>;

FrameBoxes frame_boxes(const Track& track);

struct TrackMetrics {
  double mean_iou = 0.0;
  double min_iou = 0.0;
  std::int64_t max_corner_error = 0;
  std::int64_t frames_compared = 0;
};

class AdvisorError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

double iou(const BoundingBox& a, const BoundingBox& b);

// Largest absolute coordinate difference between two boxes.
std::int64_t corner_error(const BoundingBox& a, const BoundingBox& b);

// Throws AdvisorError naming the first frame present in one input but not the other.
TrackMetrics evaluate_track(const FrameBoxes& predicted, const FrameBoxes& reference);

// Smallest-effort keypoint frames (always including the first and last) such
// that interpolating between them stays within `tolerance` pixels of the
// reference on every frame. Found by recursive farthest-frame subdivision.
std::vector<FrameIndex> suggest_keypoints(const FrameBoxes& reference, std::int64_t tolerance);

// Interpolated per-frame boxes obtained from `keyframes` of `reference`.
FrameBoxes reconstruct(const FrameBoxes& reference, const std::vector<FrameIndex>& keyframes);

}  // namespace markbench
