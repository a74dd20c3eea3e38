#pragma once

#include <stdexcept>
#include <vector>

#include "markbench/model.hpp"

namespace markbench {

class InterpolationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class InsufficientKeypoints : public std::runtime_error {
 public:
  explicit InsufficientKeypoints(const std::string& track_id)
      : std::runtime_error("insufficient keypoints in track '" + track_id + "'"),
        track_id_(track_id) {}
  const std::string& track_id() const { return track_id_; }

 private:
  std::string track_id_;
};

// Rounds the non-negative-denominator fraction num/den to the nearest
// integer, ties away from zero. Exact for all inputs that fit in int64.
std::int64_t round_fraction(std::int64_t num, std::int64_t den);

// Linear interpolation of each corner coordinate between the box at frame m
// and the box at frame n, evaluated at frame k and rounded per coordinate.
BoundingBox interpolate_box(FrameIndex m, const BoundingBox& box_m, FrameIndex n,
                            const BoundingBox& box_n, FrameIndex k);

struct Segment {
  KeyedBox start;
  KeyedBox end;
};

// Interior frames (start.frame, end.frame), each tagged predicted.
std::vector<KeyedBox> predict_segment(const Segment& seg, std::string_view track_id = {});

// Consecutive keypoint pairs of a track, in frame order.
std::vector<Segment> segments_of(const Track& track);

// Box id given to the predicted box of `track_id` at `frame`.
std::string predicted_box_id(std::string_view track_id, FrameIndex frame);

// Completes a track over [S, E]: keypoints are kept verbatim, stale
// predicted boxes are dropped and every interior frame is re-predicted.
// Boxes outside the keypoint span are discarded.
Track predict_track(const Track& track);

}  // namespace markbench
