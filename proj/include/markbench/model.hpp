#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace markbench {

using FrameIndex = std::int64_t;

// Axis-aligned box covering columns [x1, x2) and rows [y1, y2).
struct BoundingBox {
  std::int64_t x1 = 0;
  std::int64_t y1 = 0;
  std::int64_t x2 = 0;
  std::int64_t y2 = 0;

  friend bool operator==(const BoundingBox&, const BoundingBox&) = default;
};

struct Geometry {
  std::int64_t width = 0;
  std::int64_t height = 0;

  friend bool operator==(const Geometry&, const Geometry&) = default;
};

// Outcome of validate_box. `violation` names the first failed constraint.
struct BoxCheck {
  std::optional<std::string> violation;

  bool ok() const { return !violation.has_value(); }
  explicit operator bool() const { return ok(); }
};

BoxCheck validate_box(const BoundingBox& box, std::int64_t width, std::int64_t height);
inline BoxCheck validate_box(const BoundingBox& box, const Geometry& g) {
  return validate_box(box, g.width, g.height);
}

std::int64_t box_area(const BoundingBox& box);

enum class BoxSource { manual, predicted, corrected };

std::string_view to_string(BoxSource source);
std::optional<BoxSource> parse_box_source(std::string_view text);

// Manual and corrected boxes anchor interpolation; predicted ones never do.
inline bool is_keypoint(BoxSource s) { return s != BoxSource::predicted; }

struct KeyedBox {
  FrameIndex frame = 0;
  BoundingBox box;
  BoxSource source = BoxSource::manual;
  std::string box_id;
  nlohmann::json extra = nlohmann::json::object();  // unknown fields, kept verbatim

  bool is_keypoint() const { return markbench::is_keypoint(source); }

  friend bool operator==(const KeyedBox&, const KeyedBox&) = default;
};

class TrackError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// One forged object across a frame range. At most one box per frame;
// boxes are kept sorted by frame.
class Track {
 public:
  Track() = default;
  explicit Track(std::string track_id, std::string label = {})
      : track_id_(std::move(track_id)), label_(std::move(label)) {}

  const std::string& track_id() const { return track_id_; }
  const std::string& label() const { return label_; }
  void set_label(std::string label) { label_ = std::move(label); }

  const std::vector<KeyedBox>& boxes() const { return boxes_; }
  bool empty() const { return boxes_.empty(); }
  std::size_t size() const { return boxes_.size(); }

  const KeyedBox* find(FrameIndex frame) const;
  const KeyedBox* find_id(std::string_view box_id) const;

  // Inserts or replaces the box at `kb.frame`.
  void upsert(KeyedBox kb);
  bool erase_frame(FrameIndex frame);
  bool erase_id(std::string_view box_id);

  // Replaces all boxes; throws TrackError unless frames strictly increase.
  void assign(std::vector<KeyedBox> boxes);

  std::vector<KeyedBox> keypoints() const;
  std::size_t keypoint_count() const;

  nlohmann::json& extra() { return extra_; }
  const nlohmann::json& extra() const { return extra_; }

  friend bool operator==(const Track&, const Track&) = default;

 private:
  std::string track_id_;
  std::string label_;
  std::vector<KeyedBox> boxes_;
  nlohmann::json extra_ = nlohmann::json::object();
};

struct SequencePair {
  std::string sequence_id;
  std::string original_source;
  std::string forged_source;
  std::int64_t width = 0;
  std::int64_t height = 0;
  std::int64_t frame_count = 0;

  Geometry geometry() const { return {width, height}; }

  friend bool operator==(const SequencePair&, const SequencePair&) = default;
};

inline constexpr int kSchemaVersion = 1;

struct AnnotationDocument {
  int schema_version = kSchemaVersion;
  std::string sequence_id;
  std::int64_t version = 0;
  std::vector<Track> tracks;
  nlohmann::json extra = nlohmann::json::object();

  Track* find_track(std::string_view track_id);
  const Track* find_track(std::string_view track_id) const;
  Track& ensure_track(const std::string& track_id);

  friend bool operator==(const AnnotationDocument&, const AnnotationDocument&) = default;
};

// A single invariant violation found in a document.
struct DocumentIssue {
  std::string track_id;
  std::optional<FrameIndex> frame;
  std::string message;
};

std::string describe(const DocumentIssue& issue);

// Checks every box against the pair's geometry, the frame range, and
// box_id uniqueness within each track. Returns all issues in document order.
std::vector<DocumentIssue> validate_document(const AnnotationDocument& doc,
                                             const SequencePair& pair);

}  // namespace markbench
