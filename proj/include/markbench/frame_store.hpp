#pragma once

#include <cstdint>
#include <filesystem>
#include <list>
#include <map>
#include <memory>
#include <mutex>
#include <stdexcept>
#include <string>
#include <vector>

#include "markbench/model.hpp"

namespace markbench {

// 8-bit RGB, row-major.
struct Frame {
  std::int64_t width = 0;
  std::int64_t height = 0;
  std::vector<std::uint8_t> data;

  Geometry geometry() const { return {width, height}; }
  friend bool operator==(const Frame&, const Frame&) = default;
};

// Single channel: per-pixel max over channels of |a - b|.
struct DiffFrame {
  std::int64_t width = 0;
  std::int64_t height = 0;
  std::vector<std::uint8_t> data;

  std::uint8_t at(std::int64_t x, std::int64_t y) const {
    return data[static_cast<std::size_t>(y * width + x)];
  }
  friend bool operator==(const DiffFrame&, const DiffFrame&) = default;
};

class FrameStoreError : public std::runtime_error {
 public:
  enum class Kind {
    no_frames,
    count_mismatch,
    geometry_mismatch,
    unreadable_frame,
    non_contiguous,
    out_of_range,
    write_failed,
  };

  FrameStoreError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

enum class FrameRole { original, forged };

// --- PNG codec -------------------------------------------------------------

// Decodes any PNG to 8-bit RGB. Grayscale is promoted; alpha is composited onto black.
Frame read_png(const std::filesystem::path& path);
Frame decode_png(const std::vector<std::uint8_t>& bytes);

std::vector<std::uint8_t> encode_png(const Frame& frame);
std::vector<std::uint8_t> encode_png(const DiffFrame& diff);
void write_png(const std::filesystem::path& path, const Frame& frame);
void write_png(const std::filesystem::path& path, const DiffFrame& diff);

// --- Sequence directories --------------------------------------------------

std::string frame_filename(std::int64_t index);  // frame_%06d.png

// Sorted frame files of a directory; throws on gaps or missing frame 0.
std::vector<std::filesystem::path> list_frames(const std::filesystem::path& dir);

// Validates both directories: equal, non-zero frame counts and equal frame-0
// geometry. Other frames are checked when they are read.
SequencePair open_sequence_pair(const std::filesystem::path& original,
                                const std::filesystem::path& forged,
                                std::string sequence_id = {});

// Uncached read with bounds and geometry checks.
Frame get_frame(const SequencePair& pair, FrameRole role, std::int64_t index);

// Thread-safe cached frame access for one pair.
class SequenceFrames {
 public:
  explicit SequenceFrames(SequencePair pair, std::size_t capacity = 32);

  const SequencePair& pair() const { return pair_; }
  std::shared_ptr<const Frame> get(FrameRole role, std::int64_t index) const;
  DiffFrame diff(std::int64_t index) const;

 private:
  using Key = std::pair<int, std::int64_t>;

  SequencePair pair_;
  std::size_t capacity_;
  mutable std::mutex mu_;
  mutable std::map<Key, std::shared_ptr<const Frame>> cache_;
  mutable std::list<Key> order_;  // insertion order for eviction
};

// --- Difference and regions ------------------------------------------------

DiffFrame frame_diff(const Frame& a, const Frame& b);

// Multiplies every value by `gain`, saturating at 255.
DiffFrame apply_gain(const DiffFrame& diff, double gain);

inline constexpr int kDefaultThreshold = 25;
inline constexpr std::int64_t kDefaultMinArea = 16;

// Boxes of 8-connected components of {value > threshold} holding at least
// `min_area` pixels, largest component first.
std::vector<BoundingBox> candidate_regions(const DiffFrame& diff, int threshold = kDefaultThreshold,
                                           std::int64_t min_area = kDefaultMinArea);

}  // namespace markbench
