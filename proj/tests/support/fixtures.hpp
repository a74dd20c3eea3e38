#pragma once

// Shared test fixtures and independent oracles. Nothing here calls into the
// code paths it is used to check.

#include <cstdint>
#include <filesystem>
#include <random>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "markbench/frame_store.hpp"
#include "markbench/model.hpp"

namespace markbench::testing {

class TempDir {
 public:
  TempDir();
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

Frame solid_frame(std::int64_t width, std::int64_t height, std::uint8_t r, std::uint8_t g, std::uint8_t b);
void set_pixel(Frame& f, std::int64_t x, std::int64_t y, std::uint8_t r, std::uint8_t g, std::uint8_t b);

// Writes `count` copies of `frame` as frame_%06d.png. With `hardlink`, one
// file is encoded and the rest are links to it.
void write_sequence(const std::filesystem::path& dir, const Frame& frame, std::int64_t count,
                    bool hardlink = false);
void write_sequence(const std::filesystem::path& dir, const std::vector<Frame>& frames);

// <root>/<id>/{original,forged}/ with identical solid frames.
void write_pair(const std::filesystem::path& root, const std::string& id, std::int64_t width,
                std::int64_t height, std::int64_t frames, bool hardlink = false);

std::string read_text(const std::filesystem::path& path);

// --- random generators -----------------------------------------------------

using Rng = std::mt19937_64;

std::int64_t uniform(Rng& rng, std::int64_t lo, std::int64_t hi);  // inclusive
BoundingBox random_box(Rng& rng, std::int64_t width, std::int64_t height);

// Random piecewise-linear reference over [0, frames): random lattice boxes at
// the breakpoints (always including both ends), oracle interpolation between.
struct PiecewiseTrack {
  std::vector<std::int64_t> breakpoints;
  std::vector<BoundingBox> boxes;  // one per frame
};
PiecewiseTrack random_piecewise_track(Rng& rng, std::int64_t frames, std::int64_t width,
                                      std::int64_t height, int max_breaks);

AnnotationDocument random_document(Rng& rng, const std::string& sequence_id, std::int64_t frame_count,
                                   std::int64_t width, std::int64_t height);

// Corpus of `pairs` sequences whose totals are exactly F1 tampered of F2
// frames and B1 keypoint of B2 boxes. Every box is (0,0,1,1).
struct CorpusTotals {
  std::int64_t f1, f2, b1, b2;
};
inline constexpr CorpusTotals kTable1{11074, 47368, 586, 11837};
std::vector<std::pair<AnnotationDocument, SequencePair>> synthetic_corpus(const CorpusTotals& totals, int pairs);

// --- oracles ---------------------------------------------------------------

// Corner interpolation evaluated with boost::rational, rounded half away from zero.
BoundingBox oracle_interpolate(std::int64_t m, const BoundingBox& bm, std::int64_t n, const BoundingBox& bn,
                               std::int64_t k);

// IoU by enumerating lattice pixels.
double oracle_iou(const BoundingBox& a, const BoundingBox& b);

// Tight boxes of 8-connected {v > threshold} components with >= min_area
// pixels, found with union-find over neighbouring pixel pairs.
std::multiset<std::tuple<std::int64_t, std::int64_t, std::int64_t, std::int64_t>> oracle_regions(
    const DiffFrame& diff, int threshold, std::int64_t min_area);

// Max corner error when `keys` (sorted, covering both ends) anchor an
// oracle interpolation of `reference`.
std::int64_t oracle_reconstruction_error(const std::vector<BoundingBox>& reference,
                                         const std::vector<std::int64_t>& keys);

}  // namespace markbench::testing
