#include "markbench/frame_store.hpp"

#include <png.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <regex>

namespace markbench {

namespace fs = std::filesystem;
using Kind = FrameStoreError::Kind;

// --- PNG codec -------------------------------------------------------------

namespace {

Frame finish_read(png_image& image, const std::string& what) {
  image.format = PNG_FORMAT_RGB;
  Frame frame;
  frame.width = image.width;
  frame.height = image.height;
  frame.data.resize(PNG_IMAGE_SIZE(image));
  png_color black{0, 0, 0};
  if (!png_image_finish_read(&image, &black, frame.data.data(), 0, nullptr)) {
    std::string msg = image.message;
    png_image_free(&image);
    throw FrameStoreError(Kind::unreadable_frame, "cannot decode " + what + ": " + msg);
  }
  return frame;
}

std::vector<std::uint8_t> encode(const std::uint8_t* pixels, std::int64_t width,
                                 std::int64_t height, png_uint_32 format) {
  png_image image;
  std::memset(&image, 0, sizeof image);
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(width);
  image.height = static_cast<png_uint_32>(height);
  image.format = format;
  png_alloc_size_t size = 0;
  if (!png_image_write_to_memory(&image, nullptr, &size, 0, pixels, 0, nullptr))
    throw FrameStoreError(Kind::write_failed, std::string("png encode: ") + image.message);
  std::vector<std::uint8_t> out(size);
  if (!png_image_write_to_memory(&image, out.data(), &size, 0, pixels, 0, nullptr))
    throw FrameStoreError(Kind::write_failed, std::string("png encode: ") + image.message);
  out.resize(size);
  return out;
}

void write_bytes(const fs::path& path, const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw FrameStoreError(Kind::write_failed, "cannot write " + path.string());
}

}  // namespace

Frame read_png(const fs::path& path) {
  png_image image;
  std::memset(&image, 0, sizeof image);
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&image, path.c_str()))
    throw FrameStoreError(Kind::unreadable_frame,
                          "cannot read " + path.string() + ": " + image.message);
  return finish_read(image, path.string());
}

Frame decode_png(const std::vector<std::uint8_t>& bytes) {
  png_image image;
  std::memset(&image, 0, sizeof image);
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&image, bytes.data(), bytes.size()))
    throw FrameStoreError(Kind::unreadable_frame, std::string("cannot decode png: ") + image.message);
  return finish_read(image, "png buffer");
}

std::vector<std::uint8_t> encode_png(const Frame& frame) {
  return encode(frame.data.data(), frame.width, frame.height, PNG_FORMAT_RGB);
}

std::vector<std::uint8_t> encode_png(const DiffFrame& diff) {
  return encode(diff.data.data(), diff.width, diff.height, PNG_FORMAT_GRAY);
}

void write_png(const fs::path& path, const Frame& frame) { write_bytes(path, encode_png(frame)); }
void write_png(const fs::path& path, const DiffFrame& diff) { write_bytes(path, encode_png(diff)); }

// --- Sequence directories --------------------------------------------------

std::string frame_filename(std::int64_t index) {
  std::array<char, 32> buf{};
  std::snprintf(buf.data(), buf.size(), "frame_%06lld.png", static_cast<long long>(index));
  return buf.data();
}

std::vector<fs::path> list_frames(const fs::path& dir) {
  std::error_code ec;
  if (!fs::is_directory(dir, ec))
    throw FrameStoreError(Kind::no_frames, "no frames found: " + dir.string() + " is not a directory");

  static const std::regex pattern(R"(frame_(\d{6,})\.png)");
  std::map<std::int64_t, fs::path> numbered;
  for (const auto& entry : fs::directory_iterator(dir)) {
    std::smatch match;
    const std::string name = entry.path().filename().string();
    if (entry.is_regular_file() && std::regex_match(name, match, pattern))
      numbered.emplace(std::stoll(match[1].str()), entry.path());
  }
  if (numbered.empty()) throw FrameStoreError(Kind::no_frames, "no frames found in " + dir.string());

  std::vector<fs::path> frames;
  frames.reserve(numbered.size());
  std::int64_t expected = 0;
  for (auto& [index, path] : numbered) {
    if (index != expected)
      throw FrameStoreError(Kind::non_contiguous, "non-contiguous numbering in " + dir.string() +
                                                      ": expected " + frame_filename(expected) +
                                                      ", found " + path.filename().string());
    frames.push_back(std::move(path));
    ++expected;
  }
  return frames;
}

SequencePair open_sequence_pair(const fs::path& original, const fs::path& forged,
                                std::string sequence_id) {
  const auto orig_frames = list_frames(original);
  const auto forged_frames = list_frames(forged);
  if (orig_frames.size() != forged_frames.size())
    throw FrameStoreError(Kind::count_mismatch,
                          "frame count mismatch: " + std::to_string(orig_frames.size()) +
                              " original vs " + std::to_string(forged_frames.size()) + " forged");

  const Frame a = read_png(orig_frames.front());
  const Frame b = read_png(forged_frames.front());
  if (a.geometry() != b.geometry())
    throw FrameStoreError(Kind::geometry_mismatch,
                          "geometry mismatch: original " + std::to_string(a.width) + "x" +
                              std::to_string(a.height) + " vs forged " + std::to_string(b.width) +
                              "x" + std::to_string(b.height));

  SequencePair pair;
  pair.sequence_id = sequence_id.empty() ? forged.parent_path().filename().string() : std::move(sequence_id);
  pair.original_source = original.string();
  pair.forged_source = forged.string();
  pair.width = a.width;
  pair.height = a.height;
  pair.frame_count = static_cast<std::int64_t>(orig_frames.size());
  return pair;
}

Frame get_frame(const SequencePair& pair, FrameRole role, std::int64_t index) {
  if (index < 0 || index >= pair.frame_count)
    throw FrameStoreError(Kind::out_of_range, "frame " + std::to_string(index) + " out of range [0, " +
                                                  std::to_string(pair.frame_count) + ")");
  const fs::path dir = role == FrameRole::original ? pair.original_source : pair.forged_source;
  Frame frame = read_png(dir / frame_filename(index));
  if (frame.width != pair.width || frame.height != pair.height)
    throw FrameStoreError(Kind::geometry_mismatch,
                          "geometry mismatch at " + (dir / frame_filename(index)).string() + ": " +
                              std::to_string(frame.width) + "x" + std::to_string(frame.height) +
                              ", expected " + std::to_string(pair.width) + "x" +
                              std::to_string(pair.height));
  return frame;
}

SequenceFrames::SequenceFrames(SequencePair pair, std::size_t capacity)
    : pair_(std::move(pair)), capacity_(std::max<std::size_t>(capacity, 2)) {}

std::shared_ptr<const Frame> SequenceFrames::get(FrameRole role, std::int64_t index) const {
  const Key key{static_cast<int>(role), index};
  {
    std::lock_guard lock(mu_);
    if (auto it = cache_.find(key); it != cache_.end()) return it->second;
  }
  // Decode outside the lock; concurrent misses on one key decode twice, which is harmless.
  auto frame = std::make_shared<const Frame>(get_frame(pair_, role, index));
  std::lock_guard lock(mu_);
  auto [it, inserted] = cache_.emplace(key, frame);
  if (inserted) {
    order_.push_back(key);
    while (order_.size() > capacity_) {
      cache_.erase(order_.front());
      order_.pop_front();
    }
  }
  return it->second;
}

DiffFrame SequenceFrames::diff(std::int64_t index) const {
  return frame_diff(*get(FrameRole::original, index), *get(FrameRole::forged, index));
}

// --- Difference and regions ------------------------------------------------

DiffFrame frame_diff(const Frame& a, const Frame& b) {
  if (a.geometry() != b.geometry())
    throw FrameStoreError(Kind::geometry_mismatch,
                          "frame_diff: geometry mismatch " + std::to_string(a.width) + "x" +
                              std::to_string(a.height) + " vs " + std::to_string(b.width) + "x" +
                              std::to_string(b.height));
  DiffFrame out;
  out.width = a.width;
  out.height = a.height;
  const std::size_t pixels = static_cast<std::size_t>(a.width * a.height);
  out.data.resize(pixels);
  for (std::size_t i = 0; i < pixels; ++i) {
    int m = 0;
    for (std::size_t c = 0; c < 3; ++c)
      m = std::max(m, std::abs(int{a.data[3 * i + c]} - int{b.data[3 * i + c]}));
    out.data[i] = static_cast<std::uint8_t>(m);
  }
  return out;
}

DiffFrame apply_gain(const DiffFrame& diff, double gain) {
  DiffFrame out = diff;
  for (auto& v : out.data) v = static_cast<std::uint8_t>(std::clamp(std::lround(v * gain), 0L, 255L));
  return out;
}

std::vector<BoundingBox> candidate_regions(const DiffFrame& diff, int threshold,
                                           std::int64_t min_area) {
  const std::int64_t w = diff.width;
  const std::int64_t h = diff.height;
  std::vector<std::uint8_t> visited(diff.data.size(), 0);
  std::vector<std::int64_t> stack;

  struct Component {
    BoundingBox box;
    std::int64_t area;
  };
  std::vector<Component> found;

  for (std::int64_t y0 = 0; y0 < h; ++y0) {
    for (std::int64_t x0 = 0; x0 < w; ++x0) {
      const std::int64_t seed = y0 * w + x0;
      if (visited[seed] || diff.data[seed] <= threshold) continue;
      visited[seed] = 1;
      stack.push_back(seed);
      Component c{{x0, y0, x0 + 1, y0 + 1}, 0};
      while (!stack.empty()) {
        const std::int64_t p = stack.back();
        stack.pop_back();
        const std::int64_t x = p % w;
        const std::int64_t y = p / w;
        ++c.area;
        c.box.x1 = std::min(c.box.x1, x);
        c.box.y1 = std::min(c.box.y1, y);
        c.box.x2 = std::max(c.box.x2, x + 1);
        c.box.y2 = std::max(c.box.y2, y + 1);
        for (std::int64_t dy = -1; dy <= 1; ++dy) {
          for (std::int64_t dx = -1; dx <= 1; ++dx) {
            const std::int64_t nx = x + dx;
            const std::int64_t ny = y + dy;
            if (nx < 0 || ny < 0 || nx >= w || ny >= h) continue;
            const std::int64_t q = ny * w + nx;
            if (visited[q] || diff.data[q] <= threshold) continue;
            visited[q] = 1;
            stack.push_back(q);
          }
        }
      }
      if (c.area >= min_area) found.push_back(c);
    }
  }

  std::stable_sort(found.begin(), found.end(),
                   [](const Component& a, const Component& b) { return a.area > b.area; });
  std::vector<BoundingBox> boxes;
  boxes.reserve(found.size());
  for (const auto& c : found) boxes.push_back(c.box);
  return boxes;
}

}  // namespace markbench
