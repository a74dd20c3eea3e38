#include "support/fixtures.hpp"

#include <boost/rational.hpp>

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>

#include <unistd.h>

namespace markbench::testing {

namespace fs = std::filesystem;

TempDir::TempDir() {
  std::string tmpl = (fs::temp_directory_path() / "markbench-test-XXXXXX").string();
  if (!::mkdtemp(tmpl.data())) throw std::runtime_error("mkdtemp failed");
  path_ = tmpl;
}

TempDir::~TempDir() {
  std::error_code ec;
  fs::remove_all(path_, ec);
}

Frame solid_frame(std::int64_t width, std::int64_t height, std::uint8_t r, std::uint8_t g, std::uint8_t b) {
  Frame f;
  f.width = width;
  f.height = height;
  f.data.resize(static_cast<std::size_t>(width * height * 3));
  for (std::size_t i = 0; i < f.data.size(); i += 3) {
    f.data[i] = r;
    f.data[i + 1] = g;
    f.data[i + 2] = b;
  }
  return f;
}

void set_pixel(Frame& f, std::int64_t x, std::int64_t y, std::uint8_t r, std::uint8_t g, std::uint8_t b) {
  const auto i = static_cast<std::size_t>((y * f.width + x) * 3);
  f.data[i] = r;
  f.data[i + 1] = g;
  f.data[i + 2] = b;
}

void write_sequence(const fs::path& dir, const Frame& frame, std::int64_t count, bool hardlink) {
  fs::create_directories(dir);
  if (count <= 0) return;
  write_png(dir / frame_filename(0), frame);
  for (std::int64_t i = 1; i < count; ++i) {
    if (hardlink)
      fs::create_hard_link(dir / frame_filename(0), dir / frame_filename(i));
    else
      write_png(dir / frame_filename(i), frame);
  }
}

void write_sequence(const fs::path& dir, const std::vector<Frame>& frames) {
  fs::create_directories(dir);
  for (std::size_t i = 0; i < frames.size(); ++i)
    write_png(dir / frame_filename(static_cast<std::int64_t>(i)), frames[i]);
}

void write_pair(const fs::path& root, const std::string& id, std::int64_t width, std::int64_t height,
                std::int64_t frames, bool hardlink) {
  const Frame f = solid_frame(width, height, 40, 80, 120);
  write_sequence(root / id / "original", f, frames, hardlink);
  write_sequence(root / id / "forged", f, frames, hardlink);
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::int64_t uniform(Rng& rng, std::int64_t lo, std::int64_t hi) {
  return std::uniform_int_distribution<std::int64_t>(lo, hi)(rng);
}

BoundingBox random_box(Rng& rng, std::int64_t width, std::int64_t height) {
  const std::int64_t x1 = uniform(rng, 0, width - 1);
  const std::int64_t y1 = uniform(rng, 0, height - 1);
  return {x1, y1, uniform(rng, x1 + 1, width), uniform(rng, y1 + 1, height)};
}

PiecewiseTrack random_piecewise_track(Rng& rng, std::int64_t frames, std::int64_t width, std::int64_t height,
                                      int max_breaks) {
  PiecewiseTrack t;
  std::set<std::int64_t> breaks{0, frames - 1};
  const int extra = static_cast<int>(uniform(rng, 0, max_breaks));
  for (int i = 0; i < extra && frames > 2; ++i) breaks.insert(uniform(rng, 1, frames - 2));
  t.breakpoints.assign(breaks.begin(), breaks.end());

  std::map<std::int64_t, BoundingBox> anchors;
  for (std::int64_t b : t.breakpoints) anchors[b] = random_box(rng, width, height);
  t.boxes.resize(static_cast<std::size_t>(frames));
  for (std::size_t i = 0; i + 1 < t.breakpoints.size(); ++i) {
    const std::int64_t m = t.breakpoints[i];
    const std::int64_t n = t.breakpoints[i + 1];
    for (std::int64_t k = m; k <= n; ++k)
      t.boxes[static_cast<std::size_t>(k)] = oracle_interpolate(m, anchors[m], n, anchors[n], k);
  }
  if (t.breakpoints.size() == 1) t.boxes[0] = anchors[0];
  return t;
}

AnnotationDocument random_document(Rng& rng, const std::string& sequence_id, std::int64_t frame_count,
                                   std::int64_t width, std::int64_t height) {
  static const char* kLabels[] = {"inserted-object", "removed-object", "", "label with \"quotes\", commas"};
  AnnotationDocument doc;
  doc.sequence_id = sequence_id;
  doc.version = uniform(rng, 0, 1000);
  const auto n_tracks = uniform(rng, 0, 4);
  for (std::int64_t t = 0; t < n_tracks; ++t) {
    Track track("track-" + std::to_string(t), kLabels[uniform(rng, 0, 3)]);
    std::set<std::int64_t> frames;
    const auto n_boxes = uniform(rng, 0, 12);
    for (std::int64_t i = 0; i < n_boxes; ++i) frames.insert(uniform(rng, 0, frame_count - 1));
    for (std::int64_t f : frames) {
      KeyedBox kb;
      kb.frame = f;
      kb.box = random_box(rng, width, height);
      kb.source = static_cast<BoxSource>(uniform(rng, 0, 2));
      kb.box_id = "b" + std::to_string(f);
      if (uniform(rng, 0, 5) == 0) kb.extra["confidence"] = uniform(rng, 0, 100);
      track.upsert(kb);
    }
    if (uniform(rng, 0, 4) == 0) track.extra()["color"] = "#ff0000";
    doc.tracks.push_back(std::move(track));
  }
  if (uniform(rng, 0, 3) == 0) doc.extra["annotator"] = {{"name", "fixture"}, {"hours", 3.5}};
  return doc;
}

std::vector<std::pair<AnnotationDocument, SequencePair>> synthetic_corpus(const CorpusTotals& totals, int pairs) {
  auto share = [&](std::int64_t total, int i) { return total / pairs + (i < total % pairs ? 1 : 0); };
  std::vector<std::pair<AnnotationDocument, SequencePair>> corpus;
  for (int i = 0; i < pairs; ++i) {
    char id[16];
    std::snprintf(id, sizeof id, "seq%03d", i);
    const std::int64_t frames = share(totals.f2, i);
    const std::int64_t tampered = share(totals.f1, i);
    const std::int64_t doubled = share(totals.b2 - totals.f1, i);
    const std::int64_t keys = share(totals.b1, i);
    if (tampered > frames || doubled > tampered || keys > tampered)
      throw std::invalid_argument("synthetic_corpus: totals do not fit");

    AnnotationDocument doc;
    doc.sequence_id = id;
    Track& a = doc.ensure_track("a");
    for (std::int64_t f = 0; f < tampered; ++f)
      a.upsert({f, {0, 0, 1, 1}, f < keys ? BoxSource::manual : BoxSource::predicted, "a" + std::to_string(f)});
    Track& b = doc.ensure_track("b");
    for (std::int64_t f = 0; f < doubled; ++f)
      b.upsert({f, {0, 0, 1, 1}, BoxSource::predicted, "b" + std::to_string(f)});
    corpus.emplace_back(std::move(doc), SequencePair{id, "", "", 1, 1, frames});
  }
  return corpus;
}

// --- oracles ---------------------------------------------------------------

namespace {

using Rational = boost::rational<long long>;

long long round_half_away(const Rational& v) {
  const long long num = v.numerator();  // denominator is kept positive
  const long long den = v.denominator();
  const long long mag = num < 0 ? -num : num;
  long long q = mag / den;
  if (2 * (mag % den) >= den) ++q;
  return num < 0 ? -q : q;
}

long long lerp(long long a, long long b, long long m, long long n, long long k) {
  return round_half_away(Rational(a) + Rational(b - a) * Rational(k - m, n - m));
}

}  // namespace

BoundingBox oracle_interpolate(std::int64_t m, const BoundingBox& bm, std::int64_t n, const BoundingBox& bn,
                               std::int64_t k) {
  return {lerp(bm.x1, bn.x1, m, n, k), lerp(bm.y1, bn.y1, m, n, k), lerp(bm.x2, bn.x2, m, n, k),
          lerp(bm.y2, bn.y2, m, n, k)};
}

double oracle_iou(const BoundingBox& a, const BoundingBox& b) {
  auto inside = [](const BoundingBox& r, std::int64_t x, std::int64_t y) {
    return x >= r.x1 && x < r.x2 && y >= r.y1 && y < r.y2;
  };
  std::int64_t inter = 0, uni = 0;
  const std::int64_t x_lo = std::min(a.x1, b.x1), x_hi = std::max(a.x2, b.x2);
  const std::int64_t y_lo = std::min(a.y1, b.y1), y_hi = std::max(a.y2, b.y2);
  for (std::int64_t y = y_lo; y < y_hi; ++y) {
    for (std::int64_t x = x_lo; x < x_hi; ++x) {
      const bool ia = inside(a, x, y), ib = inside(b, x, y);
      inter += ia && ib;
      uni += ia || ib;
    }
  }
  return uni == 0 ? 0.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

std::multiset<std::tuple<std::int64_t, std::int64_t, std::int64_t, std::int64_t>> oracle_regions(
    const DiffFrame& diff, int threshold, std::int64_t min_area) {
  const std::int64_t w = diff.width, h = diff.height;
  std::vector<std::int64_t> parent(static_cast<std::size_t>(w * h));
  std::iota(parent.begin(), parent.end(), 0);
  auto root = [&](std::int64_t i) {
    while (parent[i] != i) i = parent[i] = parent[parent[i]];
    return i;
  };
  auto set = [&](std::int64_t x, std::int64_t y) { return diff.data[y * w + x] > threshold; };
  for (std::int64_t y = 0; y < h; ++y)
    for (std::int64_t x = 0; x < w; ++x)
      for (std::int64_t y2 = 0; y2 < h; ++y2)
        for (std::int64_t x2 = 0; x2 < w; ++x2)
          if (set(x, y) && set(x2, y2) && std::abs(x - x2) <= 1 && std::abs(y - y2) <= 1)
            parent[root(y * w + x)] = root(y2 * w + x2);

  struct Acc {
    std::int64_t x1 = INT64_MAX, y1 = INT64_MAX, x2 = -1, y2 = -1, area = 0;
  };
  std::map<std::int64_t, Acc> comps;
  for (std::int64_t y = 0; y < h; ++y) {
    for (std::int64_t x = 0; x < w; ++x) {
      if (!set(x, y)) continue;
      Acc& a = comps[root(y * w + x)];
      a.x1 = std::min(a.x1, x);
      a.y1 = std::min(a.y1, y);
      a.x2 = std::max(a.x2, x + 1);
      a.y2 = std::max(a.y2, y + 1);
      ++a.area;
    }
  }
  std::multiset<std::tuple<std::int64_t, std::int64_t, std::int64_t, std::int64_t>> out;
  for (const auto& [r, a] : comps)
    if (a.area >= min_area) out.emplace(a.x1, a.y1, a.x2, a.y2);
  return out;
}

std::int64_t oracle_reconstruction_error(const std::vector<BoundingBox>& reference,
                                         const std::vector<std::int64_t>& keys) {
  std::int64_t worst = 0;
  for (std::size_t i = 0; i + 1 < keys.size(); ++i) {
    const std::int64_t m = keys[i], n = keys[i + 1];
    for (std::int64_t k = m; k <= n; ++k) {
      const BoundingBox p = oracle_interpolate(m, reference[m], n, reference[n], k);
      const BoundingBox& r = reference[k];
      worst = std::max({worst, std::abs(p.x1 - r.x1), std::abs(p.y1 - r.y1), std::abs(p.x2 - r.x2),
                        std::abs(p.y2 - r.y2)});
    }
  }
  return worst;
}

}  // namespace markbench::testing
