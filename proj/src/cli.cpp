#include "markbench/cli.hpp"

#include <CLI11.hpp>
#include <glob.h>
#include <pthread.h>
#include <signal.h>

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include "markbench/advisor.hpp"
#include "markbench/frame_store.hpp"
#include "markbench/interpolation.hpp"
#include "markbench/service.hpp"
#include "markbench/store.hpp"

namespace markbench::cli {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

// Raised for bad input data (exit 1) as opposed to bad flags (exit 2).
struct Invalid : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string fixed(double v) {
  std::ostringstream s;
  s.setf(std::ios::fixed);
  s.precision(6);
  s << v;
  return s.str();
}

// --- serve -----------------------------------------------------------------

struct ServeArgs {
  std::string root;
  std::string addr;
  std::string static_dir;
};

int cmd_serve(const ServeArgs& a, std::ostream& out, std::ostream& err) {
  std::string root = a.root;
  std::string addr = a.addr;
  if (root.empty())
    if (const char* env = std::getenv("MARKBENCH_ROOT")) root = env;
  if (addr.empty()) {
    const char* env = std::getenv("MARKBENCH_ADDR");
    addr = env ? env : "127.0.0.1:8080";
  }
  if (root.empty()) throw UsageError("--root is required (or set MARKBENCH_ROOT)");
  if (!fs::is_directory(root)) throw UsageError("--root: directory not found: " + root);

  const auto colon = addr.rfind(':');
  if (colon == std::string::npos) throw UsageError("--addr must be host:port");
  ServiceConfig config;
  config.root = root;
  config.host = addr.substr(0, colon);
  try {
    std::size_t used = 0;
    config.port = std::stoi(addr.substr(colon + 1), &used);
    if (used != addr.size() - colon - 1 || config.port < 0 || config.port > 65535) throw std::out_of_range("port");
  } catch (const std::exception&) {
    throw UsageError("--addr: invalid port in '" + addr + "'");
  }
  config.static_dir = a.static_dir;

  // Handle SIGINT/SIGTERM synchronously; server threads inherit the mask.
  sigset_t signals;
  sigemptyset(&signals);
  sigaddset(&signals, SIGINT);
  sigaddset(&signals, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &signals, nullptr);

  AnnotationService service(config);
  for (const std::string& p : service.load_problems()) err << "warning: skipped " << p << "\n";
  int port = 0;
  try {
    port = service.start();
  } catch (const std::exception& e) {
    throw UsageError(e.what());
  }
  out << "listening on http://" << config.host << ":" << port << std::endl;

  int sig = 0;
  sigwait(&signals, &sig);
  service.stop();
  pthread_sigmask(SIG_UNBLOCK, &signals, nullptr);
  return kExitOk;
}

// --- interpolate -----------------------------------------------------------

int cmd_interpolate(const std::string& doc_path, const std::string& track_id, const std::string& out_path,
                    std::ostream& out) {
  std::error_code ec;
  if (fs::exists(out_path) && fs::equivalent(doc_path, out_path, ec))
    throw UsageError("--out must differ from --doc; documents are never modified in place");

  AnnotationDocument doc = load_document(doc_path);
  if (!track_id.empty() && !doc.find_track(track_id)) throw Invalid("unknown track '" + track_id + "'");

  bool changed = false;
  for (Track& track : doc.tracks) {
    if (!track_id.empty() && track.track_id() != track_id) continue;
    Track completed;
    try {
      completed = predict_track(track);
    } catch (const InsufficientKeypoints& e) {
      throw Invalid(e.what());
    }
    if (!(completed == track)) {
      track = std::move(completed);
      changed = true;
    }
    out << "track " << track.track_id() << ": " << track.size() << " boxes, frames "
        << track.boxes().front().frame << ".." << track.boxes().back().frame << "\n";
  }
  if (changed) ++doc.version;
  save_document(doc, out_path);
  return kExitOk;
}

// --- diff ------------------------------------------------------------------

struct DiffArgs {
  std::string original;
  std::string forged;
  std::string out_dir;
  int threshold = kDefaultThreshold;
  std::int64_t min_area = kDefaultMinArea;
  std::string regions;
};

int cmd_diff(const DiffArgs& a, std::ostream& out) {
  SequencePair pair;
  try {
    pair = open_sequence_pair(a.original, a.forged, "diff");
  } catch (const FrameStoreError& e) {
    throw Invalid(e.what());
  }
  fs::create_directories(a.out_dir);

  const auto count = static_cast<std::size_t>(pair.frame_count);
  std::vector<std::vector<BoundingBox>> regions(count);
  std::vector<std::string> failures(count);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < count; i = next++) {
      try {
        const auto idx = static_cast<std::int64_t>(i);
        const DiffFrame diff =
            frame_diff(get_frame(pair, FrameRole::original, idx), get_frame(pair, FrameRole::forged, idx));
        write_png(fs::path(a.out_dir) / frame_filename(idx), diff);
        if (!a.regions.empty()) regions[i] = candidate_regions(diff, a.threshold, a.min_area);
      } catch (const std::exception& e) {
        failures[i] = e.what();
      }
    }
  };
  const unsigned n_threads = std::clamp<unsigned>(std::thread::hardware_concurrency(), 1, 8);
  {
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < n_threads; ++t) pool.emplace_back(worker);
  }
  for (const std::string& f : failures)
    if (!f.empty()) throw Invalid(f);

  std::size_t total_regions = 0;
  if (!a.regions.empty()) {
    ordered_json doc;
    doc["original"] = pair.original_source;
    doc["forged"] = pair.forged_source;
    doc["threshold"] = a.threshold;
    doc["min_area"] = a.min_area;
    doc["frames"] = ordered_json::array();
    for (std::size_t i = 0; i < count; ++i) {
      if (regions[i].empty()) continue;
      ordered_json entry;
      entry["frame"] = i;
      entry["regions"] = ordered_json::array();
      for (const BoundingBox& b : regions[i]) {
        entry["regions"].push_back({{"x1", b.x1}, {"y1", b.y1}, {"x2", b.x2}, {"y2", b.y2}});
        ++total_regions;
      }
      doc["frames"].push_back(entry);
    }
    write_file_atomic(a.regions, doc.dump(2) + "\n");
  }
  out << "wrote " << count << " diff frames to " << a.out_dir;
  if (!a.regions.empty()) out << ", " << total_regions << " candidate regions to " << a.regions;
  out << "\n";
  return kExitOk;
}

// --- stats -----------------------------------------------------------------

std::vector<std::string> expand_glob(const std::string& pattern) {
  glob_t g{};
  std::vector<std::string> paths;
  if (::glob(pattern.c_str(), 0, nullptr, &g) == 0)
    for (std::size_t i = 0; i < g.gl_pathc; ++i) paths.emplace_back(g.gl_pathv[i]);
  globfree(&g);
  std::sort(paths.begin(), paths.end());
  return paths;
}

int cmd_stats(const std::string& docs_glob, const std::string& pairs_root, bool as_json, std::ostream& out) {
  std::vector<CorpusEntry> corpus;
  for (const std::string& path : expand_glob(docs_glob)) {
    CorpusEntry entry;
    entry.document = load_document(path);
    try {
      entry.pair = open_corpus_pair(pairs_root, entry.document.sequence_id);
    } catch (const FrameStoreError& e) {
      throw Invalid(path + ": " + e.what());
    }
    const auto issues = validate_document(entry.document, entry.pair);
    if (!issues.empty()) throw Invalid(path + ": " + describe(issues.front()));
    corpus.push_back(std::move(entry));
  }
  const CorpusStats s = compute_stats(corpus);
  if (as_json) {
    out << to_json(s).dump(2) << "\n";
  } else {
    out << "documents:              " << corpus.size() << "\n"
        << "tampered frames (F1):   " << s.tampered_frames << "\n"
        << "total frames (F2):      " << s.total_frames << "\n"
        << "F1/F2:                  " << s.frame_ratio << "\n"
        << "boxes marked (B1):      " << s.manual_boxes << "\n"
        << "boxes total (B2):       " << s.total_boxes << "\n"
        << "B1/B2:                  " << s.box_ratio << "\n";
  }
  return kExitOk;
}

// --- advise ----------------------------------------------------------------

int cmd_advise(const std::string& ref_path, std::int64_t tolerance, const std::string& track_id, bool as_json,
               std::ostream& out) {
  const AnnotationDocument doc = load_document(ref_path);
  if (!track_id.empty() && !doc.find_track(track_id)) throw Invalid("unknown track '" + track_id + "'");

  ordered_json report = ordered_json::array();
  for (const Track& track : doc.tracks) {
    if (!track_id.empty() && track.track_id() != track_id) continue;
    const FrameBoxes reference = frame_boxes(track);
    std::vector<FrameIndex> keys;
    TrackMetrics m;
    try {
      keys = suggest_keypoints(reference, tolerance);
      m = evaluate_track(reconstruct(reference, keys), reference);
    } catch (const AdvisorError& e) {
      throw Invalid("track '" + track.track_id() + "': " + e.what());
    }
    if (as_json) {
      ordered_json entry;
      entry["track_id"] = track.track_id();
      entry["tolerance"] = tolerance;
      entry["keypoints"] = keys;
      entry["frames"] = reference.size();
      entry["mean_iou"] = m.mean_iou;
      entry["min_iou"] = m.min_iou;
      entry["max_corner_error"] = m.max_corner_error;
      entry["frames_compared"] = m.frames_compared;
      report.push_back(entry);
    } else {
      out << "track " << track.track_id() << ": " << keys.size() << " of " << reference.size()
          << " frames as keypoints:";
      for (FrameIndex k : keys) out << ' ' << k;
      out << "\n  mean_iou=" << fixed(m.mean_iou) << " min_iou=" << fixed(m.min_iou)
          << " max_corner_error=" << m.max_corner_error << " frames_compared=" << m.frames_compared << "\n";
    }
  }
  if (as_json) out << report.dump(2) << "\n";
  return kExitOk;
}

// --- validate / export -----------------------------------------------------

int cmd_validate(const std::string& doc_path, const std::string& pairs_root, bool as_json, std::ostream& out) {
  ordered_json report;
  report["document"] = doc_path;
  report["issues"] = ordered_json::array();
  std::vector<std::string> messages;
  try {
    const AnnotationDocument doc = load_document(doc_path);
    const SequencePair pair = open_corpus_pair(pairs_root, doc.sequence_id);
    for (const DocumentIssue& issue : validate_document(doc, pair)) {
      ordered_json j;
      j["track_id"] = issue.track_id;
      j["frame"] = issue.frame ? ordered_json(*issue.frame) : ordered_json(nullptr);
      j["message"] = issue.message;
      report["issues"].push_back(j);
      messages.push_back(describe(issue));
    }
  } catch (const StoreError& e) {
    report["issues"].push_back({{"track_id", ""}, {"frame", nullptr}, {"message", e.what()}});
    messages.emplace_back(e.what());
  } catch (const FrameStoreError& e) {
    report["issues"].push_back({{"track_id", ""}, {"frame", nullptr}, {"message", e.what()}});
    messages.emplace_back(e.what());
  }
  report["valid"] = messages.empty();
  if (as_json) {
    out << report.dump(2) << "\n";
  } else if (messages.empty()) {
    out << doc_path << ": valid\n";
  } else {
    for (const std::string& m : messages) out << doc_path << ": " << m << "\n";
  }
  return messages.empty() ? kExitOk : kExitInvalid;
}

int cmd_export(const std::string& doc_path, const std::string& format, const CsvOptions& options,
               const std::string& out_path, std::ostream& out) {
  const AnnotationDocument doc = load_document(doc_path);
  const std::string text = format == "csv" ? export_csv(doc, options) : serialize_document(doc);
  if (out_path.empty())
    out << text;
  else
    write_file_atomic(out_path, text);
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Keyframe bounding-box annotation toolkit for tampered video"};
  app.require_subcommand(1);

  ServeArgs serve;
  auto* serve_cmd = app.add_subcommand("serve", "Run the annotation HTTP service");
  serve_cmd->add_option("--root", serve.root, "Corpus root (env MARKBENCH_ROOT)");
  serve_cmd->add_option("--addr", serve.addr, "host:port to bind; port 0 picks one (env MARKBENCH_ADDR)");
  serve_cmd->add_option("--static", serve.static_dir, "Directory served at /")->check(CLI::ExistingDirectory);

  std::string doc, out_path, track;
  auto* interp_cmd = app.add_subcommand("interpolate", "Fill every frame between keypoints");
  interp_cmd->add_option("--doc", doc, "Input document")->required()->check(CLI::ExistingFile);
  interp_cmd->add_option("--track", track, "Only this track");
  interp_cmd->add_option("--out", out_path, "Output document")->required();

  DiffArgs diff;
  auto* diff_cmd = app.add_subcommand("diff", "Write difference frames and candidate regions");
  diff_cmd->add_option("--original", diff.original)->required()->check(CLI::ExistingDirectory);
  diff_cmd->add_option("--forged", diff.forged)->required()->check(CLI::ExistingDirectory);
  diff_cmd->add_option("--out", diff.out_dir, "Output directory")->required();
  diff_cmd->add_option("--threshold", diff.threshold, "Binarization threshold")
      ->check(CLI::Range(0, 255))
      ->capture_default_str();
  diff_cmd->add_option("--min-area", diff.min_area, "Smallest region kept, in pixels")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  diff_cmd->add_option("--regions", diff.regions, "Candidate-region JSON output");

  std::string docs_glob, pairs_root;
  bool as_json = false;
  auto* stats_cmd = app.add_subcommand("stats", "Corpus statistics");
  stats_cmd->add_option("--docs", docs_glob, "Glob of annotation documents")->required();
  stats_cmd->add_option("--pairs", pairs_root, "Corpus root")->required()->check(CLI::ExistingDirectory);
  stats_cmd->add_flag("--json", as_json);

  std::int64_t tolerance = 0;
  auto* advise_cmd = app.add_subcommand("advise", "Suggest keypoints for a reference track");
  advise_cmd->add_option("--reference", doc, "Reference document")->required()->check(CLI::ExistingFile);
  advise_cmd->add_option("--tolerance", tolerance, "Max corner error in pixels")
      ->required()
      ->check(CLI::NonNegativeNumber);
  advise_cmd->add_option("--track", track, "Only this track");
  advise_cmd->add_flag("--json", as_json);

  auto* validate_cmd = app.add_subcommand("validate", "Check a document against its sequence pair");
  validate_cmd->add_option("--doc", doc)->required()->check(CLI::ExistingFile);
  validate_cmd->add_option("--pairs", pairs_root)->required()->check(CLI::ExistingDirectory);
  validate_cmd->add_flag("--json", as_json);

  std::string format;
  CsvOptions csv;
  auto* export_cmd = app.add_subcommand("export", "Export a document");
  export_cmd->add_option("--doc", doc)->required()->check(CLI::ExistingFile);
  export_cmd->add_option("--format", format)->required()->check(CLI::IsMember({"csv", "json"}));
  export_cmd->add_flag("--include-predicted", csv.include_predicted);
  export_cmd->add_flag("--inclusive", csv.inclusive, "Emit inclusive right/bottom edges");
  export_cmd->add_option("--out", out_path, "Output file (default stdout)");

  std::vector<const char*> argv;
  for (const std::string& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*serve_cmd) return cmd_serve(serve, out, err);
    if (*interp_cmd) return cmd_interpolate(doc, track, out_path, out);
    if (*diff_cmd) return cmd_diff(diff, out);
    if (*stats_cmd) return cmd_stats(docs_glob, pairs_root, as_json, out);
    if (*advise_cmd) return cmd_advise(doc, tolerance, track, as_json, out);
    if (*validate_cmd) return cmd_validate(doc, pairs_root, as_json, out);
    if (*export_cmd) return cmd_export(doc, format, csv, out_path, out);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitInvalid;
  }
  return kExitUsage;
}

}  // namespace markbench::cli
