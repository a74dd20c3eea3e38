#include "markbench/store.hpp"

#include <algorithm>
#include <atomic>
#include <fstream>
#include <set>
#include <sstream>

#include <unistd.h>

#include "markbench/frame_store.hpp"

namespace markbench {

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

namespace {

const std::set<std::string> kBoxFields{"frame", "x1", "y1", "x2", "y2", "source", "box_id"};
const std::set<std::string> kTrackFields{"track_id", "label", "boxes"};
const std::set<std::string> kDocumentFields{"schema_version", "sequence_id", "version", "tracks"};

[[noreturn]] void schema_error(const std::string& where, const std::string& what) {
  throw StoreError(StoreError::Kind::schema, where + ": " + what);
}

const json& field(const json& j, const char* name, const std::string& where) {
  auto it = j.find(name);
  if (it == j.end()) schema_error(where, std::string("missing field '") + name + "'");
  return *it;
}

std::int64_t int_field(const json& j, const char* name, const std::string& where) {
  const json& v = field(j, name, where);
  if (!v.is_number_integer()) schema_error(where, std::string("field '") + name + "' must be an integer");
  return v.get<std::int64_t>();
}

std::string string_field(const json& j, const char* name, const std::string& where) {
  const json& v = field(j, name, where);
  if (!v.is_string()) schema_error(where, std::string("field '") + name + "' must be a string");
  return v.get<std::string>();
}

json extras_of(const json& j, const std::set<std::string>& known) {
  json extra = json::object();
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!known.count(it.key())) extra[it.key()] = it.value();
  return extra;
}

void append_extras(ordered_json& out, const json& extra) {
  for (auto it = extra.begin(); it != extra.end(); ++it) out[it.key()] = it.value();
}

KeyedBox box_from_json(const json& j, const std::string& where) {
  if (!j.is_object()) schema_error(where, "box must be an object");
  KeyedBox kb;
  kb.frame = int_field(j, "frame", where);
  kb.box = {int_field(j, "x1", where), int_field(j, "y1", where), int_field(j, "x2", where),
            int_field(j, "y2", where)};
  const std::string source = string_field(j, "source", where);
  auto parsed = parse_box_source(source);
  if (!parsed) schema_error(where, "unknown source '" + source + "'");
  kb.source = *parsed;
  kb.box_id = string_field(j, "box_id", where);
  kb.extra = extras_of(j, kBoxFields);
  return kb;
}

Track track_from_json_at(const json& j, const std::string& where) {
  if (!j.is_object()) schema_error(where, "track must be an object");
  Track track(string_field(j, "track_id", where), string_field(j, "label", where));
  const json& boxes = field(j, "boxes", where);
  if (!boxes.is_array()) schema_error(where, "field 'boxes' must be an array");
  std::vector<KeyedBox> parsed;
  parsed.reserve(boxes.size());
  for (std::size_t i = 0; i < boxes.size(); ++i)
    parsed.push_back(box_from_json(boxes[i], where + ".boxes[" + std::to_string(i) + "]"));
  try {
    track.assign(std::move(parsed));
  } catch (const TrackError& e) {
    schema_error(where, e.what());
  }
  track.extra() = extras_of(j, kTrackFields);
  return track;
}

}  // namespace

ordered_json to_json(const KeyedBox& kb) {
  ordered_json j;
  j["frame"] = kb.frame;
  j["x1"] = kb.box.x1;
  j["y1"] = kb.box.y1;
  j["x2"] = kb.box.x2;
  j["y2"] = kb.box.y2;
  j["source"] = std::string(to_string(kb.source));
  j["box_id"] = kb.box_id;
  append_extras(j, kb.extra);
  return j;
}

ordered_json to_json(const Track& track) {
  ordered_json j;
  j["track_id"] = track.track_id();
  j["label"] = track.label();
  j["boxes"] = ordered_json::array();
  for (const KeyedBox& kb : track.boxes()) j["boxes"].push_back(to_json(kb));
  append_extras(j, track.extra());
  return j;
}

ordered_json to_json(const AnnotationDocument& doc) {
  ordered_json j;
  j["schema_version"] = doc.schema_version;
  j["sequence_id"] = doc.sequence_id;
  j["version"] = doc.version;
  j["tracks"] = ordered_json::array();
  for (const Track& t : doc.tracks) j["tracks"].push_back(to_json(t));
  append_extras(j, doc.extra);
  return j;
}

KeyedBox keyed_box_from_json(const json& j) { return box_from_json(j, "box"); }
Track track_from_json(const json& j) { return track_from_json_at(j, "track"); }

AnnotationDocument document_from_json(const json& j) {
  if (!j.is_object()) schema_error("document", "must be an object");
  AnnotationDocument doc;
  const std::int64_t schema = int_field(j, "schema_version", "document");
  if (schema > kSchemaVersion)
    throw StoreError(StoreError::Kind::unsupported_version,
                     "schema_version " + std::to_string(schema) + " is newer than supported version " +
                         std::to_string(kSchemaVersion));
  if (schema < 1) schema_error("document", "schema_version must be >= 1");
  doc.schema_version = static_cast<int>(schema);
  doc.sequence_id = string_field(j, "sequence_id", "document");
  doc.version = int_field(j, "version", "document");
  const json& tracks = field(j, "tracks", "document");
  if (!tracks.is_array()) schema_error("document", "field 'tracks' must be an array");
  for (std::size_t i = 0; i < tracks.size(); ++i)
    doc.tracks.push_back(track_from_json_at(tracks[i], "tracks[" + std::to_string(i) + "]"));
  doc.extra = extras_of(j, kDocumentFields);
  return doc;
}

std::string serialize_document(const AnnotationDocument& doc) { return to_json(doc).dump(2) + "\n"; }

AnnotationDocument parse_document(std::string_view text) {
  json j;
  try {
    j = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    throw StoreError(StoreError::Kind::parse,
                     "parse error at byte " + std::to_string(e.byte) + ": " + e.what());
  }
  return document_from_json(j);
}

void write_file_atomic(const fs::path& destination, std::string_view contents) {
  static std::atomic<unsigned> counter{0};
  fs::path tmp = destination;
  tmp += ".tmp-" + std::to_string(::getpid()) + "-" + std::to_string(counter++);
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    out.flush();
    if (!out) {
      std::error_code ec;
      fs::remove(tmp, ec);
      throw StoreError(StoreError::Kind::io, "cannot write " + tmp.string());
    }
  }
  std::error_code ec;
  fs::rename(tmp, destination, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw StoreError(StoreError::Kind::io, "cannot replace " + destination.string() + ": " + ec.message());
  }
}

void save_document(const AnnotationDocument& doc, const fs::path& destination) {
  write_file_atomic(destination, serialize_document(doc));
}

AnnotationDocument load_document(const fs::path& source) {
  std::ifstream in(source, std::ios::binary);
  if (!in) throw StoreError(StoreError::Kind::io, "cannot open " + source.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  try {
    return parse_document(buf.str());
  } catch (const StoreError& e) {
    throw StoreError(e.kind(), source.string() + ": " + e.what());
  }
}

// --- CSV -------------------------------------------------------------------

namespace {

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace

std::string export_csv(const AnnotationDocument& doc, const CsvOptions& options) {
  std::ostringstream out;
  out << "# coordinates=" << (options.inclusive ? "inclusive" : "half-open") << "\n";
  out << "sequence_id,track_id,frame,x1,y1,x2,y2,source\n";

  std::vector<const Track*> tracks;
  for (const Track& t : doc.tracks) tracks.push_back(&t);
  std::stable_sort(tracks.begin(), tracks.end(),
                   [](const Track* a, const Track* b) { return a->track_id() < b->track_id(); });

  const std::int64_t edge = options.inclusive ? 1 : 0;
  const std::string seq = csv_field(doc.sequence_id);
  for (const Track* t : tracks) {
    const std::string tid = csv_field(t->track_id());
    for (const KeyedBox& kb : t->boxes()) {
      if (!options.include_predicted && !kb.is_keypoint()) continue;
      out << seq << ',' << tid << ',' << kb.frame << ',' << kb.box.x1 << ',' << kb.box.y1 << ','
          << kb.box.x2 - edge << ',' << kb.box.y2 - edge << ',' << to_string(kb.source) << '\n';
    }
  }
  return out.str();
}

// --- Stats -----------------------------------------------------------------

std::string format_ratio(std::int64_t num, std::int64_t den) {
  if (den <= 0) return "0.00%";
  // Hundredths of a percent: 10000*num/den, half-up.
  std::int64_t q = (num * 10000) / den;
  const std::int64_t r = (num * 10000) % den;
  if (2 * r >= den) ++q;
  std::string frac = std::to_string(q % 100);
  if (frac.size() < 2) frac.insert(0, "0");
  return std::to_string(q / 100) + "." + frac + "%";
}

CorpusStats make_stats(std::int64_t f1, std::int64_t f2, std::int64_t b1, std::int64_t b2) {
  CorpusStats s;
  s.tampered_frames = f1;
  s.total_frames = f2;
  s.manual_boxes = b1;
  s.total_boxes = b2;
  s.frame_ratio = format_ratio(f1, f2);
  s.box_ratio = format_ratio(b1, b2);
  return s;
}

CorpusStats compute_stats(const std::vector<CorpusEntry>& corpus) {
  std::int64_t f1 = 0, f2 = 0, b1 = 0, b2 = 0;
  for (const auto& [doc, pair] : corpus) {
    f2 += pair.frame_count;
    std::set<FrameIndex> frames;
    for (const Track& t : doc.tracks) {
      for (const KeyedBox& kb : t.boxes()) {
        frames.insert(kb.frame);
        ++b2;
        if (kb.is_keypoint()) ++b1;
      }
    }
    f1 += static_cast<std::int64_t>(frames.size());
  }
  return make_stats(f1, f2, b1, b2);
}

ordered_json to_json(const CorpusStats& s) {
  ordered_json j;
  j["tampered_frames"] = s.tampered_frames;
  j["total_frames"] = s.total_frames;
  j["frame_ratio"] = s.frame_ratio;
  j["manual_boxes"] = s.manual_boxes;
  j["total_boxes"] = s.total_boxes;
  j["box_ratio"] = s.box_ratio;
  return j;
}

// --- Corpus layout ---------------------------------------------------------

fs::path document_path(const fs::path& root, const std::string& sequence_id) {
  return root / sequence_id / "annotations.json";
}

SequencePair open_corpus_pair(const fs::path& root, const std::string& sequence_id) {
  return open_sequence_pair(root / sequence_id / "original", root / sequence_id / "forged", sequence_id);
}

std::vector<SequencePair> discover_pairs(const fs::path& root, std::vector<std::string>* problems) {
  std::vector<std::string> ids;
  for (const auto& entry : fs::directory_iterator(root)) {
    if (!entry.is_directory()) continue;
    if (fs::is_directory(entry.path() / "original") && fs::is_directory(entry.path() / "forged"))
      ids.push_back(entry.path().filename().string());
  }
  std::sort(ids.begin(), ids.end());

  std::vector<SequencePair> pairs;
  for (const std::string& id : ids) {
    try {
      pairs.push_back(open_corpus_pair(root, id));
    } catch (const FrameStoreError& e) {
      if (!problems) throw;
      problems->push_back(id + ": " + e.what());
    }
  }
  return pairs;
}

}  // namespace markbench
