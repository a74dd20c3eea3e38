#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "markbench/model.hpp"

namespace markbench {

class StoreError : public std::runtime_error {
 public:
  enum class Kind { parse, unsupported_version, schema, io };

  StoreError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

// --- JSON document ---------------------------------------------------------

nlohmann::ordered_json to_json(const KeyedBox& kb);
nlohmann::ordered_json to_json(const Track& track);
nlohmann::ordered_json to_json(const AnnotationDocument& doc);

KeyedBox keyed_box_from_json(const nlohmann::json& j);
Track track_from_json(const nlohmann::json& j);
AnnotationDocument document_from_json(const nlohmann::json& j);

// Canonical text: two-space indent, trailing newline.
std::string serialize_document(const AnnotationDocument& doc);
AnnotationDocument parse_document(std::string_view text);

// Writes through a temporary file and renames it into place.
void save_document(const AnnotationDocument& doc, const std::filesystem::path& destination);
AnnotationDocument load_document(const std::filesystem::path& source);

void write_file_atomic(const std::filesystem::path& destination, std::string_view contents);

// --- CSV export ------------------------------------------------------------

struct CsvOptions {
  bool include_predicted = false;
  bool inclusive = false;  // emit x2-1, y2-1
};

std::string export_csv(const AnnotationDocument& doc, const CsvOptions& options = {});

// --- Corpus statistics -----------------------------------------------------

struct CorpusStats {
  std::int64_t tampered_frames = 0;  // F1
  std::int64_t total_frames = 0;     // F2
  std::int64_t manual_boxes = 0;     // B1
  std::int64_t total_boxes = 0;      // B2
  std::string frame_ratio = "0.00%";
  std::string box_ratio = "0.00%";

  friend bool operator==(const CorpusStats&, const CorpusStats&) = default;
};

// 100*num/den rounded half-up to two decimals with a '%' suffix; "0.00%" when den is 0.
std::string format_ratio(std::int64_t num, std::int64_t den);

struct CorpusEntry {
  AnnotationDocument document;
  SequencePair pair;
};

CorpusStats compute_stats(const std::vector<CorpusEntry>& corpus);
CorpusStats make_stats(std::int64_t f1, std::int64_t f2, std::int64_t b1, std::int64_t b2);

nlohmann::ordered_json to_json(const CorpusStats& stats);

// --- Corpus layout ---------------------------------------------------------
// <root>/<sequence_id>/original/frame_%06d.png
// <root>/<sequence_id>/forged/frame_%06d.png
// <root>/<sequence_id>/annotations.json

std::filesystem::path document_path(const std::filesystem::path& root, const std::string& sequence_id);
SequencePair open_corpus_pair(const std::filesystem::path& root, const std::string& sequence_id);

// Every subdirectory holding original/ and forged/, sorted by id. A pair that
// fails to open throws, or is skipped and described in `problems` when given.
std::vector<SequencePair> discover_pairs(const std::filesystem::path& root,
                                         std::vector<std::string>* problems = nullptr);

}  // namespace markbench
