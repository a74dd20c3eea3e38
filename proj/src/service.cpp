#include "markbench/service.hpp"

#include <httplib.h>

#include <charconv>
#include <iostream>
#include <optional>

#include "markbench/interpolation.hpp"
#include "markbench/store.hpp"

namespace markbench {

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

namespace {

void send_json(httplib::Response& res, int status, const ordered_json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, int status, const std::string& message) {
  ordered_json body;
  body["error"] = message;
  send_json(res, status, body);
}

std::optional<std::int64_t> parse_int(std::string_view text) {
  std::int64_t v = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc{} || ptr != text.data() + text.size()) return std::nullopt;
  return v;
}

std::optional<double> parse_double(const std::string& text) {
  try {
    std::size_t used = 0;
    double v = std::stod(text, &used);
    if (used != text.size()) return std::nullopt;
    return v;
  } catch (const std::exception&) {
    return std::nullopt;
  }
}

// A rejected mutation: HTTP status plus message.
struct Rejection {
  int status;
  std::string message;
};

}  // namespace

AnnotationService::AnnotationService(ServiceConfig config)
    : config_(std::move(config)), server_(std::make_unique<httplib::Server>()) {
  load_corpus();
  install_routes();
}

AnnotationService::~AnnotationService() { stop(); }

void AnnotationService::load_corpus() {
  for (SequencePair& pair : discover_pairs(config_.root, &problems_)) {
    const std::string id = pair.sequence_id;
    auto seq = std::make_unique<Sequence>(std::move(pair), config_.frame_cache);
    seq->doc_path = document_path(config_.root, id);
    if (fs::exists(seq->doc_path)) {
      try {
        seq->doc = load_document(seq->doc_path);
        if (seq->doc.sequence_id != id) {
          problems_.push_back(id + ": document sequence_id '" + seq->doc.sequence_id + "' does not match");
          continue;
        }
      } catch (const StoreError& e) {
        problems_.push_back(id + ": " + e.what());
        continue;
      }
    } else {
      seq->doc.sequence_id = id;
    }
    sequences_.emplace(id, std::move(seq));
  }
}

AnnotationService::Sequence* AnnotationService::find(const std::string& id) {
  auto it = sequences_.find(id);
  return it == sequences_.end() ? nullptr : it->second.get();
}

int AnnotationService::bind() {
  if (config_.port == 0)
    port_ = server_->bind_to_any_port(config_.host);
  else
    port_ = server_->bind_to_port(config_.host, config_.port) ? config_.port : -1;
  if (port_ < 0)
    throw std::runtime_error("cannot bind " + config_.host + ":" + std::to_string(config_.port));
  return port_;
}

void AnnotationService::listen() { server_->listen_after_bind(); }

int AnnotationService::start() {
  const int port = bind();
  thread_ = std::thread([this] { listen(); });
  server_->wait_until_ready();
  return port;
}

void AnnotationService::stop() {
  server_->stop();
  if (thread_.joinable()) thread_.join();
}

void AnnotationService::install_routes() {
  httplib::Server& srv = *server_;

  if (!config_.static_dir.empty()) srv.set_mount_point("/", config_.static_dir.string());

  // Runs `apply` on a copy of the document when `expected` matches, then
  // persists and publishes the copy with version + 1.
  auto mutate = [](Sequence& seq, std::int64_t expected, httplib::Response& res, auto&& apply) {
    std::lock_guard write(seq.write_mu);
    AnnotationDocument doc = seq.snapshot();
    if (doc.version != expected) {
      ordered_json body;
      body["error"] = "version conflict: expected " + std::to_string(expected) + ", current " +
                      std::to_string(doc.version);
      body["current_version"] = doc.version;
      body["document"] = to_json(doc);
      send_json(res, 409, body);
      return false;
    }
    if (std::optional<Rejection> rejected = apply(doc)) {
      send_error(res, rejected->status, rejected->message);
      return false;
    }
    ++doc.version;
    try {
      save_document(doc, seq.doc_path);
    } catch (const StoreError& e) {
      send_error(res, 500, e.what());
      return false;
    }
    std::unique_lock lock(seq.doc_mu);
    seq.doc = std::move(doc);
    return true;
  };

  srv.Get("/api/sequences", [this](const httplib::Request&, httplib::Response& res) {
    ordered_json list = ordered_json::array();
    for (const auto& [id, seq] : sequences_) {
      const SequencePair& p = seq->frames.pair();
      ordered_json entry;
      entry["sequence_id"] = id;
      entry["frame_count"] = p.frame_count;
      entry["width"] = p.width;
      entry["height"] = p.height;
      list.push_back(entry);
    }
    send_json(res, 200, list);
  });

  srv.Get(R"(/api/sequences/([^/]+)/frames/(-?\d+))",
          [this](const httplib::Request& req, httplib::Response& res) {
            Sequence* seq = find(req.matches[1]);
            if (!seq) return send_error(res, 404, "unknown sequence '" + req.matches[1].str() + "'");
            const auto n = parse_int(req.matches[2].str());
            const SequencePair& pair = seq->frames.pair();
            if (!n || *n < 0 || *n >= pair.frame_count)
              return send_error(res, 404, "frame " + req.matches[2].str() + " out of range [0, " +
                                              std::to_string(pair.frame_count) + ")");
            const std::string view = req.has_param("view") ? req.get_param_value("view") : "forged";
            double gain = 1.0;
            if (req.has_param("gain")) {
              auto g = parse_double(req.get_param_value("gain"));
              if (!g || *g < 0) return send_error(res, 400, "gain must be a non-negative number");
              gain = *g;
            }
            try {
              std::vector<std::uint8_t> png;
              if (view == "original" || view == "forged") {
                png = encode_png(*seq->frames.get(view == "original" ? FrameRole::original : FrameRole::forged, *n));
              } else if (view == "diff") {
                DiffFrame diff = seq->frames.diff(*n);
                png = encode_png(gain == 1.0 ? diff : apply_gain(diff, gain));
              } else {
                return send_error(res, 400, "view must be original, forged or diff");
              }
              res.status = 200;
              res.set_content(std::string(png.begin(), png.end()), "image/png");
            } catch (const FrameStoreError& e) {
              send_error(res, 500, e.what());
            }
          });

  srv.Get(R"(/api/sequences/([^/]+)/annotations)",
          [this](const httplib::Request& req, httplib::Response& res) {
            Sequence* seq = find(req.matches[1]);
            if (!seq) return send_error(res, 404, "unknown sequence '" + req.matches[1].str() + "'");
            send_json(res, 200, to_json(seq->snapshot()));
          });

  srv.Put(R"(/api/sequences/([^/]+)/annotations/(-?\d+))",
          [this, mutate](const httplib::Request& req, httplib::Response& res) {
            Sequence* seq = find(req.matches[1]);
            if (!seq) return send_error(res, 404, "unknown sequence '" + req.matches[1].str() + "'");
            const SequencePair& pair = seq->frames.pair();
            const auto frame = parse_int(req.matches[2].str());
            if (!frame || *frame < 0 || *frame >= pair.frame_count)
              return send_error(res, 404, "frame " + req.matches[2].str() + " out of range");

            json body;
            try {
              body = json::parse(req.body);
            } catch (const json::parse_error& e) {
              return send_error(res, 400, std::string("malformed body: ") + e.what());
            }
            if (!body.is_object() || !body.contains("expected_version") ||
                !body["expected_version"].is_number_integer())
              return send_error(res, 400, "body must carry integer expected_version");
            if (!body.contains("boxes") || !body["boxes"].is_array())
              return send_error(res, 400, "body must carry a boxes array");

            struct Incoming {
              std::string track_id;
              std::optional<std::string> label;
              KeyedBox kb;
            };
            std::vector<Incoming> incoming;
            for (const json& b : body["boxes"]) {
              if (!b.is_object()) return send_error(res, 400, "each box must be an object");
              Incoming in;
              try {
                in.track_id = b.value("track_id", std::string("track-0"));
                if (b.contains("label")) in.label = b.at("label").get<std::string>();
                in.kb.frame = *frame;
                in.kb.box = {b.at("x1").get<std::int64_t>(), b.at("y1").get<std::int64_t>(),
                             b.at("x2").get<std::int64_t>(), b.at("y2").get<std::int64_t>()};
                const std::string source = b.value("source", std::string("manual"));
                auto parsed = parse_box_source(source);
                if (!parsed || *parsed == BoxSource::predicted)
                  return send_error(res, 422, "source must be manual or corrected");
                in.kb.source = *parsed;
                in.kb.box_id = b.value("box_id", in.track_id + "-" +
                                                     (in.kb.source == BoxSource::manual ? "m" : "c") +
                                                     std::to_string(*frame));
              } catch (const json::exception& e) {
                return send_error(res, 400, std::string("bad box: ") + e.what());
              }
              if (auto check = validate_box(in.kb.box, pair.geometry()); !check)
                return send_error(res, 422, *check.violation);
              incoming.push_back(std::move(in));
            }

            const std::int64_t expected = body["expected_version"].get<std::int64_t>();
            const bool ok = mutate(*seq, expected, res, [&](AnnotationDocument& doc) -> std::optional<Rejection> {
              for (Incoming& in : incoming) {
                Track& track = doc.ensure_track(in.track_id);
                if (in.label) track.set_label(*in.label);
                track.upsert(std::move(in.kb));
              }
              return std::nullopt;
            });
            if (ok) {
              ordered_json out;
              out["version"] = seq->snapshot().version;
              send_json(res, 200, out);
            }
          });

  srv.Delete(R"(/api/sequences/([^/]+)/annotations/(-?\d+)/([^/]+))",
             [this, mutate](const httplib::Request& req, httplib::Response& res) {
               Sequence* seq = find(req.matches[1]);
               if (!seq) return send_error(res, 404, "unknown sequence '" + req.matches[1].str() + "'");
               const auto frame = parse_int(req.matches[2].str());
               const std::string box_id = req.matches[3];
               if (!req.has_param("expected_version"))
                 return send_error(res, 400, "expected_version query parameter required");
               const auto expected = parse_int(req.get_param_value("expected_version"));
               if (!expected) return send_error(res, 400, "expected_version must be an integer");
               const std::string only_track = req.has_param("track_id") ? req.get_param_value("track_id") : "";

               const bool ok = mutate(*seq, *expected, res, [&](AnnotationDocument& doc) -> std::optional<Rejection> {
                 for (Track& t : doc.tracks) {
                   if (!only_track.empty() && t.track_id() != only_track) continue;
                   const KeyedBox* kb = frame ? t.find(*frame) : nullptr;
                   if (kb && kb->box_id == box_id) {
                     t.erase_frame(*frame);
                     return std::nullopt;
                   }
                 }
                 return Rejection{404, "no box '" + box_id + "' at frame " + req.matches[2].str()};
               });
               if (ok) {
                 ordered_json out;
                 out["version"] = seq->snapshot().version;
                 send_json(res, 200, out);
               }
             });

  srv.Post(R"(/api/sequences/([^/]+)/tracks/([^/]+)/interpolate)",
           [this, mutate](const httplib::Request& req, httplib::Response& res) {
             Sequence* seq = find(req.matches[1]);
             if (!seq) return send_error(res, 404, "unknown sequence '" + req.matches[1].str() + "'");
             const std::string track_id = req.matches[2];

             std::optional<std::int64_t> expected;
             if (!req.body.empty()) {
               try {
                 json body = json::parse(req.body);
                 if (body.is_object() && body.contains("expected_version"))
                   expected = body.at("expected_version").get<std::int64_t>();
               } catch (const json::exception& e) {
                 return send_error(res, 400, std::string("malformed body: ") + e.what());
               }
             }
             if (!expected) expected = seq->snapshot().version;

             Track completed;
             const bool ok = mutate(*seq, *expected, res, [&](AnnotationDocument& doc) -> std::optional<Rejection> {
               Track* track = doc.find_track(track_id);
               if (!track) return Rejection{404, "unknown track '" + track_id + "'"};
               try {
                 completed = predict_track(*track);
               } catch (const InsufficientKeypoints& e) {
                 return Rejection{422, e.what()};
               }
               *track = completed;
               return std::nullopt;
             });
             if (ok) {
               ordered_json out;
               out["version"] = seq->snapshot().version;
               out["track"] = to_json(completed);
               send_json(res, 200, out);
             }
           });

  srv.Get(R"(/api/sequences/([^/]+)/stats)", [this](const httplib::Request& req, httplib::Response& res) {
    Sequence* seq = find(req.matches[1]);
    if (!seq) return send_error(res, 404, "unknown sequence '" + req.matches[1].str() + "'");
    send_json(res, 200, to_json(compute_stats({{seq->snapshot(), seq->frames.pair()}})));
  });

  srv.Get("/api/corpus/stats", [this](const httplib::Request&, httplib::Response& res) {
    std::vector<CorpusEntry> corpus;
    for (const auto& [id, seq] : sequences_) corpus.push_back({seq->snapshot(), seq->frames.pair()});
    send_json(res, 200, to_json(compute_stats(corpus)));
  });
}

}  // namespace markbench
