#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <shared_mutex>
#include <string>
#include <thread>

#include "markbench/frame_store.hpp"
#include "markbench/model.hpp"

namespace httplib {
class Server;
}

namespace markbench {

struct ServiceConfig {
  std::filesystem::path root;
  std::string host = "127.0.0.1";
  int port = 0;  // 0 picks a free port
  std::size_t frame_cache = 32;
  std::filesystem::path static_dir;  // optional UI bundle served at /
};

// HTTP facade over the corpus under `root`. Every mutation is checked
// against the client's last-seen document version and flushed to disk
// before it becomes visible.
class AnnotationService {
 public:
  explicit AnnotationService(ServiceConfig config);
  ~AnnotationService();

  AnnotationService(const AnnotationService&) = delete;
  AnnotationService& operator=(const AnnotationService&) = delete;

  // Binds the listening socket and returns the port.
  int bind();
  // Serves on the bound socket until stop(). Blocks.
  void listen();
  // bind() + listen() on a background thread.
  int start();
  void stop();

  int port() const { return port_; }
  const std::string& host() const { return config_.host; }
  std::vector<std::string> load_problems() const { return problems_; }

 private:
  struct Sequence {
    explicit Sequence(SequencePair pair, std::size_t cache)
        : frames(std::move(pair), cache) {}
    SequenceFrames frames;
    std::filesystem::path doc_path;
    std::mutex write_mu;              // serializes mutations
    mutable std::shared_mutex doc_mu;  // guards `doc`
    AnnotationDocument doc;

    AnnotationDocument snapshot() const {
      std::shared_lock lock(doc_mu);
      return doc;
    }
  };

  void load_corpus();
  void install_routes();
  Sequence* find(const std::string& id);

  ServiceConfig config_;
  std::unique_ptr<httplib::Server> server_;
  std::map<std::string, std::unique_ptr<Sequence>> sequences_;
  std::vector<std::string> problems_;
  std::thread thread_;
  int port_ = -1;
};

}  // namespace markbench
