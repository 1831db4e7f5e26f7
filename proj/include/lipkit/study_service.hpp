#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "lipkit/ranking.hpp"

namespace lipkit {

/// One candidate comparison: two systems rendering the same source clip.
struct PairCandidate {
  std::string pair_id;
  std::string model_a;
  std::string model_b;
  std::string media_a;  // relative to the media directory, or an absolute URL
  std::string media_b;
};

std::vector<PairCandidate> parse_pair_pool(const std::string& text);
std::vector<PairCandidate> read_pair_pool(const std::filesystem::path& path);

enum class Side { Left, Right };
std::optional<Side> parse_side(const std::string& text);

struct PairAssignment {
  std::string assignment_id;
  std::string pair_id;
  std::string annotator;
  std::string media_url_a;  // shown on the left
  std::string media_url_b;  // shown on the right
  bool swapped = false;     // true: model_b of the candidate is on the left
  std::chrono::system_clock::time_point expires_at;
};

/// Request-level failure carrying the HTTP status to report.
class ServiceError : public std::runtime_error {
 public:
  ServiceError(int status, const std::string& what) : std::runtime_error(what), status_(status) {}
  int status() const noexcept { return status_; }

 private:
  int status_;
};

struct StudyConfig {
  EloConfig elo;
  std::chrono::seconds assignment_ttl{30 * 60};
  std::uint64_t seed = 0;
  std::filesystem::path log_path;  // empty: in-memory only
  std::optional<std::set<std::string>> annotators;  // allowlist; unset accepts any non-empty id
  std::string media_prefix = "/media/";
};

using Clock = std::function<std::chrono::system_clock::time_point()>;

std::string iso8601(std::chrono::system_clock::time_point t);

/// Pair serving, vote recording and live rankings. Thread-safe; all state
/// changes go through one mutex, and votes are appended and fsynced to the
/// log before they are acknowledged.
class StudyService {
 public:
  StudyService(std::vector<PairCandidate> pool, StudyConfig config, Clock clock = {});

  PairAssignment serve_pair(const std::string& annotator);

  /// `id` is an assignment_id, or a pair_id served to this annotator (the
  /// most recent such assignment is used).
  ComparisonRecord vote(const std::string& id, Side choice, const std::string& annotator);

  RatingTable rankings(bool bootstrap = false) const;
  std::vector<ComparisonRecord> log_snapshot() const;
  std::vector<std::string> models() const;
  std::size_t pool_size() const { return pool_.size(); }
  const StudyConfig& config() const { return config_; }

 private:
  struct Active {
    PairAssignment assignment;
    std::size_t candidate = 0;
    bool voted = false;
  };

  void check_annotator(const std::string& annotator) const;
  std::string media_url(const std::string& media) const;
  void append_to_log(const ComparisonRecord& record);
  void purge_expired(std::chrono::system_clock::time_point now);

  std::vector<PairCandidate> pool_;
  StudyConfig config_;
  Clock clock_;
  mutable std::mutex mutex_;
  std::mt19937_64 rng_;
  std::uint64_t next_assignment_ = 0;
  std::map<std::string, Active> active_;
  std::vector<ComparisonRecord> log_;
};

struct ServerOptions {
  std::filesystem::path media_dir;
  std::filesystem::path ui_dir;     // optional static frontend
  std::string cors_origin = "*";
};

/// HTTP front end: GET /health, GET /pair, POST /vote, GET /rankings,
/// static /media/... and (optionally) the UI at /.
class StudyServer {
 public:
  StudyServer(StudyService& service, ServerOptions options);
  ~StudyServer();
  StudyServer(const StudyServer&) = delete;
  StudyServer& operator=(const StudyServer&) = delete;

  /// Binds and serves until stop(). Returns false when binding fails.
  bool listen(const std::string& host, int port);
  /// Binds an ephemeral port and returns it (or -1); serve with listen_after_bind.
  int bind_to_any_port(const std::string& host);
  bool listen_after_bind();
  void wait_until_ready() const;
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

std::string rankings_json(const RatingTable& table);

}  // namespace lipkit
