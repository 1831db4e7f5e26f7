#include "lipkit/study_service.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <ctime>
#include <httplib.h>
#include <nlohmann/json.hpp>

#include "lipkit/error.hpp"
#include "lipkit/io.hpp"

namespace lipkit {

using nlohmann::json;

std::vector<PairCandidate> parse_pair_pool(const std::string& text) {
  std::vector<PairCandidate> pool;
  try {
    const json root = json::parse(text);
    const json& items = root.is_array() ? root : root.at("pairs");
    for (const auto& item : items) {
      PairCandidate c;
      c.pair_id = item.at("pair_id").get<std::string>();
      c.model_a = item.at("model_a").get<std::string>();
      c.model_b = item.at("model_b").get<std::string>();
      c.media_a = item.value("media_a", std::string{});
      c.media_b = item.value("media_b", std::string{});
      require(!c.pair_id.empty(), ErrorKind::Parse, "pair with empty pair_id");
      require(!c.model_a.empty() && !c.model_b.empty() && c.model_a != c.model_b, ErrorKind::Parse,
              "pair '" + c.pair_id + "' must reference two different models");
      pool.push_back(std::move(c));
    }
  } catch (const json::exception& e) {
    fail(ErrorKind::Parse, std::string("bad pair pool: ") + e.what());
  }
  return pool;
}

std::vector<PairCandidate> read_pair_pool(const std::filesystem::path& path) {
  try {
    return parse_pair_pool(io::read_file(path));
  } catch (const Error& e) {
    fail(e.kind(), path.string() + ": " + e.what());
  }
}

std::optional<Side> parse_side(const std::string& text) {
  if (text == "left") return Side::Left;
  if (text == "right") return Side::Right;
  return std::nullopt;
}

std::string iso8601(std::chrono::system_clock::time_point t) {
  const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(t.time_since_epoch()).count();
  const std::time_t secs = static_cast<std::time_t>(ms / 1000);
  std::tm tm{};
  gmtime_r(&secs, &tm);
  char buf[40];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%S", &tm);
  char out[48];
  std::snprintf(out, sizeof out, "%s.%03dZ", buf, static_cast<int>(ms % 1000));
  return out;
}

StudyService::StudyService(std::vector<PairCandidate> pool, StudyConfig config, Clock clock)
    : pool_(std::move(pool)),
      config_(std::move(config)),
      clock_(clock ? std::move(clock) : Clock([] { return std::chrono::system_clock::now(); })),
      rng_(config_.seed) {
  validate_elo_config(config_.elo);
  require(config_.assignment_ttl.count() > 0, ErrorKind::InvalidArgument, "assignment ttl must be positive");
  for (const auto& c : pool_) {
    require(c.model_a != c.model_b, ErrorKind::InvalidArgument, "pair '" + c.pair_id + "' compares a model with itself");
  }
  if (!config_.log_path.empty() && std::filesystem::exists(config_.log_path)) {
    log_ = read_comparison_log(config_.log_path);
  }
}

void StudyService::check_annotator(const std::string& annotator) const {
  if (annotator.empty()) throw ServiceError(400, "annotator id is required");
  if (config_.annotators && config_.annotators->count(annotator) == 0) {
    throw ServiceError(400, "unknown annotator '" + annotator + "'");
  }
}

std::string StudyService::media_url(const std::string& media) const {
  if (media.empty() || media.front() == '/' || media.find("://") != std::string::npos) return media;
  return config_.media_prefix + media;
}

void StudyService::purge_expired(std::chrono::system_clock::time_point now) {
  // Voted assignments stay so a late duplicate still gets 409.
  for (auto it = active_.begin(); it != active_.end();) {
    if (!it->second.voted && it->second.assignment.expires_at <= now) {
      it = active_.erase(it);
    } else {
      ++it;
    }
  }
}

PairAssignment StudyService::serve_pair(const std::string& annotator) {
  check_annotator(annotator);
  std::lock_guard lock(mutex_);
  if (pool_.empty()) throw ServiceError(409, "pair pool is empty");
  const auto now = clock_();
  purge_expired(now);

  std::uniform_int_distribution<std::size_t> pick(0, pool_.size() - 1);
  const std::size_t index = pick(rng_);
  const bool swapped = std::bernoulli_distribution(0.5)(rng_);
  const PairCandidate& c = pool_[index];

  PairAssignment a;
  a.assignment_id = "as-" + std::to_string(config_.seed) + "-" + std::to_string(++next_assignment_);
  a.pair_id = c.pair_id;
  a.annotator = annotator;
  a.swapped = swapped;
  a.media_url_a = media_url(swapped ? c.media_b : c.media_a);
  a.media_url_b = media_url(swapped ? c.media_a : c.media_b);
  a.expires_at = now + config_.assignment_ttl;
  active_[a.assignment_id] = Active{a, index, false};
  return a;
}

void StudyService::append_to_log(const ComparisonRecord& record) {
  if (config_.log_path.empty()) return;
  const std::string line = format_record(record) + "\n";
  const int fd = ::open(config_.log_path.c_str(), O_WRONLY | O_CREAT | O_APPEND | O_CLOEXEC, 0644);
  if (fd < 0) fail(ErrorKind::Io, "cannot open vote log " + config_.log_path.string() + ": " + std::strerror(errno));
  std::size_t written = 0;
  while (written < line.size()) {
    const ssize_t n = ::write(fd, line.data() + written, line.size() - written);
    if (n < 0) {
      if (errno == EINTR) continue;
      ::close(fd);
      fail(ErrorKind::Io, "write to vote log failed: " + std::string(std::strerror(errno)));
    }
    written += static_cast<std::size_t>(n);
  }
  const bool synced = ::fsync(fd) == 0;
  ::close(fd);
  require(synced, ErrorKind::Io, "fsync of vote log failed");
}

ComparisonRecord StudyService::vote(const std::string& id, Side choice, const std::string& annotator) {
  check_annotator(annotator);
  std::lock_guard lock(mutex_);
  const auto now = clock_();

  auto found = active_.find(id);
  if (found == active_.end()) {
    // Fall back to the annotator's latest assignment of this pair.
    for (auto it = active_.begin(); it != active_.end(); ++it) {
      const auto& a = it->second.assignment;
      if (a.pair_id == id && a.annotator == annotator &&
          (found == active_.end() || a.expires_at >= found->second.assignment.expires_at)) {
        found = it;
      }
    }
  }
  if (found == active_.end() || found->second.assignment.annotator != annotator) {
    throw ServiceError(404, "no assignment '" + id + "' for this annotator");
  }
  Active& active = found->second;
  if (active.voted) throw ServiceError(409, "assignment already voted");
  if (active.assignment.expires_at <= now) {
    active_.erase(found);
    throw ServiceError(404, "assignment expired");
  }

  const PairCandidate& c = pool_[active.candidate];
  const bool left_is_a = !active.assignment.swapped;
  ComparisonRecord r;
  r.pair_id = c.pair_id;
  r.model_a = c.model_a;
  r.model_b = c.model_b;
  r.winner = (choice == Side::Left) == left_is_a ? Winner::A : Winner::B;
  r.annotator = annotator;
  r.timestamp = iso8601(now);

  append_to_log(r);
  log_.push_back(r);
  active.voted = true;
  return r;
}

std::vector<std::string> StudyService::models() const {
  std::set<std::string> names;
  for (const auto& c : pool_) {
    names.insert(c.model_a);
    names.insert(c.model_b);
  }
  std::lock_guard lock(mutex_);
  for (const auto& r : log_) {
    names.insert(r.model_a);
    names.insert(r.model_b);
  }
  return {names.begin(), names.end()};
}

std::vector<ComparisonRecord> StudyService::log_snapshot() const {
  std::lock_guard lock(mutex_);
  return log_;
}

RatingTable StudyService::rankings(bool bootstrap) const {
  const auto snapshot = log_snapshot();
  RatingTable table;
  if (!snapshot.empty()) {
    table = bootstrap ? bootstrap_elo(snapshot, config_.elo).table : elo_ratings(snapshot, config_.elo);
  }
  const double r0 = config_.elo.initial_rating;
  for (const auto& m : models()) table.try_emplace(m, ModelRating{r0, r0, r0, 0});
  return table;
}

std::string rankings_json(const RatingTable& table) {
  json models = json::array();
  for (const auto& [name, r] : sorted_ratings(table)) {
    models.push_back(
        {{"model", name}, {"rating", r.rating}, {"ci_low", r.ci_low}, {"ci_high", r.ci_high}, {"games", r.games}});
  }
  return json{{"models", models}}.dump();
}

struct StudyServer::Impl {
  StudyService& service;
  ServerOptions options;
  httplib::Server server;

  Impl(StudyService& s, ServerOptions o) : service(s), options(std::move(o)) {}
};

namespace {

void send_json(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, int status, const std::string& message) {
  send_json(res, status, json{{"error", message}});
}

template <typename Handler>
void guarded(httplib::Response& res, Handler&& handler) {
  try {
    handler();
  } catch (const ServiceError& e) {
    send_error(res, e.status(), e.what());
  } catch (const Error& e) {
    send_error(res, e.kind() == ErrorKind::Io ? 500 : 400, e.what());
  } catch (const std::exception& e) {
    send_error(res, 500, e.what());
  }
}

bool truthy(const std::string& v) { return v.empty() || v == "1" || v == "true" || v == "yes"; }

}  // namespace

StudyServer::StudyServer(StudyService& service, ServerOptions options)
    : impl_(std::make_unique<Impl>(service, std::move(options))) {
  auto& svr = impl_->server;
  StudyService& svc = impl_->service;
  const std::string origin = impl_->options.cors_origin;

  svr.set_post_routing_handler([origin](const httplib::Request&, httplib::Response& res) {
    res.set_header("Access-Control-Allow-Origin", origin);
    res.set_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS");
    res.set_header("Access-Control-Allow-Headers", "Content-Type");
  });
  svr.Options(".*", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });

  svr.Get("/health", [&svc](const httplib::Request&, httplib::Response& res) {
    send_json(res, 200, json{{"status", "ok"}, {"pairs", svc.pool_size()}, {"votes", svc.log_snapshot().size()}});
  });

  svr.Get("/pair", [&svc](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      const PairAssignment a = svc.serve_pair(req.get_param_value("annotator"));
      send_json(res, 200,
                json{{"assignment_id", a.assignment_id},
                     {"pair_id", a.pair_id},
                     {"annotator", a.annotator},
                     {"media_url_a", a.media_url_a},
                     {"media_url_b", a.media_url_b},
                     {"expires_at", iso8601(a.expires_at)}});
    });
  });

  svr.Post("/vote", [&svc](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      json body;
      try {
        body = json::parse(req.body);
      } catch (const json::exception&) {
        throw ServiceError(400, "vote body must be JSON");
      }
      if (!body.is_object()) throw ServiceError(400, "vote body must be a JSON object");
      auto text = [&](const char* key) {
        auto it = body.find(key);
        return it != body.end() && it->is_string() ? it->get<std::string>() : std::string{};
      };
      const auto side = parse_side(text("choice"));
      if (!side) throw ServiceError(400, "choice must be \"left\" or \"right\"");
      std::string id = text("assignment_id");
      if (id.empty()) id = text("pair_id");
      if (id.empty()) throw ServiceError(400, "assignment_id or pair_id is required");
      const ComparisonRecord r = svc.vote(id, *side, text("annotator"));
      send_json(res, 200, json{{"ok", true}, {"record", json::parse(format_record(r))}});
    });
  });

  svr.Get("/rankings", [&svc](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      const bool bootstrap = req.has_param("bootstrap") && truthy(req.get_param_value("bootstrap"));
      res.status = 200;
      res.set_content(rankings_json(svc.rankings(bootstrap)), "application/json");
    });
  });

  if (!impl_->options.media_dir.empty()) {
    require(svr.set_mount_point("/media", impl_->options.media_dir.string()), ErrorKind::Io,
            "media directory not found: " + impl_->options.media_dir.string());
  }
  if (!impl_->options.ui_dir.empty()) {
    require(svr.set_mount_point("/", impl_->options.ui_dir.string()), ErrorKind::Io,
            "ui directory not found: " + impl_->options.ui_dir.string());
  }
}

StudyServer::~StudyServer() { stop(); }

bool StudyServer::listen(const std::string& host, int port) { return impl_->server.listen(host, port); }

int StudyServer::bind_to_any_port(const std::string& host) { return impl_->server.bind_to_any_port(host); }

bool StudyServer::listen_after_bind() { return impl_->server.listen_after_bind(); }

void StudyServer::wait_until_ready() const { impl_->server.wait_until_ready(); }

void StudyServer::stop() {
  if (impl_ && impl_->server.is_running()) impl_->server.stop();
}

}  // namespace lipkit
