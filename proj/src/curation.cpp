#include "lipkit/curation.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <iomanip>
#include <nlohmann/json.hpp>
#include <numeric>
#include <set>
#include <sstream>
#include <sys/wait.h>
#include <thread>

#include "lipkit/error.hpp"
#include "lipkit/io.hpp"

namespace lipkit {

using nlohmann::json;

std::string to_string(DiscardReason reason) {
  switch (reason) {
    case DiscardReason::LowQuality: return "LowQuality";
    case DiscardReason::NoActiveSpeaker: return "NoActiveSpeaker";
    case DiscardReason::MissingScores: return "MissingScores";
    case DiscardReason::BadFormat: return "BadFormat";
  }
  return "BadFormat";
}

void validate_curation_config(const CurationConfig& c) {
  require(c.target_fps > 0.0, ErrorKind::InvalidArgument, "target fps must be positive");
  require(c.target_audio_hz > 0 && c.target_audio_channels > 0, ErrorKind::InvalidArgument,
          "target audio format must be positive");
  require(c.min_quality >= 0.0 && c.min_quality <= 1.0, ErrorKind::InvalidArgument,
          "min_quality must lie in [0, 1]");
  require(c.min_asd >= 0.0 && c.min_asd <= 1.0, ErrorKind::InvalidArgument, "min_asd must lie in [0, 1]");
  require(std::isfinite(c.min_clip_s) && c.min_clip_s >= 0.0, ErrorKind::InvalidArgument,
          "min_clip_s must be >= 0");
  require(c.quality_evaluations >= 1, ErrorKind::InvalidArgument, "quality_evaluations must be >= 1");
  require(c.max_parallel >= 1, ErrorKind::InvalidArgument, "max_parallel must be >= 1");
}

void validate_entry(const VideoEntry& e, const CurationConfig& config) {
  const std::string who = "video '" + e.video_id + "': ";
  require(!e.video_id.empty(), ErrorKind::InvalidArgument, "video entry has an empty video_id");
  require(std::isfinite(e.duration_s) && e.duration_s > 0.0, ErrorKind::InvalidArgument,
          who + "duration_s must be positive");
  require(std::isfinite(e.fps), ErrorKind::InvalidArgument, who + "fps must be finite");
  double previous_end = 0.0;
  for (std::size_t i = 0; i < e.scene_spans.size(); ++i) {
    const auto& s = e.scene_spans[i];
    require(std::isfinite(s.start_s) && std::isfinite(s.end_s) && s.start_s >= 0.0 && s.end_s > s.start_s,
            ErrorKind::InvalidArgument, who + "scene span " + std::to_string(i) + " is empty or negative");
    require(s.end_s <= e.duration_s, ErrorKind::InvalidArgument,
            who + "scene span " + std::to_string(i) + " ends after the video");
    require(i == 0 || s.start_s >= previous_end, ErrorKind::InvalidArgument,
            who + "scene spans overlap or are not ascending at span " + std::to_string(i));
    previous_end = s.end_s;
  }
  if (e.quality_scores) {
    require(e.quality_scores->size() == config.quality_evaluations, ErrorKind::InvalidArgument,
            who + "expected " + std::to_string(config.quality_evaluations) + " quality scores, got " +
                std::to_string(e.quality_scores->size()));
    for (double q : *e.quality_scores) {
      require(q >= 0.0 && q <= 1.0, ErrorKind::InvalidArgument, who + "quality score outside [0, 1]");
    }
  }
  if (e.asd_score) {
    require(*e.asd_score >= 0.0 && *e.asd_score <= 1.0, ErrorKind::InvalidArgument,
            who + "asd_score outside [0, 1]");
  }
}

void validate_manifest(const CurationManifest& manifest, const CurationConfig& config) {
  std::set<std::string> seen;
  for (const auto& e : manifest.entries) {
    validate_entry(e, config);
    require(seen.insert(e.video_id).second, ErrorKind::InvalidArgument,
            "duplicate video_id '" + e.video_id + "' in manifest");
  }
}

namespace {

GateResult discard(DiscardReason reason, std::string message) {
  GateResult r;
  r.pass = false;
  r.reason = reason;
  r.messages.push_back(std::move(message));
  return r;
}

}  // namespace

GateResult normalize_spec_check(const VideoEntry& e, const CurationConfig& config) {
  GateResult r;
  std::ostringstream msg;
  if (e.fps != config.target_fps) {
    r.messages.push_back("fps " + io::format_number(e.fps) + " != " + io::format_number(config.target_fps));
  }
  if (e.audio_hz != config.target_audio_hz) {
    r.messages.push_back("audio " + std::to_string(e.audio_hz) + " Hz != " +
                         std::to_string(config.target_audio_hz) + " Hz");
  }
  if (e.audio_channels != config.target_audio_channels) {
    r.messages.push_back(std::to_string(e.audio_channels) + " audio channels != " +
                         std::to_string(config.target_audio_channels));
  }
  if (!r.messages.empty()) {
    r.pass = false;
    r.reason = DiscardReason::BadFormat;
  }
  return r;
}

namespace {

// Compensated sum, correctly rounded for the short score lists used here.
double score_sum(const std::vector<double>& scores) {
  double sum = 0.0, carry = 0.0;
  for (double v : scores) {
    const double t = sum + v;
    carry += std::abs(sum) >= std::abs(v) ? (sum - t) + v : (v - t) + sum;
    sum = t;
  }
  return sum + carry;
}

}  // namespace

double mean_quality(const std::vector<double>& scores) {
  require(!scores.empty(), ErrorKind::InvalidArgument, "mean of no quality scores");
  return score_sum(scores) / static_cast<double>(scores.size());
}

GateResult quality_gate(const VideoEntry& e, const CurationConfig& config) {
  if (!e.quality_scores || e.quality_scores->size() != config.quality_evaluations) {
    return discard(DiscardReason::MissingScores, "quality scores missing");
  }
  // mean < min, compared as sum < min * n so that nine copies of the
  // threshold land exactly on it.
  const double n = static_cast<double>(e.quality_scores->size());
  const double mean = mean_quality(*e.quality_scores);
  if (score_sum(*e.quality_scores) < config.min_quality * n) {
    return discard(DiscardReason::LowQuality,
                   "mean quality " + io::format_number(mean) + " < " + io::format_number(config.min_quality));
  }
  return {};
}

GateResult speaker_gate(const VideoEntry& e, const CurationConfig& config) {
  if (!e.asd_score) return discard(DiscardReason::MissingScores, "active-speaker score missing");
  if (*e.asd_score < config.min_asd) {
    return discard(DiscardReason::NoActiveSpeaker, "active-speaker score " + io::format_number(*e.asd_score) +
                                                       " < " + io::format_number(config.min_asd));
  }
  return {};
}

std::vector<ClipRef> candidate_clips(const VideoEntry& e) {
  std::vector<ClipRef> out;
  if (e.scene_spans.empty()) {
    out.push_back({e.video_id, 0, 0.0, e.duration_s});
    return out;
  }
  for (std::size_t i = 0; i < e.scene_spans.size(); ++i) {
    out.push_back({e.video_id, static_cast<int>(i), e.scene_spans[i].start_s, e.scene_spans[i].end_s});
  }
  return out;
}

SceneSplit split_scenes(const VideoEntry& e, const CurationConfig& config) {
  validate_entry(e, config);
  SceneSplit split;
  for (auto& clip : candidate_clips(e)) {
    (clip.duration() < config.min_clip_s ? split.too_short : split.clips).push_back(std::move(clip));
  }
  return split;
}

CurationReport curate(const CurationManifest& manifest, const CurationConfig& config) {
  validate_curation_config(config);
  validate_manifest(manifest, config);

  std::vector<const VideoEntry*> order;
  for (const auto& e : manifest.entries) order.push_back(&e);
  std::sort(order.begin(), order.end(), [](auto* a, auto* b) { return a->video_id < b->video_id; });

  CurationReport report;
  report.dataset_name = manifest.dataset_name;
  auto& st = report.stats;
  st.videos = static_cast<int>(order.size());

  auto drop = [&](const ClipRef& clip, DiscardReason reason) {
    report.discarded.push_back({clip, reason});
    ++st.discarded_clips;
    ++st.clips_by_reason[reason];
    st.discarded_seconds += clip.duration();
  };

  for (const VideoEntry* e : order) {
    const auto clips = candidate_clips(*e);
    st.candidate_clips += static_cast<int>(clips.size());

    std::optional<DiscardReason> failed;
    for (auto gate : {normalize_spec_check, quality_gate, speaker_gate}) {
      const GateResult g = gate(*e, config);
      if (!g.pass) {
        failed = g.reason;
        break;
      }
    }
    if (failed) {
      for (const auto& clip : clips) drop(clip, *failed);
      ++st.discarded_videos;
      ++st.videos_by_reason[*failed];
      continue;
    }

    // Walk the candidates in span order so the report keeps that order.
    int kept_here = 0;
    for (const auto& clip : clips) {
      if (clip.duration() < config.min_clip_s) {
        drop(clip, DiscardReason::BadFormat);
      } else {
        report.kept.push_back(clip);
        ++st.kept_clips;
        st.kept_seconds += clip.duration();
        ++kept_here;
      }
    }
    if (kept_here == 0) {
      ++st.discarded_videos;
      ++st.videos_by_reason[DiscardReason::BadFormat];
    }
  }
  return report;
}

CurationManifest kept_manifest(const CurationManifest& manifest, const CurationReport& report) {
  std::map<std::string, std::vector<SceneSpan>> spans;
  for (const auto& clip : report.kept) spans[clip.video_id].push_back({clip.start_s, clip.end_s});
  CurationManifest out;
  out.dataset_name = manifest.dataset_name;
  for (const auto& e : manifest.entries) {
    auto it = spans.find(e.video_id);
    if (it == spans.end()) continue;
    VideoEntry copy = e;
    copy.scene_spans = it->second;
    out.entries.push_back(std::move(copy));
  }
  return out;
}

PluginScores parse_plugin_output(const std::string& text) {
  PluginScores out;
  json obj;
  try {
    obj = json::parse(text);
  } catch (const json::exception&) {
    return out;
  }
  if (!obj.is_object()) return out;
  try {
    if (obj.contains("quality_scores")) out.quality_scores = obj.at("quality_scores").get<std::vector<double>>();
    if (obj.contains("asd_score")) out.asd_score = obj.at("asd_score").get<double>();
  } catch (const json::exception&) {
    return PluginScores{};
  }
  out.ok = out.quality_scores.has_value() || out.asd_score.has_value();
  return out;
}

namespace {

std::string shell_quote(const std::string& s) {
  std::string out = "'";
  for (char c : s) {
    if (c == '\'') {
      out += "'\\''";
    } else {
      out += c;
    }
  }
  return out + "'";
}

}  // namespace

PluginScores run_scorer_command(const std::string& command, const VideoEntry& entry) {
  const std::string line = command + " " + shell_quote(entry.video_id) + " " + shell_quote(entry.path);
  FILE* pipe = ::popen(line.c_str(), "r");
  if (pipe == nullptr) return {};
  std::string output;
  char buffer[4096];
  std::size_t n = 0;
  while ((n = std::fread(buffer, 1, sizeof buffer, pipe)) > 0) output.append(buffer, n);
  const int status = ::pclose(pipe);
  if (status == -1 || !WIFEXITED(status) || WEXITSTATUS(status) != 0) return {};
  return parse_plugin_output(output);
}

CurationManifest apply_scorer(const CurationManifest& manifest, const ScorerFn& scorer, int max_parallel) {
  require(max_parallel >= 1, ErrorKind::InvalidArgument, "max_parallel must be >= 1");
  CurationManifest out = manifest;
  std::vector<std::size_t> todo;
  for (std::size_t i = 0; i < out.entries.size(); ++i) {
    if (!out.entries[i].quality_scores || !out.entries[i].asd_score) todo.push_back(i);
  }
  std::vector<PluginScores> results(todo.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t k = next++; k < todo.size(); k = next++) {
      try {
        results[k] = scorer(out.entries[todo[k]]);
      } catch (...) {
        results[k] = PluginScores{};
      }
    }
  };
  const std::size_t threads = std::min<std::size_t>(static_cast<std::size_t>(max_parallel), todo.size());
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  for (std::size_t k = 0; k < todo.size(); ++k) {
    if (!results[k].ok) continue;
    auto& e = out.entries[todo[k]];
    if (!e.quality_scores && results[k].quality_scores) e.quality_scores = results[k].quality_scores;
    if (!e.asd_score && results[k].asd_score) e.asd_score = results[k].asd_score;
  }
  return out;
}

CurationManifest parse_manifest(const std::string& text) {
  CurationManifest m;
  try {
    const json root = json::parse(text);
    m.dataset_name = root.value("dataset_name", std::string{});
    for (const auto& item : root.at("entries")) {
      VideoEntry e;
      e.video_id = item.at("video_id").get<std::string>();
      e.path = item.value("path", std::string{});
      e.fps = item.at("fps").get<double>();
      e.audio_hz = item.at("audio_hz").get<int>();
      e.audio_channels = item.at("audio_channels").get<int>();
      e.duration_s = item.at("duration_s").get<double>();
      if (item.contains("scene_spans")) {
        for (const auto& span : item.at("scene_spans")) {
          if (span.is_array()) {
            require(span.size() == 2, ErrorKind::Parse, "scene span must be [start_s, end_s]");
            e.scene_spans.push_back({span[0].get<double>(), span[1].get<double>()});
          } else {
            e.scene_spans.push_back({span.at("start_s").get<double>(), span.at("end_s").get<double>()});
          }
        }
      }
      if (item.contains("quality_scores") && !item.at("quality_scores").is_null()) {
        e.quality_scores = item.at("quality_scores").get<std::vector<double>>();
      }
      if (item.contains("asd_score") && !item.at("asd_score").is_null()) {
        e.asd_score = item.at("asd_score").get<double>();
      }
      m.entries.push_back(std::move(e));
    }
  } catch (const json::exception& ex) {
    fail(ErrorKind::Parse, std::string("bad curation manifest: ") + ex.what());
  }
  return m;
}

CurationManifest read_manifest(const std::filesystem::path& path) {
  try {
    return parse_manifest(io::read_file(path));
  } catch (const Error& e) {
    fail(e.kind(), path.string() + ": " + e.what());
  }
}

std::string manifest_json(const CurationManifest& manifest) {
  json entries = json::array();
  for (const auto& e : manifest.entries) {
    json spans = json::array();
    for (const auto& s : e.scene_spans) spans.push_back({s.start_s, s.end_s});
    json item = {{"video_id", e.video_id},         {"fps", e.fps},
                 {"audio_hz", e.audio_hz},         {"audio_channels", e.audio_channels},
                 {"duration_s", e.duration_s},     {"scene_spans", spans}};
    if (!e.path.empty()) item["path"] = e.path;
    item["quality_scores"] = e.quality_scores ? json(*e.quality_scores) : json(nullptr);
    item["asd_score"] = e.asd_score ? json(*e.asd_score) : json(nullptr);
    entries.push_back(std::move(item));
  }
  return json{{"dataset_name", manifest.dataset_name}, {"entries", entries}}.dump(2) + "\n";
}

namespace {

json clip_json(const ClipRef& c) {
  return {{"video_id", c.video_id}, {"scene", c.scene}, {"start_s", c.start_s}, {"end_s", c.end_s}};
}

}  // namespace

std::string report_json(const CurationReport& report) {
  json kept = json::array();
  for (const auto& c : report.kept) kept.push_back(clip_json(c));
  json discarded = json::array();
  for (const auto& d : report.discarded) {
    json item = clip_json(d.clip);
    item["reason"] = to_string(d.reason);
    discarded.push_back(std::move(item));
  }
  const auto& st = report.stats;
  json clips_by_reason = json::object();
  json videos_by_reason = json::object();
  for (auto r : {DiscardReason::LowQuality, DiscardReason::NoActiveSpeaker, DiscardReason::MissingScores,
                 DiscardReason::BadFormat}) {
    auto c = st.clips_by_reason.find(r);
    auto v = st.videos_by_reason.find(r);
    clips_by_reason[to_string(r)] = c == st.clips_by_reason.end() ? 0 : c->second;
    videos_by_reason[to_string(r)] = v == st.videos_by_reason.end() ? 0 : v->second;
  }
  json stats = {{"videos", st.videos},
                {"discarded_videos", st.discarded_videos},
                {"candidate_clips", st.candidate_clips},
                {"kept_clips", st.kept_clips},
                {"discarded_clips", st.discarded_clips},
                {"kept_seconds", st.kept_seconds},
                {"kept_hours", st.kept_seconds / 3600.0},
                {"discarded_seconds", st.discarded_seconds},
                {"clips_by_reason", clips_by_reason},
                {"videos_by_reason", videos_by_reason}};
  return json{{"dataset_name", report.dataset_name}, {"kept", kept}, {"discarded", discarded}, {"stats", stats}}
             .dump(2) +
         "\n";
}

std::string report_summary(const CurationReport& report) {
  const auto& st = report.stats;
  std::ostringstream out;
  out << "dataset: " << (report.dataset_name.empty() ? "(unnamed)" : report.dataset_name) << "\n";
  out << std::left << std::setw(18) << "" << std::right << std::setw(8) << "videos" << std::setw(8) << "clips"
      << std::setw(12) << "hours" << "\n";
  auto row = [&](const std::string& label, int videos, int clips, double seconds) {
    out << std::left << std::setw(18) << label << std::right << std::setw(8) << videos << std::setw(8) << clips
        << std::setw(12) << std::fixed << std::setprecision(4) << seconds / 3600.0 << "\n";
  };
  row("input", st.videos, st.candidate_clips, st.kept_seconds + st.discarded_seconds);
  row("kept", st.videos - st.discarded_videos, st.kept_clips, st.kept_seconds);
  row("discarded", st.discarded_videos, st.discarded_clips, st.discarded_seconds);
  for (auto r : {DiscardReason::BadFormat, DiscardReason::LowQuality, DiscardReason::NoActiveSpeaker,
                 DiscardReason::MissingScores}) {
    auto c = st.clips_by_reason.find(r);
    auto v = st.videos_by_reason.find(r);
    double seconds = 0.0;
    for (const auto& d : report.discarded) {
      if (d.reason == r) seconds += d.clip.duration();
    }
    row("  " + to_string(r), v == st.videos_by_reason.end() ? 0 : v->second,
        c == st.clips_by_reason.end() ? 0 : c->second, seconds);
  }
  return out.str();
}

}  // namespace lipkit
