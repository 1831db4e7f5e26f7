#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace lipkit {

enum class DiscardReason { LowQuality, NoActiveSpeaker, MissingScores, BadFormat };

std::string to_string(DiscardReason reason);

struct SceneSpan {
  double start_s = 0.0;
  double end_s = 0.0;
  double duration() const { return end_s - start_s; }
};

struct VideoEntry {
  std::string video_id;
  std::string path;  // optional; handed to scorer plugins
  double fps = 25.0;
  int audio_hz = 16000;
  int audio_channels = 1;
  double duration_s = 0.0;
  std::vector<SceneSpan> scene_spans;  // empty: the whole video is one scene
  std::optional<std::vector<double>> quality_scores;
  std::optional<double> asd_score;
};

struct CurationManifest {
  std::string dataset_name;
  std::vector<VideoEntry> entries;
};

struct CurationConfig {
  double target_fps = 25.0;
  int target_audio_hz = 16000;
  int target_audio_channels = 1;
  double min_quality = 0.4;
  double min_asd = 0.75;
  double min_clip_s = 1.0;
  std::size_t quality_evaluations = 9;
  std::string scorer_command;  // empty: scores come from the manifest only
  int max_parallel = 4;
};

void validate_curation_config(const CurationConfig& config);

/// Throws InvalidArgument when the entry violates its own invariants
/// (overlapping spans, non-positive duration, scores outside [0, 1], ...).
void validate_entry(const VideoEntry& entry, const CurationConfig& config = {});
void validate_manifest(const CurationManifest& manifest, const CurationConfig& config = {});

struct GateResult {
  bool pass = true;
  std::optional<DiscardReason> reason;
  std::vector<std::string> messages;
};

GateResult normalize_spec_check(const VideoEntry& entry, const CurationConfig& config = {});
GateResult quality_gate(const VideoEntry& entry, const CurationConfig& config = {});
GateResult speaker_gate(const VideoEntry& entry, const CurationConfig& config = {});

double mean_quality(const std::vector<double>& scores);

struct ClipRef {
  std::string video_id;
  int scene = 0;
  double start_s = 0.0;
  double end_s = 0.0;
  double duration() const { return end_s - start_s; }
};

struct DiscardedClip {
  ClipRef clip;
  DiscardReason reason = DiscardReason::BadFormat;
};

struct SceneSplit {
  std::vector<ClipRef> clips;
  std::vector<ClipRef> too_short;
};

/// Candidate clips of an entry, in span order.
std::vector<ClipRef> candidate_clips(const VideoEntry& entry);
SceneSplit split_scenes(const VideoEntry& entry, const CurationConfig& config = {});

struct CurationStats {
  int videos = 0;
  int discarded_videos = 0;  // videos that contribute no kept clip
  int candidate_clips = 0;
  int kept_clips = 0;
  int discarded_clips = 0;
  double kept_seconds = 0.0;
  double discarded_seconds = 0.0;
  std::map<DiscardReason, int> clips_by_reason;
  std::map<DiscardReason, int> videos_by_reason;  // first failing gate per video
};

struct CurationReport {
  std::string dataset_name;
  std::vector<ClipRef> kept;
  std::vector<DiscardedClip> discarded;
  CurationStats stats;
};

/// Gates run in the order format, quality, speaker, scene length; a video
/// failing a gate discards all its clips with that gate's reason. Output is
/// ordered by video_id.
CurationReport curate(const CurationManifest& manifest, const CurationConfig& config = {});

/// Manifest restricted to the kept clips of `report`.
CurationManifest kept_manifest(const CurationManifest& manifest, const CurationReport& report);

// External scorer plugins: `<command> <video_id> <path>` prints one JSON
// object holding "quality_scores" and/or "asd_score".
struct PluginScores {
  std::optional<std::vector<double>> quality_scores;
  std::optional<double> asd_score;
  bool ok = false;
};

using ScorerFn = std::function<PluginScores(const VideoEntry&)>;

PluginScores parse_plugin_output(const std::string& text);
PluginScores run_scorer_command(const std::string& command, const VideoEntry& entry);

/// Fills missing scores using `scorer`, at most `max_parallel` calls at a
/// time. Failed calls leave the scores absent (MissingScores downstream).
CurationManifest apply_scorer(const CurationManifest& manifest, const ScorerFn& scorer, int max_parallel);

CurationManifest parse_manifest(const std::string& text);
CurationManifest read_manifest(const std::filesystem::path& path);
std::string manifest_json(const CurationManifest& manifest);

std::string report_json(const CurationReport& report);
std::string report_summary(const CurationReport& report);

}  // namespace lipkit
