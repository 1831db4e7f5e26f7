#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "lipkit/curation.hpp"
#include "lipkit/mask.hpp"
#include "lipkit/ranking.hpp"
#include "lipkit/simulate.hpp"

namespace lipkit::cli {

enum ExitCode : int { kOk = 0, kInputError = 2, kNumericError = 3 };

struct MaskCommand {
  std::filesystem::path landmarks;
  MaskVariant variant = MaskVariant::Ours;
  MaskParams params;
  std::filesystem::path occlusion_dir;  // optional
  std::filesystem::path out_dir;
};

/// Writes out_dir/<video_id>/<frame>.pgm; returns the written paths.
std::vector<std::filesystem::path> cmd_mask(const MaskCommand& cmd);

struct LipleakCommand {
  std::vector<std::filesystem::path> landmarks;
  std::vector<double> thresholds{0.25};
  std::filesystem::path out_dir;
};

/// Writes lipleak.csv and mar_series.csv (MAR series at the first threshold).
void cmd_lipleak(const LipleakCommand& cmd);

struct EloCommand {
  std::filesystem::path log;
  EloConfig elo;
  int bins = 20;
  std::filesystem::path out_dir;
};

/// ratings.csv, winrate.csv, histogram.csv. With bootstrap_rounds == 0 the
/// ratings are the single sequential pass and histogram.csv has no rows.
RatingTable cmd_elo(const EloCommand& cmd);

struct CurateCommand {
  std::filesystem::path manifest;
  CurationConfig config;
  std::filesystem::path out_report;
  std::filesystem::path out_summary;  // optional; summary also goes to stdout
};

CurationReport cmd_curate(const CurateCommand& cmd);

struct SimulateCommand {
  SimulationConfig config;
  std::filesystem::path out_dir;
};

SimulationResult cmd_simulate(const SimulateCommand& cmd);

/// Full command-line entry point. Returns the process exit code.
int run(int argc, const char* const* argv);

}  // namespace lipkit::cli
