#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "lipkit/config.hpp"
#include "lipkit/training.hpp"

namespace lipkit {

struct SimulationConfig {
  BarFixtureConfig fixture;
  TrainConfig train;
  SampleConfig sample;
  int eval_clip = -1;  // -1: last clip, held out of training
};

/// Reads T, S, sigma_data, w_aud, w_id, drop rates, steps, seed and the toy
/// sizes from a key=value config; unknown keys are rejected.
SimulationConfig simulation_config_from(const KeyValueConfig& config);
std::vector<std::string> simulation_config_keys();

struct SimulationResult {
  SimulationConfig config;
  BarFixture fixture;
  TrainResult training;
  int eval_clip = 0;
  LatentClip keyframes;     // T frames at t_k = k*S
  LatentClip stitched;      // frames S .. T*S, (T-1)*S + 1 of them
  LatentClip ground_truth;  // same frames from the fixture
  double masked_mae = 0.0;
  double noise_baseline_mae = 0.0;
  bool unmasked_preserved = false;
  bool loss_halved = false;
};

/// Trains the toy denoiser, generates keyframes for the evaluation clip,
/// interpolates each consecutive keyframe pair and stitches the segments
/// (the duplicated boundary frame is emitted once; the slot position that
/// coincides with the closing keyframe is dropped).
SimulationResult run_simulation(const SimulationConfig& config);

/// Fixture tensors, model parameters, loss.csv, sampled clips, report.json.
void write_simulation_outputs(const std::filesystem::path& dir, const SimulationResult& result);

std::string loss_history_csv(const std::vector<double>& losses);

}  // namespace lipkit
