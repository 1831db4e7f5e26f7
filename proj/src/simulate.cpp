#include "lipkit/simulate.hpp"

#include <cmath>
#include <nlohmann/json.hpp>
#include <random>

#include "lipkit/error.hpp"
#include "lipkit/io.hpp"

namespace lipkit {

std::vector<std::string> simulation_config_keys() {
  return {"T",         "S",           "sigma_data",    "w_aud",         "w_id",
          "drop_audio", "drop_identity", "steps",      "seed",          "batch",
          "learning_rate", "hidden",   "lambda_2",     "sigma_log_std", "smoothing_window",
          "grad_clip", "sample_steps", "sigma_min",    "sigma_max",     "rho",
          "clips",     "latent_channels", "latent_height", "latent_width", "audio_dim",
          "mask_factor", "eval_clip"};
}

SimulationConfig simulation_config_from(const KeyValueConfig& kv) {
  kv.require_known(simulation_config_keys());
  SimulationConfig cfg;
  TrainConfig& tr = cfg.train;
  tr.schedule.keyframe_count = static_cast<int>(kv.get_int("T", tr.schedule.keyframe_count));
  tr.schedule.spacing = static_cast<int>(kv.get_int("S", tr.schedule.spacing));
  tr.edm.sigma_data = kv.get_double("sigma_data", tr.edm.sigma_data);
  tr.drop_audio = kv.get_double("drop_audio", tr.drop_audio);
  tr.drop_identity = kv.get_double("drop_identity", tr.drop_identity);
  tr.steps = static_cast<int>(kv.get_int("steps", tr.steps));
  tr.seed = static_cast<std::uint64_t>(kv.get_int("seed", static_cast<std::int64_t>(tr.seed)));
  tr.batch = static_cast<int>(kv.get_int("batch", tr.batch));
  tr.learning_rate = kv.get_double("learning_rate", tr.learning_rate);
  tr.hidden = static_cast<int>(kv.get_int("hidden", tr.hidden));
  tr.lambda_2 = kv.get_double("lambda_2", tr.lambda_2);
  tr.sigma_log_std = kv.get_double("sigma_log_std", tr.sigma_log_std);
  tr.smoothing_window = static_cast<int>(kv.get_int("smoothing_window", tr.smoothing_window));
  tr.grad_clip = kv.get_double("grad_clip", tr.grad_clip);

  SampleConfig& sc = cfg.sample;
  sc.n_steps = static_cast<int>(kv.get_int("sample_steps", sc.n_steps));
  sc.sigma_min = kv.get_double("sigma_min", sc.sigma_min);
  sc.sigma_max = kv.get_double("sigma_max", sc.sigma_max);
  sc.rho = kv.get_double("rho", sc.rho);
  sc.guidance.w_aud = kv.get_double("w_aud", sc.guidance.w_aud);
  sc.guidance.w_id = kv.get_double("w_id", sc.guidance.w_id);
  sc.edm = tr.edm;
  sc.seed = tr.seed;

  BarFixtureConfig& fx = cfg.fixture;
  fx.clips = static_cast<int>(kv.get_int("clips", fx.clips));
  fx.channels = static_cast<int>(kv.get_int("latent_channels", fx.channels));
  fx.height = static_cast<int>(kv.get_int("latent_height", fx.height));
  fx.width = static_cast<int>(kv.get_int("latent_width", fx.width));
  fx.audio_dim = static_cast<int>(kv.get_int("audio_dim", fx.audio_dim));
  fx.mask_factor = static_cast<int>(kv.get_int("mask_factor", fx.mask_factor));
  fx.seed = tr.seed;
  fx.frames = tr.schedule.keyframe_count * tr.schedule.spacing + 1;
  cfg.eval_clip = static_cast<int>(kv.get_int("eval_clip", cfg.eval_clip));

  validate_train_config(tr);
  require(sc.n_steps >= 1, ErrorKind::InvalidArgument, "sample_steps must be >= 1");
  return cfg;
}

namespace {

double masked_mae(const LatentClip& a, const LatentClip& b, const MaskRaster& mask) {
  const std::size_t plane = static_cast<std::size_t>(a.width()) * a.height();
  auto va = a.values();
  auto vb = b.values();
  double sum = 0.0;
  std::size_t n = 0;
  for (std::size_t base = 0; base < va.size(); base += plane) {
    for (std::size_t i = 0; i < plane; ++i) {
      if (!mask.bits()[i]) continue;
      sum += std::abs(va[base + i] - vb[base + i]);
      ++n;
    }
  }
  return n == 0 ? 0.0 : sum / static_cast<double>(n);
}

bool unmasked_equal(const LatentClip& a, const LatentClip& b, const MaskRaster& mask) {
  const std::size_t plane = static_cast<std::size_t>(a.width()) * a.height();
  auto va = a.values();
  auto vb = b.values();
  for (std::size_t base = 0; base < va.size(); base += plane) {
    for (std::size_t i = 0; i < plane; ++i) {
      if (!mask.bits()[i] && va[base + i] != vb[base + i]) return false;
    }
  }
  return true;
}

}  // namespace

SimulationResult run_simulation(const SimulationConfig& config) {
  SimulationResult res;
  res.config = config;
  BarFixtureConfig fx_cfg = config.fixture;
  const Schedule& schedule = config.train.schedule;
  validate_schedule(schedule);
  fx_cfg.frames = std::max(fx_cfg.frames, schedule.keyframe_count * schedule.spacing + 1);
  res.fixture = make_sliding_bar_fixture(fx_cfg);
  const BarFixture& fx = res.fixture;

  res.eval_clip = config.eval_clip < 0 ? fx_cfg.clips - 1 : config.eval_clip;
  require(res.eval_clip < fx_cfg.clips, ErrorKind::InvalidArgument, "eval_clip out of range");
  TrainConfig train = config.train;
  if (train.train_clips.empty()) {
    for (int i = 0; i < fx_cfg.clips; ++i) {
      if (config.eval_clip >= 0 || i != res.eval_clip || fx_cfg.clips == 1) train.train_clips.push_back(i);
    }
  }
  res.training = toy_train(fx, train);
  res.loss_halved = res.training.final_smoothed <= 0.5 * res.training.initial_smoothed;

  const DenoiserFn network = res.training.model.as_fn();
  const MaskRaster& mask = fx.latent_mask;
  SampleConfig sc = config.sample;

  // Stage 1: keyframes.
  const StageSample key = keyframe_stage_sample(fx, res.eval_clip, schedule);
  res.keyframes = toy_sample(network, key.target, mask, key.conditioning, sc);

  // Stage 2: interpolate consecutive keyframe pairs and stitch.
  const LatentClip slot = res.training.model.slot_frame();
  std::vector<LatentClip> pieces;
  for (int seg = 0; seg + 1 < schedule.keyframe_count; ++seg) {
    const LatentClip a = res.keyframes.frame_clip(seg);
    const LatentClip b = res.keyframes.frame_clip(seg + 1);
    const StageSample interp = interpolation_stage_sample(fx, res.eval_clip, seg, schedule, a, b, slot);
    SampleConfig seg_cfg = sc;
    seg_cfg.seed = sc.seed + 1000003ULL * static_cast<std::uint64_t>(seg + 1);
    const LatentClip out = toy_sample(network, interp.target, mask, interp.conditioning, seg_cfg);
    pieces.push_back(a);
    for (int j = 1; j < schedule.spacing; ++j) pieces.push_back(out.frame_clip(j));
  }
  pieces.push_back(res.keyframes.frame_clip(schedule.keyframe_count - 1));
  res.stitched = LatentClip::concat(pieces);

  std::vector<LatentClip> truth;
  const LatentClip& video = fx.clips[static_cast<std::size_t>(res.eval_clip)];
  for (int t = schedule.spacing; t <= schedule.keyframe_count * schedule.spacing; ++t) {
    truth.push_back(video.frame_clip(t));
  }
  res.ground_truth = LatentClip::concat(truth);

  res.masked_mae = masked_mae(res.stitched, res.ground_truth, mask);
  std::mt19937_64 rng(sc.seed ^ 0xBA5E11AEULL);
  std::normal_distribution<double> normal(0.0, config.train.edm.sigma_data);
  LatentClip noise(res.ground_truth.shape());
  for (double& v : noise.values()) v = normal(rng);
  res.noise_baseline_mae = masked_mae(blend_latents(res.ground_truth, noise, mask), res.ground_truth, mask);
  res.unmasked_preserved = unmasked_equal(res.stitched, res.ground_truth, mask) &&
                           unmasked_equal(res.keyframes, key.target, mask);
  return res;
}

std::string loss_history_csv(const std::vector<double>& losses) {
  std::string out = "step,loss\n";
  for (std::size_t i = 0; i < losses.size(); ++i) {
    out += std::to_string(i) + "," + io::format_number(losses[i]) + "\n";
  }
  return out;
}

void write_simulation_outputs(const std::filesystem::path& dir, const SimulationResult& res) {
  std::filesystem::create_directories(dir / "fixture");
  for (std::size_t i = 0; i < res.fixture.clips.size(); ++i) {
    char name[32];
    std::snprintf(name, sizeof(name), "clip_%03zu", i);
    write_latent_clip(dir / "fixture" / (std::string(name) + ".f32"), res.fixture.clips[i]);
    Tensor audio;
    audio.shape = {static_cast<int>(res.fixture.audio[i].size()), res.fixture.config.audio_dim};
    for (const auto& a : res.fixture.audio[i]) audio.values.insert(audio.values.end(), a.begin(), a.end());
    write_tensor_f32(dir / "fixture" / (std::string(name) + "_audio.f32"), audio);
  }
  write_mask_pgm(dir / "fixture" / "latent_mask.pgm", res.fixture.latent_mask);
  write_mask_pgm(dir / "fixture" / "pixel_mask.pgm", res.fixture.pixel_mask);
  res.training.model.save(dir / "model.f32");
  io::write_file_atomic(dir / "loss.csv", loss_history_csv(res.training.losses));
  write_latent_clip(dir / "keyframes.f32", res.keyframes);
  write_latent_clip(dir / "stitched.f32", res.stitched);

  const auto& tr = res.config.train;
  nlohmann::json report = {
      {"T", tr.schedule.keyframe_count},
      {"S", tr.schedule.spacing},
      {"sigma_data", tr.edm.sigma_data},
      {"steps", tr.steps},
      {"seed", tr.seed},
      {"w_aud", res.config.sample.guidance.w_aud},
      {"w_id", res.config.sample.guidance.w_id},
      {"eval_clip", res.eval_clip},
      {"initial_smoothed_loss", res.training.initial_smoothed},
      {"final_smoothed_loss", res.training.final_smoothed},
      {"loss_halved", res.loss_halved},
      {"stitched_frames", res.stitched.frames()},
      {"masked_mae", res.masked_mae},
      {"noise_baseline_mae", res.noise_baseline_mae},
      {"unmasked_preserved", res.unmasked_preserved},
  };
  io::write_file_atomic(dir / "report.json", report.dump(2) + "\n");
}

}  // namespace lipkit
