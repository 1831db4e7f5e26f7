#include "lipkit/cli.hpp"

#include <CLI11.hpp>
#include <algorithm>
#include <csignal>
#include <functional>
#include <iostream>

#include "lipkit/config.hpp"
#include "lipkit/error.hpp"
#include "lipkit/io.hpp"
#include "lipkit/landmarks.hpp"
#include "lipkit/metrics.hpp"
#include "lipkit/study_service.hpp"

namespace lipkit::cli {

namespace fs = std::filesystem;

std::vector<fs::path> cmd_mask(const MaskCommand& cmd) {
  validate_mask_params(cmd.params);
  const LandmarkTrack track = read_landmark_track(cmd.landmarks);
  validate_track(track);
  std::vector<fs::path> written;
  for (const auto& frame : track.frames) {
    MaskRaster mask = build_mask(frame, cmd.variant, cmd.params);
    if (!cmd.occlusion_dir.empty()) {
      const fs::path occ = frame_file_path(cmd.occlusion_dir, track.video_id, frame.frame_index);
      // Frames without an occlusion file have no occluder.
      if (fs::exists(occ)) {
        const MaskRaster occlusion = read_mask_pgm(occ);
        require(occlusion.same_size(mask), ErrorKind::ShapeMismatch,
                occ.string() + ": occlusion mask size differs from the frame");
        mask = refine_with_occlusion(mask, occlusion);
      }
    }
    const fs::path out = frame_file_path(cmd.out_dir, track.video_id, frame.frame_index);
    fs::create_directories(out.parent_path());
    write_mask_pgm(out, mask);
    written.push_back(out);
  }
  return written;
}

void cmd_lipleak(const LipleakCommand& cmd) {
  require(!cmd.landmarks.empty(), ErrorKind::InvalidArgument, "no landmark tracks given");
  require(!cmd.thresholds.empty(), ErrorKind::InvalidArgument, "no thresholds given");
  std::string leak = "video_id,threshold,lipleak\n";
  std::vector<MarSeries> series;
  for (const auto& path : cmd.landmarks) {
    const LandmarkTrack track = read_landmark_track(path);
    require(!track.frames.empty(), ErrorKind::InvalidArgument, path.string() + ": empty landmark track");
    const auto points = lipleak_threshold_sweep(track, cmd.thresholds);
    const std::string csv = lipleak_csv(track.video_id, points);
    leak += csv.substr(csv.find('\n') + 1);
    series.push_back(mar_series(track, cmd.thresholds.front()));
  }
  fs::create_directories(cmd.out_dir);
  io::write_file_atomic(cmd.out_dir / "lipleak.csv", leak);
  io::write_file_atomic(cmd.out_dir / "mar_series.csv", mar_series_csv(series));
}

RatingTable cmd_elo(const EloCommand& cmd) {
  validate_elo_config(cmd.elo);
  require(cmd.bins >= 1, ErrorKind::InvalidArgument, "bins must be >= 1");
  const auto records = read_comparison_log(cmd.log);
  require(!records.empty(), ErrorKind::InvalidArgument, cmd.log.string() + ": comparison log is empty");
  RatingTable table;
  std::string histogram = histogram_csv({});
  if (cmd.elo.bootstrap_rounds > 0) {
    const BootstrapResult boot = bootstrap_elo(records, cmd.elo);
    table = boot.table;
    histogram = histogram_csv(rating_distribution(boot, cmd.bins));
  } else {
    table = elo_ratings(records, cmd.elo);
  }
  fs::create_directories(cmd.out_dir);
  io::write_file_atomic(cmd.out_dir / "ratings.csv", ratings_csv(table));
  io::write_file_atomic(cmd.out_dir / "winrate.csv", winrate_csv(win_rate_matrix(records)));
  io::write_file_atomic(cmd.out_dir / "histogram.csv", histogram);
  return table;
}

CurationReport cmd_curate(const CurateCommand& cmd) {
  validate_curation_config(cmd.config);
  CurationManifest manifest = read_manifest(cmd.manifest);
  validate_manifest(manifest, cmd.config);
  if (!cmd.config.scorer_command.empty()) {
    const std::string command = cmd.config.scorer_command;
    manifest = apply_scorer(
        manifest, [&](const VideoEntry& e) { return run_scorer_command(command, e); }, cmd.config.max_parallel);
  }
  const CurationReport report = curate(manifest, cmd.config);
  if (cmd.out_report.has_parent_path()) fs::create_directories(cmd.out_report.parent_path());
  io::write_file_atomic(cmd.out_report, report_json(report));
  if (!cmd.out_summary.empty()) io::write_file_atomic(cmd.out_summary, report_summary(report));
  return report;
}

SimulationResult cmd_simulate(const SimulateCommand& cmd) {
  SimulationResult result = run_simulation(cmd.config);
  fs::create_directories(cmd.out_dir);
  write_simulation_outputs(cmd.out_dir, result);
  require(result.unmasked_preserved, ErrorKind::Numeric, "sampled clips altered the unmasked region");
  return result;
}

namespace {

/// Values from a --config file fill options the command line left unset.
class FileDefaults {
 public:
  template <typename T>
  CLI::Option* bind(CLI::Option* opt, const std::string& key, T& target) {
    keys_.push_back(key);
    bindings_.push_back([opt, key, &target](const KeyValueConfig& kv) {
      if (opt->count() > 0 || !kv.has(key)) return;
      if constexpr (std::is_same_v<T, std::string> || std::is_same_v<T, fs::path>) {
        target = kv.get_string(key, "");
      } else if constexpr (std::is_same_v<T, bool>) {
        target = kv.get_bool(key, target);
      } else if constexpr (std::is_same_v<T, std::vector<double>>) {
        target = kv.get_doubles(key, target);
      } else if constexpr (std::is_integral_v<T>) {
        target = static_cast<T>(kv.get_int(key, static_cast<std::int64_t>(target)));
      } else {
        target = kv.get_double(key, target);
      }
    });
    return opt;
  }

  void apply(const fs::path& file) const {
    if (file.empty()) return;
    const KeyValueConfig kv = KeyValueConfig::load(file);
    kv.require_known(keys_);
    for (const auto& b : bindings_) b(kv);
  }

 private:
  std::vector<std::string> keys_;
  std::vector<std::function<void(const KeyValueConfig&)>> bindings_;
};

StudyServer* g_server = nullptr;

void on_signal(int) {
  if (g_server != nullptr) g_server->stop();
}

std::set<std::string> read_annotators(const fs::path& path) {
  std::set<std::string> out;
  for (const auto& line : io::split_lines(io::read_file(path))) {
    if (!line.empty() && line.front() != '#') out.insert(line);
  }
  return out;
}

}  // namespace

int run(int argc, const char* const* argv) {
  CLI::App app{"Lip-sync toolkit: masks, LipLeak, Elo, curation, toy diffusion and the study service"};
  app.require_subcommand(1);
  app.option_defaults()->always_capture_default();

  // mask
  MaskCommand mask;
  std::string mask_variant = "ours";
  fs::path mask_config;
  FileDefaults mask_file;
  auto* mask_cmd = app.add_subcommand("mask", "Write one inpainting mask PGM per landmark frame");
  mask_cmd->add_option("--landmarks", mask.landmarks, "Landmark track (.landmarks.jsonl)")->required();
  mask_cmd->add_option("--out-dir", mask.out_dir, "Output directory")->required();
  mask_file.bind(mask_cmd->add_option("--variant", mask_variant,
                                      "ours | nose_level | mouth_only | full_lower_face"),
                 "variant", mask_variant);
  mask_file.bind(mask_cmd->add_option("--side-pad", mask.params.side_pad_frac, "Lateral padding, fraction of face width"),
                 "side_pad", mask.params.side_pad_frac);
  mask_file.bind(mask_cmd->add_option("--above-nose", mask.params.above_nose_frac,
                                      "Extension above the nose tip, fraction of face height"),
                 "above_nose", mask.params.above_nose_frac);
  mask_file.bind(mask_cmd->add_option("--mouth-pad", mask.params.mouth_pad_frac,
                                      "Mouth-box padding for mouth_only, fraction of face size"),
                 "mouth_pad", mask.params.mouth_pad_frac);
  mask_cmd->add_option("--occlusion-dir", mask.occlusion_dir, "Occluder masks <dir>/<video_id>/<frame>.pgm");
  mask_cmd->add_option("--config", mask_config, "Key=value config file; flags take precedence");

  // lipleak
  LipleakCommand leak;
  double leak_threshold = kDefaultMarThreshold;
  std::vector<double> leak_sweep;
  fs::path leak_config;
  FileDefaults leak_file;
  auto* leak_cmd = app.add_subcommand("lipleak", "Fraction of open-mouth frames (MAR above threshold)");
  leak_cmd->add_option("--landmarks", leak.landmarks, "One or more landmark tracks")->required();
  leak_cmd->add_option("--out-dir", leak.out_dir, "Directory for lipleak.csv and mar_series.csv")->required();
  auto* threshold_opt =
      leak_file.bind(leak_cmd->add_option("--threshold", leak_threshold, "MAR threshold"), "threshold", leak_threshold);
  auto* sweep_opt = leak_file.bind(
      leak_cmd->add_option("--sweep", leak_sweep, "Ascending list of thresholds (overrides --threshold)")
          ->delimiter(','),
      "sweep", leak_sweep);
  threshold_opt->excludes(sweep_opt);
  leak_cmd->add_option("--config", leak_config, "Key=value config file; flags take precedence");

  // elo
  EloCommand elo;
  fs::path elo_config;
  FileDefaults elo_file;
  auto* elo_cmd = app.add_subcommand("elo", "Elo ratings, bootstrap intervals, win rates and rating histograms");
  elo_cmd->add_option("--log", elo.log, "Comparison log (JSON Lines)")->required();
  elo_cmd->add_option("--out-dir", elo.out_dir, "Directory for ratings/winrate/histogram CSVs")->required();
  elo_file.bind(elo_cmd->add_option("--k", elo.elo.k_factor, "K-factor"), "k_factor", elo.elo.k_factor);
  elo_file.bind(elo_cmd->add_option("--initial", elo.elo.initial_rating, "Initial rating"), "initial_rating",
                elo.elo.initial_rating);
  elo_file.bind(elo_cmd->add_option("--rounds", elo.elo.bootstrap_rounds, "Bootstrap rounds (0: single pass)"),
                "bootstrap_rounds", elo.elo.bootstrap_rounds);
  elo_file.bind(elo_cmd->add_option("--ci", elo.elo.ci_level, "Confidence level"), "ci_level", elo.elo.ci_level);
  elo_file.bind(elo_cmd->add_option("--seed", elo.elo.seed, "Bootstrap seed"), "seed", elo.elo.seed);
  elo_file.bind(elo_cmd->add_option("--bins", elo.bins, "Histogram bins"), "bins", elo.bins);
  elo_cmd->add_option("--config", elo_config, "Key=value config file; flags take precedence");

  // curate
  CurateCommand cur;
  fs::path cur_config;
  FileDefaults cur_file;
  auto* cur_cmd = app.add_subcommand("curate", "Apply format, quality, active-speaker and scene-length gates");
  cur_cmd->add_option("--manifest", cur.manifest, "Curation manifest (JSON)")->required();
  cur_cmd->add_option("--out", cur.out_report, "Report JSON path")->required();
  cur_cmd->add_option("--summary", cur.out_summary, "Also write the summary table here");
  cur_file.bind(cur_cmd->add_option("--min-quality", cur.config.min_quality, "Discard mean quality below this"),
                "min_quality", cur.config.min_quality);
  cur_file.bind(cur_cmd->add_option("--min-asd", cur.config.min_asd, "Discard active-speaker score below this"),
                "min_asd", cur.config.min_asd);
  cur_file.bind(cur_cmd->add_option("--min-clip", cur.config.min_clip_s, "Minimum scene clip length (s)"),
                "min_clip_s", cur.config.min_clip_s);
  cur_file.bind(cur_cmd->add_option("--fps", cur.config.target_fps, "Required frame rate"), "fps",
                cur.config.target_fps);
  cur_file.bind(cur_cmd->add_option("--audio-hz", cur.config.target_audio_hz, "Required audio sample rate"),
                "audio_hz", cur.config.target_audio_hz);
  cur_file.bind(cur_cmd->add_option("--scorer", cur.config.scorer_command,
                                    "Command run as '<cmd> <video_id> <path>' for missing scores"),
                "scorer", cur.config.scorer_command);
  cur_file.bind(cur_cmd->add_option("--max-parallel", cur.config.max_parallel, "Concurrent scorer processes"),
                "max_parallel", cur.config.max_parallel);
  cur_cmd->add_option("--config", cur_config, "Key=value config file; flags take precedence");

  // simulate
  SimulateCommand sim;
  fs::path sim_config;
  auto* sim_cmd = app.add_subcommand("simulate", "Train and sample the toy two-stage masked diffusion model");
  sim_cmd->add_option("config,--config", sim_config, "Simulation config (key = value)");
  sim_cmd->add_option("--out-dir", sim.out_dir, "Output directory")->required();
  const SimulationConfig sim_defaults;
  struct SimFlag {
    std::string key;
    double value;
    CLI::Option* opt = nullptr;
  };
  std::vector<SimFlag> sim_flags = {
      {"T", static_cast<double>(sim_defaults.train.schedule.keyframe_count)},
      {"S", static_cast<double>(sim_defaults.train.schedule.spacing)},
      {"sigma_data", sim_defaults.train.edm.sigma_data},
      {"w_aud", sim_defaults.sample.guidance.w_aud},
      {"w_id", sim_defaults.sample.guidance.w_id},
      {"steps", static_cast<double>(sim_defaults.train.steps)},
      {"seed", static_cast<double>(sim_defaults.train.seed)},
      {"drop_audio", sim_defaults.train.drop_audio},
      {"drop_identity", sim_defaults.train.drop_identity},
      {"sample_steps", static_cast<double>(sim_defaults.sample.n_steps)},
  };
  const std::map<std::string, std::string> sim_help = {
      {"T", "Keyframe count"},
      {"S", "Keyframe spacing (frames)"},
      {"sigma_data", "EDM data standard deviation"},
      {"w_aud", "Audio guidance scale"},
      {"w_id", "Identity guidance scale"},
      {"steps", "Training steps"},
      {"seed", "Master seed"},
      {"drop_audio", "Audio condition dropout rate"},
      {"drop_identity", "Identity condition dropout rate"},
      {"sample_steps", "Sampler steps"},
  };
  for (auto& f : sim_flags) {
    std::string name = "--" + f.key;
    std::replace(name.begin(), name.end(), '_', '-');
    if (f.key == "T") name = "-T,--keyframes";
    if (f.key == "S") name = "-S,--spacing";
    f.opt = sim_cmd->add_option(name, f.value, sim_help.at(f.key));
    if (f.key == "T" || f.key == "S" || f.key == "steps" || f.key == "seed" || f.key == "sample_steps") {
      f.opt->type_name("INT");
    }
  }

  // serve
  fs::path pairs_path, annotators_path, ui_dir, media_dir, log_path = "votes.jsonl";
  std::string host = "127.0.0.1";
  int port = 8080;
  std::uint64_t serve_seed = 0;
  EloConfig serve_elo;
  int ttl_minutes = 30;
  auto* serve_cmd = app.add_subcommand("serve", "Run the pairwise study service");
  serve_cmd->add_option("--pairs", pairs_path, "Pair pool (JSON)");
  serve_cmd->add_option("--media-dir", media_dir, "Directory served under /media");
  serve_cmd->add_option("--log-path", log_path, "Vote log (JSON Lines, appended)");
  serve_cmd->add_option("--port", port, "Listen port");
  serve_cmd->add_option("--host", host, "Listen address");
  serve_cmd->add_option("--seed", serve_seed, "Pair sampling seed");
  serve_cmd->add_option("--ui-dir", ui_dir, "Static frontend served at /");
  serve_cmd->add_option("--annotators", annotators_path, "Allowed annotator ids, one per line");
  serve_cmd->add_option("--k", serve_elo.k_factor, "K-factor");
  serve_cmd->add_option("--initial", serve_elo.initial_rating, "Initial rating");
  serve_cmd->add_option("--rounds", serve_elo.bootstrap_rounds, "Bootstrap rounds for /rankings?bootstrap");
  serve_cmd->add_option("--ttl-minutes", ttl_minutes, "Assignment expiry");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kInputError;
  }

  try {
    if (mask_cmd->parsed()) {
      mask_file.apply(mask_config);
      mask.variant = parse_mask_variant(mask_variant);
      const auto files = cmd_mask(mask);
      std::cout << "wrote " << files.size() << " masks to " << mask.out_dir.string() << "\n";
    } else if (leak_cmd->parsed()) {
      leak_file.apply(leak_config);
      leak.thresholds = leak_sweep.empty() ? std::vector<double>{leak_threshold} : leak_sweep;
      cmd_lipleak(leak);
      std::cout << "wrote " << (leak.out_dir / "lipleak.csv").string() << "\n";
    } else if (elo_cmd->parsed()) {
      elo_file.apply(elo_config);
      const RatingTable table = cmd_elo(elo);
      for (const auto& [model, r] : sorted_ratings(table)) {
        std::cout << model << "\t" << io::format_number(r.rating) << "\t[" << io::format_number(r.ci_low) << ", "
                  << io::format_number(r.ci_high) << "]\t" << r.games << "\n";
      }
    } else if (cur_cmd->parsed()) {
      cur_file.apply(cur_config);
      const CurationReport report = cmd_curate(cur);
      std::cout << report_summary(report);
    } else if (sim_cmd->parsed()) {
      KeyValueConfig kv = sim_config.empty() ? KeyValueConfig{} : KeyValueConfig::load(sim_config);
      for (const auto& f : sim_flags) {
        if (f.opt->count() > 0) kv.set(f.key, io::format_number(f.value));
      }
      sim.config = simulation_config_from(kv);
      const SimulationResult res = cmd_simulate(sim);
      std::cout << "smoothed loss " << io::format_number(res.training.initial_smoothed) << " -> "
                << io::format_number(res.training.final_smoothed) << (res.loss_halved ? " (halved)" : "")
                << "\nmasked MAE " << io::format_number(res.masked_mae) << " (noise baseline "
                << io::format_number(res.noise_baseline_mae) << ")\nunmasked region preserved: "
                << (res.unmasked_preserved ? "yes" : "no") << "\n";
    } else if (serve_cmd->parsed()) {
      StudyConfig sc;
      sc.elo = serve_elo;
      sc.seed = serve_seed;
      sc.log_path = log_path;
      sc.assignment_ttl = std::chrono::minutes(ttl_minutes);
      if (!annotators_path.empty()) sc.annotators = read_annotators(annotators_path);
      auto pool = pairs_path.empty() ? std::vector<PairCandidate>{} : read_pair_pool(pairs_path);
      StudyService service(std::move(pool), sc);
      StudyServer server(service, ServerOptions{media_dir, ui_dir, "*"});
      g_server = &server;
      std::signal(SIGINT, on_signal);
      std::signal(SIGTERM, on_signal);
      std::cout << "serving on http://" << host << ":" << port << "\n" << std::flush;
      const bool ok = server.listen(host, port);
      g_server = nullptr;
      if (!ok) {
        std::cerr << "error: cannot listen on " << host << ":" << port << "\n";
        return kInputError;
      }
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.kind() == ErrorKind::Numeric ? kNumericError : kInputError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInputError;
  }
  return kOk;
}

}  // namespace lipkit::cli
