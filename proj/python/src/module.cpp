#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "lipkit/config.hpp"
#include "lipkit/curation.hpp"
#include "lipkit/edm.hpp"
#include "lipkit/error.hpp"
#include "lipkit/io.hpp"
#include "lipkit/landmarks.hpp"
#include "lipkit/mask.hpp"
#include "lipkit/metrics.hpp"
#include "lipkit/ranking.hpp"
#include "lipkit/simulate.hpp"

namespace py = pybind11;
using namespace lipkit;

namespace {

using DoubleArray = py::array_t<double, py::array::c_style | py::array::forcecast>;
using ByteArray = py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast>;

LandmarkFrame frame_from(const DoubleArray& points, int width, int height, int index = 0) {
  if (points.ndim() != 2 || points.shape(0) != kLandmarkCount || points.shape(1) != 2) {
    throw py::value_error("landmarks must have shape (68, 2)");
  }
  LandmarkFrame f;
  f.frame_index = index;
  f.image_width = width;
  f.image_height = height;
  auto p = points.unchecked<2>();
  for (int i = 0; i < kLandmarkCount; ++i) f.points[static_cast<std::size_t>(i)] = {p(i, 0), p(i, 1)};
  return f;
}

LandmarkTrack track_from(const DoubleArray& frames, int width, int height) {
  if (frames.ndim() != 3 || frames.shape(1) != kLandmarkCount || frames.shape(2) != 2) {
    throw py::value_error("landmark track must have shape (frames, 68, 2)");
  }
  LandmarkTrack track;
  track.video_id = "array";
  auto p = frames.unchecked<3>();
  for (py::ssize_t t = 0; t < frames.shape(0); ++t) {
    LandmarkFrame f;
    f.frame_index = static_cast<int>(t);
    f.image_width = width;
    f.image_height = height;
    for (int i = 0; i < kLandmarkCount; ++i) f.points[static_cast<std::size_t>(i)] = {p(t, i, 0), p(t, i, 1)};
    track.frames.push_back(f);
  }
  return track;
}

MaskRaster mask_from(const ByteArray& a) {
  if (a.ndim() != 2) throw py::value_error("mask must be 2-D");
  std::vector<std::uint8_t> bits(a.data(), a.data() + a.size());
  for (auto& b : bits) b = b ? 1 : 0;
  return MaskRaster(static_cast<int>(a.shape(1)), static_cast<int>(a.shape(0)), std::move(bits));
}

ByteArray mask_to(const MaskRaster& m) {
  ByteArray out({m.height(), m.width()});
  std::copy(m.bits().begin(), m.bits().end(), out.mutable_data());
  return out;
}

LatentClip clip_from(const DoubleArray& a) {
  if (a.ndim() != 4) throw py::value_error("latent clip must have shape (frames, channels, height, width)");
  LatentShape s{static_cast<int>(a.shape(0)), static_cast<int>(a.shape(1)), static_cast<int>(a.shape(2)),
                static_cast<int>(a.shape(3))};
  return LatentClip(s, std::vector<double>(a.data(), a.data() + a.size()));
}

DoubleArray clip_to(const LatentClip& c) {
  DoubleArray out({c.frames(), c.channels(), c.height(), c.width()});
  std::copy(c.values().begin(), c.values().end(), out.mutable_data());
  return out;
}

std::vector<ComparisonRecord> records_from(const py::iterable& items) {
  std::vector<ComparisonRecord> out;
  for (const auto& item : items) {
    const auto d = item.cast<py::dict>();
    ComparisonRecord r;
    r.pair_id = d.contains("pair_id") ? d["pair_id"].cast<std::string>() : std::to_string(out.size());
    r.model_a = d["model_a"].cast<std::string>();
    r.model_b = d["model_b"].cast<std::string>();
    const auto winner = d["winner"].cast<std::string>();
    if (winner != "A" && winner != "B") throw py::value_error("winner must be 'A' or 'B'");
    r.winner = winner == "A" ? Winner::A : Winner::B;
    if (d.contains("annotator")) r.annotator = d["annotator"].cast<std::string>();
    if (d.contains("timestamp")) r.timestamp = d["timestamp"].cast<std::string>();
    out.push_back(std::move(r));
  }
  return out;
}

py::dict table_to(const RatingTable& table) {
  py::dict out;
  for (const auto& [model, r] : table) {
    py::dict row;
    row["rating"] = r.rating;
    row["ci_low"] = r.ci_low;
    row["ci_high"] = r.ci_high;
    row["games"] = r.games;
    out[py::str(model)] = row;
  }
  return out;
}

EloConfig elo_config(double k, double initial, int rounds, double ci, std::uint64_t seed) {
  EloConfig c;
  c.k_factor = k;
  c.initial_rating = initial;
  c.bootstrap_rounds = rounds;
  c.ci_level = ci;
  c.seed = seed;
  return c;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "lipkit native core";

  py::register_exception<Error>(m, "LipkitError", PyExc_ValueError);

  m.attr("DEFAULT_MAR_THRESHOLD") = kDefaultMarThreshold;

  m.def(
      "mouth_aspect_ratio",
      [](const DoubleArray& points, int width, int height) {
        return mouth_aspect_ratio(frame_from(points, width, height));
      },
      py::arg("points"), py::arg("width") = 512, py::arg("height") = 512);

  m.def(
      "lipleak",
      [](const DoubleArray& frames, double threshold, int width, int height) {
        return lipleak(track_from(frames, width, height), threshold);
      },
      py::arg("frames"), py::arg("threshold") = kDefaultMarThreshold, py::arg("width") = 512,
      py::arg("height") = 512);

  m.def(
      "lipleak_sweep",
      [](const DoubleArray& frames, const std::vector<double>& thresholds, int width, int height) {
        std::vector<double> out;
        for (const auto& p : lipleak_threshold_sweep(track_from(frames, width, height), thresholds)) {
          out.push_back(p.lipleak);
        }
        return out;
      },
      py::arg("frames"), py::arg("thresholds"), py::arg("width") = 512, py::arg("height") = 512);

  m.def(
      "build_mask",
      [](const DoubleArray& points, int width, int height, const std::string& variant, double side_pad,
         double above_nose, double mouth_pad) {
        MaskParams params{side_pad, above_nose, mouth_pad};
        return mask_to(build_mask(frame_from(points, width, height), parse_mask_variant(variant), params));
      },
      py::arg("points"), py::arg("width"), py::arg("height"), py::arg("variant") = "ours",
      py::arg("side_pad") = MaskParams{}.side_pad_frac, py::arg("above_nose") = MaskParams{}.above_nose_frac,
      py::arg("mouth_pad") = MaskParams{}.mouth_pad_frac);

  m.def(
      "refine_with_occlusion",
      [](const ByteArray& mask, const ByteArray& occlusion) {
        return mask_to(refine_with_occlusion(mask_from(mask), mask_from(occlusion)));
      },
      py::arg("mask"), py::arg("occlusion"));

  m.def(
      "downsample_to_latent",
      [](const ByteArray& mask, int factor) { return mask_to(downsample_to_latent(mask_from(mask), factor)); },
      py::arg("mask"), py::arg("factor"));

  m.def(
      "blend_latents",
      [](const DoubleArray& clean, const DoubleArray& noised, const ByteArray& mask) {
        return clip_to(blend_latents(clip_from(clean), clip_from(noised), mask_from(mask)));
      },
      py::arg("clean"), py::arg("noised"), py::arg("latent_mask"));

  m.def(
      "edm_coefficients",
      [](double sigma, double sigma_data) {
        const auto c = edm_coefficients(sigma, EdmParams{sigma_data});
        py::dict d;
        d["c_skip"] = c.c_skip;
        d["c_out"] = c.c_out;
        d["c_in"] = c.c_in;
        d["c_noise"] = c.c_noise;
        d["loss_weight"] = edm_loss_weight(sigma, EdmParams{sigma_data});
        return d;
      },
      py::arg("sigma"), py::arg("sigma_data") = EdmParams{}.sigma_data);

  m.def("karras_sigmas", &karras_sigmas, py::arg("n_steps"), py::arg("sigma_min"), py::arg("sigma_max"),
        py::arg("rho") = 7.0);

  m.def(
      "guided_combine",
      [](const DoubleArray& z_empty, const DoubleArray& z_id, const DoubleArray& z_id_aud, double w_aud,
         double w_id) {
        return clip_to(guided_combine(clip_from(z_empty), clip_from(z_id), clip_from(z_id_aud),
                                      GuidanceWeights{w_aud, w_id}));
      },
      py::arg("z_empty"), py::arg("z_id"), py::arg("z_id_aud"), py::arg("w_aud") = GuidanceWeights{}.w_aud,
      py::arg("w_id") = GuidanceWeights{}.w_id);

  m.def(
      "variance_of_laplacian",
      [](const DoubleArray& image) {
        if (image.ndim() != 2) throw py::value_error("image must be 2-D");
        GrayFrame f(static_cast<int>(image.shape(1)), static_cast<int>(image.shape(0)));
        std::copy(image.data(), image.data() + image.size(), f.pixels.begin());
        return variance_of_laplacian(f);
      },
      py::arg("image"));

  m.def(
      "elo_ratings",
      [](const py::iterable& records, double k, double initial) {
        return table_to(elo_ratings(records_from(records), elo_config(k, initial, 0, 0.95, 0)));
      },
      py::arg("records"), py::arg("k_factor") = EloConfig{}.k_factor,
      py::arg("initial_rating") = EloConfig{}.initial_rating);

  m.def(
      "bootstrap_elo",
      [](const py::iterable& records, int rounds, std::uint64_t seed, double ci, double k, double initial) {
        const auto records_ = records_from(records);
        BootstrapResult boot;
        {
          py::gil_scoped_release release;
          boot = bootstrap_elo(records_, elo_config(k, initial, rounds, ci, seed));
        }
        return table_to(boot.table);
      },
      py::arg("records"), py::arg("rounds") = EloConfig{}.bootstrap_rounds, py::arg("seed") = 0,
      py::arg("ci_level") = EloConfig{}.ci_level, py::arg("k_factor") = EloConfig{}.k_factor,
      py::arg("initial_rating") = EloConfig{}.initial_rating);

  m.def(
      "win_rate_matrix",
      [](const py::iterable& records) {
        const auto w = win_rate_matrix(records_from(records));
        py::dict out;
        for (std::size_t i = 0; i < w.models.size(); ++i) {
          for (std::size_t j = 0; j < w.models.size(); ++j) {
            if (w.rate[i][j]) out[py::make_tuple(w.models[i], w.models[j])] = *w.rate[i][j];
          }
        }
        return out;
      },
      py::arg("records"));

  m.def(
      "curate_json",
      [](const std::string& manifest, double min_quality, double min_asd, double min_clip_s) {
        CurationConfig config;
        config.min_quality = min_quality;
        config.min_asd = min_asd;
        config.min_clip_s = min_clip_s;
        return report_json(curate(parse_manifest(manifest), config));
      },
      py::arg("manifest"), py::arg("min_quality") = CurationConfig{}.min_quality,
      py::arg("min_asd") = CurationConfig{}.min_asd, py::arg("min_clip_s") = CurationConfig{}.min_clip_s);

  m.def(
      "simulate",
      [](const std::map<std::string, double>& overrides) {
        KeyValueConfig kv;
        for (const auto& [key, value] : overrides) kv.set(key, io::format_number(value));
        const SimulationConfig config = simulation_config_from(kv);
        SimulationResult r;
        {
          py::gil_scoped_release release;
          r = run_simulation(config);
        }
        py::dict d;
        d["initial_smoothed_loss"] = r.training.initial_smoothed;
        d["final_smoothed_loss"] = r.training.final_smoothed;
        d["loss_halved"] = r.loss_halved;
        d["masked_mae"] = r.masked_mae;
        d["noise_baseline_mae"] = r.noise_baseline_mae;
        d["unmasked_preserved"] = r.unmasked_preserved;
        d["losses"] = r.training.losses;
        d["stitched"] = clip_to(r.stitched);
        return d;
      },
      py::arg("overrides") = std::map<std::string, double>{});
}
