#include <doctest.h>

#include <cmath>

#include "gen.hpp"
#include "lipkit/error.hpp"
#include "lipkit/image.hpp"
#include "lipkit/metrics.hpp"
#include "lipkit/synthetic.hpp"

using namespace lipkit;

namespace {

LandmarkTrack planted_track(const std::vector<double>& mars) {
  LandmarkTrack t;
  t.video_id = "planted";
  for (std::size_t i = 0; i < mars.size(); ++i) {
    t.frames.push_back(synthetic_face(FaceLayout{}, mars[i], static_cast<int>(i)));
  }
  return t;
}

double vl_oracle(const GrayFrame& f) {
  std::vector<double> r;
  for (int y = 1; y + 1 < f.height; ++y) {
    for (int x = 1; x + 1 < f.width; ++x) {
      double acc = 0.0;
      const int k[3][3] = {{0, 1, 0}, {1, -4, 1}, {0, 1, 0}};
      for (int dy = -1; dy <= 1; ++dy)
        for (int dx = -1; dx <= 1; ++dx) acc += k[dy + 1][dx + 1] * f.at(x + dx, y + dy);
      r.push_back(acc);
    }
  }
  double mean = 0.0;
  for (double v : r) mean += v;
  mean /= static_cast<double>(r.size());
  double var = 0.0;
  for (double v : r) var += (v - mean) * (v - mean);
  return var / static_cast<double>(r.size());
}

GrayFrame checkerboard(int n) {
  GrayFrame f(n, n);
  for (int y = 0; y < n; ++y)
    for (int x = 0; x < n; ++x) f.at(x, y) = ((x + y) % 2) ? 255.0 : 0.0;
  return f;
}

GrayFrame box_blur(const GrayFrame& f) {
  GrayFrame out(f.width, f.height);
  for (int y = 0; y < f.height; ++y)
    for (int x = 0; x < f.width; ++x) {
      double s = 0.0;
      int n = 0;
      for (int dy = -1; dy <= 1; ++dy)
        for (int dx = -1; dx <= 1; ++dx) {
          const int xx = x + dx, yy = y + dy;
          if (xx < 0 || yy < 0 || xx >= f.width || yy >= f.height) continue;
          s += f.at(xx, yy);
          ++n;
        }
      out.at(x, y) = s / n;
    }
  return out;
}

}  // namespace

TEST_CASE("lipleak counting examples") {
  CHECK(lipleak(planted_track(std::vector<double>(10, 0.0))) == 0.0);
  std::vector<double> mars(10, 0.1);
  mars[1] = mars[4] = mars[8] = 0.3;
  CHECK(lipleak(planted_track(mars), 0.25) == doctest::Approx(0.3).epsilon(1e-15));
  LandmarkTrack empty;
  CHECK_THROWS_AS(lipleak(empty), Error);
}

TEST_CASE("lipleak on the sinusoidal fixture matches an independent count") {
  SinusoidConfig cfg;
  cfg.frames = 250;
  const LandmarkTrack track = sinusoidal_track("s", cfg);
  for (double th : {0.1, 0.2, 0.25, 0.3, 0.44}) {
    int open = 0;
    for (const auto& f : track.frames) {
      const auto& p = f.points;
      const double v = std::sqrt(std::pow(p[62].x - p[66].x, 2) + std::pow(p[62].y - p[66].y, 2));
      const double h = std::sqrt(std::pow(p[48].x - p[54].x, 2) + std::pow(p[48].y - p[54].y, 2));
      if (v / h > th) ++open;
    }
    CHECK(std::abs(lipleak(track, th) - open / 250.0) <= 1e-12);
  }
}

TEST_CASE("threshold sweep") {
  const LandmarkTrack track = sinusoidal_track("s");
  const auto sweep = lipleak_threshold_sweep(track, {0.1, 0.25, 0.5});
  REQUIRE(sweep.size() == 3);
  for (std::size_t i = 0; i < sweep.size(); ++i) CHECK(sweep[i].lipleak == lipleak(track, sweep[i].threshold));
  CHECK(sweep[0].lipleak >= sweep[1].lipleak);
  CHECK(sweep[1].lipleak >= sweep[2].lipleak);
  CHECK(lipleak_threshold_sweep(track, {0.3})[0].lipleak == lipleak(track, 0.3));
  for (const auto& p : lipleak_threshold_sweep(planted_track(std::vector<double>(5, 0.0)), {0.1, 0.2})) {
    CHECK(p.lipleak == 0.0);
  }
  CHECK_THROWS_AS(lipleak_threshold_sweep(track, {0.3, 0.2}), Error);
  CHECK_THROWS_AS(lipleak_threshold_sweep(track, {0.2, 0.2}), Error);
  CHECK_THROWS_AS(lipleak_threshold_sweep(track, {0.0, 0.2}), Error);

  // Scaling landmarks changes nothing.
  LandmarkTrack scaled = track;
  for (auto& f : scaled.frames)
    for (auto& p : f.points) p = {p.x * 0.5, p.y * 0.5};
  CHECK(lipleak(scaled) == lipleak(track));
}

TEST_CASE("variance of Laplacian") {
  CHECK(variance_of_laplacian(GrayFrame(7, 5, 128.0)) == 0.0);

  GrayFrame dot(5, 5);
  dot.at(2, 2) = 255.0;
  CHECK(std::abs(variance_of_laplacian(dot) - 144500.0) <= 1e-9);
  CHECK(std::abs(variance_of_laplacian(dot) - vl_oracle(dot)) <= 1e-9);

  const GrayFrame sharp = checkerboard(32);
  CHECK(variance_of_laplacian(sharp) > variance_of_laplacian(box_blur(sharp)));

  gen::Gen g(9);
  for (int trial = 0; trial < 50; ++trial) {
    GrayFrame f(g.integer(3, 20), g.integer(3, 20));
    for (double& v : f.pixels) v = g.uniform(0, 255);
    CHECK(variance_of_laplacian(f) == doctest::Approx(vl_oracle(f)).epsilon(1e-12));
    GrayFrame shifted = f;
    for (double& v : shifted.pixels) v += 17.0;
    CHECK(variance_of_laplacian(shifted) == doctest::Approx(variance_of_laplacian(f)).epsilon(1e-9));
  }
  CHECK_THROWS_AS(variance_of_laplacian(GrayFrame(2, 5)), Error);
}

TEST_CASE("mae trace") {
  gen::Gen g(10);
  std::vector<GrayFrame> a, b;
  for (int i = 0; i < 4; ++i) {
    GrayFrame f(6, 4);
    for (double& v : f.pixels) v = g.uniform(0, 200);
    a.push_back(f);
    GrayFrame h = f;
    for (double& v : h.pixels) v += 1.0;
    b.push_back(h);
  }
  for (const auto& s : mae_trace(a, a)) CHECK(s.mae == 0.0);
  for (const auto& s : mae_trace(b, a)) CHECK(s.mae == doctest::Approx(1.0).epsilon(1e-12));

  std::vector<GrayFrame> c;
  for (int i = 0; i < 4; ++i) {
    GrayFrame f(6, 4);
    for (double& v : f.pixels) v = g.uniform(0, 255);
    c.push_back(f);
  }
  const auto ab = mae_trace(a, c), ba = mae_trace(c, a);
  for (std::size_t i = 0; i < ab.size(); ++i) {
    double s = 0.0;
    for (std::size_t k = 0; k < a[i].pixels.size(); ++k) s += std::abs(a[i].pixels[k] - c[i].pixels[k]);
    CHECK(ab[i].mae == doctest::Approx(s / 24.0).epsilon(1e-12));
    CHECK(ab[i].mae == ba[i].mae);
    CHECK(ab[i].frame_index == static_cast<int>(i));
  }
  CHECK_THROWS_AS(mae_trace(a, std::vector<GrayFrame>(a.begin(), a.begin() + 2)), Error);
  std::vector<GrayFrame> wrong = a;
  wrong[1] = GrayFrame(5, 4);
  CHECK_THROWS_AS(mae_trace(a, wrong), Error);
}

TEST_CASE("metric CSV layout") {
  const std::string leak = lipleak_csv("v", {{0.25, 0.5}});
  CHECK(leak == "video_id,threshold,lipleak\nv,0.25,0.5\n");
  MarSeries s = mar_series(planted_track({0.0, 0.25}));
  s.video_id = "v";
  CHECK(mar_series_csv({s}).rfind("video_id,frame,mar\nv,0,0\nv,1,", 0) == 0);
  CHECK(mae_trace_csv({{3, 1.5}}) == "frame,mae\n3,1.5\n");
}
