#include <doctest.h>

#include <atomic>
#include <cmath>
#include <fstream>
#include <nlohmann/json.hpp>
#include <thread>

#include "gen.hpp"
#include "lipkit/cli.hpp"
#include "lipkit/error.hpp"
#include "lipkit/io.hpp"
#include "lipkit/study_service.hpp"
#include "server_harness.hpp"

using namespace lipkit;
using nlohmann::json;

namespace {

std::vector<PairCandidate> all_pairs(const std::vector<std::string>& models) {
  std::vector<PairCandidate> pool;
  for (std::size_t i = 0; i < models.size(); ++i)
    for (std::size_t j = i + 1; j < models.size(); ++j)
      pool.push_back({models[i] + "_" + models[j], models[i], models[j], models[i] + "/clip.mp4",
                      models[j] + "/clip.mp4"});
  return pool;
}

int service_status(const std::function<void()>& f) {
  try {
    f();
  } catch (const ServiceError& e) {
    return e.status();
  }
  return 200;
}

struct FakeClock {
  std::chrono::system_clock::time_point now{std::chrono::seconds(1700000000)};
  Clock fn() {
    return [this] { return now; };
  }
};

}  // namespace

TEST_CASE("pair pool parsing") {
  const auto a = parse_pair_pool(R"([{"pair_id":"p","model_a":"x","model_b":"y","media_a":"x.mp4","media_b":"y.mp4"}])");
  REQUIRE(a.size() == 1);
  CHECK(a[0].media_b == "y.mp4");
  const auto b = parse_pair_pool(R"({"pairs":[{"pair_id":"p","model_a":"x","model_b":"y","media_a":"a","media_b":"b"}]})");
  CHECK(b.size() == 1);
  CHECK_THROWS_AS(parse_pair_pool("[{"), Error);
  CHECK(parse_side("left") == Side::Left);
  CHECK(parse_side("right") == Side::Right);
  CHECK_FALSE(parse_side("middle").has_value());
  CHECK_THROWS_AS(StudyService({{"p", "x", "x", "a", "b"}}, StudyConfig{}), Error);
}

TEST_CASE("serving pairs") {
  StudyService one({{"p1", "x", "y", "x.mp4", "y.mp4"}}, StudyConfig{});
  bool saw_plain = false, saw_swapped = false;
  for (int i = 0; i < 100; ++i) {
    const auto a = one.serve_pair("ann");
    CHECK(a.pair_id == "p1");
    CHECK(a.media_url_a != a.media_url_b);
    if (a.swapped) {
      saw_swapped = true;
      CHECK(a.media_url_a == "/media/y.mp4");
    } else {
      saw_plain = true;
      CHECK(a.media_url_a == "/media/x.mp4");
    }
  }
  CHECK(saw_plain);
  CHECK(saw_swapped);

  CHECK(service_status([&] { one.serve_pair(""); }) == 400);
  StudyService empty({}, StudyConfig{});
  CHECK(service_status([&] { empty.serve_pair("ann"); }) == 409);
  StudyConfig allow;
  allow.annotators = std::set<std::string>{"alice"};
  StudyService guarded({{"p1", "x", "y", "a", "b"}}, allow);
  CHECK(service_status([&] { guarded.serve_pair("mallory"); }) == 400);
  CHECK(service_status([&] { guarded.serve_pair("alice"); }) == 200);

  // 10k serves over the 10 pairs of 5 models.
  StudyConfig cfg;
  cfg.seed = 123;
  StudyService svc(all_pairs({"m1", "m2", "m3", "m4", "m5"}), cfg);
  std::map<std::string, int> counts;
  int swapped = 0;
  const int n = 10000;
  for (int i = 0; i < n; ++i) {
    const auto a = svc.serve_pair("ann");
    ++counts[a.pair_id];
    swapped += a.swapped;
  }
  REQUIRE(counts.size() == 10);
  const double expect = n / 10.0, sd = std::sqrt(n * 0.1 * 0.9);
  double chi2 = 0.0;
  for (const auto& [id, c] : counts) {
    CHECK(std::abs(c - expect) <= 3 * sd);
    chi2 += (c - expect) * (c - expect) / expect;
  }
  CHECK(chi2 < 27.88);  // 0.999 quantile, 9 degrees of freedom
  CHECK(std::abs(swapped - n / 2.0) <= 3 * std::sqrt(n * 0.25));
}

TEST_CASE("voting") {
  FakeClock clock;
  const auto dir = gen::temp_dir("votes");
  StudyConfig cfg;
  cfg.log_path = dir / "votes.jsonl";
  cfg.seed = 5;
  StudyService svc({{"p1", "x", "y", "x.mp4", "y.mp4"}}, cfg, clock.fn());

  const auto a = svc.serve_pair("ann");
  const auto r = svc.vote(a.assignment_id, Side::Left, "ann");
  CHECK(svc.log_snapshot().size() == 1);
  CHECK(r.winner == (a.swapped ? Winner::B : Winner::A));
  CHECK(service_status([&] { svc.vote(a.assignment_id, Side::Left, "ann"); }) == 409);
  CHECK(svc.log_snapshot().size() == 1);
  CHECK(service_status([&] { svc.vote("nope", Side::Left, "ann"); }) == 404);

  // Left/right mapped back through the presentation order.
  int checked_swapped = 0;
  for (int i = 0; i < 40; ++i) {
    const auto b = svc.serve_pair("ann");
    const Side choice = i % 2 ? Side::Left : Side::Right;
    const auto rec = svc.vote(b.assignment_id, choice, "ann");
    const std::string left_model = b.swapped ? "y" : "x";
    const std::string winner = rec.winner == Winner::A ? rec.model_a : rec.model_b;
    CHECK(winner == (choice == Side::Left ? left_model : (left_model == "x" ? "y" : "x")));
    checked_swapped += b.swapped;
  }
  CHECK(checked_swapped > 0);

  // Vote by pair_id, wrong annotator, expiry.
  const auto c = svc.serve_pair("bob");
  CHECK(service_status([&] { svc.vote(c.assignment_id, Side::Left, "ann"); }) == 404);
  CHECK(service_status([&] { svc.vote("p1", Side::Left, "bob"); }) == 200);
  const auto d = svc.serve_pair("bob");
  clock.now += std::chrono::minutes(31);
  CHECK(service_status([&] { svc.vote(d.assignment_id, Side::Left, "bob"); }) == 404);
  const auto e = svc.serve_pair("bob");
  clock.now += std::chrono::minutes(29);
  CHECK(service_status([&] { svc.vote(e.assignment_id, Side::Right, "bob"); }) == 200);

  // The persisted log matches the in-memory log, and a restart replays it.
  const auto persisted = read_comparison_log(cfg.log_path);
  const auto memory = svc.log_snapshot();
  REQUIRE(persisted.size() == memory.size());
  for (std::size_t i = 0; i < memory.size(); ++i) CHECK(format_record(persisted[i]) == format_record(memory[i]));
  StudyService restarted({{"p1", "x", "y", "x.mp4", "y.mp4"}}, cfg, clock.fn());
  CHECK(restarted.log_snapshot().size() == memory.size());
  CHECK(rankings_json(restarted.rankings()) == rankings_json(svc.rankings()));
  std::filesystem::remove_all(dir);
}

TEST_CASE("rankings") {
  StudyService svc(all_pairs({"a", "b", "c"}), StudyConfig{});
  const auto empty = svc.rankings();
  CHECK(empty.size() == 3);
  for (const auto& [m, r] : empty) {
    CHECK(r.rating == 1000.0);
    CHECK(r.games == 0);
  }
  StudyService one({{"p", "a", "b", "a", "b"}}, StudyConfig{});
  const auto as = one.serve_pair("ann");
  one.vote(as.assignment_id, as.swapped ? Side::Right : Side::Left, "ann");
  const auto t = one.rankings();
  CHECK(t.at("a").rating == 1016.0);
  CHECK(t.at("b").rating == 984.0);
}

TEST_CASE("HTTP endpoints") {
  const auto dir = gen::temp_dir("http");
  std::filesystem::create_directories(dir / "media" / "x");
  std::filesystem::create_directories(dir / "ui");
  io::write_file_atomic(dir / "media" / "x" / "clip.mp4", "fake-video-bytes");
  io::write_file_atomic(dir / "ui" / "index.html", "<html>study</html>");

  StudyConfig cfg;
  cfg.log_path = dir / "votes.jsonl";
  StudyService svc({{"p1", "x", "y", "x/clip.mp4", "y/clip.mp4"}}, cfg);
  harness::RunningServer server(svc, ServerOptions{dir / "media", dir / "ui", "http://study.example"});
  auto cli = server.client();

  auto health = cli.Get("/health");
  REQUIRE(health);
  CHECK(health->status == 200);
  CHECK(json::parse(health->body).at("status") == "ok");
  CHECK(health->get_header_value("Access-Control-Allow-Origin") == "http://study.example");

  auto pre = cli.Options("/vote");
  REQUIRE(pre);
  CHECK(pre->status == 204);
  CHECK(pre->get_header_value("Access-Control-Allow-Methods").find("POST") != std::string::npos);

  CHECK(cli.Get("/pair")->status == 400);
  auto pair = cli.Get("/pair?annotator=ann");
  REQUIRE(pair);
  REQUIRE(pair->status == 200);
  const auto pj = json::parse(pair->body);
  CHECK(pj.at("pair_id") == "p1");

  auto media = cli.Get("/media/x/clip.mp4");
  REQUIRE(media);
  CHECK(media->status == 200);
  CHECK(media->body == "fake-video-bytes");
  CHECK(cli.Get("/media/missing.mp4")->status == 404);
  auto ui = cli.Get("/");
  REQUIRE(ui);
  CHECK(ui->status == 200);
  CHECK(ui->body == "<html>study</html>");

  CHECK(cli.Post("/vote", "{bad", "application/json")->status == 400);
  CHECK(cli.Post("/vote", R"({"assignment_id":"x","choice":"up","annotator":"ann"})", "application/json")->status ==
        400);
  CHECK(cli.Post("/vote", R"({"assignment_id":"x","choice":"left","annotator":"ann"})", "application/json")->status ==
        404);
  const json body{{"assignment_id", pj.at("assignment_id")}, {"choice", "left"}, {"annotator", "ann"}};
  auto vote = cli.Post("/vote", body.dump(), "application/json");
  REQUIRE(vote);
  CHECK(vote->status == 200);
  CHECK(json::parse(vote->body).at("ok") == true);
  CHECK(cli.Post("/vote", body.dump(), "application/json")->status == 409);

  auto rankings = cli.Get("/rankings");
  REQUIRE(rankings);
  CHECK(rankings->body == rankings_json(svc.rankings()));
  const auto rj = json::parse(rankings->body).at("models");
  CHECK(rj.size() == 2);
  CHECK(rj[0].at("rating") == 1016.0);
  auto boot = cli.Get("/rankings?bootstrap=1");
  REQUIRE(boot);
  CHECK(boot->status == 200);

  StudyService empty({}, StudyConfig{});
  harness::RunningServer empty_server(empty, ServerOptions{dir / "media", {}, "*"});
  CHECK(empty_server.client().Get("/pair?annotator=a")->status == 409);
  std::filesystem::remove_all(dir);
}

TEST_CASE("concurrent votes match offline replay") {
  const auto dir = gen::temp_dir("concurrent");
  StudyConfig cfg;
  cfg.log_path = dir / "votes.jsonl";
  cfg.seed = 77;
  StudyService svc(all_pairs({"a", "b", "c", "d"}), cfg);
  harness::RunningServer server(svc, ServerOptions{dir, {}, "*"});

  std::atomic<int> ok{0};
  std::vector<std::thread> threads;
  for (int i = 0; i < 50; ++i) {
    threads.emplace_back([&, i] {
      auto cli = server.client();
      const std::string ann = "ann" + std::to_string(i);
      auto pair = cli.Get("/pair?annotator=" + ann);
      if (!pair || pair->status != 200) return;
      const json body{{"assignment_id", json::parse(pair->body).at("assignment_id")},
                      {"choice", i % 3 ? "left" : "right"},
                      {"annotator", ann}};
      auto vote = cli.Post("/vote", body.dump(), "application/json");
      if (vote && vote->status == 200) ++ok;
    });
  }
  for (auto& t : threads) t.join();
  CHECK(ok == 50);
  CHECK(read_comparison_log(cfg.log_path).size() == 50);

  cli::EloCommand cmd;
  cmd.log = cfg.log_path;
  cmd.elo.bootstrap_rounds = 0;
  cmd.out_dir = dir / "elo";
  const auto offline = cli::cmd_elo(cmd);
  auto live = json::parse(server.client().Get("/rankings")->body).at("models");
  for (const auto& row : live) {
    const std::string m = row.at("model");
    if (row.at("games") == 0) {
      CHECK(offline.count(m) == 0);
      continue;
    }
    REQUIRE(offline.count(m) == 1);
    CHECK(row.at("rating").get<double>() == offline.at(m).rating);
    CHECK(row.at("games").get<int>() == offline.at(m).games);
  }
  std::filesystem::remove_all(dir);
}
