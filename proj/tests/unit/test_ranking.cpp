#include <doctest.h>

#include <cmath>
#include <fstream>
#include <numeric>

#include "gen.hpp"
#include "lipkit/error.hpp"
#include "lipkit/ranking.hpp"

using namespace lipkit;

namespace {

ComparisonRecord rec(const std::string& a, const std::string& b, Winner w, const std::string& id = "p") {
  return ComparisonRecord{id, a, b, w, "ann", "2025-01-01T00:00:00Z"};
}

EloConfig single_pass() {
  EloConfig c;
  c.bootstrap_rounds = 0;
  return c;
}

// Long-double replay of the update rule.
std::map<std::string, long double> elo_oracle(const std::vector<ComparisonRecord>& records, long double k = 32,
                                              long double r0 = 1000) {
  std::map<std::string, long double> r;
  for (const auto& x : records) {
    r.try_emplace(x.model_a, r0);
    r.try_emplace(x.model_b, r0);
    const long double ea = 1.0L / (1.0L + std::pow(10.0L, (r[x.model_b] - r[x.model_a]) / 400.0L));
    const long double sa = x.winner == Winner::A ? 1.0L : 0.0L;
    r[x.model_a] += k * (sa - ea);
    r[x.model_b] -= k * (sa - ea);
  }
  return r;
}

std::vector<std::size_t> identity_resample(std::size_t n, std::mt19937_64&) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  return idx;
}

}  // namespace

TEST_CASE("Elo examples") {
  const auto one = elo_ratings({rec("A", "B", Winner::A)}, single_pass());
  CHECK(one.at("A").rating == 1016.0);
  CHECK(one.at("B").rating == 984.0);
  CHECK(one.at("A").games == 1);

  const std::vector<ComparisonRecord> two{rec("A", "B", Winner::A), rec("A", "B", Winner::B)};
  const auto t = elo_ratings(two, single_pass());
  CHECK(t.at("A").rating == doctest::Approx(998.53).epsilon(1e-5));
  CHECK(t.at("B").rating == doctest::Approx(1001.47).epsilon(1e-5));
  const auto oracle = elo_oracle(two);
  CHECK(std::abs(t.at("A").rating - static_cast<double>(oracle.at("A"))) <= 1e-9);
  CHECK(std::abs(t.at("B").rating - static_cast<double>(oracle.at("B"))) <= 1e-9);

  CHECK_THROWS_AS(elo_ratings({rec("A", "A", Winner::A)}, single_pass()), Error);
  CHECK_THROWS_AS(elo_ratings({}, single_pass()), Error);
  EloConfig bad;
  bad.k_factor = 0;
  CHECK_THROWS_AS(elo_ratings({rec("A", "B", Winner::A)}, bad), Error);
  bad = EloConfig{};
  bad.ci_level = 1.0;
  CHECK_THROWS_AS(validate_elo_config(bad), Error);
}

TEST_CASE("Elo properties on random logs") {
  gen::Gen g(42);
  const std::vector<std::string> models{"m0", "m1", "m2", "m3", "m4"};
  for (int trial = 0; trial < 30; ++trial) {
    const auto log = g.log(models, {0, 50, 100, 200, 300}, g.integer(1, 200));
    const auto table = elo_ratings(log, single_pass());

    const auto oracle = elo_oracle(log);
    double sum = 0.0;
    for (const auto& [m, r] : table) {
      CHECK(std::abs(r.rating - static_cast<double>(oracle.at(m))) <= 1e-9);
      sum += r.rating;
    }
    CHECK(std::abs(sum - 1000.0 * static_cast<double>(table.size())) <= 1e-9);

    // Same matches with sides swapped: identical table.
    auto swapped = log;
    for (auto& r : swapped) {
      std::swap(r.model_a, r.model_b);
      r.winner = r.winner == Winner::A ? Winner::B : Winner::A;
    }
    const auto st = elo_ratings(swapped, single_pass());
    for (const auto& [m, r] : table) CHECK(std::abs(st.at(m).rating - r.rating) <= 1e-9);

    // Relabeling permutes the table.
    auto relabeled = log;
    auto rename = [](const std::string& m) { return "x_" + std::string(1, static_cast<char>('e' - (m[1] - '0'))); };
    for (auto& r : relabeled) {
      r.model_a = rename(r.model_a);
      r.model_b = rename(r.model_b);
    }
    const auto rt = elo_ratings(relabeled, single_pass());
    for (const auto& [m, r] : table) CHECK(rt.at(rename(m)).rating == r.rating);

    // Shifting the initial rating shifts everything.
    EloConfig shifted = single_pass();
    shifted.initial_rating = 1500.0;
    const auto sh = elo_ratings(log, shifted);
    for (const auto& [m, r] : table) CHECK(std::abs(sh.at(m).rating - (r.rating + 500.0)) <= 1e-9);

    // A favourite's win moves ratings by less than K/2.
    const auto sorted = sorted_ratings(table);
    if (sorted.front().second.rating > sorted.back().second.rating) {
      auto extended = log;
      extended.push_back(rec(sorted.front().first, sorted.back().first, Winner::A));
      const auto et = elo_ratings(extended, single_pass());
      CHECK(std::abs(et.at(sorted.front().first).rating - sorted.front().second.rating) < 16.0);
      CHECK(std::abs(et.at(sorted.back().first).rating - sorted.back().second.rating) < 16.0);
    }
  }
}

TEST_CASE("bootstrap") {
  const std::vector<ComparisonRecord> log{rec("A", "B", Winner::A), rec("B", "C", Winner::A),
                                          rec("A", "C", Winner::B)};
  EloConfig cfg;
  cfg.bootstrap_rounds = 1;
  const auto ident = bootstrap_elo(log, cfg, identity_resample);
  const auto plain = elo_ratings(log, single_pass());
  for (const auto& [m, r] : ident.table) {
    CHECK(r.rating == plain.at(m).rating);
    CHECK(r.ci_low == r.rating);
    CHECK(r.ci_high == r.rating);
  }

  cfg.bootstrap_rounds = 200;
  cfg.seed = 9;
  const auto b1 = bootstrap_elo(log, cfg);
  const auto b2 = bootstrap_elo(log, cfg);
  CHECK(b1.rounds == b2.rounds);
  for (const auto& [m, r] : b1.table) {
    CHECK(r.ci_low <= r.rating);
    CHECK(r.rating <= r.ci_high);
    CHECK(r.games == 2);
  }
  // Round r depends only on (seed, r).
  EloConfig fewer = cfg;
  fewer.bootstrap_rounds = 20;
  const auto b3 = bootstrap_elo(log, fewer);
  for (int r = 0; r < 20; ++r) CHECK(b3.rounds[static_cast<std::size_t>(r)] == b1.rounds[static_cast<std::size_t>(r)]);

  // Median and percentiles recomputed from the stored rounds.
  for (std::size_t m = 0; m < b1.models.size(); ++m) {
    std::vector<double> col;
    for (const auto& row : b1.rounds) col.push_back(row[m]);
    std::sort(col.begin(), col.end());
    const double median = 0.5 * (col[99] + col[100]);
    CHECK(b1.table.at(b1.models[m]).rating == doctest::Approx(median).epsilon(1e-12));
  }

  std::vector<ComparisonRecord> dominant;
  for (int i = 0; i < 100; ++i) dominant.push_back(i % 2 ? rec("X", "Y", Winner::A) : rec("Y", "X", Winner::B));
  cfg.bootstrap_rounds = 300;
  const auto sep = bootstrap_elo(dominant, cfg);
  CHECK(sep.table.at("X").ci_low > sep.table.at("Y").ci_high);

  CHECK_THROWS_AS(bootstrap_elo({}, cfg), Error);
  cfg.bootstrap_rounds = 0;
  CHECK_THROWS_AS(bootstrap_elo(log, cfg), Error);
}

TEST_CASE("percentile") {
  CHECK(percentile({3, 1, 2}, 0.5) == 2.0);
  CHECK(percentile({1, 2, 3, 4}, 0.5) == 2.5);
  CHECK(percentile({1, 2, 3, 4}, 0.0) == 1.0);
  CHECK(percentile({1, 2, 3, 4}, 1.0) == 4.0);
  CHECK(percentile({0, 10}, 0.025) == doctest::Approx(0.25));
  CHECK_THROWS_AS(percentile({}, 0.5), Error);
}

TEST_CASE("win-rate matrix") {
  std::vector<ComparisonRecord> log{rec("A", "B", Winner::A), rec("A", "B", Winner::A), rec("B", "A", Winner::B),
                                    rec("B", "A", Winner::A)};
  const auto w = win_rate_matrix(log);
  REQUIRE(w.models == std::vector<std::string>{"A", "B"});
  CHECK(*w.rate[0][1] == 0.75);
  CHECK(*w.rate[1][0] == 0.25);
  CHECK_FALSE(w.rate[0][0].has_value());
  CHECK(w.matches[0][1] == 4);

  gen::Gen g(17);
  const std::vector<std::string> models{"m0", "m1", "m2", "m3"};
  for (int trial = 0; trial < 20; ++trial) {
    const auto rl = g.log(models, {0, 0, 100, 300}, g.integer(1, 40));
    const auto m = win_rate_matrix(rl);
    for (std::size_t i = 0; i < m.models.size(); ++i) {
      for (std::size_t j = 0; j < m.models.size(); ++j) {
        int wins = 0, games = 0;
        for (const auto& r : rl) {
          const bool ij = r.model_a == m.models[i] && r.model_b == m.models[j];
          const bool ji = r.model_a == m.models[j] && r.model_b == m.models[i];
          if (!ij && !ji) continue;
          ++games;
          if ((ij && r.winner == Winner::A) || (ji && r.winner == Winner::B)) ++wins;
        }
        if (i == j || games == 0) {
          CHECK_FALSE(m.rate[i][j].has_value());
        } else {
          CHECK(*m.rate[i][j] == static_cast<double>(wins) / games);
          CHECK(*m.rate[i][j] + *m.rate[j][i] == doctest::Approx(1.0).epsilon(1e-15));
        }
      }
    }
  }
  CHECK_THROWS_AS(win_rate_matrix({}), Error);
}

TEST_CASE("rating distribution") {
  const std::vector<ComparisonRecord> log{rec("A", "B", Winner::A), rec("B", "C", Winner::A)};
  EloConfig cfg;
  cfg.bootstrap_rounds = 1;
  const auto one = rating_distribution(bootstrap_elo(log, cfg, identity_resample), 20);
  CHECK(one.size() == 3 * 20);
  for (const auto& model : {"A", "B", "C"}) {
    int nonzero = 0;
    for (const auto& b : one)
      if (b.model == model && b.count > 0) ++nonzero;
    CHECK(nonzero == 1);
  }

  cfg.bootstrap_rounds = 500;
  cfg.seed = 4;
  const auto boot = bootstrap_elo(log, cfg);
  const auto bins = rating_distribution(boot, 10);
  double lo = 1e300, hi = -1e300;
  for (const auto& row : boot.rounds)
    for (double v : row) lo = std::min(lo, v), hi = std::max(hi, v);
  for (std::size_t m = 0; m < boot.models.size(); ++m) {
    std::vector<int> expect(10, 0);
    for (const auto& row : boot.rounds) {
      int k = static_cast<int>((row[m] - lo) / ((hi - lo) / 10));
      ++expect[static_cast<std::size_t>(std::min(k, 9))];
    }
    int total = 0;
    for (const auto& b : bins) {
      if (b.model != boot.models[m]) continue;
      const int k = static_cast<int>(std::lround((b.bin_low - lo) / ((hi - lo) / 10)));
      CHECK(b.count == expect[static_cast<std::size_t>(k)]);
      total += b.count;
    }
    CHECK(total == 500);
  }
  CHECK_THROWS_AS(rating_distribution(BootstrapResult{}, 10), Error);
}

TEST_CASE("comparison log I/O and CSV") {
  const auto r = rec("sysA", "sysB", Winner::B, "pair-9");
  const auto back = parse_record(format_record(r));
  CHECK(back.pair_id == "pair-9");
  CHECK(back.model_a == "sysA");
  CHECK(back.winner == Winner::B);
  CHECK(back.timestamp == r.timestamp);
  CHECK_THROWS_AS(parse_record(R"({"pair_id":"p","model_a":"a","model_b":"b","winner":"tie"})"), Error);
  CHECK_THROWS_AS(parse_record(R"({"pair_id":"p","model_a":"a","model_b":"a","winner":"A"})"), Error);

  const auto dir = gen::temp_dir("elo_log");
  {
    std::ofstream out(dir / "log.jsonl");
    out << format_record(r) << "\n\n" << format_record(r) << "\n" << "{not json}\n";
  }
  try {
    read_comparison_log(dir / "log.jsonl");
    FAIL("expected parse error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Parse);
    CHECK(std::string(e.what()).find("log.jsonl:4") != std::string::npos);
  }
  std::filesystem::remove_all(dir);

  const auto table = elo_ratings({rec("A", "B", Winner::A)}, single_pass());
  CHECK(ratings_csv(table) == "model,rating,ci_low,ci_high,games\nA,1016,1016,1016,1\nB,984,984,984,1\n");
  CHECK(winrate_csv(win_rate_matrix({rec("A", "B", Winner::A)})) == "row_model,column_model,rate\nA,B,1\nB,A,0\n");
  CHECK(histogram_csv({{"A", 1.0, 2.5, 3}}) == "model,bin_low,bin_high,count\nA,1,2.5,3\n");

  RatingTable tie{{"b", {1000, 1000, 1000, 1}}, {"a", {1000, 1000, 1000, 1}}, {"c", {1100, 1100, 1100, 1}}};
  const auto order = sorted_ratings(tie);
  CHECK(order[0].first == "c");
  CHECK(order[1].first == "a");
  CHECK(order[2].first == "b");
}
