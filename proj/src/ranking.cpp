#include "lipkit/ranking.hpp"

#include <algorithm>
#include <cmath>
#include <nlohmann/json.hpp>
#include <set>

#include "lipkit/error.hpp"
#include "lipkit/io.hpp"

namespace lipkit {

using nlohmann::json;

void validate_record(const ComparisonRecord& record) {
  require(!record.model_a.empty() && !record.model_b.empty(), ErrorKind::InvalidArgument,
          "comparison record has an empty model id");
  require(record.model_a != record.model_b, ErrorKind::InvalidArgument,
          "comparison record compares '" + record.model_a + "' with itself");
}

void validate_elo_config(const EloConfig& config) {
  require(std::isfinite(config.initial_rating), ErrorKind::InvalidArgument, "initial rating must be finite");
  require(std::isfinite(config.k_factor) && config.k_factor > 0.0, ErrorKind::InvalidArgument,
          "K-factor must be positive");
  require(config.ci_level > 0.0 && config.ci_level < 1.0, ErrorKind::InvalidArgument,
          "ci_level must lie in (0, 1)");
  require(config.bootstrap_rounds >= 0, ErrorKind::InvalidArgument, "bootstrap rounds must be >= 0");
}

double elo_expected(double r_a, double r_b) { return 1.0 / (1.0 + std::pow(10.0, (r_b - r_a) / 400.0)); }

namespace {

// Replays records (optionally through an index list) into `ratings`.
template <typename Visit>
void replay(std::map<std::string, double>& ratings, double initial, double k, Visit&& visit) {
  visit([&](const ComparisonRecord& r) {
    auto& ra = ratings.try_emplace(r.model_a, initial).first->second;
    auto& rb = ratings.try_emplace(r.model_b, initial).first->second;
    const double expected_a = elo_expected(ra, rb);
    const double score_a = r.winner == Winner::A ? 1.0 : 0.0;
    const double delta = k * (score_a - expected_a);
    ra += delta;
    rb -= delta;
  });
}

std::map<std::string, int> game_counts(const std::vector<ComparisonRecord>& records) {
  std::map<std::string, int> games;
  for (const auto& r : records) {
    ++games[r.model_a];
    ++games[r.model_b];
  }
  return games;
}

}  // namespace

RatingTable elo_ratings(const std::vector<ComparisonRecord>& records, const EloConfig& config) {
  validate_elo_config(config);
  require(!records.empty(), ErrorKind::InvalidArgument, "elo_ratings needs at least one record");
  for (const auto& r : records) validate_record(r);
  std::map<std::string, double> ratings;
  replay(ratings, config.initial_rating, config.k_factor, [&](auto&& apply) {
    for (const auto& r : records) apply(r);
  });
  const auto games = game_counts(records);
  RatingTable table;
  for (const auto& [model, rating] : ratings) {
    table[model] = ModelRating{rating, rating, rating, games.at(model)};
  }
  return table;
}

std::vector<std::size_t> resample_with_replacement(std::size_t count, std::mt19937_64& rng) {
  std::uniform_int_distribution<std::size_t> pick(0, count - 1);
  std::vector<std::size_t> idx(count);
  for (auto& i : idx) i = pick(rng);
  return idx;
}

double percentile(std::vector<double> values, double q) {
  require(!values.empty(), ErrorKind::InvalidArgument, "percentile of an empty set");
  require(q >= 0.0 && q <= 1.0, ErrorKind::InvalidArgument, "percentile q must lie in [0, 1]");
  std::sort(values.begin(), values.end());
  const double pos = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, values.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return values[lo] + frac * (values[hi] - values[lo]);
}

BootstrapResult bootstrap_elo(const std::vector<ComparisonRecord>& records, const EloConfig& config,
                              const Resampler& resampler) {
  validate_elo_config(config);
  require(!records.empty(), ErrorKind::InvalidArgument, "bootstrap_elo needs at least one record");
  require(config.bootstrap_rounds >= 1, ErrorKind::InvalidArgument, "bootstrap needs at least one round");
  for (const auto& r : records) validate_record(r);

  const auto games = game_counts(records);
  BootstrapResult out;
  for (const auto& [model, n] : games) out.models.push_back(model);
  out.rounds.reserve(static_cast<std::size_t>(config.bootstrap_rounds));

  for (int round = 0; round < config.bootstrap_rounds; ++round) {
    std::seed_seq seq{static_cast<std::uint32_t>(config.seed), static_cast<std::uint32_t>(config.seed >> 32),
                      static_cast<std::uint32_t>(round)};
    std::mt19937_64 rng(seq);
    const std::vector<std::size_t> idx = resampler(records.size(), rng);
    std::map<std::string, double> ratings;
    replay(ratings, config.initial_rating, config.k_factor, [&](auto&& apply) {
      for (std::size_t i : idx) {
        require(i < records.size(), ErrorKind::InvalidArgument, "resampler index out of range");
        apply(records[i]);
      }
    });
    std::vector<double> row;
    row.reserve(out.models.size());
    for (const auto& m : out.models) {
      auto it = ratings.find(m);
      row.push_back(it == ratings.end() ? config.initial_rating : it->second);
    }
    out.rounds.push_back(std::move(row));
  }

  const double tail = (1.0 - config.ci_level) / 2.0;
  for (std::size_t m = 0; m < out.models.size(); ++m) {
    std::vector<double> column;
    column.reserve(out.rounds.size());
    for (const auto& row : out.rounds) column.push_back(row[m]);
    out.table[out.models[m]] = ModelRating{percentile(column, 0.5), percentile(column, tail),
                                           percentile(column, 1.0 - tail), games.at(out.models[m])};
  }
  return out;
}

WinRateMatrix win_rate_matrix(const std::vector<ComparisonRecord>& records) {
  require(!records.empty(), ErrorKind::InvalidArgument, "win_rate_matrix needs at least one record");
  std::set<std::string> names;
  for (const auto& r : records) {
    validate_record(r);
    names.insert(r.model_a);
    names.insert(r.model_b);
  }
  WinRateMatrix m;
  m.models.assign(names.begin(), names.end());
  const std::size_t n = m.models.size();
  std::map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < n; ++i) index[m.models[i]] = i;
  std::vector<std::vector<int>> wins(n, std::vector<int>(n, 0));
  m.matches.assign(n, std::vector<int>(n, 0));
  for (const auto& r : records) {
    const std::size_t a = index[r.model_a];
    const std::size_t b = index[r.model_b];
    ++m.matches[a][b];
    ++m.matches[b][a];
    if (r.winner == Winner::A) {
      ++wins[a][b];
    } else {
      ++wins[b][a];
    }
  }
  m.rate.assign(n, std::vector<std::optional<double>>(n));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i != j && m.matches[i][j] > 0) {
        m.rate[i][j] = static_cast<double>(wins[i][j]) / m.matches[i][j];
      }
    }
  }
  return m;
}

std::vector<HistogramBin> rating_distribution(const BootstrapResult& bootstrap, int bins) {
  require(!bootstrap.rounds.empty(), ErrorKind::InvalidArgument, "rating distribution needs >= 1 round");
  require(bins >= 1, ErrorKind::InvalidArgument, "histogram needs at least one bin");
  double lo = bootstrap.rounds.front().front();
  double hi = lo;
  for (const auto& row : bootstrap.rounds) {
    for (double v : row) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  }
  if (hi == lo) bins = 1;
  const double width = bins == 1 ? hi - lo : (hi - lo) / bins;
  std::vector<HistogramBin> out;
  for (std::size_t m = 0; m < bootstrap.models.size(); ++m) {
    std::vector<int> counts(static_cast<std::size_t>(bins), 0);
    for (const auto& row : bootstrap.rounds) {
      int b = width > 0.0 ? static_cast<int>((row[m] - lo) / width) : 0;
      counts[static_cast<std::size_t>(std::clamp(b, 0, bins - 1))]++;
    }
    for (int b = 0; b < bins; ++b) {
      const double low = lo + b * width;
      const double high = b + 1 == bins ? hi : lo + (b + 1) * width;
      out.push_back({bootstrap.models[m], low, high, counts[static_cast<std::size_t>(b)]});
    }
  }
  return out;
}

std::string format_record(const ComparisonRecord& record) {
  json obj = {{"pair_id", record.pair_id},
              {"model_a", record.model_a},
              {"model_b", record.model_b},
              {"winner", record.winner == Winner::A ? "A" : "B"},
              {"annotator", record.annotator},
              {"timestamp", record.timestamp}};
  return obj.dump();
}

ComparisonRecord parse_record(const std::string& line) {
  ComparisonRecord r;
  try {
    const json obj = json::parse(line);
    r.pair_id = obj.at("pair_id").get<std::string>();
    r.model_a = obj.at("model_a").get<std::string>();
    r.model_b = obj.at("model_b").get<std::string>();
    const std::string winner = obj.at("winner").get<std::string>();
    if (winner == "A") {
      r.winner = Winner::A;
    } else if (winner == "B") {
      r.winner = Winner::B;
    } else {
      fail(ErrorKind::Parse, "winner must be \"A\" or \"B\", got \"" + winner + "\"");
    }
    r.annotator = obj.value("annotator", std::string{});
    r.timestamp = obj.value("timestamp", std::string{});
  } catch (const json::exception& e) {
    fail(ErrorKind::Parse, std::string("bad comparison record: ") + e.what());
  }
  try {
    validate_record(r);
  } catch (const Error& e) {
    fail(ErrorKind::Parse, e.what());
  }
  return r;
}

std::vector<ComparisonRecord> read_comparison_log(const std::filesystem::path& path) {
  const auto lines = io::split_lines(io::read_file(path));
  std::vector<ComparisonRecord> out;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (lines[i].find_first_not_of(" \t") == std::string::npos) continue;
    try {
      out.push_back(parse_record(lines[i]));
    } catch (const Error& e) {
      fail(ErrorKind::Parse, path.string() + ":" + std::to_string(i + 1) + ": " + e.what());
    }
  }
  return out;
}

std::vector<std::pair<std::string, ModelRating>> sorted_ratings(const RatingTable& table) {
  std::vector<std::pair<std::string, ModelRating>> rows(table.begin(), table.end());
  std::stable_sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) {
    if (a.second.rating != b.second.rating) return a.second.rating > b.second.rating;
    return a.first < b.first;
  });
  return rows;
}

std::string ratings_csv(const RatingTable& table) {
  std::string out = "model,rating,ci_low,ci_high,games\n";
  for (const auto& [model, r] : sorted_ratings(table)) {
    out += model + "," + io::format_number(r.rating) + "," + io::format_number(r.ci_low) + "," +
           io::format_number(r.ci_high) + "," + std::to_string(r.games) + "\n";
  }
  return out;
}

std::string winrate_csv(const WinRateMatrix& matrix) {
  std::string out = "row_model,column_model,rate\n";
  for (std::size_t i = 0; i < matrix.models.size(); ++i) {
    for (std::size_t j = 0; j < matrix.models.size(); ++j) {
      if (!matrix.rate[i][j]) continue;
      out += matrix.models[i] + "," + matrix.models[j] + "," + io::format_number(*matrix.rate[i][j]) + "\n";
    }
  }
  return out;
}

std::string histogram_csv(const std::vector<HistogramBin>& bins) {
  std::string out = "model,bin_low,bin_high,count\n";
  for (const auto& b : bins) {
    out += b.model + "," + io::format_number(b.bin_low) + "," + io::format_number(b.bin_high) + "," +
           std::to_string(b.count) + "\n";
  }
  return out;
}

}  // namespace lipkit
