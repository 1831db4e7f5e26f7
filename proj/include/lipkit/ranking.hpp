#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace lipkit {

enum class Winner { A, B };

/// One forced-choice human judgment between two systems.
struct ComparisonRecord {
  std::string pair_id;
  std::string model_a;
  std::string model_b;
  Winner winner = Winner::A;
  std::string annotator;
  std::string timestamp;  // ISO-8601
};

void validate_record(const ComparisonRecord& record);

struct EloConfig {
  double initial_rating = 1000.0;
  double k_factor = 32.0;
  int bootstrap_rounds = 1000;
  double ci_level = 0.95;
  std::uint64_t seed = 0;
};

void validate_elo_config(const EloConfig& config);

struct ModelRating {
  double rating = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  int games = 0;
};

using RatingTable = std::map<std::string, ModelRating>;

/// Expected score of a player rated r_a against r_b.
double elo_expected(double r_a, double r_b);

/// Sequential online Elo in record order. ci_low == ci_high == rating.
RatingTable elo_ratings(const std::vector<ComparisonRecord>& records, const EloConfig& config);

/// Indices of the records replayed in one bootstrap round.
using Resampler = std::function<std::vector<std::size_t>(std::size_t count, std::mt19937_64& rng)>;

/// Draws `count` indices uniformly with replacement (which also shuffles).
std::vector<std::size_t> resample_with_replacement(std::size_t count, std::mt19937_64& rng);

struct BootstrapResult {
  RatingTable table;                       // median rating, percentile CI
  std::vector<std::string> models;         // column order of `rounds`
  std::vector<std::vector<double>> rounds; // round x model
};

/// Resamples the log `bootstrap_rounds` times, replays Elo on each resample,
/// and reports the per-model median with empirical percentile bounds. Each
/// round has its own generator seeded from (seed, round), so results do not
/// depend on evaluation order. A model absent from a resample keeps the
/// initial rating for that round.
BootstrapResult bootstrap_elo(const std::vector<ComparisonRecord>& records, const EloConfig& config,
                              const Resampler& resampler = resample_with_replacement);

/// Linear-interpolation percentile (q in [0, 1]) of unsorted values.
double percentile(std::vector<double> values, double q);

struct WinRateMatrix {
  std::vector<std::string> models;
  std::vector<std::vector<std::optional<double>>> rate;  // rate[i][j]: i beats j
  std::vector<std::vector<int>> matches;
};

WinRateMatrix win_rate_matrix(const std::vector<ComparisonRecord>& records);

struct HistogramBin {
  std::string model;
  double bin_low = 0.0;
  double bin_high = 0.0;
  int count = 0;
};

/// Fixed-width bins spanning the global min/max rating across all rounds and
/// models; every model gets a count for every bin.
std::vector<HistogramBin> rating_distribution(const BootstrapResult& bootstrap, int bins = 20);

// JSON Lines comparison logs and CSV exports.
std::string format_record(const ComparisonRecord& record);
ComparisonRecord parse_record(const std::string& line);
std::vector<ComparisonRecord> read_comparison_log(const std::filesystem::path& path);

/// Models sorted by rating, highest first (ties by name).
std::vector<std::pair<std::string, ModelRating>> sorted_ratings(const RatingTable& table);

std::string ratings_csv(const RatingTable& table);
std::string winrate_csv(const WinRateMatrix& matrix);
std::string histogram_csv(const std::vector<HistogramBin>& bins);

}  // namespace lipkit
