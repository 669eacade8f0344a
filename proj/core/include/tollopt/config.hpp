#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "tollopt/demand.hpp"
#include "tollopt/optimizer.hpp"
#include "tollopt/prediction.hpp"
#include "tollopt/route_choice.hpp"

namespace tollopt {

/// Malformed or inconsistent configuration, or an input file that cannot be
/// found. The CLI maps it to exit status 2.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Scenario { NoToll, Static, Predictive };

std::string_view to_string(Scenario s);
Scenario parse_scenario(std::string_view text);

struct FileSettings {
  std::filesystem::path network;
  std::filesystem::path demand;
  std::optional<std::filesystem::path> historical_times;
  std::optional<std::filesystem::path> paths;
};

struct TimeSettings {
  double start = 0.0;
  double end = 0.0;
  double warmup_end = 0.0;
  double tolling_end = 0.0;
  double delta = 300.0;
  std::size_t horizon = 3;
  double demand_interval = 300.0;
  TimeWindow peak;
  double drain = 3600.0;

  TimeWindow period() const { return {start, end}; }
  TimeWindow tolling() const { return {warmup_end, tolling_end}; }
  std::size_t interval_count() const;
};

struct ScenarioSettings {
  std::vector<Scenario> scenarios{Scenario::NoToll, Scenario::Static, Scenario::Predictive};
  std::vector<double> demand_levels{0.9, 1.0, 1.1, 1.2};
  std::size_t replications = 10;
  std::uint64_t seed = 1;
  double cov = 0.2;
  double static_demand_factor = 1.2;
  double informed_fraction = 1.0;
  double count_noise_sd = 0.0;
};

struct ChoiceSettings {
  ChoiceCoefficients coefficients;
  std::size_t k_max = 4;
  bool en_route = true;
};

struct TollSettings {
  double lower = 0.0;
  double upper = 10.0;
  double delta = 2.0;
  bool reduced = true;
};

struct Config {
  std::filesystem::path source;  // file the config was read from, if any
  FileSettings files;
  TimeSettings time;
  ScenarioSettings scenario;
  ChoiceSettings choice;
  ConsistencySettings prediction;
  TollSettings tolls;
  GAParams ga;

  /// Throws ConfigError on inconsistent values.
  void validate() const;
};

/// Parses "HH:MM", "HH:MM:SS" or plain seconds.
double parse_clock(std::string_view text);
/// Formats seconds as HH:MM, or HH:MM:SS when seconds are not whole minutes.
std::string format_clock(double seconds);
/// Parses "HH:MM-HH:MM".
TimeWindow parse_window(std::string_view text);

/// Reads an INI config. Each override is "section.key=value" and replaces
/// the file's value. Relative file paths resolve against the config's
/// directory.
Config load_config(const std::filesystem::path& path, const std::vector<std::string>& overrides = {});
Config parse_config(std::istream& in, const std::filesystem::path& base_dir,
                    const std::vector<std::string>& overrides = {});

}  // namespace tollopt
