#include "tollopt/config.hpp"

#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <set>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <fmt/format.h>

#include "text.hpp"

namespace tollopt {

using text::parse_number;
using text::split;
using text::trim;

namespace {

namespace pt = boost::property_tree;

template <class T>
T number(std::string_view key, const std::string& value) {
  const auto parsed = parse_number<T>(trim(value));
  if (!parsed) throw ConfigError(fmt::format("{}: '{}' is not a valid number", key, value));
  return *parsed;
}

bool boolean(std::string_view key, const std::string& value) {
  const auto v = trim(value);
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ConfigError(fmt::format("{}: '{}' is not a boolean", key, value));
}

std::vector<double> number_list(std::string_view key, const std::string& value) {
  std::vector<double> out;
  for (auto part : split(value, ',')) out.push_back(number<double>(key, std::string(trim(part))));
  if (out.empty()) throw ConfigError(fmt::format("{}: empty list", key));
  return out;
}

double clock_value(std::string_view key, const std::string& value) {
  try {
    return parse_clock(value);
  } catch (const ConfigError& e) {
    throw ConfigError(fmt::format("{}: {}", key, e.what()));
  }
}

using Setter = std::function<void(Config&, const std::string&)>;

std::map<std::string, Setter, std::less<>> setters(const std::filesystem::path& base,
                                                   std::set<std::string>& seen) {
  auto path_of = [base](const std::string& v) {
    std::filesystem::path p(std::string(trim(v)));
    return p.is_absolute() ? p : base / p;
  };
  std::map<std::string, Setter, std::less<>> s;
  s["files.network"] = [=](Config& c, const std::string& v) { c.files.network = path_of(v); };
  s["files.demand"] = [=](Config& c, const std::string& v) { c.files.demand = path_of(v); };
  s["files.historical_times"] = [=](Config& c, const std::string& v) {
    if (!trim(v).empty()) c.files.historical_times = path_of(v);
  };
  s["files.paths"] = [=](Config& c, const std::string& v) {
    if (!trim(v).empty()) c.files.paths = path_of(v);
  };

  s["time.start"] = [](Config& c, const std::string& v) { c.time.start = clock_value("time.start", v); };
  s["time.end"] = [](Config& c, const std::string& v) { c.time.end = clock_value("time.end", v); };
  s["time.warmup_end"] = [](Config& c, const std::string& v) {
    c.time.warmup_end = clock_value("time.warmup_end", v);
  };
  s["time.tolling_end"] = [](Config& c, const std::string& v) {
    c.time.tolling_end = clock_value("time.tolling_end", v);
  };
  s["time.delta"] = [](Config& c, const std::string& v) { c.time.delta = number<double>("time.delta", v); };
  s["time.horizon"] = [](Config& c, const std::string& v) {
    c.time.horizon = number<std::size_t>("time.horizon", v);
  };
  s["time.demand_interval"] = [](Config& c, const std::string& v) {
    c.time.demand_interval = number<double>("time.demand_interval", v);
  };
  s["time.peak_start"] = [](Config& c, const std::string& v) {
    c.time.peak.begin = clock_value("time.peak_start", v);
  };
  s["time.peak_end"] = [](Config& c, const std::string& v) {
    c.time.peak.end = clock_value("time.peak_end", v);
  };
  s["time.drain"] = [](Config& c, const std::string& v) { c.time.drain = number<double>("time.drain", v); };

  s["scenario.scenarios"] = [](Config& c, const std::string& v) {
    c.scenario.scenarios.clear();
    for (auto part : split(v, ',')) c.scenario.scenarios.push_back(parse_scenario(trim(part)));
  };
  s["scenario.demand_levels"] = [](Config& c, const std::string& v) {
    c.scenario.demand_levels = number_list("scenario.demand_levels", v);
  };
  s["scenario.replications"] = [](Config& c, const std::string& v) {
    c.scenario.replications = number<std::size_t>("scenario.replications", v);
  };
  s["scenario.seed"] = [](Config& c, const std::string& v) {
    c.scenario.seed = number<std::uint64_t>("scenario.seed", v);
  };
  s["scenario.cov"] = [](Config& c, const std::string& v) { c.scenario.cov = number<double>("scenario.cov", v); };
  s["scenario.static_demand_factor"] = [](Config& c, const std::string& v) {
    c.scenario.static_demand_factor = number<double>("scenario.static_demand_factor", v);
  };
  s["scenario.informed_fraction"] = [](Config& c, const std::string& v) {
    c.scenario.informed_fraction = number<double>("scenario.informed_fraction", v);
  };
  s["scenario.count_noise_sd"] = [](Config& c, const std::string& v) {
    c.scenario.count_noise_sd = number<double>("scenario.count_noise_sd", v);
  };

  s["choice.beta_time"] = [](Config& c, const std::string& v) {
    c.choice.coefficients.beta_time = number<double>("choice.beta_time", v);
  };
  s["choice.beta_cost"] = [](Config& c, const std::string& v) {
    c.choice.coefficients.beta_cost = number<double>("choice.beta_cost", v);
  };
  s["choice.k_max"] = [](Config& c, const std::string& v) { c.choice.k_max = number<std::size_t>("choice.k_max", v); };
  s["choice.en_route"] = [](Config& c, const std::string& v) { c.choice.en_route = boolean("choice.en_route", v); };

  s["prediction.eps"] = [](Config& c, const std::string& v) { c.prediction.eps = number<double>("prediction.eps", v); };
  s["prediction.max_iter"] = [](Config& c, const std::string& v) {
    c.prediction.max_iter = number<std::size_t>("prediction.max_iter", v);
  };
  s["prediction.gap_floor"] = [](Config& c, const std::string& v) {
    c.prediction.gap_floor = number<double>("prediction.gap_floor", v);
  };

  s["tolls.lower"] = [](Config& c, const std::string& v) { c.tolls.lower = number<double>("tolls.lower", v); };
  s["tolls.upper"] = [](Config& c, const std::string& v) { c.tolls.upper = number<double>("tolls.upper", v); };
  s["tolls.delta"] = [](Config& c, const std::string& v) { c.tolls.delta = number<double>("tolls.delta", v); };
  s["tolls.reduced"] = [](Config& c, const std::string& v) { c.tolls.reduced = boolean("tolls.reduced", v); };

  s["ga.population"] = [](Config& c, const std::string& v) {
    c.ga.population_size = number<std::size_t>("ga.population", v);
  };
  s["ga.crossover_probability"] = [](Config& c, const std::string& v) {
    c.ga.crossover_probability = number<double>("ga.crossover_probability", v);
  };
  s["ga.mutation_probability"] = [](Config& c, const std::string& v) {
    c.ga.mutation_probability = number<double>("ga.mutation_probability", v);
  };
  s["ga.sbx_eta"] = [](Config& c, const std::string& v) { c.ga.sbx_eta = number<double>("ga.sbx_eta", v); };
  s["ga.mutation_eta"] = [](Config& c, const std::string& v) {
    c.ga.mutation_eta = number<double>("ga.mutation_eta", v);
  };
  s["ga.max_generations"] = [](Config& c, const std::string& v) {
    c.ga.max_generations = number<std::size_t>("ga.max_generations", v);
  };
  s["ga.time_budget"] = [](Config& c, const std::string& v) {
    c.ga.time_budget = number<double>("ga.time_budget", v);
  };
  s["ga.batch_size"] = [&seen](Config& c, const std::string& v) {
    c.ga.batch_size = number<std::size_t>("ga.batch_size", v);
    seen.insert("ga.batch_size");
  };
  return s;
}

void require(bool ok, std::string_view message) {
  if (!ok) throw ConfigError(std::string(message));
}

bool divides(double width, double length) {
  const double k = length / width;
  return std::abs(k - std::round(k)) < 1e-9;
}

}  // namespace

std::string_view to_string(Scenario s) {
  switch (s) {
    case Scenario::NoToll:
      return "no_toll";
    case Scenario::Static:
      return "static";
    case Scenario::Predictive:
      return "predictive";
  }
  return "unknown";
}

Scenario parse_scenario(std::string_view text) {
  if (text == "no_toll") return Scenario::NoToll;
  if (text == "static") return Scenario::Static;
  if (text == "predictive") return Scenario::Predictive;
  throw ConfigError(fmt::format("unknown scenario '{}'", text));
}

std::size_t TimeSettings::interval_count() const {
  return static_cast<std::size_t>(std::llround((end - start) / delta));
}

double parse_clock(std::string_view text) {
  const auto t = trim(text);
  if (t.find(':') == std::string_view::npos) {
    const auto v = parse_number<double>(t);
    if (!v) throw ConfigError(fmt::format("'{}' is not a time", text));
    return *v;
  }
  const auto parts = split(t, ':');
  if (parts.size() < 2 || parts.size() > 3) throw ConfigError(fmt::format("'{}' is not a time", text));
  double seconds = 0.0;
  const double scale[] = {3600.0, 60.0, 1.0};
  for (std::size_t i = 0; i < parts.size(); ++i) {
    const auto v = parse_number<double>(trim(parts[i]));
    if (!v || *v < 0) throw ConfigError(fmt::format("'{}' is not a time", text));
    if (i > 0 && *v >= 60) throw ConfigError(fmt::format("'{}' is not a time", text));
    seconds += *v * scale[i];
  }
  return seconds;
}

std::string format_clock(double seconds) {
  const auto total = static_cast<long long>(std::llround(seconds));
  const long long h = total / 3600;
  const long long m = (total % 3600) / 60;
  const long long s = total % 60;
  if (s == 0 && std::abs(seconds - static_cast<double>(total)) < 1e-9) return fmt::format("{:02}:{:02}", h, m);
  return fmt::format("{:02}:{:02}:{:02}", h, m, s);
}

TimeWindow parse_window(std::string_view text) {
  const auto dash = text.find('-');
  if (dash == std::string_view::npos) throw ConfigError(fmt::format("'{}' is not a HH:MM-HH:MM window", text));
  TimeWindow w{parse_clock(text.substr(0, dash)), parse_clock(text.substr(dash + 1))};
  if (!(w.end > w.begin)) throw ConfigError(fmt::format("window '{}' is empty", text));
  return w;
}

void Config::validate() const {
  require(!files.network.empty(), "files.network is required");
  require(!files.demand.empty(), "files.demand is required");
  const auto& t = time;
  require(t.delta > 0.0, "time.delta must be positive");
  require(t.horizon >= 2, "time.horizon must be at least 2");
  require(t.demand_interval > 0.0, "time.demand_interval must be positive");
  require(t.start <= t.warmup_end && t.warmup_end <= t.tolling_end && t.tolling_end <= t.end,
          "time windows must satisfy start <= warmup_end <= tolling_end <= end");
  require(t.end > t.start, "simulation period is empty");
  require(divides(t.delta, t.warmup_end - t.start) && divides(t.delta, t.tolling_end - t.warmup_end) &&
              divides(t.delta, t.end - t.tolling_end),
          "time.delta must divide the warm-up, tolling and post-tolling windows");
  require(divides(t.demand_interval, t.end - t.start), "time.demand_interval must divide the period");
  require(t.peak.begin <= t.peak.end && t.peak.begin >= t.start && t.peak.end <= t.end,
          "peak window must lie inside the simulation period");
  require(t.drain >= 0.0, "time.drain must be non-negative");

  require(!scenario.scenarios.empty(), "scenario.scenarios is empty");
  for (double l : scenario.demand_levels) require(l >= 0.0, "demand levels must be non-negative");
  require(scenario.replications >= 1, "scenario.replications must be at least 1");
  require(scenario.cov >= 0.0, "scenario.cov must be non-negative");
  require(scenario.static_demand_factor >= 0.0, "scenario.static_demand_factor must be non-negative");
  require(scenario.informed_fraction >= 0.0 && scenario.informed_fraction <= 1.0,
          "scenario.informed_fraction must lie in [0, 1]");
  require(scenario.count_noise_sd >= 0.0, "scenario.count_noise_sd must be non-negative");
  require(choice.k_max >= 1, "choice.k_max must be at least 1");
  require(prediction.eps > 0.0, "prediction.eps must be positive");
  require(prediction.max_iter >= 1, "prediction.max_iter must be at least 1");
  require(prediction.gap_floor > 0.0, "prediction.gap_floor must be positive");
  require(tolls.lower <= tolls.upper, "tolls.lower exceeds tolls.upper");
  require(tolls.lower <= 0.0 && tolls.upper >= 0.0, "toll bounds must admit a zero toll");
  require(tolls.delta >= 0.0, "tolls.delta must be non-negative");
  try {
    ga.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(fmt::format("ga: {}", e.what()));
  }
}

Config parse_config(std::istream& in, const std::filesystem::path& base_dir,
                    const std::vector<std::string>& overrides) {
  pt::ptree tree;
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(fmt::format("config line {}: {}", e.line(), e.message()));
  }
  for (const auto& o : overrides) {
    const auto eq = o.find('=');
    if (eq == std::string::npos || o.find('.') > eq)
      throw ConfigError(fmt::format("override '{}' is not section.key=value", o));
    tree.put(std::string(trim(o.substr(0, eq))), o.substr(eq + 1));
  }

  std::set<std::string> seen;
  const auto table = setters(base_dir, seen);
  Config c;
  bool peak_start = false;
  bool peak_end = false;
  for (const auto& [section, body] : tree) {
    if (body.empty())
      throw ConfigError(fmt::format("key '{}' appears outside any section", section));
    for (const auto& [key, node] : body) {
      const std::string full = section + "." + key;
      const auto it = table.find(full);
      if (it == table.end()) throw ConfigError(fmt::format("unknown config key '{}'", full));
      it->second(c, node.data());
      seen.insert(full);
      peak_start |= full == "time.peak_start";
      peak_end |= full == "time.peak_end";
    }
  }
  for (const char* key : {"files.network", "files.demand", "time.start", "time.end", "time.warmup_end",
                          "time.tolling_end"})
    if (!seen.contains(key)) throw ConfigError(fmt::format("missing config key '{}'", key));
  if (!peak_start) c.time.peak.begin = c.time.warmup_end;
  if (!peak_end) c.time.peak.end = c.time.tolling_end;
  if (!seen.contains("ga.batch_size")) c.ga.batch_size = c.ga.population_size;
  c.validate();
  return c;
}

Config load_config(const std::filesystem::path& path, const std::vector<std::string>& overrides) {
  std::ifstream in(path);
  if (!in) throw ConfigError(fmt::format("cannot open config file {}", path.string()));
  Config c = parse_config(in, path.parent_path(), overrides);
  c.source = path;
  return c;
}

}  // namespace tollopt
