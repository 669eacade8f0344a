#include "cli.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <ostream>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <fmt/ostream.h>

#include "tollopt/closed_loop.hpp"
#include "tollopt/config.hpp"
#include "tollopt/report.hpp"

namespace tollopt::cli {
namespace {

namespace fs = std::filesystem;

struct RunOptions {
  std::string config;
  std::string out;
  std::size_t jobs = 1;
  std::vector<std::string> sets;
  bool quiet = false;
};

struct CompareOptions {
  std::string peak;
  std::string baseline;
  std::string treatment;
  std::string out;
};

struct GridOptions {
  std::string config;
  std::size_t levels = 5;
  std::size_t jobs = 1;
  std::vector<std::string> sets;
  std::string out;
};

std::string level_tag(double level) { return fmt::format("{:g}", level); }

void write_file(const fs::path& path, const auto& writer) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error(fmt::format("cannot write {}", path.string()));
  writer(f);
  if (!f) throw std::runtime_error(fmt::format("error writing {}", path.string()));
}

Config load(const std::string& path, const std::vector<std::string>& sets, std::size_t jobs) {
  Config c = load_config(path, sets);
  c.ga.jobs = std::max<std::size_t>(jobs, 1);
  return c;
}

int do_run(const RunOptions& o, std::ostream& err) {
  const Config config = load(o.config, o.sets, o.jobs);
  const ScenarioInputs inputs = load_inputs(config);
  const fs::path out(o.out);
  fs::create_directories(out);
  auto log = [&](const std::string& msg) {
    if (!o.quiet) fmt::print(err, "{}\n", msg);
  };

  const auto& scenarios = config.scenario.scenarios;
  std::vector<double> static_tolls;
  if (std::find(scenarios.begin(), scenarios.end(), Scenario::Static) != scenarios.end()) {
    log("optimizing static tolls");
    const auto result = compute_static_tolls(inputs, config);
    static_tolls = result.best_genes;
    write_file(out / "static_tolls.csv", [&](std::ostream& f) {
      fmt::print(f, "link,toll\n");
      for (std::size_t g = 0; g < static_tolls.size(); ++g)
        fmt::print(f, "{},{}\n", inputs.network.link(inputs.network.gantry_link(g)).id, static_tolls[g]);
    });
    write_file(out / "static_trace.csv", [&](std::ostream& f) {
      fmt::print(f, "generation,best,mean,elapsed\n");
      for (const auto& r : result.trace) fmt::print(f, "{},{},{},{:.3f}\n", r.generation, r.best, r.mean, r.elapsed);
    });
  }

  bool incomplete = false;
  std::vector<Comparison> comparisons;
  for (double level : config.scenario.demand_levels) {
    std::map<Scenario, ScenarioRun> runs;
    for (Scenario s : scenarios) {
      log(fmt::format("running {} at demand level {}", to_string(s), level_tag(level)));
      ScenarioRun run = run_scenario(inputs, config, s, level, static_tolls);
      const std::string tag = fmt::format("{}_{}", to_string(s), level_tag(level));
      for (const auto& rep : run.replications) {
        const std::string rtag = fmt::format("{}_r{}", tag, rep.replication);
        write_file(out / fmt::format("trips_{}.csv", rtag), [&](std::ostream& f) { write_trips_csv(f, rep.trips); });
        write_file(out / fmt::format("cycles_{}.csv", rtag),
                   [&](std::ostream& f) { write_cycles_csv(f, rep.cycles); });
        write_file(out / fmt::format("trace_{}.csv", rtag), [&](std::ostream& f) { write_trace_csv(f, rep.cycles); });
        write_file(out / fmt::format("guidance_{}.csv", rtag),
                   [&](std::ostream& f) { write_guidance(f, rep.world_guidance, inputs.network); });
        for (const auto& c : rep.cycles)
          if (!c.note.empty()) log(fmt::format("{} cycle {}: {}", rtag, c.cycle, c.note));
        if (!rep.complete) {
          incomplete = true;
          fmt::print(err, "error: {} incomplete: {}\n", rtag, rep.error);
        }
        if (rep.stranded > 0) log(fmt::format("{}: {} vehicles still in the network after the drain", rtag, rep.stranded));
      }
      write_file(out / fmt::format("series_{}.csv", tag), [&](std::ostream& f) { write_series_csv(f, run.series); });
      runs.emplace(s, std::move(run));
    }
    auto add = [&](Scenario treatment, Scenario baseline) {
      if (runs.contains(treatment) && runs.contains(baseline))
        comparisons.push_back(compare_runs(runs.at(baseline), runs.at(treatment), config));
    };
    add(Scenario::Predictive, Scenario::NoToll);
    add(Scenario::Predictive, Scenario::Static);
    add(Scenario::Static, Scenario::NoToll);
  }
  write_file(out / "report.csv", [&](std::ostream& f) { write_comparisons_csv(f, comparisons); });
  return incomplete ? kExitRuntime : kExitOk;
}

int do_compare(const CompareOptions& o, std::ostream& out) {
  const TimeWindow peak = parse_window(o.peak);
  const auto a = load_series_csv(o.baseline);
  const auto b = load_series_csv(o.treatment);
  const auto rows = compare_series(a, b, peak);
  if (o.out.empty()) {
    write_window_comparisons_csv(out, rows);
  } else {
    write_file(o.out, [&](std::ostream& f) { write_window_comparisons_csv(f, rows); });
  }
  return kExitOk;
}

int do_validate(const RunOptions& o, std::ostream& out) {
  const Config config = load(o.config, o.sets, 1);
  const ScenarioInputs in = load_inputs(config);
  std::size_t paths = 0;
  for (const auto& [od, set] : in.paths.sets()) paths += set.size();
  fmt::print(out, "nodes {}\nlinks {}\ngantries {}\nod_pairs {}\npaths {}\nintervals {}\ndemand {}\n",
             in.network.node_count(), in.network.link_count(), in.network.gantry_count(), in.historical.pair_count(),
             paths, config.time.interval_count(), in.historical.total());
  fmt::print(out, "ok\n");
  return kExitOk;
}

int do_grid(const GridOptions& o, std::ostream& out) {
  const Config config = load(o.config, o.sets, o.jobs);
  const ScenarioInputs inputs = load_inputs(config);
  const std::size_t m = inputs.network.gantry_count();
  if (m == 0) throw ConfigError("the network has no gantries to search over");
  const std::vector<double> lower(m, config.tolls.lower);
  const std::vector<double> upper(m, config.tolls.upper);
  const auto evaluate = static_evaluator(inputs, config);
  GridResult grid;
  try {
    grid = grid_search(lower, upper, o.levels,
                       [&](std::span<const double> g) { return evaluate(std::vector<double>(g.begin(), g.end())); },
                       config.ga.jobs);
  } catch (const GridTooLarge& e) {
    throw ConfigError(e.what());
  }
  auto emit = [&](std::ostream& f) {
    fmt::print(f, "row");
    for (std::size_t g = 0; g < m; ++g) fmt::print(f, ",toll_{}", inputs.network.link(inputs.network.gantry_link(g)).id);
    fmt::print(f, ",objective,argmin\n");
    for (std::size_t r = 0; r < grid.rows.size(); ++r) {
      fmt::print(f, "{}", r);
      for (double x : grid.rows[r].genes) fmt::print(f, ",{}", x);
      fmt::print(f, ",{},{}\n", grid.rows[r].objective, r == grid.argmin ? 1 : 0);
    }
  };
  if (o.out.empty()) {
    emit(out);
  } else {
    write_file(o.out, emit);
  }
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Rolling-horizon predictive toll optimization"};
  app.require_subcommand(1);

  RunOptions run_opts;
  auto* run_cmd = app.add_subcommand("run", "Run every configured scenario and demand level");
  run_cmd->add_option("--config", run_opts.config, "Scenario config (INI)")->required();
  run_cmd->add_option("--out", run_opts.out, "Output directory")->required();
  run_cmd->add_option("--jobs", run_opts.jobs, "Concurrent evaluations per batch")->check(CLI::PositiveNumber);
  run_cmd->add_option("--set", run_opts.sets, "Override section.key=value (repeatable)");
  run_cmd->add_flag("--quiet", run_opts.quiet, "Suppress progress messages");

  CompareOptions cmp_opts;
  auto* cmp_cmd = app.add_subcommand("compare", "Compare two series reports (first is the baseline)");
  cmp_cmd->add_option("--peak", cmp_opts.peak, "Peak window HH:MM-HH:MM")->required();
  cmp_cmd->add_option("baseline", cmp_opts.baseline, "Baseline series CSV")->required()->check(CLI::ExistingFile);
  cmp_cmd->add_option("treatment", cmp_opts.treatment, "Treatment series CSV")->required()->check(CLI::ExistingFile);
  cmp_cmd->add_option("--out", cmp_opts.out, "Write the table here instead of stdout");

  RunOptions val_opts;
  auto* val_cmd = app.add_subcommand("validate", "Load and check a config and its input files");
  val_cmd->add_option("--config", val_opts.config, "Scenario config (INI)")->required();
  val_cmd->add_option("--set", val_opts.sets, "Override section.key=value (repeatable)");

  GridOptions grid_opts;
  auto* grid_cmd = app.add_subcommand("grid-oracle", "Evaluate every static toll vector on a grid");
  grid_cmd->add_option("--config", grid_opts.config, "Scenario config (INI)")->required();
  grid_cmd->add_option("--levels", grid_opts.levels, "Grid points per gantry")->check(CLI::PositiveNumber);
  grid_cmd->add_option("--jobs", grid_opts.jobs, "Concurrent evaluations")->check(CLI::PositiveNumber);
  grid_cmd->add_option("--set", grid_opts.sets, "Override section.key=value (repeatable)");
  grid_cmd->add_option("--out", grid_opts.out, "Write the table here instead of stdout");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kExitUsage;
  }

  try {
    if (*run_cmd) return do_run(run_opts, err);
    if (*cmp_cmd) return do_compare(cmp_opts, out);
    if (*val_cmd) return do_validate(val_opts, out);
    if (*grid_cmd) return do_grid(grid_opts, out);
  } catch (const ConfigError& e) {
    fmt::print(err, "error: {}\n", e.what());
    return kExitUsage;
  } catch (const std::exception& e) {
    fmt::print(err, "error: {}\n", e.what());
    return kExitRuntime;
  }
  return kExitUsage;
}

}  // namespace tollopt::cli
