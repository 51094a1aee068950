#include <sys/types.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cstdio>
#include <iostream>
#include <map>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <spdlog/sinks/basic_file_sink.h>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "fleetsim/config.h"
#include "fleetsim/evaluation.h"
#include "fleetsim/ingest.h"
#include "fleetsim/routing_bench.h"
#include "fleetsim/scenario_gen.h"
#include "fleetsim/simulation.h"

using namespace fleetsim;

namespace {

constexpr int kExitFault = 1;
constexpr int kExitMissingFile = 2;

void set_log_level(const std::string& level) {
  spdlog::set_level(spdlog::level::from_str(level));
}

// Logs to stderr and to <dir>/run.log.
void attach_run_log(const std::filesystem::path& dir, const std::string& level) {
  std::filesystem::create_directories(dir);
  auto console = std::make_shared<spdlog::sinks::stderr_color_sink_mt>();
  auto file = std::make_shared<spdlog::sinks::basic_file_sink_mt>((dir / "run.log").string(), true);
  auto logger = std::make_shared<spdlog::logger>("fleetsim", spdlog::sinks_init_list{console, file});
  logger->set_level(spdlog::level::from_str(level));
  spdlog::set_default_logger(logger);
}

int run_one(const ScenarioConfig& cfg) {
  const auto dir = cfg.output_dir / cfg.scenario_name;
  attach_run_log(dir, cfg.log_level);
  spdlog::info("scenario '{}' ({}, {} operators) -> {}", cfg.scenario_name, to_string(cfg.sim_flow),
               cfg.operators.size(), dir.string());
  const auto res = run_scenario(cfg);
  spdlog::info("scenario '{}': {} of {} travelers served, {:.3f} fleet km", cfg.scenario_name, res.kpi.served,
               res.kpi.total_requests, res.kpi.fleet_vkm);
  spdlog::default_logger()->flush();
  return 0;
}

int guarded(const std::function<int()>& body) {
  try {
    return body();
  } catch (const MissingFileError& e) {
    spdlog::error("{}", e.what());
    return kExitMissingFile;
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return kExitFault;
  }
}

int cmd_run(const std::string& config, const std::string& scenarios, const std::string& out, int parallel,
            std::optional<std::uint64_t> seed, const std::string& log_level) {
  std::vector<ScenarioConfig> cfgs;
  if (int rc = guarded([&] {
        cfgs = parse_config(config, scenarios.empty() ? std::nullopt : std::optional<std::filesystem::path>(scenarios));
        for (auto& c : cfgs) {
          if (!out.empty()) c.output_dir = out;
          if (seed) c.random_seed = *seed;
          if (!log_level.empty()) c.log_level = log_level;
        }
        return 0;
      }))
    return rc;

  if (parallel <= 1 || cfgs.size() <= 1) {
    int worst = 0;
    for (const auto& c : cfgs) worst = std::max(worst, guarded([&] { return run_one(c); }));
    return worst;
  }

  // One process per scenario, at most `parallel` at a time.
  std::fflush(nullptr);
  std::map<pid_t, std::string> running;
  int worst = 0;
  auto reap = [&] {
    int status = 0;
    const pid_t pid = ::wait(&status);
    if (pid < 0) return;
    const int rc = WIFEXITED(status) ? WEXITSTATUS(status) : kExitFault;
    if (rc != 0) spdlog::error("scenario '{}' exited with code {}", running[pid], rc);
    worst = std::max(worst, rc);
    running.erase(pid);
  };
  for (const auto& c : cfgs) {
    while (running.size() >= static_cast<std::size_t>(parallel)) reap();
    const pid_t pid = ::fork();
    if (pid < 0) {
      spdlog::error("fork failed for scenario '{}'", c.scenario_name);
      worst = std::max(worst, kExitFault);
      continue;
    }
    if (pid == 0) {
      const int rc = guarded([&] { return run_one(c); });
      std::fflush(nullptr);
      ::_exit(rc);
    }
    running[pid] = c.scenario_name;
  }
  while (!running.empty()) reap();
  return worst;
}

int cmd_evaluate(const std::string& dir) {
  const auto rep = evaluate(dir);
  write_standard_eval(rep, dir);
  fmt::print("total_requests,{}\nserved,{}\nserved_fraction,{:.6f}\nmean_waiting_time,{:.6f}\nfleet_vkm,{:.6f}\n",
             rep.total_requests, rep.served, rep.served_fraction, rep.mean_waiting, rep.fleet_vkm);
  return 0;
}

Network network_or_grid(const std::string& nodes, const std::string& edges, int grid) {
  if (grid > 0) return make_grid_network(GridSpec{grid, grid, 200.0, 10.0});
  if (nodes.empty() || edges.empty()) throw ValidationError("give --nodes and --edges, or --grid");
  return load_network(nodes, edges);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"fleetsim: agent-based mobility-on-demand fleet simulator"};
  app.require_subcommand(1);
  std::string log_level = "info";
  app.add_option("--log-level", log_level, "Log verbosity")
      ->check(CLI::IsMember({"trace", "debug", "info", "warn", "error"}));

  auto* run = app.add_subcommand("run", "Run all scenarios of a configuration");
  std::string config, scenarios, out;
  int parallel = 1;
  std::optional<std::uint64_t> seed;
  std::string run_log_level;
  run->add_option("--config", config, "Constants file (key,value)")->required();
  run->add_option("--scenarios", scenarios, "Scenario table, one row per scenario");
  run->add_option("--out", out, "Results root directory (overrides output_dir)");
  run->add_option("--parallel", parallel, "Scenarios run as concurrent processes")->check(CLI::PositiveNumber);
  run->add_option("--seed", seed, "Overrides random_seed of every scenario");
  run->add_option("--log-level", run_log_level, "Log verbosity")
      ->check(CLI::IsMember({"trace", "debug", "info", "warn", "error"}));

  auto* eval = app.add_subcommand("evaluate", "Recompute KPIs from a results directory");
  std::string results_dir;
  eval->add_option("results_dir", results_dir)->required();

  auto* bench = app.add_subcommand("bench-routing", "Time routing backends on one query workload");
  std::string nodes, edges;
  int grid = 0;
  std::size_t queries = 100000;
  std::uint64_t bench_seed = 1;
  bench->add_option("--nodes", nodes, "nodes.csv");
  bench->add_option("--edges", edges, "edges.csv");
  bench->add_option("--grid", grid, "Use a generated N x N grid instead of files");
  bench->add_option("--queries", queries);
  bench->add_option("--seed", bench_seed);

  auto* gen = app.add_subcommand("gen-grid", "Write a grid network with uniform demand");
  GridSpec spec;
  std::size_t requests = 500;
  double duration = 3 * 3600.0;
  std::uint64_t gen_seed = 1;
  std::string gen_out = "grid";
  gen->add_option("--rows", spec.rows)->check(CLI::PositiveNumber);
  gen->add_option("--cols", spec.cols)->check(CLI::PositiveNumber);
  gen->add_option("--edge-length", spec.edge_length, "Meters");
  gen->add_option("--speed", spec.speed, "Meters per second");
  gen->add_option("--requests", requests);
  gen->add_option("--duration", duration, "Demand horizon in seconds");
  gen->add_option("--seed", gen_seed);
  gen->add_option("--out", gen_out);

  auto* stt = app.add_subcommand("sample-tt", "Average fastest travel time between randomly drawn nodes");
  std::size_t k = 250;
  std::uint64_t stt_seed = 1;
  std::vector<double> times{0.0};
  std::string tt_factors;
  stt->add_option("--nodes", nodes)->required();
  stt->add_option("--edges", edges)->required();
  stt->add_option("--tt-factors", tt_factors, "time,factor file");
  stt->add_option("-k", k);
  stt->add_option("--seed", stt_seed);
  stt->add_option("--times", times)->delimiter(',');

  auto* ing = app.add_subcommand("ingest-nyc", "Snap taxi trips onto a network and write demand");
  std::string trips, ing_out = "demand.csv";
  IngestOptions iopt;
  ing->add_option("--trips", trips)->required();
  ing->add_option("--nodes", nodes)->required();
  ing->add_option("--edges", edges)->required();
  ing->add_option("--subsample", iopt.subsample)->check(CLI::Range(0.0, 1.0));
  ing->add_option("--seed", iopt.seed);
  ing->add_option("--margin", iopt.bbox_margin, "Bounding box margin in coordinate units");
  ing->add_option("--out", ing_out);

  CLI11_PARSE(app, argc, argv);
  set_log_level(log_level);

  if (*run) return cmd_run(config, scenarios, out, parallel, seed, run_log_level);
  return guarded([&]() -> int {
    if (*eval) return cmd_evaluate(results_dir);
    if (*bench) {
      const auto net = network_or_grid(nodes, edges, grid);
      const auto rep = benchmark_routing(net, queries, bench_seed);
      fmt::print("backend,nodes,queries,setup_s,query_s,us_per_query\n");
      for (const auto& t : rep.timings)
        fmt::print("{},{},{},{:.6f},{:.6f},{:.3f}\n", t.label(), rep.nodes, t.queries, t.setup_seconds,
                   t.query_seconds, 1e6 * t.query_seconds / static_cast<double>(std::max<std::size_t>(1, t.queries)));
      return 0;
    }
    if (*gen) {
      const auto b = write_grid_bundle(gen_out, spec, requests, 0.0, duration, gen_seed);
      fmt::print("{}\n{}\n{}\n", b.nodes_file.string(), b.edges_file.string(), b.demand_file.string());
      return 0;
    }
    if (*stt) {
      TravelTimeSources src;
      if (!tt_factors.empty()) src.factors_file = tt_factors;
      const auto net = load_network(nodes, edges, src);
      const auto rows = sample_travel_times(net, k, stt_seed, times);
      fmt::print("time,pairs,unreachable,mean_travel_time\n");
      for (const auto& r : rows) {
        if (r.pairs == 0) spdlog::warn("t={}: no reachable node pairs", r.time);
        fmt::print("{:.6f},{},{},{}\n", r.time, r.pairs, r.unreachable,
                   r.pairs > 0 ? fmt::format("{:.6f}", r.mean_travel_time) : std::string());
      }
      return 0;
    }
    if (*ing) {
      const auto net = load_network(nodes, edges);
      const auto rep = ingest_taxi_trips(trips, net, iopt);
      write_demand_csv(rep.requests, ing_out);
      spdlog::info("{} rows: {} kept, {} invalid, {} outside area, {} same node, {} not sampled", rep.rows,
                   rep.requests.size(), rep.invalid, rep.outside_area, rep.same_node, rep.not_sampled);
      return 0;
    }
    return kExitFault;
  });
}
