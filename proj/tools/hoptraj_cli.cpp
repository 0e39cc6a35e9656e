#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>

#include "hoptraj/bench.hpp"
#include "hoptraj/csv.hpp"
#include "hoptraj/scenario_io.hpp"
#include "hoptraj/simulation.hpp"

namespace {

using namespace hoptraj;

void print_report(const char* label, const RmseReport& r) {
  std::printf("%s: rmse_pos = %.6f m, rmse_vel = %.6f m/s over %zu aerial ticks\n", label,
              r.rmse_pos, r.rmse_vel, r.n_ticks);
  for (const auto& h : r.per_hop)
    std::printf("  hop %d: rmse_pos = %.6f m, rmse_vel = %.6f m/s (%zu ticks)\n", h.hop,
                h.rmse_pos, h.rmse_vel, h.ticks);
}

void write_outputs(const TrajectoryLog& log, const RmseReport& report,
                   const std::string& dir, const std::string& suffix) {
  std::filesystem::create_directories(dir);
  const auto path = [&](const std::string& base) {
    return (std::filesystem::path(dir) / (base + suffix)).string();
  };
  emit_csv(log, path("log") + ".csv");
  emit_plot_data(log, dir);
  write_text_file(path("rmse") + ".json", rmse_to_json(report));
  save_trajectories(log, path("trajectories") + ".json");
}

int run_command(const std::string& scenario_path, const std::string& drag_mode,
                const std::string& out_dir, double dt_control_override,
                std::int64_t seed_override) {
  Scenario sc = load_scenario(scenario_path);
  if (dt_control_override > 0.0) {
    sc.dt_control = dt_control_override;
    sc.dt_physics = std::min(sc.dt_physics, dt_control_override);
  }
  if (seed_override >= 0) sc.seed = std::uint64_t(seed_override);

  if (drag_mode == "both") {
    const DragComparison cmp = compare_drag(sc);
    print_report("drag compensation ON ", cmp.comp_on);
    print_report("drag compensation OFF", cmp.comp_off);
    if (!out_dir.empty()) {
      const TrajectoryLog on = run_scenario(sc, DragCompOverride::On);
      const TrajectoryLog off = run_scenario(sc, DragCompOverride::Off);
      write_outputs(on, cmp.comp_on, out_dir, "_comp_on");
      write_outputs(off, cmp.comp_off, out_dir, "_comp_off");
    }
    return 0;
  }

  const DragCompOverride mode = drag_mode == "on"    ? DragCompOverride::On
                                : drag_mode == "off" ? DragCompOverride::Off
                                                     : DragCompOverride::PerPlan;
  const TrajectoryLog log = run_scenario(sc, mode);
  for (const auto& w : log.warnings) std::fprintf(stderr, "warning: %s\n", w.c_str());
  const RmseReport report = rmse(log);
  print_report(sc.name.c_str(), report);
  for (const auto& h : log.hops)
    if (h.completed)
      std::printf("  hop %d touchdown: attitude error %.4f deg, position error %.4f m\n",
                  h.index, h.td_att_err_deg, h.td_pos_err);
  std::printf("hops completed: %zu; Delta V at stance:", log.hops.size());
  for (const auto& h : log.hops)
    if (h.completed && std::isfinite(h.delta_V)) std::printf(" %.3e", h.delta_V);
  std::printf("\n");
  if (!out_dir.empty()) write_outputs(log, report, out_dir, "");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"hopping-robot trajectory generation and tracking simulator"};
  app.require_subcommand(1);

  std::string scenario_path, out_dir;
  std::string drag_mode = "scenario";
  double dt_control = -1.0;
  std::int64_t seed = -1;
  auto* run = app.add_subcommand("run", "run a scenario file");
  run->add_option("scenario", scenario_path, "scenario JSON file")->required();
  run->add_option("--drag-comp", drag_mode, "on|off|both (default: per-plan flags)")
      ->check(CLI::IsMember({"on", "off", "both", "scenario"}));
  run->add_option("--out", out_dir, "output directory for CSV/JSON artifacts");
  run->add_option("--dt-control", dt_control, "override the control period (s)");
  run->add_option("--seed", seed, "override the scenario seed");

  std::string log_path;
  auto* rmse_cmd = app.add_subcommand("rmse", "recompute RMSE from a log CSV");
  rmse_cmd->add_option("log", log_path, "log CSV produced by `run`")->required();

  std::string bench_params;
  int bench_iters = 1000;
  bool bench_cache = false;
  auto* bench = app.add_subcommand("bench", "trajectory-generation latency benchmark");
  bench->add_option("--params", bench_params, "params JSON (default: built-in nominal)");
  bench->add_option("--iters", bench_iters, "iterations per trajectory type");
  bench->add_flag("--cache", bench_cache, "reuse cached factorizations");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) return run_command(scenario_path, drag_mode, out_dir, dt_control, seed);

    if (*rmse_cmd) {
      const TrajectoryLog log = parse_csv(log_path);
      print_report(log_path.c_str(), rmse(log));
      return 0;
    }

    if (*bench) {
      RobotParamsd params;
      if (!bench_params.empty()) {
        params = load_params(bench_params);
      } else {
        params.m_r = 1.02;
        params.I_r = Vec3d(0.011, 0.012, 0.021);
        params.C_T = 0.04 * Mat3d::Identity();
        params.C_R = 1e-4 * Mat3d::Identity();
      }
      const auto results = bench_make_hop(params, bench_iters, bench_cache);
      for (const auto& r : results)
        std::printf("%s: median %.0f ns, p99 %.0f ns (%d iters)%s\n", to_string(r.type),
                    r.median_ns, r.p99_ns, r.iters, bench_cache ? " [cached]" : "");
      return 0;
    }
  } catch (const hoptraj::Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
