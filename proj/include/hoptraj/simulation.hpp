#ifndef HOPTRAJ_SIMULATION_HPP
#define HOPTRAJ_SIMULATION_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "hoptraj/controller.hpp"
#include "hoptraj/hop_cycle.hpp"
#include "hoptraj/trajectory.hpp"

namespace hoptraj {

/// One hop of the plan: trajectory type, touchdown spec, timing, drag flag
/// and optional null-space extras.
struct HopPlanEntry {
  TrajectoryType type{TrajectoryType::T3};
  TouchdownSpecd td;
  double t_m{1.75};
  double delta_t{0.05};
  bool drag_comp{true};
  std::vector<ExtraConstraintd> extras;
  double u1_lo_factor{0.9};  // U1_LO = factor * m_r * g
};

struct Scenario {
  std::string name;
  RobotParamsd params;
  Gainsd gains;
  std::vector<Surface> surfaces;

  Vec3d init_position = Vec3d::Zero();
  Vec3d init_eta = Vec3d::Zero();
  double init_speed{5.0};  // along the initial body z-axis
  Vec12<double> perturbation = Vec12<double>::Zero();  // applied at first liftoff

  std::vector<HopPlanEntry> plan;
  bool cycle_plan{true};

  double total_time{6.0};
  double dt_control{1e-3};
  double dt_physics{1e-3};

  StanceModel stance;
  bool gamma_enabled{false};
  double gamma_mu{0.1};

  double td_accept_window{0.03};  // early-contact tolerance around t_m
  std::uint64_t seed{0};

  void validate() const;
};

enum class DragCompOverride { PerPlan, On, Off };

struct TickRecord {
  double t{0};
  int hop{0};
  HopPhase phase{HopPhase::Aerial};
  FlatStated desired;
  State12d actual;
  ControlInputd u;
  bool saturated{false};
  double V{0};
  double V_dot_design{0};
};

struct HopRecord {
  int index{0};
  TrajectoryType type{TrajectoryType::T3};
  bool drag_comp{true};
  double t_lo{0};
  double t_td{0};
  bool completed{false};
  bool truncated_by_contact{false};
  std::array<Keyframed, 3> keyframes{};
  Vec3d eta_td = Vec3d::Zero();      // measured at touchdown
  Vec3d eta_lo_next = Vec3d::Zero();  // measured after the stance map
  Vec3d td_pos_desired = Vec3d::Zero();
  Vec3d td_pos_actual = Vec3d::Zero();
  double td_att_err_deg{0};
  double td_pos_err{0};
  double V_td{0};
  double V_lo_next{std::numeric_limits<double>::quiet_NaN()};
  double delta_V{std::numeric_limits<double>::quiet_NaN()};  // V_LO - V_TD across stance
  double gamma_phi{1.0};
  double gamma_theta{1.0};
};

struct TrajectoryLog {
  std::string scenario_name;
  std::vector<TickRecord> ticks;
  std::vector<HopRecord> hops;
  std::vector<PhaseTransition> transitions;
  std::vector<std::string> warnings;
  std::vector<PolynomialTrajectoryd> trajectories;
};

TrajectoryLog run_scenario(const Scenario& scenario,
                           DragCompOverride drag = DragCompOverride::PerPlan);

struct RmseReport {
  double rmse_pos{0};
  double rmse_vel{0};
  Vec3d rmse_pos_axis = Vec3d::Zero();
  Vec3d rmse_vel_axis = Vec3d::Zero();
  struct PerHop {
    int hop{0};
    double rmse_pos{0};
    double rmse_vel{0};
    std::size_t ticks{0};
  };
  std::vector<PerHop> per_hop;
  bool drag_comp{true};
  std::size_t n_ticks{0};
};

/// Root-mean-square of the desired-minus-actual position/velocity error
/// norms over aerial ticks; stance ticks are excluded.
RmseReport rmse(const TrajectoryLog& log);

struct DragComparison {
  RmseReport comp_on;
  RmseReport comp_off;
};

/// Run the scenario twice, with the desired-side drag terms on and off
/// (plant drag always on).  HOPTRAJ_THREADS caps the worker threads.
DragComparison compare_drag(const Scenario& scenario);

}  // namespace hoptraj

#endif  // HOPTRAJ_SIMULATION_HPP
