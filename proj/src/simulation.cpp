#include "hoptraj/simulation.hpp"

#include <cmath>
#include <cstdlib>
#include <future>
#include <sstream>
#include <thread>

namespace hoptraj {

void Scenario::validate() const {
  params.validate();
  gains.validate();
  stance.validate();
  if (!(total_time > 0.0)) throw Error("Scenario: total_time must be > 0");
  if (!(dt_control > 0.0)) throw Error("Scenario: dt_control must be > 0");
  if (!(dt_physics > 0.0 && dt_physics <= dt_control + 1e-15))
    throw Error("Scenario: require 0 < dt_physics <= dt_control");
  if (plan.empty()) throw Error("Scenario: hop plan is empty");
  for (const auto& h : plan) {
    h.td.validate();
    if (!(h.t_m > 0.0 && h.delta_t > 0.0 && h.delta_t < h.t_m))
      throw Error("Scenario: hop plan requires 0 < delta_t < t_m");
  }
}

namespace {

double rotation_angle_deg(const Mat3d& Ra, const Mat3d& Rb) {
  const double c = ((Ra.transpose() * Rb).trace() - 1.0) / 2.0;
  return std::acos(std::clamp(c, -1.0, 1.0)) * 180.0 / EIGEN_PI;
}

struct ContactHit {
  double tau;  // trajectory time of contact
};

}  // namespace

TrajectoryLog run_scenario(const Scenario& scenario, DragCompOverride drag) {
  scenario.validate();
  const RobotParamsd& params = scenario.params;
  const Gainsd& gains = scenario.gains;

  TrajectoryLog log;
  log.scenario_name = scenario.name;

  State12d state;
  state.r_cm = scenario.init_position;
  state.eta = scenario.init_eta;
  state.v = scenario.init_speed * euler_to_rotation(scenario.init_eta).col(2);

  GammaAdapter gamma;
  gamma.mu = scenario.gamma_mu;

  const int nsub = std::max(1, int(std::llround(scenario.dt_control / scenario.dt_physics)));
  const double h_sub = scenario.dt_control / nsub;

  double t = 0.0;
  int hop = 0;
  int pending_hybrid = -1;  // hop index awaiting its V_LO at the next liftoff

  while (t < scenario.total_time - 1e-12) {
    const std::size_t plan_idx =
        scenario.cycle_plan ? std::size_t(hop) % scenario.plan.size()
                            : std::min(std::size_t(hop), scenario.plan.size() - 1);
    const HopPlanEntry& entry = scenario.plan[plan_idx];
    const bool comp = drag == DragCompOverride::PerPlan ? entry.drag_comp
                                                        : drag == DragCompOverride::On;

    TouchdownSpecd td = entry.td;
    if (scenario.gamma_enabled) {
      const Eigen::Vector2d adj = apply_gamma(gamma, {td.eta_d(0), td.eta_d(1)});
      td.eta_d(0) = adj(0);
      td.eta_d(1) = adj(1);
    }

    const double u1_lo = entry.u1_lo_factor * params.m_r * params.g;
    PolynomialTrajectoryd traj;
    try {
      traj = make_hop_trajectory(params, state, u1_lo, entry.type, td, entry.t_m,
                                 entry.delta_t, comp, entry.extras);
    } catch (const Error& e) {
      std::ostringstream os;
      os << "hop " << hop << ": trajectory generation failed: " << e.what();
      throw GenerationError(os.str(), t);
    }
    log.trajectories.push_back(traj);
    log.transitions.push_back({HopPhase::Aerial, t});

    HopRecord rec;
    rec.index = hop;
    rec.type = entry.type;
    rec.drag_comp = comp;
    rec.t_lo = t;
    rec.keyframes = make_hop_keyframes(params, state, u1_lo, entry.type, td, entry.t_m,
                                       entry.delta_t, comp);
    rec.gamma_phi = gamma.gamma_phi;
    rec.gamma_theta = gamma.gamma_theta;

    if (hop == 0 && scenario.perturbation.cwiseAbs().maxCoeff() > 0.0)
      state = State12d::from_vector(state.to_vector() + scenario.perturbation);

    // hybrid bookkeeping: V at this liftoff against the new trajectory
    {
      const FlatStated des0 =
          flat_to_state(params, sample_flat(traj, 0.0), nullptr, comp);
      const double V_lo = compute_errors(gains, state, des0).V;
      if (pending_hybrid >= 0) {
        auto& prev = log.hops[std::size_t(pending_hybrid)];
        prev.V_lo_next = V_lo;
        prev.delta_V = hybrid_check(prev.V_td, V_lo).delta_V;
      }
    }

    // aerial phase
    FlatStated prev_des;
    bool have_prev = false;
    std::optional<ContactHit> contact;
    bool out_of_time = false;
    int k = 0;
    for (;; ++k) {
      const double tau = k * scenario.dt_control;
      if (tau >= entry.t_m - 1e-12) break;
      if (t + tau >= scenario.total_time - 1e-12) {
        out_of_time = true;
        break;
      }

      FlatStated des;
      try {
        const FlatSampled s = sample_flat(traj, tau);
        des = flat_to_state(params, s, have_prev ? &prev_des : nullptr, comp);
      } catch (const SingularityError& e) {
        std::ostringstream os;
        os << "hop " << hop << " at t = " << (t + tau) << " s: " << e.what();
        throw SingularityError(os.str(), t + tau);
      }
      const auto ctl = control(params, gains, state, des);
      const auto sat = project_to_rotor_limits(params, ctl.u);
      const auto rate = lyapunov_rate(gains, ctl.errors);

      TickRecord tick;
      tick.t = t + tau;
      tick.hop = hop;
      tick.phase = HopPhase::Aerial;
      tick.desired = des;
      tick.actual = state;
      tick.u = sat.u;
      tick.saturated = sat.saturated || ctl.u1_clamped;
      tick.V = rate.V;
      tick.V_dot_design = rate.V_dot_design;
      log.ticks.push_back(tick);

      // integrate the control period, watching for surface contact
      for (int sub = 0; sub < nsub && !contact; ++sub) {
        const double tau_sub = tau + sub * h_sub;
        const State12d before = state;
        try {
          state = integrate_step(params, state, sat.u, h_sub);
        } catch (const SingularityError& e) {
          std::ostringstream os;
          os << "hop " << hop << " plant state at t = " << (t + tau_sub) << " s: "
             << e.what();
          throw SingularityError(os.str(), t + tau_sub);
        }
        for (const Surface& surf : scenario.surfaces) {
          const auto ev = detect_touchdown(before, tau_sub, state, tau_sub + h_sub, surf,
                                           scenario.stance.foot_len);
          if (ev) {
            const double tau_hit = std::min(ev->t, entry.t_m);
            if (tau_hit > tau_sub + 1e-12)  // re-integrate the partial step
              state = integrate_step(params, before, sat.u, tau_hit - tau_sub);
            else
              state = before;
            contact = ContactHit{tau_hit};
            break;
          }
        }
      }
      prev_des = des;
      have_prev = true;
      if (contact) break;
    }

    if (out_of_time) {
      log.hops.push_back(rec);
      t = scenario.total_time;
      break;
    }

    const double tau_td = contact ? contact->tau : entry.t_m;
    if (contact && tau_td < entry.t_m - scenario.td_accept_window) {
      std::ostringstream os;
      os << "hop " << hop << ": surface contact at " << tau_td << " s, "
         << (entry.t_m - tau_td) << " s before the TD keyframe; hop truncated";
      log.warnings.push_back(os.str());
      rec.truncated_by_contact = true;
    }

    const FlatStated des_td = flat_to_state(params, sample_flat(traj, tau_td),
                                            have_prev ? &prev_des : nullptr, comp);
    rec.completed = true;
    rec.t_td = t + tau_td;
    rec.eta_td = state.eta;
    rec.td_pos_actual = state.r_cm;
    rec.td_pos_desired = des_td.x_d.r_cm;
    rec.td_pos_err = (state.r_cm - des_td.x_d.r_cm).norm();
    rec.td_att_err_deg = rotation_angle_deg(euler_to_rotation(state.eta), des_td.R_BW);
    rec.V_td = compute_errors(gains, state, des_td).V;

    // discrete stance
    log.transitions.push_back({HopPhase::Stance, rec.t_td});
    State12d x_lo;
    try {
      x_lo = stance_map(params, state, scenario.stance);
    } catch (const SingularityError& e) {
      std::ostringstream os;
      os << "hop " << hop << " stance map at t = " << rec.t_td << " s: " << e.what();
      throw SingularityError(os.str(), rec.t_td);
    }
    if (scenario.gamma_enabled) {
      gamma = update_gamma(gamma, state.eta(0), x_lo.eta(0), TiltAxis::Roll);
      gamma = update_gamma(gamma, state.eta(1), x_lo.eta(1), TiltAxis::Pitch);
    }
    rec.eta_lo_next = x_lo.eta;

    TickRecord stance_tick;
    stance_tick.t = rec.t_td;
    stance_tick.hop = hop;
    stance_tick.phase = HopPhase::Stance;
    stance_tick.desired = des_td;
    stance_tick.actual = x_lo;
    stance_tick.V = rec.V_td;
    stance_tick.V_dot_design = lyapunov_rate(gains, compute_errors(gains, state, des_td))
                                   .V_dot_design;
    log.ticks.push_back(stance_tick);

    log.hops.push_back(rec);
    pending_hybrid = hop;
    state = x_lo;
    t = rec.t_td + scenario.stance.t_s;
    ++hop;
  }
  return log;
}

RmseReport rmse(const TrajectoryLog& log) {
  RmseReport r;
  Vec3d pos_sq = Vec3d::Zero(), vel_sq = Vec3d::Zero();
  std::size_t n = 0;
  int cur_hop = -1;
  Vec3d hop_pos = Vec3d::Zero(), hop_vel = Vec3d::Zero();
  std::size_t hop_n = 0;
  const auto flush_hop = [&]() {
    if (hop_n == 0) return;
    r.per_hop.push_back({cur_hop, std::sqrt(hop_pos.sum() / double(hop_n)),
                         std::sqrt(hop_vel.sum() / double(hop_n)), hop_n});
    hop_pos.setZero();
    hop_vel.setZero();
    hop_n = 0;
  };

  for (const auto& tick : log.ticks) {
    if (tick.phase != HopPhase::Aerial) continue;
    if (tick.hop != cur_hop) {
      flush_hop();
      cur_hop = tick.hop;
    }
    const Vec3d ep = tick.desired.x_d.r_cm - tick.actual.r_cm;
    const Vec3d ev = tick.desired.x_d.v - tick.actual.v;
    pos_sq += ep.cwiseProduct(ep);
    vel_sq += ev.cwiseProduct(ev);
    hop_pos += ep.cwiseProduct(ep);
    hop_vel += ev.cwiseProduct(ev);
    ++n;
    ++hop_n;
  }
  flush_hop();
  if (n == 0) throw Error("rmse: log contains no aerial ticks");

  r.n_ticks = n;
  r.rmse_pos = std::sqrt(pos_sq.sum() / double(n));
  r.rmse_vel = std::sqrt(vel_sq.sum() / double(n));
  r.rmse_pos_axis = (pos_sq / double(n)).cwiseSqrt();
  r.rmse_vel_axis = (vel_sq / double(n)).cwiseSqrt();
  if (!log.hops.empty()) r.drag_comp = log.hops.front().drag_comp;
  return r;
}

namespace {

int worker_thread_cap() {
  if (const char* env = std::getenv("HOPTRAJ_THREADS")) {
    const int n = std::atoi(env);
    if (n >= 1) return n;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : int(hw);
}

}  // namespace

DragComparison compare_drag(const Scenario& scenario) {
  DragComparison out;
  if (worker_thread_cap() >= 2) {
    auto fut = std::async(std::launch::async, [&] {
      return rmse(run_scenario(scenario, DragCompOverride::On));
    });
    out.comp_off = rmse(run_scenario(scenario, DragCompOverride::Off));
    out.comp_on = fut.get();
  } else {
    out.comp_on = rmse(run_scenario(scenario, DragCompOverride::On));
    out.comp_off = rmse(run_scenario(scenario, DragCompOverride::Off));
  }
  out.comp_on.drag_comp = true;
  out.comp_off.drag_comp = false;
  return out;
}

}  // namespace hoptraj
