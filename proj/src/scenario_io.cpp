#include "hoptraj/scenario_io.hpp"

#include <json.hpp>

#include <filesystem>
#include <fstream>

namespace hoptraj {

using nlohmann::json;

namespace {

json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open: " + path);
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw Error("JSON parse error in " + path + ": " + e.what());
  }
}

Vec3d to_vec3(const json& j, const char* what) {
  if (!j.is_array() || j.size() != 3) throw Error(std::string(what) + ": expected 3 numbers");
  return Vec3d(j[0].get<double>(), j[1].get<double>(), j[2].get<double>());
}

Mat3d to_mat3(const json& j, const char* what) {
  if (!j.is_array() || j.size() != 3) throw Error(std::string(what) + ": expected 3x3 array");
  Mat3d m;
  for (int r = 0; r < 3; ++r) {
    const auto& row = j[size_t(r)];
    if (!row.is_array() || row.size() != 3)
      throw Error(std::string(what) + ": expected 3x3 array");
    for (int c = 0; c < 3; ++c) m(r, c) = row[size_t(c)].get<double>();
  }
  return m;
}

TrajectoryType parse_type(const std::string& s) {
  if (s == "T1") return TrajectoryType::T1;
  if (s == "T2") return TrajectoryType::T2;
  if (s == "T3") return TrajectoryType::T3;
  throw Error("unknown trajectory type: " + s);
}

FlatOutput parse_output(const std::string& s) {
  if (s == "x") return FlatOutput::X;
  if (s == "y") return FlatOutput::Y;
  if (s == "z") return FlatOutput::Z;
  if (s == "psi") return FlatOutput::Psi;
  throw Error("unknown flat output: " + s);
}

void read_gains(const json& j, Gainsd& g) {
  const auto opt = [&](const char* key, double& field) {
    if (j.contains(key)) field = j.at(key).get<double>();
  };
  opt("kp_x", g.kp_x);
  opt("kd_x", g.kd_x);
  opt("kp_y", g.kp_y);
  opt("kd_y", g.kd_y);
  opt("kp_z", g.kp_z);
  opt("kd_z", g.kd_z);
  opt("kp_phi", g.kp_phi);
  opt("kd_phi", g.kd_phi);
  opt("kp_theta", g.kp_theta);
  opt("kd_theta", g.kd_theta);
  opt("kp_psi", g.kp_psi);
  opt("kd_psi", g.kd_psi);
  opt("kU1", g.kU1);
  opt("kU2", g.kU2);
  opt("kU3", g.kU3);
  opt("kU4", g.kU4);
}

}  // namespace

RobotParamsd load_params(const std::string& path) {
  const json j = load_json_file(path);
  RobotParamsd p;
  p.m_r = j.at("m_r").get<double>();
  p.I_r = to_vec3(j.at("I_r"), "I_r");
  p.g = j.at("g").get<double>();
  p.zeta_t = j.at("zeta_t").get<double>();
  p.zeta_d = j.at("zeta_d").get<double>();
  p.L_m = j.at("L_m").get<double>();
  p.L_t = j.contains("L_t") ? j.at("L_t").get<double>() : p.L_m;
  p.C_T = to_mat3(j.at("C_T"), "C_T");
  p.C_R = to_mat3(j.at("C_R"), "C_R");
  p.omega_rotor_max = j.at("omega_rotor_max").get<double>();
  p.validate();
  return p;
}

Scenario load_scenario(const std::string& path) {
  const json j = load_json_file(path);
  Scenario sc;
  sc.name = j.value("name", std::filesystem::path(path).stem().string());

  const auto params_path =
      std::filesystem::path(path).parent_path() / j.at("params_file").get<std::string>();
  sc.params = load_params(params_path.string());

  if (j.contains("gains")) read_gains(j.at("gains"), sc.gains);

  if (j.contains("surfaces"))
    for (const auto& s : j.at("surfaces")) {
      const std::string kind = s.at("kind").get<std::string>();
      if (kind == "ground")
        sc.surfaces.push_back(Surface::ground(s.at("z0").get<double>()));
      else if (kind == "wall")
        sc.surfaces.push_back(Surface::wall(to_vec3(s.at("point"), "wall point"),
                                            to_vec3(s.at("inward_normal"), "wall normal")));
      else
        throw Error("unknown surface kind: " + kind);
    }

  const auto& init = j.at("initial");
  sc.init_position = to_vec3(init.at("position"), "initial position");
  sc.init_eta = to_vec3(init.at("eta"), "initial eta");
  sc.init_speed = init.at("speed").get<double>();

  if (j.contains("perturbation")) {
    const auto& p = j.at("perturbation");
    if (!p.is_array() || p.size() != 12) throw Error("perturbation: expected 12 numbers");
    for (int i = 0; i < 12; ++i) sc.perturbation(i) = p[size_t(i)].get<double>();
  }

  for (const auto& h : j.at("plan")) {
    HopPlanEntry e;
    e.type = parse_type(h.at("type").get<std::string>());
    const auto& td = h.at("td");
    e.td.position = to_vec3(td.at("position"), "td position");
    e.td.eta_d = to_vec3(td.at("eta"), "td eta");
    e.td.v_td = td.at("v_td").get<double>();
    if (td.contains("u1_td"))
      e.td.U1_td = td.at("u1_td").get<double>();
    else
      e.td.U1_td = td.value("u1_td_factor", 0.2) * sc.params.m_r * sc.params.g;
    e.t_m = h.at("t_m").get<double>();
    e.delta_t = h.at("delta_t").get<double>();
    e.drag_comp = h.value("drag_comp", true);
    e.u1_lo_factor = h.value("u1_lo_factor", 0.9);
    if (h.contains("extras"))
      for (const auto& x : h.at("extras"))
        e.extras.push_back({x.at("t").get<double>(),
                            parse_output(x.at("output").get<std::string>()),
                            x.at("k").get<int>(), x.at("value").get<double>()});
    sc.plan.push_back(std::move(e));
  }

  sc.cycle_plan = j.value("cycle_plan", true);
  sc.total_time = j.at("total_time").get<double>();
  sc.dt_control = j.value("dt_control", 1e-3);
  sc.dt_physics = j.value("dt_physics", sc.dt_control);

  if (j.contains("stance")) {
    const auto& s = j.at("stance");
    sc.stance.eta_e = s.value("eta_e", 0.9);
    sc.stance.t_s = s.value("t_s", 0.08);
    sc.stance.apply_gravity_torque = s.value("apply_gravity_torque", true);
    sc.stance.foot_len = s.value("foot_len", 0.2);
  }
  if (j.contains("gamma")) {
    sc.gamma_enabled = j.at("gamma").value("enabled", false);
    sc.gamma_mu = j.at("gamma").value("mu", 0.1);
  }
  sc.td_accept_window = j.value("td_accept_window", 0.03);
  sc.seed = j.value("seed", std::uint64_t(0));

  sc.validate();
  return sc;
}

namespace {

json trajectory_json(const PolynomialTrajectoryd& traj) {
  json j;
  j["type"] = to_string(traj.type);
  j["n_star"] = traj.n_star;
  j["t1"] = traj.t1;
  j["t2"] = traj.t2;
  j["drag_comp"] = traj.drag_comp;
  const char* names[] = {"x", "y", "z", "psi"};
  for (int k = 0; k < 4; ++k) {
    json out;
    out["order"] = traj.order[size_t(k)];
    out["coeffs"] = std::vector<double>(traj.coeffs[size_t(k)].begin(),
                                        traj.coeffs[size_t(k)].end());
    j["outputs"][names[k]] = out;
  }
  return j;
}

}  // namespace

std::string trajectory_to_json(const PolynomialTrajectoryd& traj) {
  return trajectory_json(traj).dump(2);
}

PolynomialTrajectoryd trajectory_from_json(const std::string& text) {
  const json j = json::parse(text);
  PolynomialTrajectoryd traj;
  traj.type = parse_type(j.at("type").get<std::string>());
  traj.n_star = j.at("n_star").get<int>();
  traj.t1 = j.at("t1").get<double>();
  traj.t2 = j.at("t2").get<double>();
  traj.drag_comp = j.at("drag_comp").get<bool>();
  const char* names[] = {"x", "y", "z", "psi"};
  for (int k = 0; k < 4; ++k) {
    const auto& out = j.at("outputs").at(names[k]);
    traj.order[size_t(k)] = out.at("order").get<int>();
    const auto c = out.at("coeffs").get<std::vector<double>>();
    traj.coeffs[size_t(k)] =
        Eigen::Map<const Eigen::VectorXd>(c.data(), Eigen::Index(c.size()));
  }
  return traj;
}

void save_trajectories(const TrajectoryLog& log, const std::string& path) {
  json arr = json::array();
  for (const auto& t : log.trajectories) arr.push_back(trajectory_json(t));
  write_text_file(path, arr.dump(2));
}

std::string rmse_to_json(const RmseReport& r) {
  json j;
  j["rmse_pos"] = r.rmse_pos;
  j["rmse_vel"] = r.rmse_vel;
  j["rmse_pos_axis"] = {r.rmse_pos_axis(0), r.rmse_pos_axis(1), r.rmse_pos_axis(2)};
  j["rmse_vel_axis"] = {r.rmse_vel_axis(0), r.rmse_vel_axis(1), r.rmse_vel_axis(2)};
  j["drag_comp"] = r.drag_comp;
  j["n_ticks"] = r.n_ticks;
  for (const auto& h : r.per_hop)
    j["per_hop"].push_back({{"hop", h.hop},
                            {"rmse_pos", h.rmse_pos},
                            {"rmse_vel", h.rmse_vel},
                            {"ticks", h.ticks}});
  return j.dump(2);
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open for writing: " + path);
  out << content;
  if (!out) throw Error("write failed: " + path);
}

}  // namespace hoptraj
