#include "hoptraj/csv.hpp"

#include <charconv>
#include <filesystem>
#include <fstream>
#include <vector>

namespace hoptraj {

namespace {

constexpr const char* kHeader =
    "t,xd,yd,zd,vxd,vyd,vzd,phid,thetad,psid,pd,qd,rd,U1d,"
    "x,y,z,vx,vy,vz,phi,theta,psi,p,q,r,U1,U2,U3,U4,phase,V";
constexpr int kNumericCols = 30;  // all columns except phase

double parse_double(std::string_view sv, const std::string& path) {
  double v = 0.0;
  const auto res = std::from_chars(sv.data(), sv.data() + sv.size(), v);
  if (res.ec != std::errc() || res.ptr != sv.data() + sv.size())
    throw Error("parse_csv: malformed number in " + path + ": '" + std::string(sv) + "'");
  return v;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open for writing: " + path);
  return out;
}

}  // namespace

std::string format_shortest(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

void emit_csv(const TrajectoryLog& log, const std::string& path) {
  std::ofstream out = open_out(path);
  out << kHeader << '\n';
  for (const auto& k : log.ticks) {
    const auto& d = k.desired.x_d;
    const auto& a = k.actual;
    const double row[] = {k.t,
                          d.r_cm(0), d.r_cm(1), d.r_cm(2),
                          d.v(0), d.v(1), d.v(2),
                          d.eta(0), d.eta(1), d.eta(2),
                          d.omega(0), d.omega(1), d.omega(2),
                          k.desired.U1_d,
                          a.r_cm(0), a.r_cm(1), a.r_cm(2),
                          a.v(0), a.v(1), a.v(2),
                          a.eta(0), a.eta(1), a.eta(2),
                          a.omega(0), a.omega(1), a.omega(2),
                          k.u.U1, k.u.U2, k.u.U3, k.u.U4};
    for (double v : row) out << format_shortest(v) << ',';
    out << (k.phase == HopPhase::Aerial ? "aerial" : "stance") << ','
        << format_shortest(k.V) << '\n';
  }
  if (!out) throw Error("write failed: " + path);
}

TrajectoryLog parse_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open for reading: " + path);
  std::string line;
  if (!std::getline(in, line) || line != kHeader)
    throw Error("parse_csv: unexpected header in " + path);

  TrajectoryLog log;
  int hop = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string_view> cols;
    std::string_view sv(line);
    std::size_t start = 0;
    for (std::size_t i = 0; i <= sv.size(); ++i)
      if (i == sv.size() || sv[i] == ',') {
        cols.push_back(sv.substr(start, i - start));
        start = i + 1;
      }
    if (int(cols.size()) != kNumericCols + 2)  // numerics + phase + V
      throw Error("parse_csv: wrong column count in " + path);

    double num[kNumericCols];
    for (int c = 0; c < kNumericCols; ++c) num[c] = parse_double(cols[size_t(c)], path);

    TickRecord k;
    k.t = num[0];
    k.desired.x_d.r_cm = Vec3d(num[1], num[2], num[3]);
    k.desired.x_d.v = Vec3d(num[4], num[5], num[6]);
    k.desired.x_d.eta = Vec3d(num[7], num[8], num[9]);
    k.desired.x_d.omega = Vec3d(num[10], num[11], num[12]);
    k.desired.U1_d = num[13];
    k.actual.r_cm = Vec3d(num[14], num[15], num[16]);
    k.actual.v = Vec3d(num[17], num[18], num[19]);
    k.actual.eta = Vec3d(num[20], num[21], num[22]);
    k.actual.omega = Vec3d(num[23], num[24], num[25]);
    k.u = ControlInputd{num[26], num[27], num[28], num[29]};
    const std::string_view phase = cols[size_t(kNumericCols)];
    if (phase == "aerial")
      k.phase = HopPhase::Aerial;
    else if (phase == "stance")
      k.phase = HopPhase::Stance;
    else
      throw Error("parse_csv: unknown phase '" + std::string(phase) + "'");
    k.V = parse_double(cols[size_t(kNumericCols) + 1], path);
    k.hop = hop;
    if (k.phase == HopPhase::Stance) ++hop;
    log.ticks.push_back(k);
  }
  return log;
}

void emit_plot_data(const TrajectoryLog& log, const std::string& dir) {
  std::filesystem::create_directories(dir);
  const auto join = [&](const char* name) {
    return (std::filesystem::path(dir) / name).string();
  };

  {
    std::ofstream out = open_out(join("plot_zx.csv"));
    out << "xd,zd,x,z\n";
    for (const auto& k : log.ticks) {
      if (k.phase != HopPhase::Aerial) continue;
      out << format_shortest(k.desired.x_d.r_cm(0)) << ','
          << format_shortest(k.desired.x_d.r_cm(2)) << ','
          << format_shortest(k.actual.r_cm(0)) << ','
          << format_shortest(k.actual.r_cm(2)) << '\n';
    }
  }
  {
    std::ofstream out = open_out(join("plot_yx.csv"));
    out << "xd,yd,x,y\n";
    for (const auto& k : log.ticks) {
      if (k.phase != HopPhase::Aerial) continue;
      out << format_shortest(k.desired.x_d.r_cm(0)) << ','
          << format_shortest(k.desired.x_d.r_cm(1)) << ','
          << format_shortest(k.actual.r_cm(0)) << ','
          << format_shortest(k.actual.r_cm(1)) << '\n';
    }
  }
  // the states-over-time panel shares the full log layout
  emit_csv(log, join("plot_states.csv"));
}

}  // namespace hoptraj
