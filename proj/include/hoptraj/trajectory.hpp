#ifndef HOPTRAJ_TRAJECTORY_HPP
#define HOPTRAJ_TRAJECTORY_HPP

#include <Eigen/SVD>

#include <array>
#include <cmath>
#include <map>
#include <mutex>
#include <vector>

#include "hoptraj/flatness.hpp"
#include "hoptraj/types.hpp"

namespace hoptraj {

enum class FlatOutput : int { X = 0, Y = 1, Z = 2, Psi = 3 };
enum class TrajectoryType { T1, T2, T3 };

inline const char* to_string(TrajectoryType t) {
  switch (t) {
    case TrajectoryType::T1: return "T1";
    case TrajectoryType::T2: return "T2";
    default: return "T3";
  }
}

/// Desired/free pattern for keyframe `role` (0 = LO, 1 = intermediate,
/// 2 = TD), flat output j and derivative k.  The intermediate keyframe
/// carries accelerations only; psi''/psi''' are always free; T1 frees the
/// TD x,y values and T2 the TD z value.
inline bool keyframe_entry_desired(TrajectoryType type, int role, FlatOutput j, int k) {
  const bool is_psi = j == FlatOutput::Psi;
  if (role == 1) return !is_psi && k == 2;
  if (is_psi) return k <= 1;
  if (role == 2 && k == 0) {
    if (type == TrajectoryType::T1 && (j == FlatOutput::X || j == FlatOutput::Y)) return false;
    if (type == TrajectoryType::T2 && j == FlatOutput::Z) return false;
  }
  return true;
}

/// Timed bundle of flat-output values and derivatives up to jerk, with
/// per-entry desired/free flags.
template <class Scalar>
struct Keyframe {
  Scalar t{0};
  std::array<std::array<Scalar, 4>, 4> value{};   // [output][derivative]
  std::array<std::array<bool, 4>, 4> desired{};
};

template <class Scalar>
struct ExtraConstraint {
  Scalar t;
  FlatOutput output;
  int k;
  Scalar value;
};

/// Desired touchdown state: position (entries may be freed by the
/// trajectory type), attitude defining z_Bd (yaw comes from eta_d), approach
/// speed and touchdown thrust.
template <class Scalar>
struct TouchdownSpec {
  Vec3<Scalar> position = Vec3<Scalar>::Zero();
  Vec3<Scalar> eta_d = Vec3<Scalar>::Zero();
  Scalar v_td{1};
  Scalar U1_td{0};

  void validate() const {
    if (!(v_td > Scalar(0))) throw Error("TouchdownSpec: v_TD must be > 0");
    if (!(U1_td >= Scalar(0))) throw Error("TouchdownSpec: U1_TD must be >= 0");
  }
};

/// Piecewise-free polynomial trajectory over [0, t2]: one monomial
/// coefficient vector per flat output, order n_j plus n* null-space terms.
template <class Scalar>
struct PolynomialTrajectory {
  std::array<Eigen::VectorX<Scalar>, 4> coeffs;
  std::array<int, 4> order{};  // n_j, before the n* extension
  int n_star{0};
  Scalar t1{0}, t2{0};  // t0 = 0
  TrajectoryType type{TrajectoryType::T3};
  bool drag_comp{true};
};

namespace detail {

// Row of d^k/dt^k [1, t, t^2, ..., t^n].
template <class Scalar>
Eigen::RowVectorX<Scalar> poly_row(int n, Scalar t, int k) {
  Eigen::RowVectorX<Scalar> row = Eigen::RowVectorX<Scalar>::Zero(n + 1);
  for (int m = k; m <= n; ++m) {
    Scalar fac = Scalar(1);
    for (int i = m; i > m - k; --i) fac *= Scalar(i);
    row(m) = fac * std::pow(t, Scalar(m - k));
  }
  return row;
}

struct ConstraintRef {
  int role;
  int k;
};

template <class Scalar>
std::vector<ConstraintRef> constraint_list(TrajectoryType type,
                                           const std::array<Keyframe<Scalar>, 3>& kf,
                                           FlatOutput j) {
  std::vector<ConstraintRef> out;
  for (int role = 0; role < 3; ++role)
    for (int k = 0; k < 4; ++k)
      if (keyframe_entry_desired(type, role, j, k)) out.push_back({role, k});
  return out;
}

template <class Scalar>
void validate_keyframes(TrajectoryType type, const std::array<Keyframe<Scalar>, 3>& kf) {
  if (!(Scalar(0) == kf[0].t && kf[0].t < kf[1].t && kf[1].t < kf[2].t))
    throw Error("keyframes: require t0 = 0 < t1 < t2");
  for (int role = 0; role < 3; ++role)
    for (int j = 0; j < 4; ++j)
      for (int k = 0; k < 4; ++k)
        if (kf[role].desired[j][k] !=
            keyframe_entry_desired(type, role, FlatOutput(j), k))
          throw Error("keyframes: desired/free flags inconsistent with trajectory type");
}

}  // namespace detail

/// Square constraint system P_l c_j = nu_j for one flat output, rows in
/// keyframe order (LO derivatives, intermediate acceleration, TD
/// derivatives).  The polynomial order is one less than the number of
/// desired entries.
template <class Scalar>
struct LinearSystem {
  Eigen::MatrixX<Scalar> P_l;
  Eigen::VectorX<Scalar> nu;
  int order;  // n_j
};

template <class Scalar>
LinearSystem<Scalar> build_system(TrajectoryType type,
                                  const std::array<Keyframe<Scalar>, 3>& kf, FlatOutput j) {
  detail::validate_keyframes(type, kf);
  const auto rows = detail::constraint_list(type, kf, j);
  const int n = int(rows.size()) - 1;
  LinearSystem<Scalar> sys;
  sys.order = n;
  sys.P_l.resize(n + 1, n + 1);
  sys.nu.resize(n + 1);
  for (int r = 0; r < n + 1; ++r) {
    const auto& c = rows[size_t(r)];
    sys.P_l.row(r) = detail::poly_row(n, kf[size_t(c.role)].t, c.k);
    sys.nu(r) = kf[size_t(c.role)].value[size_t(int(j))][size_t(c.k)];
  }
  return sys;
}

inline constexpr double kConditionLimit = 1e12;

/// Solve P_l c = nu by SVD with one step of iterative refinement.
/// Throws SolveError (with the condition estimate) past kConditionLimit.
template <class Scalar>
Eigen::VectorX<Scalar> solve_base(const Eigen::MatrixX<Scalar>& P_l,
                                  const Eigen::VectorX<Scalar>& nu) {
  Eigen::JacobiSVD<Eigen::MatrixX<Scalar>> svd(P_l,
                                               Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Scalar smax = svd.singularValues()(0);
  const Scalar smin = svd.singularValues()(svd.singularValues().size() - 1);
  const double cond = smin > Scalar(0) ? double(smax / smin)
                                       : std::numeric_limits<double>::infinity();
  if (!(cond < kConditionLimit))
    throw SolveError("solve_base: ill-conditioned constraint system", cond);
  Eigen::VectorX<Scalar> c = svd.solve(nu);
  c += svd.solve((nu - P_l * c).eval());
  return c;
}

/// Orthonormal basis of the null space of the constraint matrix widened by
/// n_star columns.  The kernel is computed in normalized time tau = t/t2 and
/// the coefficients mapped back exactly (c_m = c_hat_m / t2^m), which keeps
/// ||P_wide N|| at machine level across the supported t2 range.
template <class Scalar>
Eigen::MatrixX<Scalar> null_space_basis(TrajectoryType type,
                                        const std::array<Keyframe<Scalar>, 3>& kf,
                                        int n_star, FlatOutput j) {
  if (n_star < 1) throw Error("null_space_basis: n_star must be >= 1");
  detail::validate_keyframes(type, kf);
  const auto rows = detail::constraint_list(type, kf, j);
  const int nrows = int(rows.size());
  const int ncols = nrows + n_star;  // order n_j + n_star, +1 coefficients
  const Scalar T = kf[2].t;

  Eigen::MatrixX<Scalar> P_tau(nrows, ncols);
  for (int r = 0; r < nrows; ++r)
    P_tau.row(r) = detail::poly_row(ncols - 1, kf[size_t(rows[size_t(r)].role)].t / T,
                                    rows[size_t(r)].k);

  Eigen::JacobiSVD<Eigen::MatrixX<Scalar>> svd(P_tau, Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  int rank = 0;
  for (int i = 0; i < sv.size(); ++i)
    if (sv(i) > sv(0) * Scalar(1e-13) * Scalar(std::max(nrows, ncols))) ++rank;
  if (ncols - rank != n_star)
    throw SolveError("null_space_basis: rank deficiency beyond the expected n_star",
                     double(sv(0) / sv(sv.size() - 1)));

  Eigen::MatrixX<Scalar> N = svd.matrixV().rightCols(n_star);
  for (int m = 0; m < ncols; ++m) N.row(m) /= std::pow(T, Scalar(m));
  Eigen::HouseholderQR<Eigen::MatrixX<Scalar>> qr(N);
  N = qr.householderQ() * Eigen::MatrixX<Scalar>::Identity(ncols, n_star);

  Eigen::MatrixX<Scalar> P(nrows, ncols);
  for (int r = 0; r < nrows; ++r)
    P.row(r) = detail::poly_row(ncols - 1, kf[size_t(rows[size_t(r)].role)].t,
                                rows[size_t(r)].k);
  const Scalar tol = std::max(Scalar(1e-10),
                              P.cwiseAbs().maxCoeff() * Scalar(ncols) * Scalar(1e-15));
  if ((P * N).cwiseAbs().maxCoeff() > tol)
    throw SolveError("null_space_basis: basis failed the residual tolerance");
  return N;
}

/// Null-space coefficients from the normal equations
/// c_N = (M1^T M1)^-1 (M1^T M2), M1 = P_N N_l, M2 = nu_extra - P_N c*_padded.
/// s <= n_star extras are interpolated exactly; s > n_star in least squares.
template <class Scalar>
Eigen::VectorX<Scalar> solve_null_coefficients(const Eigen::MatrixX<Scalar>& P_N,
                                               const Eigen::MatrixX<Scalar>& N_l,
                                               const Eigen::VectorX<Scalar>& c_star_padded,
                                               const Eigen::VectorX<Scalar>& nu_extra) {
  if (P_N.rows() == 0) throw Error("solve_null_coefficients: no extra constraints");
  const int n_star = int(N_l.cols());
  const Eigen::MatrixX<Scalar> M1 = P_N * N_l;
  const Eigen::VectorX<Scalar> M2 = nu_extra - P_N * c_star_padded;

  Eigen::MatrixX<Scalar> A = M1.transpose() * M1;
  const Eigen::VectorX<Scalar> b = M1.transpose() * M2;

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixX<Scalar>> eig(A);
  const Scalar lmax = eig.eigenvalues().maxCoeff();
  const Scalar lmin = eig.eigenvalues().minCoeff();
  const Scalar scale = std::max(lmax, Scalar(1));
  if (lmin < Scalar(1e-12) * scale) A.diagonal().array() += Scalar(1e-12) * scale;

  const Eigen::VectorX<Scalar> c_N = A.ldlt().solve(b);

  if (P_N.rows() <= n_star) {
    const Scalar tol =
        Scalar(1e-8) * std::max(Scalar(1), nu_extra.cwiseAbs().maxCoeff());
    if ((M1 * c_N - M2).cwiseAbs().maxCoeff() > tol)
      throw SolveError(
          "solve_null_coefficients: extras dependent or inconsistent in the "
          "null-space image");
  }
  return c_N;
}

/// Value of derivative k of flat output j at time t.
template <class Scalar>
Scalar evaluate(const PolynomialTrajectory<Scalar>& traj, Scalar t, FlatOutput j, int k) {
  if (k < 0) throw DomainError("evaluate: negative derivative order");
  if (t < Scalar(-1e-12) || t > traj.t2 + Scalar(1e-12))
    throw DomainError("evaluate: time outside [0, t2]");
  const auto& c = traj.coeffs[size_t(int(j))];
  const int n = int(c.size()) - 1;
  if (k > n) return Scalar(0);
  // Horner on the k-th derivative coefficients
  Scalar acc = Scalar(0);
  for (int m = n; m >= k; --m) {
    Scalar fac = Scalar(1);
    for (int i = m; i > m - k; --i) fac *= Scalar(i);
    acc = acc * t + fac * c(m);
  }
  return acc;
}

/// Flat outputs and derivatives at t (snap included, yaw to psi'').
template <class Scalar>
FlatSample<Scalar> sample_flat(const PolynomialTrajectory<Scalar>& traj, Scalar t) {
  FlatSample<Scalar> s;
  s.t = t;
  for (int i = 0; i < 3; ++i) {
    const auto j = FlatOutput(i);
    s.r(i) = evaluate(traj, t, j, 0);
    s.r_dot(i) = evaluate(traj, t, j, 1);
    s.r_ddot(i) = evaluate(traj, t, j, 2);
    s.r_jerk(i) = evaluate(traj, t, j, 3);
    s.r_snap(i) = evaluate(traj, t, j, 4);
  }
  s.psi = evaluate(traj, t, FlatOutput::Psi, 0);
  s.psi_dot = evaluate(traj, t, FlatOutput::Psi, 1);
  s.psi_ddot = evaluate(traj, t, FlatOutput::Psi, 2);
  return s;
}

/// Hopping keyframes per the LO/TD population rules: alpha_0 from the
/// estimated liftoff state with nu'' = (U1_LO/m) z_B - g z_W, alpha_2 from
/// the touchdown spec with nu' = -v_TD z_Bd and
/// nu'' = (U1_TD/m) z_Bd - g z_W - D_T/m (drag term dropped when
/// compensation is off), alpha_1 carrying alpha_2's acceleration.
template <class Scalar>
std::array<Keyframe<Scalar>, 3> make_hop_keyframes(
    const RobotParams<Scalar>& params, const State12<Scalar>& lo_state, Scalar lo_U1,
    TrajectoryType type, const TouchdownSpec<Scalar>& td, Scalar t_m, Scalar delta_t,
    bool drag_comp) {
  if (!(Scalar(0) < delta_t && delta_t < t_m))
    throw Error("make_hop_keyframes: require 0 < delta_t < t_m");
  td.validate();

  std::array<Keyframe<Scalar>, 3> kf;
  kf[0].t = Scalar(0);
  kf[1].t = t_m - delta_t;
  kf[2].t = t_m;

  const Mat3<Scalar> R0 = euler_to_rotation(lo_state.eta);
  const Vec3<Scalar> a0 =
      lo_U1 / params.m_r * R0.col(2) - params.g * Vec3<Scalar>::UnitZ();

  const Mat3<Scalar> Rd = euler_to_rotation(td.eta_d);
  const Vec3<Scalar> z_Bd = Rd.col(2);
  const Vec3<Scalar> v_td_vec = -td.v_td * z_Bd;
  Vec3<Scalar> a2 = td.U1_td / params.m_r * z_Bd - params.g * Vec3<Scalar>::UnitZ();
  if (drag_comp) a2 -= translational_drag(params, Rd, v_td_vec) / params.m_r;

  for (int i = 0; i < 3; ++i) {
    kf[0].value[size_t(i)] = {lo_state.r_cm(i), lo_state.v(i), a0(i), Scalar(0)};
    kf[1].value[size_t(i)] = {Scalar(0), Scalar(0), a2(i), Scalar(0)};
    kf[2].value[size_t(i)] = {td.position(i), v_td_vec(i), a2(i), Scalar(0)};
  }
  const Scalar psi_dot0 = (euler_rate_matrix(lo_state.eta) * lo_state.omega)(2);
  kf[0].value[3] = {lo_state.eta(2), psi_dot0, Scalar(0), Scalar(0)};
  kf[2].value[3] = {td.eta_d(2), Scalar(0), Scalar(0), Scalar(0)};

  for (int role = 0; role < 3; ++role)
    for (int j = 0; j < 4; ++j)
      for (int k = 0; k < 4; ++k)
        kf[size_t(role)].desired[size_t(j)][size_t(k)] =
            keyframe_entry_desired(type, role, FlatOutput(j), k);
  return kf;
}

/// Optional cache of the time-dependent factorizations, keyed on
/// (type, t1, t2, n_star).  Shareable across threads; pass nullptr to
/// disable.
template <class Scalar>
class SystemCache {
 public:
  struct Entry {
    std::array<Eigen::MatrixX<Scalar>, 4> P_l;
    std::array<Eigen::JacobiSVD<Eigen::MatrixX<Scalar>>, 4> svd;
    std::array<Eigen::MatrixX<Scalar>, 4> N_l;
  };

  template <class Make>
  const Entry& get(TrajectoryType type, Scalar t1, Scalar t2, int n_star, Make&& make) {
    const Key key{int(type), t1, t2, n_star};
    std::lock_guard<std::mutex> lock(mutex_);
    auto it = entries_.find(key);
    if (it == entries_.end()) it = entries_.emplace(key, make()).first;
    return it->second;
  }

  std::size_t size() const {
    std::lock_guard<std::mutex> lock(mutex_);
    return entries_.size();
  }

 private:
  struct Key {
    int type;
    Scalar t1, t2;
    int n_star;
    bool operator<(const Key& o) const {
      return std::tie(type, t1, t2, n_star) < std::tie(o.type, o.t1, o.t2, o.n_star);
    }
  };
  mutable std::mutex mutex_;
  std::map<Key, Entry> entries_;
};

template <class Scalar>
struct GeneratorOptions {
  int n_star = 2;
  bool reject_free_fall = true;
  int rejection_samples = 100;
  SystemCache<Scalar>* cache = nullptr;
};

/// Generate one LO->TD trajectory through the three hopping keyframes,
/// solving the base system and the null-space stage per flat output.
template <class Scalar>
PolynomialTrajectory<Scalar> make_hop_trajectory(
    const RobotParams<Scalar>& params, const State12<Scalar>& lo_state, Scalar lo_U1,
    TrajectoryType type, const TouchdownSpec<Scalar>& td, Scalar t_m, Scalar delta_t,
    bool drag_comp, const std::vector<ExtraConstraint<Scalar>>& extras = {},
    const GeneratorOptions<Scalar>& opt = {}) {
  const auto kf =
      make_hop_keyframes(params, lo_state, lo_U1, type, td, t_m, delta_t, drag_comp);

  PolynomialTrajectory<Scalar> traj;
  traj.n_star = opt.n_star;
  traj.t1 = kf[1].t;
  traj.t2 = kf[2].t;
  traj.type = type;
  traj.drag_comp = drag_comp;

  const auto make_entry = [&]() {
    typename SystemCache<Scalar>::Entry e;
    for (int j = 0; j < 4; ++j) {
      const auto sys = build_system(type, kf, FlatOutput(j));
      e.P_l[size_t(j)] = sys.P_l;
      e.svd[size_t(j)].compute(sys.P_l, Eigen::ComputeThinU | Eigen::ComputeThinV);
      e.N_l[size_t(j)] = null_space_basis(type, kf, opt.n_star, FlatOutput(j));
    }
    return e;
  };

  for (int j = 0; j < 4; ++j) {
    const FlatOutput out = FlatOutput(j);
    Eigen::VectorX<Scalar> c_star;
    Eigen::MatrixX<Scalar> N_l;
    const auto sys = build_system(type, kf, out);
    traj.order[size_t(j)] = sys.order;

    if (opt.cache != nullptr) {
      const auto& e = opt.cache->get(type, traj.t1, traj.t2, opt.n_star, make_entry);
      const auto& svd = e.svd[size_t(j)];
      const Scalar smax = svd.singularValues()(0);
      const Scalar smin = svd.singularValues()(svd.singularValues().size() - 1);
      if (!(smin > Scalar(0)) || !(double(smax / smin) < kConditionLimit))
        throw SolveError("make_hop_trajectory: ill-conditioned constraint system",
                         smin > Scalar(0) ? double(smax / smin)
                                          : std::numeric_limits<double>::infinity());
      c_star = svd.solve(sys.nu);
      c_star += svd.solve((sys.nu - e.P_l[size_t(j)] * c_star).eval());
      N_l = e.N_l[size_t(j)];
    } else {
      c_star = solve_base(sys.P_l, sys.nu);
      N_l = null_space_basis(type, kf, opt.n_star, out);
    }

    Eigen::VectorX<Scalar> c = Eigen::VectorX<Scalar>::Zero(sys.order + 1 + opt.n_star);
    c.head(sys.order + 1) = c_star;

    std::vector<const ExtraConstraint<Scalar>*> mine;
    for (const auto& e : extras)
      if (e.output == out) mine.push_back(&e);
    if (!mine.empty()) {
      const int wide = sys.order + opt.n_star;
      Eigen::MatrixX<Scalar> P_N(int(mine.size()), wide + 1);
      Eigen::VectorX<Scalar> nu_e(int(mine.size()));
      for (int s = 0; s < int(mine.size()); ++s) {
        const auto& e = *mine[size_t(s)];
        if (!(e.t > Scalar(0) && e.t < traj.t2))
          throw Error("extra constraint time must lie strictly inside (t0, t2)");
        if (std::abs(e.t - traj.t1) < Scalar(1e-9))
          throw Error("extra constraint time collides with a keyframe time");
        if (e.k < 0 || e.k > wide)
          throw Error("extra constraint derivative order exceeds n + n_star");
        P_N.row(s) = detail::poly_row(wide, e.t, e.k);
        nu_e(s) = e.value;
      }
      c += N_l * solve_null_coefficients(P_N, N_l, c, nu_e);
    }
    traj.coeffs[size_t(j)] = c;
  }

  if (opt.reject_free_fall) {
    const Scalar eps_U = Scalar(kThrustEpsFactor) * params.m_r * params.g;
    Mat3<Scalar> R_warm;
    bool have_warm = false;
    for (int i = 0; i < opt.rejection_samples; ++i) {
      const Scalar t = traj.t2 * Scalar(i) / Scalar(opt.rejection_samples - 1);
      try {
        const auto ta = thrust_attitude(params, sample_flat(traj, t),
                                        have_warm ? &R_warm : nullptr, drag_comp);
        if (ta.U1 < eps_U)
          throw GenerationError("make_hop_trajectory: free-fall thrust along candidate",
                                double(t));
        R_warm = ta.R_BW;
        have_warm = true;
      } catch (const SingularityError& e) {
        throw GenerationError(
            std::string("make_hop_trajectory: candidate passes through singularity: ") +
                e.what(),
            double(t));
      }
    }
  }
  return traj;
}

using Keyframed = Keyframe<double>;
using ExtraConstraintd = ExtraConstraint<double>;
using TouchdownSpecd = TouchdownSpec<double>;
using PolynomialTrajectoryd = PolynomialTrajectory<double>;
using GeneratorOptionsd = GeneratorOptions<double>;
using SystemCached = SystemCache<double>;

}  // namespace hoptraj

#endif  // HOPTRAJ_TRAJECTORY_HPP
