#pragma once

#include <cmath>
#include <ostream>
#include <string>
#include <vector>

#include "stodis/csv.hpp"
#include "stodis/errors.hpp"

namespace stodis {

/// Battery parameters. Sign convention for storage power p_s: positive charges,
/// negative discharges, zero idles.
struct StorageSpec {
  double e_max_kwh = 5.0;
  double eta_ch = 1.0;     // charge efficiency, (0, 1]
  double eta_dis = 1.0;    // discharge efficiency, (0, 1]
  double eta_decay = 1.0;  // flow-scaled self-discharge factor, (0, 1]

  void validate(const std::string& prefix = "storage") const {
    if (!(e_max_kwh > 0.0)) throw domain_error(prefix + ".e_max_kwh must be > 0");
    if (!(eta_ch > 0.0 && eta_ch <= 1.0))
      throw domain_error(prefix + ".eta_ch must be in (0, 1]");
    if (!(eta_dis > 0.0 && eta_dis <= 1.0))
      throw domain_error(prefix + ".eta_dis must be in (0, 1]");
    if (!(eta_decay > 0.0 && eta_decay <= 1.0))
      throw domain_error(prefix + ".eta_decay must be in (0, 1]");
  }
};

struct TransmissionSpec {
  double alpha = 0.0;   // quadratic loss coefficient R/|V|^2, >= 0
  double eta_tr = 1.0;  // transmission efficiency seen by the RL transition, (0, 1]

  void validate(const std::string& prefix = "transmission") const {
    if (!(alpha >= 0.0)) throw domain_error(prefix + ".alpha must be >= 0");
    if (!(eta_tr > 0.0 && eta_tr <= 1.0))
      throw domain_error(prefix + ".eta_tr must be in (0, 1]");
  }
};

struct CostModel {
  double quad_coeff = 1.0;   // f(x) = quad_coeff * x^2
  double penalty_q = 100.0;  // soft-constraint weight Q for out-of-band SOC

  void validate(const std::string& prefix = "cost") const {
    if (!(quad_coeff > 0.0)) throw domain_error(prefix + ".quad_coeff must be > 0");
    if (!(penalty_q > 0.0)) throw domain_error(prefix + ".penalty_q must be > 0");
  }
};

/// Dispatch solution over one episode. soc_kwh has n_steps+1 entries (grid
/// nodes); the per-step arrays have n_steps. CSV rows report end-of-step SOC.
struct DispatchTrajectory {
  std::vector<double> p_g_kw;      // generated power per step, >= 0
  std::vector<double> p_s_kw;      // storage power per step, +charge/-discharge
  std::vector<double> soc_kwh;     // state of charge at grid nodes
  std::vector<double> stage_cost;  // gen_cost(p_g) per step
  double total_cost = 0.0;
};

/// Flow efficiency eta(p_s): charging multiplies by eta_ch, discharging divides
/// by eta_dis, idling passes through; eta_decay scales every branch.
inline double efficiency(double p_s_kw, const StorageSpec& spec) {
  if (p_s_kw > 0.0) return spec.eta_ch * spec.eta_decay;
  if (p_s_kw < 0.0) return spec.eta_decay / spec.eta_dis;
  return spec.eta_decay;
}

/// One explicit-Euler step of dE/dt = eta(p_s) * p_s.
inline double storage_step(double e_kwh, double p_s_kw, double dt_hours,
                           const StorageSpec& spec) {
  return e_kwh + efficiency(p_s_kw, spec) * p_s_kw * dt_hours;
}

/// Strictly convex generation cost f(p) = quad_coeff * p^2, defined for p >= 0.
inline double gen_cost(double p_g_kw, const CostModel& cm) {
  if (!(p_g_kw >= 0.0))
    throw domain_error("gen_cost: negative generated power " + fmt_double(p_g_kw));
  return cm.quad_coeff * p_g_kw * p_g_kw;
}

/// Soft-wall penalty c(e): zero inside [0, e_max], quadratic outside.
inline double penalty(double e_kwh, const StorageSpec& spec, const CostModel& cm) {
  const double w = cm.penalty_q / (2.0 * spec.e_max_kwh);
  if (e_kwh > spec.e_max_kwh) {
    double d = e_kwh - spec.e_max_kwh;
    return w * d * d;
  }
  if (e_kwh < 0.0) return w * e_kwh * e_kwh;
  return 0.0;
}

/// dc/de of the penalty above; zero on [0, e_max].
inline double penalty_derivative(double e_kwh, const StorageSpec& spec,
                                 const CostModel& cm) {
  const double w = cm.penalty_q / spec.e_max_kwh;
  if (e_kwh > spec.e_max_kwh) return w * (e_kwh - spec.e_max_kwh);
  if (e_kwh < 0.0) return w * e_kwh;
  return 0.0;
}

/// Power the generator must inject so that p arrives after quadratic line loss:
/// p + alpha * p^2.
inline double transmission_injection(double p_kw, const TransmissionSpec& ts) {
  return p_kw + ts.alpha * p_kw * p_kw;
}

/// Left-rectangle episode cost dt * sum f(p_g). Fills stage_cost and total_cost
/// on the trajectory and returns the total.
inline double episode_cost(DispatchTrajectory& traj, const CostModel& cm,
                           double dt_hours) {
  const std::size_t n = traj.p_g_kw.size();
  if (n == 0) throw domain_error("episode_cost: empty trajectory");
  if (!traj.p_s_kw.empty() && traj.p_s_kw.size() != n)
    throw domain_error("episode_cost: p_s_kw length mismatch");
  if (!traj.soc_kwh.empty() && traj.soc_kwh.size() != n + 1)
    throw domain_error("episode_cost: soc_kwh length mismatch");
  traj.stage_cost.resize(n);
  double total = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    traj.stage_cost[k] = gen_cost(traj.p_g_kw[k], cm);
    total += dt_hours * traj.stage_cost[k];
  }
  traj.total_cost = total;
  return total;
}

inline const char* kTrajectoryCsvHeader = "step,p_g_kw,p_s_kw,soc_kwh,stage_cost";

/// Writes one trajectory. When `lambda` is given (costate telemetry from the
/// minimum-principle solver) an extra trailing column is emitted.
inline void write_trajectory_csv(const DispatchTrajectory& traj, std::ostream& os,
                                 const std::vector<double>* lambda = nullptr) {
  os << kTrajectoryCsvHeader;
  if (lambda) os << ",lambda";
  os << "\n";
  const std::size_t n = traj.p_g_kw.size();
  for (std::size_t k = 0; k < n; ++k) {
    os << fmt_int(static_cast<long long>(k)) << ',' << fmt_double(traj.p_g_kw[k])
       << ',' << fmt_double(traj.p_s_kw.empty() ? 0.0 : traj.p_s_kw[k]) << ','
       << fmt_double(traj.soc_kwh.empty() ? 0.0 : traj.soc_kwh[k + 1]) << ','
       << fmt_double(traj.stage_cost.empty() ? 0.0 : traj.stage_cost[k]);
    if (lambda) os << ',' << fmt_double((*lambda)[k]);
    os << "\n";
  }
}

inline void write_trajectory_csv(const DispatchTrajectory& traj,
                                 const std::string& path,
                                 const std::vector<double>* lambda = nullptr) {
  std::ofstream f = open_out(path);
  write_trajectory_csv(traj, f, lambda);
  if (!f) throw io_error("write failed: " + path);
}

namespace detail {
/// j-th of m uniform grid values spanning [0, span]; exact at both ends. Shared
/// by the lattice and DP grids so identical levels compare bit-equal.
inline double uniform_grid_value(double span, int m, int j) {
  return span * (static_cast<double>(j) / static_cast<double>(m - 1));
}
}  // namespace detail

}  // namespace stodis
