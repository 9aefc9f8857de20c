#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "stodis/errors.hpp"
#include "stodis/grid_model.hpp"
#include "stodis/profiles.hpp"

namespace stodis {

/// Costate dynamics variant: `derivative` integrates dl/dt = c'(E) (the
/// stationarity-consistent form, default); `literal` integrates dl/dt = c(E).
/// Both vanish inside [0, e_max], so interior solutions coincide.
enum class CostateRhs { derivative, literal };

struct PmpOptions {
  double tol_kwh = 0.0;     // |SOC(T)| acceptance; <= 0 means 1e-4 * e_max
  int max_iter = 200;       // bisection cap
  CostateRhs costate_rhs = CostateRhs::derivative;
  double penalty_q = 0.0;   // soft-wall weight; <= 0 means the default rule
  double lambda_max = 0.0;  // shooting bracket half-width; <= 0 means the default rule
};

struct PmpSolution {
  double lambda0 = 0.0;
  std::vector<double> lambda_path;  // costate at grid nodes, n_steps+1 entries
  DispatchTrajectory trajectory;
  double terminal_soc_error = 0.0;  // SOC(T) - 0
  int iterations = 0;               // shooting integrations performed
  double curtailed_kwh = 0.0;       // energy of clipped negative generation demands
};

/// Bang-coast-bang feedback law. The costate acts as a generation target band:
/// charge up to eta_ch * lambda when load is below it, discharge down to
/// lambda / eta_dis when load is above it, otherwise idle.
inline double control_from_costate(double lambda, double p_l_kw,
                                   const StorageSpec& spec) {
  const double charge_edge = spec.eta_ch * lambda;
  const double discharge_edge = lambda / spec.eta_dis;
  if (p_l_kw < charge_edge) return charge_edge - p_l_kw;
  if (p_l_kw > discharge_edge) return discharge_edge - p_l_kw;
  return 0.0;
}

/// Default soft-wall weight: large enough that out-of-band excursions stay
/// within a small fraction of e_max at typical load scales.
inline double auto_penalty_q(const EpisodeProfile& ep, const StorageSpec& spec,
                             const CostModel& cm) {
  double peak = 0.0;
  for (double v : net_load(ep)) peak = std::max(peak, v);
  if (peak <= 0.0)
    for (double v : net_load(ep)) peak = std::max(peak, std::abs(v));
  if (peak <= 0.0) peak = 1.0;
  return 1e3 * cm.quad_coeff * peak * peak / spec.e_max_kwh;
}

/// Explicit Euler on the coupled state/costate system from a given initial
/// costate. Negative generation demands are clipped to zero and tallied.
inline PmpSolution integrate(double lambda0, const EpisodeProfile& ep,
                             const StorageSpec& spec, const CostModel& cm,
                             double dt_hours,
                             CostateRhs rhs = CostateRhs::derivative) {
  if (!(dt_hours > 0.0)) throw domain_error("integrate: dt_hours must be > 0");
  ep.validate();
  spec.validate();
  cm.validate();
  const int n = ep.n_steps();
  const std::vector<double> nl = net_load(ep);
  PmpSolution sol;
  sol.lambda0 = lambda0;
  sol.lambda_path.assign(n + 1, 0.0);
  sol.trajectory.p_g_kw.resize(n);
  sol.trajectory.p_s_kw.resize(n);
  sol.trajectory.soc_kwh.assign(n + 1, 0.0);
  sol.trajectory.stage_cost.resize(n);
  sol.lambda_path[0] = lambda0;
  double total = 0.0;
  for (int k = 0; k < n; ++k) {
    const double lam = sol.lambda_path[k];
    const double e = sol.trajectory.soc_kwh[k];
    const double p_s = control_from_costate(lam, nl[k], spec);
    const double p_g_raw = nl[k] + p_s;
    const double p_g = std::max(0.0, p_g_raw);
    if (p_g_raw < 0.0) sol.curtailed_kwh += -p_g_raw * dt_hours;
    sol.trajectory.p_s_kw[k] = p_s;
    sol.trajectory.p_g_kw[k] = p_g;
    sol.trajectory.stage_cost[k] = gen_cost(p_g, cm);
    total += dt_hours * sol.trajectory.stage_cost[k];
    sol.trajectory.soc_kwh[k + 1] = storage_step(e, p_s, dt_hours, spec);
    const double slope = rhs == CostateRhs::derivative
                             ? penalty_derivative(e, spec, cm)
                             : penalty(e, spec, cm);
    sol.lambda_path[k + 1] = lam + dt_hours * slope;
    if (!std::isfinite(sol.trajectory.soc_kwh[k + 1]) ||
        !std::isfinite(sol.lambda_path[k + 1]))
      throw infeasible_error("integrate: state diverged at step " + std::to_string(k) +
                             " (penalty weight too large?)");
  }
  sol.trajectory.total_cost = total;
  sol.terminal_soc_error = sol.trajectory.soc_kwh[n];
  return sol;
}

/// Shooting on the initial costate: bracket a sign change of the terminal SOC
/// error by doubling probes up to lambda_max, then bisect until
/// |SOC(T)| <= tol_kwh. Terminal error is nondecreasing in lambda0, so the
/// bracket is valid whenever one exists in range.
inline PmpSolution pmp_solve(const EpisodeProfile& ep, const StorageSpec& spec,
                             const CostModel& cm_in, double dt_hours,
                             const PmpOptions& opts = {}) {
  spec.validate();
  CostModel cm = cm_in;
  if (opts.penalty_q > 0.0)
    cm.penalty_q = opts.penalty_q;
  else
    cm.penalty_q = auto_penalty_q(ep, spec, cm_in);
  const double tol = opts.tol_kwh > 0.0 ? opts.tol_kwh : 1e-4 * spec.e_max_kwh;
  double lambda_max = opts.lambda_max;
  if (lambda_max <= 0.0) {
    double peak = 0.0;
    for (double v : net_load(ep)) peak = std::max(peak, std::abs(v));
    const double floor_eta = std::min(spec.eta_ch, 1.0 / spec.eta_dis);
    lambda_max = peak > 0.0 ? 4.0 * peak / floor_eta : 1.0;
  }

  int evals = 0;
  auto shoot = [&](double l0) {
    ++evals;
    PmpSolution s = integrate(l0, ep, spec, cm, dt_hours, opts.costate_rhs);
    return s;
  };

  PmpSolution at_zero = shoot(0.0);
  if (std::abs(at_zero.terminal_soc_error) <= tol) {
    at_zero.iterations = evals;
    return at_zero;
  }

  // Probe away from zero in the direction that can flip the error sign.
  const double dir = at_zero.terminal_soc_error < 0.0 ? 1.0 : -1.0;
  double lo = 0.0;
  double g_lo = at_zero.terminal_soc_error;
  double probe = lambda_max / 1024.0;
  double hi = 0.0;
  bool bracketed = false;
  PmpSolution candidate;
  while (probe <= lambda_max * (1.0 + 1e-12)) {
    PmpSolution s = shoot(dir * probe);
    if (std::abs(s.terminal_soc_error) <= tol) {
      s.iterations = evals;
      return s;
    }
    if ((s.terminal_soc_error > 0.0) != (g_lo > 0.0)) {
      hi = dir * probe;
      bracketed = true;
      break;
    }
    lo = dir * probe;
    g_lo = s.terminal_soc_error;
    probe *= 2.0;
  }
  if (!bracketed) {
    PmpSolution edge = shoot(dir * lambda_max);
    throw infeasible_error(
        "pmp_solve: no terminal-error sign change in [" + fmt_double(-lambda_max) +
        ", " + fmt_double(lambda_max) + "]; error at 0 = " +
        fmt_double(at_zero.terminal_soc_error) + ", at bracket edge = " +
        fmt_double(edge.terminal_soc_error));
  }

  for (int it = 0; it < opts.max_iter; ++it) {
    const double mid = 0.5 * (lo + hi);
    PmpSolution s = shoot(mid);
    if (std::abs(s.terminal_soc_error) <= tol) {
      s.iterations = evals;
      return s;
    }
    if ((s.terminal_soc_error > 0.0) == (g_lo > 0.0)) {
      lo = mid;
      g_lo = s.terminal_soc_error;
    } else {
      hi = mid;
    }
  }
  throw infeasible_error("pmp_solve: bisection did not reach |SOC(T)| <= " +
                         fmt_double(tol) + " within " +
                         std::to_string(opts.max_iter) + " iterations");
}

}  // namespace stodis
