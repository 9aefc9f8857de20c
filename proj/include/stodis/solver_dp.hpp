#pragma once

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "stodis/errors.hpp"
#include "stodis/grid_model.hpp"
#include "stodis/profiles.hpp"

namespace stodis {

/// Battery power that moves the store by delta_kwh in one step, inverting
/// storage_step's sign-dependent efficiency.
inline double storage_power_for_delta(double delta_kwh, double dt_hours,
                                      const StorageSpec& spec) {
  if (delta_kwh > 0.0) return delta_kwh / (dt_hours * spec.eta_ch * spec.eta_decay);
  if (delta_kwh < 0.0) return delta_kwh * spec.eta_dis / (dt_hours * spec.eta_decay);
  return 0.0;
}

/// Stage cost with quadratic transmission loss: the generator must produce
/// f(delivered + alpha * delivered^2) where delivered = p_batt + p_l.
inline double stage_cost_lt(double p_batt_kw, double p_l_kw, const TransmissionSpec& ts,
                            const CostModel& cm) {
  const double delivered = p_batt_kw + p_l_kw;
  if (!(delivered >= 0.0))
    throw domain_error("stage_cost_lt: negative delivered power " +
                       fmt_double(delivered));
  return gen_cost(transmission_injection(delivered, ts), cm);
}

struct DpOptions {
  bool terminal_pinned = true;  // require SOC(T) = 0; else free terminal argmin
  double p_max_kw = 0.0;        // battery power cap; 0 = unlimited
};

/// Forward cost-to-come table over the SOC grid. values[k][j] is the cheapest
/// cost of reaching level j at node k; argmin[k][j] the predecessor level.
struct ValueTable {
  int n_steps = 0;
  int m_levels = 0;
  std::vector<double> soc_levels;
  std::vector<std::vector<double>> values;
  std::vector<std::vector<int>> argmin;
};

inline const char* kValueTableCsvHeader = "step,level,soc_kwh,value,argmin_level";

inline void write_value_table_csv(const ValueTable& vt, const std::string& path) {
  std::ofstream f = open_out(path);
  f << kValueTableCsvHeader << "\n";
  for (int k = 0; k <= vt.n_steps; ++k)
    for (int j = 0; j < vt.m_levels; ++j)
      f << fmt_int(k) << ',' << fmt_int(j) << ',' << fmt_double(vt.soc_levels[j])
        << ',' << fmt_double(vt.values[k][j]) << ','
        << fmt_int(k == 0 ? -1 : vt.argmin[k][j]) << "\n";
  if (!f) throw io_error("write failed: " + path);
}

/// Exact dynamic program over an m-level SOC grid. Start pinned at SOC 0;
/// transitions pay dt * stage_cost_lt and are infeasible when delivered power
/// would be negative (or |p_batt| exceeds the cap). Ties resolve to the lowest
/// predecessor level; a pinned terminal that is unreachable raises
/// infeasible_error.
inline DispatchTrajectory dp_solve(const EpisodeProfile& ep, const StorageSpec& spec,
                                   const TransmissionSpec& ts, const CostModel& cm,
                                   int m_levels, const DpOptions& opts = {},
                                   ValueTable* out_table = nullptr) {
  if (m_levels < 2) throw domain_error("m_levels must be >= 2");
  ep.validate();
  spec.validate();
  ts.validate();
  cm.validate();
  const int n = ep.n_steps();
  const double dt = ep.step_hours;
  const std::vector<double> nl = net_load(ep);
  const double inf = std::numeric_limits<double>::infinity();

  ValueTable vt;
  vt.n_steps = n;
  vt.m_levels = m_levels;
  vt.soc_levels.resize(m_levels);
  for (int j = 0; j < m_levels; ++j)
    vt.soc_levels[j] = detail::uniform_grid_value(spec.e_max_kwh, m_levels, j);
  vt.values.assign(n + 1, std::vector<double>(m_levels, inf));
  vt.argmin.assign(n + 1, std::vector<int>(m_levels, -1));
  vt.values[0][0] = 0.0;  // episodes start with an empty store

  for (int k = 1; k <= n; ++k) {
    for (int tgt = 0; tgt < m_levels; ++tgt) {
      double best = inf;
      int arg = -1;
      for (int src = 0; src < m_levels; ++src) {
        const double base = vt.values[k - 1][src];
        if (base == inf) continue;
        const double p = storage_power_for_delta(vt.soc_levels[tgt] - vt.soc_levels[src],
                                                 dt, spec);
        if (opts.p_max_kw > 0.0 && std::abs(p) > opts.p_max_kw) continue;
        const double delivered = p + nl[k - 1];
        if (delivered < 0.0) continue;
        const double c = base + dt * stage_cost_lt(p, nl[k - 1], ts, cm);
        if (c < best) {  // ascending src + strict improvement = lowest-level ties
          best = c;
          arg = src;
        }
      }
      vt.values[k][tgt] = best;
      vt.argmin[k][tgt] = arg;
    }
  }

  int terminal = 0;
  if (opts.terminal_pinned) {
    if (vt.values[n][0] == inf)
      throw infeasible_error("dp_solve: pinned terminal SOC 0 unreachable");
  } else {
    double best = inf;
    terminal = -1;
    for (int j = 0; j < m_levels; ++j)
      if (vt.values[n][j] < best) {
        best = vt.values[n][j];
        terminal = j;
      }
    if (terminal < 0) throw infeasible_error("dp_solve: no reachable terminal level");
  }

  std::vector<int> levels(n + 1);
  levels[n] = terminal;
  for (int k = n; k > 0; --k) levels[k - 1] = vt.argmin[k][levels[k]];

  DispatchTrajectory traj;
  traj.p_g_kw.resize(n);
  traj.p_s_kw.resize(n);
  traj.soc_kwh.resize(n + 1);
  traj.stage_cost.resize(n);
  double total = 0.0;
  for (int i = 0; i <= n; ++i) traj.soc_kwh[i] = vt.soc_levels[levels[i]];
  for (int k = 0; k < n; ++k) {
    const double p = storage_power_for_delta(traj.soc_kwh[k + 1] - traj.soc_kwh[k], dt, spec);
    traj.p_s_kw[k] = p;
    traj.p_g_kw[k] = transmission_injection(p + nl[k], ts);
    traj.stage_cost[k] = gen_cost(traj.p_g_kw[k], cm);
    total += dt * traj.stage_cost[k];
  }
  traj.total_cost = total;
  if (out_table) *out_table = std::move(vt);
  return traj;
}

}  // namespace stodis
