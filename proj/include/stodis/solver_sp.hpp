#pragma once

#include <limits>
#include <queue>
#include <string>
#include <tuple>
#include <vector>

#include "stodis/errors.hpp"
#include "stodis/grid_model.hpp"
#include "stodis/profiles.hpp"

namespace stodis {

/// Discretized cumulative-generation band. Node (i, j) holds a candidate value
/// of E_g(t_i); the band at each node is [E_L(t_i), E_L(t_i) + e_max]. Both
/// endpoints are pinned to a single level (E_g(0) = E_L(0), E_g(T) = E_L(T)).
struct EnergyLattice {
  int n_steps = 0;
  int m_levels = 0;
  double e_max_kwh = 0.0;
  std::vector<double> lower;                // E_L(t_i), n_steps+1 entries
  std::vector<double> upper;                // lower + e_max
  std::vector<std::vector<double>> values;  // candidate E_g(t_i) per node
};

inline EnergyLattice build_lattice(const EpisodeProfile& ep, const StorageSpec& spec,
                                   int m_levels) {
  if (m_levels < 2) throw domain_error("m_levels must be >= 2");
  ep.validate();
  EnergyLattice lat;
  lat.n_steps = ep.n_steps();
  lat.m_levels = m_levels;
  lat.e_max_kwh = spec.e_max_kwh;
  lat.lower = cumulative_load(ep);
  lat.upper = lat.lower;
  for (double& u : lat.upper) u += spec.e_max_kwh;
  lat.values.resize(lat.n_steps + 1);
  for (int i = 0; i <= lat.n_steps; ++i) {
    if (i == 0 || i == lat.n_steps || spec.e_max_kwh == 0.0) {
      lat.values[i] = {lat.lower[i]};  // pinned endpoint or degenerate band
      continue;
    }
    lat.values[i].resize(m_levels);
    for (int j = 0; j < m_levels; ++j)
      lat.values[i][j] = lat.lower[i] + detail::uniform_grid_value(spec.e_max_kwh, m_levels, j);
  }
  return lat;
}

struct PathResult {
  std::vector<int> level_indices;   // chosen level per node, n_steps+1 entries
  std::vector<double> energy_path;  // E_g(t_i) per node
  double total_cost = 0.0;          // dt * sum f(dE/dt) along the path
};

/// Dijkstra over the lattice DAG. Edges step forward in time with dE >= 0
/// (generation only adds energy; the capacity band is enforced by the node
/// values); edge weight dt * f(dE/dt). Tie-breaks are deterministic:
/// equal-cost predecessors resolve to the lowest source level index.
inline PathResult sp_solve(const EnergyLattice& lat, const CostModel& cm,
                           double dt_hours) {
  if (!(dt_hours > 0.0)) throw domain_error("sp_solve: dt_hours must be > 0");
  const int n = lat.n_steps;
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<std::vector<double>> dist(n + 1);
  std::vector<std::vector<int>> pred(n + 1);
  std::vector<std::vector<char>> settled(n + 1);
  for (int i = 0; i <= n; ++i) {
    dist[i].assign(lat.values[i].size(), inf);
    pred[i].assign(lat.values[i].size(), -1);
    settled[i].assign(lat.values[i].size(), 0);
  }
  using Entry = std::tuple<double, int, int>;  // (dist, step, level); lazy deletion
  std::priority_queue<Entry, std::vector<Entry>, std::greater<Entry>> pq;
  dist[0][0] = 0.0;
  pq.emplace(0.0, 0, 0);
  while (!pq.empty()) {
    auto [d, s, j] = pq.top();
    pq.pop();
    if (settled[s][j]) continue;
    settled[s][j] = 1;
    if (s == n) break;  // the goal node is the only level at step n
    const double e_here = lat.values[s][j];
    for (int t = 0; t < static_cast<int>(lat.values[s + 1].size()); ++t) {
      const double de = lat.values[s + 1][t] - e_here;
      if (de < 0.0) continue;
      const double nd = d + dt_hours * gen_cost(de / dt_hours, cm);
      if (nd < dist[s + 1][t]) {
        dist[s + 1][t] = nd;
        pred[s + 1][t] = j;
        pq.emplace(nd, s + 1, t);
      } else if (nd == dist[s + 1][t] && j < pred[s + 1][t]) {
        pred[s + 1][t] = j;  // equal cost: prefer less stored energy
      }
    }
  }
  if (!settled[n][0]) {
    int blocked = n;
    for (int i = 1; i <= n; ++i) {
      bool reached = false;
      for (double d : dist[i])
        if (d < inf) { reached = true; break; }
      if (!reached) { blocked = i; break; }
    }
    throw infeasible_error("sp_solve: no feasible path; first blocked step " +
                           std::to_string(blocked) +
                           " (discretization too coarse or band violated)");
  }
  PathResult res;
  res.total_cost = dist[n][0];
  res.level_indices.assign(n + 1, 0);
  res.level_indices[n] = 0;
  for (int i = n; i > 0; --i)
    res.level_indices[i - 1] = pred[i][res.level_indices[i]];
  res.energy_path.resize(n + 1);
  for (int i = 0; i <= n; ++i)
    res.energy_path[i] = lat.values[i][res.level_indices[i]];
  return res;
}

/// Converts an energy path back to powers: p_g = dE/dt, p_s = p_g - P_L,
/// SOC = E_g - E_L. Stage costs are left for episode_cost (cost model not known
/// here).
inline DispatchTrajectory recover_trajectory(const PathResult& path,
                                             const EpisodeProfile& ep,
                                             double dt_hours) {
  const int n = ep.n_steps();
  if (static_cast<int>(path.energy_path.size()) != n + 1)
    throw domain_error("recover_trajectory: path/episode length mismatch");
  const std::vector<double> nl = net_load(ep);
  const std::vector<double> el = cumulative_load(ep);
  DispatchTrajectory traj;
  traj.p_g_kw.resize(n);
  traj.p_s_kw.resize(n);
  traj.soc_kwh.resize(n + 1);
  for (int k = 0; k < n; ++k) {
    traj.p_g_kw[k] = (path.energy_path[k + 1] - path.energy_path[k]) / dt_hours;
    traj.p_s_kw[k] = traj.p_g_kw[k] - nl[k];
  }
  for (int i = 0; i <= n; ++i) traj.soc_kwh[i] = path.energy_path[i] - el[i];
  return traj;
}

}  // namespace stodis
