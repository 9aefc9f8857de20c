#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "stodis/csv.hpp"
#include "stodis/errors.hpp"
#include "stodis/profiles.hpp"
#include "stodis/rl_env.hpp"
#include "stodis/rng.hpp"

namespace stodis {

/// Discretization of the (soc, hour, load) state and of the action set. The
/// action grid spans [-e_max, +e_max] uniformly; the env clamp keeps whatever
/// the grid proposes feasible. Odd action counts place exact 0 at the center.
struct Bins {
  int soc = 21;
  int hour = 48;
  int load = 16;
  int action = 21;
  double e_max_kwh = 5.0;
  double load_min_kw = 0.0;
  double load_max_kw = 0.0;

  void validate() const {
    if (soc < 1 || hour < 1 || load < 1)
      throw domain_error("bins: state bin counts must be >= 1");
    if (action < 2) throw domain_error("bins: action count must be >= 2");
    if (!(e_max_kwh > 0.0)) throw domain_error("bins: e_max_kwh must be > 0");
    if (!(load_min_kw <= load_max_kw))
      throw domain_error("bins: load range inverted");
  }
};

struct StateCell {
  int soc = 0;
  int hour = 0;
  int load = 0;
};

namespace detail {
/// Uniform bin index over [lo, hi]: interior boundaries round up (floor of the
/// scaled offset lands the shared edge in the higher cell); x = hi clamps into
/// the last cell, x = lo into cell 0.
inline int bin_of(double x, double lo, double hi, int bins) {
  if (bins <= 1 || !(hi > lo)) return 0;
  double t = (x - lo) / (hi - lo);
  int b = static_cast<int>(std::floor(t * bins));
  return std::clamp(b, 0, bins - 1);
}
}  // namespace detail

inline StateCell discretize(const RlState& s, const Bins& b) {
  StateCell c;
  c.soc = detail::bin_of(s.soc_kwh, 0.0, b.e_max_kwh, b.soc);
  c.hour = detail::bin_of(s.hour, 0.0, 24.0, b.hour);
  c.load = detail::bin_of(s.load_kw, b.load_min_kw, b.load_max_kw, b.load);
  return c;
}

/// SOC delta proposed by action index a.
inline double action_value(const Bins& b, int a) {
  return -b.e_max_kwh +
         2.0 * b.e_max_kwh * (static_cast<double>(a) / static_cast<double>(b.action - 1));
}

struct QTable {
  Bins bins;
  std::vector<double> q;            // soc x hour x load x action, row-major
  std::vector<std::uint32_t> visits;

  std::size_t index(const StateCell& c, int a) const {
    return ((static_cast<std::size_t>(c.soc) * bins.hour + c.hour) * bins.load +
            c.load) * bins.action + a;
  }

  static QTable make(const Bins& b) {
    b.validate();
    QTable t;
    t.bins = b;
    const std::size_t n = static_cast<std::size_t>(b.soc) * b.hour * b.load * b.action;
    t.q.assign(n, 0.0);
    t.visits.assign(n, 0);
    return t;
  }

  /// Greedy action for a cell; equal values resolve to the lowest index.
  int greedy_action(const StateCell& c) const {
    int best = 0;
    double best_q = q[index(c, 0)];
    for (int a = 1; a < bins.action; ++a) {
      double v = q[index(c, a)];
      if (v > best_q) {
        best_q = v;
        best = a;
      }
    }
    return best;
  }

  double max_q(const StateCell& c) const {
    double best = q[index(c, 0)];
    for (int a = 1; a < bins.action; ++a) best = std::max(best, q[index(c, a)]);
    return best;
  }
};

struct TrainConfig {
  int episodes = 2000;
  double alpha = 0.3;        // learning rate, (0, 1]
  double gamma = 0.99;       // discount, [0, 1]
  double eps_start = 1.0;    // exploration schedule: eps_end + (start-end)*decay^episode
  double eps_end = 0.05;
  double eps_decay = 0.998;
  std::uint64_t seed = 42;
  int epoch_episodes = 50;   // training-log granularity
  int eval_every = 0;        // validation cadence in episodes; 0 = off

  void validate() const {
    if (episodes < 1) throw domain_error("train.episodes must be >= 1");
    if (!(alpha > 0.0 && alpha <= 1.0))
      throw domain_error("train.alpha must be in (0, 1]");
    if (!(gamma >= 0.0 && gamma <= 1.0))
      throw domain_error("train.gamma must be in [0, 1]");
    if (!(eps_start >= 0.0 && eps_start <= 1.0) || !(eps_end >= 0.0 && eps_end <= 1.0))
      throw domain_error("train.eps_start/eps_end must be in [0, 1]");
    if (!(eps_decay > 0.0 && eps_decay <= 1.0))
      throw domain_error("train.eps_decay must be in (0, 1]");
    if (epoch_episodes < 1) throw domain_error("train.epoch_episodes must be >= 1");
  }
};

/// One tabular Q-learning backup:
/// q <- (1-alpha) q + alpha (r + gamma max_a' q[s', a']); terminal steps
/// bootstrap with zero.
inline void q_update(QTable& qt, const StateCell& s, int a, double reward,
                     const StateCell& next, const TrainConfig& cfg,
                     bool terminal = false) {
  const std::size_t i = qt.index(s, a);
  const double target = reward + (terminal ? 0.0 : cfg.gamma * qt.max_q(next));
  qt.q[i] = (1.0 - cfg.alpha) * qt.q[i] + cfg.alpha * target;
  ++qt.visits[i];
}

/// Value-copyable greedy policy over a table. The table must outlive the policy.
struct GreedyPolicy {
  const QTable* table = nullptr;
  RlAction operator()(const RlState& s) const {
    const StateCell c = discretize(s, table->bins);
    return RlAction{action_value(table->bins, table->greedy_action(c))};
  }
};

inline Policy greedy_policy(const QTable& qt) { return GreedyPolicy{&qt}; }

struct TrainLog {
  std::vector<double> epoch_mean_cost;    // mean training-episode cost per epoch
  std::vector<double> val_cost;           // greedy validation cost at each eval point
  std::vector<double> val_best_cost;      // running minimum of val_cost
};

/// Derives the load bin range from a dataset so train/eval discretize alike.
inline void fit_load_range(Bins& b, const Dataset& ds) {
  double lo = 0.0, hi = 0.0;
  bool first = true;
  for (const auto& ep : ds.episodes)
    for (double v : net_load(ep)) {
      if (first) {
        lo = hi = v;
        first = false;
      } else {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
    }
  b.load_min_kw = lo;
  b.load_max_kw = hi;
}

/// Epsilon-greedy tabular training over the dataset's train partition (every
/// episode when no split labels are present). Deterministic for a given
/// (seed, dataset, config): same table bytes every run.
inline QTable train(const Dataset& ds, const CaseConfig& env_cfg, const Bins& bins_in,
                    const TrainConfig& cfg, TrainLog* log = nullptr) {
  cfg.validate();
  env_cfg.validate();
  std::vector<std::size_t> train_idx;
  if (ds.split.empty()) {
    for (std::size_t i = 0; i < ds.episodes.size(); ++i) train_idx.push_back(i);
  } else {
    train_idx = ds.indices_of(Split::train);
  }
  if (train_idx.empty()) throw domain_error("train: no training episodes");
  const std::vector<std::size_t> val_idx =
      ds.split.empty() ? std::vector<std::size_t>{} : ds.indices_of(Split::validation);

  Bins bins = bins_in;
  bins.e_max_kwh = env_cfg.spec.e_max_kwh;
  if (bins.load_min_kw == 0.0 && bins.load_max_kw == 0.0) fit_load_range(bins, ds);
  QTable qt = QTable::make(bins);

  Rng rng(cfg.seed);
  double epoch_sum = 0.0;
  int epoch_count = 0;
  for (int e = 0; e < cfg.episodes; ++e) {
    const EpisodeProfile& ep =
        ds.episodes[train_idx[rng.below(train_idx.size())]];
    const double eps =
        cfg.eps_end + (cfg.eps_start - cfg.eps_end) * std::pow(cfg.eps_decay, e);
    RlState s = env_reset(ep, env_cfg);
    StateCell cell = discretize(s, bins);
    double cost = 0.0;
    const int n = ep.n_steps();
    for (int k = 0; k < n; ++k) {
      const int a = rng.u01() < eps ? static_cast<int>(rng.below(bins.action))
                                    : qt.greedy_action(cell);
      StepOutcome out = env_step(s, RlAction{action_value(bins, a)}, ep, env_cfg, k);
      const StateCell next_cell = discretize(out.next, bins);
      q_update(qt, cell, a, out.reward, next_cell, cfg, k == n - 1);
      cost += -out.reward;
      s = out.next;
      cell = next_cell;
    }
    epoch_sum += cost;
    if (++epoch_count == cfg.epoch_episodes) {
      if (log) log->epoch_mean_cost.push_back(epoch_sum / epoch_count);
      epoch_sum = 0.0;
      epoch_count = 0;
    }
    if (log && cfg.eval_every > 0 && !val_idx.empty() &&
        (e + 1) % cfg.eval_every == 0) {
      double v = 0.0;
      for (std::size_t i : val_idx)
        v += rollout(greedy_policy(qt), ds.episodes[i], env_cfg).total_cost;
      v /= static_cast<double>(val_idx.size());
      log->val_cost.push_back(v);
      log->val_best_cost.push_back(
          log->val_best_cost.empty() ? v : std::min(log->val_best_cost.back(), v));
    }
  }
  if (log && epoch_count > 0) log->epoch_mean_cost.push_back(epoch_sum / epoch_count);
  return qt;
}

// Text persistence: one header line
//   soc_bins hour_bins load_bins action_bins e_max load_min load_max
// then one `soc_bin,hour_bin,load_bin,action_bin,q_value` row per cell.
inline void save_qtable(const QTable& qt, const std::string& path) {
  std::ofstream f = open_out(path);
  f << fmt_int(qt.bins.soc) << ' ' << fmt_int(qt.bins.hour) << ' '
    << fmt_int(qt.bins.load) << ' ' << fmt_int(qt.bins.action) << ' '
    << fmt_double(qt.bins.e_max_kwh) << ' ' << fmt_double(qt.bins.load_min_kw) << ' '
    << fmt_double(qt.bins.load_max_kw) << "\n";
  std::size_t i = 0;
  for (int s = 0; s < qt.bins.soc; ++s)
    for (int h = 0; h < qt.bins.hour; ++h)
      for (int l = 0; l < qt.bins.load; ++l)
        for (int a = 0; a < qt.bins.action; ++a, ++i)
          f << fmt_int(s) << ',' << fmt_int(h) << ',' << fmt_int(l) << ','
            << fmt_int(a) << ',' << fmt_double(qt.q[i]) << "\n";
  if (!f) throw io_error("write failed: " + path);
}

inline QTable load_qtable(const std::string& path) {
  std::ifstream f = open_in(path);
  std::string row;
  if (!std::getline(f, row)) throw parse_error("line 1: empty q-table file " + path);
  std::istringstream hdr(row);
  Bins b;
  if (!(hdr >> b.soc >> b.hour >> b.load >> b.action >> b.e_max_kwh >>
        b.load_min_kw >> b.load_max_kw))
    throw parse_error("line 1: bad q-table header in " + path);
  QTable qt = QTable::make(b);
  std::size_t line = 1;
  std::size_t filled = 0;
  while (std::getline(f, row)) {
    ++line;
    if (trim(row).empty()) continue;
    auto cells = split_csv_row(row);
    if (cells.size() != 5)
      throw parse_error("line " + std::to_string(line) + ": expected 5 fields");
    StateCell c;
    c.soc = static_cast<int>(parse_int(trim(cells[0]), line));
    c.hour = static_cast<int>(parse_int(trim(cells[1]), line));
    c.load = static_cast<int>(parse_int(trim(cells[2]), line));
    int a = static_cast<int>(parse_int(trim(cells[3]), line));
    if (c.soc < 0 || c.soc >= b.soc || c.hour < 0 || c.hour >= b.hour || c.load < 0 ||
        c.load >= b.load || a < 0 || a >= b.action)
      throw parse_error("line " + std::to_string(line) + ": cell index out of range");
    qt.q[qt.index(c, a)] = parse_double(trim(cells[4]), line);
    ++filled;
  }
  if (filled != qt.q.size())
    throw parse_error("q-table " + path + ": expected " + std::to_string(qt.q.size()) +
                      " cells, got " + std::to_string(filled));
  return qt;
}

}  // namespace stodis
