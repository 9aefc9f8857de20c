#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <functional>
#include <limits>
#include <string>
#include <thread>
#include <vector>

#include "stodis/csv.hpp"
#include "stodis/errors.hpp"
#include "stodis/grid_model.hpp"
#include "stodis/profiles.hpp"
#include "stodis/rl_env.hpp"

namespace stodis {

struct Method {
  std::string id;
  std::function<DispatchTrajectory(const EpisodeProfile&)> run;
};

struct MethodResult {
  std::string method_id;
  std::vector<std::string> episode_ids;
  std::vector<DispatchTrajectory> trajectories;  // empty slot when failed
  std::vector<double> episode_cost;              // NaN when failed
  std::vector<char> failed;
  double mean_cost = 0.0;
  double var_cost = 0.0;  // population variance over succeeded episodes
  double raw_mse = 0.0;   // filled by normalized_mse
  double norm_mse = 0.0;
  int n_failed = 0;
};

inline double mean_of(const std::vector<double>& xs) {
  double s = 0.0;
  for (double x : xs) s += x;
  return xs.empty() ? 0.0 : s / static_cast<double>(xs.size());
}

/// Two-pass population variance.
inline double variance_of(const std::vector<double>& xs) {
  if (xs.empty()) return 0.0;
  const double mu = mean_of(xs);
  double s = 0.0;
  for (double x : xs) s += (x - mu) * (x - mu);
  return s / static_cast<double>(xs.size());
}

/// Runs a method over the episode set. Episodes evaluate concurrently (each
/// writes only its own slot); aggregation is a sequential reduce afterwards, so
/// results are independent of thread scheduling. Infeasible episodes are
/// excluded from the aggregates and counted.
inline MethodResult evaluate_method(const Method& method,
                                    const std::vector<const EpisodeProfile*>& episodes,
                                    unsigned threads = 0) {
  MethodResult r;
  r.method_id = method.id;
  const std::size_t n = episodes.size();
  r.episode_ids.resize(n);
  r.trajectories.resize(n);
  r.episode_cost.assign(n, std::numeric_limits<double>::quiet_NaN());
  r.failed.assign(n, 0);
  for (std::size_t i = 0; i < n; ++i) r.episode_ids[i] = episodes[i]->id;

  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min<unsigned>(threads, n == 0 ? 1 : static_cast<unsigned>(n));
  std::atomic<std::size_t> cursor{0};
  auto worker = [&]() {
    for (;;) {
      const std::size_t i = cursor.fetch_add(1);
      if (i >= n) return;
      try {
        r.trajectories[i] = method.run(*episodes[i]);
        r.episode_cost[i] = r.trajectories[i].total_cost;
      } catch (const error&) {
        r.failed[i] = 1;
      }
    }
  };
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  std::vector<double> ok;
  for (std::size_t i = 0; i < n; ++i) {
    if (r.failed[i])
      ++r.n_failed;
    else
      ok.push_back(r.episode_cost[i]);
  }
  r.mean_cost = mean_of(ok);
  r.var_cost = variance_of(ok);
  return r;
}

enum class MseBasis { step_cost, episode_total, soc };

inline const char* mse_basis_name(MseBasis b) {
  switch (b) {
    case MseBasis::step_cost: return "step_cost";
    case MseBasis::episode_total: return "episode_total";
    case MseBasis::soc: return "soc";
  }
  return "?";
}

struct ComparisonTable {
  std::string case_id;
  std::vector<std::string> method_ids;  // baseline first
  std::vector<double> raw_mse;
  std::vector<double> norm_mse;
};

namespace detail {
inline double raw_mse_pair(const MethodResult& m, const MethodResult& b, MseBasis basis) {
  double sum = 0.0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < m.episode_ids.size(); ++i) {
    if (m.failed[i] || b.failed[i]) continue;
    const DispatchTrajectory& tm = m.trajectories[i];
    const DispatchTrajectory& tb = b.trajectories[i];
    switch (basis) {
      case MseBasis::step_cost:
        for (std::size_t k = 0; k < tm.stage_cost.size(); ++k) {
          const double d = tm.stage_cost[k] - tb.stage_cost[k];
          sum += d * d;
          ++count;
        }
        break;
      case MseBasis::episode_total: {
        const double d = tm.total_cost - tb.total_cost;
        sum += d * d;
        ++count;
        break;
      }
      case MseBasis::soc:
        for (std::size_t k = 0; k < tm.soc_kwh.size(); ++k) {
          const double d = tm.soc_kwh[k] - tb.soc_kwh[k];
          sum += d * d;
          ++count;
        }
        break;
    }
  }
  return count == 0 ? 0.0 : sum / static_cast<double>(count);
}
}  // namespace detail

/// Raw MSE of each method against the classical baseline (mean over episodes
/// and steps of squared stage-cost deviation by default), then normalized per
/// case so the worst method scores exactly 1. The baseline itself scores 0.
/// All results must cover the identical episode list.
inline ComparisonTable normalized_mse(std::vector<MethodResult>& methods,
                                      MethodResult& baseline,
                                      const std::string& case_id,
                                      MseBasis basis = MseBasis::step_cost) {
  for (const auto& m : methods)
    if (m.episode_ids != baseline.episode_ids)
      throw domain_error("normalized_mse: method '" + m.method_id +
                         "' evaluated on a different episode set than baseline");
  ComparisonTable table;
  table.case_id = case_id;
  baseline.raw_mse = 0.0;
  baseline.norm_mse = 0.0;
  table.method_ids.push_back(baseline.method_id);
  table.raw_mse.push_back(0.0);
  table.norm_mse.push_back(0.0);
  double worst = 0.0;
  for (auto& m : methods) {
    m.raw_mse = detail::raw_mse_pair(m, baseline, basis);
    worst = std::max(worst, m.raw_mse);
  }
  for (auto& m : methods) {
    m.norm_mse = worst > 0.0 ? m.raw_mse / worst : 0.0;
    table.method_ids.push_back(m.method_id);
    table.raw_mse.push_back(m.raw_mse);
    table.norm_mse.push_back(m.norm_mse);
  }
  return table;
}

inline const char* kSummaryCsvHeader =
    "case,method,mean_cost,var_cost,raw_mse,norm_mse,n_failed";

struct ExportManifest {
  std::vector<std::string> files;  // relative to the export directory
};

/// Writes one comparison CSV mirroring the per-case method table: one row per
/// method, one column per case (blank where a case was not run).
inline void write_comparison_csv(const std::vector<ComparisonTable>& tables,
                                 const std::string& path) {
  static const char* kCases[] = {"is", "ls", "lt"};
  std::vector<std::string> methods;
  for (const auto& t : tables)
    for (const auto& id : t.method_ids)
      if (std::find(methods.begin(), methods.end(), id) == methods.end())
        methods.push_back(id);
  std::ofstream f = open_out(path);
  f << "method,IS,LS,LT\n";
  for (const auto& id : methods) {
    f << id;
    for (const char* c : kCases) {
      f << ',';
      for (const auto& t : tables) {
        if (t.case_id != c) continue;
        for (std::size_t i = 0; i < t.method_ids.size(); ++i)
          if (t.method_ids[i] == id) f << fmt_double(t.norm_mse[i]);
      }
    }
    f << "\n";
  }
  if (!f) throw io_error("write failed: " + path);
}

/// Writes per-episode trajectory CSVs for every method, one summary CSV for the
/// case, and one comparison CSV; returns (and writes) the file manifest.
/// Identical inputs produce byte-identical files.
inline ExportManifest export_run(const std::vector<MethodResult>& results,
                                 const ComparisonTable& table,
                                 const std::string& out_dir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(fs::path(out_dir) / "trajectories", ec);
  if (ec) throw io_error("cannot create export directory " + out_dir);
  ExportManifest man;
  for (const auto& r : results) {
    for (std::size_t i = 0; i < r.episode_ids.size(); ++i) {
      if (r.failed[i]) continue;
      std::string rel = "trajectories/" + table.case_id + "_" + r.method_id + "_" +
                        r.episode_ids[i] + ".csv";
      write_trajectory_csv(r.trajectories[i], (fs::path(out_dir) / rel).string());
      man.files.push_back(rel);
    }
  }
  {
    std::string rel = "summary_" + table.case_id + ".csv";
    std::ofstream f = open_out((fs::path(out_dir) / rel).string());
    f << kSummaryCsvHeader << "\n";
    for (const auto& r : results)
      f << table.case_id << ',' << r.method_id << ',' << fmt_double(r.mean_cost) << ','
        << fmt_double(r.var_cost) << ',' << fmt_double(r.raw_mse) << ','
        << fmt_double(r.norm_mse) << ',' << fmt_int(r.n_failed) << "\n";
    if (!f) throw io_error("write failed: " + rel);
    man.files.push_back(rel);
  }
  {
    std::string rel = "comparison.csv";
    write_comparison_csv({table}, (fs::path(out_dir) / rel).string());
    man.files.push_back(rel);
  }
  {
    std::ofstream f = open_out((fs::path(out_dir) / "manifest.txt").string());
    for (const auto& p : man.files) f << p << "\n";
    if (!f) throw io_error("write failed: manifest.txt");
  }
  return man;
}

}  // namespace stodis
