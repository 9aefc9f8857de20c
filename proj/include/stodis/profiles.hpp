#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "stodis/csv.hpp"
#include "stodis/errors.hpp"
#include "stodis/rng.hpp"

namespace stodis {

/// One simulated day of household load and PV production on a uniform step grid.
/// Powers are piecewise-constant over each step (left-rectangle integration).
struct EpisodeProfile {
  std::string id;
  double step_hours = 0.5;
  std::vector<double> load_kw;  // consumer demand, >= 0
  std::vector<double> pv_kw;    // solar production, >= 0

  int n_steps() const { return static_cast<int>(load_kw.size()); }

  void validate() const {
    if (load_kw.empty()) throw domain_error("episode '" + id + "': no steps");
    if (load_kw.size() != pv_kw.size())
      throw domain_error("episode '" + id + "': load/pv length mismatch");
    if (!(step_hours > 0.0))
      throw domain_error("episode '" + id + "': step_hours must be > 0");
    for (double v : load_kw)
      if (!(v >= 0.0)) throw domain_error("episode '" + id + "': negative load");
    for (double v : pv_kw)
      if (!(v >= 0.0)) throw domain_error("episode '" + id + "': negative pv");
  }
};

struct SynthParams {
  int n_steps = 48;
  double step_hours = 0.5;
  double peak_load_kw = 2.0;  // evening peak height
  double base_load_kw = 0.3;  // overnight floor
  double peak_pv_kw = 1.5;    // midday PV bell height
  double noise = 0.05;        // multiplicative, uniform in [-noise, +noise]

  void validate() const {
    if (n_steps < 1) throw domain_error("gen.n_steps must be >= 1");
    if (!(step_hours > 0.0)) throw domain_error("gen.step_hours must be > 0");
    if (!(peak_load_kw >= 0.0)) throw domain_error("gen.peak_load_kw must be >= 0");
    if (!(base_load_kw >= 0.0)) throw domain_error("gen.base_load_kw must be >= 0");
    if (!(peak_pv_kw >= 0.0)) throw domain_error("gen.peak_pv_kw must be >= 0");
    if (!(noise >= 0.0)) throw domain_error("gen.noise must be >= 0");
  }
};

/// Deterministic synthetic day: double-peaked load (morning + evening bumps over a
/// base), PV as a midday bell clipped to daylight hours, both with seeded
/// multiplicative noise. Identical (seed, params) give identical samples.
inline EpisodeProfile synth_episode(std::uint64_t seed, const SynthParams& p = {}) {
  p.validate();
  auto bump = [](double t, double mu, double sigma) {
    double z = (t - mu) / sigma;
    return std::exp(-0.5 * z * z);
  };
  const double swing = std::max(0.0, p.peak_load_kw - p.base_load_kw);
  Rng rng(seed);
  EpisodeProfile ep;
  ep.id = "synth-" + std::to_string(seed);
  ep.step_hours = p.step_hours;
  ep.load_kw.resize(p.n_steps);
  ep.pv_kw.resize(p.n_steps);
  for (int k = 0; k < p.n_steps; ++k) {
    double t = (k + 0.5) * p.step_hours;  // sample shapes at the step midpoint
    double load0 = p.base_load_kw + 0.6 * swing * bump(t, 8.0, 2.0) +
                   swing * bump(t, 19.5, 2.5);
    double pv0 = (t >= 6.0 && t <= 19.0) ? p.peak_pv_kw * bump(t, 12.5, 2.2) : 0.0;
    double u_load = rng.symmetric();
    double u_pv = rng.symmetric();
    ep.load_kw[k] = std::max(0.0, load0 * (1.0 + p.noise * u_load));
    ep.pv_kw[k] = pv0 > 0.0 ? std::max(0.0, pv0 * (1.0 + p.noise * u_pv)) : 0.0;
  }
  return ep;
}

/// Net load P_L = load - pv, per step. May be negative (PV surplus).
inline std::vector<double> net_load(const EpisodeProfile& ep) {
  std::vector<double> out(ep.load_kw.size());
  for (std::size_t k = 0; k < out.size(); ++k)
    out[k] = ep.load_kw[k] - ep.pv_kw[k];
  return out;
}

/// Cumulative net energy E_L(t_i) at the n_steps+1 grid nodes; E_L(t_0) = 0.
inline std::vector<double> cumulative_load(const EpisodeProfile& ep) {
  std::vector<double> c(ep.load_kw.size() + 1, 0.0);
  for (std::size_t k = 0; k < ep.load_kw.size(); ++k)
    c[k + 1] = c[k] + (ep.load_kw[k] - ep.pv_kw[k]) * ep.step_hours;
  return c;
}

enum class Split { train, validation, test };

struct Dataset {
  std::vector<EpisodeProfile> episodes;
  std::vector<Split> split;  // parallel to episodes; empty until split_dataset

  std::vector<std::size_t> indices_of(Split s) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < split.size(); ++i)
      if (split[i] == s) out.push_back(i);
    return out;
  }
};

inline const char* kEpisodeCsvHeader = "episode_id,step,load_kw,pv_kw";

inline void save_csv(const Dataset& ds, const std::string& path) {
  std::ofstream f = open_out(path);
  f << kEpisodeCsvHeader << "\n";
  for (const auto& ep : ds.episodes)
    for (int k = 0; k < ep.n_steps(); ++k)
      f << ep.id << ',' << fmt_int(k) << ',' << fmt_double(ep.load_kw[k]) << ','
        << fmt_double(ep.pv_kw[k]) << "\n";
  if (!f) throw io_error("write failed: " + path);
}

/// Reads the episode CSV format. Steps must be contiguous from 0 within each
/// episode; episodes are returned in order of first appearance. A header-only
/// file yields an empty dataset.
inline Dataset load_csv(const std::string& path, double step_hours = 0.5) {
  std::ifstream f = open_in(path);
  std::string row;
  std::size_t line = 0;
  if (!std::getline(f, row)) throw parse_error("line 1: missing header in " + path);
  ++line;
  if (trim(row) != kEpisodeCsvHeader)
    throw parse_error("line 1: expected header '" + std::string(kEpisodeCsvHeader) +
                      "' in " + path);
  Dataset ds;
  std::map<std::string, std::size_t> index;
  while (std::getline(f, row)) {
    ++line;
    if (trim(row).empty()) continue;
    auto cells = split_csv_row(row);
    if (cells.size() != 4)
      throw parse_error("line " + std::to_string(line) + ": expected 4 fields, got " +
                        std::to_string(cells.size()));
    const std::string id = trim(cells[0]);
    if (id.empty()) throw parse_error("line " + std::to_string(line) + ": empty episode_id");
    long long step = parse_int(trim(cells[1]), line);
    double load = parse_double(trim(cells[2]), line);
    double pv = parse_double(trim(cells[3]), line);
    if (load < 0.0)
      throw parse_error("line " + std::to_string(line) + ": negative load_kw");
    if (pv < 0.0)
      throw parse_error("line " + std::to_string(line) + ": negative pv_kw");
    auto it = index.find(id);
    if (it == index.end()) {
      index.emplace(id, ds.episodes.size());
      ds.episodes.push_back(EpisodeProfile{id, step_hours, {}, {}});
      it = index.find(id);
    }
    EpisodeProfile& ep = ds.episodes[it->second];
    if (step != ep.n_steps())
      throw parse_error("line " + std::to_string(line) + ": episode '" + id +
                        "' step " + std::to_string(step) + " out of order (expected " +
                        std::to_string(ep.n_steps()) + ")");
    ep.load_kw.push_back(load);
    ep.pv_kw.push_back(pv);
  }
  for (const auto& ep : ds.episodes) ep.validate();
  return ds;
}

/// Labels episodes test/validation/train by a seeded shuffle of indices. The
/// episode order itself is untouched; the same (dataset, sizes, seed) always
/// produce the same partition.
inline Dataset split_dataset(const Dataset& ds, std::size_t n_test, std::size_t n_val,
                             std::uint64_t seed) {
  const std::size_t n = ds.episodes.size();
  if (n_test + n_val > n)
    throw domain_error("split: n_test + n_val = " + std::to_string(n_test + n_val) +
                       " exceeds episode count " + std::to_string(n));
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  Rng rng(seed);
  for (std::size_t i = n; i > 1; --i) {  // Fisher-Yates, explicit for stable streams
    std::size_t j = static_cast<std::size_t>(rng.below(i));
    std::swap(idx[i - 1], idx[j]);
  }
  Dataset out = ds;
  out.split.assign(n, Split::train);
  for (std::size_t i = 0; i < n_test; ++i) out.split[idx[i]] = Split::test;
  for (std::size_t i = 0; i < n_val; ++i) out.split[idx[n_test + i]] = Split::validation;
  return out;
}

}  // namespace stodis
