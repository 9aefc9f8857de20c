#pragma once

#include <cstdlib>
#include <string>

#include "stodis/csv.hpp"
#include "stodis/errors.hpp"
#include "stodis/grid_model.hpp"
#include "stodis/harness.hpp"
#include "stodis/profiles.hpp"
#include "stodis/rl_agent.hpp"
#include "stodis/rl_env.hpp"
#include "stodis/solver_dp.hpp"
#include "stodis/solver_pmp.hpp"

namespace stodis {

/// Everything a CLI run needs. Values resolve with precedence
/// command line > config file > built-in default; the seed falls back to the
/// STORAGE_DISPATCH_SEED environment variable before its default.
struct RunConfig {
  CaseId case_id = CaseId::IS;
  std::uint64_t seed = 42;
  bool seed_set = false;  // true once CLI or file provided a seed
  std::string dataset;    // episode CSV path
  std::string out_dir = "out";
  std::string qtable_path;
  double step_hours = 0.5;
  int m_levels = 201;
  std::size_t n_test = 100;
  std::size_t n_val = 10;
  StorageSpec storage;
  TransmissionSpec transmission;
  CostModel cost;
  PmpOptions pmp;
  DpOptions dp;
  bool physics_exact = false;
  MseBasis mse_basis = MseBasis::step_cost;
  SynthParams gen;
  int gen_episodes = 200;
  Bins bins;
  TrainConfig train;
  unsigned threads = 0;  // 0 = hardware concurrency

  void validate() const {
    storage.validate();
    transmission.validate();
    if (!(cost.quad_coeff > 0.0)) throw domain_error("cost.quad_coeff must be > 0");
    if (cost.penalty_q < 0.0) throw domain_error("cost.penalty_q must be >= 0");
    if (m_levels < 2) throw domain_error("m_levels must be >= 2");
    if (!(step_hours > 0.0)) throw domain_error("step_hours must be > 0");
    gen.validate();
    if (gen_episodes < 1) throw domain_error("gen.n_episodes must be >= 1");
    train.validate();
    if (bins.soc < 1 || bins.hour < 1 || bins.load < 1 || bins.action < 2)
      throw domain_error("train bin counts invalid");
    if (pmp.tol_kwh < 0.0) throw domain_error("pmp.tol_kwh must be >= 0");
    if (pmp.max_iter < 1) throw domain_error("pmp.max_iter must be >= 1");
    if (dp.p_max_kw < 0.0) throw domain_error("dp.p_max_kw must be >= 0");
  }
};

/// Cost model as the solvers consume it. penalty_q = 0 in the run config means
/// "use the PMP default rule"; solvers that never touch the penalty still
/// validate it, so give them a benign positive value.
inline CostModel effective_cost(const RunConfig& cfg) {
  CostModel cm = cfg.cost;
  if (cm.penalty_q <= 0.0) cm.penalty_q = 100.0;
  return cm;
}

inline CaseId parse_case(const std::string& v) {
  if (v == "is" || v == "IS") return CaseId::IS;
  if (v == "ls" || v == "LS") return CaseId::LS;
  if (v == "lt" || v == "LT") return CaseId::LT;
  throw domain_error("case: expected is|ls|lt, got '" + v + "'");
}

namespace detail {

inline bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "on" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "off" || v == "no") return false;
  throw domain_error(key + ": expected a boolean, got '" + v + "'");
}

inline double parse_num(const std::string& key, const std::string& v) {
  try {
    return parse_double(v, 0);
  } catch (const parse_error&) {
    throw domain_error(key + ": expected a number, got '" + v + "'");
  }
}

inline long long parse_ll(const std::string& key, const std::string& v) {
  try {
    return parse_int(v, 0);
  } catch (const parse_error&) {
    throw domain_error(key + ": expected an integer, got '" + v + "'");
  }
}

}  // namespace detail

/// Applies one `key = value` pair; throws domain_error naming the key on any
/// unknown key or out-of-domain value.
inline void config_set(RunConfig& cfg, const std::string& key, const std::string& value) {
  using detail::parse_bool;
  using detail::parse_ll;
  using detail::parse_num;
  if (key == "case") { cfg.case_id = parse_case(value); return; }
  if (key == "seed") {
    cfg.seed = static_cast<std::uint64_t>(parse_ll(key, value));
    cfg.seed_set = true;
    return;
  }
  if (key == "dataset") { cfg.dataset = value; return; }
  if (key == "out_dir") { cfg.out_dir = value; return; }
  if (key == "qtable") { cfg.qtable_path = value; return; }
  if (key == "step_hours") { cfg.step_hours = parse_num(key, value); return; }
  if (key == "m_levels") { cfg.m_levels = static_cast<int>(parse_ll(key, value)); return; }
  if (key == "n_test") { cfg.n_test = static_cast<std::size_t>(parse_ll(key, value)); return; }
  if (key == "n_val") { cfg.n_val = static_cast<std::size_t>(parse_ll(key, value)); return; }
  if (key == "threads") { cfg.threads = static_cast<unsigned>(parse_ll(key, value)); return; }
  if (key == "storage.e_max_kwh") { cfg.storage.e_max_kwh = parse_num(key, value); return; }
  if (key == "storage.eta_ch") { cfg.storage.eta_ch = parse_num(key, value); return; }
  if (key == "storage.eta_dis") { cfg.storage.eta_dis = parse_num(key, value); return; }
  if (key == "storage.eta_decay") { cfg.storage.eta_decay = parse_num(key, value); return; }
  if (key == "transmission.alpha") { cfg.transmission.alpha = parse_num(key, value); return; }
  if (key == "transmission.eta_tr") { cfg.transmission.eta_tr = parse_num(key, value); return; }
  if (key == "cost.quad_coeff") { cfg.cost.quad_coeff = parse_num(key, value); return; }
  if (key == "cost.penalty_q") { cfg.cost.penalty_q = parse_num(key, value); return; }
  if (key == "pmp.tol_kwh") { cfg.pmp.tol_kwh = parse_num(key, value); return; }
  if (key == "pmp.max_iter") { cfg.pmp.max_iter = static_cast<int>(parse_ll(key, value)); return; }
  if (key == "pmp.lambda_max") { cfg.pmp.lambda_max = parse_num(key, value); return; }
  if (key == "pmp.costate_rhs") {
    if (value == "derivative") cfg.pmp.costate_rhs = CostateRhs::derivative;
    else if (value == "literal") cfg.pmp.costate_rhs = CostateRhs::literal;
    else throw domain_error("pmp.costate_rhs: expected derivative|literal, got '" + value + "'");
    return;
  }
  if (key == "dp.terminal_pinned") { cfg.dp.terminal_pinned = parse_bool(key, value); return; }
  if (key == "dp.p_max_kw") { cfg.dp.p_max_kw = parse_num(key, value); return; }
  if (key == "env.physics_exact") { cfg.physics_exact = parse_bool(key, value); return; }
  if (key == "harness.mse_basis") {
    if (value == "step_cost") cfg.mse_basis = MseBasis::step_cost;
    else if (value == "episode_total") cfg.mse_basis = MseBasis::episode_total;
    else if (value == "soc") cfg.mse_basis = MseBasis::soc;
    else throw domain_error("harness.mse_basis: expected step_cost|episode_total|soc");
    return;
  }
  if (key == "gen.n_episodes") { cfg.gen_episodes = static_cast<int>(parse_ll(key, value)); return; }
  if (key == "gen.n_steps") { cfg.gen.n_steps = static_cast<int>(parse_ll(key, value)); return; }
  if (key == "gen.step_hours") { cfg.gen.step_hours = parse_num(key, value); return; }
  if (key == "gen.peak_load_kw") { cfg.gen.peak_load_kw = parse_num(key, value); return; }
  if (key == "gen.base_load_kw") { cfg.gen.base_load_kw = parse_num(key, value); return; }
  if (key == "gen.peak_pv_kw") { cfg.gen.peak_pv_kw = parse_num(key, value); return; }
  if (key == "gen.noise") { cfg.gen.noise = parse_num(key, value); return; }
  if (key == "train.episodes") { cfg.train.episodes = static_cast<int>(parse_ll(key, value)); return; }
  if (key == "train.alpha") { cfg.train.alpha = parse_num(key, value); return; }
  if (key == "train.gamma") { cfg.train.gamma = parse_num(key, value); return; }
  if (key == "train.eps_start") { cfg.train.eps_start = parse_num(key, value); return; }
  if (key == "train.eps_end") { cfg.train.eps_end = parse_num(key, value); return; }
  if (key == "train.eps_decay") { cfg.train.eps_decay = parse_num(key, value); return; }
  if (key == "train.epoch_episodes") { cfg.train.epoch_episodes = static_cast<int>(parse_ll(key, value)); return; }
  if (key == "train.eval_every") { cfg.train.eval_every = static_cast<int>(parse_ll(key, value)); return; }
  if (key == "train.soc_bins") { cfg.bins.soc = static_cast<int>(parse_ll(key, value)); return; }
  if (key == "train.hour_bins") { cfg.bins.hour = static_cast<int>(parse_ll(key, value)); return; }
  if (key == "train.load_bins") { cfg.bins.load = static_cast<int>(parse_ll(key, value)); return; }
  if (key == "train.action_bins") { cfg.bins.action = static_cast<int>(parse_ll(key, value)); return; }
  throw domain_error("unknown config key '" + key + "'");
}

/// Flat `key = value` file; `#` starts a comment; blank lines ignored.
inline void apply_config_file(RunConfig& cfg, const std::string& path) {
  std::ifstream f = open_in(path);
  std::string row;
  std::size_t line = 0;
  while (std::getline(f, row)) {
    ++line;
    const std::size_t hash = row.find('#');
    if (hash != std::string::npos) row.erase(hash);
    const std::string s = trim(row);
    if (s.empty()) continue;
    const std::size_t eq = s.find('=');
    if (eq == std::string::npos)
      throw domain_error(path + " line " + std::to_string(line) +
                         ": expected 'key = value'");
    const std::string key = trim(s.substr(0, eq));
    const std::string value = trim(s.substr(eq + 1));
    if (key.empty())
      throw domain_error(path + " line " + std::to_string(line) + ": empty key");
    try {
      config_set(cfg, key, value);
    } catch (const domain_error& e) {
      throw domain_error(path + " line " + std::to_string(line) + ": " + e.what());
    }
  }
}

/// Last-resort seed source when neither CLI nor file provided one.
inline void apply_seed_env(RunConfig& cfg) {
  if (cfg.seed_set) return;
  const char* env = std::getenv("STORAGE_DISPATCH_SEED");
  if (!env || !*env) return;
  try {
    cfg.seed = static_cast<std::uint64_t>(parse_int(env, 0));
    cfg.seed_set = true;
  } catch (const parse_error&) {
    throw domain_error(std::string("STORAGE_DISPATCH_SEED: bad integer '") + env + "'");
  }
}

}  // namespace stodis
