// stodis: storage dispatch on a simulated microgrid.
//
// Subcommands:
//   gen-data  write a synthetic episode CSV
//   solve     run a classical solver (sp | pmp | dp) over the test split
//   train     fit a tabular Q policy on the train split
//   eval      compare the trained policy against the classical baseline
//   export    run one or more methods and export all artifacts
//
// Exit codes: 0 ok, 2 usage/config, 3 infeasible, 4 I/O.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "stodis/config.hpp"
#include "stodis/csv.hpp"
#include "stodis/errors.hpp"
#include "stodis/grid_model.hpp"
#include "stodis/harness.hpp"
#include "stodis/profiles.hpp"
#include "stodis/rl_agent.hpp"
#include "stodis/rl_env.hpp"
#include "stodis/solver_dp.hpp"
#include "stodis/solver_pmp.hpp"
#include "stodis/solver_sp.hpp"

namespace fs = std::filesystem;
using namespace stodis;

namespace {

struct CliOverrides {
  std::string config_path;
  std::optional<long long> seed;
  std::optional<std::string> case_name;
  std::optional<std::string> dataset;
  std::optional<std::string> out_dir;
  std::optional<std::string> qtable;
  std::optional<int> m_levels;
  std::optional<long long> n_test;
  std::optional<long long> n_val;
  std::optional<int> gen_n;
  std::optional<double> noise;
  std::optional<double> peak_load;
  std::optional<double> peak_pv;
  std::optional<double> base_load;
  std::optional<int> train_episodes;
  std::optional<bool> physics_exact;
  std::optional<std::string> method;
  std::optional<std::string> methods;
  bool value_table = false;
};

void add_common(CLI::App* cmd, CliOverrides& ov) {
  cmd->add_option("--config", ov.config_path, "flat key = value config file");
  cmd->add_option("--seed", ov.seed, "RNG seed (overrides config file)");
  cmd->add_option("--case", ov.case_name, "storage case: is | ls | lt");
  cmd->add_option("--dataset", ov.dataset, "episode CSV path");
  cmd->add_option("--out", ov.out_dir, "output directory (or file for gen-data)");
}

/// defaults < config file < command line, per option.
RunConfig resolve(const CliOverrides& ov) {
  RunConfig cfg;
  if (!ov.config_path.empty()) apply_config_file(cfg, ov.config_path);
  if (ov.seed) {
    cfg.seed = static_cast<std::uint64_t>(*ov.seed);
    cfg.seed_set = true;
  }
  if (ov.case_name) cfg.case_id = parse_case(*ov.case_name);
  if (ov.dataset) cfg.dataset = *ov.dataset;
  if (ov.out_dir) cfg.out_dir = *ov.out_dir;
  if (ov.qtable) cfg.qtable_path = *ov.qtable;
  if (ov.m_levels) cfg.m_levels = *ov.m_levels;
  if (ov.n_test) cfg.n_test = static_cast<std::size_t>(*ov.n_test);
  if (ov.n_val) cfg.n_val = static_cast<std::size_t>(*ov.n_val);
  if (ov.gen_n) cfg.gen_episodes = *ov.gen_n;
  if (ov.noise) cfg.gen.noise = *ov.noise;
  if (ov.peak_load) cfg.gen.peak_load_kw = *ov.peak_load;
  if (ov.peak_pv) cfg.gen.peak_pv_kw = *ov.peak_pv;
  if (ov.base_load) cfg.gen.base_load_kw = *ov.base_load;
  if (ov.train_episodes) cfg.train.episodes = *ov.train_episodes;
  if (ov.physics_exact) cfg.physics_exact = *ov.physics_exact;
  apply_seed_env(cfg);
  cfg.train.seed = cfg.seed;
  cfg.validate();
  return cfg;
}

Dataset load_split_dataset(const RunConfig& cfg) {
  if (cfg.dataset.empty())
    throw domain_error("dataset: no episode CSV configured; run `stodis gen-data` "
                       "and pass --dataset");
  if (!fs::exists(cfg.dataset))
    throw domain_error("dataset '" + cfg.dataset +
                       "' not found; produce it with `stodis gen-data`");
  Dataset ds = load_csv(cfg.dataset, cfg.step_hours);
  return split_dataset(ds, cfg.n_test, cfg.n_val, cfg.seed);
}

std::vector<const EpisodeProfile*> pick(const Dataset& ds, Split s) {
  std::vector<const EpisodeProfile*> out;
  for (std::size_t i : ds.indices_of(s)) out.push_back(&ds.episodes[i]);
  return out;
}

void require_method_case(const std::string& method, CaseId c) {
  const bool ok = (method == "sp" && c == CaseId::IS) ||
                  (method == "pmp" && c == CaseId::LS) || method == "dp" ||
                  method == "q";
  if (!ok)
    throw domain_error("method '" + method + "' is not valid for case '" +
                       case_name(c) +
                       "'; valid pairs: sp->is, pmp->ls, dp->any, q->any");
}

Method classical_method(const std::string& id, const RunConfig& cfg) {
  require_method_case(id, cfg.case_id);
  const CostModel cm = effective_cost(cfg);
  if (id == "sp") {
    return Method{id, [cfg, cm](const EpisodeProfile& ep) {
                    EnergyLattice lat = build_lattice(ep, cfg.storage, cfg.m_levels);
                    PathResult path = sp_solve(lat, cm, ep.step_hours);
                    DispatchTrajectory traj = recover_trajectory(path, ep, ep.step_hours);
                    episode_cost(traj, cm, ep.step_hours);
                    return traj;
                  }};
  }
  if (id == "pmp") {
    PmpOptions opts = cfg.pmp;
    opts.penalty_q = cfg.cost.penalty_q;  // 0 keeps the default rule
    return Method{id, [cfg, cm, opts](const EpisodeProfile& ep) {
                    return pmp_solve(ep, cfg.storage, cm, ep.step_hours, opts).trajectory;
                  }};
  }
  if (id == "dp") {
    TransmissionSpec ts = cfg.case_id == CaseId::LT ? cfg.transmission : TransmissionSpec{};
    return Method{id, [cfg, cm, ts](const EpisodeProfile& ep) {
                    return dp_solve(ep, cfg.storage, ts, cm, cfg.m_levels, cfg.dp);
                  }};
  }
  throw domain_error("unknown method '" + id + "'; expected sp|pmp|dp|q");
}

std::string baseline_id(CaseId c) {
  switch (c) {
    case CaseId::IS: return "sp";
    case CaseId::LS: return "pmp";
    case CaseId::LT: return "dp";
  }
  return "dp";
}

CaseConfig env_config(const RunConfig& cfg) {
  CaseConfig ec;
  ec.case_id = cfg.case_id;
  ec.spec = cfg.storage;
  ec.ts = cfg.transmission;
  ec.cm = effective_cost(cfg);
  ec.physics_exact = cfg.physics_exact;
  return ec;
}

int cmd_gen_data(const CliOverrides& ov) {
  RunConfig cfg = resolve(ov);
  std::string out = cfg.out_dir;
  if (ov.out_dir && !ov.out_dir->empty()) out = *ov.out_dir;
  if (fs::path(out).extension() != ".csv") {
    fs::create_directories(out);
    out = (fs::path(out) / "episodes.csv").string();
  } else if (fs::path(out).has_parent_path()) {
    fs::create_directories(fs::path(out).parent_path());
  }
  Dataset ds;
  for (int i = 0; i < cfg.gen_episodes; ++i) {
    EpisodeProfile ep = synth_episode(cfg.seed + static_cast<std::uint64_t>(i), cfg.gen);
    char id[16];
    std::snprintf(id, sizeof(id), "e%04d", i);
    ep.id = id;
    ds.episodes.push_back(std::move(ep));
  }
  save_csv(ds, out);
  std::cout << "wrote " << ds.episodes.size() << " episodes to " << out << "\n";
  return 0;
}

int cmd_solve(const CliOverrides& ov) {
  RunConfig cfg = resolve(ov);
  const std::string method_id = ov.method.value_or(baseline_id(cfg.case_id));
  Method method = classical_method(method_id, cfg);
  Dataset ds = load_split_dataset(cfg);
  auto test = pick(ds, Split::test);
  if (test.empty()) throw domain_error("n_test selected no episodes");
  MethodResult res = evaluate_method(method, test, cfg.threads);
  std::vector<MethodResult> empty;
  ComparisonTable table = normalized_mse(empty, res, case_name(cfg.case_id), cfg.mse_basis);
  ExportManifest man = export_run({res}, table, cfg.out_dir);
  if (res.n_failed > 0)
    std::cerr << "warning: " << res.n_failed << " episode(s) infeasible, excluded\n";
  std::cout << "method " << method_id << " case " << case_name(cfg.case_id)
            << ": mean cost " << fmt_double(res.mean_cost) << ", variance "
            << fmt_double(res.var_cost) << ", " << man.files.size() << " files in "
            << cfg.out_dir << "\n";
  return 0;
}

int cmd_train(const CliOverrides& ov) {
  RunConfig cfg = resolve(ov);
  Dataset ds = load_split_dataset(cfg);
  if (ds.indices_of(Split::train).empty())
    throw domain_error("train: split left no training episodes");
  CaseConfig ec = env_config(cfg);
  Bins bins = cfg.bins;
  TrainConfig tc = cfg.train;
  if (tc.eval_every == 0) tc.eval_every = std::max(1, tc.episodes / 10);
  TrainLog log;
  QTable qt = train(ds, ec, bins, tc, &log);
  fs::create_directories(cfg.out_dir);
  const std::string qpath = cfg.qtable_path.empty()
                                ? (fs::path(cfg.out_dir) / "qtable.txt").string()
                                : cfg.qtable_path;
  if (fs::path(qpath).has_parent_path())
    fs::create_directories(fs::path(qpath).parent_path());
  save_qtable(qt, qpath);
  {
    std::ofstream f = open_out((fs::path(cfg.out_dir) / "train_log.csv").string());
    f << "epoch,mean_cost\n";
    for (std::size_t i = 0; i < log.epoch_mean_cost.size(); ++i)
      f << fmt_int(static_cast<long long>(i)) << ','
        << fmt_double(log.epoch_mean_cost[i]) << "\n";
  }
  {
    std::ofstream f = open_out((fs::path(cfg.out_dir) / "val_log.csv").string());
    f << "eval,val_cost,best_cost\n";
    for (std::size_t i = 0; i < log.val_cost.size(); ++i)
      f << fmt_int(static_cast<long long>(i)) << ',' << fmt_double(log.val_cost[i])
        << ',' << fmt_double(log.val_best_cost[i]) << "\n";
  }
  std::cout << "trained " << tc.episodes << " episodes (case " << case_name(cfg.case_id)
            << "); q-table written to " << qpath << "\n";
  return 0;
}

int cmd_eval(const CliOverrides& ov) {
  RunConfig cfg = resolve(ov);
  const std::string qpath = cfg.qtable_path.empty()
                                ? (fs::path(cfg.out_dir) / "qtable.txt").string()
                                : cfg.qtable_path;
  if (!fs::exists(qpath))
    throw domain_error("q-table '" + qpath +
                       "' not found; produce it with `stodis train` first");
  QTable qt = load_qtable(qpath);
  Dataset ds = load_split_dataset(cfg);
  auto test = pick(ds, Split::test);
  if (test.empty()) throw domain_error("n_test selected no episodes");
  CaseConfig ec = env_config(cfg);
  Method rl{"q", [&qt, ec](const EpisodeProfile& ep) {
              return rollout(greedy_policy(qt), ep, ec);
            }};
  Method base = classical_method(baseline_id(cfg.case_id), cfg);
  MethodResult base_res = evaluate_method(base, test, cfg.threads);
  std::vector<MethodResult> rl_res{evaluate_method(rl, test, cfg.threads)};
  ComparisonTable table = normalized_mse(rl_res, base_res, case_name(cfg.case_id), cfg.mse_basis);
  ExportManifest man = export_run({base_res, rl_res[0]}, table, cfg.out_dir);
  std::cout << "case " << case_name(cfg.case_id) << ": baseline "
            << base_res.method_id << " mean cost " << fmt_double(base_res.mean_cost)
            << ", policy mean cost " << fmt_double(rl_res[0].mean_cost) << ", "
            << man.files.size() << " files in " << cfg.out_dir << "\n";
  return 0;
}

int cmd_export(const CliOverrides& ov) {
  RunConfig cfg = resolve(ov);
  std::vector<std::string> ids;
  {
    std::string list = ov.methods.value_or(baseline_id(cfg.case_id));
    std::string cur;
    for (char c : list + ",") {
      if (c == ',') {
        if (!cur.empty()) ids.push_back(cur);
        cur.clear();
      } else {
        cur += c;
      }
    }
  }
  Dataset ds = load_split_dataset(cfg);
  auto test = pick(ds, Split::test);
  if (test.empty()) throw domain_error("n_test selected no episodes");

  QTable qt;
  bool have_q = false;
  for (const auto& id : ids)
    if (id == "q" && !have_q) {
      const std::string qpath = cfg.qtable_path.empty()
                                    ? (fs::path(cfg.out_dir) / "qtable.txt").string()
                                    : cfg.qtable_path;
      if (!fs::exists(qpath))
        throw domain_error("q-table '" + qpath +
                           "' not found; produce it with `stodis train` first");
      qt = load_qtable(qpath);
      have_q = true;
    }
  CaseConfig ec = env_config(cfg);

  std::vector<MethodResult> results;
  MethodResult base_res;
  std::vector<MethodResult> others;
  const std::string base_id = baseline_id(cfg.case_id);
  bool have_base = false;
  for (const auto& id : ids) {
    Method m = id == "q" ? Method{"q", [&qt, ec](const EpisodeProfile& ep) {
                                    return rollout(greedy_policy(qt), ep, ec);
                                  }}
                         : classical_method(id, cfg);
    MethodResult r = evaluate_method(m, test, cfg.threads);
    if (id == base_id && !have_base) {
      base_res = std::move(r);
      have_base = true;
    } else {
      others.push_back(std::move(r));
    }
  }
  if (!have_base) {
    Method m = classical_method(base_id, cfg);
    base_res = evaluate_method(m, test, cfg.threads);
  }
  ComparisonTable table = normalized_mse(others, base_res, case_name(cfg.case_id), cfg.mse_basis);
  results.push_back(std::move(base_res));
  for (auto& r : others) results.push_back(std::move(r));
  ExportManifest man = export_run(results, table, cfg.out_dir);

  if (ov.value_table) {
    fs::create_directories(fs::path(cfg.out_dir) / "value_tables");
    const CostModel cm = effective_cost(cfg);
    TransmissionSpec ts = cfg.case_id == CaseId::LT ? cfg.transmission : TransmissionSpec{};
    for (const EpisodeProfile* ep : test) {
      ValueTable vt;
      dp_solve(*ep, cfg.storage, ts, cm, cfg.m_levels, cfg.dp, &vt);
      write_value_table_csv(vt, (fs::path(cfg.out_dir) / "value_tables" /
                                 (ep->id + ".csv")).string());
    }
  }
  std::cout << "exported " << man.files.size() << " files to " << cfg.out_dir << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"storage dispatch on a simulated microgrid"};
  app.require_subcommand(1);

  CliOverrides gen_ov, solve_ov, train_ov, eval_ov, export_ov;

  CLI::App* gen = app.add_subcommand("gen-data", "write a synthetic episode CSV");
  add_common(gen, gen_ov);
  gen->add_option("--n", gen_ov.gen_n, "number of episodes");
  gen->add_option("--noise", gen_ov.noise, "multiplicative noise amplitude");
  gen->add_option("--peak-load", gen_ov.peak_load, "evening load peak, kW");
  gen->add_option("--peak-pv", gen_ov.peak_pv, "midday PV peak, kW");
  gen->add_option("--base-load", gen_ov.base_load, "overnight load floor, kW");

  CLI::App* solve = app.add_subcommand("solve", "run a classical solver on the test split");
  add_common(solve, solve_ov);
  solve->add_option("--method", solve_ov.method, "sp | pmp | dp");
  solve->add_option("--m-levels", solve_ov.m_levels, "grid levels per step");
  solve->add_option("--n-test", solve_ov.n_test, "test split size");
  solve->add_option("--n-val", solve_ov.n_val, "validation split size");

  auto add_env_flags = [](CLI::App* cmd, CliOverrides& ov) {
    cmd->add_flag_callback(
        "--physics-exact", [&ov]() { ov.physics_exact = true; },
        "use solver-side storage physics in the env");
    cmd->add_flag_callback(
        "--paper-env", [&ov]() { ov.physics_exact = false; },
        "use the published per-case RL transition (default)");
  };

  CLI::App* tr = app.add_subcommand("train", "fit the tabular Q policy");
  add_common(tr, train_ov);
  tr->add_option("--episodes", train_ov.train_episodes, "training episodes");
  tr->add_option("--qtable", train_ov.qtable, "q-table output path");
  add_env_flags(tr, train_ov);
  tr->add_option("--n-test", train_ov.n_test, "test split size");
  tr->add_option("--n-val", train_ov.n_val, "validation split size");

  CLI::App* ev = app.add_subcommand("eval", "compare the trained policy to the baseline");
  add_common(ev, eval_ov);
  ev->add_option("--qtable", eval_ov.qtable, "q-table input path");
  ev->add_option("--m-levels", eval_ov.m_levels, "grid levels per step");
  add_env_flags(ev, eval_ov);
  ev->add_option("--n-test", eval_ov.n_test, "test split size");
  ev->add_option("--n-val", eval_ov.n_val, "validation split size");

  CLI::App* ex = app.add_subcommand("export", "run methods and export all artifacts");
  add_common(ex, export_ov);
  ex->add_option("--methods", export_ov.methods, "comma list of sp|pmp|dp|q");
  ex->add_option("--m-levels", export_ov.m_levels, "grid levels per step");
  ex->add_option("--qtable", export_ov.qtable, "q-table input path (for method q)");
  ex->add_flag("--value-table", export_ov.value_table, "also dump DP value tables");
  add_env_flags(ex, export_ov);
  ex->add_option("--n-test", export_ov.n_test, "test split size");
  ex->add_option("--n-val", export_ov.n_val, "validation split size");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    app.exit(e);
    return 2;
  }

  try {
    if (gen->parsed()) return cmd_gen_data(gen_ov);
    if (solve->parsed()) return cmd_solve(solve_ov);
    if (tr->parsed()) return cmd_train(train_ov);
    if (ev->parsed()) return cmd_eval(eval_ov);
    if (ex->parsed()) return cmd_export(export_ov);
  } catch (const domain_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const infeasible_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const io_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
