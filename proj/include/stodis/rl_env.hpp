#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>

#include "stodis/errors.hpp"
#include "stodis/grid_model.hpp"
#include "stodis/profiles.hpp"

namespace stodis {

enum class CaseId { IS, LS, LT };

inline const char* case_name(CaseId c) {
  switch (c) {
    case CaseId::IS: return "is";
    case CaseId::LS: return "ls";
    case CaseId::LT: return "lt";
  }
  return "?";
}

/// Environment configuration. The default transition follows the published RL
/// formulation per case; `physics_exact` swaps in the solver-side storage_step
/// so solver trajectories replay through the environment without model gap.
struct CaseConfig {
  CaseId case_id = CaseId::IS;
  StorageSpec spec;
  TransmissionSpec ts;
  CostModel cm;
  bool physics_exact = false;

  void validate() const {
    spec.validate();
    ts.validate();
    cm.validate();
  }
};

struct RlState {
  double soc_kwh = 0.0;
  double hour = 0.0;  // in [0, 24)
  double load_kw = 0.0;  // net load at the current step
};

struct RlAction {
  double delta_e_kwh = 0.0;  // desired SOC change; clamped by the env
};

struct StepOutcome {
  RlState next;
  double reward = 0.0;           // -dt * gen_cost(p_g)
  double applied_delta_kwh = 0.0;
  double p_g_kw = 0.0;
};

inline RlState env_reset(const EpisodeProfile& ep, const CaseConfig& cfg) {
  cfg.validate();
  ep.validate();
  RlState s;
  s.soc_kwh = 0.0;
  s.hour = 0.0;
  s.load_kw = ep.load_kw[0] - ep.pv_kw[0];
  return s;
}

/// One transition. The action is clamped so SOC can never leave [0, e_max]
/// whatever the policy does; generation covers net load plus the commanded
/// energy flow and is floored at zero (surplus curtailed).
inline StepOutcome env_step(const RlState& state, const RlAction& action,
                            const EpisodeProfile& ep, const CaseConfig& cfg,
                            int step_index) {
  const int n = ep.n_steps();
  if (step_index < 0 || step_index >= n)
    throw domain_error("env_step: episode finished (step " +
                       std::to_string(step_index) + " of " + std::to_string(n) + ")");
  if (!std::isfinite(action.delta_e_kwh))
    throw domain_error("env_step: non-finite action");
  const double dt = ep.step_hours;
  const double e_max = cfg.spec.e_max_kwh;
  const double soc = state.soc_kwh;
  const double p_l = ep.load_kw[step_index] - ep.pv_kw[step_index];

  double lo = -soc, hi = e_max - soc;
  if (cfg.physics_exact) {
    // The clamp must anticipate the conversion losses applied by storage_step.
    lo = -soc * cfg.spec.eta_dis / cfg.spec.eta_decay;
    hi = (e_max - soc) / (cfg.spec.eta_ch * cfg.spec.eta_decay);
  }
  const double de = std::clamp(action.delta_e_kwh, lo, hi);

  const double delivered = std::max(0.0, p_l + de / dt);
  const double p_g = cfg.case_id == CaseId::LT
                         ? transmission_injection(delivered, cfg.ts)
                         : delivered;

  double soc_next;
  if (cfg.physics_exact) {
    soc_next = storage_step(soc, de / dt, dt, cfg.spec);
  } else {
    switch (cfg.case_id) {
      case CaseId::IS:
        soc_next = soc + de;
        break;
      case CaseId::LS: {
        const double eta = de != 0.0 ? cfg.spec.eta_dis * cfg.spec.eta_decay
                                     : cfg.spec.eta_decay;
        soc_next = (soc + de) * eta;
        break;
      }
      case CaseId::LT: {
        const double eta = de != 0.0 ? cfg.spec.eta_dis * cfg.spec.eta_decay
                                     : cfg.spec.eta_decay;
        soc_next = (soc + de * cfg.ts.eta_tr) * eta;
        break;
      }
      default:
        soc_next = soc;
    }
  }

  StepOutcome out;
  out.applied_delta_kwh = de;
  out.p_g_kw = p_g;
  out.reward = -dt * gen_cost(p_g, cfg.cm);
  out.next.soc_kwh = soc_next;
  const int k1 = step_index + 1;
  out.next.hour = k1 < n ? std::fmod(k1 * dt, 24.0) : 0.0;
  out.next.load_kw = k1 < n ? ep.load_kw[k1] - ep.pv_kw[k1] : 0.0;
  return out;
}

using Policy = std::function<RlAction(const RlState&)>;

/// Runs a policy through one full episode and books the result as a
/// trajectory; total cost equals the negated reward sum.
inline DispatchTrajectory rollout(const Policy& policy, const EpisodeProfile& ep,
                                  const CaseConfig& cfg) {
  const int n = ep.n_steps();
  const double dt = ep.step_hours;
  DispatchTrajectory traj;
  traj.p_g_kw.resize(n);
  traj.p_s_kw.resize(n);
  traj.soc_kwh.assign(n + 1, 0.0);
  traj.stage_cost.resize(n);
  RlState s = env_reset(ep, cfg);
  double total = 0.0;
  for (int k = 0; k < n; ++k) {
    StepOutcome out = env_step(s, policy(s), ep, cfg, k);
    traj.p_g_kw[k] = out.p_g_kw;
    traj.p_s_kw[k] = out.applied_delta_kwh / dt;
    traj.soc_kwh[k + 1] = out.next.soc_kwh;
    traj.stage_cost[k] = -out.reward / dt;
    total += -out.reward;
    s = out.next;
  }
  traj.total_cost = total;
  return traj;
}

}  // namespace stodis
