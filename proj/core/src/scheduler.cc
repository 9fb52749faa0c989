/* Copyright 2026 The sparsetta Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#include "sparsetta/scheduler.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "sparsetta/error.h"

namespace sparsetta {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kSnapTolerance = 1e-9;

void ValidateInputs(const ImportanceVector& importance,
                    const LatencyProfile& profile) {
  if (importance.size() != profile.size()) {
    throw InputError("importance covers " + std::to_string(importance.size()) +
                     " layers, profile has " + std::to_string(profile.size()));
  }
  for (std::size_t i = 0; i < importance.a.size(); ++i) {
    if (!std::isfinite(importance.a[i]) || importance.a[i] < 0.0) {
      throw InputError("importance of backward index " + std::to_string(i + 1) +
                       " must be finite and >= 0");
    }
  }
}

// True iff selection `a` precedes `b` when both are read as 0/1 vectors over
// backward indices 1..N. Inputs are ascending index lists.
bool LexLess(const std::vector<std::size_t>& a,
             const std::vector<std::size_t>& b) {
  std::size_t i = 0;
  std::size_t j = 0;
  while (i < a.size() && j < b.size()) {
    if (a[i] == b[j]) {
      ++i;
      ++j;
    } else {
      return b[j] < a[i];
    }
  }
  return i == a.size() && j < b.size();
}

ScheduleResult MakeResult(UpdateStrategy strategy, double importance,
                          const LatencyProfile& profile, double budget_ms) {
  ScheduleResult r;
  r.predicted_extra = ComputeStrategyCost(strategy, profile);
  r.strategy = std::move(strategy);
  r.achieved_importance = importance;
  r.budget_ms = budget_ms;
  r.slack_ms = budget_ms - r.predicted_extra.t_total_extra;
  return r;
}

ScheduleResult EmptyResult(const LatencyProfile& profile, double budget_ms) {
  return MakeResult(UpdateStrategy(profile.size()), 0.0, profile,
                    std::max(0.0, budget_ms));
}

// Best chain whose deepest selected layer is exactly `l`, within `t` units.
struct Cell {
  double importance = kNegInf;
  double cost_ms = 0.0;
  std::int32_t pred_layer = -1;
  std::int64_t pred_units = -1;

  bool valid() const { return importance != kNegInf; }
};

class ChainTable {
 public:
  ChainTable(std::size_t layers, std::int64_t resolution)
      : width_(static_cast<std::size_t>(resolution) + 1),
        cells_((layers + 1) * width_) {}

  Cell& at(std::size_t l, std::int64_t t) {
    return cells_[l * width_ + static_cast<std::size_t>(t)];
  }
  const Cell& at(std::size_t l, std::int64_t t) const {
    return cells_[l * width_ + static_cast<std::size_t>(t)];
  }

  // Ascending selection obtained by following predecessors from (l, t),
  // plus `extra` when non-zero.
  std::vector<std::size_t> Chain(std::size_t l, std::int64_t t,
                                 std::size_t extra = 0) const {
    std::vector<std::size_t> out;
    if (extra != 0) out.push_back(extra);
    while (l != 0) {
      out.push_back(l);
      const Cell& c = at(l, t);
      l = static_cast<std::size_t>(c.pred_layer);
      t = c.pred_units;
    }
    std::reverse(out.begin(), out.end());
    return out;
  }

 private:
  std::size_t width_;
  std::vector<Cell> cells_;
};

struct DpRun {
  ChainTable chains;
  DpTable table;
};

DpRun RunDp(const ImportanceVector& importance, const LatencyProfile& profile,
            double budget_ms, std::int64_t resolution) {
  ValidateInputs(importance, profile);
  if (resolution < 1) throw InputError("resolution must be >= 1");
  if (!(budget_ms > 0.0)) throw InputError("DP budget must be > 0");

  const std::size_t n = profile.size();
  DpRun run{ChainTable(n, resolution), DpTable(n, resolution)};
  ChainTable& q = run.chains;
  DpTable& p = run.table;

  for (std::int64_t t = 0; t <= resolution; ++t) {
    q.at(0, t).importance = 0.0;
    p.set_best(0, t, 0.0);
  }

  // Valid predecessors of each layer, nearest first: selectable layers below
  // it, then 0 (nothing selected yet).
  std::vector<std::size_t> candidates;
  std::vector<std::int64_t> units;
  std::vector<double> costs;
  double dx_prefix = 0.0;  // sum_{m=1}^{l-1} t_dx[m]

  for (std::size_t l = 1; l <= n; ++l) {
    const LayerLatency& layer = profile.at(l);
    if (layer.has_params) {
      candidates.clear();
      units.clear();
      costs.clear();
      for (std::size_t k = l; k-- > 0;) {
        if (k != 0 && !profile.at(k).has_params) continue;
        const double dt = DeltaT(l, k, profile);
        candidates.push_back(k);
        costs.push_back(dt);
        units.push_back(Discretize(dt, budget_ms, resolution));
      }
      // Lower bound on the units any chain ending at l must spend on
      // activation gradients alone.
      const double dx_units = dx_prefix / budget_ms * static_cast<double>(resolution);

      for (std::int64_t t = 0; t <= resolution; ++t) {
        if (dx_units > static_cast<double>(t) + 1e-6 * (1.0 + dx_units)) {
          ++p.pruned;
          continue;
        }
        Cell best;
        for (std::size_t c = 0; c < candidates.size(); ++c) {
          // Increments grow as the predecessor moves away from l, so every
          // remaining candidate overruns t as well.
          if (units[c] > t) {
            p.pruned += static_cast<std::int64_t>(candidates.size() - c);
            break;
          }
          ++p.explored;
          const std::size_t k = candidates[c];
          const std::int64_t rest = t - units[c];
          const Cell& src = q.at(k, rest);
          if (!src.valid()) continue;
          const Cell cand{src.importance + importance.at(l),
                          src.cost_ms + costs[c], static_cast<std::int32_t>(k),
                          rest};
          bool take = !best.valid() || cand.importance > best.importance;
          if (!take && cand.importance == best.importance) {
            if (cand.cost_ms != best.cost_ms) {
              take = cand.cost_ms < best.cost_ms;
            } else {
              take = LexLess(
                  q.Chain(k, rest, l),
                  q.Chain(static_cast<std::size_t>(best.pred_layer),
                          best.pred_units, l));
            }
          }
          if (take) best = cand;
        }
        q.at(l, t) = best;
      }
    }
    for (std::int64_t t = 0; t <= resolution; ++t) {
      const Cell& c = q.at(l, t);
      const double prev = p.best(l - 1, t);
      p.set_best(l, t, c.valid() ? std::max(prev, c.importance) : prev);
    }
    dx_prefix += layer.t_dx;
  }
  return run;
}

}  // namespace

void SchedulerConfig::Validate() const {
  if (!(sigma > 0.0 && sigma <= 1.0)) throw InputError("sigma must lie in (0, 1]");
  if (resolution < 1) throw InputError("resolution must be >= 1");
}

Budget ComputeBudget(double total_ms, double forward_ms, double sigma) {
  if (!(total_ms > 0.0) || !std::isfinite(total_ms)) {
    throw InputError("full-update latency must be > 0");
  }
  if (!(forward_ms >= 0.0)) throw InputError("forward latency must be >= 0");
  if (!(sigma > 0.0 && sigma <= 1.0)) throw InputError("sigma must lie in (0, 1]");
  const double raw = sigma * total_ms - forward_ms;
  if (raw <= 0.0) return {0.0, true};
  return {raw, false};
}

std::int64_t Discretize(double t_ms, double budget_ms, std::int64_t resolution) {
  if (!(budget_ms > 0.0)) throw InputError("budget must be > 0 to discretize");
  if (!(t_ms >= 0.0)) throw InputError("duration must be >= 0");
  if (resolution < 1) throw InputError("resolution must be >= 1");
  const double r = static_cast<double>(resolution);
  const double q = t_ms / budget_ms * r;
  // Anything past the budget is infeasible; saturate instead of overflowing.
  if (q > r + 1.0) return resolution + 1;
  const double nearest = std::nearbyint(q);
  if (std::abs(q - nearest) <= kSnapTolerance * std::max(1.0, q)) {
    return static_cast<std::int64_t>(nearest);
  }
  return static_cast<std::int64_t>(std::ceil(q));
}

double DeltaT(std::size_t l, std::size_t l_k, const LatencyProfile& profile) {
  if (l < 1 || l > profile.size() || l_k >= l) {
    throw InputError("delta_t: need 0 <= l_k < l <= N (got l=" +
                     std::to_string(l) + ", l_k=" + std::to_string(l_k) + ")");
  }
  double dt = profile.at(l).t_dw;
  for (std::size_t m = std::max<std::size_t>(1, l_k); m < l; ++m) {
    dt += profile.at(m).t_dx;
  }
  for (std::size_t m = l_k + 1; m <= l; ++m) dt += profile.at(m).t_re;
  return dt;
}

DpTable::DpTable(std::size_t layers, std::int64_t resolution)
    : layers_(layers),
      resolution_(resolution),
      best_((layers + 1) * (static_cast<std::size_t>(resolution) + 1), 0.0) {}

double DpTable::best(std::size_t l, std::int64_t t) const {
  return best_.at(l * (static_cast<std::size_t>(resolution_) + 1) +
                  static_cast<std::size_t>(t));
}

void DpTable::set_best(std::size_t l, std::int64_t t, double value) {
  best_.at(l * (static_cast<std::size_t>(resolution_) + 1) +
           static_cast<std::size_t>(t)) = value;
}

DpTable BuildDpTable(const ImportanceVector& importance,
                     const LatencyProfile& profile, double budget_ms,
                     std::int64_t resolution) {
  return RunDp(importance, profile, budget_ms, resolution).table;
}

ScheduleResult SolveDp(const ImportanceVector& importance,
                       const LatencyProfile& profile, double budget_ms,
                       std::int64_t resolution) {
  ValidateInputs(importance, profile);
  if (resolution < 1) throw InputError("resolution must be >= 1");
  if (!(budget_ms > 0.0)) {
    ScheduleResult r = EmptyResult(profile, budget_ms);
    r.budget_warning = true;
    return r;
  }
  const DpRun run = RunDp(importance, profile, budget_ms, resolution);

  // Deepest index ascending, so full ties keep the shallower chain.
  std::size_t best_layer = 0;
  const Cell* best = &run.chains.at(0, resolution);
  for (std::size_t l = 1; l <= profile.size(); ++l) {
    const Cell& c = run.chains.at(l, resolution);
    if (!c.valid()) continue;
    if (c.importance > best->importance ||
        (c.importance == best->importance && c.cost_ms < best->cost_ms)) {
      best = &c;
      best_layer = l;
    }
  }
  const std::vector<std::size_t> chosen =
      best_layer == 0 ? std::vector<std::size_t>{}
                      : run.chains.Chain(best_layer, resolution);
  ScheduleResult r =
      MakeResult(UpdateStrategy::FromIndices(profile.size(), chosen),
                 best->importance, profile, budget_ms);
  r.subproblems_explored = run.table.explored;
  r.subproblems_pruned = run.table.pruned;
  return r;
}

ScheduleResult SolveDp(const ImportanceVector& importance,
                       const LatencyProfile& profile,
                       const SchedulerConfig& config) {
  config.Validate();
  ValidateInputs(importance, profile);
  if (profile.empty() || !(profile.total() > 0.0)) {
    ScheduleResult r = EmptyResult(profile, 0.0);
    r.budget_warning = true;
    return r;
  }
  const Budget budget =
      ComputeBudget(profile.total(), profile.total_forward(), config.sigma);
  ScheduleResult r = SolveDp(importance, profile, budget.ms, config.resolution);
  r.budget_warning = budget.infeasible;
  return r;
}

ScheduleResult BruteForce(const ImportanceVector& importance,
                          const LatencyProfile& profile, double budget_ms,
                          OracleCost cost_model, std::int64_t resolution) {
  ValidateInputs(importance, profile);
  if (profile.size() > kBruteForceMaxLayers) {
    throw InputError("brute force supports at most " +
                     std::to_string(kBruteForceMaxLayers) + " layers, got " +
                     std::to_string(profile.size()));
  }
  if (cost_model == OracleCost::kDiscretized && resolution < 1) {
    throw InputError("discretized oracle needs resolution >= 1");
  }
  if (!(budget_ms > 0.0)) {
    ScheduleResult r = EmptyResult(profile, budget_ms);
    r.budget_warning = true;
    return r;
  }

  std::vector<std::size_t> selectable;
  for (std::size_t b = 1; b <= profile.size(); ++b) {
    if (profile.at(b).has_params) selectable.push_back(b);
  }

  std::vector<std::size_t> best_set;
  double best_importance = 0.0;
  double best_cost = 0.0;
  const std::uint64_t subsets = std::uint64_t{1} << selectable.size();
  std::vector<std::size_t> set;
  for (std::uint64_t mask = 1; mask < subsets; ++mask) {
    set.clear();
    for (std::size_t i = 0; i < selectable.size(); ++i) {
      if (mask & (std::uint64_t{1} << i)) set.push_back(selectable[i]);
    }
    const UpdateStrategy s = UpdateStrategy::FromIndices(profile.size(), set);
    const double cost = ComputeStrategyCost(s, profile).t_total_extra;
    if (cost_model == OracleCost::kExact) {
      if (cost > budget_ms) continue;
    } else {
      std::int64_t used = 0;
      std::size_t prev = 0;
      for (std::size_t b : set) {
        used += Discretize(DeltaT(b, prev, profile), budget_ms, resolution);
        prev = b;
      }
      if (used > resolution) continue;
    }
    double total = 0.0;
    for (std::size_t b : set) total += importance.at(b);

    bool better = false;
    if (total != best_importance) {
      better = total > best_importance;
    } else if (cost != best_cost) {
      better = cost < best_cost;
    } else {
      const std::size_t deepest = set.back();
      const std::size_t best_deepest = best_set.empty() ? 0 : best_set.back();
      better = deepest != best_deepest ? deepest < best_deepest
                                       : LexLess(set, best_set);
    }
    if (better) {
      best_set = set;
      best_importance = total;
      best_cost = cost;
    }
  }
  ScheduleResult r =
      MakeResult(UpdateStrategy::FromIndices(profile.size(), best_set),
                 best_importance, profile, budget_ms);
  r.subproblems_explored = static_cast<std::int64_t>(subsets);
  return r;
}

}  // namespace sparsetta
