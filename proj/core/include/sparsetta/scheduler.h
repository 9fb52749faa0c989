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

// Sparse layer-update selection.
//
// Maximizes the summed importance of the selected layers subject to
//
//   T_f + T_b'(S) + T_re'(S) <= sigma * T,
//
// i.e. T_b'(S) + T_re'(S) <= budget = sigma * T - T_f. The latency budget is
// discretized into `resolution` units and solved by a dynamic program over
// (deepest selected layer, time units). Selecting layer l right after the
// previously deepest selection l_k adds
//
//   dt(l, l_k) = t_dw[l] + sum_{m=max(1,l_k)}^{l-1} t_dx[m]
//                        + sum_{m=l_k+1}^{l}    t_re[m],
//
// so chaining increments along a strategy reproduces its closed-form cost.
//
// Ties between equal-importance strategies go to (a) lower real-valued cost,
// then (b) smaller deepest index, then (c) the lexicographically smaller
// selection vector over backward indices 1..N.

#ifndef SPARSETTA_SCHEDULER_H_
#define SPARSETTA_SCHEDULER_H_

#include <cstddef>
#include <cstdint>
#include <vector>

#include "sparsetta/importance.h"
#include "sparsetta/latency_profile.h"
#include "sparsetta/model_graph.h"

namespace sparsetta {

struct SchedulerConfig {
  double sigma = 0.33;
  std::int64_t resolution = 500;
  bool oracle = false;

  void Validate() const;
};

struct Budget {
  double ms = 0.0;
  // Set when sigma * T < T_f; only the empty strategy is feasible.
  bool infeasible = false;
};

// max(0, sigma * T - T_f).
Budget ComputeBudget(double total_ms, double forward_ms, double sigma);

// Rounds t * resolution / budget up to whole units. Values within 1e-9
// relative of an integer snap to it so that exact-boundary costs are not
// pushed over the budget by floating-point noise.
std::int64_t Discretize(double t_ms, double budget_ms, std::int64_t resolution);

// Incremental cost of selecting backward index `l` when `l_k` (< l, 0 for
// none) is the deepest layer selected so far.
double DeltaT(std::size_t l, std::size_t l_k, const LatencyProfile& profile);

struct ScheduleResult {
  UpdateStrategy strategy;
  double achieved_importance = 0.0;
  StrategyCost predicted_extra;
  double budget_ms = 0.0;
  double slack_ms = 0.0;
  bool budget_warning = false;
  std::int64_t subproblems_explored = 0;
  std::int64_t subproblems_pruned = 0;
};

// P[l][t]: best cumulative importance using backward layers 1..l within t
// units. Always >= 0 since the empty selection is feasible everywhere.
class DpTable {
 public:
  DpTable(std::size_t layers, std::int64_t resolution);

  std::size_t layers() const { return layers_; }
  std::int64_t resolution() const { return resolution_; }
  double best(std::size_t l, std::int64_t t) const;
  void set_best(std::size_t l, std::int64_t t, double value);

  std::int64_t explored = 0;
  std::int64_t pruned = 0;

 private:
  std::size_t layers_;
  std::int64_t resolution_;
  std::vector<double> best_;
};

DpTable BuildDpTable(const ImportanceVector& importance,
                     const LatencyProfile& profile, double budget_ms,
                     std::int64_t resolution);

ScheduleResult SolveDp(const ImportanceVector& importance,
                       const LatencyProfile& profile, double budget_ms,
                       std::int64_t resolution);
// Budget taken from the profile's full-update totals and `config.sigma`.
ScheduleResult SolveDp(const ImportanceVector& importance,
                       const LatencyProfile& profile,
                       const SchedulerConfig& config);

enum class OracleCost {
  // Feasible iff the closed-form strategy cost fits the real-valued budget.
  kExact,
  // Feasible iff the chained, discretized increments fit `resolution` units.
  kDiscretized,
};

inline constexpr std::size_t kBruteForceMaxLayers = 20;

// Exhaustive search over every selection of parameterized layers. Throws
// InputError when the profile exceeds kBruteForceMaxLayers.
ScheduleResult BruteForce(const ImportanceVector& importance,
                          const LatencyProfile& profile, double budget_ms,
                          OracleCost cost_model = OracleCost::kExact,
                          std::int64_t resolution = 0);

}  // namespace sparsetta

#endif  // SPARSETTA_SCHEDULER_H_
