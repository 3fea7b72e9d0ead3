#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "pctl_smc/classification.hpp"
#include "pctl_smc/mdp.hpp"
#include "pctl_smc/pctl.hpp"
#include "pctl_smc/statistics.hpp"

namespace pctl_smc {

/**
 * Confidence bounds for one check, one level per horizon step.
 *
 * Level 0 is the terminal row (no Q entries). For h >= 1, q_lo/q_hi are
 * indexed by flat choice and v_lo/v_hi/policy by state; policy holds the
 * local choice index the sampler uses at that step.
 */
struct BoundTables {
  std::vector<std::vector<double>> q_lo, q_hi;
  std::vector<std::vector<double>> v_lo, v_hi;
  std::vector<std::vector<std::uint32_t>> policy;

  [[nodiscard]] std::uint32_t horizon() const { return static_cast<std::uint32_t>(v_lo.size()) - 1; }
};

namespace detail {

inline bool better(double x, double y, Quantifier q) { return q == Quantifier::Max ? x > y : x < y; }

/// Choices a state optimizes over: all of them, or its exits when pooled.
inline std::vector<std::vector<std::uint32_t>> candidate_choices(const Topology& t, const Classification& c) {
  std::vector<std::vector<std::uint32_t>> out(t.num_states());
  for (StateId s = 0; s < t.num_states(); ++s) {
    if (c.group_of[s] >= 0) {
      for (const auto flat : c.pooled[static_cast<std::size_t>(c.group_of[s])].exits) {
        if (flat >= t.choice(s, 0) && flat < t.choice(s, 0) + t.num_choices(s)) {
          out[s].push_back(static_cast<std::uint32_t>(flat - t.choice(s, 0)));
        }
      }
    } else {
      for (std::uint32_t j = 0; j < t.num_choices(s); ++j) out[s].push_back(j);
    }
  }
  return out;
}

}  // namespace detail

/// Starting bounds: [1,1] on S1, [0,0] on S0, [0,1] elsewhere, for levels 1..T.
inline BoundTables init_bounds(const Topology& t, const Classification& c, std::uint32_t horizon, Quantifier) {
  if (horizon == 0) throw Error("init_bounds: horizon must be positive");
  BoundTables b;
  b.v_lo.push_back(c.terminal);
  b.v_hi.push_back(c.terminal);
  b.q_lo.emplace_back();
  b.q_hi.emplace_back();
  b.policy.emplace_back(t.num_states(), 0);
  for (std::uint32_t h = 1; h <= horizon; ++h) {
    auto& qlo = b.q_lo.emplace_back(t.num_choices(), 0.0);
    auto& qhi = b.q_hi.emplace_back(t.num_choices(), 1.0);
    auto& vlo = b.v_lo.emplace_back(t.num_states(), 0.0);
    auto& vhi = b.v_hi.emplace_back(t.num_states(), 1.0);
    b.policy.emplace_back(t.num_states(), 0);
    for (StateId s = 0; s < t.num_states(); ++s) {
      if (c.open(s)) continue;
      const double v = c.in_s1(s) ? 1.0 : 0.0;
      vlo[s] = vhi[s] = v;
      for (std::size_t j = 0; j < t.num_choices(s); ++j) qlo[t.choice(s, j)] = qhi[t.choice(s, j)] = v;
    }
  }
  return b;
}

/// Appends level H+1 initialized like init_bounds.
inline void add_level(BoundTables& b, const Topology& t, const Classification& c, Quantifier q) {
  auto next = init_bounds(t, c, 1, q);
  b.q_lo.push_back(std::move(next.q_lo[1]));
  b.q_hi.push_back(std::move(next.q_hi[1]));
  b.v_lo.push_back(std::move(next.v_lo[1]));
  b.v_hi.push_back(std::move(next.v_hi[1]));
  b.policy.push_back(std::move(next.policy[1]));
}

/**
 * Optimistic choice among `candidates`: argmax of q_hi for Max, argmin of
 * q_lo for Min. Ties go to the earliest candidate (lowest action index).
 */
inline std::uint32_t greedy_policy(std::span<const double> optimistic, std::span<const std::uint32_t> candidates,
                                   Quantifier q) {
  std::uint32_t best = candidates.empty() ? 0 : candidates.front();
  for (const auto j : candidates) {
    if (detail::better(optimistic[j], optimistic[best], q)) best = j;
  }
  return best;
}

/// Same over a full row (all choices are candidates).
inline std::uint32_t greedy_policy(std::span<const double> optimistic, Quantifier q) {
  std::uint32_t best = 0;
  for (std::uint32_t j = 1; j < optimistic.size(); ++j) {
    if (detail::better(optimistic[j], optimistic[best], q)) best = j;
  }
  return best;
}

/**
 * Recomputes Q bounds at level h from the level h-1 value bounds:
 *
 *   q_lo = max(0, sum_s' T^(s,a,s') v_lo(h-1,s') - r)
 *   q_hi = min(1, sum_s' T^(s,a,s') v_hi(h-1,s') + r)
 *
 * then V bounds (optimum over candidates, pooled groups over their exits)
 * and the greedy policy. v is 1 on S1 and 0 on S0 at every level, so the
 * single sum covers both the open and the S1 terms.
 *
 * `Estimate` provides for_each(pair, fn(state, prob)); `radius(pair, h)`
 * the half-width (infinite for unsampled pairs).
 */
template <class Estimate, class Radius>
void update_q_bounds(const Topology& t, const Classification& c, Quantifier q, std::uint32_t h,
                     const Estimate& estimate, Radius&& radius, BoundTables& b,
                     const std::vector<std::vector<std::uint32_t>>& candidates) {
  const auto& vlo_prev = b.v_lo[h - 1];
  const auto& vhi_prev = b.v_hi[h - 1];
  auto& qlo = b.q_lo[h];
  auto& qhi = b.q_hi[h];
  for (StateId s = 0; s < t.num_states(); ++s) {
    if (!c.open(s)) continue;
    for (std::size_t j = 0; j < t.num_choices(s); ++j) {
      const auto pair = t.choice(s, j);
      const double r = radius(pair, h);
      if (std::isinf(r)) {
        qlo[pair] = 0.0;
        qhi[pair] = 1.0;
        continue;
      }
      double lo = 0.0, hi = 0.0;
      estimate.for_each(pair, [&](StateId next, double p) {
        lo += p * vlo_prev[next];
        hi += p * vhi_prev[next];
      });
      qlo[pair] = std::max(0.0, lo - r);
      qhi[pair] = std::min(1.0, hi + r);
    }
  }

  auto& vlo = b.v_lo[h];
  auto& vhi = b.v_hi[h];
  auto& pol = b.policy[h];
  const auto opt = [q](double x, double y) { return detail::better(x, y, q) ? x : y; };
  for (StateId s = 0; s < t.num_states(); ++s) {
    if (!c.open(s) || c.group_of[s] >= 0) continue;
    const auto base = t.choice(s, 0);
    const std::span<const double> lo_row(qlo.data() + base, t.num_choices(s));
    const std::span<const double> hi_row(qhi.data() + base, t.num_choices(s));
    double l = lo_row[0], u = hi_row[0];
    for (std::size_t j = 1; j < lo_row.size(); ++j) {
      l = opt(l, lo_row[j]);
      u = opt(u, hi_row[j]);
    }
    vlo[s] = l;
    vhi[s] = u;
    pol[s] = greedy_policy(q == Quantifier::Max ? hi_row : lo_row, q);
  }
  for (const auto& g : c.pooled) {
    double l = g.exits.empty() ? 1.0 : qlo[g.exits.front()];
    double u = g.exits.empty() ? 1.0 : qhi[g.exits.front()];
    for (const auto e : g.exits) {
      l = opt(l, qlo[e]);
      u = opt(u, qhi[e]);
    }
    for (const auto s : g.states) {
      vlo[s] = l;
      vhi[s] = u;
      const auto base = t.choice(s, 0);
      const std::span<const double> row(q == Quantifier::Max ? qhi.data() + base : qlo.data() + base,
                                        t.num_choices(s));
      pol[s] = greedy_policy(row, candidates[s], q);
    }
  }
}

/**
 * Horizon increase test: true when, at every open state, the optimistic
 * choice is also optimal under the pessimistic face of the bounds
 * (q_lo for Max, q_hi for Min), i.e. the bounds already agree on the
 * best action at the top level.
 */
inline bool horizon_rule(const Topology& t, const Classification& c, Quantifier q, const BoundTables& b,
                         const std::vector<std::vector<std::uint32_t>>& candidates) {
  const auto H = b.horizon();
  const auto& pess = q == Quantifier::Max ? b.q_lo[H] : b.q_hi[H];
  for (StateId s = 0; s < t.num_states(); ++s) {
    if (!c.open(s) || candidates[s].empty()) continue;
    const auto base = t.choice(s, 0);
    double best = pess[base + candidates[s].front()];
    for (const auto j : candidates[s]) {
      if (detail::better(pess[base + j], best, q)) best = pess[base + j];
    }
    if (pess[base + b.policy[H][s]] != best) return false;
  }
  return true;
}

enum class Outcome { True, False, Continue };

/// Finite-horizon stopping test on the bounds of the initial state.
inline Outcome check_termination_finite(double v_lo, double v_hi, const Formula& f) {
  const double p = f.threshold;
  if (f.lower_bounded()) {
    if (v_lo > p) return Outcome::True;
    if (v_hi < p) return Outcome::False;
  } else {
    if (v_hi < p) return Outcome::True;
    if (v_lo > p) return Outcome::False;
  }
  return Outcome::Continue;
}

enum class Decision { True, False, Inconclusive };

inline const char* to_string(Decision d) {
  switch (d) {
    case Decision::True: return "True";
    case Decision::False: return "False";
    case Decision::Inconclusive: return "Inconclusive";
  }
  return "?";
}

struct Verdict {
  Decision decision = Decision::Inconclusive;
  std::uint64_t iterations = 0;
  std::uint64_t samples = 0;
  std::uint32_t h1 = 0;  // final horizon of the formula's own check
  std::uint32_t h2 = 0;  // final horizon of the dual check (unbounded only)
  double seconds = 0.0;
  double delta = 0.0;          // requested error budget
  double delta_consumed = 0.0; // budget charged by the stopping horizon
  double lower = 0.0;          // final value bounds at the initial state
  double upper = 1.0;
};

/// Read-only snapshot handed to an observer after each check's update.
struct IterationView {
  std::uint64_t iteration;
  int check;  // 0 = formula, 1 = dual
  const Topology& topology;
  const Classification& classification;
  Quantifier quantifier;
  const BoundTables& bounds;
  const Counts& counts;
};

using IterationObserver = std::function<void(const IterationView&)>;

struct EngineOptions {
  double delta = 0.05;
  double lambda = 0.9;
  std::uint64_t max_iterations = 10'000'000;
  ConfidenceBound bound = ConfidenceBound::Hoeffding;
  IterationObserver observer;
};

struct CheckTask {
  Formula formula;
  const Topology* topology = nullptr;
  Sampler sampler;
  StateId initial = 0;
  EngineOptions options;
};

/**
 * One formula's learning state: classification, bounds, candidates and
 * the sweep over (level, open state). Two of these share one Counts in the
 * unbounded check.
 */
class BoundedCheck {
 public:
  BoundedCheck(const Topology& t, Classification c, Quantifier q, std::uint32_t horizon)
      : topology_(&t),
        classification_(std::move(c)),
        quantifier_(q),
        bounds_(init_bounds(t, classification_, horizon, q)),
        candidates_(detail::candidate_choices(t, classification_)) {
    for (StateId s = 0; s < t.num_states(); ++s) {
      if (classification_.open(s) && !candidates_[s].empty()) sampled_.push_back(s);
    }
    for (std::uint32_t h = 1; h <= horizon; ++h) refresh_policy(h);
  }

  /// Draws one successor per (level, open state) under the greedy policy.
  void sweep(Sampler& sampler, Counts& counts) const {
    for (std::uint32_t h = 1; h <= bounds_.horizon(); ++h) {
      for (const auto s : sampled_) {
        const auto j = bounds_.policy[h][s];
        counts.record(topology_->choice(s, j), sampler.step(s, j));
      }
    }
  }

  template <class Estimate, class Radius>
  void update(const Estimate& estimate, Radius&& radius) {
    for (std::uint32_t h = 1; h <= bounds_.horizon(); ++h) {
      update_q_bounds(*topology_, classification_, quantifier_, h, estimate, radius, bounds_, candidates_);
    }
  }

  bool maybe_extend() {
    if (!horizon_rule(*topology_, classification_, quantifier_, bounds_, candidates_)) return false;
    add_level(bounds_, *topology_, classification_, quantifier_);
    refresh_policy(bounds_.horizon());
    return true;
  }

  [[nodiscard]] const BoundTables& bounds() const { return bounds_; }
  [[nodiscard]] const Classification& classification() const { return classification_; }
  [[nodiscard]] Quantifier quantifier() const { return quantifier_; }
  [[nodiscard]] std::size_t samples_per_level() const { return sampled_.size(); }

 private:
  void refresh_policy(std::uint32_t h) {
    for (const auto s : sampled_) {
      const auto base = topology_->choice(s, 0);
      const auto& row = quantifier_ == Quantifier::Max ? bounds_.q_hi[h] : bounds_.q_lo[h];
      bounds_.policy[h][s] =
          greedy_policy(std::span<const double>(row.data() + base, topology_->num_choices(s)), candidates_[s], quantifier_);
    }
  }

  const Topology* topology_;
  Classification classification_;
  Quantifier quantifier_;
  BoundTables bounds_;
  std::vector<std::vector<std::uint32_t>> candidates_;
  std::vector<StateId> sampled_;
};

namespace detail {

inline std::optional<Decision> decide_known(double value, const Formula& f) {
  if (f.lower_bounded() ? value > f.threshold : value < f.threshold) return Decision::True;
  if (f.lower_bounded() ? value < f.threshold : value > f.threshold) return Decision::False;
  return std::nullopt;
}

inline void require_task(const CheckTask& task) {
  if (task.topology == nullptr) throw Error("check task without topology");
  if (task.initial >= task.topology->num_states()) throw Error("initial state out of range");
  if (task.options.bound != ConfidenceBound::Hoeffding) throw Error("only Hoeffding bounds are implemented");
}

class Stopwatch {
 public:
  [[nodiscard]] double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

}  // namespace detail

/**
 * Bounded-horizon check (Next, Until<=T, Release<=T). Each iteration:
 * sweep, update levels 1..T in ascending order, test the initial state's
 * bounds at level T. Stops with Inconclusive at the iteration cap.
 */
inline Verdict run_finite(CheckTask& task) {
  detail::require_task(task);
  const detail::Stopwatch clock;
  const auto& t = *task.topology;
  const auto& f = task.formula;
  if (f.path.unbounded()) throw Error("run_finite: formula has an unbounded horizon");
  const auto T = f.path.steps();

  Verdict out;
  out.delta = task.options.delta;
  out.h1 = T;

  auto cls = classify(t, f.path, f.quantifier);
  const auto schedule = DeltaSchedule::equal_finite(task.options.delta, T, cls.num_open(), t.max_actions());
  const auto s0 = task.initial;
  if (!cls.open(s0)) {
    const double v = cls.in_s1(s0) ? 1.0 : 0.0;
    out.lower = out.upper = v;
    out.decision = detail::decide_known(v, f).value_or(Decision::Inconclusive);
    out.seconds = clock.seconds();
    return out;
  }

  BoundedCheck check(t, std::move(cls), f.quantifier, T);
  Counts counts(t.num_choices());
  const EmpiricalModel estimate(counts, t.num_states());
  const auto radius = [&](std::size_t pair, std::uint32_t h) {
    return hoeffding_radius_log(counts.visits(pair), schedule.log_at(h));
  };

  while (out.iterations < task.options.max_iterations) {
    ++out.iterations;
    check.sweep(task.sampler, counts);
    check.update(estimate, radius);
    const auto& b = check.bounds();
    out.lower = b.v_lo[T][s0];
    out.upper = b.v_hi[T][s0];
    if (task.options.observer) {
      task.options.observer({out.iterations, 0, t, check.classification(), f.quantifier, b, counts});
    }
    const auto outcome = check_termination_finite(out.lower, out.upper, f);
    if (outcome != Outcome::Continue) {
      out.decision = outcome == Outcome::True ? Decision::True : Decision::False;
      out.delta_consumed = schedule.consumed(T);
      break;
    }
  }
  out.samples = counts.total();
  out.seconds = clock.seconds();
  return out;
}

/**
 * Unbounded Until/Release check. Runs the formula (i) and its dual (ii)
 * side by side on shared samples, each with its own growing horizon.
 * Both bound sets grow from below, so a lower bound of (i) above p proves
 * value > p, and a lower bound of (ii) above 1-p proves value < p.
 */
inline Verdict run_unbounded(CheckTask& task) {
  detail::require_task(task);
  const detail::Stopwatch clock;
  const auto& t = *task.topology;
  const auto& f = task.formula;
  if (!f.path.unbounded()) throw Error("run_unbounded: formula has a bounded horizon");
  const auto g = negate_for_dual_check(f);

  Verdict out;
  out.delta = task.options.delta;
  auto cls_f = classify(t, f.path, f.quantifier);
  auto cls_g = classify(t, g.path, g.quantifier);
  const auto s0 = task.initial;

  // Known value at the initial state from either classification.
  std::optional<double> known;
  if (!cls_f.open(s0)) known = cls_f.in_s1(s0) ? 1.0 : 0.0;
  else if (!cls_g.open(s0)) known = cls_g.in_s1(s0) ? 0.0 : 1.0;
  if (known) {
    out.lower = out.upper = *known;
    out.decision = detail::decide_known(*known, f).value_or(Decision::Inconclusive);
    out.seconds = clock.seconds();
    return out;
  }

  const auto schedule = DeltaSchedule::geometric(task.options.delta, task.options.lambda,
                                                 std::max(cls_f.num_open(), cls_g.num_open()), t.max_actions());
  BoundedCheck primal(t, std::move(cls_f), f.quantifier, 1);
  BoundedCheck dual(t, std::move(cls_g), g.quantifier, 1);
  Counts counts(t.num_choices());
  const EmpiricalModel estimate(counts, t.num_states());
  const auto radius = [&](std::size_t pair, std::uint32_t h) {
    return hoeffding_radius_log(counts.visits(pair), schedule.log_at(h));
  };

  while (out.iterations < task.options.max_iterations) {
    ++out.iterations;
    primal.sweep(task.sampler, counts);
    dual.sweep(task.sampler, counts);
    primal.update(estimate, radius);
    dual.update(estimate, radius);
    if (task.options.observer) {
      task.options.observer({out.iterations, 0, t, primal.classification(), f.quantifier, primal.bounds(), counts});
      task.options.observer({out.iterations, 1, t, dual.classification(), g.quantifier, dual.bounds(), counts});
    }

    const auto H1 = primal.bounds().horizon();
    const auto H2 = dual.bounds().horizon();
    out.h1 = H1;
    out.h2 = H2;
    out.lower = primal.bounds().v_lo[H1][s0];
    out.upper = 1.0 - dual.bounds().v_lo[H2][s0];
    const bool above = out.lower > f.threshold;
    const bool below = dual.bounds().v_lo[H2][s0] > g.threshold;
    if (above || below) {
      out.decision = above == f.lower_bounded() ? Decision::True : Decision::False;
      out.delta_consumed = schedule.consumed(std::max(H1, H2));
      break;
    }
    primal.maybe_extend();
    dual.maybe_extend();
  }
  out.samples = counts.total();
  out.seconds = clock.seconds();
  return out;
}

/// Dispatches on the formula's horizon.
inline Verdict run_check(CheckTask& task) {
  return task.formula.path.unbounded() ? run_unbounded(task) : run_finite(task);
}

/// True transition probabilities behind the Estimate interface of
/// update_q_bounds; pairs follow the topology's flat choice order.
class KnownModel {
 public:
  KnownModel(const Mdp& m, const Topology& t) : mdp_(&m), topology_(&t) {
    owner_.reserve(t.num_choices());
    for (StateId s = 0; s < t.num_states(); ++s) {
      for (std::size_t j = 0; j < t.num_choices(s); ++j) owner_.emplace_back(s, j);
    }
  }

  template <class Fn>
  void for_each(std::size_t pair, Fn&& fn) const {
    const auto [s, j] = owner_[pair];
    for (const auto& tr : mdp_->choices(s)[j].successors) fn(tr.target, tr.probability);
  }

 private:
  const Mdp* mdp_;
  const Topology* topology_;
  std::vector<std::pair<StateId, std::size_t>> owner_;
};

}  // namespace pctl_smc
