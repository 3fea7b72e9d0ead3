#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <vector>

#include "pctl_smc/classification.hpp"
#include "pctl_smc/mdp.hpp"
#include "pctl_smc/pctl.hpp"

namespace pctl_smc {

/// Exact optimal values. Finite tables hold one row per step 0..T; the
/// unbounded table holds the single limit row. q[h] is indexed by flat
/// choice (empty at h = 0).
struct ValueTable {
  std::vector<std::vector<double>> v;
  std::vector<std::vector<double>> q;

  [[nodiscard]] double at(StateId s) const { return v.back()[s]; }
  [[nodiscard]] std::uint32_t horizon() const { return static_cast<std::uint32_t>(v.size()) - 1; }
};

namespace detail {

inline double opt(double x, double y, Quantifier q) { return q == Quantifier::Max ? std::max(x, y) : std::min(x, y); }

/// Q row from the previous value row: sum_s' T(s,a,s') v(s').
inline std::vector<double> backup(const Mdp& m, const std::vector<double>& prev) {
  std::vector<double> q;
  for (StateId s = 0; s < m.num_states(); ++s) {
    for (const auto& c : m.choices(s)) {
      double acc = 0.0;
      for (const auto& tr : c.successors) acc += tr.probability * prev[tr.target];
      q.push_back(acc);
    }
  }
  return q;
}

/// States from which the Until target can be reached with positive
/// probability (Max: by some policy; Min: under every policy).
inline std::vector<bool> positive_until(const Mdp& m, const StateMask& l1, const StateMask& l2, Quantifier q) {
  const auto n = m.num_states();
  std::vector<bool> reach(l2.begin(), l2.end());
  for (bool grew = true; grew;) {
    grew = false;
    for (StateId s = 0; s < n; ++s) {
      if (reach[s] || !l1[s]) continue;
      const auto hits = [&](const Choice& c) {
        return std::any_of(c.successors.begin(), c.successors.end(), [&](const Transition& tr) { return reach[tr.target]; });
      };
      const auto& row = m.choices(s);
      const bool ok = q == Quantifier::Max ? std::any_of(row.begin(), row.end(), hits)
                                           : std::all_of(row.begin(), row.end(), hits);
      if (ok) {
        reach[s] = true;
        grew = true;
      }
    }
  }
  return reach;
}

inline ValueTable until_unbounded(const Mdp& m, const StateMask& l1, const StateMask& l2, Quantifier q, double tol) {
  const auto n = m.num_states();
  const auto positive = positive_until(m, l1, l2, q);
  std::vector<double> v(n, 0.0);
  for (StateId s = 0; s < n; ++s) v[s] = l2[s] ? 1.0 : 0.0;
  std::vector<double> qrow;
  for (std::uint64_t iter = 0; iter < 100'000'000ULL; ++iter) {
    qrow = backup(m, v);
    double change = 0.0;
    std::size_t k = 0;
    std::vector<double> next(v);
    for (StateId s = 0; s < n; ++s) {
      const auto& row = m.choices(s);
      if (l2[s] || !positive[s]) {
        k += row.size();
        continue;
      }
      double best = qrow[k];
      for (std::size_t j = 0; j < row.size(); ++j) best = opt(best, qrow[k + j], q);
      k += row.size();
      change = std::max(change, std::abs(best - v[s]));
      next[s] = best;
    }
    v = std::move(next);
    if (change < tol) break;
  }
  ValueTable out;
  out.v.push_back(v);
  out.q.push_back(backup(m, v));
  return out;
}

}  // namespace detail

/**
 * Finite-horizon optimal values by backward induction on the true model,
 * straight from the path semantics:
 *   Until:   V_0 = [l2];  V_h = 1 on l2, 0 on !l1&!l2, else opt_a sum T V_{h-1}
 *   Release: V_0 = [l2];  V_h = 0 on !l2, 1 on l1&l2, else opt_a sum T V_{h-1}
 *   Next:    V_0 = [l];   V_1 = opt_a sum T V_0  (T is forced to 1)
 */
inline ValueTable exact_finite(const Mdp& m, const PathTemplate& path, Quantifier q, std::uint32_t horizon) {
  const auto t = Topology::of(m);
  const auto n = m.num_states();
  const auto l1 = resolve(t, path.left);
  const auto l2 = resolve(t, path.right);
  if (path.op == PathOp::Next) horizon = 1;

  ValueTable out;
  out.v.emplace_back(n);
  out.q.emplace_back();
  for (StateId s = 0; s < n; ++s) out.v[0][s] = l2[s] ? 1.0 : 0.0;
  for (std::uint32_t h = 1; h <= horizon; ++h) {
    auto qrow = detail::backup(m, out.v[h - 1]);
    std::vector<double> v(n);
    std::size_t k = 0;
    for (StateId s = 0; s < n; ++s) {
      const auto width = m.choices(s).size();
      double best = qrow[k];
      for (std::size_t j = 0; j < width; ++j) best = detail::opt(best, qrow[k + j], q);
      k += width;
      switch (path.op) {
        case PathOp::Next: v[s] = best; break;
        case PathOp::Until: v[s] = l2[s] ? 1.0 : !l1[s] ? 0.0 : best; break;
        case PathOp::Release: v[s] = !l2[s] ? 0.0 : l1[s] ? 1.0 : best; break;
      }
    }
    out.v.push_back(std::move(v));
    out.q.push_back(std::move(qrow));
  }
  return out;
}

/**
 * Unbounded optimal values. Until iterates from below after removing the
 * states with probability 0 until the sup-norm step change drops below
 * `tol`. Release goes through the duality
 *   P^opt(l1 R l2) = 1 - P^opt'(!l1 U !l2)
 * with the opposite quantifier.
 */
inline ValueTable exact_unbounded(const Mdp& m, const PathTemplate& path, Quantifier q, double tol = 1e-12) {
  if (path.op == PathOp::Next) throw Error("exact_unbounded: Next has no unbounded form");
  const auto t = Topology::of(m);
  if (path.op == PathOp::Until) {
    return detail::until_unbounded(m, resolve(t, path.left), resolve(t, path.right), q, tol);
  }
  const auto other = q == Quantifier::Max ? Quantifier::Min : Quantifier::Max;
  auto dual = detail::until_unbounded(m, resolve(t, path.left.negation()), resolve(t, path.right.negation()), other, tol);
  for (auto& row : dual.v) {
    for (auto& x : row) x = 1.0 - x;
  }
  for (auto& row : dual.q) {
    for (auto& x : row) x = 1.0 - x;
  }
  return dual;
}

inline constexpr std::size_t kBruteForceMaxStates = 5;
inline constexpr std::uint32_t kBruteForceMaxHorizon = 4;

namespace detail {

inline bool path_satisfies(const PathTemplate& p, const std::vector<StateId>& path, const StateMask& l1,
                           const StateMask& l2) {
  const auto until = [&](const StateMask& a, const StateMask& b) {
    for (std::size_t i = 0; i < path.size(); ++i) {
      if (b[path[i]]) return true;
      if (!a[path[i]]) return false;
    }
    return false;
  };
  switch (p.op) {
    case PathOp::Next: return path.size() > 1 && l2[path[1]];
    case PathOp::Until: return until(l1, l2);
    case PathOp::Release: {
      StateMask n1(l1.size()), n2(l2.size());
      for (std::size_t s = 0; s < l1.size(); ++s) {
        n1[s] = !l1[s];
        n2[s] = !l2[s];
      }
      return !until(n1, n2);
    }
  }
  return false;
}

inline double expectimax(const Mdp& m, const PathTemplate& p, Quantifier q, std::uint32_t horizon,
                         std::vector<StateId>& path, const StateMask& l1, const StateMask& l2) {
  if (path.size() == horizon + 1) return path_satisfies(p, path, l1, l2) ? 1.0 : 0.0;
  std::optional<double> best;
  for (const auto& c : m.choices(path.back())) {
    double acc = 0.0;
    for (const auto& tr : c.successors) {
      path.push_back(tr.target);
      acc += tr.probability * expectimax(m, p, q, horizon, path, l1, l2);
      path.pop_back();
    }
    best = best ? opt(*best, acc, q) : acc;
  }
  return best.value_or(0.0);
}

}  // namespace detail

/**
 * Reference value by enumeration: walks every history of length H, decides
 * each full path against the path semantics, and optimizes the action at
 * every history node (the policy class of the semantics). Refuses
 * instances beyond 5 states or horizon 4.
 */
inline double brute_force_paths(const Mdp& m, const PathTemplate& path, std::uint32_t horizon, Quantifier q,
                                std::optional<StateId> start = std::nullopt) {
  if (m.num_states() > kBruteForceMaxStates || horizon > kBruteForceMaxHorizon) {
    throw Error("brute_force_paths: instance exceeds the enumeration guard (|S| <= 5, H <= 4)");
  }
  if (path.op == PathOp::Next) horizon = 1;
  const auto t = Topology::of(m);
  const auto l1 = resolve(t, path.left);
  const auto l2 = resolve(t, path.right);
  std::vector<StateId> prefix{start.value_or(m.initial())};
  return detail::expectimax(m, path, q, horizon, prefix, l1, l2);
}

enum class ExactDecision { True, False, Boundary };

struct ExactResult {
  ExactDecision decision;
  double value;
};

inline const char* to_string(ExactDecision d) {
  switch (d) {
    case ExactDecision::True: return "True";
    case ExactDecision::False: return "False";
    case ExactDecision::Boundary: return "Boundary";
  }
  return "?";
}

/// Exact value of the formula's probability at `start` (initial state by default).
inline double exact_value(const Mdp& m, const Formula& f, std::optional<StateId> start = std::nullopt) {
  const auto s = start.value_or(m.initial());
  if (f.path.unbounded()) return exact_unbounded(m, f.path, f.quantifier).at(s);
  return exact_finite(m, f.path, f.quantifier, f.path.steps()).at(s);
}

/// Ground-truth verdict; Boundary when |V - p| < gap (indifference violated).
inline ExactResult decide_exact(const Mdp& m, const Formula& f, double gap = 1e-6,
                                std::optional<StateId> start = std::nullopt) {
  const double v = exact_value(m, f, start);
  if (std::abs(v - f.threshold) < gap) return {ExactDecision::Boundary, v};
  const bool above = v > f.threshold;
  return {above == f.lower_bounded() ? ExactDecision::True : ExactDecision::False, v};
}

}  // namespace pctl_smc
