#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <vector>

#include "pctl_smc/mdp.hpp"
#include "pctl_smc/pctl.hpp"

namespace pctl_smc {

/// Per-state truth value of an atom literal.
using StateMask = std::vector<bool>;

/// Evaluates a literal on every state; unknown atoms are an error.
inline StateMask resolve(const Topology& t, const AtomLiteral& lit) {
  StateMask mask(t.num_states());
  if (lit.is_builtin()) {
    const bool value = (lit.atom == kTrueAtom) != lit.negated;
    std::fill(mask.begin(), mask.end(), value);
    return mask;
  }
  const auto atom = t.find_atom(lit.atom);
  if (!atom) throw Error("unknown atom '" + lit.atom + "'");
  for (StateId s = 0; s < t.num_states(); ++s) mask[s] = t.has_label(s, *atom) != lit.negated;
  return mask;
}

/// A set of states with, for each, the local choice indices kept inside the set.
struct EndComponent {
  std::vector<StateId> states;                  // ascending
  std::vector<std::vector<std::size_t>> kept;   // kept[i] belongs to states[i]

  [[nodiscard]] bool contains(StateId s) const { return std::binary_search(states.begin(), states.end(), s); }
};

namespace detail {

/// Iterative Tarjan over the graph induced by the kept choices of live states.
inline std::vector<int> strongly_connected(const Topology& t, const std::vector<bool>& live,
                                           const std::vector<bool>& kept) {
  const auto n = t.num_states();
  std::vector<int> comp(n, -1), index(n, -1), low(n, 0);
  std::vector<bool> on_stack(n, false);
  std::vector<StateId> stack;
  int next_index = 0, next_comp = 0;

  // Each frame walks the successors of one state: (state, choice j, successor k).
  struct Frame {
    StateId s;
    std::size_t j, k;
  };
  std::vector<Frame> frames;

  for (StateId root = 0; root < n; ++root) {
    if (!live[root] || index[root] >= 0) continue;
    frames.push_back({root, 0, 0});
    index[root] = low[root] = next_index++;
    stack.push_back(root);
    on_stack[root] = true;
    while (!frames.empty()) {
      auto& f = frames.back();
      bool descended = false;
      while (f.j < t.num_choices(f.s)) {
        const auto flat = t.choice(f.s, f.j);
        const auto& succ = t.successors(flat);
        if (!kept[flat] || f.k >= succ.size()) {
          ++f.j;
          f.k = 0;
          continue;
        }
        const StateId w = succ[f.k++];
        if (!live[w]) continue;
        if (index[w] < 0) {
          index[w] = low[w] = next_index++;
          stack.push_back(w);
          on_stack[w] = true;
          frames.push_back({w, 0, 0});
          descended = true;
          break;
        }
        if (on_stack[w]) low[f.s] = std::min(low[f.s], index[w]);
      }
      if (descended) continue;
      const StateId v = f.s;
      if (low[v] == index[v]) {
        StateId w;
        do {
          w = stack.back();
          stack.pop_back();
          on_stack[w] = false;
          comp[w] = next_comp;
        } while (w != v);
        ++next_comp;
      }
      frames.pop_back();
      if (!frames.empty()) low[frames.back().s] = std::min(low[frames.back().s], low[v]);
    }
  }
  return comp;
}

}  // namespace detail

/**
 * Maximal end components of the sub-MDP on `allowed` states (all states
 * when empty). A choice survives only if all its successors stay allowed.
 * Classic refinement: drop choices that leave their SCC, drop states that
 * lose every choice, recompute SCCs, until nothing changes.
 */
inline std::vector<EndComponent> mec_decomposition(const Topology& t, const std::vector<bool>& allowed = {}) {
  const auto n = t.num_states();
  std::vector<bool> live(n, true);
  if (!allowed.empty()) std::copy(allowed.begin(), allowed.end(), live.begin());
  std::vector<bool> kept(t.num_choices(), false);
  for (StateId s = 0; s < n; ++s) {
    if (!live[s]) continue;
    for (std::size_t j = 0; j < t.num_choices(s); ++j) kept[t.choice(s, j)] = true;
  }

  std::vector<int> comp;
  for (bool changed = true; changed;) {
    changed = false;
    // Closure: kept choices may only reach live states; states need a kept choice.
    for (bool shrinking = true; shrinking;) {
      shrinking = false;
      for (StateId s = 0; s < n; ++s) {
        if (!live[s]) continue;
        bool any = false;
        for (std::size_t j = 0; j < t.num_choices(s); ++j) {
          const auto flat = t.choice(s, j);
          if (!kept[flat]) continue;
          const auto& succ = t.successors(flat);
          if (std::any_of(succ.begin(), succ.end(), [&](StateId w) { return !live[w]; })) {
            kept[flat] = false;
            continue;
          }
          any = true;
        }
        if (!any) {
          live[s] = false;
          shrinking = true;
        }
      }
    }
    comp = detail::strongly_connected(t, live, kept);
    for (StateId s = 0; s < n; ++s) {
      if (!live[s]) continue;
      for (std::size_t j = 0; j < t.num_choices(s); ++j) {
        const auto flat = t.choice(s, j);
        if (!kept[flat]) continue;
        const auto& succ = t.successors(flat);
        if (std::any_of(succ.begin(), succ.end(), [&](StateId w) { return comp[w] != comp[s]; })) {
          kept[flat] = false;
          changed = true;
        }
      }
    }
  }

  int num_comp = 0;
  for (StateId s = 0; s < n; ++s) {
    if (live[s]) num_comp = std::max(num_comp, comp[s] + 1);
  }
  std::vector<EndComponent> by_comp(static_cast<std::size_t>(num_comp));
  for (StateId s = 0; s < n; ++s) {
    if (!live[s]) continue;
    auto& ec = by_comp[static_cast<std::size_t>(comp[s])];
    ec.states.push_back(s);
    auto& row = ec.kept.emplace_back();
    for (std::size_t j = 0; j < t.num_choices(s); ++j) {
      if (kept[t.choice(s, j)]) row.push_back(j);
    }
  }
  std::vector<EndComponent> out;
  for (auto& ec : by_comp) {
    if (!ec.states.empty()) out.push_back(std::move(ec));
  }
  std::sort(out.begin(), out.end(), [](const auto& x, const auto& y) { return x.states.front() < y.states.front(); });
  return out;
}

enum class Region : std::uint8_t { Zero, One, Open };

/// States of an end component that share one value: the optimum over the
/// component's exiting (state, choice) pairs.
struct PooledGroup {
  std::vector<StateId> states;
  std::vector<std::size_t> exits;  // flat choice indices
};

/**
 * Trivial-state split for one path formula: S0 (probability 0 under every
 * policy), S1 (probability 1), and the open rest that needs sampling.
 *
 * `terminal` is the value row at horizon 0. `pooled` is only populated for
 * unbounded minimizing Release, where lingering inside an end component of
 * the open region satisfies the formula and so must not look like failure.
 */
struct Classification {
  std::vector<Region> region;
  std::vector<double> terminal;
  std::vector<PooledGroup> pooled;
  std::vector<int> group_of;  // index into pooled, or -1

  [[nodiscard]] std::size_t num_states() const { return region.size(); }
  [[nodiscard]] bool in_s0(StateId s) const { return region[s] == Region::Zero; }
  [[nodiscard]] bool in_s1(StateId s) const { return region[s] == Region::One; }
  [[nodiscard]] bool open(StateId s) const { return region[s] == Region::Open; }

  [[nodiscard]] std::vector<StateId> states_in(Region r) const {
    std::vector<StateId> out;
    for (StateId s = 0; s < region.size(); ++s) {
      if (region[s] == r) out.push_back(s);
    }
    return out;
  }
  [[nodiscard]] std::vector<StateId> s0() const { return states_in(Region::Zero); }
  [[nodiscard]] std::vector<StateId> s1() const { return states_in(Region::One); }
  [[nodiscard]] std::vector<StateId> nontrivial() const { return states_in(Region::Open); }
  [[nodiscard]] std::size_t num_open() const { return static_cast<std::size_t>(std::count(region.begin(), region.end(), Region::Open)); }
};

namespace detail {

inline Classification make_classification(const std::vector<Region>& region, double open_terminal) {
  Classification c;
  c.region = region;
  c.terminal.resize(region.size());
  c.group_of.assign(region.size(), -1);
  for (std::size_t s = 0; s < region.size(); ++s) {
    c.terminal[s] = region[s] == Region::One ? 1.0 : region[s] == Region::Zero ? 0.0 : open_terminal;
  }
  return c;
}

}  // namespace detail

/// S0 = neither literal holds, S1 = right literal holds.
inline Classification classify_until(const Topology& t, const AtomLiteral& left, const AtomLiteral& right) {
  const auto l1 = resolve(t, left);
  const auto l2 = resolve(t, right);
  std::vector<Region> region(t.num_states(), Region::Open);
  for (StateId s = 0; s < t.num_states(); ++s) {
    if (l2[s]) {
      region[s] = Region::One;
    } else if (!l1[s]) {
      region[s] = Region::Zero;
    }
  }
  return detail::make_classification(region, 0.0);
}

/**
 * S0 = right literal fails (release broken at position 0);
 * S1 = both literals hold, plus states where release is certain:
 *   Max: states of end components inside the right-literal states,
 *   Min: the largest set of right-literal states that every action keeps
 *        inside itself or the both-hold states.
 * With `unbounded`, open states start from 0 (bounds grow from below) and,
 * for Min, end components of the open region are pooled.
 */
inline Classification classify_release(const Topology& t, const AtomLiteral& left, const AtomLiteral& right,
                                       Quantifier q = Quantifier::Max, bool unbounded = false) {
  const auto l1 = resolve(t, left);
  const auto l2 = resolve(t, right);
  const auto n = t.num_states();
  std::vector<Region> region(n, Region::Open);
  for (StateId s = 0; s < n; ++s) {
    if (!l2[s]) {
      region[s] = Region::Zero;
    } else if (l1[s]) {
      region[s] = Region::One;
    }
  }

  if (q == Quantifier::Max) {
    for (const auto& ec : mec_decomposition(t, l2)) {
      for (const auto s : ec.states) region[s] = Region::One;
    }
  } else {
    std::vector<bool> safe(n);
    for (StateId s = 0; s < n; ++s) safe[s] = region[s] == Region::Open;
    for (bool shrinking = true; shrinking;) {
      shrinking = false;
      for (StateId s = 0; s < n; ++s) {
        if (!safe[s]) continue;
        for (std::size_t j = 0; j < t.num_choices(s) && safe[s]; ++j) {
          for (const auto w : t.successors(s, j)) {
            if (!safe[w] && region[w] != Region::One) {
              safe[s] = false;
              shrinking = true;
              break;
            }
          }
        }
      }
    }
    for (StateId s = 0; s < n; ++s) {
      if (safe[s]) region[s] = Region::One;
    }
  }

  auto c = detail::make_classification(region, unbounded ? 0.0 : 1.0);
  if (q == Quantifier::Min && unbounded) {
    std::vector<bool> open(n);
    for (StateId s = 0; s < n; ++s) open[s] = region[s] == Region::Open;
    for (const auto& ec : mec_decomposition(t, open)) {
      PooledGroup g;
      g.states = ec.states;
      for (std::size_t i = 0; i < ec.states.size(); ++i) {
        const auto s = ec.states[i];
        for (std::size_t j = 0; j < t.num_choices(s); ++j) {
          if (!std::binary_search(ec.kept[i].begin(), ec.kept[i].end(), j)) g.exits.push_back(t.choice(s, j));
        }
      }
      for (const auto s : g.states) c.group_of[s] = static_cast<int>(c.pooled.size());
      c.pooled.push_back(std::move(g));
    }
  }
  return c;
}

/// Next: nothing is trivial; the horizon-0 row is the literal itself.
inline Classification classify_next(const Topology& t, const AtomLiteral& target) {
  const auto l = resolve(t, target);
  auto c = detail::make_classification(std::vector<Region>(t.num_states(), Region::Open), 0.0);
  for (StateId s = 0; s < t.num_states(); ++s) c.terminal[s] = l[s] ? 1.0 : 0.0;
  return c;
}

/// Classification the engine uses for a path formula.
inline Classification classify(const Topology& t, const PathTemplate& path, Quantifier q) {
  switch (path.op) {
    case PathOp::Next: return classify_next(t, path.right);
    case PathOp::Until: return classify_until(t, path.left, path.right);
    case PathOp::Release: return classify_release(t, path.left, path.right, q, path.unbounded());
  }
  return {};
}

}  // namespace pctl_smc
