#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "pctl_smc.hpp"

namespace testing_support {

using namespace pctl_smc;

/// s0 has two actions reaching `goal` w.p. 0.3 and 0.6, `sink` otherwise.
inline Mdp goal_mdp() {
  Mdp m;
  m.intern_atom("goal");
  const auto s0 = m.add_state("s0");
  const auto goal = m.add_state("goal", {"goal"});
  const auto sink = m.add_state("sink");
  const auto lo = m.intern_action("lo");
  const auto hi = m.intern_action("hi");
  m.add_transition(s0, lo, goal, 0.3);
  m.add_transition(s0, lo, sink, 0.7);
  m.add_transition(s0, hi, goal, 0.6);
  m.add_transition(s0, hi, sink, 0.4);
  for (const auto a : {lo, hi}) {
    m.add_transition(goal, a, goal, 1.0);
    m.add_transition(sink, a, sink, 1.0);
  }
  m.set_initial(s0);
  return m;
}

/// Random chain of levels 0..n: from level i, `bet` goes up w.p. q and down
/// w.p. 1-q; level 0 is ruin, level n carries `goal`. Both ends absorb.
inline Mdp gambler(std::uint32_t n, double q, std::uint32_t start) {
  Mdp m;
  m.intern_atom("goal");
  std::vector<StateId> lv;
  for (std::uint32_t i = 0; i <= n; ++i) {
    lv.push_back(i == n ? m.add_state("l" + std::to_string(i), {"goal"}) : m.add_state("l" + std::to_string(i)));
  }
  const auto bet = m.intern_action("bet");
  const auto stay = m.intern_action("stay");
  for (std::uint32_t i = 0; i <= n; ++i) {
    if (i == 0 || i == n) {
      m.add_transition(lv[i], bet, lv[i], 1.0);
      continue;
    }
    m.add_transition(lv[i], bet, lv[i + 1], q);
    m.add_transition(lv[i], bet, lv[i - 1], 1.0 - q);
    m.add_transition(lv[i], stay, lv[i], 1.0);
  }
  m.set_initial(lv[start]);
  return m;
}

/// Small random model drawn from the seed: 2..max_states states, 1..max_actions actions.
inline Mdp small_random(std::uint64_t seed, std::size_t max_states = 5, std::size_t max_actions = 3) {
  Rng rng(seed * 7919 + 17);
  RandomMdpSpec spec;
  spec.seed = seed;
  spec.num_states = 2 + uniform_index(rng, max_states - 1);
  spec.num_actions = 1 + uniform_index(rng, max_actions);
  spec.out_degree = 1 + uniform_index(rng, std::min<std::size_t>(3, spec.num_states));
  spec.density = {0.3 + 0.4 * uniform01(rng), 0.15 + 0.3 * uniform01(rng)};
  return gen_random(spec);
}

inline PathTemplate path_of(PathOp op, AtomLiteral left, AtomLiteral right, std::optional<std::uint32_t> h) {
  PathTemplate p;
  p.op = op;
  p.left = std::move(left);
  p.right = std::move(right);
  p.horizon = h;
  return p;
}

inline AtomLiteral lit(const std::string& name, bool negated = false) { return {name, negated}; }

/// Until, Release, F and G templates over a1/a2 at horizon h (nullopt = unbounded).
inline std::vector<PathTemplate> template_family(std::optional<std::uint32_t> h) {
  return {path_of(PathOp::Until, lit("a1"), lit("a2"), h), path_of(PathOp::Release, lit("a1"), lit("a2"), h),
          path_of(PathOp::Until, AtomLiteral::truth(), lit("a2"), h),
          path_of(PathOp::Release, AtomLiteral::falsity(), lit("a1"), h)};
}

inline Formula formula_of(Quantifier q, Relation r, double p, PathTemplate path) {
  Formula f;
  f.quantifier = q;
  f.relation = r;
  f.written = r;
  f.threshold = p;
  f.path = std::move(path);
  return f;
}

inline Verdict check(const Mdp& m, const Formula& f, std::uint64_t seed, EngineOptions options = {}) {
  const auto shared = std::make_shared<const Mdp>(m);
  const auto t = Topology::of(*shared);
  CheckTask task{f, &t, Sampler::of(shared, seed), shared->initial(), std::move(options)};
  return run_check(task);
}

}  // namespace testing_support
