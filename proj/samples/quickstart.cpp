// Checks a reachability query on a random model with the learner, then
// compares against the exact value computed from the hidden probabilities.
#include <iostream>
#include <memory>

#include "pctl_smc.hpp"

int main() {
  using namespace pctl_smc;

  RandomMdpSpec spec;
  spec.seed = 0;
  spec.num_states = 5;
  const auto mdp = std::make_shared<const Mdp>(gen_random(spec));
  const auto topology = Topology::of(*mdp);

  auto f = parse_formula("Pmax > 0.5 (a1 U<=4 a2)");
  const double exact = exact_value(*mdp, f);
  f.threshold = exact > 0.5 ? exact - 0.1 : exact + 0.1;

  CheckTask task{f, &topology, Sampler::of(mdp, 1), mdp->initial(), {}};
  const auto verdict = run_check(task);
  std::cout << to_string(f) << "\n  exact value " << exact << "\n  verdict " << to_string(verdict.decision)
            << " after " << verdict.iterations << " iterations, " << verdict.samples << " samples\n";
  return verdict.decision == Decision::Inconclusive ? 2 : 0;
}
