#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "pctl_smc/random.hpp"

namespace pctl_smc {

using StateId = std::uint32_t;
using ActionId = std::uint32_t;
using AtomId = std::uint32_t;

/// Base class of every error this library throws.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A caller broke a documented precondition (e.g. sampled a disabled action).
class ContractViolation : public Error {
 public:
  using Error::Error;
};

inline constexpr double kDistributionTolerance = 1e-9;

struct Transition {
  StateId target;
  double probability;

  friend bool operator==(const Transition&, const Transition&) = default;
};

/// One enabled action of a state together with its successor distribution.
struct Choice {
  ActionId action;
  std::vector<Transition> successors;  // sorted by target, nonzero only
};

/**
 * Explicit labeled MDP.
 *
 * States, actions and atoms are dense integers; names live in side tables
 * and are only used at the edges (files, reports, formulas). Choices of a
 * state are kept ordered by action id, so "lowest action index" tie-breaks
 * are well defined everywhere.
 */
class Mdp {
 public:
  StateId add_state(std::string name, const std::vector<std::string>& atoms = {}) {
    if (state_index_.contains(name)) throw Error("duplicate state '" + name + "'");
    const auto id = static_cast<StateId>(state_names_.size());
    state_index_.emplace(name, id);
    state_names_.push_back(std::move(name));
    choices_.emplace_back();
    labels_.emplace_back();
    for (const auto& atom : atoms) add_label(id, intern_atom(atom));
    return id;
  }

  AtomId intern_atom(std::string_view name) { return intern(atom_names_, atom_index_, name); }
  ActionId intern_action(std::string_view name) { return intern(action_names_, action_index_, name); }

  void add_label(StateId s, AtomId atom) {
    auto& row = labels_.at(s);
    const auto it = std::lower_bound(row.begin(), row.end(), atom);
    if (it == row.end() || *it != atom) row.insert(it, atom);
  }

  /// Adds probability mass to (s, a, t); repeated targets are merged.
  void add_transition(StateId s, ActionId a, StateId t, double probability) {
    if (t >= num_states()) throw Error("transition target out of range");
    auto& row = choices_.at(s);
    auto it = std::lower_bound(row.begin(), row.end(), a,
                               [](const Choice& c, ActionId id) { return c.action < id; });
    if (it == row.end() || it->action != a) it = row.insert(it, Choice{a, {}});
    auto& succ = it->successors;
    auto pos = std::lower_bound(succ.begin(), succ.end(), t,
                                [](const Transition& tr, StateId id) { return tr.target < id; });
    if (pos != succ.end() && pos->target == t) {
      pos->probability += probability;
    } else {
      succ.insert(pos, Transition{t, probability});
    }
  }

  void set_initial(StateId s) {
    if (s >= num_states()) throw Error("initial state out of range");
    initial_ = s;
  }

  [[nodiscard]] std::size_t num_states() const { return state_names_.size(); }
  [[nodiscard]] StateId initial() const { return initial_; }
  [[nodiscard]] const std::vector<Choice>& choices(StateId s) const { return choices_.at(s); }
  [[nodiscard]] const std::vector<AtomId>& labels(StateId s) const { return labels_.at(s); }
  [[nodiscard]] bool has_label(StateId s, AtomId atom) const {
    const auto& row = labels_.at(s);
    return std::binary_search(row.begin(), row.end(), atom);
  }

  [[nodiscard]] const std::string& state_name(StateId s) const { return state_names_.at(s); }
  [[nodiscard]] const std::string& action_name(ActionId a) const { return action_names_.at(a); }
  [[nodiscard]] const std::string& atom_name(AtomId a) const { return atom_names_.at(a); }
  [[nodiscard]] const std::vector<std::string>& atom_names() const { return atom_names_; }
  [[nodiscard]] const std::vector<std::string>& action_names() const { return action_names_; }

  [[nodiscard]] std::optional<StateId> find_state(std::string_view name) const {
    return find(state_index_, name);
  }
  [[nodiscard]] std::optional<AtomId> find_atom(std::string_view name) const {
    return find(atom_index_, name);
  }
  [[nodiscard]] std::optional<ActionId> find_action(std::string_view name) const {
    return find(action_index_, name);
  }

  [[nodiscard]] std::size_t max_actions() const {
    std::size_t best = 0;
    for (const auto& row : choices_) best = std::max(best, row.size());
    return best;
  }

  /// Structural equality by names, independent of id assignment order.
  friend bool operator==(const Mdp& x, const Mdp& y) {
    if (x.num_states() != y.num_states()) return false;
    if (x.state_name(x.initial()) != y.state_name(y.initial())) return false;
    for (StateId s = 0; s < x.num_states(); ++s) {
      const auto ys = y.find_state(x.state_name(s));
      if (!ys) return false;
      if (x.label_names(s) != y.label_names(*ys)) return false;
      if (x.named_choices(s) != y.named_choices(*ys)) return false;
    }
    return true;
  }

 private:
  using Index = std::unordered_map<std::string, std::uint32_t>;

  static std::uint32_t intern(std::vector<std::string>& names, Index& index, std::string_view name) {
    if (const auto it = index.find(std::string(name)); it != index.end()) return it->second;
    const auto id = static_cast<std::uint32_t>(names.size());
    names.emplace_back(name);
    index.emplace(names.back(), id);
    return id;
  }

  static std::optional<std::uint32_t> find(const Index& index, std::string_view name) {
    if (const auto it = index.find(std::string(name)); it != index.end()) return it->second;
    return std::nullopt;
  }

  [[nodiscard]] std::vector<std::string> label_names(StateId s) const {
    std::vector<std::string> out;
    for (const auto a : labels_[s]) out.push_back(atom_names_[a]);
    std::sort(out.begin(), out.end());
    return out;
  }

  using NamedRow = std::vector<std::pair<std::string, double>>;
  [[nodiscard]] std::vector<std::pair<std::string, NamedRow>> named_choices(StateId s) const {
    std::vector<std::pair<std::string, NamedRow>> out;
    for (const auto& c : choices_[s]) {
      NamedRow row;
      for (const auto& t : c.successors) row.emplace_back(state_names_[t.target], t.probability);
      std::sort(row.begin(), row.end());
      out.emplace_back(action_names_[c.action], std::move(row));
    }
    std::sort(out.begin(), out.end());
    return out;
  }

  std::vector<std::string> state_names_, action_names_, atom_names_;
  Index state_index_, action_index_, atom_index_;
  std::vector<std::vector<Choice>> choices_;
  std::vector<std::vector<AtomId>> labels_;
  StateId initial_ = 0;
};

enum class ViolationKind { DistributionSum, ProbabilityRange, NoEnabledAction, UnknownAtom };

struct Violation {
  ViolationKind kind;
  StateId state;
  std::optional<ActionId> action;
  std::string message;
};

/// Lists every broken model invariant; an empty result means the model is valid.
inline std::vector<Violation> validate(const Mdp& m) {
  std::vector<Violation> out;
  for (StateId s = 0; s < m.num_states(); ++s) {
    const auto& where = m.state_name(s);
    if (m.choices(s).empty()) {
      out.push_back({ViolationKind::NoEnabledAction, s, std::nullopt,
                     "state '" + where + "': no enabled action"});
    }
    for (const auto& c : m.choices(s)) {
      double sum = 0.0;
      for (const auto& t : c.successors) {
        sum += t.probability;
        if (!(t.probability > 0.0 && t.probability <= 1.0)) {
          out.push_back({ViolationKind::ProbabilityRange, s, c.action,
                         "state '" + where + "', action '" + m.action_name(c.action) +
                             "': probability " + std::to_string(t.probability) + " outside (0,1]"});
        }
      }
      if (std::abs(sum - 1.0) > kDistributionTolerance) {
        out.push_back({ViolationKind::DistributionSum, s, c.action,
                       "state '" + where + "', action '" + m.action_name(c.action) +
                           "': distribution sum " + std::to_string(sum) + " != 1"});
      }
    }
    for (const auto atom : m.labels(s)) {
      if (atom >= m.atom_names().size()) {
        out.push_back({ViolationKind::UnknownAtom, s, std::nullopt,
                       "state '" + where + "': label id " + std::to_string(atom) + " not in atom table"});
      }
    }
  }
  return out;
}

inline void require_valid(const Mdp& m) {
  const auto violations = validate(m);
  if (violations.empty()) return;
  std::string msg = "invalid model:";
  for (const auto& v : violations) msg += "\n  " + v.message;
  throw Error(msg);
}

/**
 * Support graph of an MDP: successor sets per (state, choice) and labels,
 * no probabilities. This is everything the statistical engine may look at.
 *
 * Choices are addressed either as (state, local index j) or by a flat
 * index `choice(s, j)`; the flat index is what per-pair tables use.
 */
class Topology {
 public:
  Topology() = default;

  static Topology of(const Mdp& m) {
    Topology t;
    t.offset_.reserve(m.num_states() + 1);
    t.offset_.push_back(0);
    for (StateId s = 0; s < m.num_states(); ++s) {
      for (const auto& c : m.choices(s)) {
        std::vector<StateId> succ;
        succ.reserve(c.successors.size());
        for (const auto& tr : c.successors) succ.push_back(tr.target);
        t.successors_.push_back(std::move(succ));
        t.actions_.push_back(c.action);
      }
      t.offset_.push_back(t.successors_.size());
      t.labels_.push_back(m.labels(s));
      t.state_names_.push_back(m.state_name(s));
    }
    t.atom_names_ = m.atom_names();
    t.initial_ = m.initial();
    return t;
  }

  [[nodiscard]] std::size_t num_states() const { return labels_.size(); }
  [[nodiscard]] std::size_t num_choices() const { return successors_.size(); }
  [[nodiscard]] std::size_t num_choices(StateId s) const { return offset_[s + 1] - offset_[s]; }
  [[nodiscard]] std::size_t choice(StateId s, std::size_t j) const { return offset_[s] + j; }
  [[nodiscard]] const std::vector<StateId>& successors(std::size_t flat) const { return successors_[flat]; }
  [[nodiscard]] const std::vector<StateId>& successors(StateId s, std::size_t j) const {
    return successors_[choice(s, j)];
  }
  [[nodiscard]] ActionId action(std::size_t flat) const { return actions_[flat]; }
  [[nodiscard]] StateId initial() const { return initial_; }
  [[nodiscard]] const std::vector<AtomId>& labels(StateId s) const { return labels_[s]; }
  [[nodiscard]] bool has_label(StateId s, AtomId atom) const {
    return std::binary_search(labels_[s].begin(), labels_[s].end(), atom);
  }
  [[nodiscard]] const std::string& state_name(StateId s) const { return state_names_[s]; }
  [[nodiscard]] const std::vector<std::string>& atom_names() const { return atom_names_; }
  [[nodiscard]] std::optional<AtomId> find_atom(std::string_view name) const {
    for (AtomId a = 0; a < atom_names_.size(); ++a) {
      if (atom_names_[a] == name) return a;
    }
    return std::nullopt;
  }
  [[nodiscard]] std::size_t max_actions() const {
    std::size_t best = 0;
    for (StateId s = 0; s < num_states(); ++s) best = std::max(best, num_choices(s));
    return best;
  }

 private:
  std::vector<std::size_t> offset_;
  std::vector<std::vector<StateId>> successors_;
  std::vector<ActionId> actions_;
  std::vector<std::vector<AtomId>> labels_;
  std::vector<std::string> state_names_;
  std::vector<std::string> atom_names_;
  StateId initial_ = 0;
};

/**
 * Black-box access to the true transition function: draws one successor of
 * (state, choice). Owns its random engine, so one handle serves one thread.
 */
class Sampler {
 public:
  using StepFn = std::function<StateId(StateId, std::size_t, Rng&)>;

  Sampler(StepFn step, std::uint64_t seed) : step_(std::move(step)), rng_(seed) {}

  /// Sampler over a known model; the model is shared, never copied.
  static Sampler of(std::shared_ptr<const Mdp> m, std::uint64_t seed) {
    return Sampler(
        [m = std::move(m)](StateId s, std::size_t j, Rng& rng) -> StateId {
          if (s >= m->num_states() || j >= m->choices(s).size()) {
            throw ContractViolation("sample_step: choice " + std::to_string(j) +
                                    " not enabled in state " + std::to_string(s));
          }
          const auto& succ = m->choices(s)[j].successors;
          const double u = uniform01(rng);
          double acc = 0.0;
          for (const auto& t : succ) {
            acc += t.probability;
            if (u < acc) return t.target;
          }
          return succ.back().target;  // rounding slack at the top end
        },
        seed);
  }

  /// One successor of (s, j-th enabled choice of s).
  StateId step(StateId s, std::size_t j) {
    ++draws_;
    return step_(s, j, rng_);
  }

  [[nodiscard]] std::uint64_t draws() const { return draws_; }

 private:
  StepFn step_;
  Rng rng_;
  std::uint64_t draws_ = 0;
};

/// Samples by global action id; throws ContractViolation when a is not in A(s).
inline StateId sample_step(Sampler& sampler, const Topology& t, StateId s, ActionId a) {
  if (s >= t.num_states()) throw ContractViolation("sample_step: state out of range");
  for (std::size_t j = 0; j < t.num_choices(s); ++j) {
    if (t.action(t.choice(s, j)) == a) return sampler.step(s, j);
  }
  throw ContractViolation("sample_step: action " + std::to_string(a) + " not enabled in state '" +
                          t.state_name(s) + "'");
}

}  // namespace pctl_smc
