#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "pctl_smc/mdp.hpp"
#include "pctl_smc/pctl.hpp"
#include "pctl_smc/random.hpp"

namespace pctl_smc {

struct RandomMdpSpec {
  std::uint64_t seed = 0;
  std::size_t num_states = 3;
  std::size_t num_actions = 2;
  std::size_t out_degree = 2;
  std::vector<std::string> atoms = {"a1", "a2"};
  std::vector<double> density = {0.6, 0.3};  // per atom, probability a state carries it
};

/**
 * Random MDP: every state enables every action; each (state, action) goes
 * to `out_degree` distinct uniformly chosen successors with flat-Dirichlet
 * weights. Fully determined by the seed (no std distributions involved).
 */
inline Mdp gen_random(const RandomMdpSpec& spec) {
  if (spec.num_states == 0 || spec.num_actions == 0) throw Error("gen_random: empty state or action set");
  if (spec.out_degree == 0 || spec.out_degree > spec.num_states) {
    throw Error("gen_random: out_degree must lie in [1, num_states]");
  }
  if (spec.density.size() != spec.atoms.size()) throw Error("gen_random: one density per atom required");

  Rng rng(spec.seed);
  Mdp m;
  for (const auto& a : spec.atoms) m.intern_atom(a);
  for (std::size_t s = 0; s < spec.num_states; ++s) {
    const auto id = m.add_state("s" + std::to_string(s));
    for (std::size_t i = 0; i < spec.atoms.size(); ++i) {
      if (uniform01(rng) < spec.density[i]) m.add_label(id, static_cast<AtomId>(i));
    }
  }
  std::vector<ActionId> actions;
  for (std::size_t a = 0; a < spec.num_actions; ++a) actions.push_back(m.intern_action("a" + std::to_string(a)));

  std::vector<StateId> pool(spec.num_states);
  for (StateId s = 0; s < spec.num_states; ++s) {
    for (const auto a : actions) {
      for (StateId i = 0; i < spec.num_states; ++i) pool[i] = i;
      std::vector<double> weight(spec.out_degree);
      double sum = 0.0;
      for (std::size_t k = 0; k < spec.out_degree; ++k) {
        const auto pick = k + uniform_index(rng, spec.num_states - k);
        std::swap(pool[k], pool[pick]);
        weight[k] = -std::log1p(-uniform01(rng));
        if (weight[k] <= 0.0) weight[k] = 1e-12;
        sum += weight[k];
      }
      for (std::size_t k = 0; k < spec.out_degree; ++k) m.add_transition(s, a, pool[k], weight[k] / sum);
    }
  }
  require_valid(m);
  return m;
}

struct DiceSpec {
  std::uint32_t faces = 6;
  std::uint32_t sum_bound = 7;  // atom holds iff both dice are rolled and d1 + d2 < sum_bound
};

inline constexpr std::string_view kDiceAtom = "a";
inline constexpr std::string_view kDiceDoneAtom = "done";

/**
 * Two fair n-sided dice. From `start` the scheduler picks which die to roll
 * first (actions `first`/`second`); the other die is rolled next; rolled
 * pairs are absorbing. Terminal states carry `done`, and `a` when the sum
 * is below the bound. |S| = 1 + 2n + n^2.
 */
inline Mdp gen_dice(const DiceSpec& spec) {
  const auto n = spec.faces;
  if (n < 2) throw Error("gen_dice: at least two faces required");
  Mdp m;
  m.intern_atom(kDiceAtom);
  m.intern_atom(kDiceDoneAtom);
  const auto first = m.intern_action("first");
  const auto second = m.intern_action("second");

  const auto start = m.add_state("start");
  std::vector<StateId> one(n + 1), two(n + 1);
  for (std::uint32_t v = 1; v <= n; ++v) one[v] = m.add_state("d1_" + std::to_string(v));
  for (std::uint32_t v = 1; v <= n; ++v) two[v] = m.add_state("d2_" + std::to_string(v));
  std::vector<std::vector<StateId>> roll(n + 1, std::vector<StateId>(n + 1));
  for (std::uint32_t v = 1; v <= n; ++v) {
    for (std::uint32_t w = 1; w <= n; ++w) {
      std::vector<std::string> atoms{std::string(kDiceDoneAtom)};
      if (v + w < spec.sum_bound) atoms.emplace_back(kDiceAtom);
      roll[v][w] = m.add_state("r_" + std::to_string(v) + "_" + std::to_string(w), atoms);
    }
  }

  const double p = 1.0 / n;
  for (std::uint32_t v = 1; v <= n; ++v) {
    m.add_transition(start, first, one[v], p);
    m.add_transition(start, second, two[v], p);
  }
  for (std::uint32_t v = 1; v <= n; ++v) {
    for (std::uint32_t w = 1; w <= n; ++w) {
      for (const auto a : {first, second}) {
        m.add_transition(one[v], a, roll[v][w], p);
        m.add_transition(two[w], a, roll[v][w], p);
        m.add_transition(roll[v][w], a, roll[v][w], 1.0);
      }
    }
  }
  m.set_initial(start);
  require_valid(m);
  return m;
}

/// Malformed model text, with the 1-based line it was found on.
class ModelFormatError : public Error {
 public:
  ModelFormatError(const std::string& what, std::size_t line)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
  [[nodiscard]] std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

/**
 * Line format:
 *   mdp
 *   state <name> [atom...]                 one per state, initial state first
 *   trans <state> <action> <state'> <prob>  per nonzero transition
 * `#` starts a comment. Labels and actions are written in name order and
 * probabilities shortest-round-trip, so write(read(write(m))) == write(m).
 */
inline void write_model(const Mdp& m, std::ostream& out) {
  out << "mdp\n";
  std::vector<StateId> order{m.initial()};
  for (StateId s = 0; s < m.num_states(); ++s) {
    if (s != m.initial()) order.push_back(s);
  }
  for (const auto s : order) {
    std::vector<std::string> labels;
    for (const auto a : m.labels(s)) labels.push_back(m.atom_name(a));
    std::sort(labels.begin(), labels.end());
    out << "state " << m.state_name(s);
    for (const auto& a : labels) out << ' ' << a;
    out << '\n';
  }
  for (const auto s : order) {
    std::vector<const Choice*> row;
    for (const auto& c : m.choices(s)) row.push_back(&c);
    std::sort(row.begin(), row.end(),
              [&](const Choice* x, const Choice* y) { return m.action_name(x->action) < m.action_name(y->action); });
    for (const auto* c : row) {
      for (const auto& tr : c->successors) {
        out << "trans " << m.state_name(s) << ' ' << m.action_name(c->action) << ' ' << m.state_name(tr.target) << ' '
            << detail::format_number(tr.probability) << '\n';
      }
    }
  }
}

inline std::string write_model(const Mdp& m) {
  std::ostringstream out;
  write_model(m, out);
  return out.str();
}

namespace detail {

inline std::vector<std::string_view> split_words(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
    const auto start = i;
    while (i < line.size() && line[i] != ' ' && line[i] != '\t' && line[i] != '\r') ++i;
    if (i > start) out.push_back(line.substr(start, i - start));
  }
  return out;
}

}  // namespace detail

inline Mdp read_model(std::istream& in) {
  struct Row {
    std::size_t line;
    std::vector<std::string> words;
  };
  std::vector<Row> rows;
  std::string text;
  for (std::size_t line = 1; std::getline(in, text); ++line) {
    const auto hash = text.find('#');
    const auto words = detail::split_words(std::string_view(text).substr(0, hash));
    if (words.empty()) continue;
    rows.push_back({line, std::vector<std::string>(words.begin(), words.end())});
  }
  if (rows.empty() || rows.front().words != std::vector<std::string>{"mdp"}) {
    throw ModelFormatError("missing 'mdp' header", rows.empty() ? 1 : rows.front().line);
  }

  Mdp m;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto& [line, w] = rows[i];
    if (w[0] == "state") {
      if (w.size() < 2) throw ModelFormatError("'state' needs a name", line);
      if (m.find_state(w[1])) throw ModelFormatError("duplicate state '" + w[1] + "'", line);
      m.add_state(w[1], std::vector<std::string>(w.begin() + 2, w.end()));
    } else if (w[0] != "trans") {
      throw ModelFormatError("unknown directive '" + w[0] + "'", line);
    }
  }
  if (m.num_states() == 0) throw ModelFormatError("no states declared", rows.front().line);

  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto& [line, w] = rows[i];
    if (w[0] != "trans") continue;
    if (w.size() != 5) throw ModelFormatError("'trans' needs <state> <action> <state'> <prob>", line);
    const auto from = m.find_state(w[1]);
    const auto to = m.find_state(w[3]);
    if (!from) throw ModelFormatError("unknown state '" + w[1] + "'", line);
    if (!to) throw ModelFormatError("unknown state '" + w[3] + "'", line);
    double p = 0.0;
    const auto& num = w[4];
    const auto [ptr, ec] = std::from_chars(num.data(), num.data() + num.size(), p);
    if (ec != std::errc() || ptr != num.data() + num.size()) {
      throw ModelFormatError("bad probability '" + num + "'", line);
    }
    if (!(p > 0.0 && p <= 1.0)) throw ModelFormatError("probability " + num + " outside (0,1]", line);
    m.add_transition(*from, m.intern_action(w[2]), *to, p);
  }
  require_valid(m);
  return m;
}

inline Mdp read_model(std::string_view text) {
  std::istringstream in{std::string(text)};
  return read_model(in);
}

inline Mdp load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open model file '" + path + "'");
  return read_model(in);
}

inline void save_model(const Mdp& m, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write model file '" + path + "'");
  write_model(m, out);
}

}  // namespace pctl_smc
