#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "pctl_smc/engine.hpp"
#include "pctl_smc/models.hpp"
#include "pctl_smc/oracle.hpp"
#include "pctl_smc/pctl.hpp"
#include "pctl_smc/report.hpp"

namespace pctl_smc::cli {

// Exit codes: verdicts first, then failures.
inline constexpr int kExitTrue = 0;
inline constexpr int kExitFalse = 1;
inline constexpr int kExitUndecided = 2;  // Inconclusive check, Boundary oracle
inline constexpr int kExitUsage = 3;
inline constexpr int kExitInput = 4;

inline int exit_code(Decision d) {
  switch (d) {
    case Decision::True: return kExitTrue;
    case Decision::False: return kExitFalse;
    case Decision::Inconclusive: return kExitUndecided;
  }
  return kExitUndecided;
}

inline int exit_code(ExactDecision d) {
  switch (d) {
    case ExactDecision::True: return kExitTrue;
    case ExactDecision::False: return kExitFalse;
    case ExactDecision::Boundary: return kExitUndecided;
  }
  return kExitUndecided;
}

/// Verdict whose decision the ground truth agrees with, if any.
inline std::optional<Decision> expected_decision(ExactDecision d) {
  if (d == ExactDecision::True) return Decision::True;
  if (d == ExactDecision::False) return Decision::False;
  return std::nullopt;
}

inline StateId start_state(const Mdp& m, const std::string& name) {
  if (name.empty()) return m.initial();
  const auto s = m.find_state(name);
  if (!s) throw Error("unknown state '" + name + "'");
  return *s;
}

/// Appends rows to a report file: CSV when the name ends in .csv, JSON lines otherwise.
inline void append_reports(const std::string& path, const std::vector<RunReport>& rows) {
  const bool csv = std::filesystem::path(path).extension() == ".csv";
  const bool fresh = !std::filesystem::exists(path) || std::filesystem::file_size(path) == 0;
  std::ofstream out(path, std::ios::app);
  if (!out) throw Error("cannot write report file '" + path + "'");
  if (csv && fresh) out << kReportColumns << '\n';
  for (const auto& r : rows) out << (csv ? to_csv(r) : to_json(r).dump()) << '\n';
}

/// One seeded run of the learner against a known model.
inline RunReport run_once(const std::shared_ptr<const Mdp>& mdp, const Topology& topology, const Formula& f,
                          StateId start, const EngineOptions& options, std::uint64_t seed, const std::string& name,
                          std::optional<double> oracle) {
  CheckTask task{f, &topology, Sampler::of(mdp, seed), start, options};
  const auto verdict = run_check(task);
  return RunReport::of(name, f, verdict, seed, oracle);
}

struct CheckArgs {
  std::string model, formula, out, state;
  double delta = 0.05, lambda = 0.9;
  std::uint64_t seed = 0, max_iters = 10'000'000, repeat = 1;
  bool no_oracle = false;
};

inline int cmd_check(const CheckArgs& a, std::ostream& out) {
  const auto mdp = std::make_shared<const Mdp>(load_model(a.model));
  const auto f = parse_formula(a.formula);
  const auto topology = Topology::of(*mdp);
  const auto start = start_state(*mdp, a.state);
  for (const auto& atom : atoms_of(f)) {
    if (!topology.find_atom(atom)) throw Error("formula uses unknown atom '" + atom + "'");
  }

  std::optional<ExactResult> truth;
  if (!a.no_oracle) truth = decide_exact(*mdp, f, 1e-6, start);

  EngineOptions options;
  options.delta = a.delta;
  options.lambda = a.lambda;
  options.max_iterations = a.max_iters;
  const auto name = std::filesystem::path(a.model).filename().string();
  const auto rows = parallel_map(a.repeat, thread_budget(), [&](std::size_t i) {
    return run_once(mdp, topology, f, start, options, a.seed + i, name,
                    truth ? std::optional<double>(truth->value) : std::nullopt);
  });
  for (const auto& r : rows) out << to_json(r).dump() << '\n';
  if (!a.out.empty()) append_reports(a.out, rows);

  if (rows.size() == 1) return exit_code(rows.front().verdict);
  const auto agg = aggregate(rows, truth ? expected_decision(truth->decision) : std::nullopt);
  auto summary = to_json(agg);
  if (truth) {
    summary["correct"] = agg.correct;
    summary["incorrect"] = agg.incorrect;
  }
  out << nlohmann::ordered_json{{"summary", summary}}.dump() << '\n';
  if (agg.decided_true > agg.decided_false && agg.decided_true > agg.inconclusive) return kExitTrue;
  if (agg.decided_false > agg.decided_true && agg.decided_false > agg.inconclusive) return kExitFalse;
  return kExitUndecided;
}

struct OracleArgs {
  std::string model, formula, state;
  std::optional<std::uint32_t> horizon;
  double gap = 1e-6;
};

inline int cmd_oracle(const OracleArgs& a, std::ostream& out) {
  const auto m = load_model(a.model);
  auto f = parse_formula(a.formula);
  if (a.horizon) {
    if (*a.horizon == 0) throw Error("--horizon must be positive");
    f.path.horizon = *a.horizon;
  }
  const auto start = start_state(m, a.state);
  const auto result = decide_exact(m, f, a.gap, start);

  nlohmann::ordered_json j;
  j["state"] = m.state_name(start);
  j["formula"] = to_string(f, true);
  if (f.path.unbounded()) {
    j["horizon"] = "inf";
  } else {
    j["horizon"] = f.path.steps();
    const auto table = exact_finite(m, f.path, f.quantifier, f.path.steps());
    std::vector<double> series;
    for (const auto& row : table.v) series.push_back(row[start]);
    j["series"] = series;
  }
  j["value"] = result.value;
  j["threshold"] = f.threshold;
  j["verdict"] = to_string(result.decision);
  out << j.dump() << '\n';
  return exit_code(result.decision);
}

struct GenerateArgs {
  std::string kind = "random", out;
  std::uint64_t seed = 0;
  std::size_t states = 3, actions = 2;
  std::optional<std::size_t> out_degree;
  std::uint32_t faces = 6, sum_bound = 7;
};

inline int cmd_generate(const GenerateArgs& a, std::ostream& out) {
  Mdp m;
  if (a.kind == "random") {
    RandomMdpSpec spec;
    spec.seed = a.seed;
    spec.num_states = a.states;
    spec.num_actions = a.actions;
    spec.out_degree = a.out_degree.value_or(std::min<std::size_t>(2, a.states));
    m = gen_random(spec);
  } else {
    m = gen_dice({a.faces, a.sum_bound});
  }
  if (a.out.empty()) {
    write_model(m, out);
  } else {
    save_model(m, a.out);
  }
  return 0;
}

/// One benchmark instance: a model and a formula family over thresholds.
struct BenchInstance {
  std::string name;
  Mdp model;
  PathTemplate path;
  std::uint32_t label_horizon = 0;  // H column of the summary table
};

struct BenchArgs {
  std::string suite = "random", out, mode = "finite";
  double delta = 0.05, lambda = 0.9;
  std::uint64_t runs = 10, seed = 1, max_iters = 10'000'000;
  std::vector<std::size_t> sizes;
};

namespace detail {

inline PathTemplate bench_path(const std::string& left, const std::string& right, std::optional<std::uint32_t> h) {
  PathTemplate p;
  p.op = PathOp::Until;
  p.left = left.empty() ? AtomLiteral::truth() : AtomLiteral{left, false};
  p.right = AtomLiteral{right, false};
  p.horizon = h;
  return p;
}

/// Random instances whose initial state is open and whose Pmax value is
/// strictly inside (0,1); seeds are scanned upward from `seed`.
inline std::vector<BenchInstance> random_suite(const BenchArgs& a) {
  struct Shape {
    std::size_t states, actions;
    std::uint32_t horizon;
  };
  std::vector<Shape> shapes;
  if (a.sizes.empty()) {
    shapes = {{3, 3, 4}, {4, 2, 4}, {5, 2, 4}};
  } else {
    for (const auto n : a.sizes) shapes.push_back({n, 2, 4});
  }
  std::vector<BenchInstance> out;
  for (const auto& sh : shapes) {
    const auto h = a.mode == "finite" ? std::optional<std::uint32_t>(sh.horizon) : std::nullopt;
    const auto path = bench_path("a1", "a2", h);
    for (std::uint64_t seed = a.seed;; ++seed) {
      RandomMdpSpec spec;
      spec.seed = seed;
      spec.num_states = sh.states;
      spec.num_actions = sh.actions;
      spec.out_degree = std::min<std::size_t>(2, sh.states);
      auto m = gen_random(spec);
      const auto t = Topology::of(m);
      if (!classify(t, path, Quantifier::Max).open(m.initial())) continue;
      const auto v = h ? exact_finite(m, path, Quantifier::Max, *h).at(m.initial())
                       : exact_unbounded(m, path, Quantifier::Max).at(m.initial());
      if (!(v > 0.15 && v < 0.85)) continue;
      out.push_back({"random_n" + std::to_string(sh.states) + "_a" + std::to_string(sh.actions) + "_seed" +
                         std::to_string(seed),
                     std::move(m), path, sh.horizon});
      break;
    }
  }
  return out;
}

inline std::vector<BenchInstance> dice_suite(const BenchArgs& a) {
  const std::vector<std::size_t> faces = a.sizes.empty() ? std::vector<std::size_t>{2, 3, 5} : a.sizes;
  std::vector<BenchInstance> out;
  for (std::size_t i = 0; i < faces.size(); ++i) {
    const auto n = static_cast<std::uint32_t>(faces[i]);
    const std::uint32_t h = i == 0 ? 5 : 10;
    auto m = gen_dice({n, n + 1});
    out.push_back({"dice_n" + std::to_string(n), std::move(m),
                   bench_path("", std::string(kDiceAtom), a.mode == "finite" ? std::optional<std::uint32_t>(h)
                                                                             : std::nullopt),
                   h});
  }
  return out;
}

}  // namespace detail

/**
 * For every instance, checks Pmax < p at p = v - 0.1 and p = v + 0.1 (v the
 * exact value), `runs` seeds each. Writes runs.jsonl, runs.csv and
 * summary.csv under `out`.
 */
inline int cmd_bench(const BenchArgs& a, std::ostream& out) {
  if (a.mode != "finite" && a.mode != "unbounded") throw Error("--mode must be finite or unbounded");
  const auto instances = a.suite == "random" ? detail::random_suite(a) : detail::dice_suite(a);
  std::filesystem::create_directories(a.out);
  const auto dir = std::filesystem::path(a.out);
  std::ofstream jsonl(dir / "runs.jsonl", std::ios::app);
  std::ofstream csv(dir / "runs.csv");
  std::ofstream summary(dir / "summary.csv");
  if (!jsonl || !csv || !summary) throw Error("cannot write into '" + a.out + "'");
  csv << kReportColumns << '\n';
  summary << "model,states,actions,H,p,oracle,truth,runs,correct,incorrect,inconclusive,mean_iterations,"
             "mean_samples,mean_time,mean_h1,mean_h2\n";

  EngineOptions options;
  options.delta = a.delta;
  options.lambda = a.lambda;
  options.max_iterations = a.max_iters;
  std::size_t incorrect = 0;
  for (const auto& inst : instances) {
    const auto mdp = std::make_shared<const Mdp>(inst.model);
    const auto topology = Topology::of(*mdp);
    for (const double shift : {-0.1, 0.1}) {
      Formula f;
      f.quantifier = Quantifier::Max;
      f.relation = f.written = Relation::Less;
      f.path = inst.path;
      const double v = exact_value(*mdp, f);
      f.threshold = v + shift;
      if (!(f.threshold > 0.0 && f.threshold < 1.0)) continue;
      const auto truth = decide_exact(*mdp, f);
      if (truth.decision == ExactDecision::Boundary) continue;

      const auto rows = parallel_map(a.runs, thread_budget(), [&](std::size_t i) {
        return run_once(mdp, topology, f, mdp->initial(), options, a.seed + i, inst.name, truth.value);
      });
      for (const auto& r : rows) {
        jsonl << to_json(r).dump() << '\n';
        csv << to_csv(r) << '\n';
      }
      const auto agg = aggregate(rows, expected_decision(truth.decision));
      incorrect += agg.incorrect;
      summary << inst.name << ',' << mdp->num_states() << ',' << mdp->action_names().size() << ','
              << (f.path.unbounded() ? std::string("inf") : std::to_string(inst.label_horizon)) << ','
              << pctl_smc::detail::format_number(f.threshold) << ',' << pctl_smc::detail::format_number(truth.value)
              << ',' << to_string(truth.decision) << ',' << agg.runs << ',' << agg.correct << ',' << agg.incorrect
              << ',' << agg.inconclusive << ',' << agg.mean_iterations << ',' << agg.mean_samples << ','
              << agg.mean_time << ',' << agg.mean_h1 << ',' << agg.mean_h2 << '\n';
      out << inst.name << " p=" << pctl_smc::detail::format_number(f.threshold) << " truth=" << to_string(truth.decision)
          << " correct=" << agg.correct << '/' << agg.runs << " mean_iter=" << agg.mean_iterations
          << " mean_time=" << agg.mean_time << "s\n";
    }
  }
  return incorrect == 0 ? 0 : kExitFalse;
}

/// Entry point shared by the executable and the tests. argv[0] is the program name.
inline int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Statistical model checking of PCTL on MDPs with unknown transition probabilities"};
  app.require_subcommand(1);

  CheckArgs check;
  auto* c = app.add_subcommand("check", "Learn the model by sampling and decide the formula");
  c->add_option("--model", check.model, "Model file")->required();
  c->add_option("--formula", check.formula, "Formula, e.g. 'Pmax >= 0.5 (a1 U<=4 a2)'")->required();
  c->add_option("--delta", check.delta, "Error budget in (0,1)")->required();
  c->add_option("--seed", check.seed, "Sampler seed; repeats use seed, seed+1, ...")->required();
  c->add_option("--lambda", check.lambda, "Geometric split of delta over horizon levels");
  c->add_option("--max-iters", check.max_iters, "Iteration cap");
  c->add_option("--repeat", check.repeat, "Independent runs")->check(CLI::PositiveNumber);
  c->add_option("--out", check.out, "Append reports here (.csv or JSON lines)");
  c->add_option("--state", check.state, "Start state (default: the model's initial state)");
  c->add_flag("--no-oracle", check.no_oracle, "Skip the exact value in reports");

  OracleArgs oracle;
  std::uint32_t horizon = 0;
  auto* o = app.add_subcommand("oracle", "Exact value from the model's true probabilities");
  o->add_option("--model", oracle.model, "Model file")->required();
  o->add_option("--formula", oracle.formula, "Formula")->required();
  auto* horizon_opt = o->add_option("--horizon", horizon, "Override the formula's step bound");
  o->add_option("--state", oracle.state, "Start state");
  o->add_option("--gap", oracle.gap, "Values closer than this to the threshold are Boundary");

  GenerateArgs gen;
  std::size_t out_degree = 0;
  auto* g = app.add_subcommand("generate", "Write a generated model");
  g->add_option("--kind", gen.kind, "random or dice")->check(CLI::IsMember({"random", "dice"}));
  g->add_option("--seed", gen.seed, "Generator seed");
  g->add_option("--states", gen.states, "States (random)");
  g->add_option("--actions", gen.actions, "Actions per state (random)");
  auto* degree_opt = g->add_option("--out-degree", out_degree, "Successors per action (random)");
  g->add_option("--faces", gen.faces, "Faces per die (dice)");
  g->add_option("--sum-bound", gen.sum_bound, "Atom a holds when d1 + d2 is below this (dice)");
  g->add_option("--out", gen.out, "Output file (default: stdout)");

  BenchArgs bench;
  auto* b = app.add_subcommand("bench", "Run a benchmark suite against exact values");
  b->add_option("--suite", bench.suite, "random or dice")->check(CLI::IsMember({"random", "dice"}));
  b->add_option("--delta", bench.delta, "Error budget");
  b->add_option("--lambda", bench.lambda, "Geometric split of delta");
  b->add_option("--runs", bench.runs, "Runs per instance and threshold")->check(CLI::PositiveNumber);
  b->add_option("--seed", bench.seed, "First seed");
  b->add_option("--max-iters", bench.max_iters, "Iteration cap");
  b->add_option("--mode", bench.mode, "finite or unbounded");
  b->add_option("--sizes", bench.sizes, "States (random) or faces (dice) per instance, comma separated")
      ->delimiter(',');
  b->add_option("--out", bench.out, "Output directory")->required();

  std::vector<std::string> rev(args.rbegin(), args.rend() - (args.empty() ? 0 : 1));
  try {
    app.parse(rev);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (c->parsed()) return cmd_check(check, out);
    if (o->parsed()) {
      if (horizon_opt->count() > 0) oracle.horizon = horizon;
      return cmd_oracle(oracle, out);
    }
    if (g->parsed()) {
      if (degree_opt->count() > 0) gen.out_degree = out_degree;
      return cmd_generate(gen, out);
    }
    if (b->parsed()) return cmd_bench(bench, out);
  } catch (const ParseError& e) {
    err << "formula error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitInput;
  }
  return kExitUsage;
}

}  // namespace pctl_smc::cli
