#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <iomanip>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "pctl_smc/engine.hpp"

namespace pctl_smc {

/// One check run as it appears in JSON-lines and CSV reports.
struct RunReport {
  std::string model;
  std::string formula;
  Decision verdict = Decision::Inconclusive;
  std::uint64_t iterations = 0;
  std::uint64_t samples = 0;
  double time = 0.0;  // seconds, wall clock
  std::uint32_t h1 = 0;
  std::uint32_t h2 = 0;
  std::optional<double> oracle;
  double delta = 0.0;
  std::uint64_t seed = 0;

  static RunReport of(std::string model, const Formula& f, const Verdict& v, std::uint64_t seed,
                      std::optional<double> oracle) {
    RunReport r;
    r.model = std::move(model);
    r.formula = to_string(f, true);
    r.verdict = v.decision;
    r.iterations = v.iterations;
    r.samples = v.samples;
    r.time = std::round(v.seconds * 1000.0) / 1000.0;
    r.h1 = v.h1;
    r.h2 = v.h2;
    r.oracle = oracle;
    r.delta = v.delta;
    r.seed = seed;
    return r;
  }
};

inline constexpr const char* kReportColumns = "model,formula,verdict,iterations,samples,time,h1,h2,oracle,delta,seed";

inline Decision parse_decision(const std::string& s) {
  if (s == "True") return Decision::True;
  if (s == "False") return Decision::False;
  if (s == "Inconclusive") return Decision::Inconclusive;
  throw Error("unknown verdict '" + s + "'");
}

inline nlohmann::ordered_json to_json(const RunReport& r) {
  nlohmann::ordered_json j;
  j["model"] = r.model;
  j["formula"] = r.formula;
  j["verdict"] = to_string(r.verdict);
  j["iterations"] = r.iterations;
  j["samples"] = r.samples;
  j["time"] = r.time;
  j["h1"] = r.h1;
  j["h2"] = r.h2;
  j["oracle"] = r.oracle ? nlohmann::ordered_json(*r.oracle) : nlohmann::ordered_json(nullptr);
  j["delta"] = r.delta;
  j["seed"] = r.seed;
  return j;
}

inline RunReport report_from_json(const nlohmann::json& j) {
  RunReport r;
  r.model = j.at("model").get<std::string>();
  r.formula = j.at("formula").get<std::string>();
  r.verdict = parse_decision(j.at("verdict").get<std::string>());
  r.iterations = j.at("iterations").get<std::uint64_t>();
  r.samples = j.at("samples").get<std::uint64_t>();
  r.time = j.at("time").get<double>();
  r.h1 = j.at("h1").get<std::uint32_t>();
  r.h2 = j.at("h2").get<std::uint32_t>();
  if (!j.at("oracle").is_null()) r.oracle = j.at("oracle").get<double>();
  r.delta = j.at("delta").get<double>();
  r.seed = j.at("seed").get<std::uint64_t>();
  return r;
}

inline std::string to_csv(const RunReport& r) {
  std::ostringstream out;
  const auto quote = [](const std::string& s) {
    std::string q = "\"";
    for (const char c : s) q += c == '"' ? std::string("\"\"") : std::string(1, c);
    return q + "\"";
  };
  out << quote(r.model) << ',' << quote(r.formula) << ',' << to_string(r.verdict) << ',' << r.iterations << ','
      << r.samples << ',' << std::fixed << std::setprecision(3) << r.time << std::defaultfloat << ',' << r.h1 << ','
      << r.h2 << ',' << (r.oracle ? detail::format_number(*r.oracle) : std::string()) << ','
      << detail::format_number(r.delta) << ',' << r.seed;
  return out.str();
}

/// Means over a batch of runs; Inconclusive runs are excluded from `correct`.
struct Aggregate {
  std::size_t runs = 0;
  std::size_t decided_true = 0, decided_false = 0, inconclusive = 0;
  std::size_t correct = 0, incorrect = 0;
  double mean_iterations = 0.0, mean_samples = 0.0, mean_time = 0.0, mean_h1 = 0.0, mean_h2 = 0.0;
};

/// `expected` is the ground-truth verdict when known.
inline Aggregate aggregate(const std::vector<RunReport>& rows, std::optional<Decision> expected = std::nullopt) {
  Aggregate a;
  a.runs = rows.size();
  for (const auto& r : rows) {
    a.decided_true += r.verdict == Decision::True;
    a.decided_false += r.verdict == Decision::False;
    a.inconclusive += r.verdict == Decision::Inconclusive;
    if (expected && r.verdict != Decision::Inconclusive) {
      (r.verdict == *expected ? a.correct : a.incorrect) += 1;
    }
    a.mean_iterations += static_cast<double>(r.iterations);
    a.mean_samples += static_cast<double>(r.samples);
    a.mean_time += r.time;
    a.mean_h1 += r.h1;
    a.mean_h2 += r.h2;
  }
  if (a.runs > 0) {
    const auto n = static_cast<double>(a.runs);
    a.mean_iterations /= n;
    a.mean_samples /= n;
    a.mean_time /= n;
    a.mean_h1 /= n;
    a.mean_h2 /= n;
  }
  return a;
}

inline nlohmann::ordered_json to_json(const Aggregate& a) {
  nlohmann::ordered_json j;
  j["runs"] = a.runs;
  j["true"] = a.decided_true;
  j["false"] = a.decided_false;
  j["inconclusive"] = a.inconclusive;
  j["mean_iterations"] = a.mean_iterations;
  j["mean_samples"] = a.mean_samples;
  j["mean_time"] = a.mean_time;
  j["mean_h1"] = a.mean_h1;
  j["mean_h2"] = a.mean_h2;
  return j;
}

/// Worker count: PCTL_SMC_THREADS when set and positive, else the hardware's.
inline unsigned thread_budget() {
  if (const char* env = std::getenv("PCTL_SMC_THREADS")) {
    const long n = std::strtol(env, nullptr, 10);
    if (n > 0) return static_cast<unsigned>(n);
  }
  return std::max(1U, std::thread::hardware_concurrency());
}

/// Runs job(i) for i in [0, n) on up to `threads` workers; results keep index order.
template <class Job>
auto parallel_map(std::size_t n, unsigned threads, Job job) {
  using Result = decltype(job(std::size_t{0}));
  std::vector<std::optional<Result>> slots(n);
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(n);
  const auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        slots[i] = job(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const auto count = std::min<std::size_t>(std::max(1U, threads), n);
  std::vector<std::thread> pool;
  for (std::size_t w = 1; w < count; ++w) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  std::vector<Result> out;
  out.reserve(n);
  for (auto& s : slots) out.push_back(std::move(*s));
  return out;
}

}  // namespace pctl_smc
