#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <utility>
#include <vector>

#include "pctl_smc/mdp.hpp"

namespace pctl_smc {

/**
 * Exact sample tallies N(s,a,s') and N(s,a), keyed by the flat choice index
 * of a Topology. Probabilities are derived on demand; nothing is accumulated
 * in floating point.
 */
class Counts {
 public:
  using Row = std::vector<std::pair<StateId, std::uint64_t>>;

  Counts() = default;
  explicit Counts(std::size_t num_pairs) : rows_(num_pairs), visits_(num_pairs, 0) {}

  void record(std::size_t pair, StateId next) {
    auto& row = rows_[pair];
    auto it = std::lower_bound(row.begin(), row.end(), next,
                               [](const auto& e, StateId s) { return e.first < s; });
    if (it != row.end() && it->first == next) {
      ++it->second;
    } else {
      row.insert(it, {next, 1});
    }
    ++visits_[pair];
    ++total_;
  }

  /// N(s,a).
  [[nodiscard]] std::uint64_t visits(std::size_t pair) const { return visits_[pair]; }

  /// N(s,a,s').
  [[nodiscard]] std::uint64_t count(std::size_t pair, StateId next) const {
    const auto& row = rows_[pair];
    const auto it = std::lower_bound(row.begin(), row.end(), next,
                                     [](const auto& e, StateId s) { return e.first < s; });
    return it != row.end() && it->first == next ? it->second : 0;
  }

  /// Observed successors of a pair with their tallies, ascending by state.
  [[nodiscard]] const Row& row(std::size_t pair) const { return rows_[pair]; }
  [[nodiscard]] std::size_t num_pairs() const { return rows_.size(); }
  [[nodiscard]] std::uint64_t total() const { return total_; }

 private:
  std::vector<Row> rows_;
  std::vector<std::uint64_t> visits_;
  std::uint64_t total_ = 0;
};

/// Empirical transition function over Counts: N(s,a,s')/N(s,a), or 1/|S|
/// for a pair that was never sampled.
class EmpiricalModel {
 public:
  EmpiricalModel(const Counts& counts, std::size_t num_states) : counts_(&counts), num_states_(num_states) {}

  [[nodiscard]] double probability(std::size_t pair, StateId next) const {
    const auto n = counts_->visits(pair);
    if (n == 0) return 1.0 / static_cast<double>(num_states_);
    return static_cast<double>(counts_->count(pair, next)) / static_cast<double>(n);
  }

  [[nodiscard]] std::uint64_t visits(std::size_t pair) const { return counts_->visits(pair); }

  /// Calls fn(successor, probability) over the support of the estimate.
  template <class Fn>
  void for_each(std::size_t pair, Fn&& fn) const {
    const auto n = counts_->visits(pair);
    if (n == 0) {
      const double u = 1.0 / static_cast<double>(num_states_);
      for (StateId s = 0; s < num_states_; ++s) fn(s, u);
      return;
    }
    const auto total = static_cast<double>(n);
    for (const auto& [s, c] : counts_->row(pair)) fn(s, static_cast<double>(c) / total);
  }

 private:
  const Counts* counts_;
  std::size_t num_states_;
};

inline double empirical_prob(const Counts& c, std::size_t num_states, std::size_t pair, StateId next) {
  return EmpiricalModel(c, num_states).probability(pair, next);
}

/// Half-width from a natural-log confidence level: sqrt(|ln(delta/2)| / 2n).
inline double hoeffding_radius_log(std::uint64_t n, double log_delta) {
  if (n == 0) return std::numeric_limits<double>::infinity();
  return std::sqrt(std::abs(log_delta - std::log(2.0)) / (2.0 * static_cast<double>(n)));
}

/// Hoeffding half-width for a [0,1] mean after n samples at level delta.
inline double hoeffding_radius(std::uint64_t n, double delta) {
  if (!(delta > 0.0 && delta < 1.0)) throw Error("hoeffding_radius: delta must lie in (0,1)");
  return hoeffding_radius_log(n, std::log(delta));
}

/// Which concentration inequality sizes the intervals. Only Hoeffding gives
/// a hard (non-asymptotic) error guarantee; Bernstein is reserved.
enum class ConfidenceBound { Hoeffding, Bernstein };

/**
 * Splits the total error budget over steps, pairs and states.
 *
 * EqualFinite:       delta_h = total / (N |A| T)              for h in [1, T]
 * GeometricInfinite: delta_h = (1-lambda) lambda^(h-1) total / (N |A|)
 *
 * N counts the open (non-trivial) states, |A| the largest action set. The
 * geometric split keeps N |A| sum_h delta_h below `total` for every stopping
 * horizon. Levels are kept in log space so deep horizons do not underflow.
 */
class DeltaSchedule {
 public:
  enum class Mode { EqualFinite, GeometricInfinite };

  static DeltaSchedule equal_finite(double total, std::uint32_t horizon, std::size_t open_states,
                                    std::size_t actions) {
    check_total(total);
    if (horizon == 0) throw Error("delta schedule: horizon must be positive");
    DeltaSchedule d;
    d.mode_ = Mode::EqualFinite;
    d.total_ = total;
    d.horizon_ = horizon;
    d.scale_ = static_cast<double>(std::max<std::size_t>(open_states, 1) * std::max<std::size_t>(actions, 1));
    return d;
  }

  static DeltaSchedule geometric(double total, double lambda, std::size_t open_states, std::size_t actions) {
    check_total(total);
    if (!(lambda > 0.0 && lambda < 1.0)) throw Error("delta schedule: lambda must lie in (0,1)");
    DeltaSchedule d;
    d.mode_ = Mode::GeometricInfinite;
    d.total_ = total;
    d.lambda_ = lambda;
    d.scale_ = static_cast<double>(std::max<std::size_t>(open_states, 1) * std::max<std::size_t>(actions, 1));
    return d;
  }

  [[nodiscard]] Mode mode() const { return mode_; }
  [[nodiscard]] double total() const { return total_; }
  [[nodiscard]] double lambda() const { return lambda_; }

  /// ln(delta_h), h >= 1.
  [[nodiscard]] double log_at(std::uint32_t h) const {
    if (mode_ == Mode::EqualFinite) return std::log(total_ / (scale_ * horizon_));
    return std::log1p(-lambda_) + static_cast<double>(h - 1) * std::log(lambda_) + std::log(total_ / scale_);
  }

  [[nodiscard]] double at(std::uint32_t h) const { return std::exp(log_at(h)); }

  /// N |A| sum_{h <= H} delta_h: the failure probability bound for a run that stops at H.
  [[nodiscard]] double consumed(std::uint32_t horizon) const {
    if (mode_ == Mode::EqualFinite) return total_ * std::min(horizon, horizon_) / horizon_;
    return total_ * (1.0 - std::pow(lambda_, horizon));
  }

 private:
  static void check_total(double total) {
    if (!(total > 0.0 && total < 1.0)) throw Error("delta must lie in (0,1)");
  }

  Mode mode_ = Mode::EqualFinite;
  double total_ = 0.05;
  double lambda_ = 0.9;
  double scale_ = 1.0;
  std::uint32_t horizon_ = 1;
};

}  // namespace pctl_smc
