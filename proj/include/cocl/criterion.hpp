#pragma once

#include <cstdint>
#include <map>
#include <shared_mutex>
#include <string>
#include <utility>
#include <vector>

#include "cocl/model.hpp"

namespace cocl {

struct CriterionSettings {
  // log_stirling2_cumulative(A, B) is computed exactly when A <= exact_max_a
  // and A <= exact_ratio * B, and by the A >> B asymptote A*ln(B) - ln(B!)
  // otherwise.
  std::int64_t stirling_exact_max_a = 10000;
  double stirling_exact_ratio = 10.0;
  // The cost of numeric observations inside a part is treated as rank
  // information, not a multinomial draw, so no per-part factorial term is
  // charged for numeric parts by default.
  bool numeric_part_factorials = false;
};

// Cached log-combinatorics. Concurrent readers are safe; the factorial
// table only grows under a lock, and Stirling rows are memoized per A.
class Combinatorics {
 public:
  explicit Combinatorics(CriterionSettings settings = {});

  const CriterionSettings& settings() const { return settings_; }

  double log_factorial(std::int64_t n) const;              // ln n!
  double log_binomial(std::int64_t a, std::int64_t b) const;  // ln C(a, b)

  // ln B(A, B) with B(A, B) = sum_{b=1..B} S(A, b): partitions of A labeled
  // items into at most B unlabeled, nonempty groups.
  double log_stirling2_cumulative(std::int64_t a, std::int64_t b) const;

  // Test hooks exposing the two evaluation paths.
  double stirling_exact(std::int64_t a, std::int64_t b) const;
  double stirling_approximation(std::int64_t a, std::int64_t b) const;
  bool uses_exact_path(std::int64_t a, std::int64_t b) const;

  // Pre-grows the factorial table so later reads never take the write lock
  // (call before parallel sections).
  void reserve_factorials(std::int64_t n) const;

 private:
  double log_factorial_locked(std::int64_t n) const;

  CriterionSettings settings_;
  mutable std::shared_mutex mutex_;
  mutable std::vector<double> log_fact_;  // log_fact_[n] = ln n!
  // Cumulative log rows: stirling_rows_[a][b-1] = ln B(a, b), b = 1..a.
  mutable std::map<std::int64_t, std::vector<double>> stirling_rows_;
};

// Criterion in nats with a per-term breakdown under stable labels.
struct CriterionValue {
  double total = 0.0;
  double prior = 0.0;
  double likelihood = 0.0;
  std::vector<std::pair<std::string, double>> terms;

  double term(std::string_view label) const;  // ParameterError when absent
};

// Sorts by value before accumulating so totals are invariant under cluster
// and part relabeling.
double stable_sum(std::vector<double> addends);

double prior_cost(const SufficientStats& stats, const Combinatorics& comb);
double likelihood_cost(const SufficientStats& stats, const Combinatorics& comb);

CriterionValue evaluate_criterion(const SufficientStats& stats, const Combinatorics& comb);
CriterionValue evaluate_criterion(const CoclusterModel& model, const Combinatorics& comb);

// Criterion change if `move` were applied, touching only the affected
// terms. Matches full re-evaluation to float round-off.
double delta_criterion(const CoclusterModel& model, const Move& move,
                       const Combinatorics& comb);

}  // namespace cocl
