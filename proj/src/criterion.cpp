#include "cocl/criterion.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <mutex>

#include "cocl/error.hpp"

namespace cocl {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double logaddexp(double x, double y) {
  if (x == kNegInf) return y;
  if (y == kNegInf) return x;
  if (x < y) std::swap(x, y);
  return x + std::log1p(std::exp(y - x));
}

// ln B(a, b) for b = 1..a via the log-space recurrence
// S(n, k) = k S(n-1, k) + S(n-1, k-1), then a cumulative scan.
std::vector<double> stirling_cumulative_row(std::int64_t a) {
  std::vector<double> lnS{0.0};  // n = 1: S(1, 1) = 1
  std::vector<double> next;
  for (std::int64_t n = 2; n <= a; ++n) {
    next.assign(static_cast<size_t>(n), kNegInf);
    for (std::int64_t k = 1; k <= n; ++k) {
      double carry = k <= n - 1 ? std::log(static_cast<double>(k)) + lnS[static_cast<size_t>(k - 1)]
                                : kNegInf;
      double fresh = k >= 2 ? lnS[static_cast<size_t>(k - 2)] : kNegInf;
      if (k == 1) fresh = n == 1 ? 0.0 : kNegInf;
      next[static_cast<size_t>(k - 1)] = logaddexp(carry, fresh);
    }
    lnS.swap(next);
  }
  std::vector<double> row(lnS.size());
  double acc = kNegInf;
  for (size_t i = 0; i < lnS.size(); ++i) {
    acc = logaddexp(acc, lnS[i]);
    row[i] = acc;
  }
  return row;
}

}  // namespace

Combinatorics::Combinatorics(CriterionSettings settings) : settings_(settings) {
  if (settings_.stirling_exact_max_a < 1 || settings_.stirling_exact_ratio <= 0.0) {
    throw ParameterError("invalid Stirling exactness thresholds");
  }
  log_fact_ = {0.0, 0.0};  // 0! and 1!
}

double Combinatorics::log_factorial(std::int64_t n) const {
  if (n < 0) throw ParameterError("log_factorial: negative argument");
  {
    std::shared_lock lock(mutex_);
    if (static_cast<size_t>(n) < log_fact_.size()) return log_fact_[static_cast<size_t>(n)];
  }
  std::unique_lock lock(mutex_);
  return log_factorial_locked(n);
}

double Combinatorics::log_factorial_locked(std::int64_t n) const {
  while (log_fact_.size() <= static_cast<size_t>(n)) {
    log_fact_.push_back(log_fact_.back() + std::log(static_cast<double>(log_fact_.size())));
  }
  return log_fact_[static_cast<size_t>(n)];
}

void Combinatorics::reserve_factorials(std::int64_t n) const {
  if (n < 0) return;
  std::unique_lock lock(mutex_);
  log_factorial_locked(n);
}

double Combinatorics::log_binomial(std::int64_t a, std::int64_t b) const {
  if (b < 0 || b > a) {
    throw ParameterError("log_binomial: need 0 <= b <= a, got a=" + std::to_string(a) +
                         " b=" + std::to_string(b));
  }
  return log_factorial(a) - log_factorial(b) - log_factorial(a - b);
}

double Combinatorics::stirling_exact(std::int64_t a, std::int64_t b) const {
  if (a < 0 || b < 0) throw ParameterError("stirling: negative argument");
  if (a == 0) return 0.0;  // the empty partition
  if (b == 0) throw ParameterError("stirling: nonempty set needs at least one group");
  std::int64_t bc = std::min(a, b);
  {
    std::shared_lock lock(mutex_);
    auto it = stirling_rows_.find(a);
    if (it != stirling_rows_.end()) return it->second[static_cast<size_t>(bc - 1)];
  }
  std::vector<double> row = stirling_cumulative_row(a);
  std::unique_lock lock(mutex_);
  auto [it, inserted] = stirling_rows_.try_emplace(a, std::move(row));
  return it->second[static_cast<size_t>(bc - 1)];
}

double Combinatorics::stirling_approximation(std::int64_t a, std::int64_t b) const {
  if (a < 1 || b < 1) throw ParameterError("stirling: arguments must be positive");
  return static_cast<double>(a) * std::log(static_cast<double>(b)) - log_factorial(b);
}

bool Combinatorics::uses_exact_path(std::int64_t a, std::int64_t b) const {
  std::int64_t bc = std::min(a, b);
  return a <= settings_.stirling_exact_max_a &&
         static_cast<double>(a) <= settings_.stirling_exact_ratio * static_cast<double>(bc);
}

double Combinatorics::log_stirling2_cumulative(std::int64_t a, std::int64_t b) const {
  if (a < 0 || b < 0) throw ParameterError("stirling: negative argument");
  if (a == 0) return 0.0;
  if (b == 0) throw ParameterError("stirling: nonempty set needs at least one group");
  return uses_exact_path(a, b) ? stirling_exact(a, b) : stirling_approximation(a, std::min(a, b));
}

double CriterionValue::term(std::string_view label) const {
  for (const auto& [name, value] : terms) {
    if (name == label) return value;
  }
  throw ParameterError("unknown criterion term '" + std::string(label) + "'");
}

double stable_sum(std::vector<double> addends) {
  std::sort(addends.begin(), addends.end());
  double acc = 0.0;
  for (double x : addends) acc += x;
  return acc;
}

namespace {

void check_stats(const SufficientStats& s) {
  if (s.total_observations <= 0) throw ParameterError("criterion needs at least one observation");
  if (s.instance_count <= 0) throw ParameterError("criterion needs at least one instance");
  if (s.part_count <= 0) throw ParameterError("criterion needs at least one part");
  if (s.instance_clusters <= 0 || s.part_clusters <= 0) {
    throw ParameterError("criterion needs at least one cluster per side");
  }
}

}  // namespace

CriterionValue evaluate_criterion(const SufficientStats& s, const Combinatorics& comb) {
  check_stats(s);
  const std::int64_t n_total = s.total_observations;
  const double ln_n = std::log(static_cast<double>(n_total));
  const std::int64_t cell_count =
      static_cast<std::int64_t>(s.instance_clusters) * s.part_clusters;

  CriterionValue out;
  auto add = [&out](const char* label, double value) { out.terms.emplace_back(label, value); };

  {
    std::vector<double> a;
    for (const auto& cat : s.categorical) {
      a.push_back(std::log(static_cast<double>(cat.value_observations.size())));
    }
    if (s.numeric_modeled > 0) a.push_back(static_cast<double>(s.numeric_modeled) * ln_n);
    add("prior.partition-sizes", stable_sum(std::move(a)));
  }
  {
    std::vector<double> a;
    for (const auto& cat : s.categorical) {
      a.push_back(comb.log_stirling2_cumulative(
          static_cast<std::int64_t>(cat.value_observations.size()),
          static_cast<std::int64_t>(cat.parts.size())));
    }
    add("prior.value-groupings", stable_sum(std::move(a)));
  }
  add("prior.cluster-counts", std::log(static_cast<double>(s.instance_count)) +
                                  std::log(static_cast<double>(s.part_count)));
  add("prior.cluster-partitions",
      comb.log_stirling2_cumulative(s.instance_count, s.instance_clusters) +
          comb.log_stirling2_cumulative(s.part_count, s.part_clusters));
  add("prior.cell-distribution", comb.log_binomial(n_total + cell_count - 1, cell_count - 1));
  {
    std::vector<double> a;
    for (int g = 0; g < s.instance_clusters; ++g) {
      std::int64_t m = s.instance_cluster_sizes[static_cast<size_t>(g)];
      a.push_back(comb.log_binomial(
          s.instance_cluster_observations[static_cast<size_t>(g)] + m - 1, m - 1));
    }
    add("prior.instance-cluster-distributions", stable_sum(std::move(a)));
  }
  {
    std::vector<double> a;
    for (int g = 0; g < s.part_clusters; ++g) {
      std::int64_t m = s.part_cluster_sizes[static_cast<size_t>(g)];
      a.push_back(
          comb.log_binomial(s.part_cluster_observations[static_cast<size_t>(g)] + m - 1, m - 1));
    }
    add("prior.part-cluster-distributions", stable_sum(std::move(a)));
  }
  {
    std::vector<double> a;
    for (const auto& cat : s.categorical) {
      for (const auto& part : cat.parts) {
        a.push_back(comb.log_binomial(part.observations + part.value_count - 1,
                                      part.value_count - 1));
      }
    }
    add("prior.value-distributions", stable_sum(std::move(a)));
  }

  {
    std::vector<double> a{comb.log_factorial(n_total)};
    for (std::int64_t c : s.cells) a.push_back(-comb.log_factorial(c));
    add("likelihood.cells", stable_sum(std::move(a)));
  }
  {
    std::vector<double> a;
    for (std::int64_t g : s.instance_cluster_observations) a.push_back(comb.log_factorial(g));
    for (std::int64_t n : s.instance_observations) a.push_back(-comb.log_factorial(n));
    add("likelihood.instances", stable_sum(std::move(a)));
  }
  {
    std::vector<double> a;
    for (std::int64_t g : s.part_cluster_observations) a.push_back(comb.log_factorial(g));
    for (const auto& cat : s.categorical) {
      for (std::int64_t n : cat.value_observations) a.push_back(-comb.log_factorial(n));
    }
    if (comb.settings().numeric_part_factorials) {
      for (std::int64_t n : s.numeric_part_observations) a.push_back(-comb.log_factorial(n));
    }
    add("likelihood.values", stable_sum(std::move(a)));
  }

  out.prior = 0.0;
  out.likelihood = 0.0;
  for (const auto& [label, value] : out.terms) {
    if (label.rfind("prior.", 0) == 0) {
      out.prior += value;
    } else {
      out.likelihood += value;
    }
  }
  out.total = out.prior + out.likelihood;
  return out;
}

CriterionValue evaluate_criterion(const CoclusterModel& model, const Combinatorics& comb) {
  return evaluate_criterion(model.stats(), comb);
}

double prior_cost(const SufficientStats& stats, const Combinatorics& comb) {
  return evaluate_criterion(stats, comb).prior;
}

double likelihood_cost(const SufficientStats& stats, const Combinatorics& comb) {
  return evaluate_criterion(stats, comb).likelihood;
}

namespace {

// Shared pieces of the delta formulas below.
struct DeltaContext {
  const CoclusterModel& model;
  const Combinatorics& comb;
  std::int64_t n_total;
  int instance_count;
  int part_count;  // J
  int g_u;
  int g_p;

  double lf(std::int64_t n) const { return comb.log_factorial(n); }
  double lb(std::int64_t a, std::int64_t b) const { return comb.log_binomial(a, b); }
  double lS(std::int64_t a, std::int64_t b) const {
    return comb.log_stirling2_cumulative(a, b);
  }
  // ln (x+y)! - ln x! - ln y!
  double psi(std::int64_t x, std::int64_t y) const { return lf(x + y) - lf(x) - lf(y); }
  double cluster_distr(std::int64_t obs, std::int64_t size) const {
    return lb(obs + size - 1, size - 1);
  }
  double cell_prior(std::int64_t cells) const { return lb(n_total + cells - 1, cells - 1); }
};

double delta_merge_instance_clusters(const DeltaContext& c, int a, int b) {
  const CoclusterModel& m = c.model;
  if (a < 0 || b < 0 || a >= c.g_u || b >= c.g_u || a == b) {
    throw StructuralError("invalid instance cluster pair");
  }
  if (c.g_u < 2) throw StructuralError("need two instance clusters to merge");
  double delta = c.lS(c.instance_count, c.g_u - 1) - c.lS(c.instance_count, c.g_u);
  delta += c.cell_prior(static_cast<std::int64_t>(c.g_u - 1) * c.g_p) -
           c.cell_prior(static_cast<std::int64_t>(c.g_u) * c.g_p);
  std::int64_t na = m.instance_cluster_observations(a);
  std::int64_t nb = m.instance_cluster_observations(b);
  std::int64_t ma = m.instance_cluster_size(a);
  std::int64_t mb = m.instance_cluster_size(b);
  delta += c.cluster_distr(na + nb, ma + mb) - c.cluster_distr(na, ma) - c.cluster_distr(nb, mb);
  for (int gp = 0; gp < c.g_p; ++gp) {
    delta -= c.psi(m.cell_observations(a, gp), m.cell_observations(b, gp));
  }
  delta += c.psi(na, nb);
  return delta;
}

double delta_merge_part_clusters(const DeltaContext& c, int a, int b) {
  const CoclusterModel& m = c.model;
  if (a < 0 || b < 0 || a >= c.g_p || b >= c.g_p || a == b) {
    throw StructuralError("invalid part cluster pair");
  }
  if (c.g_p < 2) throw StructuralError("need two part clusters to merge");
  double delta = c.lS(c.part_count, c.g_p - 1) - c.lS(c.part_count, c.g_p);
  delta += c.cell_prior(static_cast<std::int64_t>(c.g_u) * (c.g_p - 1)) -
           c.cell_prior(static_cast<std::int64_t>(c.g_u) * c.g_p);
  std::int64_t na = m.part_cluster_observations(a);
  std::int64_t nb = m.part_cluster_observations(b);
  std::int64_t ma = m.part_cluster_size(a);
  std::int64_t mb = m.part_cluster_size(b);
  delta += c.cluster_distr(na + nb, ma + mb) - c.cluster_distr(na, ma) - c.cluster_distr(nb, mb);
  for (int gu = 0; gu < c.g_u; ++gu) {
    delta -= c.psi(m.cell_observations(gu, a), m.cell_observations(gu, b));
  }
  delta += c.psi(na, nb);
  return delta;
}

// Mass `moved` leaves part cluster `from` for part cluster `to`, with the
// per-instance-cluster split `moved_by_gu`. Covers likelihood.cells,
// likelihood.values and prior.part-cluster-distributions; `from_loses_part`
// and `to_gains_part` adjust the cluster sizes.
double delta_part_mass_transfer(const DeltaContext& c, int from, int to, std::int64_t moved,
                                const std::vector<std::int64_t>& moved_by_gu,
                                int from_loses_part, int to_gains_part) {
  const CoclusterModel& m = c.model;
  double delta = 0.0;
  std::int64_t n_from = m.part_cluster_observations(from);
  std::int64_t m_from = m.part_cluster_size(from);
  if (from == to) {
    // Only the size bookkeeping changes.
    std::int64_t m_new = m_from - from_loses_part + to_gains_part;
    if (m_new != m_from) {
      delta += c.cluster_distr(n_from, m_new) - c.cluster_distr(n_from, m_from);
    }
    return delta;
  }
  std::int64_t n_to = m.part_cluster_observations(to);
  std::int64_t m_to = m.part_cluster_size(to);
  std::int64_t m_from_new = m_from - from_loses_part;
  // prior.part-cluster-distributions
  delta += c.cluster_distr(n_to + moved, m_to + to_gains_part) - c.cluster_distr(n_to, m_to);
  if (m_from_new > 0) {
    delta += c.cluster_distr(n_from - moved, m_from_new);
  }
  delta -= c.cluster_distr(n_from, m_from);
  // likelihood.cells
  for (int gu = 0; gu < c.g_u; ++gu) {
    std::int64_t u = moved_by_gu[static_cast<size_t>(gu)];
    if (u == 0) continue;
    std::int64_t x = m.cell_observations(gu, to);
    std::int64_t y = m.cell_observations(gu, from);
    delta -= c.lf(x + u) + c.lf(y - u) - c.lf(x) - c.lf(y);
  }
  // likelihood.values
  delta += c.lf(n_to + moved) - c.lf(n_to) + c.lf(n_from - moved) - c.lf(n_from);
  return delta;
}

// Terms driven by J and G_p when a part disappears: prior.cluster-counts,
// prior.cluster-partitions, prior.cell-distribution.
double delta_part_removed(const DeltaContext& c, bool cluster_drops) {
  double delta = std::log(static_cast<double>(c.part_count - 1)) -
                 std::log(static_cast<double>(c.part_count));
  int g_p_new = c.g_p - (cluster_drops ? 1 : 0);
  delta += c.lS(c.part_count - 1, g_p_new) - c.lS(c.part_count, c.g_p);
  if (cluster_drops) {
    delta += c.cell_prior(static_cast<std::int64_t>(c.g_u) * g_p_new) -
             c.cell_prior(static_cast<std::int64_t>(c.g_u) * c.g_p);
  }
  return delta;
}

double delta_merge_parts(const DeltaContext& c, int variable, int j, int j2) {
  const CoclusterModel& m = c.model;
  const PartitionSet& ps = m.partitions();
  if (variable < 0 || variable >= ps.dataset().schema().size() ||
      ps.part_count(variable) == 0) {
    throw StructuralError("variable has no parts");
  }
  const int local_count = ps.part_count(variable);
  if (j < 0 || j2 <= j || j2 >= local_count) throw StructuralError("invalid part pair");
  const bool numeric = ps.variable(variable).intervals.has_value();
  if (numeric && j2 != j + 1) throw StructuralError("numeric parts must be adjacent to merge");

  const int pa = ps.part_offset(variable) + j;
  const int pb = ps.part_offset(variable) + j2;
  const int ca = m.part_cluster_of(pa);
  const int cb = m.part_cluster_of(pb);
  const std::int64_t na = ps.part_observations(pa);
  const std::int64_t nb = ps.part_observations(pb);
  const bool cluster_drops = ca != cb && m.part_cluster_size(cb) == 1;

  double delta = delta_part_removed(c, cluster_drops);
  if (!numeric) {
    const auto& grouping = *ps.variable(variable).groups;
    std::int64_t v_k = grouping.value_count();
    delta += c.lS(v_k, local_count - 1) - c.lS(v_k, local_count);
    // prior.value-distributions: the two group addends fuse.
    std::int64_t mj = grouping.group_value_count(j);
    std::int64_t mj2 = grouping.group_value_count(j2);
    delta += c.lb(na + nb + mj + mj2 - 1, mj + mj2 - 1) - c.lb(na + mj - 1, mj - 1) -
             c.lb(nb + mj2 - 1, mj2 - 1);
  } else if (c.comb.settings().numeric_part_factorials) {
    delta -= c.psi(na, nb);
  }

  std::vector<std::int64_t> moved(static_cast<size_t>(c.g_u));
  for (int gu = 0; gu < c.g_u; ++gu) {
    moved[static_cast<size_t>(gu)] = m.cluster_part_observations(gu, pb);
  }
  delta += delta_part_mass_transfer(c, cb, ca, nb, moved, /*from_loses_part=*/1,
                                    /*to_gains_part=*/0);
  return delta;
}

double delta_move_part(const DeltaContext& c, int part, int to_cluster) {
  const CoclusterModel& m = c.model;
  if (part < 0 || part >= c.part_count) throw StructuralError("part id out of range");
  if (to_cluster < 0 || to_cluster >= c.g_p) throw StructuralError("target cluster out of range");
  const int from = m.part_cluster_of(part);
  if (from == to_cluster) throw StructuralError("part already in the target cluster");
  const std::int64_t np = m.partitions().part_observations(part);
  const bool cluster_drops = m.part_cluster_size(from) == 1;

  double delta = 0.0;
  if (cluster_drops) {
    delta += c.lS(c.part_count, c.g_p - 1) - c.lS(c.part_count, c.g_p);
    delta += c.cell_prior(static_cast<std::int64_t>(c.g_u) * (c.g_p - 1)) -
             c.cell_prior(static_cast<std::int64_t>(c.g_u) * c.g_p);
  }
  std::vector<std::int64_t> moved(static_cast<size_t>(c.g_u));
  for (int gu = 0; gu < c.g_u; ++gu) {
    moved[static_cast<size_t>(gu)] = m.cluster_part_observations(gu, part);
  }
  delta += delta_part_mass_transfer(c, from, to_cluster, np, moved, /*from_loses_part=*/1,
                                    /*to_gains_part=*/1);
  return delta;
}

double delta_move_value(const DeltaContext& c, int variable, int value, int to_group) {
  const CoclusterModel& m = c.model;
  const PartitionSet& ps = m.partitions();
  if (variable < 0 || variable >= ps.dataset().schema().size() ||
      !ps.variable(variable).groups) {
    throw StructuralError("value moves need a categorical variable");
  }
  const auto& grouping = *ps.variable(variable).groups;
  if (value < 0 || value >= grouping.value_count()) throw StructuralError("value id out of range");
  if (to_group < 0 || to_group >= grouping.group_count()) {
    throw StructuralError("target group out of range");
  }
  const int from_group = grouping.group_of(value);
  if (from_group == to_group) throw StructuralError("value already in the target group");

  const int p0 = ps.part_offset(variable) + from_group;
  const int pt = ps.part_offset(variable) + to_group;
  const int c0 = m.part_cluster_of(p0);
  const int ct = m.part_cluster_of(pt);
  const std::int64_t nv = ps.dataset().value_observations(variable, value);
  const std::int64_t n0 = ps.part_observations(p0);
  const std::int64_t nt = ps.part_observations(pt);
  const std::int64_t m0 = grouping.group_value_count(from_group);
  const std::int64_t mt = grouping.group_value_count(to_group);
  const bool group_drops = m0 == 1;
  const bool cluster_drops = group_drops && c0 != ct && m.part_cluster_size(c0) == 1;

  double delta = 0.0;
  // prior.value-distributions: the source group addend shrinks or vanishes,
  // the target group addend grows.
  delta += c.lb(nt + nv + mt, mt) - c.lb(nt + mt - 1, mt - 1);
  if (!group_drops) {
    delta += c.lb(n0 - nv + m0 - 2, m0 - 2) - c.lb(n0 + m0 - 1, m0 - 1);
  }
  if (group_drops) {
    delta += delta_part_removed(c, cluster_drops);
    std::int64_t v_k = grouping.value_count();
    delta += c.lS(v_k, grouping.group_count() - 1) - c.lS(v_k, grouping.group_count());
  }

  std::vector<std::int64_t> moved(static_cast<size_t>(c.g_u));
  for (int gu = 0; gu < c.g_u; ++gu) {
    moved[static_cast<size_t>(gu)] = m.cluster_value_observations(gu, variable, value);
  }
  delta += delta_part_mass_transfer(c, c0, ct, nv, moved,
                                    /*from_loses_part=*/group_drops ? 1 : 0,
                                    /*to_gains_part=*/0);
  return delta;
}

}  // namespace

double delta_criterion(const CoclusterModel& model, const Move& move, const Combinatorics& comb) {
  DeltaContext c{model,
                 comb,
                 model.dataset().observation_count(),
                 model.dataset().instance_count(),
                 model.partitions().total_parts(),
                 model.instance_clusters(),
                 model.part_clusters()};
  switch (move.kind) {
    case Move::Kind::MergeInstanceClusters:
      return delta_merge_instance_clusters(c, move.a, move.b);
    case Move::Kind::MergePartClusters:
      return delta_merge_part_clusters(c, move.a, move.b);
    case Move::Kind::MergeParts:
      return delta_merge_parts(c, move.variable, move.a, move.b);
    case Move::Kind::MovePart:
      return delta_move_part(c, move.a, move.b);
    case Move::Kind::MoveValue:
      return delta_move_value(c, move.variable, move.a, move.b);
  }
  throw ParameterError("unknown move kind");
}

}  // namespace cocl
