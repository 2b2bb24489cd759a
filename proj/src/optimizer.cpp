#include "cocl/optimizer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>
#include <thread>
#include <unordered_map>

#include "cocl/error.hpp"

namespace cocl {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Lock-free ln n! lookups for the scoring inner loops.
class FactorialTable {
 public:
  FactorialTable(const Combinatorics& comb, std::int64_t max_n)
      : table_(static_cast<size_t>(max_n) + 1) {
    comb.reserve_factorials(max_n);
    for (std::int64_t n = 0; n <= max_n; ++n) {
      table_[static_cast<size_t>(n)] = comb.log_factorial(n);
    }
  }
  double operator()(std::int64_t n) const { return table_[static_cast<size_t>(n)]; }
  // ln (x+y)! - ln x! - ln y!
  double psi(std::int64_t x, std::int64_t y) const {
    return table_[static_cast<size_t>(x + y)] - table_[static_cast<size_t>(x)] -
           table_[static_cast<size_t>(y)];
  }
  // ln C(obs + size - 1, size - 1)
  double distr(std::int64_t obs, std::int64_t size) const {
    return table_[static_cast<size_t>(obs + size - 1)] - table_[static_cast<size_t>(size - 1)] -
           table_[static_cast<size_t>(obs)];
  }

 private:
  std::vector<double> table_;
};

std::uint64_t pair_key(int g, int h) {
  if (g > h) std::swap(g, h);
  return (static_cast<std::uint64_t>(g) << 32) | static_cast<std::uint32_t>(h);
}

// One side (instance clusters or part clusters) of the agglomeration. Ids
// are stable: a merge keeps the smaller id alive and never renumbers, so
// cached pair scores stay addressable.
struct SideState {
  std::vector<int> alive;  // ascending
  std::vector<std::int64_t> obs;
  std::vector<std::int64_t> size;
  int n0 = 0;
  bool pruned = false;
  std::vector<double> score;                        // exact backend, n0*n0, g<h slots
  std::unordered_map<std::uint64_t, double> pscore; // pruned backend
  std::vector<std::set<int>> partners;              // pruned backend

  void drop(int id) { alive.erase(std::lower_bound(alive.begin(), alive.end(), id)); }
};

struct BestPair {
  double delta = kInf;  // pair score plus the side-wide shift
  int g = -1;
  int h = -1;
  bool valid = false;
};

class Agglomerator {
 public:
  Agglomerator(const CoclusterModel& start, const Combinatorics& comb,
               const OptimizerConfig& config)
      : start_(start),
        comb_(comb),
        config_(config),
        n_total_(start.dataset().observation_count()),
        instance_count_(start.dataset().instance_count()),
        part_count_(start.partitions().total_parts()),
        lf_(comb, n_total_ + std::max(instance_count_, part_count_) + 1) {
    u_.n0 = start.instance_clusters();
    p_.n0 = start.part_clusters();
    cells_.resize(static_cast<size_t>(u_.n0) * p_.n0);
    for (int gu = 0; gu < u_.n0; ++gu) {
      for (int gp = 0; gp < p_.n0; ++gp) {
        cells_[static_cast<size_t>(gu) * p_.n0 + gp] = start.cell_observations(gu, gp);
      }
    }
    init_side_state(u_, /*instance_side=*/true);
    init_side_state(p_, /*instance_side=*/false);
    init_side_scores(u_, /*instance_side=*/true);
    init_side_scores(p_, /*instance_side=*/false);
    root_u_.resize(static_cast<size_t>(u_.n0));
    root_p_.resize(static_cast<size_t>(p_.n0));
    std::iota(root_u_.begin(), root_u_.end(), 0);
    std::iota(root_p_.begin(), root_p_.end(), 0);
  }

  CoclusterModel run(double start_criterion, std::vector<TraceEntry>* trace,
                     std::int64_t* merges) {
    double cumulative = start_criterion;
    double best = start_criterion;
    std::vector<int> best_root_u = root_u_;
    std::vector<int> best_root_p = root_p_;
    std::int64_t applied = 0;

    while (u_.alive.size() > 1 || p_.alive.size() > 1) {
      BestPair bu = best_pair(u_);
      BestPair bp = best_pair(p_);
      if (bu.valid) bu.delta += side_shift(/*instance_side=*/true);
      if (bp.valid) bp.delta += side_shift(/*instance_side=*/false);
      const bool take_u = bu.valid && (!bp.valid || bu.delta <= bp.delta);
      const BestPair& chosen = take_u ? bu : bp;
      cumulative += chosen.delta;
      merge(take_u, chosen.g, chosen.h);
      ++applied;
      if (cumulative < best - config_.min_improvement) {
        best = cumulative;
        best_root_u = root_u_;
        best_root_p = root_p_;
        if (trace) {
          trace->push_back({static_cast<int>(trace->size()),
                            std::string(take_u ? "merge instance clusters " : "merge part clusters ") +
                                std::to_string(chosen.g) + "+" + std::to_string(chosen.h),
                            cumulative});
        }
      }
    }
    if (merges) *merges = applied;

    // Rebuild the arg-min state with dense cluster ids.
    std::vector<int> iassign(static_cast<size_t>(instance_count_));
    std::vector<int> passign(static_cast<size_t>(part_count_));
    std::vector<int> dense_u = densify(best_root_u);
    std::vector<int> dense_p = densify(best_root_p);
    for (int i = 0; i < instance_count_; ++i) {
      iassign[static_cast<size_t>(i)] =
          dense_u[static_cast<size_t>(best_root_u[static_cast<size_t>(start_.instance_cluster_of(i))])];
    }
    for (int j = 0; j < part_count_; ++j) {
      passign[static_cast<size_t>(j)] =
          dense_p[static_cast<size_t>(best_root_p[static_cast<size_t>(start_.part_cluster_of(j))])];
    }
    return CoclusterModel::build(start_.partitions(), std::move(iassign), std::move(passign));
  }

 private:
  std::int64_t cell(int su, int sp) const {
    return cells_[static_cast<size_t>(su) * p_.n0 + sp];
  }

  static std::vector<int> densify(const std::vector<int>& roots) {
    std::vector<int> sorted(roots);
    std::sort(sorted.begin(), sorted.end());
    sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
    std::vector<int> dense(roots.empty() ? 0 : *std::max_element(roots.begin(), roots.end()) + 1,
                           -1);
    for (size_t d = 0; d < sorted.size(); ++d) dense[static_cast<size_t>(sorted[d])] = static_cast<int>(d);
    return dense;
  }

  // Criterion change of merging g and h on one side, excluding the terms
  // that depend only on the cluster count (covered by side_shift).
  double pair_score(bool instance_side, int g, int h) const {
    const SideState& s = instance_side ? u_ : p_;
    const SideState& other = instance_side ? p_ : u_;
    double score = lf_.distr(s.obs[static_cast<size_t>(g)] + s.obs[static_cast<size_t>(h)],
                             s.size[static_cast<size_t>(g)] + s.size[static_cast<size_t>(h)]) -
                   lf_.distr(s.obs[static_cast<size_t>(g)], s.size[static_cast<size_t>(g)]) -
                   lf_.distr(s.obs[static_cast<size_t>(h)], s.size[static_cast<size_t>(h)]);
    score += lf_.psi(s.obs[static_cast<size_t>(g)], s.obs[static_cast<size_t>(h)]);
    if (instance_side) {
      for (int x : other.alive) score -= lf_.psi(cell(g, x), cell(h, x));
    } else {
      for (int x : other.alive) score -= lf_.psi(cell(x, g), cell(x, h));
    }
    return score;
  }

  // Terms driven purely by the number of clusters on one side.
  double side_shift(bool instance_side) const {
    const std::int64_t g_u = static_cast<std::int64_t>(u_.alive.size());
    const std::int64_t g_p = static_cast<std::int64_t>(p_.alive.size());
    double shift;
    if (instance_side) {
      shift = comb_.log_stirling2_cumulative(instance_count_, g_u - 1) -
              comb_.log_stirling2_cumulative(instance_count_, g_u);
    } else {
      shift = comb_.log_stirling2_cumulative(part_count_, g_p - 1) -
              comb_.log_stirling2_cumulative(part_count_, g_p);
    }
    const std::int64_t cells_now = g_u * g_p;
    const std::int64_t cells_next = instance_side ? (g_u - 1) * g_p : g_u * (g_p - 1);
    shift += comb_.log_binomial(n_total_ + cells_next - 1, cells_next - 1) -
             comb_.log_binomial(n_total_ + cells_now - 1, cells_now - 1);
    return shift;
  }

  void init_side_state(SideState& s, bool instance_side) {
    const int n = s.n0;
    s.alive.resize(static_cast<size_t>(n));
    std::iota(s.alive.begin(), s.alive.end(), 0);
    s.obs.resize(static_cast<size_t>(n));
    s.size.resize(static_cast<size_t>(n));
    for (int g = 0; g < n; ++g) {
      s.obs[static_cast<size_t>(g)] = instance_side ? start_.instance_cluster_observations(g)
                                                    : start_.part_cluster_observations(g);
      s.size[static_cast<size_t>(g)] =
          instance_side ? start_.instance_cluster_size(g) : start_.part_cluster_size(g);
    }
    s.pruned = n > config_.agglomeration_exact_threshold;
  }

  void init_side_scores(SideState& s, bool instance_side) {
    const int n = s.n0;
    if (!s.pruned) {
      s.score.assign(static_cast<size_t>(n) * n, kInf);
      for (int g = 0; g < n; ++g) {
        for (int h = g + 1; h < n; ++h) {
          s.score[static_cast<size_t>(g) * n + h] = pair_score(instance_side, g, h);
        }
      }
      return;
    }
    // Pruned backend: nearest neighbours by cosine similarity of the cell
    // profiles seed the candidate pairs.
    s.partners.assign(static_cast<size_t>(n), {});
    const int other_n = instance_side ? p_.n0 : u_.n0;
    std::vector<double> norm(static_cast<size_t>(n), 0.0);
    auto at = [&](int g, int x) { return instance_side ? cell(g, x) : cell(x, g); };
    for (int g = 0; g < n; ++g) {
      double acc = 0.0;
      for (int x = 0; x < other_n; ++x) {
        acc += static_cast<double>(at(g, x)) * static_cast<double>(at(g, x));
      }
      norm[static_cast<size_t>(g)] = std::sqrt(acc);
    }
    const int k = std::max(1, config_.agglomeration_neighbors);
    std::vector<std::pair<double, int>> sims;
    for (int g = 0; g < n; ++g) {
      sims.clear();
      for (int h = 0; h < n; ++h) {
        if (h == g) continue;
        double dot = 0.0;
        for (int x = 0; x < other_n; ++x) {
          dot += static_cast<double>(at(g, x)) * static_cast<double>(at(h, x));
        }
        double denom = norm[static_cast<size_t>(g)] * norm[static_cast<size_t>(h)];
        sims.emplace_back(denom > 0.0 ? -dot / denom : 0.0, h);
      }
      const size_t keep = std::min<size_t>(static_cast<size_t>(k), sims.size());
      std::partial_sort(sims.begin(), sims.begin() + static_cast<std::ptrdiff_t>(keep),
                        sims.end());
      for (size_t i = 0; i < keep; ++i) {
        const int h = sims[i].second;
        s.partners[static_cast<size_t>(g)].insert(h);
        s.partners[static_cast<size_t>(h)].insert(g);
      }
    }
    for (int g = 0; g < n; ++g) {
      for (int h : s.partners[static_cast<size_t>(g)]) {
        if (h > g) s.pscore.emplace(pair_key(g, h), pair_score(instance_side, g, h));
      }
    }
  }

  BestPair best_pair(SideState& s) {
    BestPair best;
    if (s.alive.size() < 2) return best;
    if (!s.pruned) {
      for (size_t i = 0; i < s.alive.size(); ++i) {
        const int g = s.alive[i];
        for (size_t j = i + 1; j < s.alive.size(); ++j) {
          const int h = s.alive[j];
          const double v = s.score[static_cast<size_t>(g) * s.n0 + h];
          if (v < best.delta) {
            best = {v, g, h, true};
          }
        }
      }
      return best;
    }
    if (s.pscore.empty()) refill_pruned(s);
    for (const auto& [key, v] : s.pscore) {
      const int g = static_cast<int>(key >> 32);
      const int h = static_cast<int>(key & 0xffffffffu);
      if (v < best.delta || (v == best.delta && std::pair(g, h) < std::pair(best.g, best.h))) {
        best = {v, g, h, true};
      }
    }
    return best;
  }

  // Candidate lists can run dry before a side is fully merged (the seed
  // graph need not be connected); fall back to all alive pairs.
  void refill_pruned(SideState& s) {
    const bool instance_side = &s == &u_;
    for (size_t i = 0; i < s.alive.size(); ++i) {
      for (size_t j = i + 1; j < s.alive.size(); ++j) {
        const int g = s.alive[i];
        const int h = s.alive[j];
        s.partners[static_cast<size_t>(g)].insert(h);
        s.partners[static_cast<size_t>(h)].insert(g);
        s.pscore.emplace(pair_key(g, h), pair_score(instance_side, g, h));
      }
    }
  }

  void merge(bool instance_side, int g, int h) {
    SideState& s = instance_side ? u_ : p_;
    SideState& other = instance_side ? p_ : u_;

    // Cross-side scores see the two profiles fuse; adjust before mutating.
    auto adjust = [&](int a, int b) {
      std::int64_t ga, gb, ha, hb;
      if (instance_side) {
        ga = cell(g, a);
        gb = cell(g, b);
        ha = cell(h, a);
        hb = cell(h, b);
      } else {
        ga = cell(a, g);
        gb = cell(b, g);
        ha = cell(a, h);
        hb = cell(b, h);
      }
      return lf_.psi(ga, gb) + lf_.psi(ha, hb) - lf_.psi(ga + ha, gb + hb);
    };
    if (!other.pruned) {
      for (size_t i = 0; i < other.alive.size(); ++i) {
        const int a = other.alive[i];
        for (size_t j = i + 1; j < other.alive.size(); ++j) {
          const int b = other.alive[j];
          other.score[static_cast<size_t>(a) * other.n0 + b] += adjust(a, b);
        }
      }
    } else {
      for (auto& [key, v] : other.pscore) {
        v += adjust(static_cast<int>(key >> 32), static_cast<int>(key & 0xffffffffu));
      }
    }

    // Fuse h into g.
    if (instance_side) {
      for (int x : p_.alive) {
        cells_[static_cast<size_t>(g) * p_.n0 + x] += cells_[static_cast<size_t>(h) * p_.n0 + x];
      }
    } else {
      for (int x : u_.alive) {
        cells_[static_cast<size_t>(x) * p_.n0 + g] += cells_[static_cast<size_t>(x) * p_.n0 + h];
      }
    }
    s.obs[static_cast<size_t>(g)] += s.obs[static_cast<size_t>(h)];
    s.size[static_cast<size_t>(g)] += s.size[static_cast<size_t>(h)];
    s.drop(h);
    std::vector<int>& roots = instance_side ? root_u_ : root_p_;
    for (int& r : roots) {
      if (r == h) r = g;
    }

    // Same-side scores touching g must be rescored; pairs with h die.
    if (!s.pruned) {
      for (int x : s.alive) {
        if (x == g) continue;
        const int lo = std::min(g, x);
        const int hi = std::max(g, x);
        s.score[static_cast<size_t>(lo) * s.n0 + hi] = pair_score(instance_side, g, x);
      }
      return;
    }
    for (int x : s.partners[static_cast<size_t>(h)]) {
      s.pscore.erase(pair_key(h, x));
      s.partners[static_cast<size_t>(x)].erase(h);
      if (x != g) s.partners[static_cast<size_t>(x)].insert(g);
    }
    auto& pg = s.partners[static_cast<size_t>(g)];
    for (int x : s.partners[static_cast<size_t>(h)]) {
      if (x != g) pg.insert(x);
    }
    s.partners[static_cast<size_t>(h)].clear();
    pg.erase(h);
    for (int x : pg) {
      s.pscore[pair_key(g, x)] = pair_score(instance_side, g, x);
    }
  }

  const CoclusterModel& start_;
  const Combinatorics& comb_;
  const OptimizerConfig& config_;
  std::int64_t n_total_;
  int instance_count_;
  int part_count_;
  FactorialTable lf_;
  std::vector<std::int64_t> cells_;  // u_.n0 x p_.n0, stable ids
  SideState u_;
  SideState p_;
  std::vector<int> root_u_;  // start cluster id -> current stable id
  std::vector<int> root_p_;
};

// Polishes the merge-tree arg-min by moving single instances to their best
// cluster, sweeping in instance order until a full sweep changes nothing.
// Greedy merges cannot undo an early mixed merge; this reassignment step can.
// Cluster counts and the part side stay fixed, so only the instance-cluster
// distribution prior, the instance-cluster factorials and the cell factorials
// move. Skipped above the exact-backend threshold, where the O(I * G) sweeps
// would dominate the fit.
CoclusterModel refine_instance_assignment(CoclusterModel model, const Combinatorics& comb,
                                          const OptimizerConfig& config,
                                          std::vector<TraceEntry>* trace) {
  const Dataset& data = model.dataset();
  const int instances = data.instance_count();
  const int g_u = model.instance_clusters();
  const int g_p = model.part_clusters();
  if (g_u < 2 || instances > config.agglomeration_exact_threshold) return model;

  const PartitionSet& parts = model.partitions();
  FactorialTable lf(comb, data.observation_count() + instances + 1);

  // Observation mass of each instance per part cluster.
  std::vector<std::int64_t> mass(static_cast<size_t>(instances) * g_p, 0);
  for (const Observation& o : data.observations()) {
    const int gp = model.part_cluster_of(parts.part_of(o));
    ++mass[static_cast<size_t>(o.instance) * g_p + gp];
  }

  std::vector<int> assign = model.instance_assignment();
  std::vector<std::int64_t> cells(static_cast<size_t>(g_u) * g_p);
  std::vector<std::int64_t> obs_u(static_cast<size_t>(g_u));
  std::vector<std::int64_t> size_u(static_cast<size_t>(g_u));
  for (int g = 0; g < g_u; ++g) {
    obs_u[static_cast<size_t>(g)] = model.instance_cluster_observations(g);
    size_u[static_cast<size_t>(g)] = model.instance_cluster_size(g);
    for (int gp = 0; gp < g_p; ++gp) {
      cells[static_cast<size_t>(g) * g_p + gp] = model.cell_observations(g, gp);
    }
  }

  double cumulative = evaluate_criterion(model, comb).total;
  std::int64_t applied = 0;
  bool moved = true;
  for (int sweep = 0; moved && sweep < config.max_sweeps; ++sweep) {
    moved = false;
    for (int i = 0; i < instances; ++i) {
      const int from = assign[static_cast<size_t>(i)];
      if (size_u[static_cast<size_t>(from)] == 1) continue;  // would empty the cluster
      const std::int64_t n_i = data.instance_observations(i);
      const double leave =
          lf.distr(obs_u[static_cast<size_t>(from)] - n_i, size_u[static_cast<size_t>(from)] - 1) -
          lf.distr(obs_u[static_cast<size_t>(from)], size_u[static_cast<size_t>(from)]) +
          lf(obs_u[static_cast<size_t>(from)] - n_i) - lf(obs_u[static_cast<size_t>(from)]);
      double best_delta = -config.min_improvement;
      int best_target = -1;
      for (int g = 0; g < g_u; ++g) {
        if (g == from) continue;
        double delta = leave +
                       lf.distr(obs_u[static_cast<size_t>(g)] + n_i,
                                size_u[static_cast<size_t>(g)] + 1) -
                       lf.distr(obs_u[static_cast<size_t>(g)], size_u[static_cast<size_t>(g)]) +
                       lf(obs_u[static_cast<size_t>(g)] + n_i) - lf(obs_u[static_cast<size_t>(g)]);
        for (int gp = 0; gp < g_p; ++gp) {
          const std::int64_t m = mass[static_cast<size_t>(i) * g_p + gp];
          if (m == 0) continue;
          // Cell factorials are subtracted in the cost, hence the flipped sign.
          const std::int64_t away = cells[static_cast<size_t>(from) * g_p + gp];
          const std::int64_t into = cells[static_cast<size_t>(g) * g_p + gp];
          delta += lf(away) - lf(away - m) + lf(into) - lf(into + m);
        }
        if (delta < best_delta) {
          best_delta = delta;
          best_target = g;
        }
      }
      if (best_target < 0) continue;
      for (int gp = 0; gp < g_p; ++gp) {
        const std::int64_t m = mass[static_cast<size_t>(i) * g_p + gp];
        cells[static_cast<size_t>(from) * g_p + gp] -= m;
        cells[static_cast<size_t>(best_target) * g_p + gp] += m;
      }
      obs_u[static_cast<size_t>(from)] -= n_i;
      obs_u[static_cast<size_t>(best_target)] += n_i;
      --size_u[static_cast<size_t>(from)];
      ++size_u[static_cast<size_t>(best_target)];
      assign[static_cast<size_t>(i)] = best_target;
      cumulative += best_delta;
      ++applied;
      moved = true;
      if (trace) {
        trace->push_back({static_cast<int>(trace->size()),
                          "move instance " + std::to_string(i) + " to cluster " +
                              std::to_string(best_target),
                          cumulative});
      }
    }
  }
  if (applied == 0) return model;
  return CoclusterModel::build(model.partitions(), std::move(assign), model.part_assignment());
}

}  // namespace

std::vector<Move> enumerate_moves(const CoclusterModel& m) {
  std::vector<Move> moves;
  const int g_u = m.instance_clusters();
  const int g_p = m.part_clusters();
  for (int a = 0; a < g_u; ++a) {
    for (int b = a + 1; b < g_u; ++b) {
      moves.push_back({Move::Kind::MergeInstanceClusters, -1, a, b});
    }
  }
  for (int a = 0; a < g_p; ++a) {
    for (int b = a + 1; b < g_p; ++b) {
      moves.push_back({Move::Kind::MergePartClusters, -1, a, b});
    }
  }
  const PartitionSet& ps = m.partitions();
  const int vars = m.dataset().schema().size();
  for (int k = 0; k < vars; ++k) {
    if (ps.variable(k).intervals) {
      for (int j = 0; j + 1 < ps.part_count(k); ++j) {
        moves.push_back({Move::Kind::MergeParts, k, j, j + 1});
      }
    } else if (ps.variable(k).groups) {
      for (int j = 0; j < ps.part_count(k); ++j) {
        for (int j2 = j + 1; j2 < ps.part_count(k); ++j2) {
          moves.push_back({Move::Kind::MergeParts, k, j, j2});
        }
      }
    }
  }
  for (int p = 0; p < ps.total_parts(); ++p) {
    // A singleton cluster leaving for another cluster is the same model as
    // a cluster merge, which is already on the list.
    if (m.part_cluster_size(m.part_cluster_of(p)) == 1) continue;
    for (int c = 0; c < g_p; ++c) {
      if (c != m.part_cluster_of(p)) moves.push_back({Move::Kind::MovePart, -1, p, c});
    }
  }
  for (int k = 0; k < vars; ++k) {
    if (!ps.variable(k).groups) continue;
    const ValueGrouping& grouping = *ps.variable(k).groups;
    if (grouping.group_count() < 2) continue;
    for (int v = 0; v < grouping.value_count(); ++v) {
      for (int tg = 0; tg < grouping.group_count(); ++tg) {
        if (tg != grouping.group_of(v)) moves.push_back({Move::Kind::MoveValue, k, v, tg});
      }
    }
  }
  return moves;
}

namespace {

// Builds the Stirling rows and factorials the sweep's deltas will touch, so
// worker threads only ever read.
void prewarm_combinatorics(const CoclusterModel& m, const Combinatorics& comb) {
  const std::int64_t n = m.dataset().observation_count();
  const std::int64_t cells = static_cast<std::int64_t>(m.instance_clusters()) * m.part_clusters();
  comb.reserve_factorials(n + cells + std::max(m.dataset().instance_count(),
                                               m.partitions().total_parts()) +
                          4);
  comb.log_stirling2_cumulative(m.dataset().instance_count(), m.dataset().instance_count());
  const int j = m.partitions().total_parts();
  comb.log_stirling2_cumulative(j, j);
  if (j > 1) comb.log_stirling2_cumulative(j - 1, j - 1);
  for (int k = 0; k < m.dataset().schema().size(); ++k) {
    if (m.partitions().variable(k).groups) {
      const std::int64_t v_k = m.dataset().value_count(k);
      comb.log_stirling2_cumulative(v_k, v_k);
    }
  }
}

struct ScanResult {
  double delta = kInf;
  size_t rank = std::numeric_limits<size_t>::max();
};

ScanResult scan_moves(const CoclusterModel& model, const std::vector<Move>& moves,
                      const Combinatorics& comb, int threads) {
  ScanResult best;
  auto better = [](const ScanResult& a, const ScanResult& b) {
    return a.delta < b.delta || (a.delta == b.delta && a.rank < b.rank);
  };
  if (threads <= 1 || moves.size() < 64) {
    for (size_t i = 0; i < moves.size(); ++i) {
      ScanResult r{delta_criterion(model, moves[i], comb), i};
      if (better(r, best)) best = r;
    }
    return best;
  }
  const size_t workers = std::min<size_t>(static_cast<size_t>(threads), moves.size());
  std::vector<ScanResult> partial(workers);
  std::vector<std::exception_ptr> errors(workers);
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w]() {
      try {
        ScanResult local;
        for (size_t i = w; i < moves.size(); i += workers) {
          ScanResult r{delta_criterion(model, moves[i], comb), i};
          if (better(r, local)) local = r;
        }
        partial[w] = local;
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  for (const auto& r : partial) {
    if (better(r, best)) best = r;
  }
  return best;
}

std::vector<int> resolve_grid(const std::vector<int>& requested, int instance_count) {
  std::vector<int> grid = requested;
  if (grid.empty()) {
    if (instance_count <= 1000) {
      grid = {2, 3, 4, 5, 6, 7, 8, 9, 10};
    } else {
      grid = {2, 4, 8, 16, 32, 64, 128};
    }
  }
  for (int p : grid) {
    if (p < 1) throw ParameterError("partition sizes must be >= 1");
  }
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  return grid;
}

}  // namespace

CoclusterModel stage1_initialize(std::shared_ptr<const Dataset> dataset, int parts_per_variable) {
  if (!dataset) throw ParameterError("fit needs a dataset");
  if (dataset->observation_count() == 0) throw ParameterError("dataset has zero observations");
  return CoclusterModel::singletons(PartitionSet::equal_frequency(std::move(dataset),
                                                                  parts_per_variable));
}

CoclusterModel agglomerative_cocluster(const CoclusterModel& start, const Combinatorics& comb,
                                       const OptimizerConfig& config,
                                       std::vector<TraceEntry>* trace, std::int64_t* merges) {
  Agglomerator agglomerator(start, comb, config);
  const double start_criterion = evaluate_criterion(start, comb).total;
  CoclusterModel coarse = agglomerator.run(start_criterion, trace, merges);
  return refine_instance_assignment(std::move(coarse), comb, config, trace);
}

CoclusterModel post_optimize(const CoclusterModel& start, const Combinatorics& comb,
                             const OptimizerConfig& config, std::vector<TraceEntry>* trace,
                             std::int64_t* moves) {
  CoclusterModel model = start;
  double cumulative = evaluate_criterion(model, comb).total;
  std::int64_t applied = 0;
  for (int sweep = 0; sweep < config.max_sweeps; ++sweep) {
    std::vector<Move> candidates = enumerate_moves(model);
    if (candidates.empty()) break;
    prewarm_combinatorics(model, comb);
    ScanResult best = scan_moves(model, candidates, comb, config.threads);
    if (!(best.delta < -config.min_improvement)) break;
    model.apply(candidates[best.rank]);
    cumulative += best.delta;
    ++applied;
    if (trace) {
      trace->push_back({static_cast<int>(trace->size()), to_string(candidates[best.rank]),
                        cumulative});
    }
  }
  if (moves) *moves = applied;
  return model;
}

FitResult fit_at(std::shared_ptr<const Dataset> dataset, int parts_per_variable,
                 const OptimizerConfig& config) {
  using clock = std::chrono::steady_clock;
  Combinatorics comb(config.criterion);

  const auto t0 = clock::now();
  CoclusterModel init = stage1_initialize(dataset, parts_per_variable);
  std::vector<TraceEntry> trace;
  trace.push_back({0, "initialize " + std::to_string(parts_per_variable) + " parts per variable",
                   evaluate_criterion(init, comb).total});
  std::int64_t merges = 0;
  CoclusterModel coarse = agglomerative_cocluster(init, comb, config, &trace, &merges);
  const auto t1 = clock::now();
  std::int64_t moves = 0;
  CoclusterModel model = post_optimize(coarse, comb, config, &trace, &moves);
  const auto t2 = clock::now();

  FitResult result{std::move(model), {}, parts_per_variable, std::move(trace), {}, merges, moves,
                   std::chrono::duration<double>(t1 - t0).count(),
                   std::chrono::duration<double>(t2 - t1).count()};
  result.criterion = evaluate_criterion(result.model, comb);
  // The trace accumulates deltas; pin its tail to the exact evaluation.
  result.trace.back().criterion = result.criterion.total;
  result.grid = {{parts_per_variable, result.criterion.total}};
  return result;
}

FitResult grid_search(std::shared_ptr<const Dataset> dataset, const OptimizerConfig& config) {
  if (!dataset) throw ParameterError("fit needs a dataset");
  const std::vector<int> grid = resolve_grid(config.partition_grid, dataset->instance_count());
  std::optional<FitResult> best;
  std::vector<GridPoint> points;
  for (int parts : grid) {
    FitResult result = fit_at(dataset, parts, config);
    points.push_back({parts, result.criterion.total});
    if (!best || result.criterion.total < best->criterion.total) {
      best = std::move(result);
    }
  }
  best->grid = std::move(points);
  return std::move(*best);
}

FitResult fit(std::shared_ptr<const Dataset> dataset, const OptimizerConfig& config) {
  return grid_search(std::move(dataset), config);
}

}  // namespace cocl
