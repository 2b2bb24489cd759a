#include "cocl/model.hpp"

#include <algorithm>
#include <numeric>
#include <tuple>

#include "cocl/error.hpp"

namespace cocl {

bool operator<(const Move& lhs, const Move& rhs) {
  return std::tie(lhs.kind, lhs.variable, lhs.a, lhs.b) <
         std::tie(rhs.kind, rhs.variable, rhs.a, rhs.b);
}

std::string to_string(const Move& move) {
  switch (move.kind) {
    case Move::Kind::MergeInstanceClusters:
      return "merge instance clusters " + std::to_string(move.a) + "+" + std::to_string(move.b);
    case Move::Kind::MergePartClusters:
      return "merge part clusters " + std::to_string(move.a) + "+" + std::to_string(move.b);
    case Move::Kind::MergeParts:
      return "merge parts " + std::to_string(move.a) + "+" + std::to_string(move.b) +
             " of variable " + std::to_string(move.variable);
    case Move::Kind::MovePart:
      return "move part " + std::to_string(move.a) + " to cluster " + std::to_string(move.b);
    case Move::Kind::MoveValue:
      return "move value " + std::to_string(move.a) + " of variable " +
             std::to_string(move.variable) + " to group " + std::to_string(move.b);
  }
  return "unknown move";
}

namespace {

void check_assignment(const std::vector<int>& assignment, int clusters, const char* side) {
  std::vector<int> size(static_cast<size_t>(clusters), 0);
  for (int c : assignment) {
    if (c < 0 || c >= clusters) {
      throw StructuralError(std::string(side) + " cluster id out of range");
    }
    ++size[static_cast<size_t>(c)];
  }
  for (int c = 0; c < clusters; ++c) {
    if (size[static_cast<size_t>(c)] == 0) {
      throw StructuralError(std::string(side) + " cluster " + std::to_string(c) + " is empty");
    }
  }
}

}  // namespace

CoclusterModel CoclusterModel::build(PartitionSet partitions, std::vector<int> instance_cluster,
                                     std::vector<int> part_cluster) {
  const Dataset& data = partitions.dataset();
  if (instance_cluster.size() != static_cast<size_t>(data.instance_count())) {
    throw StructuralError("one instance cluster id per instance required");
  }
  if (part_cluster.size() != static_cast<size_t>(partitions.total_parts())) {
    throw StructuralError("one part cluster id per part required");
  }
  if (partitions.total_parts() == 0) throw StructuralError("model needs at least one part");

  CoclusterModel m(std::move(partitions));
  m.g_u_ = instance_cluster.empty()
               ? 0
               : *std::max_element(instance_cluster.begin(), instance_cluster.end()) + 1;
  m.g_p_ = *std::max_element(part_cluster.begin(), part_cluster.end()) + 1;
  check_assignment(instance_cluster, m.g_u_, "instance");
  check_assignment(part_cluster, m.g_p_, "part");

  m.instance_cluster_ = std::move(instance_cluster);
  m.part_cluster_ = std::move(part_cluster);

  const int parts = m.partitions_.total_parts();
  m.cells_.assign(static_cast<size_t>(m.g_u_) * m.g_p_, 0);
  m.cluster_obs_u_.assign(static_cast<size_t>(m.g_u_), 0);
  m.cluster_obs_p_.assign(static_cast<size_t>(m.g_p_), 0);
  m.cluster_size_u_.assign(static_cast<size_t>(m.g_u_), 0);
  m.cluster_size_p_.assign(static_cast<size_t>(m.g_p_), 0);
  m.upart_.assign(static_cast<size_t>(m.g_u_) * parts, 0);
  m.uvalue_.resize(static_cast<size_t>(data.schema().size()));
  for (int k = 0; k < data.schema().size(); ++k) {
    if (m.partitions_.variable(k).groups) {
      m.uvalue_[static_cast<size_t>(k)].assign(
          static_cast<size_t>(m.g_u_) * data.value_count(k), 0);
    }
  }
  for (int c : m.instance_cluster_) ++m.cluster_size_u_[static_cast<size_t>(c)];
  for (int c : m.part_cluster_) ++m.cluster_size_p_[static_cast<size_t>(c)];

  for (const Observation& o : data.observations()) {
    const int j = m.partitions_.part_of(o);
    const int gu = m.instance_cluster_[static_cast<size_t>(o.instance)];
    const int gp = m.part_cluster_[static_cast<size_t>(j)];
    ++m.cells_[static_cast<size_t>(gu) * m.g_p_ + gp];
    ++m.cluster_obs_u_[static_cast<size_t>(gu)];
    ++m.cluster_obs_p_[static_cast<size_t>(gp)];
    ++m.upart_[static_cast<size_t>(gu) * parts + j];
    if (m.partitions_.variable(o.variable).groups) {
      ++m.uvalue_[static_cast<size_t>(o.variable)]
                 [static_cast<size_t>(gu) * data.value_count(o.variable) + o.value];
    }
  }
  return m;
}

CoclusterModel CoclusterModel::singletons(PartitionSet partitions) {
  std::vector<int> iassign(static_cast<size_t>(partitions.dataset().instance_count()));
  std::iota(iassign.begin(), iassign.end(), 0);
  std::vector<int> passign(static_cast<size_t>(partitions.total_parts()));
  std::iota(passign.begin(), passign.end(), 0);
  return build(std::move(partitions), std::move(iassign), std::move(passign));
}

std::int64_t CoclusterModel::cluster_value_observations(int gu, int variable, int value) const {
  const auto& table = uvalue_.at(static_cast<size_t>(variable));
  if (table.empty()) throw StructuralError("variable has no value table");
  const int v_k = dataset().value_count(variable);
  return table.at(static_cast<size_t>(gu) * v_k + static_cast<size_t>(value));
}

void CoclusterModel::apply(const Move& move) {
  switch (move.kind) {
    case Move::Kind::MergeInstanceClusters:
      merge_instance_clusters(std::min(move.a, move.b), std::max(move.a, move.b));
      return;
    case Move::Kind::MergePartClusters:
      merge_part_clusters(std::min(move.a, move.b), std::max(move.a, move.b));
      return;
    case Move::Kind::MergeParts:
      merge_parts(move.variable, move.a, move.b);
      return;
    case Move::Kind::MovePart:
      move_part(move.a, move.b);
      return;
    case Move::Kind::MoveValue:
      move_value(move.variable, move.a, move.b);
      return;
  }
  throw StructuralError("unknown move kind");
}

void CoclusterModel::merge_instance_clusters(int a, int b) {
  if (a < 0 || b >= g_u_ || a >= b) throw StructuralError("invalid instance cluster pair");
  const int parts = partitions_.total_parts();
  for (int j = 0; j < parts; ++j) {
    upart_[static_cast<size_t>(a) * parts + j] += upart_[static_cast<size_t>(b) * parts + j];
  }
  for (size_t k = 0; k < uvalue_.size(); ++k) {
    auto& table = uvalue_[k];
    if (table.empty()) continue;
    const int v_k = dataset().value_count(static_cast<int>(k));
    for (int v = 0; v < v_k; ++v) {
      table[static_cast<size_t>(a) * v_k + v] += table[static_cast<size_t>(b) * v_k + v];
    }
  }
  for (int gp = 0; gp < g_p_; ++gp) {
    cells_[static_cast<size_t>(a) * g_p_ + gp] += cells_[static_cast<size_t>(b) * g_p_ + gp];
  }
  cluster_obs_u_[static_cast<size_t>(a)] += cluster_obs_u_[static_cast<size_t>(b)];
  cluster_size_u_[static_cast<size_t>(a)] += cluster_size_u_[static_cast<size_t>(b)];
  drop_instance_cluster(b);
  for (int& c : instance_cluster_) {
    if (c == b) {
      c = a;
    } else if (c > b) {
      --c;
    }
  }
}

void CoclusterModel::drop_instance_cluster(int gu) {
  const int parts = partitions_.total_parts();
  cells_.erase(cells_.begin() + static_cast<std::ptrdiff_t>(gu) * g_p_,
               cells_.begin() + static_cast<std::ptrdiff_t>(gu + 1) * g_p_);
  upart_.erase(upart_.begin() + static_cast<std::ptrdiff_t>(gu) * parts,
               upart_.begin() + static_cast<std::ptrdiff_t>(gu + 1) * parts);
  for (size_t k = 0; k < uvalue_.size(); ++k) {
    auto& table = uvalue_[k];
    if (table.empty()) continue;
    const int v_k = dataset().value_count(static_cast<int>(k));
    table.erase(table.begin() + static_cast<std::ptrdiff_t>(gu) * v_k,
                table.begin() + static_cast<std::ptrdiff_t>(gu + 1) * v_k);
  }
  cluster_obs_u_.erase(cluster_obs_u_.begin() + gu);
  cluster_size_u_.erase(cluster_size_u_.begin() + gu);
  --g_u_;
}

void CoclusterModel::merge_part_clusters(int a, int b) {
  if (a < 0 || b >= g_p_ || a >= b) throw StructuralError("invalid part cluster pair");
  for (int gu = 0; gu < g_u_; ++gu) {
    cells_[static_cast<size_t>(gu) * g_p_ + a] += cells_[static_cast<size_t>(gu) * g_p_ + b];
  }
  cluster_obs_p_[static_cast<size_t>(a)] += cluster_obs_p_[static_cast<size_t>(b)];
  cluster_size_p_[static_cast<size_t>(a)] += cluster_size_p_[static_cast<size_t>(b)];
  cluster_obs_p_[static_cast<size_t>(b)] = 0;
  cluster_size_p_[static_cast<size_t>(b)] = 0;
  // Relabel before the drop: drop_part_cluster shifts every id above b down,
  // so any id still equal to b afterwards would alias the old cluster b+1.
  for (int& c : part_cluster_) {
    if (c == b) c = a;
  }
  drop_part_cluster(b);
}

void CoclusterModel::drop_part_cluster(int gp) {
  if (cluster_obs_p_[static_cast<size_t>(gp)] != 0 ||
      cluster_size_p_[static_cast<size_t>(gp)] != 0) {
    throw StructuralError("cannot drop a nonempty part cluster");
  }
  // Remove column gp from the cell table.
  size_t w = 0;
  for (int gu = 0; gu < g_u_; ++gu) {
    for (int c = 0; c < g_p_; ++c) {
      if (c == gp) continue;
      cells_[w++] = cells_[static_cast<size_t>(gu) * g_p_ + c];
    }
  }
  cells_.resize(w);
  cluster_obs_p_.erase(cluster_obs_p_.begin() + gp);
  cluster_size_p_.erase(cluster_size_p_.begin() + gp);
  --g_p_;
  for (int& c : part_cluster_) {
    if (c > gp) --c;
  }
}

void CoclusterModel::merge_parts(int variable, int a, int b) {
  const int local_count = partitions_.part_count(variable);
  if (variable < 0 || variable >= dataset().schema().size() || local_count == 0) {
    throw StructuralError("variable has no parts");
  }
  if (a < 0 || b <= a || b >= local_count) throw StructuralError("invalid part pair");
  if (partitions_.variable(variable).intervals && b != a + 1) {
    throw StructuralError("numeric parts must be adjacent to merge");
  }
  const int pa = partitions_.part_offset(variable) + a;
  const int pb = partitions_.part_offset(variable) + b;
  const int ca = part_cluster_[static_cast<size_t>(pa)];
  const int cb = part_cluster_[static_cast<size_t>(pb)];
  const std::int64_t nb = partitions_.part_observations(pb);
  const int parts = partitions_.total_parts();

  for (int gu = 0; gu < g_u_; ++gu) {
    const std::int64_t u = upart_[static_cast<size_t>(gu) * parts + pb];
    upart_[static_cast<size_t>(gu) * parts + pa] += u;
    if (ca != cb) {
      cells_[static_cast<size_t>(gu) * g_p_ + cb] -= u;
      cells_[static_cast<size_t>(gu) * g_p_ + ca] += u;
    }
  }
  if (ca != cb) {
    cluster_obs_p_[static_cast<size_t>(cb)] -= nb;
    cluster_obs_p_[static_cast<size_t>(ca)] += nb;
    --cluster_size_p_[static_cast<size_t>(cb)];
  } else {
    --cluster_size_p_[static_cast<size_t>(ca)];
  }

  // Erase the upart column and cluster slot of pb, then swap in the merged
  // partition set (part ids above pb all shift down by one).
  size_t w = 0;
  for (int gu = 0; gu < g_u_; ++gu) {
    for (int j = 0; j < parts; ++j) {
      if (j == pb) continue;
      upart_[w++] = upart_[static_cast<size_t>(gu) * parts + j];
    }
  }
  upart_.resize(w);
  part_cluster_.erase(part_cluster_.begin() + pb);
  partitions_ = partitions_.merge_parts(variable, a, b);
  if (cluster_size_p_[static_cast<size_t>(cb)] == 0) drop_part_cluster(cb);
}

void CoclusterModel::move_part(int part, int to_cluster) {
  if (part < 0 || part >= partitions_.total_parts()) {
    throw StructuralError("part id out of range");
  }
  if (to_cluster < 0 || to_cluster >= g_p_) throw StructuralError("target cluster out of range");
  const int from = part_cluster_[static_cast<size_t>(part)];
  if (from == to_cluster) throw StructuralError("part already in the target cluster");
  const std::int64_t np = partitions_.part_observations(part);
  const int parts = partitions_.total_parts();
  for (int gu = 0; gu < g_u_; ++gu) {
    const std::int64_t u = upart_[static_cast<size_t>(gu) * parts + part];
    cells_[static_cast<size_t>(gu) * g_p_ + from] -= u;
    cells_[static_cast<size_t>(gu) * g_p_ + to_cluster] += u;
  }
  cluster_obs_p_[static_cast<size_t>(from)] -= np;
  cluster_obs_p_[static_cast<size_t>(to_cluster)] += np;
  --cluster_size_p_[static_cast<size_t>(from)];
  ++cluster_size_p_[static_cast<size_t>(to_cluster)];
  part_cluster_[static_cast<size_t>(part)] = to_cluster;
  if (cluster_size_p_[static_cast<size_t>(from)] == 0) drop_part_cluster(from);
}

void CoclusterModel::move_value(int variable, int value, int to_group) {
  if (variable < 0 || variable >= dataset().schema().size() ||
      !partitions_.variable(variable).groups) {
    throw StructuralError("value moves need a categorical variable");
  }
  const ValueGrouping& grouping = *partitions_.variable(variable).groups;
  if (value < 0 || value >= grouping.value_count()) throw StructuralError("value id out of range");
  if (to_group < 0 || to_group >= grouping.group_count()) {
    throw StructuralError("target group out of range");
  }
  const int from_group = grouping.group_of(value);
  if (from_group == to_group) throw StructuralError("value already in the target group");

  const int p0 = partitions_.part_offset(variable) + from_group;
  const int pt = partitions_.part_offset(variable) + to_group;
  const int c0 = part_cluster_[static_cast<size_t>(p0)];
  const int ct = part_cluster_[static_cast<size_t>(pt)];
  const std::int64_t nv = dataset().value_observations(variable, value);
  const bool group_drops = grouping.group_value_count(from_group) == 1;
  const int parts = partitions_.total_parts();
  const int v_k = dataset().value_count(variable);
  const auto& table = uvalue_[static_cast<size_t>(variable)];

  for (int gu = 0; gu < g_u_; ++gu) {
    const std::int64_t u = table[static_cast<size_t>(gu) * v_k + value];
    upart_[static_cast<size_t>(gu) * parts + p0] -= u;
    upart_[static_cast<size_t>(gu) * parts + pt] += u;
    if (c0 != ct) {
      cells_[static_cast<size_t>(gu) * g_p_ + c0] -= u;
      cells_[static_cast<size_t>(gu) * g_p_ + ct] += u;
    }
  }
  if (c0 != ct) {
    cluster_obs_p_[static_cast<size_t>(c0)] -= nv;
    cluster_obs_p_[static_cast<size_t>(ct)] += nv;
  }
  partitions_ = partitions_.move_value(variable, value, to_group);
  if (group_drops) {
    size_t w = 0;
    for (int gu = 0; gu < g_u_; ++gu) {
      for (int j = 0; j < parts; ++j) {
        if (j == p0) continue;
        upart_[w++] = upart_[static_cast<size_t>(gu) * parts + j];
      }
    }
    upart_.resize(w);
    part_cluster_.erase(part_cluster_.begin() + p0);
    --cluster_size_p_[static_cast<size_t>(c0)];
    if (cluster_size_p_[static_cast<size_t>(c0)] == 0) drop_part_cluster(c0);
  }
}

SufficientStats CoclusterModel::stats() const {
  const Dataset& data = dataset();
  SufficientStats s;
  s.total_observations = data.observation_count();
  s.instance_count = data.instance_count();
  s.part_count = partitions_.total_parts();
  s.instance_clusters = g_u_;
  s.part_clusters = g_p_;
  s.cells = cells_;
  s.instance_cluster_observations = cluster_obs_u_;
  s.instance_cluster_sizes = cluster_size_u_;
  s.part_cluster_observations = cluster_obs_p_;
  s.part_cluster_sizes = cluster_size_p_;
  s.instance_observations.resize(static_cast<size_t>(s.instance_count));
  for (int i = 0; i < s.instance_count; ++i) {
    s.instance_observations[static_cast<size_t>(i)] = data.instance_observations(i);
  }
  s.part_observations.resize(static_cast<size_t>(s.part_count));
  for (int j = 0; j < s.part_count; ++j) {
    s.part_observations[static_cast<size_t>(j)] = partitions_.part_observations(j);
  }
  for (int k = 0; k < data.schema().size(); ++k) {
    const VariablePartition& vp = partitions_.variable(k);
    if (vp.intervals) {
      ++s.numeric_modeled;
      for (int j = 0; j < vp.intervals->part_count(); ++j) {
        s.numeric_part_observations.push_back(
            partitions_.part_observations(partitions_.part_offset(k) + j));
      }
    } else if (vp.groups) {
      SufficientStats::CategoricalVariable cat;
      cat.variable = k;
      for (int j = 0; j < vp.groups->group_count(); ++j) {
        cat.parts.push_back({partitions_.part_observations(partitions_.part_offset(k) + j),
                             vp.groups->group_value_count(j)});
      }
      for (int v = 0; v < data.value_count(k); ++v) {
        cat.value_observations.push_back(data.value_observations(k, v));
      }
      s.categorical.push_back(std::move(cat));
    }
  }
  return s;
}

CoclusterModel apply_move(const CoclusterModel& model, const Move& move) {
  CoclusterModel edited = model;
  edited.apply(move);
  return edited;
}

namespace {

template <typename T>
bool report_diff(const char* what, const T& got, const T& expected, VerifyResult& out) {
  if (got == expected) return false;
  out.ok = false;
  out.first_discrepancy = std::string(what) + ": have " + std::to_string(got) + ", rebuilt " +
                          std::to_string(expected);
  return true;
}

}  // namespace

VerifyResult verify_counts(const CoclusterModel& model) {
  VerifyResult out;
  CoclusterModel fresh = CoclusterModel::build(model.partitions(), model.instance_assignment(),
                                               model.part_assignment());
  if (report_diff("instance clusters", model.instance_clusters(), fresh.instance_clusters(), out))
    return out;
  if (report_diff("part clusters", model.part_clusters(), fresh.part_clusters(), out)) return out;
  for (int gu = 0; gu < model.instance_clusters(); ++gu) {
    if (report_diff("instance cluster size", model.instance_cluster_size(gu),
                    fresh.instance_cluster_size(gu), out))
      return out;
    if (report_diff("instance cluster observations", model.instance_cluster_observations(gu),
                    fresh.instance_cluster_observations(gu), out))
      return out;
    for (int gp = 0; gp < model.part_clusters(); ++gp) {
      if (report_diff("cell observations", model.cell_observations(gu, gp),
                      fresh.cell_observations(gu, gp), out))
        return out;
    }
    for (int j = 0; j < model.partitions().total_parts(); ++j) {
      if (report_diff("cluster-part observations", model.cluster_part_observations(gu, j),
                      fresh.cluster_part_observations(gu, j), out))
        return out;
    }
    for (int k = 0; k < model.dataset().schema().size(); ++k) {
      if (!model.partitions().variable(k).groups) continue;
      for (int v = 0; v < model.dataset().value_count(k); ++v) {
        if (report_diff("cluster-value observations",
                        model.cluster_value_observations(gu, k, v),
                        fresh.cluster_value_observations(gu, k, v), out))
          return out;
      }
    }
  }
  for (int gp = 0; gp < model.part_clusters(); ++gp) {
    if (report_diff("part cluster size", model.part_cluster_size(gp),
                    fresh.part_cluster_size(gp), out))
      return out;
    if (report_diff("part cluster observations", model.part_cluster_observations(gp),
                    fresh.part_cluster_observations(gp), out))
      return out;
  }
  return out;
}

}  // namespace cocl
