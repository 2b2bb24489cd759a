#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "cocl/partition.hpp"

namespace cocl {

// Elementary model edit. Enum order doubles as the deterministic tie-break
// order when several moves share a criterion delta.
struct Move {
  enum class Kind : std::uint8_t {
    MergeInstanceClusters,  // a, b: cluster ids, a < b
    MergePartClusters,      // a, b: cluster ids, a < b
    MergeParts,             // variable k; a, b: local part ids, a < b
                            //   (numeric variables: b == a + 1)
    MovePart,               // a: global part id, b: target part cluster
    MoveValue,              // variable k; a: value id, b: target group
  };

  Kind kind;
  int variable = -1;
  int a = 0;
  int b = 0;

  friend bool operator==(const Move&, const Move&) = default;
};

bool operator<(const Move& lhs, const Move& rhs);
std::string to_string(const Move& move);

// Everything the criterion needs, detached from the dataset.
struct SufficientStats {
  std::int64_t total_observations = 0;  // N
  int instance_count = 0;               // I
  int part_count = 0;                   // J
  int numeric_modeled = 0;              // K_n
  int instance_clusters = 0;            // G_u
  int part_clusters = 0;                // G_p

  struct CategoricalPart {
    std::int64_t observations = 0;  // n_.kj
    int value_count = 0;            // m_j^k
  };
  struct CategoricalVariable {
    int variable = -1;
    std::vector<CategoricalPart> parts;
    std::vector<std::int64_t> value_observations;  // n_v per token id
  };
  std::vector<CategoricalVariable> categorical;

  std::vector<std::int64_t> numeric_part_observations;  // n_.kj, numeric parts
  std::vector<std::int64_t> part_observations;          // n_.kj in global part order

  // Row-major G_u x G_p cell observation counts.
  std::vector<std::int64_t> cells;
  std::vector<std::int64_t> instance_cluster_observations;  // N^u
  std::vector<int> instance_cluster_sizes;                  // m^u
  std::vector<std::int64_t> part_cluster_observations;      // N^p
  std::vector<int> part_cluster_sizes;                      // m^p

  std::vector<std::int64_t> instance_observations;  // n_i.
};

// Co-clustering state: a partition set, an instance clustering and a part
// clustering, with the count tables needed for O(changed-terms) criterion
// deltas. Cluster ids are dense on both sides.
class CoclusterModel {
 public:
  // StructuralError on out-of-range or empty clusters.
  static CoclusterModel build(PartitionSet partitions,
                              std::vector<int> instance_cluster,
                              std::vector<int> part_cluster);
  // One cluster per instance and per part.
  static CoclusterModel singletons(PartitionSet partitions);

  const PartitionSet& partitions() const { return partitions_; }
  const Dataset& dataset() const { return partitions_.dataset(); }

  int instance_clusters() const { return g_u_; }
  int part_clusters() const { return g_p_; }
  int instance_cluster_of(int instance) const {
    return instance_cluster_.at(static_cast<size_t>(instance));
  }
  int part_cluster_of(int part) const { return part_cluster_.at(static_cast<size_t>(part)); }
  const std::vector<int>& instance_assignment() const { return instance_cluster_; }
  const std::vector<int>& part_assignment() const { return part_cluster_; }

  std::int64_t cell_observations(int gu, int gp) const {
    return cells_[static_cast<size_t>(gu) * static_cast<size_t>(g_p_) + static_cast<size_t>(gp)];
  }
  std::int64_t instance_cluster_observations(int gu) const {
    return cluster_obs_u_.at(static_cast<size_t>(gu));
  }
  std::int64_t part_cluster_observations(int gp) const {
    return cluster_obs_p_.at(static_cast<size_t>(gp));
  }
  int instance_cluster_size(int gu) const { return cluster_size_u_.at(static_cast<size_t>(gu)); }
  int part_cluster_size(int gp) const { return cluster_size_p_.at(static_cast<size_t>(gp)); }

  // Observations of instance cluster g falling in part j (used by the
  // optimizer's incremental bookkeeping).
  std::int64_t cluster_part_observations(int gu, int part) const {
    return upart_[static_cast<size_t>(gu) * static_cast<size_t>(partitions_.total_parts()) +
                  static_cast<size_t>(part)];
  }
  // Observations of instance cluster g carrying value v of a categorical
  // variable.
  std::int64_t cluster_value_observations(int gu, int variable, int value) const;

  // Validates then applies the move in place, updating every count table
  // incrementally. StructuralError on invalid moves.
  void apply(const Move& move);

  SufficientStats stats() const;

 private:
  explicit CoclusterModel(PartitionSet partitions) : partitions_(std::move(partitions)) {}

  void merge_instance_clusters(int a, int b);
  void merge_part_clusters(int a, int b);
  void merge_parts(int variable, int a, int b);
  void move_part(int part, int to_cluster);
  void move_value(int variable, int value, int to_group);
  void drop_part_cluster(int gp);
  void drop_instance_cluster(int gu);

  PartitionSet partitions_;
  std::vector<int> instance_cluster_;
  std::vector<int> part_cluster_;
  int g_u_ = 0;
  int g_p_ = 0;

  std::vector<std::int64_t> cells_;           // G_u x G_p
  std::vector<std::int64_t> cluster_obs_u_;   // N^u
  std::vector<std::int64_t> cluster_obs_p_;   // N^p
  std::vector<int> cluster_size_u_;           // m^u
  std::vector<int> cluster_size_p_;           // m^p
  std::vector<std::int64_t> upart_;           // G_u x J
  // Per instance-cluster, per categorical variable, per value id counts
  // (used when value moves change cell tables).
  std::vector<std::vector<std::int64_t>> uvalue_;  // [variable][gu * V_k + v]
};

// Copying edit helper built on CoclusterModel::apply.
CoclusterModel apply_move(const CoclusterModel& model, const Move& move);

struct VerifyResult {
  bool ok = true;
  std::string first_discrepancy;
};

// Recomputes every count table from the dataset and compares. Intended for
// tests and debug assertions, not hot paths.
VerifyResult verify_counts(const CoclusterModel& model);

}  // namespace cocl
