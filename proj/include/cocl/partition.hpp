#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "cocl/ingest.hpp"

namespace cocl {

// Right-closed interval partition of a numeric axis: part j covers
// ]boundaries[j-1]; boundaries[j]] with implicit -inf and +inf at the ends.
class IntervalPartition {
 public:
  IntervalPartition(int variable, std::vector<double> boundaries);

  int variable() const { return variable_; }
  int part_count() const { return static_cast<int>(boundaries_.size()) + 1; }
  const std::vector<double>& boundaries() const { return boundaries_; }
  int part_of(double x) const;

  // Removes the boundary between adjacent parts j and j+1.
  IntervalPartition merge_adjacent(int j) const;

 private:
  int variable_;
  std::vector<double> boundaries_;  // strictly increasing
};

// Partition of a categorical variable's observed tokens into groups.
class ValueGrouping {
 public:
  ValueGrouping(int variable, std::vector<std::vector<int>> groups, int value_count);

  int variable() const { return variable_; }
  int group_count() const { return static_cast<int>(groups_.size()); }
  int value_count() const { return value_count_; }
  const std::vector<std::vector<int>>& groups() const { return groups_; }
  const std::vector<int>& group(int j) const { return groups_.at(static_cast<size_t>(j)); }
  int group_of(int value) const { return value_to_group_.at(static_cast<size_t>(value)); }
  int group_value_count(int j) const { return static_cast<int>(group(j).size()); }

  ValueGrouping merged(int j, int j2) const;           // union of two groups
  ValueGrouping moved(int value, int to_group) const;  // may drop an emptied group

 private:
  int variable_;
  std::vector<std::vector<int>> groups_;  // each ascending, jointly exhaustive
  std::vector<int> value_to_group_;
  int value_count_;
};

struct VariablePartition {
  std::optional<IntervalPartition> intervals;  // numeric variables
  std::optional<ValueGrouping> groups;         // categorical variables
  // both empty for variables excluded from modeling
};

// Per-variable partitions plus the global part index space. Part ids are
// contiguous: variable k's parts occupy [offset(k), offset(k) + count).
class PartitionSet {
 public:
  PartitionSet(std::shared_ptr<const Dataset> dataset,
               std::vector<VariablePartition> variables);

  // Equal-frequency intervals and frequency-balanced groups with at most
  // `parts_per_variable` parts per variable.
  static PartitionSet equal_frequency(std::shared_ptr<const Dataset> dataset,
                                      int parts_per_variable);

  const Dataset& dataset() const { return *dataset_; }
  const std::shared_ptr<const Dataset>& dataset_ptr() const { return dataset_; }
  const std::vector<VariablePartition>& variables() const { return variables_; }
  const VariablePartition& variable(int k) const { return variables_.at(static_cast<size_t>(k)); }

  int total_parts() const { return total_parts_; }          // J
  int part_count(int variable) const;
  int part_offset(int variable) const { return offsets_.at(static_cast<size_t>(variable)); }
  int variable_of_part(int part) const { return part_variable_.at(static_cast<size_t>(part)); }
  int local_part(int part) const;  // index within its variable

  int part_of_numeric(int variable, double x) const;
  int part_of_token(int variable, std::string_view token) const;  // DomainError on unseen
  int part_of(const Observation& obs) const;

  std::int64_t part_observations(int part) const;  // n_.kj

  PartitionSet merge_parts(int variable, int j, int j2) const;
  PartitionSet move_value(int variable, int value, int to_group) const;

  // Human-readable part labels: `PetalWidth]0.8;1.65]`, `Class{setosa}`.
  std::string part_label(int part) const;
  // Inverse of part_label against this partition set (ParseError when the
  // label does not match any part).
  int parse_part_label(std::string_view label) const;

 private:
  void rebuild_index();

  std::shared_ptr<const Dataset> dataset_;
  std::vector<VariablePartition> variables_;
  std::vector<int> offsets_;        // -1 for excluded variables
  std::vector<int> part_variable_;  // global part -> variable
  std::vector<std::int64_t> part_obs_;
  int total_parts_ = 0;
};

// Boundaries at midpoints of the distinct-value gaps whose cumulative count
// is nearest to the equal-frequency targets; ties take the later gap.
// Returns at most min(parts, distinct count) parts.
IntervalPartition equal_frequency_intervals(int variable,
                                            const std::vector<double>& values,
                                            int parts);

// Values sorted by (count desc, token asc) and dealt to the lightest group,
// ties to the lowest group index.
ValueGrouping frequency_balanced_groups(int variable,
                                        const std::vector<std::int64_t>& counts,
                                        const std::vector<std::string>& tokens,
                                        int parts);

}  // namespace cocl
