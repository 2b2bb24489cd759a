#include "cocl/partition.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>

#include "cocl/error.hpp"

namespace cocl {

IntervalPartition::IntervalPartition(int variable, std::vector<double> boundaries)
    : variable_(variable), boundaries_(std::move(boundaries)) {
  for (size_t i = 1; i < boundaries_.size(); ++i) {
    if (!(boundaries_[i - 1] < boundaries_[i])) {
      throw ParameterError("interval boundaries must be strictly increasing");
    }
  }
}

int IntervalPartition::part_of(double x) const {
  // Intervals are right-closed, so part j is the count of boundaries < x.
  return static_cast<int>(std::lower_bound(boundaries_.begin(), boundaries_.end(), x) -
                          boundaries_.begin());
}

IntervalPartition IntervalPartition::merge_adjacent(int j) const {
  if (j < 0 || j >= static_cast<int>(boundaries_.size())) {
    throw StructuralError("no boundary between parts " + std::to_string(j) + " and " +
                          std::to_string(j + 1));
  }
  std::vector<double> b = boundaries_;
  b.erase(b.begin() + j);
  return IntervalPartition(variable_, std::move(b));
}

ValueGrouping::ValueGrouping(int variable, std::vector<std::vector<int>> groups, int value_count)
    : variable_(variable), groups_(std::move(groups)), value_count_(value_count) {
  value_to_group_.assign(static_cast<size_t>(value_count_), -1);
  for (size_t g = 0; g < groups_.size(); ++g) {
    if (groups_[g].empty()) throw StructuralError("value groups must be nonempty");
    std::sort(groups_[g].begin(), groups_[g].end());
    for (int v : groups_[g]) {
      if (v < 0 || v >= value_count_) throw StructuralError("value id out of range");
      if (value_to_group_[static_cast<size_t>(v)] != -1) {
        throw StructuralError("value " + std::to_string(v) + " appears in two groups");
      }
      value_to_group_[static_cast<size_t>(v)] = static_cast<int>(g);
    }
  }
  for (int v = 0; v < value_count_; ++v) {
    if (value_to_group_[static_cast<size_t>(v)] == -1) {
      throw StructuralError("value " + std::to_string(v) + " is not in any group");
    }
  }
}

ValueGrouping ValueGrouping::merged(int j, int j2) const {
  if (j == j2 || j < 0 || j2 < 0 || j >= group_count() || j2 >= group_count()) {
    throw StructuralError("invalid group pair for merge");
  }
  if (j > j2) std::swap(j, j2);
  std::vector<std::vector<int>> groups;
  groups.reserve(groups_.size() - 1);
  for (int g = 0; g < group_count(); ++g) {
    if (g == j2) continue;
    groups.push_back(groups_[static_cast<size_t>(g)]);
    if (g == j) {
      auto& merged_group = groups.back();
      const auto& other = groups_[static_cast<size_t>(j2)];
      merged_group.insert(merged_group.end(), other.begin(), other.end());
    }
  }
  return ValueGrouping(variable_, std::move(groups), value_count_);
}

ValueGrouping ValueGrouping::moved(int value, int to_group) const {
  if (value < 0 || value >= value_count_) throw StructuralError("value id out of range");
  if (to_group < 0 || to_group >= group_count()) throw StructuralError("target group out of range");
  int from = group_of(value);
  if (from == to_group) throw StructuralError("value already in the target group");
  std::vector<std::vector<int>> groups;
  groups.reserve(groups_.size());
  for (int g = 0; g < group_count(); ++g) {
    std::vector<int> members;
    for (int v : groups_[static_cast<size_t>(g)]) {
      if (v != value) members.push_back(v);
    }
    if (g == to_group) members.push_back(value);
    if (!members.empty()) groups.push_back(std::move(members));
  }
  return ValueGrouping(variable_, std::move(groups), value_count_);
}

PartitionSet::PartitionSet(std::shared_ptr<const Dataset> dataset,
                           std::vector<VariablePartition> variables)
    : dataset_(std::move(dataset)), variables_(std::move(variables)) {
  if (!dataset_) throw ParameterError("partition set needs a dataset");
  if (variables_.size() != static_cast<size_t>(dataset_->schema().size())) {
    throw SchemaError("one partition slot per schema variable required");
  }
  for (int k = 0; k < dataset_->schema().size(); ++k) {
    const VariablePartition& vp = variables_[static_cast<size_t>(k)];
    bool modeled = dataset_->variable_modeled(k);
    bool numeric = dataset_->schema().at(k).kind == VarKind::Numeric;
    if (!modeled) {
      if (vp.intervals || vp.groups) {
        throw SchemaError("variable '" + dataset_->schema().at(k).name +
                          "' has no observations and cannot be partitioned");
      }
      continue;
    }
    if (numeric != vp.intervals.has_value() || numeric == vp.groups.has_value()) {
      throw SchemaError("partition type does not match kind of variable '" +
                        dataset_->schema().at(k).name + "'");
    }
    if (vp.groups && vp.groups->value_count() != dataset_->value_count(k)) {
      throw SchemaError("value grouping of '" + dataset_->schema().at(k).name +
                        "' does not cover the observed tokens");
    }
  }
  rebuild_index();
}

void PartitionSet::rebuild_index() {
  offsets_.assign(variables_.size(), -1);
  part_variable_.clear();
  total_parts_ = 0;
  for (size_t k = 0; k < variables_.size(); ++k) {
    const VariablePartition& vp = variables_[k];
    int count = 0;
    if (vp.intervals) count = vp.intervals->part_count();
    if (vp.groups) count = vp.groups->group_count();
    if (count == 0) continue;
    offsets_[k] = total_parts_;
    total_parts_ += count;
    part_variable_.insert(part_variable_.end(), static_cast<size_t>(count), static_cast<int>(k));
  }
  part_obs_.assign(static_cast<size_t>(total_parts_), 0);
  for (const Observation& o : dataset_->observations()) {
    ++part_obs_[static_cast<size_t>(part_of(o))];
  }
}

PartitionSet PartitionSet::equal_frequency(std::shared_ptr<const Dataset> dataset,
                                           int parts_per_variable) {
  if (!dataset) throw ParameterError("partition set needs a dataset");
  if (parts_per_variable < 1) throw ParameterError("parts per variable must be >= 1");
  std::vector<VariablePartition> vars(static_cast<size_t>(dataset->schema().size()));
  std::vector<std::vector<double>> numeric_values(vars.size());
  for (const Observation& o : dataset->observations()) {
    if (dataset->schema().at(o.variable).kind == VarKind::Numeric) {
      numeric_values[static_cast<size_t>(o.variable)].push_back(o.number);
    }
  }
  for (int k = 0; k < dataset->schema().size(); ++k) {
    if (!dataset->variable_modeled(k)) continue;
    if (dataset->schema().at(k).kind == VarKind::Numeric) {
      vars[static_cast<size_t>(k)].intervals =
          equal_frequency_intervals(k, numeric_values[static_cast<size_t>(k)], parts_per_variable);
    } else {
      std::vector<std::int64_t> counts(static_cast<size_t>(dataset->value_count(k)));
      for (int v = 0; v < dataset->value_count(k); ++v) {
        counts[static_cast<size_t>(v)] = dataset->value_observations(k, v);
      }
      vars[static_cast<size_t>(k)].groups =
          frequency_balanced_groups(k, counts, dataset->value_tokens(k), parts_per_variable);
    }
  }
  return PartitionSet(std::move(dataset), std::move(vars));
}

int PartitionSet::part_count(int variable) const {
  const VariablePartition& vp = variables_.at(static_cast<size_t>(variable));
  if (vp.intervals) return vp.intervals->part_count();
  if (vp.groups) return vp.groups->group_count();
  return 0;
}

int PartitionSet::local_part(int part) const {
  return part - offsets_.at(static_cast<size_t>(part_variable_.at(static_cast<size_t>(part))));
}

int PartitionSet::part_of_numeric(int variable, double x) const {
  const VariablePartition& vp = variables_.at(static_cast<size_t>(variable));
  if (!vp.intervals) throw ParameterError("variable has no interval partition");
  return offsets_[static_cast<size_t>(variable)] + vp.intervals->part_of(x);
}

int PartitionSet::part_of_token(int variable, std::string_view token) const {
  const VariablePartition& vp = variables_.at(static_cast<size_t>(variable));
  if (!vp.groups) throw ParameterError("variable has no value grouping");
  int v = dataset_->value_id(variable, token);
  if (v < 0) {
    throw DomainError("value '" + std::string(token) + "' was never observed for variable '" +
                      dataset_->schema().at(variable).name + "'");
  }
  return offsets_[static_cast<size_t>(variable)] + vp.groups->group_of(v);
}

int PartitionSet::part_of(const Observation& obs) const {
  const VariablePartition& vp = variables_.at(static_cast<size_t>(obs.variable));
  if (vp.intervals) return offsets_[static_cast<size_t>(obs.variable)] + vp.intervals->part_of(obs.number);
  if (vp.groups) return offsets_[static_cast<size_t>(obs.variable)] + vp.groups->group_of(obs.value);
  throw StructuralError("observation on a variable excluded from modeling");
}

std::int64_t PartitionSet::part_observations(int part) const {
  return part_obs_.at(static_cast<size_t>(part));
}

PartitionSet PartitionSet::merge_parts(int variable, int j, int j2) const {
  if (variable < 0 || variable >= static_cast<int>(variables_.size())) {
    throw StructuralError("variable index out of range");
  }
  const VariablePartition& vp = variables_[static_cast<size_t>(variable)];
  std::vector<VariablePartition> vars = variables_;
  if (vp.intervals) {
    if (j2 != j + 1) throw StructuralError("numeric parts must be adjacent to merge");
    vars[static_cast<size_t>(variable)].intervals = vp.intervals->merge_adjacent(j);
  } else if (vp.groups) {
    vars[static_cast<size_t>(variable)].groups = vp.groups->merged(j, j2);
  } else {
    throw StructuralError("variable is excluded from modeling");
  }
  return PartitionSet(dataset_, std::move(vars));
}

PartitionSet PartitionSet::move_value(int variable, int value, int to_group) const {
  if (variable < 0 || variable >= static_cast<int>(variables_.size())) {
    throw StructuralError("variable index out of range");
  }
  const VariablePartition& vp = variables_[static_cast<size_t>(variable)];
  if (!vp.groups) throw StructuralError("value moves need a categorical variable");
  std::vector<VariablePartition> vars = variables_;
  vars[static_cast<size_t>(variable)].groups = vp.groups->moved(value, to_group);
  return PartitionSet(dataset_, std::move(vars));
}

std::string PartitionSet::part_label(int part) const {
  int k = variable_of_part(part);
  int j = local_part(part);
  const VariablePartition& vp = variables_[static_cast<size_t>(k)];
  std::string label = dataset_->schema().at(k).name;
  if (vp.intervals) {
    const auto& b = vp.intervals->boundaries();
    label += j == 0 ? "]-inf" : "]" + format_double(b[static_cast<size_t>(j - 1)]);
    label += ';';
    label += j == static_cast<int>(b.size()) ? "+inf[" : format_double(b[static_cast<size_t>(j)]) + "]";
    return label;
  }
  label += '{';
  const auto& group = vp.groups->group(j);
  for (size_t i = 0; i < group.size(); ++i) {
    if (i) label += ", ";
    label += dataset_->value_tokens(k)[static_cast<size_t>(group[i])];
  }
  label += '}';
  return label;
}

int PartitionSet::parse_part_label(std::string_view label) const {
  for (int p = 0; p < total_parts_; ++p) {
    if (part_label(p) == label) return p;
  }
  throw ParseError("'" + std::string(label) + "' does not name a part");
}

IntervalPartition equal_frequency_intervals(int variable, const std::vector<double>& values,
                                            int parts) {
  if (parts < 1) throw ParameterError("parts must be >= 1");
  if (values.empty()) throw ParameterError("no values to partition");

  // Distinct values with cumulative observation counts.
  std::map<double, std::int64_t> hist;
  for (double x : values) ++hist[x];
  std::vector<double> distinct;
  std::vector<std::int64_t> cum;
  std::int64_t running = 0;
  for (auto [x, c] : hist) {
    running += c;
    distinct.push_back(x);
    cum.push_back(running);
  }
  const std::int64_t n = running;
  const int effective = std::min<int>(parts, static_cast<int>(distinct.size()));

  // For cut m (1-based) the target is m*n/P observations below the
  // boundary; the gap whose cumulative count is nearest wins, ties to the
  // later gap. Chosen gaps are deduplicated.
  std::vector<double> boundaries;
  for (int m = 1; m < effective; ++m) {
    double target = static_cast<double>(m) * static_cast<double>(n) / effective;
    size_t best_gap = 0;
    double best_dist = std::numeric_limits<double>::infinity();
    for (size_t g = 0; g + 1 < distinct.size(); ++g) {
      double dist = std::abs(static_cast<double>(cum[g]) - target);
      if (dist < best_dist || (dist == best_dist && g > best_gap)) {
        best_dist = dist;
        best_gap = g;
      }
    }
    double boundary = std::midpoint(distinct[best_gap], distinct[best_gap + 1]);
    if (boundaries.empty() || boundaries.back() < boundary) {
      boundaries.push_back(boundary);
    } else if (boundaries.back() > boundary) {
      // Targets increase with m, so cuts normally arrive sorted; keep the
      // invariant explicit anyway.
      boundaries.insert(std::lower_bound(boundaries.begin(), boundaries.end(), boundary),
                        boundary);
    }
  }
  boundaries.erase(std::unique(boundaries.begin(), boundaries.end()), boundaries.end());
  return IntervalPartition(variable, std::move(boundaries));
}

ValueGrouping frequency_balanced_groups(int variable, const std::vector<std::int64_t>& counts,
                                        const std::vector<std::string>& tokens, int parts) {
  if (parts < 1) throw ParameterError("parts must be >= 1");
  if (counts.empty()) throw ParameterError("no values to group");
  if (counts.size() != tokens.size()) throw ParameterError("counts and tokens must align");

  std::vector<int> order(counts.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    if (counts[static_cast<size_t>(a)] != counts[static_cast<size_t>(b)]) {
      return counts[static_cast<size_t>(a)] > counts[static_cast<size_t>(b)];
    }
    return tokens[static_cast<size_t>(a)] < tokens[static_cast<size_t>(b)];
  });

  const int groups_n = std::min<int>(parts, static_cast<int>(counts.size()));
  std::vector<std::vector<int>> groups(static_cast<size_t>(groups_n));
  std::vector<std::int64_t> load(static_cast<size_t>(groups_n), 0);
  for (int v : order) {
    int lightest = static_cast<int>(std::min_element(load.begin(), load.end()) - load.begin());
    groups[static_cast<size_t>(lightest)].push_back(v);
    load[static_cast<size_t>(lightest)] += counts[static_cast<size_t>(v)];
  }
  return ValueGrouping(variable, std::move(groups), static_cast<int>(counts.size()));
}

}  // namespace cocl
