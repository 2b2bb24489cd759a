#include <fstream>
#include <memory>
#include <numeric>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "doctest.h"

#include "cocl/error.hpp"
#include "cocl/ingest.hpp"
#include "cocl/partition.hpp"

using cocl::Dataset;
using cocl::IntervalPartition;
using cocl::PartitionSet;
using cocl::ValueGrouping;

namespace {

std::shared_ptr<const Dataset> iris() {
  static std::shared_ptr<const Dataset> data = [] {
    std::ifstream in(std::string(COCL_DATA_DIR) + "/iris.csv");
    REQUIRE(in.good());
    return std::make_shared<Dataset>(cocl::parse_wide_table(in));
  }();
  return data;
}

std::vector<double> column_values(const Dataset& data, const std::string& name) {
  const int k = data.schema().index_of(name);
  REQUIRE(k >= 0);
  std::vector<double> values;
  for (const cocl::Observation& o : data.observations()) {
    if (o.variable == k) values.push_back(o.number);
  }
  return values;
}

std::vector<std::int64_t> interval_load(const IntervalPartition& partition,
                                        const std::vector<double>& values) {
  std::vector<std::int64_t> load(static_cast<size_t>(partition.part_count()), 0);
  for (double x : values) ++load[static_cast<size_t>(partition.part_of(x))];
  return load;
}

std::shared_ptr<const Dataset> toy_mixed() {
  const std::string text =
      "#id,score,color,empty\n"
      "a,1.5,red,.\n"
      "b,2.5,red,.\n"
      "c,3.5,blue,.\n"
      "d,4.5,{green, blue},.\n";
  std::istringstream in(text);
  return std::make_shared<Dataset>(cocl::parse_wide_table(in));
}

}  // namespace

TEST_CASE("equal-frequency boundaries on the flower table") {
  const auto data = iris();
  // Cuts frozen by hand from the sorted distinct values of each column: the
  // best gap for targets 50 and 100 of 150, each boundary the midpoint of the
  // bracketing observed values.
  struct Expected {
    std::string column;
    std::vector<std::pair<double, double>> gaps;
    std::vector<std::int64_t> load;
  };
  const std::vector<Expected> cases = {
      {"SepalLength", {{5.4, 5.5}, {6.2, 6.3}}, {52, 47, 51}},
      {"SepalWidth", {{2.8, 2.9}, {3.1, 3.2}}, {47, 47, 56}},
      {"PetalLength", {{1.9, 3.0}, {4.8, 4.9}}, {50, 49, 51}},
      {"PetalWidth", {{0.6, 1.0}, {1.6, 1.7}}, {50, 52, 48}},
  };
  for (const Expected& expected : cases) {
    CAPTURE(expected.column);
    std::vector<double> boundaries;
    for (auto [lo, hi] : expected.gaps) boundaries.push_back(std::midpoint(lo, hi));
    const std::vector<double> values = column_values(*data, expected.column);
    const IntervalPartition partition = cocl::equal_frequency_intervals(0, values, 3);
    CHECK(partition.boundaries() == boundaries);
    CHECK(interval_load(partition, values) == expected.load);
  }
}

TEST_CASE("equal-frequency cut ties take the later gap") {
  // Counts 2,2,2 over values 1,2,3; the P=2 target of 3 observations is
  // equally far from cumulative 2 and 4, so the later gap wins.
  const std::vector<double> values = {1, 1, 2, 2, 3, 3};
  const IntervalPartition partition = cocl::equal_frequency_intervals(0, values, 2);
  CHECK(partition.boundaries() == std::vector<double>{2.5});
}

TEST_CASE("equal-frequency caps parts at the distinct count") {
  const std::vector<double> values = {1, 1, 2};
  const IntervalPartition partition = cocl::equal_frequency_intervals(0, values, 5);
  CHECK(partition.part_count() == 2);
  CHECK(partition.boundaries() == std::vector<double>{1.5});
  CHECK_THROWS_AS(cocl::equal_frequency_intervals(0, values, 0), cocl::ParameterError);
  CHECK_THROWS_AS(cocl::equal_frequency_intervals(0, {}, 2), cocl::ParameterError);
}

TEST_CASE("intervals are right-closed") {
  const IntervalPartition partition(0, {1.0, 2.0});
  CHECK(partition.part_of(0.5) == 0);
  CHECK(partition.part_of(1.0) == 0);
  CHECK(partition.part_of(1.0000001) == 1);
  CHECK(partition.part_of(2.0) == 1);
  CHECK(partition.part_of(99.0) == 2);

  const IntervalPartition merged = partition.merge_adjacent(0);
  CHECK(merged.boundaries() == std::vector<double>{2.0});
  CHECK_THROWS_AS(partition.merge_adjacent(2), cocl::StructuralError);
  CHECK_THROWS_AS(IntervalPartition(0, {2.0, 1.0}), cocl::ParameterError);
  CHECK_THROWS_AS(IntervalPartition(0, {1.0, 1.0}), cocl::ParameterError);
}

TEST_CASE("frequency-balanced groups deal heavy values first") {
  const ValueGrouping grouping =
      cocl::frequency_balanced_groups(0, {5, 3, 2}, {"a", "b", "c"}, 2);
  REQUIRE(grouping.group_count() == 2);
  CHECK(grouping.group(0) == std::vector<int>{0});
  CHECK(grouping.group(1) == std::vector<int>{1, 2});

  // Equal counts order by token text.
  const ValueGrouping tied = cocl::frequency_balanced_groups(0, {2, 2}, {"b", "a"}, 2);
  CHECK(tied.group_of(1) == 0);  // "a" placed first
  CHECK(tied.group_of(0) == 1);

  const ValueGrouping wide = cocl::frequency_balanced_groups(0, {1, 1}, {"x", "y"}, 9);
  CHECK(wide.group_count() == 2);
}

TEST_CASE("value grouping merge and move") {
  const ValueGrouping grouping(0, {{0, 1}, {2}, {3}}, 4);
  const ValueGrouping merged = grouping.merged(0, 2);
  REQUIRE(merged.group_count() == 2);
  CHECK(merged.group(0) == std::vector<int>{0, 1, 3});
  CHECK(merged.group(1) == std::vector<int>{2});

  const ValueGrouping moved = grouping.moved(2, 0);  // group {2} empties out
  REQUIRE(moved.group_count() == 2);
  CHECK(moved.group(0) == std::vector<int>{0, 1, 2});
  CHECK(moved.group(1) == std::vector<int>{3});
  CHECK(moved.group_of(3) == 1);

  CHECK_THROWS_AS(ValueGrouping(0, {{0}, {0, 1}}, 2), cocl::StructuralError);
  CHECK_THROWS_AS(ValueGrouping(0, {{0}}, 2), cocl::StructuralError);
  CHECK_THROWS_AS(grouping.moved(2, 1), cocl::StructuralError);
}

TEST_CASE("partition set indexes parts globally and skips empty variables") {
  const auto data = toy_mixed();
  const PartitionSet parts = PartitionSet::equal_frequency(data, 2);

  const int score = data->schema().index_of("score");
  const int color = data->schema().index_of("color");
  const int empty = data->schema().index_of("empty");

  CHECK(parts.variable(score).intervals.has_value());
  CHECK(parts.variable(color).groups.has_value());
  CHECK_FALSE(parts.variable(empty).intervals.has_value());
  CHECK_FALSE(parts.variable(empty).groups.has_value());
  CHECK(parts.part_offset(empty) == -1);
  CHECK(parts.total_parts() == 4);

  std::int64_t score_total = 0;
  for (int j = 0; j < parts.part_count(score); ++j) {
    score_total += parts.part_observations(parts.part_offset(score) + j);
  }
  CHECK(score_total == data->variable_observations(score));

  for (const cocl::Observation& o : data->observations()) {
    const int part = parts.part_of(o);
    CHECK(parts.variable_of_part(part) == o.variable);
  }
  CHECK_THROWS_AS(parts.part_of_token(color, "violet"), cocl::DomainError);
}

TEST_CASE("part labels round-trip") {
  const auto data = toy_mixed();
  const PartitionSet parts = PartitionSet::equal_frequency(data, 2);
  for (int p = 0; p < parts.total_parts(); ++p) {
    CHECK(parts.parse_part_label(parts.part_label(p)) == p);
  }
  const int score = data->schema().index_of("score");
  CHECK(parts.part_label(parts.part_offset(score)) == "score]-inf;3]");
  CHECK(parts.part_label(parts.part_offset(score) + 1) == "score]3;+inf[");
  CHECK_THROWS_AS(parts.parse_part_label("nonsense"), cocl::ParseError);
}

TEST_CASE("part merges respect adjacency for intervals") {
  const auto data = toy_mixed();
  const PartitionSet parts = PartitionSet::equal_frequency(data, 4);
  const int score = data->schema().index_of("score");
  REQUIRE(parts.part_count(score) == 4);
  CHECK_THROWS_AS(parts.merge_parts(score, 0, 2), cocl::StructuralError);

  const PartitionSet merged = parts.merge_parts(score, 1, 2);
  CHECK(merged.part_count(score) == 3);
  CHECK(merged.total_parts() == parts.total_parts() - 1);

  const int color = data->schema().index_of("color");
  const PartitionSet fused = parts.merge_parts(color, 0, parts.part_count(color) - 1);
  CHECK(fused.part_count(color) == parts.part_count(color) - 1);
}
