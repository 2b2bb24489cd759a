#include <cmath>
#include <memory>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "json.hpp"

#include "cocl/criterion.hpp"
#include "cocl/error.hpp"
#include "cocl/ingest.hpp"
#include "cocl/model.hpp"
#include "cocl/optimizer.hpp"
#include "cocl/partition.hpp"
#include "cocl/report.hpp"
#include "support/oracles.hpp"

using cocl::CoclusterModel;
using cocl::Combinatorics;
using cocl::Dataset;
using cocl::MutualInformation;
using cocl::PartitionSet;
using cocl::SufficientStats;

namespace {

using testsupport::stats_with_cells;

std::shared_ptr<const Dataset> mixed_fixture() {
  std::string text = "#id,x,color\n";
  const char* colors[] = {"red", "green", "blue"};
  for (int i = 0; i < 15; ++i) {
    text += "m" + std::to_string(i) + "," + std::to_string(i % 6) + "." +
            std::to_string((i * 3) % 10) + "," + colors[i % 3] + "\n";
  }
  std::istringstream in(text);
  return std::make_shared<Dataset>(cocl::parse_wide_table(in));
}

CoclusterModel fitted_model(std::shared_ptr<const Dataset> data) {
  cocl::OptimizerConfig config;
  config.partition_grid = {3};
  return cocl::fit(std::move(data), config).model;
}

}  // namespace

TEST_CASE("mutual information vanishes on an independent table") {
  // Cells are outer products of the margins, so every contribution is 0.
  const MutualInformation mi =
      cocl::mutual_information_matrix(stats_with_cells({{3, 9}, {6, 18}}));
  CHECK(std::abs(mi.total()) < 1e-12);
  for (double c : mi.contributions) CHECK(std::abs(c) < 1e-12);
  CHECK_FALSE(mi.is_empty(0, 0));
}

TEST_CASE("a diagonal two-by-two table carries ln 2 of mutual information") {
  const MutualInformation mi =
      cocl::mutual_information_matrix(stats_with_cells({{7, 0}, {0, 7}}));
  CHECK(mi.total() == doctest::Approx(std::log(2.0)).epsilon(1e-12));
  CHECK(mi.is_empty(0, 1));
  CHECK(mi.is_empty(1, 0));
  CHECK(mi.at(0, 1) == 0.0);
}

TEST_CASE("mutual information totals are never negative") {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 50; ++trial) {
    const int rows = 2 + static_cast<int>(rng() % 3);
    const int cols = 2 + static_cast<int>(rng() % 3);
    std::vector<std::vector<std::int64_t>> cells(static_cast<size_t>(rows));
    for (auto& row : cells) {
      row.resize(static_cast<size_t>(cols));
      for (auto& cell : row) cell = static_cast<std::int64_t>(rng() % 9);
    }
    std::int64_t total = 0;
    for (const auto& row : cells) {
      for (std::int64_t cell : row) total += cell;
    }
    if (total == 0) continue;
    CHECK(cocl::mutual_information_matrix(stats_with_cells(cells)).total() >= -1e-12);
  }
}

TEST_CASE("model and stats overloads agree") {
  auto data = mixed_fixture();
  const CoclusterModel model = fitted_model(data);
  const MutualInformation a = cocl::mutual_information_matrix(model);
  const MutualInformation b = cocl::mutual_information_matrix(model.stats());
  CHECK(a.rows == b.rows);
  CHECK(a.cols == b.cols);
  CHECK(a.contributions == b.contributions);
  CHECK(cocl::render_heatmap_svg(model) == cocl::render_heatmap_svg(model.stats()));
}

TEST_CASE("cluster summaries carry sizes, masses and sample ids") {
  auto data = mixed_fixture();
  const CoclusterModel model = fitted_model(data);
  const Combinatorics comb;
  const cocl::CoclusterReport report = cocl::cluster_summaries(model, comb);

  CHECK(report.criterion.total == cocl::evaluate_criterion(model, comb).total);
  REQUIRE(static_cast<int>(report.instance_clusters.size()) == model.instance_clusters());
  REQUIRE(static_cast<int>(report.part_clusters.size()) == model.part_clusters());

  std::int64_t instance_mass = 0;
  int instance_total = 0;
  for (const auto& cluster : report.instance_clusters) {
    CHECK(cluster.size >= 1);
    CHECK(cluster.observations == model.instance_cluster_observations(cluster.cluster));
    CHECK(static_cast<int>(cluster.sample_instances.size()) <= 5);
    CHECK(!cluster.sample_instances.empty());
    instance_mass += cluster.observations;
    instance_total += cluster.size;
  }
  CHECK(instance_mass == model.dataset().observation_count());
  CHECK(instance_total == model.dataset().instance_count());

  int parts_total = 0;
  for (const auto& cluster : report.part_clusters) {
    CHECK(cluster.size == static_cast<int>(cluster.parts.size()));
    std::int64_t mass = 0;
    for (const auto& part : cluster.parts) {
      CHECK(!part.label.empty());
      mass += part.observations;
    }
    CHECK(mass == cluster.observations);
    parts_total += cluster.size;
  }
  CHECK(parts_total == model.partitions().total_parts());

  std::ostringstream text;
  cocl::render_text_summary(report, text);
  CHECK(text.str().find("criterion") != std::string::npos);
}

TEST_CASE("export and import round-trip the criterion bit for bit") {
  auto data = mixed_fixture();
  const CoclusterModel model = fitted_model(data);
  const Combinatorics comb;

  const std::string json = cocl::export_json(model, comb);
  CHECK(cocl::export_json(model, comb) == json);  // byte-deterministic

  const cocl::ImportedModel imported = cocl::import_json(json, comb);
  const cocl::CriterionValue direct = cocl::evaluate_criterion(model, comb);
  CHECK(imported.stored_criterion == direct.total);
  CHECK(imported.criterion.total == direct.total);
  REQUIRE(imported.criterion.terms.size() == direct.terms.size());
  for (size_t t = 0; t < direct.terms.size(); ++t) {
    CHECK(imported.criterion.terms[t].first == direct.terms[t].first);
    CHECK(imported.criterion.terms[t].second == direct.terms[t].second);
  }
  CHECK(cocl::stats_equal(imported.stats, model.stats()));
  CHECK_FALSE(imported.model.has_value());
  CHECK(imported.instance_ids == model.dataset().instance_ids());

  // With the dataset at hand the full model comes back and verifies.
  const cocl::ImportedModel rebuilt = cocl::import_json(json, comb, data);
  REQUIRE(rebuilt.model.has_value());
  CHECK(cocl::verify_counts(*rebuilt.model).ok);
  CHECK(cocl::evaluate_criterion(*rebuilt.model, comb).total == direct.total);
  CHECK(rebuilt.model->instance_assignment() == model.instance_assignment());
  CHECK(rebuilt.model->part_assignment() == model.part_assignment());
}

TEST_CASE("imports reject damaged payloads") {
  auto data = mixed_fixture();
  const CoclusterModel model = fitted_model(data);
  const Combinatorics comb;
  const std::string json = cocl::export_json(model, comb);

  CHECK_THROWS_AS(static_cast<void>(cocl::import_json(json.substr(0, json.size() / 2), comb)),
                  cocl::ParseError);
  CHECK_THROWS_AS(static_cast<void>(cocl::import_json("[1, 2, 3]", comb)), cocl::ParseError);

  // A tampered cell count slips past a dataset-free import but shifts the
  // recomputed criterion off the stored one, and a dataset-backed import
  // rejects it outright.
  nlohmann::ordered_json doc = nlohmann::ordered_json::parse(json);
  doc["stats"]["cells"][0] = doc["stats"]["cells"][0].get<std::int64_t>() + 3;
  const std::string tampered = doc.dump(2) + "\n";
  const cocl::ImportedModel blind = cocl::import_json(tampered, comb);
  CHECK(blind.criterion.total != blind.stored_criterion);
  CHECK_THROWS_WITH_AS(static_cast<void>(cocl::import_json(tampered, comb, data)),
                       "dataset observations do not match the model statistics",
                       cocl::SchemaError);

  // The right structure under the wrong banner is refused.
  nlohmann::ordered_json banner = nlohmann::ordered_json::parse(json);
  banner["format"] = "something-else";
  CHECK_THROWS_WITH_AS(static_cast<void>(cocl::import_json(banner.dump(), comb)),
                       "not a cocluster model file", cocl::ParseError);
  nlohmann::ordered_json version = nlohmann::ordered_json::parse(json);
  version["version"] = 99;
  CHECK_THROWS_WITH_AS(static_cast<void>(cocl::import_json(version.dump(), comb)),
                       "unsupported model file version", cocl::ParseError);
}

TEST_CASE("imports cross-check a supplied dataset") {
  auto data = mixed_fixture();
  const CoclusterModel model = fitted_model(data);
  const Combinatorics comb;
  const std::string json = cocl::export_json(model, comb);

  // A dataset with one extra observation no longer matches the stats.
  std::string text = "#id,x,color\n";
  const char* colors[] = {"red", "green", "blue"};
  for (int i = 0; i < 15; ++i) {
    text += "m" + std::to_string(i) + "," + std::to_string(i % 6) + "." +
            std::to_string((i * 3) % 10) + "," + colors[i % 3] + "\n";
  }
  text += "m15,3.0,red\n";
  std::istringstream in(text);
  auto bigger = std::make_shared<Dataset>(cocl::parse_wide_table(in));
  CHECK_THROWS_AS(static_cast<void>(cocl::import_json(json, comb, bigger)), cocl::SchemaError);
}

TEST_CASE("heatmaps are deterministic well-formed svg") {
  auto data = mixed_fixture();
  const CoclusterModel model = fitted_model(data);
  const std::string svg = cocl::render_heatmap_svg(model);
  CHECK(svg == cocl::render_heatmap_svg(model));
  CHECK(svg.rfind("<svg", 0) != std::string::npos);
  CHECK(svg.find("</svg>") != std::string::npos);
  CHECK(svg.find("n=") != std::string::npos);

  cocl::HeatmapOptions small;
  small.cell_size = 12;
  small.show_counts = false;
  const std::string tiny = cocl::render_heatmap_svg(model, small);
  CHECK(tiny.size() < svg.size());
}
