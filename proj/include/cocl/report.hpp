#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "cocl/criterion.hpp"
#include "cocl/model.hpp"

namespace cocl {

// Per-cell mutual information contributions between the instance and part
// clusterings: p * ln(p / (p_u * p_p)) with p = N_cell / N. Empty cells
// contribute exactly 0 and are flagged so renderers can distinguish
// "no data" from "independent".
struct MutualInformation {
  int rows = 0;
  int cols = 0;
  std::vector<double> contributions;  // row-major
  std::vector<bool> empty;            // row-major, true when N_cell == 0

  double at(int gu, int gp) const {
    return contributions[static_cast<size_t>(gu) * static_cast<size_t>(cols) +
                         static_cast<size_t>(gp)];
  }
  bool is_empty(int gu, int gp) const {
    return empty[static_cast<size_t>(gu) * static_cast<size_t>(cols) + static_cast<size_t>(gp)];
  }
  double total() const;  // sum of contributions, >= 0
};

MutualInformation mutual_information_matrix(const SufficientStats& stats);
MutualInformation mutual_information_matrix(const CoclusterModel& model);

struct PartRecord {
  int part = 0;  // global part id
  std::string label;
  std::int64_t observations = 0;
};

struct InstanceClusterSummary {
  int cluster = 0;
  int size = 0;                    // m^u
  std::int64_t observations = 0;   // N^u
  std::vector<std::string> sample_instances;  // up to 5 ids
};

struct PartClusterSummary {
  int cluster = 0;
  int size = 0;                   // m^p
  std::int64_t observations = 0;  // N^p
  std::vector<PartRecord> parts;
};

struct CoclusterReport {
  CriterionValue criterion;
  MutualInformation mi;
  std::vector<InstanceClusterSummary> instance_clusters;
  std::vector<PartClusterSummary> part_clusters;
};

CoclusterReport cluster_summaries(const CoclusterModel& model, const Combinatorics& comb);

// Same report, but from detached pieces (an imported model without its
// dataset carries exactly these).
CoclusterReport build_report(const SufficientStats& stats,
                             const std::vector<std::string>& instance_ids,
                             const std::vector<int>& instance_cluster,
                             const std::vector<std::string>& part_labels,
                             const std::vector<int>& part_cluster, const Combinatorics& comb);

// Exact integer comparison of two statistics bundles.
bool stats_equal(const SufficientStats& a, const SufficientStats& b);

// Versioned JSON holding the partitions, both clusterings and the full
// sufficient statistics, so criterion and reports are reproducible without
// the dataset. Serialization is deterministic: fixed key order, shortest
// round-trip doubles.
std::string export_json(const CoclusterModel& model, const Combinatorics& comb);

struct ImportedModel {
  Schema schema;
  SufficientStats stats;
  double stored_criterion = 0.0;
  // Per-term values as written in the file, in file order.
  std::vector<std::pair<std::string, double>> stored_terms;
  CriterionValue criterion;  // recomputed from stats
  std::vector<std::string> part_labels;
  std::vector<int> part_cluster;
  std::vector<std::string> instance_ids;
  std::vector<int> instance_cluster;
  // Rebuilt against the dataset when one is supplied (and verified).
  std::optional<CoclusterModel> model;
};

ImportedModel import_json(const std::string& text, const Combinatorics& comb,
                          std::shared_ptr<const Dataset> dataset = nullptr);

struct HeatmapOptions {
  int cell_size = 48;
  bool show_counts = true;
};

// Standalone SVG of the mutual information matrix: white-to-red for
// positive contributions, white-to-blue for negative, plain white for
// empty cells, scaled symmetrically by the largest magnitude. Output is
// byte-deterministic for a given model.
std::string render_heatmap_svg(const SufficientStats& stats,
                               const HeatmapOptions& options = {});
std::string render_heatmap_svg(const CoclusterModel& model,
                               const HeatmapOptions& options = {});

void render_text_summary(const CoclusterReport& report, std::ostream& out);

}  // namespace cocl
