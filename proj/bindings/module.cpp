// Python bindings: a thin layer over the C++ core. Datasets are opaque
// handles; results cross the boundary as plain dicts and strings.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "cocl/criterion.hpp"
#include "cocl/error.hpp"
#include "cocl/ingest.hpp"
#include "cocl/model.hpp"
#include "cocl/optimizer.hpp"
#include "cocl/report.hpp"

namespace py = pybind11;

namespace {

struct DatasetHandle {
  std::shared_ptr<const cocl::Dataset> data;
};

cocl::ParseOptions make_options(const std::string& missing_token,
                                const std::string& id_column,
                                const std::optional<std::string>& delimiter) {
  cocl::ParseOptions options;
  if (delimiter) {
    if (delimiter->size() != 1)
      throw cocl::ParameterError("delimiter must be a single character");
    options.delimiter = (*delimiter)[0];
  }
  options.missing_token = missing_token;
  options.id_column = id_column;
  return options;
}

DatasetHandle parse_wide(const std::string& text,
                         const std::optional<std::string>& schema_json,
                         const std::string& missing_token,
                         const std::string& id_column,
                         const std::optional<std::string>& delimiter) {
  const cocl::ParseOptions options =
      make_options(missing_token, id_column, delimiter);
  std::istringstream stream(text);
  if (schema_json) {
    const cocl::Schema schema = cocl::schema_from_json(*schema_json);
    return {std::make_shared<cocl::Dataset>(
        cocl::parse_wide_table(stream, schema, options))};
  }
  return {std::make_shared<cocl::Dataset>(
      cocl::parse_wide_table(stream, options))};
}

DatasetHandle parse_long(const std::string& text,
                         const std::optional<std::string>& schema_json,
                         const std::string& missing_token,
                         const std::optional<std::string>& delimiter) {
  const cocl::ParseOptions options =
      make_options(missing_token, "#id", delimiter);
  std::optional<cocl::Schema> schema;
  if (schema_json) schema = cocl::schema_from_json(*schema_json);
  std::istringstream stream(text);
  return {std::make_shared<cocl::Dataset>(
      cocl::parse_long_observations(stream, schema, options))};
}

py::dict criterion_dict(const cocl::CriterionValue& value) {
  py::dict terms;
  for (const auto& [label, term] : value.terms) terms[py::str(label)] = term;
  py::dict out;
  out["total"] = value.total;
  out["prior"] = value.prior;
  out["likelihood"] = value.likelihood;
  out["terms"] = terms;
  return out;
}

std::vector<std::string> part_labels_of(const cocl::PartitionSet& partitions) {
  std::vector<std::string> labels;
  labels.reserve(static_cast<size_t>(partitions.total_parts()));
  for (int j = 0; j < partitions.total_parts(); ++j)
    labels.push_back(partitions.part_label(j));
  return labels;
}

py::dict fit(const DatasetHandle& dataset, const std::vector<int>& grid,
             std::uint64_t seed, int max_sweeps, int threads,
             double min_improvement, bool numeric_part_factorials) {
  cocl::OptimizerConfig config;
  config.partition_grid = grid;
  config.seed = seed;
  config.max_sweeps = max_sweeps;
  config.threads = threads;
  config.min_improvement = min_improvement;
  config.criterion.numeric_part_factorials = numeric_part_factorials;

  const cocl::FitResult result = [&] {
    py::gil_scoped_release release;
    return cocl::fit(dataset.data, config);
  }();

  const cocl::Combinatorics comb(config.criterion);
  py::dict out;
  out["criterion"] = criterion_dict(result.criterion);
  out["chosen_partition_size"] = result.chosen_partition_size;
  out["instance_clusters"] = result.model.instance_clusters();
  out["part_clusters"] = result.model.part_clusters();
  out["total_parts"] = result.model.partitions().total_parts();
  out["instance_ids"] = dataset.data->instance_ids();
  out["instance_assignment"] = result.model.instance_assignment();
  out["part_assignment"] = result.model.part_assignment();
  out["part_labels"] = part_labels_of(result.model.partitions());
  py::list grid_points;
  for (const cocl::GridPoint& point : result.grid)
    grid_points.append(py::make_tuple(point.partition_size, point.criterion));
  out["grid"] = grid_points;
  py::list trace;
  for (const cocl::TraceEntry& entry : result.trace)
    trace.append(py::make_tuple(entry.step, entry.criterion, entry.description));
  out["trace"] = trace;
  out["stage1_merges"] = result.stage1_merges;
  out["stage2_moves"] = result.stage2_moves;
  out["model_json"] = cocl::export_json(result.model, comb);
  std::ostringstream summary;
  cocl::render_text_summary(cocl::cluster_summaries(result.model, comb), summary);
  out["summary"] = summary.str();
  out["heatmap_svg"] = cocl::render_heatmap_svg(result.model);
  return out;
}

py::dict import_model(const std::string& model_json,
                      const std::optional<DatasetHandle>& dataset,
                      bool numeric_part_factorials) {
  cocl::CriterionSettings settings;
  settings.numeric_part_factorials = numeric_part_factorials;
  const cocl::Combinatorics comb(settings);
  const cocl::ImportedModel imported = cocl::import_json(
      model_json, comb, dataset ? dataset->data : nullptr);

  py::dict out;
  out["criterion"] = criterion_dict(imported.criterion);
  out["stored_total"] = imported.stored_criterion;
  out["instance_clusters"] = imported.stats.instance_clusters;
  out["part_clusters"] = imported.stats.part_clusters;
  out["instance_ids"] = imported.instance_ids;
  out["instance_cluster"] = imported.instance_cluster;
  out["part_labels"] = imported.part_labels;
  out["part_cluster"] = imported.part_cluster;
  out["verified_against_dataset"] = imported.model.has_value();
  const cocl::CoclusterReport report =
      cocl::build_report(imported.stats, imported.instance_ids,
                         imported.instance_cluster, imported.part_labels,
                         imported.part_cluster, comb);
  std::ostringstream summary;
  cocl::render_text_summary(report, summary);
  out["summary"] = summary.str();
  out["heatmap_svg"] = cocl::render_heatmap_svg(imported.stats);
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "co-clustering of mixed numeric/categorical data by exact "
            "Bayesian model selection";
  m.attr("__version__") = "0.1.0";

  const auto base = py::register_exception<cocl::Error>(m, "CoclusterError");
  py::register_exception<cocl::ParseError>(m, "ParseError", base);
  py::register_exception<cocl::SchemaError>(m, "SchemaError", base);
  py::register_exception<cocl::ParameterError>(m, "ParameterError", base);
  py::register_exception<cocl::StructuralError>(m, "StructuralError", base);
  py::register_exception<cocl::DomainError>(m, "DomainError", base);

  py::class_<DatasetHandle>(m, "Dataset")
      .def_property_readonly(
          "instance_count",
          [](const DatasetHandle& d) { return d.data->instance_count(); })
      .def_property_readonly(
          "observation_count",
          [](const DatasetHandle& d) { return d.data->observation_count(); })
      .def_property_readonly(
          "instance_ids",
          [](const DatasetHandle& d) { return d.data->instance_ids(); })
      .def_property_readonly("variables",
                             [](const DatasetHandle& d) {
                               py::list out;
                               for (const cocl::Variable& v :
                                    d.data->schema().variables())
                                 out.append(py::make_tuple(
                                     v.name, std::string(to_string(v.kind))));
                               return out;
                             })
      .def("to_long",
           [](const DatasetHandle& d) {
             std::ostringstream out;
             cocl::write_long(*d.data, out);
             return out.str();
           })
      .def("__repr__", [](const DatasetHandle& d) {
        std::ostringstream out;
        out << "Dataset(" << d.data->instance_count() << " instances, "
            << d.data->schema().size() << " variables, "
            << d.data->observation_count() << " observations)";
        return out.str();
      });

  m.def("parse_wide", &parse_wide, py::arg("text"),
        py::arg("schema_json") = py::none(), py::arg("missing_token") = ".",
        py::arg("id_column") = "#id", py::arg("delimiter") = py::none(),
        "Parse a wide table (header row, one row per instance).");
  m.def("parse_long", &parse_long, py::arg("text"),
        py::arg("schema_json") = py::none(), py::arg("missing_token") = ".",
        py::arg("delimiter") = py::none(),
        "Parse (instance, variable, value) triples.");
  m.def("fit", &fit, py::arg("dataset"), py::arg("grid") = std::vector<int>{},
        py::arg("seed") = 0, py::arg("max_sweeps") = 1000,
        py::arg("threads") = 1, py::arg("min_improvement") = 1e-9,
        py::arg("numeric_part_factorials") = false,
        "Fit a co-clustering model; returns a dict of results and artifacts.");
  m.def("import_model", &import_model, py::arg("model_json"),
        py::arg("dataset") = py::none(),
        py::arg("numeric_part_factorials") = false,
        "Load a model JSON, recompute its criterion, and optionally verify "
        "it against a dataset.");
}
