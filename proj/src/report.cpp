#include "cocl/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>

#include "cocl/error.hpp"
#include "json.hpp"

namespace cocl {

using ordered_json = nlohmann::ordered_json;

double MutualInformation::total() const {
  double acc = 0.0;
  for (double c : contributions) acc += c;
  return acc;
}

MutualInformation mutual_information_matrix(const SufficientStats& s) {
  MutualInformation mi;
  mi.rows = s.instance_clusters;
  mi.cols = s.part_clusters;
  mi.contributions.assign(static_cast<size_t>(mi.rows) * mi.cols, 0.0);
  mi.empty.assign(static_cast<size_t>(mi.rows) * mi.cols, false);
  const double n = static_cast<double>(s.total_observations);
  for (int gu = 0; gu < mi.rows; ++gu) {
    for (int gp = 0; gp < mi.cols; ++gp) {
      const size_t idx = static_cast<size_t>(gu) * mi.cols + gp;
      const std::int64_t count = s.cells[idx];
      if (count == 0) {
        mi.empty[idx] = true;
        continue;
      }
      const double p = static_cast<double>(count) / n;
      const double p_u =
          static_cast<double>(s.instance_cluster_observations[static_cast<size_t>(gu)]) / n;
      const double p_p =
          static_cast<double>(s.part_cluster_observations[static_cast<size_t>(gp)]) / n;
      mi.contributions[idx] = p * std::log(p / (p_u * p_p));
    }
  }
  return mi;
}

MutualInformation mutual_information_matrix(const CoclusterModel& model) {
  return mutual_information_matrix(model.stats());
}

CoclusterReport build_report(const SufficientStats& stats,
                             const std::vector<std::string>& instance_ids,
                             const std::vector<int>& instance_cluster,
                             const std::vector<std::string>& part_labels,
                             const std::vector<int>& part_cluster, const Combinatorics& comb) {
  if (instance_ids.size() != instance_cluster.size() ||
      instance_ids.size() != static_cast<size_t>(stats.instance_count)) {
    throw ParameterError("instance ids and clusters must cover every instance");
  }
  if (part_labels.size() != part_cluster.size() ||
      part_labels.size() != static_cast<size_t>(stats.part_count)) {
    throw ParameterError("part labels and clusters must cover every part");
  }
  CoclusterReport report;
  report.criterion = evaluate_criterion(stats, comb);
  report.mi = mutual_information_matrix(stats);
  for (int g = 0; g < stats.instance_clusters; ++g) {
    InstanceClusterSummary s;
    s.cluster = g;
    s.size = stats.instance_cluster_sizes[static_cast<size_t>(g)];
    s.observations = stats.instance_cluster_observations[static_cast<size_t>(g)];
    for (size_t i = 0; i < instance_ids.size() && s.sample_instances.size() < 5; ++i) {
      if (instance_cluster[i] == g) s.sample_instances.push_back(instance_ids[i]);
    }
    report.instance_clusters.push_back(std::move(s));
  }
  for (int g = 0; g < stats.part_clusters; ++g) {
    PartClusterSummary s;
    s.cluster = g;
    s.size = stats.part_cluster_sizes[static_cast<size_t>(g)];
    s.observations = stats.part_cluster_observations[static_cast<size_t>(g)];
    for (size_t j = 0; j < part_labels.size(); ++j) {
      if (part_cluster[j] == g) {
        s.parts.push_back({static_cast<int>(j), part_labels[j],
                           stats.part_observations[j]});
      }
    }
    report.part_clusters.push_back(std::move(s));
  }
  return report;
}

namespace {

std::vector<std::string> model_part_labels(const CoclusterModel& model) {
  std::vector<std::string> labels;
  labels.reserve(static_cast<size_t>(model.partitions().total_parts()));
  for (int j = 0; j < model.partitions().total_parts(); ++j) {
    labels.push_back(model.partitions().part_label(j));
  }
  return labels;
}

}  // namespace

CoclusterReport cluster_summaries(const CoclusterModel& model, const Combinatorics& comb) {
  return build_report(model.stats(), model.dataset().instance_ids(),
                      model.instance_assignment(), model_part_labels(model),
                      model.part_assignment(), comb);
}

namespace {

ordered_json stats_to_json(const SufficientStats& s) {
  ordered_json j;
  j["total_observations"] = s.total_observations;
  j["instance_count"] = s.instance_count;
  j["part_count"] = s.part_count;
  j["numeric_modeled"] = s.numeric_modeled;
  j["instance_clusters"] = s.instance_clusters;
  j["part_clusters"] = s.part_clusters;
  j["cells"] = s.cells;
  j["instance_cluster_observations"] = s.instance_cluster_observations;
  j["instance_cluster_sizes"] = s.instance_cluster_sizes;
  j["part_cluster_observations"] = s.part_cluster_observations;
  j["part_cluster_sizes"] = s.part_cluster_sizes;
  j["instance_observations"] = s.instance_observations;
  j["part_observations"] = s.part_observations;
  j["numeric_part_observations"] = s.numeric_part_observations;
  j["categorical"] = ordered_json::array();
  for (const auto& cat : s.categorical) {
    ordered_json c;
    c["variable"] = cat.variable;
    c["parts"] = ordered_json::array();
    for (const auto& part : cat.parts) {
      c["parts"].push_back({{"observations", part.observations},
                            {"value_count", part.value_count}});
    }
    c["value_observations"] = cat.value_observations;
    j["categorical"].push_back(std::move(c));
  }
  return j;
}

SufficientStats stats_from_json(const ordered_json& j) {
  SufficientStats s;
  s.total_observations = j.at("total_observations").get<std::int64_t>();
  s.instance_count = j.at("instance_count").get<int>();
  s.part_count = j.at("part_count").get<int>();
  s.numeric_modeled = j.at("numeric_modeled").get<int>();
  s.instance_clusters = j.at("instance_clusters").get<int>();
  s.part_clusters = j.at("part_clusters").get<int>();
  s.cells = j.at("cells").get<std::vector<std::int64_t>>();
  s.instance_cluster_observations =
      j.at("instance_cluster_observations").get<std::vector<std::int64_t>>();
  s.instance_cluster_sizes = j.at("instance_cluster_sizes").get<std::vector<int>>();
  s.part_cluster_observations =
      j.at("part_cluster_observations").get<std::vector<std::int64_t>>();
  s.part_cluster_sizes = j.at("part_cluster_sizes").get<std::vector<int>>();
  s.instance_observations = j.at("instance_observations").get<std::vector<std::int64_t>>();
  s.part_observations = j.at("part_observations").get<std::vector<std::int64_t>>();
  s.numeric_part_observations =
      j.at("numeric_part_observations").get<std::vector<std::int64_t>>();
  for (const auto& c : j.at("categorical")) {
    SufficientStats::CategoricalVariable cat;
    cat.variable = c.at("variable").get<int>();
    for (const auto& part : c.at("parts")) {
      cat.parts.push_back({part.at("observations").get<std::int64_t>(),
                           part.at("value_count").get<int>()});
    }
    cat.value_observations = c.at("value_observations").get<std::vector<std::int64_t>>();
    s.categorical.push_back(std::move(cat));
  }
  return s;
}

}  // namespace

bool stats_equal(const SufficientStats& a, const SufficientStats& b) {
  if (a.total_observations != b.total_observations || a.instance_count != b.instance_count ||
      a.part_count != b.part_count || a.numeric_modeled != b.numeric_modeled ||
      a.instance_clusters != b.instance_clusters || a.part_clusters != b.part_clusters ||
      a.cells != b.cells ||
      a.instance_cluster_observations != b.instance_cluster_observations ||
      a.instance_cluster_sizes != b.instance_cluster_sizes ||
      a.part_cluster_observations != b.part_cluster_observations ||
      a.part_cluster_sizes != b.part_cluster_sizes ||
      a.instance_observations != b.instance_observations ||
      a.part_observations != b.part_observations ||
      a.numeric_part_observations != b.numeric_part_observations ||
      a.categorical.size() != b.categorical.size()) {
    return false;
  }
  for (size_t k = 0; k < a.categorical.size(); ++k) {
    const auto& ca = a.categorical[k];
    const auto& cb = b.categorical[k];
    if (ca.variable != cb.variable || ca.value_observations != cb.value_observations ||
        ca.parts.size() != cb.parts.size()) {
      return false;
    }
    for (size_t j = 0; j < ca.parts.size(); ++j) {
      if (ca.parts[j].observations != cb.parts[j].observations ||
          ca.parts[j].value_count != cb.parts[j].value_count) {
        return false;
      }
    }
  }
  return true;
}

std::string export_json(const CoclusterModel& model, const Combinatorics& comb) {
  const Dataset& data = model.dataset();
  const PartitionSet& ps = model.partitions();
  CriterionValue criterion = evaluate_criterion(model, comb);

  ordered_json doc;
  doc["format"] = "cocluster-model";
  doc["version"] = 1;
  {
    ordered_json c;
    c["total"] = criterion.total;
    c["prior"] = criterion.prior;
    c["likelihood"] = criterion.likelihood;
    ordered_json terms;
    for (const auto& [label, value] : criterion.terms) terms[label] = value;
    c["terms"] = std::move(terms);
    doc["criterion"] = std::move(c);
  }
  doc["schema"] = ordered_json::array();
  for (const Variable& v : data.schema().variables()) {
    doc["schema"].push_back({{"name", v.name}, {"kind", std::string(to_string(v.kind))}});
  }
  doc["instances"] = {{"ids", data.instance_ids()}, {"cluster", model.instance_assignment()}};
  doc["partitions"] = ordered_json::array();
  for (int k = 0; k < data.schema().size(); ++k) {
    const VariablePartition& vp = ps.variable(k);
    ordered_json p;
    p["name"] = data.schema().at(k).name;
    p["kind"] = std::string(to_string(data.schema().at(k).kind));
    p["modeled"] = vp.intervals.has_value() || vp.groups.has_value();
    if (vp.intervals) {
      p["boundaries"] = vp.intervals->boundaries();
    } else if (vp.groups) {
      ordered_json groups = ordered_json::array();
      for (const auto& group : vp.groups->groups()) {
        ordered_json tokens = ordered_json::array();
        for (int v : group) tokens.push_back(data.value_tokens(k)[static_cast<size_t>(v)]);
        groups.push_back(std::move(tokens));
      }
      p["groups"] = std::move(groups);
    }
    doc["partitions"].push_back(std::move(p));
  }
  {
    ordered_json labels = ordered_json::array();
    for (int j = 0; j < ps.total_parts(); ++j) labels.push_back(ps.part_label(j));
    doc["parts"] = {{"labels", std::move(labels)}, {"cluster", model.part_assignment()}};
  }
  doc["stats"] = stats_to_json(model.stats());
  return doc.dump(2) + "\n";
}

ImportedModel import_json(const std::string& text, const Combinatorics& comb,
                          std::shared_ptr<const Dataset> dataset) {
  ordered_json doc;
  try {
    doc = ordered_json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("model JSON: ") + e.what());
  }
  ImportedModel out;
  try {
    if (doc.at("format").get<std::string>() != "cocluster-model") {
      throw ParseError("not a cocluster model file");
    }
    if (doc.at("version").get<int>() != 1) {
      throw ParseError("unsupported model file version");
    }
    std::vector<Variable> vars;
    for (const auto& v : doc.at("schema")) {
      vars.push_back({v.at("name").get<std::string>(),
                      v.at("kind").get<std::string>() == "numeric" ? VarKind::Numeric
                                                                   : VarKind::Categorical});
    }
    out.schema = Schema(std::move(vars));
    out.stats = stats_from_json(doc.at("stats"));
    out.stored_criterion = doc.at("criterion").at("total").get<double>();
    for (const auto& [label, value] : doc.at("criterion").at("terms").items()) {
      out.stored_terms.emplace_back(label, value.get<double>());
    }
    out.part_labels = doc.at("parts").at("labels").get<std::vector<std::string>>();
    out.part_cluster = doc.at("parts").at("cluster").get<std::vector<int>>();
    out.instance_ids = doc.at("instances").at("ids").get<std::vector<std::string>>();
    out.instance_cluster = doc.at("instances").at("cluster").get<std::vector<int>>();
    out.criterion = evaluate_criterion(out.stats, comb);

    if (dataset) {
      if (dataset->instance_ids() != out.instance_ids) {
        throw SchemaError("dataset instances do not match the model");
      }
      std::vector<VariablePartition> partitions(static_cast<size_t>(out.schema.size()));
      const auto& parts_doc = doc.at("partitions");
      for (int k = 0; k < out.schema.size(); ++k) {
        const auto& p = parts_doc.at(static_cast<size_t>(k));
        if (p.at("name").get<std::string>() != dataset->schema().at(k).name) {
          throw SchemaError("dataset schema does not match the model");
        }
        if (!p.at("modeled").get<bool>()) continue;
        if (p.contains("boundaries")) {
          partitions[static_cast<size_t>(k)].intervals =
              IntervalPartition(k, p.at("boundaries").get<std::vector<double>>());
        } else {
          std::vector<std::vector<int>> groups;
          for (const auto& group : p.at("groups")) {
            std::vector<int> ids;
            for (const auto& token : group) {
              int v = dataset->value_id(k, token.get<std::string>());
              if (v < 0) {
                throw SchemaError("dataset is missing value '" + token.get<std::string>() +
                                  "' of variable '" + dataset->schema().at(k).name + "'");
              }
              ids.push_back(v);
            }
            groups.push_back(std::move(ids));
          }
          partitions[static_cast<size_t>(k)].groups =
              ValueGrouping(k, std::move(groups), dataset->value_count(k));
        }
      }
      CoclusterModel model = CoclusterModel::build(PartitionSet(dataset, std::move(partitions)),
                                                   out.instance_cluster, out.part_cluster);
      if (!stats_equal(model.stats(), out.stats)) {
        throw SchemaError("dataset observations do not match the model statistics");
      }
      out.model = std::move(model);
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("model JSON: ") + e.what());
  }
  return out;
}

namespace {

void svg_color(double t, char* buf, size_t size) {
  // t in [-1, 1]: negative fades white to blue, positive white to red.
  int r = 255, g = 255, b = 255;
  if (t > 0.0) {
    r = static_cast<int>(std::lround(255 + (178 - 255) * t));
    g = static_cast<int>(std::lround(255 + (24 - 255) * t));
    b = static_cast<int>(std::lround(255 + (43 - 255) * t));
  } else if (t < 0.0) {
    r = static_cast<int>(std::lround(255 + (33 - 255) * -t));
    g = static_cast<int>(std::lround(255 + (102 - 255) * -t));
    b = static_cast<int>(std::lround(255 + (172 - 255) * -t));
  }
  std::snprintf(buf, size, "rgb(%d,%d,%d)", r, g, b);
}

}  // namespace

std::string render_heatmap_svg(const SufficientStats& stats, const HeatmapOptions& options) {
  const MutualInformation mi = mutual_information_matrix(stats);
  const int cell = options.cell_size;
  const int label_w = 48;
  const int label_h = 20;
  const int width = label_w + mi.cols * cell + 1;
  const int height = label_h + mi.rows * cell + 1;

  double scale = 0.0;
  for (double c : mi.contributions) scale = std::max(scale, std::abs(c));

  std::string svg;
  char buf[256];
  std::snprintf(buf, sizeof buf,
                "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"%d\" height=\"%d\" "
                "viewBox=\"0 0 %d %d\" font-family=\"monospace\" font-size=\"12\">\n",
                width, height, width, height);
  svg += buf;
  for (int gp = 0; gp < mi.cols; ++gp) {
    std::snprintf(buf, sizeof buf,
                  "  <text x=\"%d\" y=\"%d\" text-anchor=\"middle\">p%d</text>\n",
                  label_w + gp * cell + cell / 2, label_h - 6, gp);
    svg += buf;
  }
  for (int gu = 0; gu < mi.rows; ++gu) {
    std::snprintf(buf, sizeof buf,
                  "  <text x=\"%d\" y=\"%d\" text-anchor=\"end\">u%d</text>\n", label_w - 6,
                  label_h + gu * cell + cell / 2 + 4, gu);
    svg += buf;
    for (int gp = 0; gp < mi.cols; ++gp) {
      const size_t idx = static_cast<size_t>(gu) * mi.cols + gp;
      char color[32] = "rgb(255,255,255)";
      double t = 0.0;
      if (!mi.empty[idx] && scale > 0.0) {
        t = mi.contributions[idx] / scale;
        svg_color(t, color, sizeof color);
      }
      std::snprintf(buf, sizeof buf,
                    "  <rect x=\"%d\" y=\"%d\" width=\"%d\" height=\"%d\" fill=\"%s\" "
                    "stroke=\"#cccccc\"><title>u%d x p%d: n=%lld, mi=%s</title></rect>\n",
                    label_w + gp * cell, label_h + gu * cell, cell, cell, color, gu, gp,
                    static_cast<long long>(stats.cells[idx]),
                    mi.empty[idx] ? "none" : format_double(mi.contributions[idx]).c_str());
      svg += buf;
      if (options.show_counts) {
        std::snprintf(buf, sizeof buf,
                      "  <text x=\"%d\" y=\"%d\" text-anchor=\"middle\" fill=\"%s\">%lld</text>\n",
                      label_w + gp * cell + cell / 2, label_h + gu * cell + cell / 2 + 4,
                      t > 0.65 ? "#ffffff" : "#000000",
                      static_cast<long long>(stats.cells[idx]));
        svg += buf;
      }
    }
  }
  svg += "</svg>\n";
  return svg;
}

std::string render_heatmap_svg(const CoclusterModel& model, const HeatmapOptions& options) {
  return render_heatmap_svg(model.stats(), options);
}

void render_text_summary(const CoclusterReport& report, std::ostream& out) {
  out << "criterion " << format_double(report.criterion.total) << " (prior "
      << format_double(report.criterion.prior) << ", likelihood "
      << format_double(report.criterion.likelihood) << ")\n";
  for (const auto& [label, value] : report.criterion.terms) {
    out << "  " << label << " " << format_double(value) << "\n";
  }
  out << "mutual information " << format_double(report.mi.total()) << "\n";
  out << "instance clusters: " << report.instance_clusters.size() << "\n";
  for (const auto& c : report.instance_clusters) {
    out << "  u" << c.cluster << ": " << c.size << " instances, " << c.observations
        << " observations";
    if (!c.sample_instances.empty()) {
      out << " (e.g.";
      for (const auto& id : c.sample_instances) out << " " << id;
      out << ")";
    }
    out << "\n";
  }
  out << "part clusters: " << report.part_clusters.size() << "\n";
  for (const auto& c : report.part_clusters) {
    out << "  p" << c.cluster << ": " << c.size << " parts, " << c.observations
        << " observations\n";
    for (const auto& part : c.parts) {
      out << "    " << part.label << " n=" << part.observations << "\n";
    }
  }
}

}  // namespace cocl
