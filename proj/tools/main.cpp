// Command-line front end: fit a co-clustering model, inspect a saved one,
// or re-render report artifacts from a model file.

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "cocl/criterion.hpp"
#include "cocl/error.hpp"
#include "cocl/ingest.hpp"
#include "cocl/model.hpp"
#include "cocl/optimizer.hpp"
#include "cocl/report.hpp"

namespace fs = std::filesystem;

namespace {

struct InputOptions {
  std::string path;
  std::string format = "wide";
  std::string schema_path;
  std::string missing_token = ".";
  std::string id_column = "#id";
  std::string delimiter;
};

void add_input_flags(CLI::App* cmd, InputOptions* in, bool required) {
  // The dataset is positional on `fit` and an optional cross-check elsewhere.
  auto* input = cmd->add_option(required ? "input,-i,--input" : "-i,--input",
                                in->path, "input data table");
  if (required) input->required();
  cmd->add_option("--format", in->format, "input layout")
      ->check(CLI::IsMember({"wide", "long"}));
  cmd->add_option("--schema", in->schema_path,
                  "schema JSON (list of {name, kind}); skips inference");
  cmd->add_option("--missing-token", in->missing_token,
                  "cell token treated as missing");
  cmd->add_option("--id-column", in->id_column,
                  "wide-format instance id column name");
  cmd->add_option("--delimiter", in->delimiter,
                  "field delimiter (single character; default: sniff)");
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw cocl::ParseError("cannot open " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw cocl::ParseError("cannot write " + path.string());
  out << text;
}

cocl::ParseOptions parse_options(const InputOptions& in) {
  cocl::ParseOptions options;
  if (!in.delimiter.empty()) {
    if (in.delimiter.size() != 1)
      throw cocl::ParameterError("--delimiter must be a single character");
    options.delimiter = in.delimiter[0];
  }
  options.missing_token = in.missing_token;
  options.id_column = in.id_column;
  return options;
}

std::shared_ptr<const cocl::Dataset> load_dataset(const InputOptions& in) {
  const cocl::ParseOptions options = parse_options(in);
  std::optional<cocl::Schema> schema;
  if (!in.schema_path.empty())
    schema = cocl::schema_from_json(read_file(in.schema_path));
  const std::string text = read_file(in.path);
  if (in.format == "long") {
    std::istringstream stream(text);
    return std::make_shared<cocl::Dataset>(
        cocl::parse_long_observations(stream, schema, options));
  }
  if (!schema) {
    std::istringstream stream(text);
    const cocl::SchemaInference inference = cocl::infer_schema(stream, options);
    for (const std::string& warning : inference.warnings)
      std::cerr << "warning: " << warning << "\n";
    schema = inference.schema;
  }
  std::istringstream stream(text);
  return std::make_shared<cocl::Dataset>(
      cocl::parse_wide_table(stream, *schema, options));
}

int parse_int(const std::string& text, const char* what) {
  int value = 0;
  const char* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end)
    throw cocl::ParameterError(std::string("invalid integer '") + text +
                               "' in " + what);
  return value;
}

// Grid syntaxes: "3" | "2,3,5" | "2..10" | "2:pow2:128".
std::vector<int> parse_grid(const std::string& text) {
  std::vector<int> grid;
  if (auto pos = text.find(".."); pos != std::string::npos) {
    const int lo = parse_int(text.substr(0, pos), "--grid");
    const int hi = parse_int(text.substr(pos + 2), "--grid");
    if (lo < 1 || hi < lo)
      throw cocl::ParameterError("invalid --grid range " + text);
    for (int p = lo; p <= hi; ++p) grid.push_back(p);
  } else if (auto pow = text.find(":pow2:"); pow != std::string::npos) {
    const int lo = parse_int(text.substr(0, pow), "--grid");
    const int hi = parse_int(text.substr(pow + 6), "--grid");
    if (lo < 1 || hi < lo)
      throw cocl::ParameterError("invalid --grid range " + text);
    for (std::int64_t p = lo; p <= hi; p *= 2)
      grid.push_back(static_cast<int>(p));
  } else {
    std::stringstream stream(text);
    std::string item;
    while (std::getline(stream, item, ','))
      grid.push_back(parse_int(item, "--grid"));
    if (grid.empty()) throw cocl::ParameterError("empty --grid");
  }
  return grid;
}

// Optional JSON config mirroring OptimizerConfig; explicit CLI flags win.
void apply_config_json(const std::string& text, cocl::OptimizerConfig* config) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw cocl::ParseError(std::string("config JSON: ") + e.what());
  }
  if (!doc.is_object()) throw cocl::ParseError("config JSON: expected an object");
  for (const auto& [key, value] : doc.items()) {
    try {
      if (key == "grid") {
        config->partition_grid = value.get<std::vector<int>>();
      } else if (key == "seed") {
        config->seed = value.get<std::uint64_t>();
      } else if (key == "max_sweeps") {
        config->max_sweeps = value.get<int>();
      } else if (key == "min_improvement") {
        config->min_improvement = value.get<double>();
      } else if (key == "threads") {
        config->threads = value.get<int>();
      } else if (key == "agglomeration_exact_threshold") {
        config->agglomeration_exact_threshold = value.get<int>();
      } else if (key == "agglomeration_neighbors") {
        config->agglomeration_neighbors = value.get<int>();
      } else if (key == "numeric_part_factorials") {
        config->criterion.numeric_part_factorials = value.get<bool>();
      } else if (key == "stirling_exact_max_a") {
        config->criterion.stirling_exact_max_a = value.get<std::int64_t>();
      } else if (key == "stirling_exact_ratio") {
        config->criterion.stirling_exact_ratio = value.get<double>();
      } else {
        throw cocl::ParameterError("unknown config key '" + key + "'");
      }
    } catch (const nlohmann::json::exception& e) {
      throw cocl::ParseError("config JSON key '" + key + "': " + e.what());
    }
  }
}

std::string csv_field(const std::string& text) {
  if (text.find_first_of(",\"\n") == std::string::npos) return text;
  std::string quoted = "\"";
  for (char c : text) {
    if (c == '"') quoted += '"';
    quoted += c;
  }
  quoted += '"';
  return quoted;
}

std::string trace_csv(const std::vector<cocl::TraceEntry>& trace) {
  std::string out = "step,criterion,description\n";
  for (const cocl::TraceEntry& entry : trace) {
    out += std::to_string(entry.step);
    out += ',';
    out += cocl::format_double(entry.criterion);
    out += ',';
    out += csv_field(entry.description);
    out += '\n';
  }
  return out;
}

struct FitArgs {
  InputOptions input;
  std::string out_dir = ".";
  std::string grid;
  std::string config_path;
  bool quiet = false;
  std::optional<std::uint64_t> seed;
  std::optional<int> max_sweeps;
  std::optional<int> threads;
};

int run_fit(const FitArgs& args, std::string* stage) {
  *stage = "config";
  cocl::OptimizerConfig config;
  if (!args.config_path.empty())
    apply_config_json(read_file(args.config_path), &config);
  if (!args.grid.empty()) config.partition_grid = parse_grid(args.grid);
  if (args.seed) config.seed = *args.seed;
  if (args.max_sweeps) config.max_sweeps = *args.max_sweeps;
  if (args.threads) config.threads = *args.threads;

  *stage = "ingest";
  auto dataset = load_dataset(args.input);

  *stage = "fit";
  const cocl::FitResult result = cocl::fit(dataset, config);

  *stage = "report";
  const cocl::Combinatorics comb(config.criterion);
  fs::create_directories(args.out_dir);
  write_file(fs::path(args.out_dir) / "model.json",
             cocl::export_json(result.model, comb));
  if (!args.quiet) {
    write_file(fs::path(args.out_dir) / "trace.csv", trace_csv(result.trace));
    std::ostringstream summary;
    cocl::render_text_summary(cocl::cluster_summaries(result.model, comb), summary);
    write_file(fs::path(args.out_dir) / "summary.txt", summary.str());
    write_file(fs::path(args.out_dir) / "heatmap.svg",
               cocl::render_heatmap_svg(result.model));
  }

  for (const cocl::GridPoint& point : result.grid)
    std::printf("P=%d criterion=%s\n", point.partition_size,
                cocl::format_double(point.criterion).c_str());
  std::printf("P*=%d criterion=%s clusters=%dx%d parts=%d\n",
              result.chosen_partition_size,
              cocl::format_double(result.criterion.total).c_str(),
              result.model.instance_clusters(), result.model.part_clusters(),
              result.model.partitions().total_parts());
  return 0;
}

struct ModelArgs {
  std::string model_path;
  InputOptions input;
  std::string config_path;
  std::string out_dir = ".";
};

cocl::ImportedModel load_model(const ModelArgs& args, const cocl::Combinatorics& comb,
                               std::string* stage) {
  *stage = "ingest";
  std::shared_ptr<const cocl::Dataset> dataset;
  if (!args.input.path.empty()) dataset = load_dataset(args.input);
  *stage = "import";
  return cocl::import_json(read_file(args.model_path), comb, dataset);
}

cocl::Combinatorics make_comb(const std::string& config_path) {
  cocl::OptimizerConfig config;
  if (!config_path.empty()) apply_config_json(read_file(config_path), &config);
  return cocl::Combinatorics(config.criterion);
}

int run_inspect(const ModelArgs& args, std::string* stage) {
  *stage = "config";
  const cocl::Combinatorics comb = make_comb(args.config_path);
  const cocl::ImportedModel imported = load_model(args, comb, stage);

  *stage = "report";
  const cocl::CoclusterReport report =
      cocl::build_report(imported.stats, imported.instance_ids,
                         imported.instance_cluster, imported.part_labels,
                         imported.part_cluster, comb);
  cocl::render_text_summary(report, std::cout);

  *stage = "verify";
  if (imported.model) {
    const cocl::VerifyResult verdict = cocl::verify_counts(*imported.model);
    if (!verdict.ok) {
      std::cerr << "count verification failed: " << verdict.first_discrepancy
                << "\n";
      return 1;
    }
    std::printf("counts verified against %s\n", args.input.path.c_str());
  }
  const auto& stored = imported.stored_terms;
  const auto& fresh = imported.criterion;
  if (stored.size() != fresh.terms.size())
    throw cocl::SchemaError("stored criterion has a different term list");
  for (size_t t = 0; t < fresh.terms.size(); ++t) {
    if (stored[t].first != fresh.terms[t].first)
      throw cocl::SchemaError("stored criterion has a different term list");
    if (stored[t].second != fresh.terms[t].second) {
      std::cerr << "criterion mismatch at term " << fresh.terms[t].first
                << ": stored " << cocl::format_double(stored[t].second)
                << ", recomputed "
                << cocl::format_double(fresh.terms[t].second) << "\n";
      return 1;
    }
  }
  if (imported.stored_criterion != fresh.total) {
    std::cerr << "criterion mismatch at total: stored "
              << cocl::format_double(imported.stored_criterion)
              << ", recomputed " << cocl::format_double(fresh.total) << "\n";
    return 1;
  }
  std::printf("criterion verified: %s\n",
              cocl::format_double(fresh.total).c_str());
  return 0;
}

int run_report(const ModelArgs& args, std::string* stage) {
  *stage = "config";
  const cocl::Combinatorics comb = make_comb(args.config_path);
  const cocl::ImportedModel imported = load_model(args, comb, stage);

  *stage = "report";
  fs::create_directories(args.out_dir);
  const cocl::CoclusterReport report =
      cocl::build_report(imported.stats, imported.instance_ids,
                         imported.instance_cluster, imported.part_labels,
                         imported.part_cluster, comb);
  std::ostringstream summary;
  cocl::render_text_summary(report, summary);
  write_file(fs::path(args.out_dir) / "summary.txt", summary.str());
  write_file(fs::path(args.out_dir) / "heatmap.svg",
             cocl::render_heatmap_svg(imported.stats));
  std::printf("wrote summary.txt and heatmap.svg to %s\n",
              args.out_dir.c_str());
  return 0;
}

int exit_code(const std::exception& e) {
  if (dynamic_cast<const cocl::ParseError*>(&e)) return 2;
  if (dynamic_cast<const cocl::SchemaError*>(&e)) return 3;
  if (dynamic_cast<const cocl::ParameterError*>(&e)) return 4;
  if (dynamic_cast<const cocl::StructuralError*>(&e)) return 5;
  if (dynamic_cast<const cocl::DomainError*>(&e)) return 6;
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"co-clustering of mixed numeric/categorical tables by exact "
               "Bayesian model selection"};
  app.require_subcommand(1);

  FitArgs fit_args;
  CLI::App* fit_cmd =
      app.add_subcommand("fit", "fit a model and write its artifacts");
  add_input_flags(fit_cmd, &fit_args.input, /*required=*/true);
  fit_cmd->add_option("--grid", fit_args.grid,
                      "partition sizes: N | a,b,c | a..b | a:pow2:b");
  fit_cmd->add_option("--seed", fit_args.seed, "random seed (recorded; the "
                      "pipeline itself is deterministic)");
  fit_cmd->add_option("--max-sweeps", fit_args.max_sweeps,
                      "post-optimization sweep budget");
  fit_cmd->add_option("--threads", fit_args.threads,
                      "worker threads for move evaluation");
  fit_cmd->add_option("--config", fit_args.config_path,
                      "optimizer config JSON (CLI flags override it)");
  fit_cmd->add_option("-o,--out", fit_args.out_dir, "output directory");
  fit_cmd->add_flag("--quiet", fit_args.quiet, "write model.json only");

  ModelArgs inspect_args;
  CLI::App* inspect_cmd = app.add_subcommand(
      "inspect", "print a saved model and re-check its criterion");
  inspect_cmd->add_option("model,-m,--model", inspect_args.model_path, "model JSON")
      ->required();
  add_input_flags(inspect_cmd, &inspect_args.input, /*required=*/false);
  inspect_cmd->add_option("--config", inspect_args.config_path,
                          "optimizer config JSON used for the fit");

  ModelArgs report_args;
  CLI::App* report_cmd = app.add_subcommand(
      "report", "re-render summary.txt and heatmap.svg from a saved model");
  report_cmd->add_option("model,-m,--model", report_args.model_path, "model JSON")
      ->required();
  add_input_flags(report_cmd, &report_args.input, /*required=*/false);
  report_cmd->add_option("--config", report_args.config_path,
                         "optimizer config JSON used for the fit");
  report_cmd->add_option("-o,--out", report_args.out_dir, "output directory");

  CLI11_PARSE(app, argc, argv);

  std::string stage = "startup";
  try {
    if (fit_cmd->parsed()) return run_fit(fit_args, &stage);
    if (inspect_cmd->parsed()) return run_inspect(inspect_args, &stage);
    if (report_cmd->parsed()) return run_report(report_args, &stage);
  } catch (const std::exception& e) {
    std::cerr << "cocluster: " << stage << ": " << e.what() << "\n";
    return exit_code(e);
  }
  return 0;
}
