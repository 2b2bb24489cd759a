#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace cocl {

enum class VarKind { Numeric, Categorical };

std::string_view to_string(VarKind kind);

struct Variable {
  std::string name;
  VarKind kind;
};

// Ordered variable list with unique names.
class Schema {
 public:
  Schema() = default;
  explicit Schema(std::vector<Variable> variables);

  const std::vector<Variable>& variables() const { return variables_; }
  int size() const { return static_cast<int>(variables_.size()); }
  int numeric_count() const;
  int categorical_count() const;
  int index_of(std::string_view name) const;  // -1 when absent
  const Variable& at(int k) const { return variables_.at(static_cast<size_t>(k)); }

 private:
  std::vector<Variable> variables_;
};

// One logged (instance, variable, value) interaction. Numeric observations
// carry `number`; categorical ones carry `value`, an index into the
// variable's token dictionary. A cell of the original table may contribute
// zero, one, or several observations.
struct Observation {
  std::int32_t instance;
  std::int32_t variable;
  double number;       // finite; meaningful for numeric variables only
  std::int32_t value;  // token id; meaningful for categorical variables only
};

// Immutable observation store. Safe for concurrent reads once built.
class Dataset {
 public:
  Dataset(Schema schema, std::vector<std::string> instance_ids,
          std::vector<std::vector<std::string>> value_tokens,
          std::vector<Observation> observations);

  const Schema& schema() const { return schema_; }
  int instance_count() const { return static_cast<int>(instance_ids_.size()); }                // I
  std::int64_t observation_count() const { return static_cast<std::int64_t>(obs_.size()); }   // N
  const std::vector<std::string>& instance_ids() const { return instance_ids_; }
  const std::vector<Observation>& observations() const { return obs_; }

  // V_k: number of distinct tokens observed (0 for numeric variables).
  int value_count(int variable) const;
  const std::vector<std::string>& value_tokens(int variable) const;
  int value_id(int variable, std::string_view token) const;  // -1 when unseen

  std::int64_t value_observations(int variable, int value) const;  // n_v
  std::int64_t instance_observations(int instance) const;          // n_i.
  std::int64_t variable_observations(int variable) const;

  // Variables with zero observations stay in the schema (stable indexing)
  // but are excluded from modeling.
  bool variable_modeled(int variable) const { return variable_observations(variable) > 0; }

 private:
  Schema schema_;
  std::vector<std::string> instance_ids_;
  std::vector<std::vector<std::string>> value_tokens_;  // per variable
  std::vector<Observation> obs_;
  // caches
  std::vector<std::vector<std::int64_t>> value_obs_;  // per variable, per token id
  std::vector<std::int64_t> instance_obs_;
  std::vector<std::int64_t> variable_obs_;
};

struct ParseOptions {
  char delimiter = '\0';            // '\0': sniff ',' vs '\t' from the first line
  std::string missing_token = ".";  // cells equal to this yield no observation
  std::string id_column = "#id";    // wide-format instance-id column name
};

struct SchemaInference {
  Schema schema;
  std::vector<std::string> warnings;  // e.g. all-missing columns
};

// A column is numeric iff every non-missing token parses as a finite real.
// All-missing columns become categorical with V_k = 0 and a warning.
SchemaInference infer_schema(std::istream& in, const ParseOptions& options = {});

// Wide format: header row, one row per instance, multi-value cells in
// braces `{a, b}`. Instance ids come from the id column when present,
// otherwise row numbers.
Dataset parse_wide_table(std::istream& in, const Schema& schema,
                         const ParseOptions& options = {});
Dataset parse_wide_table(std::istream& in, const ParseOptions& options = {});

// Long format: (instance, variable, value) triples, optional header line.
// Duplicates are preserved in file order.
Dataset parse_long_observations(std::istream& in,
                                const std::optional<Schema>& schema = {},
                                const ParseOptions& options = {});

// Emits `instance,variable,value` triples; numeric values are printed with
// shortest round-trip formatting so a re-parse reproduces the dataset.
void write_long(const Dataset& dataset, std::ostream& out);

// Schema file: JSON list of {"name": ..., "kind": "numeric"|"categorical"}.
Schema schema_from_json(const std::string& text);
std::string schema_to_json(const Schema& schema);

// Shortest round-trip decimal formatting for doubles (used for labels,
// exports and deterministic rendering).
std::string format_double(double x);

}  // namespace cocl
