#include "cocl/ingest.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>
#include <unordered_map>

#include "cocl/error.hpp"
#include "json.hpp"

namespace cocl {

namespace {

std::string trim(std::string_view s) {
  size_t b = 0;
  size_t e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

void strip_cr(std::string& line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
}

char sniff_delimiter(const std::string& first_line, const ParseOptions& options) {
  if (options.delimiter != '\0') return options.delimiter;
  auto tabs = std::count(first_line.begin(), first_line.end(), '\t');
  auto commas = std::count(first_line.begin(), first_line.end(), ',');
  return tabs > commas ? '\t' : ',';
}

std::vector<std::string> split_fields(const std::string& line, char delim) {
  std::vector<std::string> out;
  std::string field;
  int braces = 0;  // delimiters inside {a, b} cells belong to the cell
  for (char c : line) {
    if (c == '{') ++braces;
    if (c == '}' && braces > 0) --braces;
    if (c == delim && braces == 0) {
      out.push_back(trim(field));
      field.clear();
    } else {
      field.push_back(c);
    }
  }
  out.push_back(trim(field));
  return out;
}

// Splits a wide-table cell into tokens; `{a, b}` lists one token per entry.
std::vector<std::string> cell_tokens(const std::string& cell, const std::string& missing) {
  std::vector<std::string> out;
  std::string body = trim(cell);
  if (body.empty() || body == missing) return out;
  if (body.front() == '{' && body.back() == '}') {
    std::string inner = body.substr(1, body.size() - 2);
    std::string token;
    for (char c : inner) {
      if (c == ',') {
        std::string t = trim(token);
        if (!t.empty() && t != missing) out.push_back(std::move(t));
        token.clear();
      } else {
        token.push_back(c);
      }
    }
    std::string t = trim(token);
    if (!t.empty() && t != missing) out.push_back(std::move(t));
    return out;
  }
  out.push_back(std::move(body));
  return out;
}

bool parse_number(std::string_view token, double& out) {
  const char* first = token.data();
  const char* last = token.data() + token.size();
  auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc{} && ptr == last && std::isfinite(out);
}

struct TableLines {
  char delimiter = ',';
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

TableLines read_table(std::istream& in, const ParseOptions& options) {
  TableLines table;
  std::string line;
  bool first = true;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    strip_cr(line);
    if (line.empty()) continue;
    if (first) {
      table.delimiter = sniff_delimiter(line, options);
      table.header = split_fields(line, table.delimiter);
      first = false;
      continue;
    }
    auto fields = split_fields(line, table.delimiter);
    if (fields.size() != table.header.size()) {
      throw ParseError("line " + std::to_string(line_no) + ": expected " +
                       std::to_string(table.header.size()) + " fields, got " +
                       std::to_string(fields.size()));
    }
    table.rows.push_back(std::move(fields));
  }
  if (first) throw ParseError("empty input: no header line");
  return table;
}

VarKind parse_kind(std::string_view text) {
  if (text == "numeric") return VarKind::Numeric;
  if (text == "categorical") return VarKind::Categorical;
  throw SchemaError("unknown variable kind '" + std::string(text) + "'");
}

}  // namespace

std::string_view to_string(VarKind kind) {
  return kind == VarKind::Numeric ? "numeric" : "categorical";
}

Schema::Schema(std::vector<Variable> variables) : variables_(std::move(variables)) {
  for (size_t i = 0; i < variables_.size(); ++i) {
    if (variables_[i].name.empty()) throw SchemaError("variable name must not be empty");
    for (size_t j = i + 1; j < variables_.size(); ++j) {
      if (variables_[i].name == variables_[j].name) {
        throw SchemaError("duplicate variable name '" + variables_[i].name + "'");
      }
    }
  }
}

int Schema::numeric_count() const {
  return static_cast<int>(std::count_if(variables_.begin(), variables_.end(),
                                        [](const Variable& v) { return v.kind == VarKind::Numeric; }));
}

int Schema::categorical_count() const {
  return size() - numeric_count();
}

int Schema::index_of(std::string_view name) const {
  for (size_t i = 0; i < variables_.size(); ++i) {
    if (variables_[i].name == name) return static_cast<int>(i);
  }
  return -1;
}

Dataset::Dataset(Schema schema, std::vector<std::string> instance_ids,
                 std::vector<std::vector<std::string>> value_tokens,
                 std::vector<Observation> observations)
    : schema_(std::move(schema)),
      instance_ids_(std::move(instance_ids)),
      value_tokens_(std::move(value_tokens)),
      obs_(std::move(observations)) {
  if (value_tokens_.size() != static_cast<size_t>(schema_.size())) {
    throw SchemaError("token dictionaries do not match the schema");
  }
  value_obs_.resize(value_tokens_.size());
  for (size_t k = 0; k < value_tokens_.size(); ++k) {
    value_obs_[k].assign(value_tokens_[k].size(), 0);
  }
  instance_obs_.assign(instance_ids_.size(), 0);
  variable_obs_.assign(static_cast<size_t>(schema_.size()), 0);
  for (const Observation& o : obs_) {
    if (o.instance < 0 || o.instance >= instance_count()) {
      throw SchemaError("observation references unknown instance index");
    }
    if (o.variable < 0 || o.variable >= schema_.size()) {
      throw SchemaError("observation references unknown variable index");
    }
    if (schema_.at(o.variable).kind == VarKind::Categorical) {
      if (o.value < 0 || static_cast<size_t>(o.value) >= value_tokens_[o.variable].size()) {
        throw SchemaError("observation references unknown value id");
      }
      ++value_obs_[o.variable][o.value];
    }
    ++instance_obs_[o.instance];
    ++variable_obs_[o.variable];
  }
}

int Dataset::value_count(int variable) const {
  return static_cast<int>(value_tokens_.at(static_cast<size_t>(variable)).size());
}

const std::vector<std::string>& Dataset::value_tokens(int variable) const {
  return value_tokens_.at(static_cast<size_t>(variable));
}

int Dataset::value_id(int variable, std::string_view token) const {
  const auto& tokens = value_tokens_.at(static_cast<size_t>(variable));
  for (size_t v = 0; v < tokens.size(); ++v) {
    if (tokens[v] == token) return static_cast<int>(v);
  }
  return -1;
}

std::int64_t Dataset::value_observations(int variable, int value) const {
  return value_obs_.at(static_cast<size_t>(variable)).at(static_cast<size_t>(value));
}

std::int64_t Dataset::instance_observations(int instance) const {
  return instance_obs_.at(static_cast<size_t>(instance));
}

std::int64_t Dataset::variable_observations(int variable) const {
  return variable_obs_.at(static_cast<size_t>(variable));
}

SchemaInference infer_schema(std::istream& in, const ParseOptions& options) {
  TableLines table = read_table(in, options);
  SchemaInference out;
  std::vector<Variable> vars;
  for (size_t c = 0; c < table.header.size(); ++c) {
    const std::string& name = table.header[c];
    if (name == options.id_column) continue;
    bool numeric = true;
    bool any = false;
    for (const auto& row : table.rows) {
      for (const std::string& token : cell_tokens(row[c], options.missing_token)) {
        any = true;
        double x;
        if (!parse_number(token, x)) {
          numeric = false;
          break;
        }
      }
      if (!numeric) break;
    }
    if (!any) {
      out.warnings.push_back("column '" + name + "' has no observed values");
      vars.push_back({name, VarKind::Categorical});
    } else {
      vars.push_back({name, numeric ? VarKind::Numeric : VarKind::Categorical});
    }
  }
  out.schema = Schema(std::move(vars));
  return out;
}

namespace {

Dataset build_wide(const TableLines& table, const Schema& schema, const ParseOptions& options) {
  int id_col = -1;
  std::vector<int> column_var(table.header.size(), -1);
  std::vector<bool> seen(static_cast<size_t>(schema.size()), false);
  for (size_t c = 0; c < table.header.size(); ++c) {
    if (table.header[c] == options.id_column) {
      id_col = static_cast<int>(c);
      continue;
    }
    int k = schema.index_of(table.header[c]);
    if (k < 0) throw SchemaError("header column '" + table.header[c] + "' is not in the schema");
    if (seen[static_cast<size_t>(k)]) {
      throw SchemaError("header repeats column '" + table.header[c] + "'");
    }
    seen[static_cast<size_t>(k)] = true;
    column_var[c] = k;
  }
  for (int k = 0; k < schema.size(); ++k) {
    if (!seen[static_cast<size_t>(k)]) {
      throw SchemaError("schema variable '" + schema.at(k).name + "' is missing from the header");
    }
  }

  std::vector<std::string> instance_ids;
  std::vector<std::vector<std::string>> tokens(static_cast<size_t>(schema.size()));
  std::vector<std::unordered_map<std::string, int>> token_ids(static_cast<size_t>(schema.size()));
  std::vector<Observation> obs;

  for (size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    instance_ids.push_back(id_col >= 0 ? row[static_cast<size_t>(id_col)]
                                       : std::to_string(r + 1));
    for (size_t c = 0; c < row.size(); ++c) {
      int k = column_var[c];
      if (k < 0) continue;
      for (const std::string& token : cell_tokens(row[c], options.missing_token)) {
        Observation o{static_cast<std::int32_t>(r), static_cast<std::int32_t>(k), 0.0, -1};
        if (schema.at(k).kind == VarKind::Numeric) {
          if (!parse_number(token, o.number)) {
            throw ParseError("row " + std::to_string(r + 2) + ", column '" + schema.at(k).name +
                             "': '" + token + "' is not a finite number");
          }
        } else {
          auto [it, inserted] = token_ids[static_cast<size_t>(k)].try_emplace(
              token, static_cast<int>(tokens[static_cast<size_t>(k)].size()));
          if (inserted) tokens[static_cast<size_t>(k)].push_back(token);
          o.value = it->second;
        }
        obs.push_back(o);
      }
    }
  }
  return Dataset(schema, std::move(instance_ids), std::move(tokens), std::move(obs));
}

}  // namespace

Dataset parse_wide_table(std::istream& in, const Schema& schema, const ParseOptions& options) {
  return build_wide(read_table(in, options), schema, options);
}

Dataset parse_wide_table(std::istream& in, const ParseOptions& options) {
  std::string text(std::istreambuf_iterator<char>(in), {});
  std::istringstream first(text);
  SchemaInference inferred = infer_schema(first, options);
  std::istringstream second(text);
  return build_wide(read_table(second, options), inferred.schema, options);
}

Dataset parse_long_observations(std::istream& in, const std::optional<Schema>& schema,
                                const ParseOptions& options) {
  std::string line;
  std::vector<std::array<std::string, 3>> triples;
  char delim = options.delimiter;
  size_t line_no = 0;
  bool first = true;
  while (std::getline(in, line)) {
    ++line_no;
    strip_cr(line);
    if (line.empty()) continue;
    if (first && delim == '\0') delim = sniff_delimiter(line, options);
    auto fields = split_fields(line, delim);
    if (fields.size() != 3) {
      throw ParseError("line " + std::to_string(line_no) +
                       ": long format needs exactly 3 fields, got " +
                       std::to_string(fields.size()));
    }
    if (first) {
      first = false;
      // Optional header: skip a literal instance/variable/value line.
      auto lower = [](std::string s) {
        std::transform(s.begin(), s.end(), s.begin(),
                       [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
        return s;
      };
      if (lower(fields[0]) == "instance" && lower(fields[1]) == "variable" &&
          lower(fields[2]) == "value") {
        continue;
      }
    }
    triples.push_back({std::move(fields[0]), std::move(fields[1]), std::move(fields[2])});
  }
  if (triples.empty()) throw ParseError("empty input: no observation triples");

  // Variable order: schema order when given, else first appearance.
  std::vector<Variable> vars;
  std::unordered_map<std::string, int> var_ids;
  if (schema) {
    for (const Variable& v : schema->variables()) {
      var_ids.emplace(v.name, static_cast<int>(vars.size()));
      vars.push_back(v);
    }
  }
  std::vector<std::string> instance_ids;
  std::unordered_map<std::string, int> instance_index;
  for (const auto& t : triples) {
    if (instance_index.try_emplace(t[0], static_cast<int>(instance_ids.size())).second) {
      instance_ids.push_back(t[0]);
    }
    if (!var_ids.count(t[1])) {
      if (schema) throw SchemaError("variable '" + t[1] + "' is not in the schema");
      var_ids.emplace(t[1], static_cast<int>(vars.size()));
      vars.push_back({t[1], VarKind::Numeric});  // provisional, settled below
    }
  }
  if (!schema) {
    // A variable is numeric iff every value parses as a finite real.
    for (const auto& t : triples) {
      Variable& v = vars[static_cast<size_t>(var_ids[t[1]])];
      double x;
      if (v.kind == VarKind::Numeric && !parse_number(t[2], x)) v.kind = VarKind::Categorical;
    }
  }

  Schema final_schema{vars};
  std::vector<std::vector<std::string>> tokens(static_cast<size_t>(final_schema.size()));
  std::vector<std::unordered_map<std::string, int>> token_ids(
      static_cast<size_t>(final_schema.size()));
  std::vector<Observation> obs;
  for (const auto& t : triples) {
    int k = var_ids[t[1]];
    Observation o{instance_index[t[0]], static_cast<std::int32_t>(k), 0.0, -1};
    if (final_schema.at(k).kind == VarKind::Numeric) {
      if (!parse_number(t[2], o.number)) {
        throw ParseError("value '" + t[2] + "' for numeric variable '" + t[1] +
                         "' is not a finite number");
      }
    } else {
      auto [it, inserted] = token_ids[static_cast<size_t>(k)].try_emplace(
          t[2], static_cast<int>(tokens[static_cast<size_t>(k)].size()));
      if (inserted) tokens[static_cast<size_t>(k)].push_back(t[2]);
      o.value = it->second;
    }
    obs.push_back(o);
  }
  return Dataset(std::move(final_schema), std::move(instance_ids), std::move(tokens),
                 std::move(obs));
}

void write_long(const Dataset& dataset, std::ostream& out) {
  out << "instance,variable,value\n";
  for (const Observation& o : dataset.observations()) {
    out << dataset.instance_ids()[static_cast<size_t>(o.instance)] << ','
        << dataset.schema().at(o.variable).name << ',';
    if (dataset.schema().at(o.variable).kind == VarKind::Numeric) {
      out << format_double(o.number);
    } else {
      out << dataset.value_tokens(o.variable)[static_cast<size_t>(o.value)];
    }
    out << '\n';
  }
}

Schema schema_from_json(const std::string& text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("schema JSON: ") + e.what());
  }
  if (!doc.is_array()) throw SchemaError("schema JSON must be a list of variables");
  std::vector<Variable> vars;
  for (const auto& item : doc) {
    if (!item.contains("name") || !item.contains("kind")) {
      throw SchemaError("schema entries need 'name' and 'kind'");
    }
    vars.push_back({item["name"].get<std::string>(),
                    parse_kind(item["kind"].get<std::string>())});
  }
  return Schema(std::move(vars));
}

std::string schema_to_json(const Schema& schema) {
  nlohmann::ordered_json doc = nlohmann::ordered_json::array();
  for (const Variable& v : schema.variables()) {
    doc.push_back({{"name", v.name}, {"kind", std::string(to_string(v.kind))}});
  }
  return doc.dump(2);
}

std::string format_double(double x) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, x);
  (void)ec;
  return std::string(buf, ptr);
}

}  // namespace cocl
