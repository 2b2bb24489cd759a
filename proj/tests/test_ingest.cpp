#include <cstdlib>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"

#include "cocl/error.hpp"
#include "cocl/ingest.hpp"

using cocl::Dataset;
using cocl::ParseOptions;
using cocl::Schema;
using cocl::VarKind;

namespace {

Dataset parse_wide_text(const std::string& text, const ParseOptions& options = {}) {
  std::istringstream in(text);
  return cocl::parse_wide_table(in, options);
}

}  // namespace

TEST_CASE("wide table with id column, missing cells and multi-value braces") {
  const std::string text =
      "#id,Age,City\n"
      "u1,23,paris\n"
      "u2,.,lyon\n"
      "u3,31,{paris, lyon}\n";
  const Dataset data = parse_wide_text(text);

  CHECK(data.instance_count() == 3);
  CHECK(data.instance_ids() == std::vector<std::string>{"u1", "u2", "u3"});
  REQUIRE(data.schema().size() == 2);
  CHECK(data.schema().at(0).name == "Age");
  CHECK(data.schema().at(0).kind == VarKind::Numeric);
  CHECK(data.schema().at(1).kind == VarKind::Categorical);

  CHECK(data.observation_count() == 6);  // ages 23, 31 and four city tokens
  CHECK(data.instance_observations(0) == 2);
  CHECK(data.instance_observations(1) == 1);  // age missing
  CHECK(data.instance_observations(2) == 3);  // one age + two cities

  // Token ids in first-appearance order.
  CHECK(data.value_tokens(1) == std::vector<std::string>{"paris", "lyon"});
  CHECK(data.value_observations(1, 0) == 2);
  CHECK(data.value_observations(1, 1) == 2);
}

TEST_CASE("wide table without id column numbers the rows") {
  const Dataset data = parse_wide_text("x\n1.5\n2.5\n");
  CHECK(data.instance_ids() == std::vector<std::string>{"1", "2"});
  CHECK(data.schema().at(0).kind == VarKind::Numeric);
}

TEST_CASE("schema inference demotes mixed columns and flags empty ones") {
  const std::string text =
      "a,b,c\n"
      "1,x,.\n"
      "2e3,3,.\n"
      "-0.5,.,.\n";
  std::istringstream in(text);
  const cocl::SchemaInference inference = cocl::infer_schema(in);
  CHECK(inference.schema.at(0).kind == VarKind::Numeric);
  CHECK(inference.schema.at(1).kind == VarKind::Categorical);  // "x" breaks numeric
  CHECK(inference.schema.at(2).kind == VarKind::Categorical);  // nothing observed
  REQUIRE(inference.warnings.size() == 1);
  CHECK(inference.warnings[0].find("'c'") != std::string::npos);

  const Dataset data = parse_wide_text(text);
  CHECK(data.variable_modeled(0));
  CHECK(data.variable_modeled(1));
  CHECK_FALSE(data.variable_modeled(2));
  CHECK(data.value_count(2) == 0);
}

TEST_CASE("non-finite numeric tokens stay categorical") {
  const Dataset data = parse_wide_text("x\nnan\ninf\n1\n");
  CHECK(data.schema().at(0).kind == VarKind::Categorical);
  CHECK(data.value_count(0) == 3);
}

TEST_CASE("tab delimiter is sniffed and CRLF is stripped") {
  const Dataset data = parse_wide_text("#id\tv\r\nr1\t7\r\nr2\t8\r\n");
  CHECK(data.instance_ids() == std::vector<std::string>{"r1", "r2"});
  CHECK(data.schema().at(0).name == "v");
  CHECK(data.schema().at(0).kind == VarKind::Numeric);
  CHECK(data.observation_count() == 2);
}

TEST_CASE("parse errors carry locations") {
  CHECK_THROWS_WITH_AS(parse_wide_text("a,b\n1\n"),
                       doctest::Contains("line 2"), cocl::ParseError);
  CHECK_THROWS_WITH_AS(parse_wide_text(""), doctest::Contains("empty input"),
                       cocl::ParseError);

  const Schema schema({{"x", VarKind::Numeric}});
  std::istringstream in("x\noops\n");
  CHECK_THROWS_WITH_AS(cocl::parse_wide_table(in, schema),
                       doctest::Contains("'x'"), cocl::ParseError);
}

TEST_CASE("explicit schema must match the header") {
  const Schema schema({{"x", VarKind::Numeric}, {"y", VarKind::Categorical}});
  std::istringstream missing("x\n1\n");
  CHECK_THROWS_AS(cocl::parse_wide_table(missing, schema), cocl::SchemaError);
  std::istringstream unknown("x,y,z\n1,a,b\n");
  CHECK_THROWS_AS(cocl::parse_wide_table(unknown, schema), cocl::SchemaError);
}

TEST_CASE("long format keeps duplicate observations and skips the header") {
  const std::string text =
      "instance,variable,value\n"
      "u1,color,red\n"
      "u1,color,red\n"
      "u1,size,2\n"
      "u2,color,blue\n";
  std::istringstream in(text);
  const Dataset data = cocl::parse_long_observations(in);
  CHECK(data.instance_count() == 2);
  CHECK(data.observation_count() == 4);
  const int color = data.schema().index_of("color");
  const int size = data.schema().index_of("size");
  REQUIRE(color >= 0);
  REQUIRE(size >= 0);
  CHECK(data.schema().at(color).kind == VarKind::Categorical);
  CHECK(data.schema().at(size).kind == VarKind::Numeric);
  CHECK(data.value_observations(color, data.value_id(color, "red")) == 2);
}

TEST_CASE("long format demotes a variable once a token fails to parse") {
  std::istringstream in("u1,m,1\nu2,m,2\nu3,m,oops\n");
  const Dataset data = cocl::parse_long_observations(in);
  const int m = data.schema().index_of("m");
  CHECK(data.schema().at(m).kind == VarKind::Categorical);
  CHECK(data.value_count(m) == 3);
}

TEST_CASE("write_long then parse_long reproduces the dataset") {
  const std::string text =
      "#id,Age,City\n"
      "u1,23.5,paris\n"
      "u2,.,lyon\n"
      "u3,31,{paris, lyon}\n";
  const Dataset original = parse_wide_text(text);
  std::ostringstream out;
  cocl::write_long(original, out);
  std::istringstream in(out.str());
  const Dataset reparsed = cocl::parse_long_observations(in);

  CHECK(reparsed.instance_count() == original.instance_count());
  CHECK(reparsed.observation_count() == original.observation_count());
  CHECK(reparsed.instance_ids() == original.instance_ids());
  for (int k = 0; k < original.schema().size(); ++k) {
    const int k2 = reparsed.schema().index_of(original.schema().at(k).name);
    REQUIRE(k2 >= 0);
    CHECK(reparsed.schema().at(k2).kind == original.schema().at(k).kind);
    CHECK(reparsed.variable_observations(k2) == original.variable_observations(k));
  }
}

TEST_CASE("schema JSON round trip") {
  const Schema schema({{"Age", VarKind::Numeric}, {"City", VarKind::Categorical}});
  const Schema back = cocl::schema_from_json(cocl::schema_to_json(schema));
  REQUIRE(back.size() == 2);
  CHECK(back.at(0).name == "Age");
  CHECK(back.at(0).kind == VarKind::Numeric);
  CHECK(back.at(1).name == "City");
  CHECK(back.at(1).kind == VarKind::Categorical);
  CHECK_THROWS_AS(cocl::schema_from_json("not json"), cocl::ParseError);
  CHECK_THROWS_AS(cocl::schema_from_json(R"([{"name":"x","kind":"weird"}])"),
                  cocl::SchemaError);
}

TEST_CASE("format_double is shortest round-trip") {
  for (double x : {0.1, 1.0 / 3.0, 2.5, 1e-8, 12345678.9, 5.45, -7.25, 0.0}) {
    const std::string text = cocl::format_double(x);
    CHECK(std::strtod(text.c_str(), nullptr) == x);
  }
  CHECK(cocl::format_double(2.0) == "2");
  CHECK(cocl::format_double(5.45) == "5.45");
}

TEST_CASE("duplicate schema names are rejected") {
  CHECK_THROWS_AS(Schema({{"x", VarKind::Numeric}, {"x", VarKind::Numeric}}),
                  cocl::SchemaError);
  CHECK_THROWS_AS(Schema({{"", VarKind::Numeric}}), cocl::SchemaError);
}
