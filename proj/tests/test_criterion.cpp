#include <algorithm>
#include <cmath>
#include <memory>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"

#include "cocl/criterion.hpp"
#include "cocl/error.hpp"
#include "cocl/ingest.hpp"
#include "cocl/model.hpp"
#include "cocl/optimizer.hpp"
#include "cocl/partition.hpp"
#include "support/oracles.hpp"

using cocl::CoclusterModel;
using cocl::Combinatorics;
using cocl::CriterionValue;
using cocl::Dataset;
using cocl::Move;
using cocl::PartitionSet;

namespace {

double lfact(std::int64_t n) { return std::lgamma(static_cast<double>(n) + 1.0); }

}  // namespace

TEST_CASE("null model cost matches the closed form for one numeric variable") {
  std::string text = "x\n";
  const int n = 20;
  for (int i = 1; i <= n; ++i) text += std::to_string(i) + "\n";
  std::istringstream in(text);
  auto data = std::make_shared<Dataset>(cocl::parse_wide_table(in));
  REQUIRE(data->observation_count() == n);

  const Combinatorics comb;
  const CriterionValue value =
      cocl::evaluate_criterion(testsupport::one_cluster_model(data), comb);

  // One part, one cluster per side: the partition-size choice costs ln N,
  // cluster bookkeeping costs ln I, the per-instance-cluster distribution
  // costs ln C(N+I-1, I-1), and the likelihood keeps ln N! on each side
  // (the single-cell term cancels itself).
  const double expected = std::log(static_cast<double>(n)) +
                          std::log(static_cast<double>(n)) +
                          (lfact(2 * n - 1) - lfact(n) - lfact(n - 1)) + 2.0 * lfact(n);
  CHECK(value.total == doctest::Approx(expected).epsilon(1e-12));
  CHECK(value.total == value.prior + value.likelihood);
}

TEST_CASE("criterion exposes the full stable term list") {
  const std::string text =
      "#id,size,color\n"
      "a,1,red\n"
      "b,2,blue\n"
      "c,3,red\n";
  std::istringstream in(text);
  auto data = std::make_shared<Dataset>(cocl::parse_wide_table(in));
  const Combinatorics comb;
  const CriterionValue value =
      cocl::evaluate_criterion(CoclusterModel::singletons(PartitionSet::equal_frequency(data, 2)), comb);

  const std::vector<std::string> expected = {
      "prior.partition-sizes",
      "prior.value-groupings",
      "prior.cluster-counts",
      "prior.cluster-partitions",
      "prior.cell-distribution",
      "prior.instance-cluster-distributions",
      "prior.part-cluster-distributions",
      "prior.value-distributions",
      "likelihood.cells",
      "likelihood.instances",
      "likelihood.values",
  };
  REQUIRE(value.terms.size() == expected.size());
  for (size_t t = 0; t < expected.size(); ++t) {
    CHECK(value.terms[t].first == expected[t]);
  }
  CHECK(value.term("prior.cluster-counts") ==
        doctest::Approx(std::log(3.0) + std::log(4.0)).epsilon(1e-12));
  CHECK(value.total == value.prior + value.likelihood);
  CHECK(cocl::prior_cost(cocl::CoclusterModel::singletons(
                             PartitionSet::equal_frequency(data, 2)).stats(), comb) ==
        value.prior);
}

TEST_CASE("criterion agrees with the straight-transcription oracle") {
  std::mt19937_64 rng(42);
  testsupport::RandomDataConfig config;
  int checked = 0;
  for (int seed = 0; seed < 10; ++seed) {
    auto data = testsupport::random_dataset(rng, config);
    const Combinatorics comb;
    for (int trial = 0; trial < 20; ++trial) {
      const testsupport::RefModel ref = testsupport::random_ref_model(rng, *data);
      const CoclusterModel model = testsupport::build_library_model(data, ref);
      const double expected = testsupport::reference_criterion(*data, ref);
      const double got = cocl::evaluate_criterion(model, comb).total;
      CHECK(std::abs(got - expected) <= 1e-10 * std::max(1.0, std::abs(expected)));
      ++checked;
    }
  }
  CHECK(checked == 200);
}

TEST_CASE("criterion is bit-identical under cluster relabeling") {
  std::mt19937_64 rng(99);
  testsupport::RandomDataConfig config;
  config.max_instances = 8;
  config.max_values = 5;
  auto data = testsupport::random_dataset(rng, config);
  const Combinatorics comb;

  const testsupport::RefModel ref = testsupport::random_ref_model(rng, *data);
  const CoclusterModel model = testsupport::build_library_model(data, ref);
  const double base = cocl::evaluate_criterion(model, comb).total;

  const int g_u = model.instance_clusters();
  std::vector<int> forward(static_cast<size_t>(g_u));
  for (int c = 0; c < g_u; ++c) forward[static_cast<size_t>(c)] = c;
  for (int round = 0; round < 5; ++round) {
    std::shuffle(forward.begin(), forward.end(), rng);
    std::vector<int> relabeled;
    for (int c : model.instance_assignment()) relabeled.push_back(forward[static_cast<size_t>(c)]);
    const CoclusterModel permuted = CoclusterModel::build(
        model.partitions(), relabeled, model.part_assignment());
    CHECK(cocl::evaluate_criterion(permuted, comb).total == base);
  }
}

TEST_CASE("move deltas equal full recomputation") {
  std::mt19937_64 rng(1234);
  testsupport::RandomDataConfig config;
  config.min_instances = 4;
  config.max_instances = 12;
  config.max_variables = 3;
  config.max_values = 5;
  config.max_obs_per_cell = 3;

  int checked = 0;
  for (int trial = 0; trial < 8; ++trial) {
    auto data = testsupport::random_dataset(rng, config);
    const Combinatorics comb;
    CoclusterModel model =
        CoclusterModel::singletons(PartitionSet::equal_frequency(
            data, 2 + static_cast<int>(rng() % 3)));
    for (int round = 0; round < 6; ++round) {
      const CriterionValue before = cocl::evaluate_criterion(model, comb);
      std::vector<Move> moves = cocl::enumerate_moves(model);
      if (moves.empty()) break;
      std::shuffle(moves.begin(), moves.end(), rng);
      const size_t sample = std::min<size_t>(moves.size(), 8);
      for (size_t s = 0; s < sample; ++s) {
        const double delta = cocl::delta_criterion(model, moves[s], comb);
        const CoclusterModel moved = cocl::apply_move(model, moves[s]);
        const double full = cocl::evaluate_criterion(moved, comb).total - before.total;
        const std::string description = to_string(moves[s]);
        CAPTURE(description);
        CHECK(std::abs(delta - full) <= 1e-9 * std::max(1.0, std::abs(before.total)));
        ++checked;
      }
      model.apply(moves[0]);
    }
  }
  CHECK(checked >= 200);
}

TEST_CASE("numeric part factorials toggle shifts the likelihood exactly") {
  const std::string text =
      "#id,x,color\n"
      "a,1,red\n"
      "b,1,red\n"
      "c,2,blue\n"
      "d,3,blue\n";
  std::istringstream in(text);
  auto data = std::make_shared<Dataset>(cocl::parse_wide_table(in));
  const CoclusterModel model =
      CoclusterModel::singletons(PartitionSet::equal_frequency(data, 2));

  const Combinatorics plain;
  cocl::CriterionSettings with_toggle;
  with_toggle.numeric_part_factorials = true;
  const Combinatorics toggled(with_toggle);

  const CriterionValue off = cocl::evaluate_criterion(model, plain);
  const CriterionValue on = cocl::evaluate_criterion(model, toggled);

  double numeric_part_lfact = 0.0;
  for (std::int64_t n : model.stats().numeric_part_observations) numeric_part_lfact += lfact(n);
  CHECK(numeric_part_lfact > 0.0);
  CHECK(off.total - on.total ==
        doctest::Approx(numeric_part_lfact).epsilon(1e-12));
  CHECK(off.term("likelihood.values") - on.term("likelihood.values") ==
        doctest::Approx(numeric_part_lfact).epsilon(1e-12));

  // Deltas stay consistent with the toggled evaluation.
  for (const Move& move : cocl::enumerate_moves(model)) {
    const double delta = cocl::delta_criterion(model, move, toggled);
    const double full = cocl::evaluate_criterion(cocl::apply_move(model, move), toggled).total -
                        on.total;
    CHECK(std::abs(delta - full) <= 1e-9 * std::max(1.0, std::abs(on.total)));
  }
}

TEST_CASE("stable_sum is order independent") {
  std::mt19937_64 rng(5);
  std::vector<double> addends;
  for (int i = 0; i < 200; ++i) {
    addends.push_back(std::exp(static_cast<double>(rng() % 60) - 30.0) *
                      ((rng() % 2 == 0) ? 1.0 : -1.0));
  }
  const double base = cocl::stable_sum(addends);
  for (int round = 0; round < 10; ++round) {
    std::shuffle(addends.begin(), addends.end(), rng);
    CHECK(cocl::stable_sum(addends) == base);
  }
  CHECK(cocl::stable_sum({}) == 0.0);
}

TEST_CASE("degenerate statistics are rejected") {
  cocl::SufficientStats empty;
  const Combinatorics comb;
  CHECK_THROWS_AS(cocl::evaluate_criterion(empty, comb), cocl::ParameterError);
}
