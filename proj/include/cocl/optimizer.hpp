#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "cocl/criterion.hpp"
#include "cocl/model.hpp"

namespace cocl {

struct OptimizerConfig {
  // Candidate per-variable part counts. Empty: {2..10} when the dataset has
  // at most 1000 instances, powers of two {2, 4, ..., 128} otherwise.
  std::vector<int> partition_grid;
  std::uint64_t seed = 0;
  int max_sweeps = 1000;
  double min_improvement = 1e-9;  // nats; smaller deltas count as no-ops
  int threads = 1;
  // Agglomeration keeps exact all-pairs merge scores up to this side size;
  // larger sides fall back to per-row nearest-neighbour candidate lists.
  int agglomeration_exact_threshold = 4096;
  int agglomeration_neighbors = 10;
  CriterionSettings criterion;
};

struct TraceEntry {
  int step = 0;
  std::string description;
  double criterion = 0.0;
};

struct GridPoint {
  int partition_size = 0;
  double criterion = 0.0;
};

struct FitResult {
  CoclusterModel model;
  CriterionValue criterion;
  int chosen_partition_size = 0;
  // Strictly decreasing criterion values: initial model, then every
  // accepted improvement.
  std::vector<TraceEntry> trace;
  std::vector<GridPoint> grid;
  std::int64_t stage1_merges = 0;
  std::int64_t stage2_moves = 0;
  double seconds_stage1 = 0.0;
  double seconds_stage2 = 0.0;
};

// Equal-frequency partitions at the given size, singleton clusters on both
// sides.
CoclusterModel stage1_initialize(std::shared_ptr<const Dataset> dataset,
                                 int parts_per_variable);

// Every candidate move on the model, in the deterministic order the
// post-optimizer scans them: cluster merges (both sides), part merges, part
// moves, value moves.
std::vector<Move> enumerate_moves(const CoclusterModel& model);

// Greedy agglomeration from singletons down to 1 x 1, always applying the
// cheapest merge on either side, then returning the best state seen along
// the path. Small positive deltas are accepted to cross merge barriers; the
// returned model is the arg-min of the criterion over the whole path.
CoclusterModel agglomerative_cocluster(const CoclusterModel& start,
                                       const Combinatorics& comb,
                                       const OptimizerConfig& config,
                                       std::vector<TraceEntry>* trace = nullptr,
                                       std::int64_t* merges = nullptr);

// Repeated sweeps; each sweep scans every candidate move (cluster merges on
// both sides, part merges, part moves, value moves) and applies the single
// best strictly improving one. Stops when no move improves by at least
// config.min_improvement or the sweep budget runs out.
CoclusterModel post_optimize(const CoclusterModel& start, const Combinatorics& comb,
                             const OptimizerConfig& config,
                             std::vector<TraceEntry>* trace = nullptr,
                             std::int64_t* moves = nullptr);

// Full pipeline for one partition size: initialize, agglomerate, refine.
FitResult fit_at(std::shared_ptr<const Dataset> dataset, int parts_per_variable,
                 const OptimizerConfig& config);

// Runs fit_at over the grid and keeps the lowest criterion (ties: smaller
// partition size).
FitResult grid_search(std::shared_ptr<const Dataset> dataset, const OptimizerConfig& config);

FitResult fit(std::shared_ptr<const Dataset> dataset, const OptimizerConfig& config);

}  // namespace cocl
