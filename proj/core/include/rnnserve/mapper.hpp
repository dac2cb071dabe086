// Maps a recurrent cell onto the fabric in the loop-based style: hu engines
// each produce output elements one at a time; inside an engine each gate row
// dot product is spread over ru map-reduce units of vector width rv, whose
// partial sums feed a small cross-unit combining tree and then the
// element-wise chain. Loop-based designs keep the whole hidden state in
// scalar registers, so hv is fixed at 1 (hv > 1 exists only in the tiled
// baseline model, see simulator.hpp).
//
// Resource accounting (8-bit weight mode):
//   dot_pcus  = hu * G * ru * ceil(rv / (4*lanes))   one PCU slice per unit
//   elem_pcus = hu * (G + 1)                          gate nonlinearities + state chain
//   weight_bytes = G*H*R one-byte weights + G*H four-byte biases
//   pmus_used = weight PMUs from the row-aligned layout below
//
// Weights are row-blocked by engine: engine e owns the contiguous rows
// [e*ceil(H/hu), ...). Layout order is engine-major, gate-minor; each
// (engine, gate) block fills whole PMUs with floor(capacity/R) rows each.
//
// Placement is a simple Manhattan chain: weights sit next to their units,
// unit partials hop through ceil(log2(ru)) combining links, one link feeds
// the element-wise chain, one link writes the produced element back to the
// state registers, and the state broadcast to the farthest of hu engines
// crosses hu-1 switch links.

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rnnserve/arch.hpp"
#include "rnnserve/rnn.hpp"

namespace rnnserve {

struct MappingParams {
  int hv = 1;  // output tiling (1 for loop-based designs)
  int hu = 1;  // engines (output elements in flight)
  int rv = 64; // vector width of one map-reduce unit
  int ru = 1;  // map-reduce units per gate row

  void validate() const;
  std::string str() const;  // "hv=1 hu=4 rv=64 ru=8"
};

// Smallest k with 2^k >= v (v >= 1).
int ceil_log2(int v);

struct UnitGroup {
  int engine = 0;
  int gate = 0;
  int units = 0;          // ru map-reduce units
  int pcus_per_unit = 0;  // ceil(rv / (4*lanes))
};

struct PlacementSummary {
  int dot_to_tree_hops = 0;      // combining-tree links: ceil(log2(ru))
  int tree_to_elem_hops = 1;     // combined gate sum into the element chain
  int elem_to_state_hops = 1;    // produced element back to the state registers
  int state_broadcast_hops = 0;  // farthest engine on the state chain: hu - 1

  int critical_path_hops() const {
    return dot_to_tree_hops + tree_to_elem_hops + elem_to_state_hops +
           state_broadcast_hops;
  }
};

struct MappedDesign {
  CellDims dims;
  MappingParams params;

  int dot_pcus = 0;
  int elem_pcus = 0;
  int pmus_used = 0;
  std::int64_t weight_bytes = 0;

  int tree_depth = 0;        // ceil(log2(ru))
  int elem_chain_depth = 0;  // element-wise chain stages
  // End-to-end latency of one issue through dot product, combining tree,
  // element chain and placement hops (hop latency from the config used to map).
  int pipeline_depth_cycles = 0;

  int scalar_buffers = 0;  // per-engine gate accumulators + state element registers
  int vector_buffers = 0;  // always 0 for loop-based designs (hv = 1)

  std::vector<UnitGroup> unit_groups;  // engine-major, gate-minor
  PlacementSummary placement;

  int total_pcus() const { return dot_pcus + elem_pcus; }
};

struct MapOptions {
  int elem_chain_depth = 6;
};

MappedDesign map_loop_rnn(const CellDims& dims, const MappingParams& params,
                          const ArchConfig& cfg, const MapOptions& opts = {});

struct Violation {
  std::string resource;       // "pcu", "pmu", "scratchpad"
  std::int64_t required = 0;
  std::int64_t available = 0;

  std::string str() const;
};

struct ValidationReport {
  std::vector<Violation> violations;

  bool ok() const { return violations.empty(); }
  // Parameter feasibility: enough PCUs for the requested unroll.
  bool pcu_feasible() const;
  // Memory feasibility: weights fit the scratchpad (PMU count and bytes).
  bool fits_memory() const;
};

ValidationReport validate(const MappedDesign& design, const ArchConfig& cfg);

struct PmuBlock {
  int pmu_id = 0;
  int engine = 0;
  int gate = 0;
  int row_begin = 0;
  int row_count = 0;
  std::int64_t bytes = 0;
};

struct WeightLayout {
  std::vector<PmuBlock> blocks;
  int pmus_used = 0;
};

// Deterministic weight placement (see header comment). Throws when a single
// row of R weight bytes exceeds one PMU.
WeightLayout weight_layout(const CellDims& dims, const MappingParams& params,
                           const ArchConfig& cfg);

// Human-readable rendering of the design hierarchy and resource usage.
std::string describe(const MappedDesign& design);

// JSON rendering of the design (field names match the struct).
std::string design_to_json(const MappedDesign& design);

}  // namespace rnnserve
