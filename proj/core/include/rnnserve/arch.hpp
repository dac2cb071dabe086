// Parameterized model of the spatial accelerator fabric: a checkerboard grid
// of compute units (PCUs) and scratchpad units (PMUs), the PCU's SIMD
// pipeline, and the folded reduction tree that makes packed 8-bit map-reduce
// fully pipelined.
//
// Latency model for one packed 8-bit map-reduce issue:
//   2 cycles of fused map stages (multiply+rearrange, then add+rearrange),
//   followed by log2(lanes) cross-lane reduction levels and 1 accumulation
//   level, i.e. reduction_latency(lanes) = 2 + log2(lanes) + 1.
// The reduction levels occupy geometrically shrinking slices of a stage's
// lane FUs (lanes/2, lanes/4, ..., 1, plus 1 accumulator slot = exactly
// `lanes` slots), so the whole tree folds into a single physical stage with
// every level on disjoint FU slots. Back-to-back issues therefore never
// contend: a new vector can enter every cycle.

#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace rnnserve {

enum class Precision { f8, f16, f32 };

const char* precision_name(Precision p);

struct ArchConfig {
  int rows = 24;
  int cols = 24;
  int n_pcu = 192;
  int n_pmu = 384;
  int lanes = 16;
  int stages = 4;
  std::int64_t pmu_capacity_bytes = 84 * 1024;
  double freq_hz = 1.0e9;
  int hop_latency_cycles = 1;
  // Marketing peak as configured externally, if any. All derived math in
  // this library uses derived_peak_flops(); the override is carried only for
  // side-by-side reporting.
  double peak_flops_override = 0.0;  // 0 = unset

  int banks_per_pmu() const { return 16; }
  std::int64_t total_scratchpad_bytes() const {
    return std::int64_t(n_pmu) * pmu_capacity_bytes;
  }
  // Peak 8-bit MAC rate times 2 (multiply + add), in FLOP/s.
  double derived_peak_flops() const;

  void validate() const;
};

// The 24x24 grid: 192 PCUs and 384 PMUs (2 PMUs per PCU), 16-lane 4-stage
// PCUs, 84 KiB per PMU, 1 GHz, 1 cycle per switch hop.
ArchConfig default_config();

// Loads a JSON config whose keys name the ArchConfig fields exactly
// (rows, cols, n_pcu, n_pmu, lanes, stages, pmu_capacity_bytes, freq_hz,
// hop_latency_cycles, peak_flops_override). Missing keys keep the default
// value; unknown keys are an error.
ArchConfig load_arch_config(const std::string& path);
ArchConfig arch_config_from_json(const std::string& text);
std::string arch_config_to_json(const ArchConfig& cfg);

// Cycles from issuing one packed 8-bit map-reduce vector to its accumulated
// scalar: 2 fused map stages + log2(lanes) tree levels + 1 accumulation.
// lanes must be a positive power of two.
int reduction_latency(int lanes);

// Number of fused map pipeline stages in front of the reduction tree.
constexpr int pcu_map_stages() { return 2; }

// Packed MACs one PCU retires per cycle at the given element precision:
// 4 per lane at f8, 2 at f16, 1 at f32.
int pcu_mac_throughput(int lanes, Precision p);

// Assignment of one reduction level (or the final accumulation) to a
// pipeline stage and a half-open FU slot range within it.
struct TreeLevelAssignment {
  int level = 0;       // 1..log2(lanes) tree levels; log2(lanes)+1 = accumulate
  int stage = 0;       // stage index within the reduction region
  int slot_begin = 0;  // first lane FU slot
  int slot_count = 0;
};

struct FoldedTreeSchedule {
  int lanes = 0;
  int stages_used = 0;
  int latency_cycles = 0;  // log2(lanes) + 1
  std::vector<TreeLevelAssignment> levels;
};

// Folds all reduction levels plus the accumulator into stage 0 of the
// reduction region, on disjoint FU slots. Throws (naming the minimal stage
// count) when no stage is available.
FoldedTreeSchedule folded_tree_schedule(int lanes, int stages);

// PCU pipeline description for the packed 8-bit map-reduce program.
struct PcuPipeline {
  int lanes = 0;
  std::vector<std::string> stage_ops;  // one entry per occupied stage

  int stages_used() const { return int(stage_ops.size()); }
};

// Two fused map stages plus the folded reduction stage.
PcuPipeline lowprec_map_reduce_pipeline(int lanes);

// True when the pipeline's occupied stages fit the configured stage count.
bool pipeline_fits(const PcuPipeline& p, const ArchConfig& cfg);

// Stage-lane FUs across all PCUs divided by scratchpad words readable per
// cycle across all PMUs (16 banks each).
double compute_memory_ratio(const ArchConfig& cfg);

}  // namespace rnnserve
