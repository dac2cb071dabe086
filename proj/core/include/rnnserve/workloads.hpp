// Built-in serving benchmark table (DeepBench-style inference rows, D = H)
// plus reference numbers from the published hardware comparison those rows
// come from: per-row serving latency, effective TFLOPS and power for the
// spatial-array implementation, the measured FPGA (tiled-baseline) latency,
// and the per-row mapping parameters both implementations used. Reference
// fields are 0 for rows the comparison table does not cover.

#pragma once

#include <string>
#include <vector>

#include "rnnserve/mapper.hpp"
#include "rnnserve/rnn.hpp"
#include "rnnserve/simulator.hpp"

namespace rnnserve {

struct Workload {
  std::string name;  // "lstm-256", "gru-1024", ...
  CellDims dims;
  MappingParams loop_params;  // published loop-based mapping for this row
  BwParams bw_params;         // published tiled-baseline tiling

  double ref_latency_ms = 0.0;     // loop-based serving latency
  double ref_tflops = 0.0;         // loop-based effective TFLOPS
  double ref_power_w = 0.0;        // loop-based average power
  double ref_bw_latency_ms = 0.0;  // tiled-baseline (FPGA) latency

  bool has_reference_row() const { return ref_latency_ms > 0; }
};

const std::vector<Workload>& builtin_workloads();

// nullptr when no built-in row has this name.
const Workload* find_workload(const std::string& name);

// JSON workload files: {"name", "kind": "lstm"|"gru", "h", "t",
//  "d" (default h), "params": {"hv","hu","rv","ru"} (default per-kind),
//  "ref_latency_ms", "ref_tflops", "ref_power_w", "ref_bw_latency_ms" (all
//  optional)}.
Workload workload_from_json(const std::string& text);
Workload load_workload(const std::string& path);
std::string workload_to_json(const Workload& w);

}  // namespace rnnserve
