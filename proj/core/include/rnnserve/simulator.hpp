// Cycle-level cost model for mapped designs.
//
// Loop-based designs (simulate_loop): recurrent steps are strictly
// sequential. Within one step, each of the hu engines issues its
// ceil(H/hu) output elements; every element needs ceil(R/(rv*ru)) issue
// slots on the dot-product units and elem_ii slots on the element-wise
// chain, so
//
//   step_issue_cycles = ceil(H/hu) * ceil(R/(rv*ru))
//   elem_issue_cycles = ceil(H/hu) * elem_ii
//   cycles = T * max(step_issue, elem_issue) + pipeline_depth
//
// where pipeline_depth (fill/drain, paid once) is the map-reduce unit
// latency + the cross-unit combining tree + the element-wise chain + the
// placement hops recorded in the design.
//
// Tiled baseline (simulate_bw): per step each gate runs its W_x and W_h
// matrix-vector products separately in ceil(H/hv)*ceil(dim/(rv*ru))
// iterations, gates strictly sequential; the element-wise unit then costs
// elem_op_count cycles per hv-chunk, serialized after the accumulation.
// Clocked at its own (much lower) frequency.
//
// Utilization here means provisioned-vs-useful MAC slots (fragmentation):
// 1-D for loop designs (only R fragments), 2-D for the tiled baseline
// (both H and R fragment).

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rnnserve/arch.hpp"
#include "rnnserve/mapper.hpp"
#include "rnnserve/rnn.hpp"

namespace rnnserve {

struct SimOptions {
  bool allow_oversubscribed = false;
  int elem_ii = 1;  // element-wise chain initiation interval per engine
};

struct ActivityCounts {
  std::int64_t pcu_active_cycles = 0;
  std::int64_t pmu_reads = 0;  // packed 4-lane weight words
  std::int64_t net_hops = 0;
};

struct SimReport {
  std::string kind;        // "lstm", "gru"
  std::string mapping;     // "loop", "bw"
  int h = 0, d = 0, t = 0;
  int hv = 1, hu = 1, rv = 0, ru = 0;

  std::int64_t cycles = 0;
  double freq_hz = 0.0;
  double latency_s = 0.0;
  std::int64_t useful_macs = 0;  // accumulated per step; equals flop_count/2
  double eff_flops = 0.0;        // flop_count / latency_s
  double utilization = 0.0;      // fragmentation utilization (1-D loop, 2-D bw)
  std::string bottleneck;        // "dot_product", "element_wise", "none"

  std::int64_t step_issue_cycles = 0;
  std::int64_t elem_issue_cycles = 0;
  int pipeline_depth_cycles = 0;

  int dot_pcus = 0, elem_pcus = 0, total_pcus = 0, pmus_used = 0;
  std::int64_t weight_bytes = 0;
  bool oversubscribed = false;

  ActivityCounts activity;
};

// Throws std::runtime_error when the design is PCU-infeasible, or when it
// exceeds on-chip weight storage and opts.allow_oversubscribed is not set
// (DRAM spill is not modeled; oversubscribed runs keep on-chip timing and
// are tagged in the report).
SimReport simulate_loop(const MappedDesign& design, const ArchConfig& cfg,
                        const SimOptions& opts = {});

struct BwParams {
  int hv = 400;
  int rv = 40;
  int ru = 6;
};

struct BwConfig {
  double freq_hz = 250e6;
  // Element-wise function unit ops per produced chunk; 0 = derive from the
  // cell kind (2*G + 5: G bias adds, G nonlinearities, and the state update).
  int elem_op_count = 0;
};

SimReport simulate_bw(const CellDims& dims, const BwParams& params,
                      const BwConfig& cfg = {});

// Fragmentation utilization, exact numerator/denominator in slot counts.
// 1-D (loop): useful = H*R, provisioned = ceil(H/hu)*hu * ceil(R/(rv*ru))*rv*ru.
// 2-D (tiled): useful = H*(D+H), provisioned = ceil(H/hv)*hv *
//              (ceil(D/(rv*ru)) + ceil(H/(rv*ru))) * rv*ru  (W_x and W_h tiles).
struct SlotCounts {
  std::int64_t useful = 0;
  std::int64_t provisioned = 0;
  double value() const { return static_cast<double>(useful) / static_cast<double>(provisioned); }
};

SlotCounts utilization_1d_slots(const CellDims& dims, int hu, int rv, int ru);
SlotCounts utilization_2d_slots(const CellDims& dims, int hv, int rv, int ru);
double utilization_1d(const CellDims& dims, int hu, int rv, int ru);
double utilization_2d(const CellDims& dims, int hv, int rv, int ru);

// flop_count(dims) / latency_s; throws on non-positive latency.
double effective_flops(const CellDims& dims, double latency_s);

struct EnergyCoeffs {
  double pj_per_pcu_cycle = 0.0;
  double pj_per_pmu_read = 0.0;
  double pj_per_hop = 0.0;
};

struct EnergyReport {
  double energy_j = 0.0;
  double avg_power_w = 0.0;
};

EnergyReport energy_estimate(const SimReport& report, const EnergyCoeffs& coeffs);

// Uniformly scales coeffs so that energy_estimate(report, result) dissipates
// target_w average power over the report's latency. Requires nonzero activity
// under the starting coefficients.
EnergyCoeffs calibrate_to_power(const SimReport& report, const EnergyCoeffs& start,
                                double target_w);

// Serialization. CSV column order is frozen; see report_csv_header().
std::string report_to_json(const SimReport& report);
std::string report_csv_header();
std::string report_to_csv_row(const SimReport& report);

// Per-cycle stage-occupancy trace (for the energy model): CSV rows
// cycle,dot_pcus_active,elem_pcus_active. Within each step window the dot
// units are busy for step_issue_cycles and the element-wise units for
// elem_issue_cycles; the trailing pipeline_depth cycles drain with zeros.
// Column sums reproduce activity.pcu_active_cycles.
void write_loop_trace_csv(const SimReport& report, std::ostream& out);

}  // namespace rnnserve
