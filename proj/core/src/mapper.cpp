#include "rnnserve/mapper.hpp"

#include <cstdio>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace rnnserve {

namespace {

std::int64_t ceil_div(std::int64_t a, std::int64_t b) { return (a + b - 1) / b; }

}  // namespace

void MappingParams::validate() const {
  if (hv != 1)
    throw std::invalid_argument(
        "loop-based designs keep the state in scalar registers, hv must be 1 "
        "(got " + std::to_string(hv) + ")");
  if (hu < 1 || rv < 1 || ru < 1)
    throw std::invalid_argument("mapping parameters must be positive: " + str());
}

std::string MappingParams::str() const {
  char buf[64];
  std::snprintf(buf, sizeof buf, "hv=%d hu=%d rv=%d ru=%d", hv, hu, rv, ru);
  return buf;
}

int ceil_log2(int v) {
  if (v < 1) throw std::invalid_argument("ceil_log2 needs a positive value");
  int k = 0;
  while ((1 << k) < v) ++k;
  return k;
}

MappedDesign map_loop_rnn(const CellDims& dims, const MappingParams& params,
                          const ArchConfig& cfg, const MapOptions& opts) {
  dims.validate();
  params.validate();
  cfg.validate();
  if (opts.elem_chain_depth < 1)
    throw std::invalid_argument("element chain needs at least one stage");

  const int g = dims.g();
  const std::int64_t r = dims.r();

  MappedDesign d;
  d.dims = dims;
  d.params = params;

  const int pcus_per_unit =
      static_cast<int>(ceil_div(params.rv, 4 * static_cast<std::int64_t>(cfg.lanes)));
  d.dot_pcus = params.hu * g * params.ru * pcus_per_unit;
  d.elem_pcus = params.hu * (g + 1);

  d.weight_bytes = static_cast<std::int64_t>(g) * dims.h * r        // 8-bit weights
                   + static_cast<std::int64_t>(g) * dims.h * 4;     // 32-bit biases

  // Row-aligned PMU count; matches weight_layout when a row fits one PMU.
  const std::int64_t rows_per_engine = ceil_div(dims.h, params.hu);
  const std::int64_t rows_per_pmu = cfg.pmu_capacity_bytes / r;
  std::int64_t pmus = 0;
  if (rows_per_pmu >= 1) {
    for (int e = 0; e < params.hu; ++e) {
      const std::int64_t begin = e * rows_per_engine;
      if (begin >= dims.h) break;
      const std::int64_t rows = std::min<std::int64_t>(rows_per_engine, dims.h - begin);
      pmus += static_cast<std::int64_t>(g) * ceil_div(rows, rows_per_pmu);
    }
  } else {
    // A single row spans PMUs; fall back to a byte-granular count.
    pmus = ceil_div(d.weight_bytes, cfg.pmu_capacity_bytes);
  }
  d.pmus_used = static_cast<int>(pmus);

  d.tree_depth = ceil_log2(params.ru);
  d.elem_chain_depth = opts.elem_chain_depth;

  d.placement.dot_to_tree_hops = d.tree_depth;
  d.placement.tree_to_elem_hops = 1;
  d.placement.elem_to_state_hops = 1;
  d.placement.state_broadcast_hops = params.hu - 1;

  d.pipeline_depth_cycles =
      reduction_latency(cfg.lanes) + d.tree_depth + d.elem_chain_depth +
      cfg.hop_latency_cycles * d.placement.critical_path_hops();

  d.scalar_buffers = params.hu * (g + 2);  // gate accumulators + c/h element registers
  d.vector_buffers = 0;

  d.unit_groups.reserve(static_cast<std::size_t>(params.hu) * g);
  for (int e = 0; e < params.hu; ++e)
    for (int gate = 0; gate < g; ++gate)
      d.unit_groups.push_back({e, gate, params.ru, pcus_per_unit});

  return d;
}

bool ValidationReport::pcu_feasible() const {
  for (const auto& v : violations)
    if (v.resource == "pcu") return false;
  return true;
}

bool ValidationReport::fits_memory() const {
  for (const auto& v : violations)
    if (v.resource == "pmu" || v.resource == "scratchpad") return false;
  return true;
}

std::string Violation::str() const {
  char buf[128];
  std::snprintf(buf, sizeof buf, "%s: need %lld, have %lld", resource.c_str(),
                static_cast<long long>(required), static_cast<long long>(available));
  return buf;
}

ValidationReport validate(const MappedDesign& design, const ArchConfig& cfg) {
  ValidationReport rep;
  if (design.total_pcus() > cfg.n_pcu)
    rep.violations.push_back({"pcu", design.total_pcus(), cfg.n_pcu});
  if (design.pmus_used > cfg.n_pmu)
    rep.violations.push_back({"pmu", design.pmus_used, cfg.n_pmu});
  if (design.weight_bytes > cfg.total_scratchpad_bytes())
    rep.violations.push_back(
        {"scratchpad", design.weight_bytes, cfg.total_scratchpad_bytes()});
  return rep;
}

WeightLayout weight_layout(const CellDims& dims, const MappingParams& params,
                           const ArchConfig& cfg) {
  dims.validate();
  params.validate();
  cfg.validate();

  const int g = dims.g();
  const std::int64_t r = dims.r();
  if (r > cfg.pmu_capacity_bytes)
    throw std::invalid_argument(
        "one weight row (" + std::to_string(r) +
        " bytes) exceeds a PMU (" + std::to_string(cfg.pmu_capacity_bytes) +
        " bytes); row splitting is not modeled");

  const std::int64_t rows_per_engine = ceil_div(dims.h, params.hu);
  const std::int64_t rows_per_pmu = cfg.pmu_capacity_bytes / r;

  WeightLayout layout;
  int pmu_id = 0;
  for (int e = 0; e < params.hu; ++e) {
    const std::int64_t engine_begin = e * rows_per_engine;
    if (engine_begin >= dims.h) break;
    const std::int64_t engine_rows =
        std::min<std::int64_t>(rows_per_engine, dims.h - engine_begin);
    for (int gate = 0; gate < g; ++gate) {
      for (std::int64_t off = 0; off < engine_rows; off += rows_per_pmu) {
        const std::int64_t rows = std::min(rows_per_pmu, engine_rows - off);
        PmuBlock b;
        b.pmu_id = pmu_id++;
        b.engine = e;
        b.gate = gate;
        b.row_begin = static_cast<int>(engine_begin + off);
        b.row_count = static_cast<int>(rows);
        b.bytes = rows * r;
        layout.blocks.push_back(b);
      }
    }
  }
  layout.pmus_used = pmu_id;
  return layout;
}

std::string describe(const MappedDesign& design) {
  std::ostringstream os;
  const auto& d = design;
  os << cell_kind_name(d.dims.kind) << " h=" << d.dims.h << " d=" << d.dims.d
     << " t=" << d.dims.t << "  (" << d.params.str() << ")\n";
  os << "  engines: " << d.params.hu << ", each with " << d.dims.g()
     << " gate groups of " << d.params.ru << " map-reduce units (rv=" << d.params.rv
     << ", " << (d.unit_groups.empty() ? 0 : d.unit_groups.front().pcus_per_unit)
     << " PCU/unit)\n";
  os << "  compute: " << d.dot_pcus << " dot PCUs + " << d.elem_pcus
     << " element PCUs = " << d.total_pcus() << " total\n";
  os << "  memory: " << d.weight_bytes << " weight bytes in " << d.pmus_used
     << " PMUs\n";
  os << "  pipeline: tree depth " << d.tree_depth << ", element chain "
     << d.elem_chain_depth << ", " << d.placement.critical_path_hops()
     << " hops -> " << d.pipeline_depth_cycles << " cycles\n";
  os << "  buffers: " << d.scalar_buffers << " scalar, " << d.vector_buffers
     << " vector\n";
  return os.str();
}

std::string design_to_json(const MappedDesign& d) {
  nlohmann::json j;
  j["kind"] = cell_kind_name(d.dims.kind);
  j["dims"] = {{"h", d.dims.h}, {"d", d.dims.d}, {"t", d.dims.t}};
  j["params"] = {{"hv", d.params.hv}, {"hu", d.params.hu},
                 {"rv", d.params.rv}, {"ru", d.params.ru}};
  j["dot_pcus"] = d.dot_pcus;
  j["elem_pcus"] = d.elem_pcus;
  j["total_pcus"] = d.total_pcus();
  j["pmus_used"] = d.pmus_used;
  j["weight_bytes"] = d.weight_bytes;
  j["tree_depth"] = d.tree_depth;
  j["elem_chain_depth"] = d.elem_chain_depth;
  j["pipeline_depth_cycles"] = d.pipeline_depth_cycles;
  j["scalar_buffers"] = d.scalar_buffers;
  j["vector_buffers"] = d.vector_buffers;
  j["unit_groups"] = nlohmann::json::array();
  for (const UnitGroup& u : d.unit_groups)
    j["unit_groups"].push_back({{"engine", u.engine}, {"gate", u.gate},
                                {"units", u.units}, {"pcus_per_unit", u.pcus_per_unit}});
  j["placement"] = {{"dot_to_tree_hops", d.placement.dot_to_tree_hops},
                    {"tree_to_elem_hops", d.placement.tree_to_elem_hops},
                    {"elem_to_state_hops", d.placement.elem_to_state_hops},
                    {"state_broadcast_hops", d.placement.state_broadcast_hops},
                    {"critical_path_hops", d.placement.critical_path_hops()}};
  return j.dump(2);
}

}  // namespace rnnserve
