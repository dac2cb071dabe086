#include "rnnserve/simulator.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace rnnserve {

namespace {

std::int64_t ceil_div(std::int64_t a, std::int64_t b) { return (a + b - 1) / b; }

std::string bottleneck_of(std::int64_t dot_cycles, std::int64_t elem_cycles) {
  if (dot_cycles > elem_cycles) return "dot_product";
  if (elem_cycles > dot_cycles) return "element_wise";
  return "none";
}

std::string format_double(double v, const char* fmt) {
  char buf[64];
  std::snprintf(buf, sizeof buf, fmt, v);
  return buf;
}

}  // namespace

SimReport simulate_loop(const MappedDesign& design, const ArchConfig& cfg,
                        const SimOptions& opts) {
  cfg.validate();
  if (opts.elem_ii < 1)
    throw std::invalid_argument("element-wise initiation interval must be >= 1");

  const ValidationReport v = validate(design, cfg);
  if (!v.pcu_feasible()) {
    std::string msg = "design does not fit the compute fabric:";
    for (const auto& viol : v.violations)
      if (viol.resource == "pcu") msg += " " + viol.str();
    throw std::runtime_error(msg);
  }
  const bool fits = v.fits_memory();
  if (!fits && !opts.allow_oversubscribed) {
    std::string msg = "weights exceed on-chip storage:";
    for (const auto& viol : v.violations)
      if (viol.resource != "pcu") msg += " " + viol.str();
    msg += " (pass --allow-oversubscribed to simulate on-chip timing anyway)";
    throw std::runtime_error(msg);
  }

  const CellDims& dims = design.dims;
  const MappingParams& p = design.params;
  const std::int64_t g = dims.g();
  const std::int64_t r = dims.r();

  SimReport rep;
  rep.kind = cell_kind_name(dims.kind);
  rep.mapping = "loop";
  rep.h = dims.h;
  rep.d = dims.d;
  rep.t = dims.t;
  rep.hv = p.hv;
  rep.hu = p.hu;
  rep.rv = p.rv;
  rep.ru = p.ru;
  rep.freq_hz = cfg.freq_hz;

  rep.step_issue_cycles = ceil_div(dims.h, p.hu) *
                          ceil_div(r, static_cast<std::int64_t>(p.rv) * p.ru);
  rep.elem_issue_cycles = ceil_div(dims.h, p.hu) * opts.elem_ii;
  rep.pipeline_depth_cycles =
      reduction_latency(cfg.lanes) + design.tree_depth + design.elem_chain_depth +
      cfg.hop_latency_cycles * design.placement.critical_path_hops();

  // Steps are strictly sequential (h_t feeds step t+1); walk them so the
  // work and activity counters are accumulated, not assumed.
  const std::int64_t per_step = std::max(rep.step_issue_cycles, rep.elem_issue_cycles);
  std::int64_t issue_cycles = 0;
  for (int t = 0; t < dims.t; ++t) {
    issue_cycles += per_step;
    rep.useful_macs += g * dims.h * r;
    rep.activity.pcu_active_cycles += design.dot_pcus * rep.step_issue_cycles +
                                      design.elem_pcus * rep.elem_issue_cycles;
    rep.activity.pmu_reads += g * dims.h * ceil_div(r, 4);
    rep.activity.net_hops +=
        dims.h * g * (1 + design.tree_depth) + dims.h;  // tree paths + state writeback
  }
  rep.cycles = issue_cycles + rep.pipeline_depth_cycles;
  rep.latency_s = static_cast<double>(rep.cycles) / cfg.freq_hz;
  rep.eff_flops = effective_flops(dims, rep.latency_s);
  rep.utilization = utilization_1d(dims, p.hu, p.rv, p.ru);
  rep.bottleneck = bottleneck_of(rep.step_issue_cycles, rep.elem_issue_cycles);

  rep.dot_pcus = design.dot_pcus;
  rep.elem_pcus = design.elem_pcus;
  rep.total_pcus = design.total_pcus();
  rep.pmus_used = design.pmus_used;
  rep.weight_bytes = design.weight_bytes;
  rep.oversubscribed = !fits;
  return rep;
}

SimReport simulate_bw(const CellDims& dims, const BwParams& params,
                      const BwConfig& cfg) {
  dims.validate();
  if (params.hv < 1 || params.rv < 1 || params.ru < 1)
    throw std::invalid_argument("tiled baseline parameters must be positive");
  if (cfg.freq_hz <= 0)
    throw std::invalid_argument("baseline frequency must be positive");

  const std::int64_t g = dims.g();
  const std::int64_t rr = static_cast<std::int64_t>(params.rv) * params.ru;
  const std::int64_t h_chunks = ceil_div(dims.h, params.hv);
  const int elem_ops =
      cfg.elem_op_count > 0 ? cfg.elem_op_count : static_cast<int>(2 * g + 5);

  // W_x and W_h run as separate MVMs, gates strictly sequential; the
  // element-wise unit follows each hv-chunk after its accumulation.
  const std::int64_t mvm_iters_per_step =
      g * h_chunks * (ceil_div(dims.d, rr) + ceil_div(dims.h, rr));
  const std::int64_t elem_cycles_per_step = h_chunks * elem_ops;

  SimReport rep;
  rep.kind = cell_kind_name(dims.kind);
  rep.mapping = "bw";
  rep.h = dims.h;
  rep.d = dims.d;
  rep.t = dims.t;
  rep.hv = params.hv;
  rep.hu = 1;
  rep.rv = params.rv;
  rep.ru = params.ru;
  rep.freq_hz = cfg.freq_hz;

  rep.step_issue_cycles = mvm_iters_per_step;
  rep.elem_issue_cycles = elem_cycles_per_step;
  rep.pipeline_depth_cycles = 0;
  for (int t = 0; t < dims.t; ++t) {
    rep.cycles += mvm_iters_per_step + elem_cycles_per_step;
    rep.useful_macs += g * dims.h * (static_cast<std::int64_t>(dims.d) + dims.h);
  }
  rep.latency_s = static_cast<double>(rep.cycles) / cfg.freq_hz;
  rep.eff_flops = effective_flops(dims, rep.latency_s);
  rep.utilization = utilization_2d(dims, params.hv, params.rv, params.ru);
  rep.bottleneck = bottleneck_of(mvm_iters_per_step, elem_cycles_per_step);
  return rep;
}

SlotCounts utilization_1d_slots(const CellDims& dims, int hu, int rv, int ru) {
  dims.validate();
  if (hu < 1 || rv < 1 || ru < 1)
    throw std::invalid_argument("utilization parameters must be positive");
  const std::int64_t r = dims.r();
  const std::int64_t rr = static_cast<std::int64_t>(rv) * ru;
  SlotCounts s;
  s.useful = static_cast<std::int64_t>(dims.h) * r;
  s.provisioned = ceil_div(dims.h, hu) * hu * ceil_div(r, rr) * rr;
  return s;
}

SlotCounts utilization_2d_slots(const CellDims& dims, int hv, int rv, int ru) {
  dims.validate();
  if (hv < 1 || rv < 1 || ru < 1)
    throw std::invalid_argument("utilization parameters must be positive");
  const std::int64_t rr = static_cast<std::int64_t>(rv) * ru;
  SlotCounts s;
  s.useful = static_cast<std::int64_t>(dims.h) *
             (static_cast<std::int64_t>(dims.d) + dims.h);
  s.provisioned = ceil_div(dims.h, hv) * hv *
                  (ceil_div(dims.d, rr) + ceil_div(dims.h, rr)) * rr;
  return s;
}

double utilization_1d(const CellDims& dims, int hu, int rv, int ru) {
  return utilization_1d_slots(dims, hu, rv, ru).value();
}

double utilization_2d(const CellDims& dims, int hv, int rv, int ru) {
  return utilization_2d_slots(dims, hv, rv, ru).value();
}

double effective_flops(const CellDims& dims, double latency_s) {
  if (latency_s <= 0) throw std::invalid_argument("latency must be positive");
  return static_cast<double>(flop_count(dims)) / latency_s;
}

EnergyReport energy_estimate(const SimReport& report, const EnergyCoeffs& coeffs) {
  EnergyReport e;
  e.energy_j = (static_cast<double>(report.activity.pcu_active_cycles) * coeffs.pj_per_pcu_cycle +
                static_cast<double>(report.activity.pmu_reads) * coeffs.pj_per_pmu_read +
                static_cast<double>(report.activity.net_hops) * coeffs.pj_per_hop) *
               1e-12;
  if (report.latency_s > 0) e.avg_power_w = e.energy_j / report.latency_s;
  return e;
}

EnergyCoeffs calibrate_to_power(const SimReport& report, const EnergyCoeffs& start,
                                double target_w) {
  if (target_w <= 0) throw std::invalid_argument("target power must be positive");
  const EnergyReport base = energy_estimate(report, start);
  if (base.avg_power_w <= 0)
    throw std::invalid_argument(
        "calibration needs nonzero activity under the starting coefficients");
  const double scale = target_w / base.avg_power_w;
  return {start.pj_per_pcu_cycle * scale, start.pj_per_pmu_read * scale,
          start.pj_per_hop * scale};
}

std::string report_to_json(const SimReport& r) {
  nlohmann::json j;
  j["kind"] = r.kind;
  j["mapping"] = r.mapping;
  j["dims"] = {{"h", r.h}, {"d", r.d}, {"t", r.t}};
  j["params"] = {{"hv", r.hv}, {"hu", r.hu}, {"rv", r.rv}, {"ru", r.ru}};
  j["cycles"] = r.cycles;
  j["freq_hz"] = r.freq_hz;
  j["latency_s"] = r.latency_s;
  j["useful_macs"] = r.useful_macs;
  j["eff_flops"] = r.eff_flops;
  j["utilization"] = r.utilization;
  j["bottleneck"] = r.bottleneck;
  j["step_issue_cycles"] = r.step_issue_cycles;
  j["elem_issue_cycles"] = r.elem_issue_cycles;
  j["pipeline_depth_cycles"] = r.pipeline_depth_cycles;
  j["dot_pcus"] = r.dot_pcus;
  j["elem_pcus"] = r.elem_pcus;
  j["total_pcus"] = r.total_pcus;
  j["pmus_used"] = r.pmus_used;
  j["weight_bytes"] = r.weight_bytes;
  j["oversubscribed"] = r.oversubscribed;
  j["activity"] = {{"pcu_active_cycles", r.activity.pcu_active_cycles},
                   {"pmu_reads", r.activity.pmu_reads},
                   {"net_hops", r.activity.net_hops}};
  return j.dump(2);
}

std::string report_csv_header() {
  return "kind,mapping,h,d,t,hv,hu,rv,ru,cycles,latency_s,eff_tflops,utilization,"
         "bottleneck,step_issue_cycles,elem_issue_cycles,pipeline_depth_cycles,"
         "dot_pcus,elem_pcus,total_pcus,pmus_used,weight_bytes,oversubscribed,"
         "pcu_active_cycles,pmu_reads,net_hops";
}

std::string report_to_csv_row(const SimReport& r) {
  std::ostringstream os;
  os << r.kind << ',' << r.mapping << ',' << r.h << ',' << r.d << ',' << r.t << ','
     << r.hv << ',' << r.hu << ',' << r.rv << ',' << r.ru << ',' << r.cycles << ','
     << format_double(r.latency_s, "%.9g") << ','
     << format_double(r.eff_flops / 1e12, "%.6g") << ','
     << format_double(r.utilization, "%.6f") << ',' << r.bottleneck << ','
     << r.step_issue_cycles << ',' << r.elem_issue_cycles << ','
     << r.pipeline_depth_cycles << ',' << r.dot_pcus << ',' << r.elem_pcus << ','
     << r.total_pcus << ',' << r.pmus_used << ',' << r.weight_bytes << ','
     << (r.oversubscribed ? 1 : 0) << ',' << r.activity.pcu_active_cycles << ','
     << r.activity.pmu_reads << ',' << r.activity.net_hops;
  return os.str();
}

void write_loop_trace_csv(const SimReport& r, std::ostream& out) {
  if (r.mapping != "loop")
    throw std::invalid_argument("trace is only defined for loop-based reports");
  out << "cycle,dot_pcus_active,elem_pcus_active\n";
  const std::int64_t per_step = std::max(r.step_issue_cycles, r.elem_issue_cycles);
  std::int64_t cycle = 0;
  for (int t = 0; t < r.t; ++t) {
    for (std::int64_t c = 0; c < per_step; ++c, ++cycle) {
      const int dot = c < r.step_issue_cycles ? r.dot_pcus : 0;
      const int elem = c < r.elem_issue_cycles ? r.elem_pcus : 0;
      out << cycle << ',' << dot << ',' << elem << '\n';
    }
  }
  for (int c = 0; c < r.pipeline_depth_cycles; ++c, ++cycle)
    out << cycle << ",0,0\n";
}

}  // namespace rnnserve
