#include <doctest.h>

#include <cstdint>
#include <cstdio>
#include <sstream>
#include <string>

#include <json.hpp>

#include "rnnserve/mapper.hpp"
#include "rnnserve/simulator.hpp"
#include "rnnserve/workloads.hpp"

using namespace rnnserve;

namespace {

std::int64_t cdiv(std::int64_t a, std::int64_t b) { return (a + b - 1) / b; }

SimReport loop_report(const CellDims& dims, const MappingParams& p,
                      const SimOptions& opts = {}) {
  return simulate_loop(map_loop_rnn(dims, p, default_config()), default_config(), opts);
}

}  // namespace

TEST_SUITE("simulator") {

TEST_CASE("single-element single-step design costs 16 cycles") {
  // One output element, R covered by one issue slot: the whole step is one
  // issue cycle plus the 15-cycle fill (7 map-reduce + 6 element chain +
  // 2 hops).
  const SimReport r = loop_report(CellDims::lstm(1, 1, 1), {1, 1, 2, 1});
  CHECK(r.step_issue_cycles == 1);
  CHECK(r.elem_issue_cycles == 1);
  CHECK(r.pipeline_depth_cycles == 15);
  CHECK(r.cycles == 16);
  CHECK(r.bottleneck == "none");
}

TEST_CASE("h512 lstm serving anchor: 6424 cycles") {
  const SimReport r = loop_report(CellDims::lstm(512, 512, 25), {1, 4, 64, 8});
  CHECK(r.step_issue_cycles == 256);  // 128 elements/engine * 2 issue slots
  CHECK(r.elem_issue_cycles == 128);
  CHECK(r.pipeline_depth_cycles == 24);
  CHECK(r.cycles == 6424);
  CHECK(r.bottleneck == "dot_product");
  CHECK(r.latency_s == doctest::Approx(6.424e-6).epsilon(1e-12));
  CHECK(r.useful_macs == 52428800);
  CHECK(r.useful_macs * 2 == std::int64_t(flop_count(CellDims::lstm(512, 512, 25))));
  // eff_flops * latency reproduces the MVM work exactly.
  CHECK(r.eff_flops * r.latency_s == doctest::Approx(104857600.0).epsilon(1e-12));
  CHECK(r.utilization == 1.0);  // 512 | 1024 and 4 | 512: no fragmentation

  CHECK(r.activity.pcu_active_cycles == 883200);
  CHECK(r.activity.pmu_reads == 13107200);  // T * G * H * R/4 packed words
  CHECK(r.activity.net_hops == 217600);
}

TEST_CASE("h512 gru loop anchor: 534 cycles in one step") {
  const SimReport r = loop_report(CellDims::gru(512, 512, 1), {1, 2, 64, 8});
  CHECK(r.step_issue_cycles == 512);
  CHECK(r.elem_issue_cycles == 256);
  CHECK(r.pipeline_depth_cycles == 22);
  CHECK(r.cycles == 534);
}

TEST_CASE("h256 lstm with the search-optimal mapping: 9624 cycles") {
  const SimReport r = loop_report(CellDims::lstm(256, 256, 150), {1, 4, 64, 8});
  CHECK(r.cycles == 9624);
  CHECK(r.bottleneck == "none");  // one issue slot covers R, element chain keeps pace
}

TEST_CASE("issue cycles never undercut the ideal MAC bound") {
  // per-step issue slots * units * rv >= R for every element.
  for (const Workload& w : builtin_workloads()) {
    const SimReport r =
        simulate_loop(map_loop_rnn(w.dims, w.loop_params, default_config()),
                      default_config(), {true, 1});
    const auto& p = w.loop_params;
    CHECK(r.step_issue_cycles * std::int64_t(p.rv) * p.ru >=
          std::int64_t(cdiv(w.dims.h, p.hu)) * w.dims.r());
    CHECK(r.cycles > r.pipeline_depth_cycles);
  }
}

TEST_CASE("cycles are monotone in problem size and linear in sequence length") {
  const MappingParams p{1, 4, 64, 8};
  std::int64_t prev = 0;
  for (int h : {256, 512, 1024, 2048}) {
    const SimReport r = loop_report(CellDims::lstm(h, h, 25), p, {true, 1});
    CHECK(r.cycles > prev);
    prev = r.cycles;
  }
  const SimReport t1 = loop_report(CellDims::lstm(512, 512, 25), p);
  const SimReport t2 = loop_report(CellDims::lstm(512, 512, 50), p);
  CHECK(t2.cycles - t2.pipeline_depth_cycles == 2 * (t1.cycles - t1.pipeline_depth_cycles));
}

TEST_CASE("element-wise chain becomes the bottleneck under a slow chain") {
  const SimReport r = loop_report(CellDims::lstm(512, 512, 25), {1, 4, 64, 8}, {false, 4});
  CHECK(r.elem_issue_cycles == 512);
  CHECK(r.bottleneck == "element_wise");
  CHECK(r.cycles == 25 * 512 + 24);
}

TEST_CASE("pcu-infeasible designs are refused") {
  const MappedDesign d =
      map_loop_rnn(CellDims::lstm(512, 512, 25), {1, 8, 64, 16}, default_config());
  CHECK(d.total_pcus() == 552);
  CHECK_THROWS_AS(simulate_loop(d, default_config()), std::runtime_error);
}

TEST_CASE("oversubscribed weights need the explicit flag") {
  const Workload* w = find_workload("lstm-2048");
  REQUIRE(w != nullptr);
  const MappedDesign d = map_loop_rnn(w->dims, w->loop_params, default_config());
  CHECK(d.weight_bytes == 33587200);  // vs 33030144 on-chip bytes

  try {
    simulate_loop(d, default_config());
    CHECK(false);
  } catch (const std::runtime_error& e) {
    CHECK(std::string(e.what()).find("--allow-oversubscribed") != std::string::npos);
  }

  const SimReport r = simulate_loop(d, default_config(), {true, 1});
  CHECK(r.oversubscribed);
  CHECK(r.cycles == 25 * 4096 + 24);
}

TEST_CASE("tiled baseline anchor: h256 lstm at 29 cycles per step") {
  const SimReport r = simulate_bw(CellDims::lstm(256, 256, 150), {400, 40, 6});
  CHECK(r.mapping == "bw");
  // One 400-row chunk; each gate needs 2 iterations for W_x and 2 for W_h
  // at rv*ru = 240; 13 element ops (2G+5) follow.
  CHECK(r.step_issue_cycles == 16);
  CHECK(r.elem_issue_cycles == 13);
  CHECK(r.cycles == 150 * 29);
  CHECK(r.pipeline_depth_cycles == 0);
  CHECK(r.freq_hz == 250e6);
  CHECK(r.latency_s == doctest::Approx(4350.0 / 250e6).epsilon(1e-12));
  CHECK(r.useful_macs * 2 == std::int64_t(flop_count(CellDims::lstm(256, 256, 150))));
}

TEST_CASE("tiled baseline runs gates strictly sequentially") {
  // Per-step cost recomputed from the published tiling, term by term.
  for (const Workload& w : builtin_workloads()) {
    const SimReport r = simulate_bw(w.dims, w.bw_params);
    const auto& p = w.bw_params;
    const std::int64_t rr = std::int64_t(p.rv) * p.ru;
    const std::int64_t chunks = cdiv(w.dims.h, p.hv);
    const std::int64_t mvm =
        std::int64_t(w.dims.g()) * chunks * (cdiv(w.dims.d, rr) + cdiv(w.dims.h, rr));
    const std::int64_t elem = chunks * (2 * w.dims.g() + 5);
    CHECK(r.cycles == w.dims.t * (mvm + elem));
  }
  // Full-width tiling leaves exactly two MVM iterations per gate (W_x, W_h).
  const SimReport full = simulate_bw(CellDims::lstm(512, 512, 1), {512, 512, 2});
  CHECK(full.step_issue_cycles == 2 * 4);
}

TEST_CASE("1-D utilization slot counts are exact rationals") {
  const SlotCounts s = utilization_1d_slots(CellDims::lstm(256, 256, 150), 6, 64, 4);
  CHECK(s.useful == 131072);       // 256 * 512
  CHECK(s.provisioned == 132096);  // ceil(256/6)*6 rows * 2 slots * 256
  CHECK(s.value() == doctest::Approx(0.992248).epsilon(1e-6));

  // Exact divisors waste nothing.
  const SlotCounts exact = utilization_1d_slots(CellDims::lstm(512, 512, 25), 4, 64, 8);
  CHECK(exact.useful == exact.provisioned);
  CHECK(utilization_1d(CellDims::lstm(512, 512, 25), 4, 64, 8) == 1.0);
}

TEST_CASE("2-D utilization matches a brute-force tile count") {
  const SlotCounts a = utilization_2d_slots(CellDims::lstm(512, 512, 25), 400, 40, 6);
  CHECK(a.useful == 524288);
  CHECK(a.provisioned == 1152000);
  CHECK(a.value() == doctest::Approx(0.455111).epsilon(1e-6));
  CHECK(utilization_2d(CellDims::lstm(256, 256, 150), 400, 40, 6) ==
        doctest::Approx(0.341333).epsilon(1e-6));

  // Oracle: walk the (row tile, column tile) grid of both operand matrices
  // and count provisioned slots tile by tile.
  for (const Workload& w : builtin_workloads()) {
    const auto& p = w.bw_params;
    const std::int64_t rr = std::int64_t(p.rv) * p.ru;
    std::int64_t provisioned = 0;
    for (std::int64_t row = 0; row < w.dims.h; row += p.hv)
      for (int mat = 0; mat < 2; ++mat) {
        const std::int64_t cols = mat == 0 ? w.dims.d : w.dims.h;
        for (std::int64_t col = 0; col < cols; col += rr) provisioned += p.hv * rr;
      }
    const SlotCounts s = utilization_2d_slots(w.dims, p.hv, p.rv, p.ru);
    CHECK(s.provisioned == provisioned);
    CHECK(s.useful == std::int64_t(w.dims.h) * w.dims.r());
  }
}

TEST_CASE("loop fragmentation beats tiled fragmentation on every row") {
  for (const Workload& w : builtin_workloads()) {
    const double u1 = utilization_1d(w.dims, w.loop_params.hu, w.loop_params.rv,
                                     w.loop_params.ru);
    const double u2 =
        utilization_2d(w.dims, w.bw_params.hv, w.bw_params.rv, w.bw_params.ru);
    CHECK(u1 >= u2);
  }
}

TEST_CASE("effective flops guards its domain") {
  CHECK(effective_flops(CellDims::lstm(512, 512, 25), 0.0139e-3) ==
        doctest::Approx(104857600.0 / 0.0139e-3));
  CHECK_THROWS_AS(effective_flops(CellDims::lstm(512, 512, 25), 0.0),
                  std::invalid_argument);
}

TEST_CASE("energy model is linear in coefficients and calibrates to power") {
  const SimReport r = loop_report(CellDims::lstm(1024, 1024, 25), {1, 4, 64, 8});
  CHECK(energy_estimate(r, {0, 0, 0}).energy_j == 0.0);

  const EnergyCoeffs c{1.0, 0.5, 0.25};
  const EnergyReport e1 = energy_estimate(r, c);
  const EnergyReport e2 = energy_estimate(r, {2.0, 1.0, 0.5});
  CHECK(e2.energy_j == doctest::Approx(2 * e1.energy_j).epsilon(1e-12));
  CHECK(e1.avg_power_w == doctest::Approx(e1.energy_j / r.latency_s).epsilon(1e-12));

  const EnergyCoeffs cal = calibrate_to_power(r, c, 97.2);
  CHECK(energy_estimate(r, cal).avg_power_w == doctest::Approx(97.2).epsilon(1e-9));
  // Uniform scaling preserves the coefficient ratios.
  CHECK(cal.pj_per_pmu_read / cal.pj_per_pcu_cycle == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(cal.pj_per_hop / cal.pj_per_pcu_cycle == doctest::Approx(0.25).epsilon(1e-12));

  SimReport idle = r;
  idle.activity = {};
  CHECK_THROWS_AS(calibrate_to_power(idle, c, 97.2), std::invalid_argument);
  CHECK_THROWS_AS(calibrate_to_power(r, c, -1.0), std::invalid_argument);
}

TEST_CASE("csv row for the h512 anchor is frozen") {
  const SimReport r = loop_report(CellDims::lstm(512, 512, 25), {1, 4, 64, 8});
  CHECK(report_csv_header() ==
        "kind,mapping,h,d,t,hv,hu,rv,ru,cycles,latency_s,eff_tflops,utilization,"
        "bottleneck,step_issue_cycles,elem_issue_cycles,pipeline_depth_cycles,"
        "dot_pcus,elem_pcus,total_pcus,pmus_used,weight_bytes,oversubscribed,"
        "pcu_active_cycles,pmu_reads,net_hops");
  CHECK(report_to_csv_row(r) ==
        "lstm,loop,512,512,25,1,4,64,8,6424,6.424e-06,16.3228,1.000000,dot_product,"
        "256,128,24,128,20,148,32,2105344,0,883200,13107200,217600");
}

TEST_CASE("json report carries every field") {
  const SimReport r = loop_report(CellDims::lstm(512, 512, 25), {1, 4, 64, 8});
  const nlohmann::json j = nlohmann::json::parse(report_to_json(r));
  CHECK(j.at("kind") == "lstm");
  CHECK(j.at("mapping") == "loop");
  CHECK(j.at("cycles").get<std::int64_t>() == 6424);
  CHECK(j.at("dims").at("t").get<int>() == 25);
  CHECK(j.at("params").at("ru").get<int>() == 8);
  CHECK(j.at("bottleneck") == "dot_product");
  CHECK(j.at("oversubscribed").get<bool>() == false);
  CHECK(j.at("activity").at("pmu_reads").get<std::int64_t>() == 13107200);
}

TEST_CASE("trace column sums reproduce the activity counter") {
  const SimReport r = loop_report(CellDims::lstm(256, 256, 10), {1, 4, 64, 8});
  std::ostringstream os;
  write_loop_trace_csv(r, os);
  std::istringstream in(os.str());
  std::string line;
  std::getline(in, line);
  CHECK(line == "cycle,dot_pcus_active,elem_pcus_active");
  std::int64_t rows = 0, dot_sum = 0, elem_sum = 0, expect_cycle = 0;
  while (std::getline(in, line)) {
    long long cycle = -1, dot = -1, elem = -1;
    REQUIRE(std::sscanf(line.c_str(), "%lld,%lld,%lld", &cycle, &dot, &elem) == 3);
    CHECK(cycle == expect_cycle++);
    dot_sum += dot;
    elem_sum += elem;
    ++rows;
  }
  CHECK(rows == r.cycles);
  CHECK(dot_sum + elem_sum == r.activity.pcu_active_cycles);
  CHECK(dot_sum == r.t * r.step_issue_cycles * r.dot_pcus);
  CHECK(elem_sum == r.t * r.elem_issue_cycles * r.elem_pcus);

  const SimReport bw = simulate_bw(CellDims::lstm(256, 256, 1), {400, 40, 6});
  std::ostringstream dummy;
  CHECK_THROWS_AS(write_loop_trace_csv(bw, dummy), std::invalid_argument);
}

}  // TEST_SUITE
