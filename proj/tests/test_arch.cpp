#include <doctest.h>

#include <map>
#include <set>
#include <stdexcept>
#include <tuple>

#include "rnnserve/arch.hpp"

using namespace rnnserve;

TEST_SUITE("arch") {

TEST_CASE("default configuration is the 24x24 grid") {
  const ArchConfig c = default_config();
  CHECK(c.rows == 24);
  CHECK(c.cols == 24);
  CHECK(c.n_pcu == 192);
  CHECK(c.n_pmu == 384);
  CHECK(c.lanes == 16);
  CHECK(c.stages == 4);
  CHECK(c.pmu_capacity_bytes == 84 * 1024);
  CHECK(c.banks_per_pmu() == 16);
  CHECK(c.freq_hz == 1e9);
  CHECK(c.hop_latency_cycles == 1);
  CHECK(c.total_scratchpad_bytes() == 33030144);
  CHECK(c.derived_peak_flops() == 2.0 * 192 * 64 * 1e9);
  CHECK(c.peak_flops_override == 49e12);
  CHECK_NOTHROW(c.validate());
}

TEST_CASE("config validation rejects impossible grids") {
  ArchConfig c = default_config();
  c.n_pcu = 400;
  c.n_pmu = 400;  // 800 tiles on a 576-tile grid
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c = default_config();
  c.lanes = 12;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c = default_config();
  c.stages = 0;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c = default_config();
  c.freq_hz = 0;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
}

TEST_CASE("map-reduce unit latency by lane count") {
  CHECK(pcu_map_stages() == 2);
  CHECK(reduction_latency(1) == 3);   // map + 0 tree levels + accumulate
  CHECK(reduction_latency(2) == 4);
  CHECK(reduction_latency(4) == 5);
  CHECK(reduction_latency(16) == 7);
  CHECK(reduction_latency(64) == 9);
  CHECK_THROWS_AS(reduction_latency(0), std::invalid_argument);
  CHECK_THROWS_AS(reduction_latency(12), std::invalid_argument);
}

TEST_CASE("mac throughput per precision") {
  CHECK(pcu_mac_throughput(16, Precision::f8) == 64);
  CHECK(pcu_mac_throughput(16, Precision::f16) == 32);
  CHECK(pcu_mac_throughput(16, Precision::f32) == 16);
  CHECK(pcu_mac_throughput(32, Precision::f8) == 128);
  CHECK(std::string(precision_name(Precision::f8)) == "f8");
}

TEST_CASE("folded tree packs all levels into disjoint slot ranges") {
  const FoldedTreeSchedule s = folded_tree_schedule(16, 4);
  CHECK(s.lanes == 16);
  CHECK(s.latency_cycles == 5);  // log2(16) + 1 accumulate
  REQUIRE(s.levels.size() == 5);
  // Level sizes halve: 8, 4, 2, 1, then the accumulator.
  CHECK(s.levels[0].slot_count == 8);
  CHECK(s.levels[1].slot_count == 4);
  CHECK(s.levels[2].slot_count == 2);
  CHECK(s.levels[3].slot_count == 1);
  CHECK(s.levels[4].slot_count == 1);
  int total = 0;
  std::set<int> used;
  for (const auto& l : s.levels) {
    CHECK(l.stage == 0);  // folded into the reduction-region stage
    for (int k = 0; k < l.slot_count; ++k) {
      CHECK(used.insert(l.slot_begin + k).second);  // disjoint
      ++total;
    }
  }
  CHECK(total == 16);  // exactly the lane budget
}

TEST_CASE("folded tree replay shows no structural hazard back-to-back") {
  // One vector enters per cycle for 100 cycles; level L of the vector
  // admitted at cycle v runs at cycle v+L-1. Count (stage, slot, cycle)
  // occupancy: fully pipelined means no slot is claimed twice.
  const FoldedTreeSchedule s = folded_tree_schedule(16, 4);
  std::map<std::tuple<int, int, int>, int> occupancy;
  for (int vec = 0; vec < 100; ++vec) {
    for (const auto& l : s.levels) {
      const int cycle = vec + l.level - 1;
      for (int k = 0; k < l.slot_count; ++k)
        ++occupancy[{l.stage, l.slot_begin + k, cycle}];
    }
  }
  for (const auto& [key, count] : occupancy) CHECK(count == 1);
  // Throughput: with hazard-free pipelining the 100th result lands at
  // cycle 99 + latency, i.e. one result per cycle in steady state.
  CHECK(s.latency_cycles == 5);
}

TEST_CASE("folded tree needs at least one stage") {
  CHECK_NOTHROW(folded_tree_schedule(16, 1));
  try {
    folded_tree_schedule(16, 0);
    CHECK(false);
  } catch (const std::invalid_argument& e) {
    CHECK(std::string(e.what()).find("at least 1 stage") != std::string::npos);
  }
  CHECK_THROWS_AS(folded_tree_schedule(12, 4), std::invalid_argument);
}

TEST_CASE("lowprec pipeline fits the four-stage unit") {
  const PcuPipeline p = lowprec_map_reduce_pipeline(16);
  CHECK(p.lanes == 16);
  CHECK(p.stages_used() == 3);
  CHECK(pipeline_fits(p, default_config()));
  ArchConfig tiny = default_config();
  tiny.stages = 2;
  CHECK_FALSE(pipeline_fits(p, tiny));
}

TEST_CASE("compute to memory bandwidth ratio") {
  ArchConfig original = default_config();
  original.n_pcu = 288;
  original.n_pmu = 288;
  original.stages = 6;
  CHECK(compute_memory_ratio(original) == doctest::Approx(6.0));
  CHECK(compute_memory_ratio(default_config()) == doctest::Approx(2.0));
  ArchConfig no_mem = default_config();
  no_mem.n_pmu = 0;
  CHECK_THROWS_AS(compute_memory_ratio(no_mem), std::invalid_argument);
}

TEST_CASE("config json: round trip, defaults, and unknown keys") {
  const ArchConfig c = default_config();
  const ArchConfig back = arch_config_from_json(arch_config_to_json(c));
  CHECK(back.n_pcu == c.n_pcu);
  CHECK(back.pmu_capacity_bytes == c.pmu_capacity_bytes);
  CHECK(back.peak_flops_override == c.peak_flops_override);

  // Missing keys keep the default grid.
  const ArchConfig partial = arch_config_from_json(R"({"n_pcu": 100})");
  CHECK(partial.n_pcu == 100);
  CHECK(partial.n_pmu == 384);
  CHECK(partial.lanes == 16);

  CHECK_THROWS_AS(arch_config_from_json(R"({"n_pcus": 100})"), std::invalid_argument);
  CHECK_THROWS_AS(arch_config_from_json("not json"), std::invalid_argument);
  CHECK_THROWS_AS(arch_config_from_json(R"({"lanes": 9})"), std::invalid_argument);
  CHECK_THROWS_AS(load_arch_config("/nonexistent/arch.json"), std::runtime_error);
}

}  // TEST_SUITE
