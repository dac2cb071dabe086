#include "rnnserve/arch.hpp"

#include <bit>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace rnnserve {

namespace {

bool is_pow2(int v) { return v > 0 && (v & (v - 1)) == 0; }

int log2_exact(int v) { return std::countr_zero(unsigned(v)); }

}  // namespace

const char* precision_name(Precision p) {
  switch (p) {
    case Precision::f8: return "f8";
    case Precision::f16: return "f16";
    case Precision::f32: return "f32";
  }
  return "?";
}

double ArchConfig::derived_peak_flops() const {
  return 2.0 * double(n_pcu) * double(pcu_mac_throughput(lanes, Precision::f8)) *
         freq_hz;
}

void ArchConfig::validate() const {
  if (rows < 1 || cols < 1) throw std::invalid_argument("grid must be at least 1x1");
  if (n_pcu < 1 || n_pmu < 1)
    throw std::invalid_argument("config needs at least one PCU and one PMU");
  if (n_pcu + n_pmu > rows * cols)
    throw std::invalid_argument("PCU+PMU count exceeds grid capacity");
  if (!is_pow2(lanes)) throw std::invalid_argument("lanes must be a power of two");
  if (stages < 1) throw std::invalid_argument("stages must be positive");
  if (pmu_capacity_bytes < 1) throw std::invalid_argument("PMU capacity must be positive");
  if (freq_hz <= 0.0) throw std::invalid_argument("frequency must be positive");
  if (hop_latency_cycles < 0) throw std::invalid_argument("hop latency must be >= 0");
}

ArchConfig default_config() {
  ArchConfig cfg;  // field initializers hold the default grid
  cfg.peak_flops_override = 49.0e12;  // externally quoted peak, reporting only
  cfg.validate();
  return cfg;
}

int reduction_latency(int lanes) {
  if (!is_pow2(lanes)) throw std::invalid_argument("lanes must be a positive power of two");
  return pcu_map_stages() + log2_exact(lanes) + 1;
}

int pcu_mac_throughput(int lanes, Precision p) {
  if (!is_pow2(lanes)) throw std::invalid_argument("lanes must be a positive power of two");
  switch (p) {
    case Precision::f8: return 4 * lanes;
    case Precision::f16: return 2 * lanes;
    case Precision::f32: return lanes;
  }
  throw std::invalid_argument("unknown precision");
}

FoldedTreeSchedule folded_tree_schedule(int lanes, int stages) {
  if (!is_pow2(lanes)) throw std::invalid_argument("lanes must be a positive power of two");
  if (stages < 1)
    throw std::invalid_argument(
        "folded reduction tree needs at least 1 stage (requested " +
        std::to_string(stages) + ")");
  const int depth = log2_exact(lanes);
  FoldedTreeSchedule s;
  s.lanes = lanes;
  s.stages_used = 1;
  s.latency_cycles = depth + 1;
  // Level l has lanes/2^l adders; packing them back to back from slot 0
  // leaves exactly one slot (lanes-1) free for the accumulator.
  int begin = 0;
  for (int l = 1; l <= depth; ++l) {
    const int count = lanes >> l;
    s.levels.push_back({l, 0, begin, count});
    begin += count;
  }
  s.levels.push_back({depth + 1, 0, begin, 1});  // accumulator
  return s;
}

PcuPipeline lowprec_map_reduce_pipeline(int lanes) {
  if (!is_pow2(lanes)) throw std::invalid_argument("lanes must be a positive power of two");
  PcuPipeline p;
  p.lanes = lanes;
  p.stage_ops = {
      "fused multiply8x4 + rearrange",
      "fused add16x2 + rearrange/pad",
      "folded reduction tree + accumulate (32-bit)",
  };
  return p;
}

bool pipeline_fits(const PcuPipeline& p, const ArchConfig& cfg) {
  return p.stages_used() <= cfg.stages;
}

double compute_memory_ratio(const ArchConfig& cfg) {
  const double fu_slots = double(cfg.n_pcu) * double(cfg.stages) * double(cfg.lanes);
  const double words = double(cfg.n_pmu) * double(cfg.banks_per_pmu());
  if (words <= 0.0) throw std::invalid_argument("config has no readable PMU banks");
  return fu_slots / words;
}

namespace {

using nlohmann::json;

ArchConfig config_from_parsed(const json& j) {
  ArchConfig cfg = default_config();  // missing keys keep the default grid
  for (const auto& [key, value] : j.items()) {
    if (key == "rows") cfg.rows = value.get<int>();
    else if (key == "cols") cfg.cols = value.get<int>();
    else if (key == "n_pcu") cfg.n_pcu = value.get<int>();
    else if (key == "n_pmu") cfg.n_pmu = value.get<int>();
    else if (key == "lanes") cfg.lanes = value.get<int>();
    else if (key == "stages") cfg.stages = value.get<int>();
    else if (key == "pmu_capacity_bytes") cfg.pmu_capacity_bytes = value.get<std::int64_t>();
    else if (key == "freq_hz") cfg.freq_hz = value.get<double>();
    else if (key == "hop_latency_cycles") cfg.hop_latency_cycles = value.get<int>();
    else if (key == "peak_flops_override") cfg.peak_flops_override = value.get<double>();
    else throw std::invalid_argument("unknown config key '" + key + "'");
  }
  cfg.validate();
  return cfg;
}

}  // namespace

ArchConfig arch_config_from_json(const std::string& text) {
  try {
    return config_from_parsed(json::parse(text));
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("invalid config JSON: ") + e.what());
  }
}

ArchConfig load_arch_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return arch_config_from_json(ss.str());
}

std::string arch_config_to_json(const ArchConfig& cfg) {
  json j;
  j["rows"] = cfg.rows;
  j["cols"] = cfg.cols;
  j["n_pcu"] = cfg.n_pcu;
  j["n_pmu"] = cfg.n_pmu;
  j["lanes"] = cfg.lanes;
  j["stages"] = cfg.stages;
  j["pmu_capacity_bytes"] = cfg.pmu_capacity_bytes;
  j["freq_hz"] = cfg.freq_hz;
  j["hop_latency_cycles"] = cfg.hop_latency_cycles;
  j["peak_flops_override"] = cfg.peak_flops_override;
  return j.dump(2);
}

}  // namespace rnnserve
