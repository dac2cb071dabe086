#include "rnnserve/workloads.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace rnnserve {

namespace {

Workload row(CellKind kind, int h, int t, int hu, int ru, double lat_ms,
             double tflops, double power_w, double bw_lat_ms) {
  Workload w;
  w.name = std::string(cell_kind_name(kind)) + "-" + std::to_string(h);
  w.dims = {kind, h, h, t};
  w.loop_params = {1, hu, 64, ru};
  w.bw_params = {400, 40, 6};
  w.ref_latency_ms = lat_ms;
  w.ref_tflops = tflops;
  w.ref_power_w = power_w;
  w.ref_bw_latency_ms = bw_lat_ms;
  return w;
}

}  // namespace

const std::vector<Workload>& builtin_workloads() {
  static const std::vector<Workload> table = {
      row(CellKind::lstm, 256, 150, 6, 4, 0.0419, 3.8, 28.5, 0.425),
      row(CellKind::lstm, 512, 25, 4, 8, 0.0139, 7.6, 53.7, 0.077),
      row(CellKind::lstm, 1024, 25, 4, 8, 0.0292, 14.4, 97.2, 0.074),
      row(CellKind::lstm, 1536, 50, 4, 8, 0.1224, 15.4, 102.7, 0.145),
      row(CellKind::lstm, 2048, 25, 4, 8, 0.1060, 15.8, 104.5, 0.074),
      row(CellKind::gru, 512, 1, 2, 8, 0.0004, 7.6, 61.9, 0.013),
      row(CellKind::gru, 1024, 1500, 2, 8, 1.4430, 13.1, 109.1, 3.792),
      row(CellKind::gru, 1536, 375, 2, 8, 0.7463, 14.2, 114.6, 0.951),
      row(CellKind::gru, 2048, 375, 2, 8, 1.2833, 14.7, 101.2, 0.954),
      row(CellKind::gru, 2560, 375, 2, 8, 1.9733, 15.0, 117.2, 0.993),
      row(CellKind::gru, 2816, 750, 2, 8, 0.0, 0.0, 0.0, 0.0),
  };
  return table;
}

const Workload* find_workload(const std::string& name) {
  for (const auto& w : builtin_workloads())
    if (w.name == name) return &w;
  return nullptr;
}

Workload workload_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw std::invalid_argument(std::string("workload JSON parse error: ") + e.what());
  }
  if (!j.is_object()) throw std::invalid_argument("workload JSON must be an object");

  const std::string kind_s = j.at("kind").get<std::string>();
  CellKind kind;
  if (kind_s == "lstm") kind = CellKind::lstm;
  else if (kind_s == "gru") kind = CellKind::gru;
  else throw std::invalid_argument("workload kind must be \"lstm\" or \"gru\", got \"" + kind_s + "\"");

  Workload w;
  w.dims.kind = kind;
  w.dims.h = j.at("h").get<int>();
  w.dims.d = j.value("d", w.dims.h);
  w.dims.t = j.at("t").get<int>();
  w.dims.validate();
  w.name = j.value("name", std::string(cell_kind_name(kind)) + "-" +
                               std::to_string(w.dims.h));

  w.loop_params = {1, kind == CellKind::lstm ? 4 : 2, 64, 8};
  if (j.contains("params")) {
    const auto& p = j.at("params");
    w.loop_params.hv = p.value("hv", 1);
    w.loop_params.hu = p.value("hu", w.loop_params.hu);
    w.loop_params.rv = p.value("rv", 64);
    w.loop_params.ru = p.value("ru", w.loop_params.ru);
    w.loop_params.validate();
  }
  w.bw_params = {400, 40, 6};
  w.ref_latency_ms = j.value("ref_latency_ms", 0.0);
  w.ref_tflops = j.value("ref_tflops", 0.0);
  w.ref_power_w = j.value("ref_power_w", 0.0);
  w.ref_bw_latency_ms = j.value("ref_bw_latency_ms", 0.0);
  return w;
}

Workload load_workload(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open workload file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return workload_from_json(ss.str());
}

std::string workload_to_json(const Workload& w) {
  nlohmann::json j;
  j["name"] = w.name;
  j["kind"] = cell_kind_name(w.dims.kind);
  j["h"] = w.dims.h;
  j["d"] = w.dims.d;
  j["t"] = w.dims.t;
  j["params"] = {{"hv", w.loop_params.hv}, {"hu", w.loop_params.hu},
                 {"rv", w.loop_params.rv}, {"ru", w.loop_params.ru}};
  if (w.has_reference_row()) {
    j["ref_latency_ms"] = w.ref_latency_ms;
    j["ref_tflops"] = w.ref_tflops;
    j["ref_power_w"] = w.ref_power_w;
    j["ref_bw_latency_ms"] = w.ref_bw_latency_ms;
  }
  return j.dump(2);
}

}  // namespace rnnserve
