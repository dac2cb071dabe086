// Command-line harness. Exit codes: 0 success; 1 the requested run failed
// (oracle mismatch, design does not fit, oversubscribed without the
// override flag); 2 usage or configuration errors (bad flags, unknown
// workload, malformed files, invalid parameters).

#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "rnnserve/arch.hpp"
#include "rnnserve/dse.hpp"
#include "rnnserve/lowprec.hpp"
#include "rnnserve/mapper.hpp"
#include "rnnserve/reference.hpp"
#include "rnnserve/rnn.hpp"
#include "rnnserve/simulator.hpp"
#include "rnnserve/workloads.hpp"

namespace {

using namespace rnnserve;

struct WorkloadArgs {
  std::string workload;       // built-in name
  std::string workload_file;  // JSON file
  std::string kind = "lstm";
  int h = 0, d = -1, t = 1;

  void attach(CLI::App* cmd) {
    cmd->set_help_flag("--help", "Print help and exit");  // frees -h for --h
    cmd->add_option("--workload", workload, "Built-in workload name (see `bench`)");
    cmd->add_option("--workload-file", workload_file, "Workload JSON file");
    cmd->add_option("--kind", kind, "Cell kind: lstm or gru")
        ->check(CLI::IsMember({"lstm", "gru"}));
    cmd->add_option("--h", h, "Hidden size");
    cmd->add_option("--d", d, "Input size (default: same as --h)");
    cmd->add_option("--t", t, "Sequence length");
  }

  Workload resolve() const {
    if (!workload.empty()) {
      const Workload* w = find_workload(workload);
      if (!w) {
        std::string names;
        for (const auto& b : builtin_workloads()) names += " " + b.name;
        throw std::invalid_argument("unknown workload \"" + workload +
                                    "\"; built-ins:" + names);
      }
      return *w;
    }
    if (!workload_file.empty()) return load_workload(workload_file);
    if (h <= 0)
      throw std::invalid_argument(
          "select a workload with --workload, --workload-file, or --kind/--h/--t");
    Workload w;
    w.dims.kind = kind == "gru" ? CellKind::gru : CellKind::lstm;
    w.dims.h = h;
    w.dims.d = d > 0 ? d : h;
    w.dims.t = t;
    w.dims.validate();
    w.name = kind + "-" + std::to_string(h);
    w.loop_params = {1, w.dims.kind == CellKind::lstm ? 4 : 2, 64, 8};
    w.bw_params = {400, 40, 6};
    return w;
  }
};

MappingParams parse_params(const std::string& text, MappingParams base) {
  // "hu=4,ru=8" or "hu=4,ru=8,rv=64,hv=1"
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto eq = item.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("bad --params entry \"" + item +
                                  "\" (expected key=value)");
    const std::string key = item.substr(0, eq);
    int value = 0;
    try {
      value = std::stoi(item.substr(eq + 1));
    } catch (const std::exception&) {
      throw std::invalid_argument("bad --params value in \"" + item + "\"");
    }
    if (key == "hv") base.hv = value;
    else if (key == "hu") base.hu = value;
    else if (key == "rv") base.rv = value;
    else if (key == "ru") base.ru = value;
    else throw std::invalid_argument("unknown --params key \"" + key + "\"");
  }
  base.validate();
  return base;
}

EnergyCoeffs parse_energy(const std::string& text) {
  EnergyCoeffs c;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto eq = item.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("bad --energy entry \"" + item +
                                  "\" (expected key=value)");
    const std::string key = item.substr(0, eq);
    double value = 0;
    try {
      value = std::stod(item.substr(eq + 1));
    } catch (const std::exception&) {
      throw std::invalid_argument("bad --energy value in \"" + item + "\"");
    }
    if (key == "pcu") c.pj_per_pcu_cycle = value;
    else if (key == "pmu") c.pj_per_pmu_read = value;
    else if (key == "hop") c.pj_per_hop = value;
    else throw std::invalid_argument("unknown --energy key \"" + key +
                                     "\" (pcu, pmu, hop)");
  }
  return c;
}

ArchConfig resolve_arch(const std::string& path) {
  if (path.empty()) return default_config();
  return load_arch_config(path);
}

std::string fmt(double v, const char* f) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

// ---------------------------------------------------------------- describe

int run_describe(const ArchConfig& cfg, const WorkloadArgs& wa,
                 const std::string& params_text, const std::string& format) {
  const bool have_workload = !wa.workload.empty() || !wa.workload_file.empty() || wa.h > 0;
  if (format == "json") {
    nlohmann::json j;
    j["config"] = nlohmann::json::parse(arch_config_to_json(cfg));
    j["derived"] = {{"total_scratchpad_bytes", cfg.total_scratchpad_bytes()},
                    {"derived_peak_flops", cfg.derived_peak_flops()},
                    {"compute_memory_ratio", compute_memory_ratio(cfg)},
                    {"reduction_latency_cycles", reduction_latency(cfg.lanes)}};
    if (have_workload) {
      const Workload w = wa.resolve();
      const MappingParams p = params_text.empty()
                                  ? w.loop_params
                                  : parse_params(params_text, w.loop_params);
      const MappedDesign design = map_loop_rnn(w.dims, p, cfg);
      j["design"] = nlohmann::json::parse(design_to_json(design));
      const ValidationReport v = validate(design, cfg);
      j["violations"] = nlohmann::json::array();
      for (const auto& viol : v.violations)
        j["violations"].push_back({{"resource", viol.resource},
                                   {"required", viol.required},
                                   {"available", viol.available}});
    }
    std::cout << j.dump(2) << "\n";
    return 0;
  }

  std::cout << "grid " << cfg.rows << "x" << cfg.cols << ": " << cfg.n_pcu
            << " PCU (" << cfg.lanes << " lanes, " << cfg.stages << " stages), "
            << cfg.n_pmu << " PMU x " << cfg.pmu_capacity_bytes << " B = "
            << cfg.total_scratchpad_bytes() << " B on-chip\n";
  std::cout << "clock " << fmt(cfg.freq_hz / 1e9, "%.3g") << " GHz, hop latency "
            << cfg.hop_latency_cycles << " cycle(s)\n";
  std::cout << "peak (derived, 8-bit MAC) "
            << fmt(cfg.derived_peak_flops() / 1e12, "%.4g") << " TFLOPS";
  if (cfg.peak_flops_override > 0)
    std::cout << "; reporting override " << fmt(cfg.peak_flops_override / 1e12, "%.4g")
              << " TFLOPS";
  std::cout << "\ncompute:memory ratio " << fmt(compute_memory_ratio(cfg), "%.3g")
            << ", map-reduce latency " << reduction_latency(cfg.lanes) << " cycles\n";
  if (have_workload) {
    const Workload w = wa.resolve();
    const MappingParams p =
        params_text.empty() ? w.loop_params : parse_params(params_text, w.loop_params);
    const MappedDesign design = map_loop_rnn(w.dims, p, cfg);
    std::cout << "\n" << describe(design);
    const ValidationReport v = validate(design, cfg);
    if (v.ok()) {
      std::cout << "  fits: yes\n";
    } else {
      std::cout << "  fits: no\n";
      for (const auto& viol : v.violations) std::cout << "    " << viol.str() << "\n";
    }
  }
  return 0;
}

// ------------------------------------------------------------------ golden

int run_golden(const WorkloadArgs& wa, std::uint64_t seed, int trials,
               const std::string& format) {
  Workload w = wa.resolve();
  // Functional checks run at reduced size; the cost model is what scales.
  CellDims dims = w.dims;
  dims.h = std::min(dims.h, 64);
  dims.d = std::min(dims.d, 64);
  dims.t = std::min(dims.t, 8);

  double worst_cell = 0.0;
  int element_bit_mismatches = 0;
  for (int trial = 0; trial < trials; ++trial) {
    const std::uint64_t s = seed + std::uint64_t(trial);
    const auto xs = make_random_inputs(dims, s);
    if (dims.kind == CellKind::lstm) {
      const LstmWeights cw = make_random_lstm(dims, s);
      std::vector<std::vector<double>> wh, wx, b;
      for (int g = 0; g < 4; ++g) {
        wh.push_back(cw.w_h[size_t(g)].data);
        wx.push_back(cw.w_x[size_t(g)].data);
        b.push_back(cw.b[size_t(g)]);
      }
      CellState st = zero_state(cw);
      for (int t = 0; t < dims.t; ++t) {
        const auto ref = reference::lstm_step(wh, wx, b, dims.h, dims.d,
                                              xs[size_t(t)], st.h, st.c);
        const CellState next = lstm_cell_step(cw, xs[size_t(t)], st);
        for (int i = 0; i < dims.h; ++i) {
          worst_cell = std::max(worst_cell,
                                std::fabs(next.h[size_t(i)] - ref.h[size_t(i)]));
          worst_cell = std::max(worst_cell,
                                std::fabs(next.c[size_t(i)] - ref.c[size_t(i)]));
          double c1 = 0, h1 = 0;
          lstm_element(cw, xs[size_t(t)], st.h, st.c[size_t(i)], i, c1, h1);
          if (std::memcmp(&c1, &next.c[size_t(i)], 8) != 0 ||
              std::memcmp(&h1, &next.h[size_t(i)], 8) != 0)
            ++element_bit_mismatches;
        }
        st = next;
      }
    } else {
      const GruWeights cw = make_random_gru(dims, s);
      std::vector<std::vector<double>> wh, wx, b;
      for (int g = 0; g < 3; ++g) {
        wh.push_back(cw.w_h[size_t(g)].data);
        wx.push_back(cw.w_x[size_t(g)].data);
        b.push_back(cw.b[size_t(g)]);
      }
      CellState st = zero_state(cw);
      for (int t = 0; t < dims.t; ++t) {
        const auto ref = reference::gru_step(wh, wx, b, dims.h, dims.d,
                                             xs[size_t(t)], st.h);
        st = gru_cell_step(cw, xs[size_t(t)], st);
        for (int i = 0; i < dims.h; ++i)
          worst_cell =
              std::max(worst_cell, std::fabs(st.h[size_t(i)] - ref[size_t(i)]));
      }
    }
  }

  // Mixed-precision datapath: implementation vs stage-faithful oracle.
  SplitMix64 rng(seed ^ 0x9E3779B97F4A7C15ull);
  int mixed_bit_mismatches = 0;
  for (int trial = 0; trial < trials; ++trial) {
    std::vector<Float8> a, b;
    std::vector<std::uint8_t> ab, bb;
    for (int i = 0; i < 64; ++i) {
      const auto x = std::uint8_t(rng.next() & 0xFF);
      const auto y = std::uint8_t(rng.next() & 0xFF);
      a.push_back(Float8::from_bits(x));
      b.push_back(Float8::from_bits(y));
      ab.push_back(x);
      bb.push_back(y);
    }
    const float got = mixed_dot(a, b, 16);
    const float want = reference::mixed_dot(ab, bb, 16);
    if (std::memcmp(&got, &want, 4) != 0) ++mixed_bit_mismatches;
  }

  const bool pass = worst_cell <= 1e-12 && element_bit_mismatches == 0 &&
                    mixed_bit_mismatches == 0;
  if (format == "json") {
    nlohmann::json j;
    j["workload"] = w.name;
    j["checked_dims"] = {{"h", dims.h}, {"d", dims.d}, {"t", dims.t}};
    j["trials"] = trials;
    j["max_abs_cell_diff"] = worst_cell;
    j["element_bit_mismatches"] = element_bit_mismatches;
    j["mixed_dot_bit_mismatches"] = mixed_bit_mismatches;
    j["pass"] = pass;
    std::cout << j.dump(2) << "\n";
  } else {
    std::cout << "golden " << w.name << " (checked at h=" << dims.h << " d=" << dims.d
              << " t=" << dims.t << ", " << trials << " trials, seed " << seed
              << ")\n";
    std::cout << "  cell vs scalar oracle, max |diff|: " << fmt(worst_cell, "%.3g")
              << " (tolerance 1e-12)\n";
    if (dims.kind == CellKind::lstm)
      std::cout << "  per-element assembly vs full cell, bit mismatches: "
                << element_bit_mismatches << "\n";
    std::cout << "  mixed-precision dot vs staged oracle, bit mismatches: "
              << mixed_bit_mismatches << "\n";
    std::cout << (pass ? "PASS" : "FAIL") << "\n";
  }
  if (!pass) throw std::runtime_error("golden check failed");
  return 0;
}

// ---------------------------------------------------------------- simulate

int run_simulate(const ArchConfig& cfg, const WorkloadArgs& wa,
                 const std::string& params_text, bool baseline,
                 bool allow_oversubscribed, const std::string& trace_path,
                 const std::string& energy_text, const std::string& format) {
  const Workload w = wa.resolve();
  SimReport rep;
  if (baseline) {
    if (!trace_path.empty())
      throw std::invalid_argument("--trace applies to the loop mapping only");
    rep = simulate_bw(w.dims, w.bw_params);
  } else {
    const MappingParams p =
        params_text.empty() ? w.loop_params : parse_params(params_text, w.loop_params);
    const MappedDesign design = map_loop_rnn(w.dims, p, cfg);
    SimOptions opts;
    opts.allow_oversubscribed = allow_oversubscribed;
    rep = simulate_loop(design, cfg, opts);
    if (!trace_path.empty()) {
      std::ofstream out(trace_path);
      if (!out) throw std::invalid_argument("cannot write trace file: " + trace_path);
      write_loop_trace_csv(rep, out);
    }
  }

  const bool with_energy = !energy_text.empty();
  EnergyReport energy;
  if (with_energy) energy = energy_estimate(rep, parse_energy(energy_text));

  if (format == "csv") {
    std::cout << report_csv_header();
    if (with_energy) std::cout << ",energy_j,avg_power_w";
    std::cout << "\n" << report_to_csv_row(rep);
    if (with_energy)
      std::cout << ',' << fmt(energy.energy_j, "%.9g") << ','
                << fmt(energy.avg_power_w, "%.9g");
    std::cout << "\n";
  } else {
    nlohmann::json j = nlohmann::json::parse(report_to_json(rep));
    if (with_energy)
      j["energy"] = {{"energy_j", energy.energy_j},
                     {"avg_power_w", energy.avg_power_w}};
    std::cout << j.dump(2) << "\n";
  }
  return 0;
}

// --------------------------------------------------------------------- dse

int run_dse(const ArchConfig& cfg, const WorkloadArgs& wa, const std::string& format) {
  const Workload w = wa.resolve();
  const DseResult res = search(w.dims, cfg);
  if (format == "csv") {
    std::cout << report_csv_header() << "\n";
    for (const auto& e : res.frontier) std::cout << report_to_csv_row(e.report) << "\n";
  } else {
    nlohmann::json j;
    j["workload"] = w.name;
    j["best"] = {{"hv", res.best.hv}, {"hu", res.best.hu},
                 {"rv", res.best.rv}, {"ru", res.best.ru}};
    j["report"] = nlohmann::json::parse(report_to_json(res.report));
    j["candidates_examined"] = res.candidates_examined;
    j["candidates_feasible"] = res.candidates_feasible;
    j["frontier"] = nlohmann::json::array();
    for (const auto& e : res.frontier)
      j["frontier"].push_back(nlohmann::json::parse(report_to_json(e.report)));
    std::cout << j.dump(2) << "\n";
  }
  return 0;
}

// ------------------------------------------------------------------- bench

int run_bench(const ArchConfig& cfg, const std::string& out_path) {
  std::ostringstream os;
  os << "name,kind,h,t,fits,hu,ru,rv,cycles,latency_ms,eff_tflops,utilization_1d,"
        "bottleneck,total_pcus,pmus_used,weight_bytes,ref_latency_ms,ref_tflops,"
        "ref_power_w,bw_cycles,bw_latency_ms,bw_utilization_2d,ref_bw_latency_ms\n";
  for (const auto& w : builtin_workloads()) {
    const DseResult res = search(w.dims, cfg);
    const SimReport& r = res.report;
    const SimReport bw = simulate_bw(w.dims, w.bw_params);
    os << w.name << ',' << cell_kind_name(w.dims.kind) << ',' << w.dims.h << ','
       << w.dims.t << ',' << (r.oversubscribed ? 0 : 1) << ',' << res.best.hu << ','
       << res.best.ru << ',' << res.best.rv << ',' << r.cycles << ','
       << fmt(r.latency_s * 1e3, "%.6f") << ',' << fmt(r.eff_flops / 1e12, "%.4f")
       << ',' << fmt(r.utilization, "%.6f") << ',' << r.bottleneck << ','
       << r.total_pcus << ',' << r.pmus_used << ',' << r.weight_bytes << ','
       << fmt(w.ref_latency_ms, "%.4f") << ',' << fmt(w.ref_tflops, "%.1f") << ','
       << fmt(w.ref_power_w, "%.1f") << ',' << bw.cycles << ','
       << fmt(bw.latency_s * 1e3, "%.6f") << ',' << fmt(bw.utilization, "%.6f")
       << ',' << fmt(w.ref_bw_latency_ms, "%.4f") << "\n";
  }
  if (out_path.empty()) {
    std::cout << os.str();
  } else {
    std::ofstream out(out_path);
    if (!out) throw std::invalid_argument("cannot write: " + out_path);
    out << os.str();
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Spatial-accelerator cost modeling for recurrent cells"};
  app.require_subcommand(1);
  // The workload flags use --h/--d/--t, so help must not claim -h.
  app.set_help_flag("--help", "Print help and exit");

  std::string arch_path, format = "text", params_text, energy_text, trace_path,
              out_path;
  std::uint64_t seed = 1;
  int trials = 100;
  bool baseline = false, allow_oversubscribed = false;

  app.add_option("--arch", arch_path, "Architecture config JSON file")
      ->capture_default_str();

  CLI::App* c_describe = app.add_subcommand(
      "describe", "Show the architecture (and optionally a workload mapping)");
  WorkloadArgs wa_describe;
  wa_describe.attach(c_describe);
  c_describe->add_option("--params", params_text, "Mapping params, e.g. hu=4,ru=8");
  c_describe->add_option("--format", format, "text or json")
      ->check(CLI::IsMember({"text", "json"}));

  CLI::App* c_golden =
      app.add_subcommand("golden", "Check the functional model against oracles");
  WorkloadArgs wa_golden;
  wa_golden.attach(c_golden);
  c_golden->add_option("--seed", seed, "Base RNG seed")->capture_default_str();
  c_golden->add_option("--trials", trials, "Seeded instances to check")
      ->capture_default_str();
  c_golden->add_option("--format", format, "text or json")
      ->check(CLI::IsMember({"text", "json"}));

  CLI::App* c_simulate = app.add_subcommand("simulate", "Cost-simulate one workload");
  WorkloadArgs wa_simulate;
  wa_simulate.attach(c_simulate);
  c_simulate->add_option("--params", params_text,
                         "Mapping params, e.g. hu=4,ru=8 (default: workload's)");
  c_simulate->add_flag("--baseline", baseline,
                       "Simulate the tiled 250 MHz baseline instead of the loop mapping");
  c_simulate->add_flag("--allow-oversubscribed", allow_oversubscribed,
                       "Simulate on-chip timing even when weights exceed storage");
  c_simulate->add_option("--trace", trace_path, "Write per-cycle occupancy CSV here");
  c_simulate->add_option("--energy", energy_text,
                         "Energy coefficients pJ, e.g. pcu=2.2,pmu=1.1,hop=0.4");
  c_simulate->add_option("--format", format, "json or csv")
      ->check(CLI::IsMember({"json", "csv", "text"}));

  CLI::App* c_dse =
      app.add_subcommand("dse", "Exhaustive mapping-parameter search for a workload");
  WorkloadArgs wa_dse;
  wa_dse.attach(c_dse);
  c_dse->add_option("--format", format, "json or csv")
      ->check(CLI::IsMember({"json", "csv", "text"}));

  CLI::App* c_bench =
      app.add_subcommand("bench", "Run the built-in benchmark table (CSV)");
  c_bench->set_help_flag("--help", "Print help and exit");
  c_bench->add_option("--out", out_path, "Write CSV here instead of stdout");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (format == "text" && (c_simulate->parsed() || c_dse->parsed())) format = "json";
    const ArchConfig cfg = resolve_arch(arch_path);
    if (c_describe->parsed())
      return run_describe(cfg, wa_describe, params_text, format);
    if (c_golden->parsed()) return run_golden(wa_golden, seed, trials, format);
    if (c_simulate->parsed())
      return run_simulate(cfg, wa_simulate, params_text, baseline,
                          allow_oversubscribed, trace_path, energy_text, format);
    if (c_dse->parsed()) return run_dse(cfg, wa_dse, format);
    if (c_bench->parsed()) return run_bench(cfg, out_path);
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
