#include "rnnserve/dse.hpp"

#include <algorithm>
#include <stdexcept>
#include <tuple>

namespace rnnserve {

namespace {

bool is_pow2(int v) { return v > 0 && (v & (v - 1)) == 0; }

auto rank_key(const DseEntry& e) {
  return std::make_tuple(e.report.cycles, e.report.total_pcus, e.params.hu,
                         e.params.ru, e.params.rv);
}

}  // namespace

std::vector<MappingParams> enumerate_candidates(const CellDims& dims,
                                                const ArchConfig& cfg) {
  dims.validate();
  cfg.validate();

  const int rv = 4 * cfg.lanes;
  const int hu_max = std::min(dims.h, 8);
  const std::int64_t r = dims.r();
  const std::int64_t ru_max = (r + rv - 1) / rv;

  std::vector<MappingParams> out;
  for (int hu = 1; hu <= hu_max; ++hu) {
    if (dims.h % hu != 0 && !is_pow2(hu)) continue;
    for (int ru = 1; ru <= ru_max; ru *= 2)
      out.push_back({1, hu, rv, ru});
  }
  return out;
}

DseResult search(const CellDims& dims, const ArchConfig& cfg,
                 const std::vector<MappingParams>& space) {
  if (space.empty())
    throw std::runtime_error("empty candidate space");

  std::vector<DseEntry> fitting;   // pass the full resource check
  std::vector<DseEntry> fallback;  // PCU-feasible but oversubscribed
  for (const auto& p : space) {
    const MappedDesign design = map_loop_rnn(dims, p, cfg);
    const ValidationReport v = validate(design, cfg);
    if (!v.pcu_feasible()) continue;
    SimOptions opts;
    opts.allow_oversubscribed = true;
    DseEntry e{p, simulate_loop(design, cfg, opts)};
    (v.fits_memory() ? fitting : fallback).push_back(std::move(e));
  }

  std::vector<DseEntry>& pool = fitting.empty() ? fallback : fitting;
  if (pool.empty())
    throw std::runtime_error(
        "no candidate fits the compute fabric (" + std::to_string(space.size()) +
        " examined)");

  std::sort(pool.begin(), pool.end(),
            [](const DseEntry& a, const DseEntry& b) { return rank_key(a) < rank_key(b); });

  DseResult res;
  res.best = pool.front().params;
  res.report = pool.front().report;
  res.candidates_examined = static_cast<int>(space.size());
  res.candidates_feasible = static_cast<int>(fitting.size() + fallback.size());
  const double cut = static_cast<double>(res.report.cycles) * 1.05;
  for (const auto& e : pool)
    if (static_cast<double>(e.report.cycles) <= cut) res.frontier.push_back(e);
  return res;
}

DseResult search(const CellDims& dims, const ArchConfig& cfg) {
  return search(dims, cfg, enumerate_candidates(dims, cfg));
}

}  // namespace rnnserve
