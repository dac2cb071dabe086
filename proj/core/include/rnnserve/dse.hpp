// Exhaustive mapping-parameter search. The candidate space is small and
// structured, so the search simulates every candidate and keeps the
// latency-minimal one under a deterministic tie-break (fewer PCUs, then
// lexicographic hu, ru, rv). Larger hu buys element throughput, larger ru
// buys dot-product throughput; the winner balances the two against the PCU
// budget, which is why small cells pick wide hu and large cells trade hu
// for ru.
//
// Candidates that need more PCUs than the fabric has are discarded.
// Candidates whose weights exceed on-chip storage are kept as a fallback:
// when no candidate fits, the search still returns the fastest
// PCU-feasible design, tagged oversubscribed (weight capacity does not
// depend on the mapping parameters, so no parameter choice could fix it).

#pragma once

#include <vector>

#include "rnnserve/arch.hpp"
#include "rnnserve/mapper.hpp"
#include "rnnserve/rnn.hpp"
#include "rnnserve/simulator.hpp"

namespace rnnserve {

// hu: every k <= min(H, 8) that divides H or is a power of two;
// ru: powers of two up to ceil(R/rv); rv: 4*lanes (one PCU per unit).
std::vector<MappingParams> enumerate_candidates(const CellDims& dims,
                                                const ArchConfig& cfg);

struct DseEntry {
  MappingParams params;
  SimReport report;
};

struct DseResult {
  MappingParams best;
  SimReport report;
  // All pool candidates within 5% of the best latency, best first,
  // ordered by (cycles, total_pcus, hu, ru, rv).
  std::vector<DseEntry> frontier;
  int candidates_examined = 0;
  int candidates_feasible = 0;
};

DseResult search(const CellDims& dims, const ArchConfig& cfg,
                 const std::vector<MappingParams>& space);
DseResult search(const CellDims& dims, const ArchConfig& cfg);

}  // namespace rnnserve
