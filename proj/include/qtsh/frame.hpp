#pragma once

#include <cstdint>
#include <vector>

namespace qtsh {

/// Ensemble observables at one output time. The exact oracle fills the same
/// record (work, frustrated and consistency_gap stay zero there).
struct EnsembleFrame {
  double t = 0;
  double p_plus = 0;
  double p_minus = 0;
  double mean_alpha = 0;
  double mean_beta = 0;
  double energy = 0;
  double work = 0;
  std::int64_t frustrated_count = 0;  ///< cumulative
  double consistency_gap = 0;         ///< |<sigma> - <a_pp>|

  // Diagnostics not part of the CSV schema.
  double mean_a_pp = 0;
  double hop_energy = 0;  ///< mean accumulated electronic energy change at hops
  std::int64_t hops = 0;  ///< cumulative successful hops
};

using FrameSeries = std::vector<EnsembleFrame>;

}  // namespace qtsh
