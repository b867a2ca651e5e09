#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <vector>

#include <json.hpp>

#include "qtsh/frame.hpp"
#include "qtsh/model.hpp"

namespace qtsh {

/// Frame CSV columns, in order.
inline constexpr const char* kFrameCsvHeader =
    "t,p_plus,p_minus,alpha,beta,energy,work,frustrated,consistency_gap";

void write_frames_csv(std::ostream& out, const FrameSeries& frames);
FrameSeries read_frames_csv(std::istream& in);

/// Summary values derivable from the CSV columns alone.
struct RunSummary {
  double final_p_plus = 0;
  double final_p_minus = 0;
  double max_energy_drift = 0;
  double final_work = 0;
  double max_consistency_gap = 0;
  std::int64_t frustrated_total = 0;
};

RunSummary summarize(const FrameSeries& frames);
nlohmann::json to_json(const RunSummary& s);

struct Deviation {
  double max = 0;
  double final = 0;
};

struct Comparison {
  Deviation p_plus, p_minus, alpha, beta;
};

/// Column-aligned differences; throws std::logic_error if the frame times differ.
Comparison compare_frames(const FrameSeries& trajectory, const FrameSeries& exact);
void write_comparison_csv(std::ostream& out, const FrameSeries& trajectory,
                          const FrameSeries& exact);

struct JumpRow {
  double pk = 0;
  bool singular = false;
  double qtsh_down = 0, qtsh_up = 0;
  std::optional<double> fssh_down, fssh_down_reversing, fssh_up;
  bool frustrated_up = false;
  double rel_discrepancy = 0;  ///< |qtsh_down - fssh_down| / |fssh_down|
};

std::vector<JumpRow> jump_table(const ModelPotentiald& model, double q_star,
                                const std::vector<double>& momenta);
void write_jump_table_csv(std::ostream& out, const std::vector<JumpRow>& rows);

/// Adiabatic profiles on [q_min, q_max]: mixing angle, coupling, the coherence
/// of a diabatically localized packet entering from the left on the upper
/// surface, and the resulting quantum force.
void write_model_scan_csv(std::ostream& out, const ModelPotentiald& model, double q_min,
                          double q_max, int points);

/// 17 significant digits in scientific notation.
std::string format_real(double v);

}  // namespace qtsh
