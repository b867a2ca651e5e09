#include "qtsh/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>

#include "qtsh/dynamics.hpp"
#include "qtsh/errors.hpp"

namespace qtsh {

std::string format_real(double v) {
  if (std::isnan(v)) return "nan";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.16e", v);
  return buf;
}

void write_frames_csv(std::ostream& out, const FrameSeries& frames) {
  out << kFrameCsvHeader << '\n';
  for (const auto& f : frames) {
    out << format_real(f.t) << ',' << format_real(f.p_plus) << ',' << format_real(f.p_minus)
        << ',' << format_real(f.mean_alpha) << ',' << format_real(f.mean_beta) << ','
        << format_real(f.energy) << ',' << format_real(f.work) << ',' << f.frustrated_count
        << ',' << format_real(f.consistency_gap) << '\n';
  }
}

FrameSeries read_frames_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kFrameCsvHeader) {
    throw ConfigError("frame CSV: unexpected header");
  }
  FrameSeries frames;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string cell;
    std::vector<std::string> cells;
    while (std::getline(row, cell, ',')) cells.push_back(cell);
    if (cells.size() != 9) throw ConfigError("frame CSV: expected 9 columns");
    EnsembleFrame f;
    f.t = std::stod(cells[0]);
    f.p_plus = std::stod(cells[1]);
    f.p_minus = std::stod(cells[2]);
    f.mean_alpha = std::stod(cells[3]);
    f.mean_beta = std::stod(cells[4]);
    f.energy = std::stod(cells[5]);
    f.work = std::stod(cells[6]);
    f.frustrated_count = std::stoll(cells[7]);
    f.consistency_gap = std::stod(cells[8]);
    frames.push_back(f);
  }
  return frames;
}

RunSummary summarize(const FrameSeries& frames) {
  if (frames.empty()) throw std::invalid_argument("summarize: no frames");
  RunSummary s;
  const auto& last = frames.back();
  s.final_p_plus = last.p_plus;
  s.final_p_minus = last.p_minus;
  s.final_work = last.work;
  s.frustrated_total = last.frustrated_count;
  for (const auto& f : frames) {
    s.max_energy_drift = std::max(s.max_energy_drift, std::abs(f.energy - frames.front().energy));
    s.max_consistency_gap = std::max(s.max_consistency_gap, f.consistency_gap);
  }
  return s;
}

nlohmann::json to_json(const RunSummary& s) {
  return {{"final_p_plus", s.final_p_plus},
          {"final_p_minus", s.final_p_minus},
          {"max_energy_drift", s.max_energy_drift},
          {"final_work", s.final_work},
          {"max_consistency_gap", s.max_consistency_gap},
          {"frustrated_total", s.frustrated_total}};
}

Comparison compare_frames(const FrameSeries& trajectory, const FrameSeries& exact) {
  if (trajectory.size() != exact.size()) {
    throw std::logic_error("compare: frame counts differ (stride contract violated)");
  }
  Comparison c;
  auto track = [](Deviation& d, double diff) {
    d.max = std::max(d.max, std::abs(diff));
    d.final = std::abs(diff);
  };
  for (std::size_t i = 0; i < trajectory.size(); ++i) {
    const auto& a = trajectory[i];
    const auto& b = exact[i];
    if (std::abs(a.t - b.t) > 1e-9 * std::max(1.0, std::abs(a.t))) {
      throw std::logic_error("compare: frame times differ (stride contract violated)");
    }
    track(c.p_plus, a.p_plus - b.p_plus);
    track(c.p_minus, a.p_minus - b.p_minus);
    track(c.alpha, a.mean_alpha - b.mean_alpha);
    track(c.beta, a.mean_beta - b.mean_beta);
  }
  return c;
}

void write_comparison_csv(std::ostream& out, const FrameSeries& trajectory,
                          const FrameSeries& exact) {
  compare_frames(trajectory, exact);
  out << "t,p_plus,p_plus_exact,p_minus,p_minus_exact,alpha,alpha_exact,beta,beta_exact,"
         "energy,energy_exact,work,consistency_gap\n";
  for (std::size_t i = 0; i < trajectory.size(); ++i) {
    const auto& a = trajectory[i];
    const auto& b = exact[i];
    out << format_real(a.t) << ',' << format_real(a.p_plus) << ',' << format_real(b.p_plus)
        << ',' << format_real(a.p_minus) << ',' << format_real(b.p_minus) << ','
        << format_real(a.mean_alpha) << ',' << format_real(b.mean_alpha) << ','
        << format_real(a.mean_beta) << ',' << format_real(b.mean_beta) << ','
        << format_real(a.energy) << ',' << format_real(b.energy) << ',' << format_real(a.work)
        << ',' << format_real(a.consistency_gap) << '\n';
  }
}

std::vector<JumpRow> jump_table(const ModelPotentiald& model, double q_star,
                                const std::vector<double>& momenta) {
  model.validate();
  const double gap = eval_adiabatic(model, q_star).omega;
  std::vector<JumpRow> rows;
  for (double pk : momenta) {
    JumpRow row;
    row.pk = pk;
    try {
      row.qtsh_down = impulsive_jump(model, q_star, pk, HopDirection::Down);
      row.qtsh_up = impulsive_jump(model, q_star, pk, HopDirection::Up);
    } catch (const SingularJumpError&) {
      row.singular = true;
      row.qtsh_down = row.qtsh_up = std::numeric_limits<double>::quiet_NaN();
    }
    row.fssh_down = fssh_momentum_jump(pk, model.mass, gap, HopDirection::Down);
    row.fssh_down_reversing = fssh_momentum_jump_reversing(pk, model.mass, gap, HopDirection::Down);
    row.fssh_up = fssh_momentum_jump(pk, model.mass, gap, HopDirection::Up);
    row.frustrated_up = !row.fssh_up.has_value();
    row.rel_discrepancy = row.singular || *row.fssh_down == 0
                              ? std::numeric_limits<double>::quiet_NaN()
                              : std::abs(row.qtsh_down - *row.fssh_down) / std::abs(*row.fssh_down);
    rows.push_back(row);
  }
  return rows;
}

void write_jump_table_csv(std::ostream& out, const std::vector<JumpRow>& rows) {
  const auto opt = [](const std::optional<double>& v) {
    return v ? format_real(*v) : std::string("nan");
  };
  out << "pk,qtsh_jump,qtsh_up_jump,fssh_down_jump,fssh_down_jump_reversing,fssh_up_jump,"
         "frustrated_up,rel_discrepancy,singular\n";
  for (const auto& r : rows) {
    out << format_real(r.pk) << ',' << format_real(r.qtsh_down) << ','
        << format_real(r.qtsh_up) << ',' << opt(r.fssh_down) << ','
        << opt(r.fssh_down_reversing) << ',' << opt(r.fssh_up) << ','
        << (r.frustrated_up ? "true" : "false") << ',' << format_real(r.rel_discrepancy) << ','
        << (r.singular ? "true" : "false") << '\n';
  }
}

void write_model_scan_csv(std::ostream& out, const ModelPotentiald& model, double q_min,
                          double q_max, int points) {
  model.validate();
  if (points < 2 || !(q_max > q_min)) throw ConfigError("scan: need points >= 2 and q_max > q_min");
  DensityMatrix2d upper;
  upper.rho11 = 1;
  const DensityMatrix2d localized = density_to_diabatic(upper, eval_adiabatic(model, q_min).phi);

  out << "q,v1,v2,v12,v_plus,v_minus,omega,phi,d,alpha_loc,force_q\n";
  for (int i = 0; i < points; ++i) {
    const double q = q_min + (q_max - q_min) * i / (points - 1);
    const auto dp = eval_diabatic(model, q);
    const auto ap = diagonalize(dp);
    const double alpha = density_to_adiabatic(localized, ap.phi).re12;
    out << format_real(q) << ',' << format_real(dp.v1) << ',' << format_real(dp.v2) << ','
        << format_real(dp.v12) << ',' << format_real(ap.v_plus) << ','
        << format_real(ap.v_minus) << ',' << format_real(ap.omega) << ','
        << format_real(ap.phi) << ',' << format_real(ap.d) << ',' << format_real(alpha) << ','
        << format_real(2 * ap.omega * ap.d * alpha) << '\n';
  }
}

}  // namespace qtsh
