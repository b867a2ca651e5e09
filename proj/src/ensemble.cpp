#include "qtsh/ensemble.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <thread>

#include "qtsh/errors.hpp"

namespace qtsh {

void InitialCondition::validate() const {
  if (!(sigma_q > 0)) throw ConfigError("sigma_q must be positive");
  if (!std::isfinite(q0) || !std::isfinite(k0)) throw ConfigError("q0 and k0 must be finite");
}

void RunConfig::validate() const {
  model.validate();
  initial.validate();
  if (n_trajectories < 1) throw ConfigError("ensemble size must be at least 1");
  if (!(dt > 0)) throw ConfigError("dt must be positive");
  if (!(t_final > 0)) throw ConfigError("t_final must be positive");
  if (stride < 1) throw ConfigError("stride must be at least 1");
  const double ratio = t_final / dt;
  if (std::abs(ratio - std::round(ratio)) > 1e-9 * std::max(1.0, ratio)) {
    throw ConfigError("t_final must be an integer multiple of dt");
  }
}

std::size_t RunConfig::steps() const {
  return static_cast<std::size_t>(std::llround(t_final / dt));
}

std::vector<std::size_t> frame_steps(std::size_t total_steps, std::size_t stride) {
  std::vector<std::size_t> steps;
  for (std::size_t s = 0; s <= total_steps; s += stride) steps.push_back(s);
  if (steps.back() != total_steps) steps.push_back(total_steps);
  return steps;
}

TrajectoryStated sample_one(const InitialCondition& ic, std::size_t index,
                            TrajectoryStream& stream) {
  TrajectoryStated s;
  s.id = index;
  s.q = stream.normal(ic.q0, ic.sigma_q);
  s.pk = stream.normal(ic.k0, 1.0 / (2.0 * ic.sigma_q));
  s.sigma = ic.surface0 == Surface::Upper ? 1 : 0;
  s.a_pp = s.sigma;
  return s;
}

std::vector<TrajectoryStated> sample_initial(const InitialCondition& ic, std::size_t n,
                                             std::uint64_t seed) {
  std::vector<TrajectoryStated> out;
  out.reserve(n);
  for (std::size_t j = 0; j < n; ++j) {
    TrajectoryStream stream(seed, j);
    out.push_back(sample_one(ic, j, stream));
  }
  return out;
}

namespace {

constexpr std::size_t kBlockSize = 64;

struct FrameSums {
  std::int64_t upper = 0;
  double alpha = 0, beta = 0, energy = 0, work = 0, a_pp = 0, hop_energy = 0;
  std::int64_t frustrated = 0, hops = 0;

  void add(const TrajectoryStated& s, double energy_j, const TrajectorySummary& rec) {
    upper += s.sigma;
    alpha += s.alpha;
    beta += s.beta;
    energy += energy_j;
    work += s.work_acc;
    a_pp += s.a_pp;
    hop_energy += s.hop_energy;
    frustrated += rec.frustrated;
    hops += rec.hops;
  }

  void merge(const FrameSums& o) {
    upper += o.upper;
    alpha += o.alpha;
    beta += o.beta;
    energy += o.energy;
    work += o.work;
    a_pp += o.a_pp;
    hop_energy += o.hop_energy;
    frustrated += o.frustrated;
    hops += o.hops;
  }
};

void propagate_block(const RunConfig& cfg, const std::vector<std::size_t>& frames,
                     std::size_t first, std::size_t last, std::vector<FrameSums>& sums,
                     std::vector<TrajectorySummary>& records) {
  const std::size_t total = frames.back();
  for (std::size_t j = first; j < last; ++j) {
    TrajectoryStream stream(cfg.seed, j);
    TrajectoryStated s = sample_one(cfg.initial, j, stream);
    TrajectorySummary& rec = records[j];
    rec.initial_energy = trajectory_energy(s, cfg.model);
    sums[0].add(s, rec.initial_energy, rec);

    std::size_t next_frame = 1;
    for (std::size_t step = 1; step <= total; ++step) {
      s = rk4_step(s, cfg.dt, cfg.model, cfg.engine);
      s.t = static_cast<double>(step) * cfg.dt;
      if (cfg.engine != EngineKind::BornOppenheimer) {
        const double u = stream.uniform();
        if (hop_probability(s, cfg.dt, cfg.model, cfg.engine).consistency_loss) {
          ++rec.consistency_loss;
        }
        auto [next, outcome] = attempt_hop(s, u, cfg.dt, cfg.model, cfg.engine);
        s = next;
        if (outcome.kind == HopKind::Frustrated) ++rec.frustrated;
        if (outcome.kind == HopKind::HopUp || outcome.kind == HopKind::HopDown) ++rec.hops;
      }
      const bool at_frame = next_frame < frames.size() && frames[next_frame] == step;
      if (cfg.track_trajectory_energy || at_frame) {
        const double e = trajectory_energy(s, cfg.model);
        rec.max_energy_deviation =
            std::max(rec.max_energy_deviation, std::abs(e - rec.initial_energy));
        if (at_frame) sums[next_frame++].add(s, e, rec);
      }
    }
    rec.final_state = s;
  }
}

}  // namespace

EnsembleResult run_ensemble(const RunConfig& cfg) {
  cfg.validate();
  const std::size_t n = cfg.n_trajectories;
  const std::vector<std::size_t> frames = frame_steps(cfg.steps(), cfg.stride);
  const std::size_t n_blocks = (n + kBlockSize - 1) / kBlockSize;

  std::vector<std::vector<FrameSums>> block_sums(n_blocks,
                                                 std::vector<FrameSums>(frames.size()));
  EnsembleResult result;
  result.trajectories.resize(n);

  unsigned threads = cfg.threads == 0 ? std::thread::hardware_concurrency() : cfg.threads;
  threads = std::clamp<unsigned>(threads, 1u, static_cast<unsigned>(n_blocks));

  std::atomic<std::size_t> next_block{0};
  std::mutex error_mutex;
  std::exception_ptr error;
  std::size_t error_block = n_blocks;

  auto worker = [&] {
    for (std::size_t b = next_block++; b < n_blocks; b = next_block++) {
      try {
        propagate_block(cfg, frames, b * kBlockSize, std::min(n, (b + 1) * kBlockSize),
                        block_sums[b], result.trajectories);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        // Report the lowest failing block so the error is schedule-independent.
        if (b < error_block) {
          error_block = b;
          error = std::current_exception();
        }
      }
    }
  };

  if (threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(threads);
    for (unsigned i = 0; i < threads; ++i) pool.emplace_back(worker);
  }
  if (error) std::rethrow_exception(error);

  const double inv_n = 1.0 / static_cast<double>(n);
  result.frames.reserve(frames.size());
  for (std::size_t f = 0; f < frames.size(); ++f) {
    FrameSums total;
    for (const auto& block : block_sums) total.merge(block[f]);
    EnsembleFrame frame;
    frame.t = static_cast<double>(frames[f]) * cfg.dt;
    frame.p_plus = static_cast<double>(total.upper) * inv_n;
    frame.p_minus = 1.0 - frame.p_plus;
    frame.mean_alpha = total.alpha * inv_n;
    frame.mean_beta = total.beta * inv_n;
    frame.energy = total.energy * inv_n;
    frame.work = total.work * inv_n;
    frame.frustrated_count = total.frustrated;
    frame.mean_a_pp = total.a_pp * inv_n;
    frame.consistency_gap = std::abs(frame.p_plus - frame.mean_a_pp);
    frame.hop_energy = total.hop_energy * inv_n;
    frame.hops = total.hops;
    result.frames.push_back(frame);
  }
  return result;
}

ConsistencyReport consistency_report(const FrameSeries& frames) {
  if (frames.empty()) throw std::invalid_argument("consistency_report: no frames");
  ConsistencyReport r;
  const double e0 = frames.front().energy;
  for (const auto& f : frames) {
    r.max_consistency_gap = std::max(r.max_consistency_gap, f.consistency_gap);
    r.max_energy_drift = std::max(r.max_energy_drift, std::abs(f.energy - e0));
    r.max_work_ledger_residual =
        std::max(r.max_work_ledger_residual, std::abs(f.energy - e0 - f.work - f.hop_energy));
  }
  r.frustrated_total = frames.back().frustrated_count;
  r.final_energy_drift = frames.back().energy - e0;
  r.final_work = frames.back().work;
  return r;
}

}  // namespace qtsh
