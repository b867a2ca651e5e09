#include "qtsh/rng.hpp"

namespace qtsh {

namespace {

std::seed_seq make_seed(std::uint64_t master_seed, std::uint64_t index) {
  const auto lo = [](std::uint64_t v) { return static_cast<std::uint32_t>(v & 0xffffffffu); };
  const auto hi = [](std::uint64_t v) { return static_cast<std::uint32_t>(v >> 32); };
  return std::seed_seq{lo(master_seed), hi(master_seed), lo(index), hi(index), 0x51f15e5du};
}

}  // namespace

TrajectoryStream::TrajectoryStream(std::uint64_t master_seed, std::uint64_t index) {
  auto seq = make_seed(master_seed, index);
  engine_.seed(seq);
}

double TrajectoryStream::uniform() {
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double TrajectoryStream::normal(double mean, double stddev) {
  std::normal_distribution<double> dist(mean, stddev);
  return dist(engine_);
}

}  // namespace qtsh
