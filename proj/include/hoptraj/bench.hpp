#ifndef HOPTRAJ_BENCH_HPP
#define HOPTRAJ_BENCH_HPP

#include <vector>

#include "hoptraj/trajectory.hpp"

namespace hoptraj {

struct BenchResult {
  TrajectoryType type;
  int iters;
  double median_ns;
  double p99_ns;
};

/// Wall-clock latency of make_hop_trajectory on representative hop setups,
/// one result per trajectory type.
std::vector<BenchResult> bench_make_hop(const RobotParamsd& params, int iters = 1000,
                                        bool use_cache = false);

}  // namespace hoptraj

#endif  // HOPTRAJ_BENCH_HPP
