#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "prodform/model.hpp"
#include "prodform/passage.hpp"

namespace prodform {

/// Brute-force steady state of the generator truncated at level `cap`.
/// Positive jumps beyond the cap are clipped onto the cap level, so the
/// truncated generator is conservative.
struct TruncatedResult {
  int cap = 0;
  int c = 0;
  std::vector<double> v_probs;  ///< aligned with the spec's boundary pool
  std::vector<double> w_probs;  ///< index n0 * 2^c + mask
  double max_doubling_delta = 0;  ///< observed change when the cap doubled

  double prob(const WState& s) const;
  double prob_v(int v) const { return v_probs.at(static_cast<size_t>(v)); }
};

/// Solve the truncated chain at cap N, validate by doubling to 2N (retained
/// probabilities must move by less than 1e-9), and return the finer solution.
/// Throws NotConverged or ReducibleChain.
TruncatedResult truncated_steady_state(const ProcessSpec& spec, int N);

/// First-passage survival probabilities of the aggregated strip with upward
/// jumps suppressed: F[g](n0, m) = P(still interior at t_grid[g] | start at
/// (n0, m)), integrated with an adaptive Runge-Kutta scheme.
struct TransientF {
  std::vector<double> t_grid;
  std::vector<Eigen::MatrixXd> F;  ///< one (levels x phases) matrix per grid point
};

TransientF transient_F(const ProcessSpec& spec, int levels,
                       std::vector<double> t_grid, double rel_tol = 1e-9);

/// Mean, half-width of a 95% confidence interval, and sample count.
struct SimEstimate {
  double value = 0;
  double half_width = 0;
  long samples = 0;
};

struct SimConfig {
  long arrivals = 200000;       ///< tagged arrivals per replication
  int replications = 10;
  double warmup_fraction = 0.1;
  std::vector<double> t_grid;   ///< waiting-tail evaluation points
  std::uint64_t seed = 1;
};

/// Event-level simulation results.  Occupancy estimates cover the boundary
/// pool and low interior levels; waiting-time tails are measured per arriving
/// job (time from arrival to server assignment) for preset queues.
struct SimResult {
  SimEstimate v_mass;  ///< total boundary-pool probability
  std::map<std::string, SimEstimate> v_probs;
  std::map<std::pair<int, unsigned>, SimEstimate> w_probs;  ///< (n0, mask)
  std::vector<std::pair<double, SimEstimate>> waiting_tail;  ///< (t, P(W > t))
  std::uint64_t seed = 0;
};

/// Simulate a preset queue (event level, independent replications, fixed seed
/// => bit-identical results).  Raw specs are simulated as bare Markov chains
/// and produce occupancy estimates only.
SimResult simulate(const ProcessSpec& spec, const SimConfig& cfg);

}  // namespace prodform
