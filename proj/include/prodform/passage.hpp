#pragma once

#include <Eigen/Dense>
#include <vector>

#include "prodform/equilibrium.hpp"
#include "prodform/model.hpp"
#include "prodform/options.hpp"

namespace prodform {

/// Level matrices of the aggregated strip of a symmetric spec: Lambda_k holds
/// the rates from (n0, m) to (n0 + k, m'), m = 0..c, with the diagonal of
/// Lambda_0 completed so that row sums over all matrices vanish.
struct LevelMatrices {
  int c = 0, K = 0, L = 0;
  std::vector<Eigen::MatrixXd> lambda;  ///< index j = k + L for k in -L..K

  bool assumption4 = false;             ///< Lambda_k = lambda_k I for k >= 1
  std::vector<double> arrival_rates;    ///< lambda_1..lambda_K when assumption4

  const Eigen::MatrixXd& at(int k) const { return lambda.at(k + L); }
};

/// One exponential term of the waiting-time tail.
struct MixtureTerm {
  Complex weight;
  Complex rate;  ///< sum_i (1 - beta0^{-i}) lambda_i; must decay
};

struct WaitingTimeMixture {
  std::vector<MixtureTerm> terms;
  double strip_mass = 0;  ///< F(0): total interior probability
  double t_max = 0;       ///< suggested evaluation horizon
};

/// Build the strip level matrices; throws NotSymmetric.
LevelMatrices level_matrices(const ProcessSpec& spec);

/// Waiting-time tail as a mixture of exponentials.  Requires a symmetric
/// solution and scalar arrival matrices; throws AssumptionFourViolated or
/// PositiveExponent.
WaitingTimeMixture waiting_time_mixture(const EquilibriumSolution& sol,
                                        const LevelMatrices& lm,
                                        const SolverOptions& opts = {});

/// Tail value F(t) = P(wait > t), clamped to [0, 1].
double evaluate_F(const WaitingTimeMixture& mix, double t);

/// Unclamped complex evaluation (diagnostics).
Complex evaluate_F_raw(const WaitingTimeMixture& mix, double t);

}  // namespace prodform
