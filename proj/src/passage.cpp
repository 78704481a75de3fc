#include "prodform/passage.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace prodform {

LevelMatrices level_matrices(const ProcessSpec& spec) {
  if (!spec.symmetric)
    throw NotSymmetric("the aggregated strip requires identical planes");

  LevelMatrices lm;
  lm.c = spec.c;
  lm.K = spec.K;
  lm.L = spec.max_down();
  const RatePlane& p = spec.planes[0];
  const int dim = spec.c + 1;

  lm.lambda.assign(static_cast<size_t>(lm.L + lm.K + 1),
                   Eigen::MatrixXd::Zero(dim, dim));
  for (int k = -lm.L; k <= lm.K; ++k) {
    Eigen::MatrixXd& M = lm.lambda[static_cast<size_t>(k + lm.L)];
    for (int m = 0; m <= spec.c; ++m) {
      double up = p.a(k) * (spec.c - m);
      double stay = p.b(k) * (spec.c - m) + p.c(k) * m;
      double down = p.d(k) * m;
      if (m + 1 <= spec.c) M(m, m + 1) += up;
      M(m, m) += stay;
      if (m - 1 >= 0) M(m, m - 1) += down;
    }
  }

  // Complete the diagonal of the jump-0 matrix so that row sums over all
  // level matrices vanish (generator property).
  for (int m = 0; m <= spec.c; ++m) {
    double row_sum = 0;
    for (const auto& M : lm.lambda) row_sum += M.row(m).sum();
    lm.lambda[static_cast<size_t>(lm.L)](m, m) -= row_sum;
  }

  lm.assumption4 = true;
  for (int k = 1; k <= lm.K; ++k) {
    if (p.a(k) != 0.0 || p.d(k) != 0.0 || p.b(k) != p.c(k)) {
      lm.assumption4 = false;
      break;
    }
  }
  if (lm.assumption4) {
    lm.arrival_rates.resize(static_cast<size_t>(lm.K));
    for (int k = 1; k <= lm.K; ++k)
      lm.arrival_rates[static_cast<size_t>(k - 1)] = spec.c * p.b(k);
  }
  return lm;
}

WaitingTimeMixture waiting_time_mixture(const EquilibriumSolution& sol,
                                        const LevelMatrices& lm,
                                        const SolverOptions& opts) {
  if (!sol.aggregated)
    throw NotSymmetric("the waiting-time mixture requires an aggregated solution");
  if (!lm.assumption4)
    throw AssumptionFourViolated(
        "arrival matrices are not scalar: upward jumps must not move the "
        "binary coordinates and must be phase-independent");

  WaitingTimeMixture mix;
  const auto& entries = sol.aggregated->entries;
  double slowest = 0;
  for (size_t j = 0; j < entries.size(); ++j) {
    const AggregatedEntry& e = entries[j];
    MixtureTerm term;
    Complex omega_sum(0, 0);
    for (const Complex& w : e.omega) omega_sum += w;
    term.weight = sol.gammas[j] * omega_sum / (1.0 - e.beta0);
    term.rate = Complex(0, 0);
    for (int i = 1; i <= lm.K; ++i)
      term.rate += (1.0 - std::pow(e.beta0, -i)) *
                   lm.arrival_rates[static_cast<size_t>(i - 1)];
    if (term.rate.real() >= 0) {
      std::ostringstream os;
      os << "mixture term " << j << " has non-decaying rate "
         << term.rate.real();
      throw PositiveExponent(os.str());
    }
    slowest = (j == 0) ? std::abs(term.rate.real())
                       : std::min(slowest, std::abs(term.rate.real()));
    mix.terms.push_back(term);
  }

  Complex mass(0, 0);
  for (const auto& t : mix.terms) mass += t.weight;
  if (std::abs(mass.imag()) > opts.imag_tol * (1.0 + std::abs(mass)))
    throw ResidualCheckFailed("strip mass has a non-negligible imaginary part");
  mix.strip_mass = mass.real();
  mix.t_max = slowest > 0 ? 20.0 / slowest : 1.0;
  return mix;
}

Complex evaluate_F_raw(const WaitingTimeMixture& mix, double t) {
  Complex acc(0, 0);
  for (const auto& term : mix.terms)
    acc += term.weight * std::exp(term.rate * t);
  return acc;
}

double evaluate_F(const WaitingTimeMixture& mix, double t) {
  if (t < 0) throw BadParams("the waiting-time tail is defined for t >= 0");
  Complex v = evaluate_F_raw(mix, t);
  double r = v.real();
  return std::min(1.0, std::max(0.0, r));
}

}  // namespace prodform
