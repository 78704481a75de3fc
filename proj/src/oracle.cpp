#include "prodform/oracle.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace prodform {

double TruncatedResult::prob(const WState& s) const {
  if (s.n0 < 0 || s.n0 > cap) return 0.0;
  size_t idx = static_cast<size_t>(s.n0) * (1u << c) + s.mask;
  return w_probs.at(idx);
}

namespace {

/// Solve the truncated chain once at a fixed cap.  States are indexed as
/// boundary pool first, then (n0, mask) with n0 in 0..cap.  Positive jumps
/// beyond the cap land on the cap level.
std::vector<double> solve_once(const ProcessSpec& spec, int cap) {
  const int n_v = spec.boundary.size();
  const unsigned n_masks = 1u << spec.c;
  const long n_w = static_cast<long>(cap + 1) * n_masks;
  const long M = n_v + n_w;
  auto w_index = [&](int n0, unsigned mask) -> long {
    return n_v + static_cast<long>(n0) * n_masks + mask;
  };

  // Assemble Q^T directly: rate r from i to j adds r at (j, i) and -r at (i, i).
  std::vector<Eigen::Triplet<double>> trip;
  auto add_rate = [&](long i, long j, double r) {
    if (r == 0.0 || i == j) return;
    trip.emplace_back(j, i, r);
    trip.emplace_back(i, i, -r);
  };

  for (const auto& t : spec.boundary.v_rates)
    add_rate(t.from, t.to, t.rate);
  for (const auto& e : spec.boundary.entries)
    add_rate(e.from_v, w_index(e.to.n0, e.to.mask), e.rate);
  for (int n0 = 0; n0 <= cap; ++n0) {
    for (unsigned mask = 0; mask < n_masks; ++mask) {
      long src = w_index(n0, mask);
      for (const Transition& t : transitions_from(spec, WState{n0, mask})) {
        if (t.to_v) {
          add_rate(src, t.v, t.rate);
        } else {
          int lvl = std::min(t.w.n0, cap);
          add_rate(src, w_index(lvl, t.w.mask), t.rate);
        }
      }
    }
  }

  Eigen::SparseMatrix<double> A(M, M);
  A.setFromTriplets(trip.begin(), trip.end());
  // Replace the last balance equation with the normalization sum = 1.
  for (long i = 0; i < M; ++i) A.coeffRef(M - 1, i) = 1.0;
  A.makeCompressed();

  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(M);
  rhs(M - 1) = 1.0;

  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
  lu.compute(A);
  if (lu.info() != Eigen::Success)
    throw ReducibleChain("truncated-generator factorization failed");
  Eigen::VectorXd pi = lu.solve(rhs);
  if (lu.info() != Eigen::Success || !pi.allFinite())
    throw ReducibleChain("truncated-generator solve failed");

  if (pi.minCoeff() < -1e-8)
    throw ReducibleChain("truncated chain produced a negative probability");
  double residual = (A * pi - rhs).cwiseAbs().maxCoeff();
  if (!(residual < 1e-7))
    throw NotConverged("truncated balance residual too large");

  return std::vector<double>(pi.data(), pi.data() + M);
}

}  // namespace

TruncatedResult truncated_steady_state(const ProcessSpec& spec, int N) {
  if (N < spec.K + spec.max_down() + 1)
    throw BadParams("truncation cap too small for the jump range");
  const int n_v = spec.boundary.size();
  const unsigned n_masks = 1u << spec.c;

  std::vector<double> coarse = solve_once(spec, N);
  std::vector<double> fine = solve_once(spec, 2 * N);

  double delta = 0;
  for (long i = 0; i < n_v + static_cast<long>(N + 1) * n_masks; ++i)
    delta = std::max(delta, std::abs(coarse[static_cast<size_t>(i)] -
                                     fine[static_cast<size_t>(i)]));
  if (!(delta < 1e-9)) {
    std::ostringstream os;
    os << "doubling the truncation cap from " << N << " to " << 2 * N
       << " moved retained probabilities by " << delta;
    throw NotConverged(os.str());
  }

  TruncatedResult res;
  res.cap = 2 * N;
  res.c = spec.c;
  res.max_doubling_delta = delta;
  res.v_probs.assign(fine.begin(), fine.begin() + n_v);
  res.w_probs.assign(fine.begin() + n_v, fine.end());
  return res;
}

TransientF transient_F(const ProcessSpec& spec, int levels,
                       std::vector<double> t_grid, double rel_tol) {
  if (levels < 1) throw BadParams("need at least one strip level");
  for (double t : t_grid)
    if (!(t >= 0)) throw BadParams("grid times must be non-negative");

  LevelMatrices lm = level_matrices(spec);
  const int dim = lm.c + 1;

  TransientF out;
  out.t_grid = t_grid;
  out.F.assign(t_grid.size(), Eigen::MatrixXd::Ones(levels, dim));
  if (t_grid.empty()) return out;

  // Upward jumps do not advance the tagged position, so they act on the
  // current level; downward jumps feed from lower levels, and jumps through
  // the bottom leave the strip (absorption).  With F values stored as rows,
  // dF_{n0} = F_{n0} M0^T + sum_k F_{n0-k} Lambda_{-k}^T.
  Eigen::MatrixXd M0t = Eigen::MatrixXd::Zero(dim, dim);
  for (int i = 0; i <= lm.K; ++i) M0t += lm.at(i).transpose();
  std::vector<Eigen::MatrixXd> down_t;
  for (int k = 1; k <= lm.L; ++k) down_t.push_back(lm.at(-k).transpose());

  using Mat = Eigen::MatrixXd;
  auto deriv = [&](const Mat& Y, Mat& dY) {
    dY.noalias() = Y * M0t;
    for (int k = 1; k <= lm.L; ++k) {
      int rows = levels - k;
      if (rows <= 0) break;
      dY.bottomRows(rows).noalias() +=
          Y.topRows(rows) * down_t[static_cast<size_t>(k - 1)];
    }
  };

  // Dormand-Prince 5(4) coefficients (FSAL).
  static const double a21 = 1.0 / 5;
  static const double a31 = 3.0 / 40, a32 = 9.0 / 40;
  static const double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  static const double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187,
                      a53 = 64448.0 / 6561, a54 = -212.0 / 729;
  static const double a61 = 9017.0 / 3168, a62 = -355.0 / 33,
                      a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                      a65 = -5103.0 / 18656;
  static const double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                      b5 = -2187.0 / 6784, b6 = 11.0 / 84;
  static const double e1 = 35.0 / 384 - 5179.0 / 57600,
                      e3 = 500.0 / 1113 - 7571.0 / 16695,
                      e4 = 125.0 / 192 - 393.0 / 640,
                      e5 = -2187.0 / 6784 + 92097.0 / 339200,
                      e6 = 11.0 / 84 - 187.0 / 2100, e7 = -1.0 / 40;

  std::vector<size_t> order(t_grid.size());
  std::iota(order.begin(), order.end(), size_t{0});
  std::sort(order.begin(), order.end(),
            [&](size_t a, size_t b) { return t_grid[a] < t_grid[b]; });

  Mat Y = Mat::Ones(levels, dim);
  Mat k1(levels, dim), k2(levels, dim), k3(levels, dim), k4(levels, dim),
      k5(levels, dim), k6(levels, dim), k7(levels, dim), Ytmp(levels, dim),
      Ynew(levels, dim), Err(levels, dim);
  deriv(Y, k1);

  double t = 0;
  const double t_end = t_grid[order.back()];
  const double atol = 1e-12;
  double h = std::max(1e-8, t_end / 1024.0);
  size_t next_out = 0;
  while (next_out < order.size() && t_grid[order[next_out]] <= 0.0)
    ++next_out;  // F(0) is the all-ones initial condition already stored.

  while (next_out < order.size()) {
    double target = t_grid[order[next_out]];
    bool hit = false;
    double hs = h;
    if (t + hs >= target) {
      hs = target - t;
      hit = true;
    }
    Ytmp = Y + hs * a21 * k1;
    deriv(Ytmp, k2);
    Ytmp = Y + hs * (a31 * k1 + a32 * k2);
    deriv(Ytmp, k3);
    Ytmp = Y + hs * (a41 * k1 + a42 * k2 + a43 * k3);
    deriv(Ytmp, k4);
    Ytmp = Y + hs * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4);
    deriv(Ytmp, k5);
    Ytmp = Y + hs * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5);
    deriv(Ytmp, k6);
    Ynew = Y + hs * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
    deriv(Ynew, k7);
    Err = hs * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);

    double err = 0;
    for (int r = 0; r < levels; ++r)
      for (int col = 0; col < dim; ++col) {
        double sc = atol + rel_tol * std::max(std::abs(Y(r, col)),
                                              std::abs(Ynew(r, col)));
        err = std::max(err, std::abs(Err(r, col)) / sc);
      }

    bool accept = err <= 1.0 || hs <= 1e-14 * (1.0 + t_end);
    if (accept) {
      t += hs;
      Y.swap(Ynew);
      k1.swap(k7);
      if (hit) {
        while (next_out < order.size() &&
               t_grid[order[next_out]] <= t + 1e-14 * (1.0 + t)) {
          out.F[order[next_out]] = Y;
          ++next_out;
        }
      }
    }
    double factor =
        err > 0 ? std::min(5.0, std::max(0.2, 0.9 * std::pow(err, -0.2))) : 5.0;
    if (!accept || !hit) {
      h = hs * factor;
    }  // else: keep the natural step; hs was only clipped to hit the grid.
    if (!(h > 1e-14 * (1.0 + t_end)))
      throw NotConverged("transient integrator step size collapsed");
  }
  return out;
}

}  // namespace prodform
