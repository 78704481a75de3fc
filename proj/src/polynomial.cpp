#include "prodform/polynomial.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>

namespace prodform::poly {

RVec add(const RVec& p, const RVec& q) {
  RVec r(std::max(p.size(), q.size()), 0.0);
  for (size_t i = 0; i < p.size(); ++i) r[i] += p[i];
  for (size_t i = 0; i < q.size(); ++i) r[i] += q[i];
  return r;
}

RVec sub(const RVec& p, const RVec& q) {
  RVec r(std::max(p.size(), q.size()), 0.0);
  for (size_t i = 0; i < p.size(); ++i) r[i] += p[i];
  for (size_t i = 0; i < q.size(); ++i) r[i] -= q[i];
  return r;
}

RVec mul(const RVec& p, const RVec& q) {
  if (p.empty() || q.empty()) return {};
  RVec r(p.size() + q.size() - 1, 0.0);
  for (size_t i = 0; i < p.size(); ++i)
    for (size_t j = 0; j < q.size(); ++j) r[i + j] += p[i] * q[j];
  return r;
}

RVec scale(RVec p, double s) {
  for (double& v : p) v *= s;
  return p;
}

RVec trim(RVec p, double rel_eps) {
  double maxc = 0;
  for (double v : p) maxc = std::max(maxc, std::abs(v));
  if (maxc == 0) return {};
  while (!p.empty() && std::abs(p.back()) <= rel_eps * maxc) p.pop_back();
  return p;
}

int degree(const RVec& p) {
  for (size_t i = p.size(); i-- > 0;)
    if (p[i] != 0.0) return static_cast<int>(i);
  return -1;
}

Complex eval(const RVec& p, Complex z) {
  Complex acc(0, 0);
  for (size_t i = p.size(); i-- > 0;) acc = acc * z + p[i];
  return acc;
}

Complex eval_deriv(const RVec& p, Complex z) {
  Complex acc(0, 0);
  for (size_t i = p.size(); i-- > 1;)
    acc = acc * z + static_cast<double>(i) * p[i];
  return acc;
}

Complex polish(const RVec& p, Complex z0, int iters) {
  Complex best = z0;
  double best_abs = std::abs(eval(p, z0));
  Complex z = z0;
  for (int it = 0; it < iters; ++it) {
    Complex f = eval(p, z);
    Complex df = eval_deriv(p, z);
    if (std::abs(df) == 0.0) break;
    Complex step = f / df;
    z -= step;
    double a = std::abs(eval(p, z));
    if (a < best_abs) {
      best_abs = a;
      best = z;
    }
    if (std::abs(step) <= 1e-16 * (1.0 + std::abs(z))) break;
  }
  return best;
}

std::vector<Complex> roots(const RVec& p_in) {
  RVec p = trim(p_in);
  int n = degree(p);
  if (n <= 0) return {};
  if (n == 1) return {Complex(-p[0] / p[1], 0.0)};

  Eigen::MatrixXd comp = Eigen::MatrixXd::Zero(n, n);
  for (int i = 1; i < n; ++i) comp(i, i - 1) = 1.0;
  for (int i = 0; i < n; ++i) comp(i, n - 1) = -p[static_cast<size_t>(i)] / p[static_cast<size_t>(n)];

  Eigen::EigenSolver<Eigen::MatrixXd> es(comp, /*computeEigenvectors=*/false);
  std::vector<Complex> out;
  out.reserve(static_cast<size_t>(n));
  const auto& ev = es.eigenvalues();
  for (int i = 0; i < n; ++i) {
    Complex z(ev[i].real(), ev[i].imag());
    double im_eps = 1e-14 * (1.0 + std::abs(z));
    if (std::abs(z.imag()) <= im_eps) {
      // Polish along the real axis to keep real roots exactly real.
      Complex r = polish(p, Complex(z.real(), 0.0));
      out.emplace_back(r.real(), 0.0);
    } else if (z.imag() > 0) {
      Complex r = polish(p, z);
      out.push_back(r);
      out.push_back(std::conj(r));  // enforce conjugate pairing exactly
    }
  }
  // A real polish step can only change the real part, so the count stays n
  // unless an eigenvalue pair straddled the axis; fall back to raw values.
  if (static_cast<int>(out.size()) != n) {
    out.clear();
    for (int i = 0; i < n; ++i) out.emplace_back(ev[i].real(), ev[i].imag());
  }
  std::sort(out.begin(), out.end(), [](const Complex& a, const Complex& b) {
    if (a.real() != b.real()) return a.real() < b.real();
    return a.imag() < b.imag();
  });
  return out;
}

}  // namespace prodform::poly
