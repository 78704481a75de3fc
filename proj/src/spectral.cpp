#include "prodform/spectral.hpp"

#include <Eigen/Dense>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <sstream>

#include "prodform/polynomial.hpp"

namespace prodform {

namespace {

std::string cxs(Complex z) {
  std::ostringstream os;
  os << z.real();
  if (z.imag() != 0) os << (z.imag() > 0 ? "+" : "") << z.imag() << "i";
  return os.str();
}

std::string signs_str(const SignVector& s) {
  std::string out;
  for (int v : s.x) out += (v > 0 ? '+' : '-');
  return out;
}

}  // namespace

double SignVector::eta() const {
  int sum = 0;
  for (int v : x) sum += v;
  return -static_cast<double>(sum) / static_cast<double>(x.size());
}

int SignVector::minus_count() const {
  int m = 0;
  for (int v : x)
    if (v < 0) ++m;
  return m;
}

SignVector SignVector::from_minus_mask(unsigned mask, int c) {
  SignVector s;
  s.x.resize(static_cast<size_t>(c));
  for (int i = 0; i < c; ++i) s.x[static_cast<size_t>(i)] = ((mask >> i) & 1u) ? -1 : 1;
  return s;
}

Complex ProductForm::value(const WState& s) const {
  Complex v = std::pow(beta0, s.n0);
  for (size_t i = 0; i < betas.size(); ++i)
    if ((s.mask >> i) & 1u) v *= betas[i];
  return v;
}

Complex branch_equation(const GeneratingFunctions& gf, Complex beta,
                        const SignVector& signs) {
  Complex total(0, 0);
  Complex bK = std::pow(beta, gf.K);
  for (int i = 0; i < gf.c; ++i) {
    const PlaneGf& g = gf.plane[static_cast<size_t>(i)];
    Complex h = static_cast<double>(signs.x[static_cast<size_t>(i)]) * std::sqrt(g.disc(beta));
    h += g.evalB(beta) + g.evalC(beta) - bK * g.S();
    total += h;
  }
  return total;
}

// --- residual helpers ----------------------------------------------------------

namespace {

/// Inner balance equation in generating-function form at the binary setting
/// given by `mask`, for the candidate product form (beta0, betas).
Complex eq_gf_value(const GeneratingFunctions& gf, Complex beta0,
                    const std::vector<Complex>& betas, unsigned mask) {
  Complex lhs(0, 0);
  double out_rate = 0;
  Complex bK = std::pow(beta0, gf.K);
  for (int i = 0; i < gf.c; ++i) {
    const PlaneGf& g = gf.plane[static_cast<size_t>(i)];
    if ((mask >> i) & 1u) {
      lhs += g.evalA(beta0) / betas[static_cast<size_t>(i)] + g.evalC(beta0);
      out_rate += g.C1 + g.D1;
    } else {
      lhs += g.evalB(beta0) + g.evalD(beta0) * betas[static_cast<size_t>(i)];
      out_rate += g.A1 + g.B1;
    }
  }
  return lhs - bK * out_rate;
}

double coeff_residual(const PlaneGf& g, Complex beta0, Complex beta_i) {
  Complex bK = std::pow(beta0, g.K);
  Complex r = g.evalA(beta0) / beta_i - g.evalB(beta0) + g.evalC(beta0) -
              g.evalD(beta0) * beta_i + bK * (g.A1 + g.B1 - g.C1 - g.D1);
  return std::abs(r);
}

/// Bisection to machine precision on a sign-changing interval, finished with
/// a couple of secant steps for the last digits.
template <typename F>
double refine_root(F f, double a, double b, double fa, double fb) {
  if (fa == 0.0) return a;
  if (fb == 0.0) return b;
  for (int iter = 0; iter < 200; ++iter) {
    double m = 0.5 * (a + b);
    if (m <= a || m >= b) break;  // interval collapsed to adjacent doubles
    double fm = f(m);
    if (fm == 0.0) return m;
    if ((fm > 0) == (fa > 0)) {
      a = m;
      fa = fm;
    } else {
      b = m;
      fb = fm;
    }
  }
  return std::abs(fa) <= std::abs(fb) ? a : b;
}

poly::RVec gf_Q_poly(const PlaneGf& g) {
  poly::RVec q = poly::add(g.B, g.C);
  poly::RVec sk(static_cast<size_t>(g.K) + 1, 0.0);
  sk[static_cast<size_t>(g.K)] = g.S();
  return poly::sub(q, sk);
}

poly::RVec gf_F_poly(const PlaneGf& g) {
  poly::RVec f(static_cast<size_t>(g.K) + 1, 0.0);
  f[static_cast<size_t>(g.K)] = g.A1 + g.B1 - g.C1 - g.D1;
  return poly::add(poly::sub(f, g.B), g.C);
}

poly::RVec gf_disc_poly(const PlaneGf& g) {
  poly::RVec f = gf_F_poly(g);
  return poly::add(poly::mul(f, f), poly::scale(poly::mul(g.A, g.D), 4.0));
}

/// Exact synthetic division of p by (z - r); the remainder is discarded.
poly::RVec deflate(const poly::RVec& p, double r) {
  int n = poly::degree(p);
  if (n < 1) return {};
  poly::RVec q(static_cast<size_t>(n), 0.0);
  double carry = p[static_cast<size_t>(n)];
  for (int i = n - 1; i >= 0; --i) {
    q[static_cast<size_t>(i)] = carry;
    carry = p[static_cast<size_t>(i)] + r * carry;
  }
  return q;
}

}  // namespace

// --- K = 1 per-sign-vector root ------------------------------------------------

RootRecord roots_k1(const GeneratingFunctions& gf, const SignVector& signs,
                    const SolverOptions& opts) {
  if (gf.K != 1)
    throw BadParams("per-sign-vector bracketing requires K = 1");
  if (signs.c() != gf.c) throw BadParams("sign vector length mismatch");

  double rs = gf.rate_scale();
  auto h = [&](double t) {
    return branch_equation(gf, Complex(t, 0.0), signs).real();
  };

  const double hi = 1.0 - 1e-9;
  auto scan = [&](int n) {
    std::vector<std::pair<double, double>> br;
    double prev_t = 0.0, prev_h = h(0.0);
    for (int j = 1; j <= n; ++j) {
      double t = hi * static_cast<double>(j) / static_cast<double>(n);
      double ht = h(t);
      if (ht == 0.0 || prev_h * ht < 0.0) br.emplace_back(prev_t, t);
      prev_t = t;
      prev_h = ht;
    }
    return br;
  };

  int grid = opts.bracket_grid;
  auto brackets = scan(grid);
  for (int attempt = 0; brackets.size() != 1 && attempt < 3; ++attempt) {
    grid *= 4;
    brackets = scan(grid);
  }
  if (brackets.empty())
    throw NoBracket(
        "no sign change of the branch equation on (0, 1): check ergodicity");
  if (brackets.size() > 1) {
    std::ostringstream os;
    os << brackets.size()
       << " sign changes of the branch equation on (0, 1) survive refinement";
    throw MultipleRoots(os.str());
  }

  auto [a, b] = brackets.front();
  double root = refine_root(h, a, b, h(a), h(b));

  RootRecord rec;
  rec.beta0 = Complex(root, 0.0);
  rec.eta = signs.eta();
  rec.signs = signs;
  rec.residual_unsquared = std::abs(h(root)) / rs;
  rec.residual_squared = rec.residual_unsquared;
  rec.multiplicity = 1;
  for (int i = 0; i < gf.c; ++i) {
    const PlaneGf& g = gf.plane[static_cast<size_t>(i)];
    if (std::abs(g.disc(rec.beta0)) < opts.degen_tol * rs * rs)
      rec.degenerate_discriminant = true;
    if (std::abs(g.evalD(rec.beta0)) < opts.degen_tol * rs) rec.d_vanishes = true;
  }
  return rec;
}

// --- symmetric eta-class roots ---------------------------------------------------

std::vector<RootRecord> roots_symmetric(const GeneratingFunctions& gf, double eta,
                                        const SolverOptions& opts) {
  if (!gf.symmetric)
    throw NotSymmetric("eta-class root search requires identical planes");
  const PlaneGf& g = gf.plane[0];
  double rs = gf.rate_scale();

  poly::RVec Q = gf_Q_poly(g);
  poly::RVec P;
  bool squared = std::abs(eta) > 0;
  if (squared) {
    P = poly::sub(poly::mul(Q, Q), poly::scale(gf_disc_poly(g), eta * eta));
  } else {
    P = Q;
  }
  P = poly::trim(P);

  // For |eta| = 1 the polynomial vanishes at z = 1 identically; divide that
  // root out exactly to keep the remaining roots well conditioned.
  if (std::abs(std::abs(eta) - 1.0) < 1e-15) P = deflate(P, 1.0);

  double pscale = 0;
  for (double v : P) pscale = std::max(pscale, std::abs(v));
  if (pscale == 0) throw RootCountMismatch("eta-class polynomial is identically zero");

  std::vector<Complex> zs = poly::roots(P);
  std::vector<RootRecord> out;
  int in_disc = 0;
  for (Complex z : zs) {
    double az = std::abs(z);
    if (az >= 1.0) continue;
    RootRecord rec;
    rec.beta0 = z;
    rec.eta = eta;
    rec.multiplicity = squared ? 1 : 2;
    rec.residual_squared = std::abs(poly::eval(P, z)) / pscale;
    Complex s = std::sqrt(g.disc(z));
    Complex qv = g.evalB(z) + g.evalC(z) - std::pow(z, g.K) * g.S();
    rec.residual_unsquared =
        std::min(std::abs(qv - std::abs(eta) * s), std::abs(qv + std::abs(eta) * s)) / rs;
    if (std::abs(g.disc(z)) < opts.degen_tol * rs * rs)
      rec.degenerate_discriminant = true;
    if (std::abs(g.evalD(z)) < opts.degen_tol * rs) rec.d_vanishes = true;
    if (az >= 1.0 - opts.unit_margin) {
      rec.in_annulus = true;
      out.push_back(rec);
      continue;
    }
    in_disc += squared ? 1 : 2;
    out.push_back(rec);
  }

  if (in_disc != 2 * gf.K) {
    std::ostringstream os;
    os << "expected " << 2 * gf.K << " roots inside the unit disc for eta = "
       << eta << ", found " << in_disc;
    throw RootCountMismatch(os.str());
  }
  std::sort(out.begin(), out.end(), [](const RootRecord& a, const RootRecord& b) {
    if (a.beta0.real() != b.beta0.real()) return a.beta0.real() < b.beta0.real();
    return a.beta0.imag() < b.beta0.imag();
  });
  return out;
}

// --- deduplication across eta classes --------------------------------------------

std::vector<UniqueRoot> dedup_roots(const std::vector<RootRecord>& records, int c,
                                    int K, const SolverOptions& opts) {
  // Group records by |eta| class (classes are exact multiples of 1/c).
  std::map<int, std::vector<const RootRecord*>> classes;
  for (const auto& r : records) {
    if (r.in_annulus) continue;
    int cls = static_cast<int>(std::lround(std::abs(r.eta) * c));
    classes[cls].push_back(&r);
  }

  std::vector<UniqueRoot> unique;
  for (auto& [cls, recs] : classes) {
    std::vector<bool> used(recs.size(), false);
    for (size_t i = 0; i < recs.size(); ++i) {
      if (used[i]) continue;
      used[i] = true;
      UniqueRoot u;
      u.beta0 = recs[i]->beta0;
      u.abs_eta = static_cast<double>(cls) / static_cast<double>(c);
      u.multiplicity = recs[i]->multiplicity;
      u.degenerate = recs[i]->degenerate_discriminant;
      u.d_vanishes = recs[i]->d_vanishes;
      Complex sum = recs[i]->beta0;
      int n = 1;
      for (size_t j = i + 1; j < recs.size(); ++j) {
        if (used[j]) continue;
        if (std::abs(recs[j]->beta0 - recs[i]->beta0) <= opts.dedup_tol) {
          used[j] = true;
          sum += recs[j]->beta0;
          ++n;
          u.multiplicity = std::max(u.multiplicity, recs[j]->multiplicity);
          u.degenerate = u.degenerate || recs[j]->degenerate_discriminant;
          u.d_vanishes = u.d_vanishes || recs[j]->d_vanishes;
        }
      }
      u.beta0 = sum / static_cast<double>(n);
      unique.push_back(u);
    }
  }

  std::sort(unique.begin(), unique.end(), [](const UniqueRoot& a, const UniqueRoot& b) {
    if (a.abs_eta != b.abs_eta) return a.abs_eta > b.abs_eta;
    if (a.beta0.real() != b.beta0.real()) return a.beta0.real() > b.beta0.real();
    return a.beta0.imag() < b.beta0.imag();
  });

  int expected = K * (c + 1);
  if (static_cast<int>(unique.size()) != expected) {
    std::ostringstream os;
    os << "expected " << expected << " unique roots, found " << unique.size();
    throw UniqueCountMismatch(os.str());
  }
  return unique;
}

// --- per-plane ratios ------------------------------------------------------------

ProductForm beta_i(const GeneratingFunctions& gf, Complex beta0,
                   const SignVector& signs, const SolverOptions& opts) {
  if (signs.c() != gf.c) throw BadParams("sign vector length mismatch");
  double rs = gf.rate_scale();

  ProductForm form;
  form.beta0 = beta0;
  form.signs = signs;
  form.eta = signs.eta();
  form.betas.resize(static_cast<size_t>(gf.c));
  form.discriminants.resize(static_cast<size_t>(gf.c));

  for (int i = 0; i < gf.c; ++i) {
    const PlaneGf& g = gf.plane[static_cast<size_t>(i)];
    Complex D = g.evalD(beta0);
    if (std::abs(D) < opts.degen_tol * rs) {
      std::ostringstream os;
      os << "D(" << cxs(beta0) << ") ~ 0 on plane " << i;
      throw DVanishes(os.str());
    }
    Complex disc = g.disc(beta0);
    Complex F = g.F(beta0);
    Complex s = std::sqrt(disc);
    Complex bi = (F + static_cast<double>(signs.x[static_cast<size_t>(i)]) * s) / (2.0 * D);
    form.discriminants[static_cast<size_t>(i)] = disc;
    form.betas[static_cast<size_t>(i)] = bi;
    if (std::abs(bi) < 1e-14 * (1.0 + std::abs(F / (2.0 * D)))) {
      std::ostringstream os;
      os << "vanishing ratio on plane " << i << " at root " << cxs(beta0);
      throw ResidualTooLarge(os.str());
    }
  }

  double worst = 0;
  for (int i = 0; i < gf.c; ++i)
    worst = std::max(worst, coeff_residual(gf.plane[static_cast<size_t>(i)], beta0,
                                           form.betas[static_cast<size_t>(i)]) / rs);
  worst = std::max(worst, std::abs(eq_gf_value(gf, beta0, form.betas, 0u)) / rs);
  for (int i = 0; i < gf.c; ++i)
    worst = std::max(worst,
                     std::abs(eq_gf_value(gf, beta0, form.betas, 1u << i)) / rs);
  form.residual = worst;
  if (worst > opts.form_tol) {
    std::ostringstream os;
    os << "inner-equation residual " << worst << " for root " << cxs(beta0)
       << " signs " << signs_str(signs);
    throw ResidualTooLarge(os.str());
  }
  return form;
}

// --- basis construction ------------------------------------------------------------

namespace {

bool same_form(const ProductForm& a, const ProductForm& b, double tol) {
  if (std::abs(a.beta0 - b.beta0) > tol) return false;
  for (size_t i = 0; i < a.betas.size(); ++i)
    if (std::abs(a.betas[i] - b.betas[i]) > tol * (1.0 + std::abs(a.betas[i])))
      return false;
  return true;
}

void finish_basis(ProductBasis& basis, const GeneratingFunctions& gf) {
  basis.expected_forms = (1 << gf.c) * gf.K;
  if (!basis.best_effort)
    basis.degenerate = static_cast<int>(basis.forms.size()) < basis.expected_forms;
  else
    basis.incomplete = static_cast<int>(basis.forms.size()) < basis.expected_forms;

  // Condition of the evaluation matrix on the canonical sample states
  // (n0 = 0..K-1 across all masks).
  int rows = (1 << gf.c) * gf.K;
  int cols = static_cast<int>(basis.forms.size());
  if (cols == 0) {
    basis.independence_condition = 0;
    return;
  }
  Eigen::MatrixXcd M(rows, cols);
  int r = 0;
  for (int n0 = 0; n0 < gf.K; ++n0)
    for (unsigned mask = 0; mask < (1u << gf.c); ++mask, ++r)
      for (int f = 0; f < cols; ++f)
        M(r, f) = basis.forms[static_cast<size_t>(f)].value(WState{n0, mask});
  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(M);
  double smin = svd.singularValues()(cols - 1);
  double smax = svd.singularValues()(0);
  basis.independence_condition = smin > 0 ? smax / smin : std::numeric_limits<double>::infinity();
}

void push_form(ProductBasis& basis, ProductForm form, double tol) {
  for (const auto& f : basis.forms)
    if (same_form(f, form, tol)) return;
  basis.forms.push_back(std::move(form));
}

ProductBasis build_basis_k1(const GeneratingFunctions& gf,
                            const SolverOptions& opts) {
  ProductBasis basis;
  for (unsigned mask = 0; mask < (1u << gf.c); ++mask) {
    SignVector x = SignVector::from_minus_mask(mask, gf.c);
    RootRecord rec = roots_k1(gf, x, opts);
    if (rec.degenerate_discriminant)
      basis.offending_roots.push_back(rec.beta0);
    ProductForm form = beta_i(gf, rec.beta0, x, opts);

    int cls = -1;
    for (size_t j = 0; j < basis.unique_beta0.size(); ++j) {
      if (std::abs(basis.unique_beta0[j].beta0 - rec.beta0) <= opts.dedup_tol &&
          basis.unique_beta0[j].abs_eta == std::abs(rec.eta)) {
        cls = static_cast<int>(j);
        break;
      }
    }
    if (cls < 0) {
      UniqueRoot u;
      u.beta0 = rec.beta0;
      u.abs_eta = std::abs(rec.eta);
      u.multiplicity = 1;
      u.degenerate = rec.degenerate_discriminant;
      u.d_vanishes = rec.d_vanishes;
      basis.unique_beta0.push_back(u);
      cls = static_cast<int>(basis.unique_beta0.size()) - 1;
    }
    form.root_class = cls;
    basis.rows.push_back({x, rec.beta0, form.betas});
    push_form(basis, std::move(form), opts.dedup_tol);
  }
  finish_basis(basis, gf);
  if (basis.degenerate)
    basis.diagnostics.push_back("distinct forms fewer than expected: basis is degenerate");
  return basis;
}

ProductBasis build_basis_symmetric(const GeneratingFunctions& gf,
                                   const SolverOptions& opts) {
  const PlaneGf& g = gf.plane[0];
  double rs = gf.rate_scale();

  std::vector<RootRecord> records;
  for (int m = 0; m <= gf.c; ++m) {
    double eta = (2.0 * m - gf.c) / gf.c;
    auto recs = roots_symmetric(gf, eta, opts);
    records.insert(records.end(), recs.begin(), recs.end());
  }

  ProductBasis basis;
  for (const auto& r : records)
    if (r.in_annulus) {
      std::ostringstream os;
      os << "root " << cxs(r.beta0) << " within the unit-margin annulus was excluded";
      basis.diagnostics.push_back(os.str());
    }

  std::vector<UniqueRoot> unique = dedup_roots(records, gf.c, gf.K, opts);
  basis.unique_beta0 = unique;

  auto note_offender = [&](Complex z) {
    for (Complex o : basis.offending_roots)
      if (std::abs(o - z) <= opts.dedup_tol) return;
    basis.offending_roots.push_back(z);
  };

  for (size_t j = 0; j < unique.size(); ++j) {
    const UniqueRoot& u = unique[j];
    if (u.degenerate) note_offender(u.beta0);

    std::vector<double> sides;
    if (u.abs_eta == 0.0) {
      sides.push_back(0.0);
    } else if (u.degenerate) {
      sides.push_back(u.abs_eta);
      sides.push_back(-u.abs_eta);
    } else {
      Complex s = std::sqrt(g.disc(u.beta0));
      Complex qv = g.evalB(u.beta0) + g.evalC(u.beta0) -
                   std::pow(u.beta0, g.K) * g.S();
      double rp = std::abs(qv - u.abs_eta * s) / rs;
      double rm = std::abs(qv + u.abs_eta * s) / rs;
      sides.push_back(rp <= rm ? u.abs_eta : -u.abs_eta);
      if (std::min(rp, rm) > opts.form_tol) {
        std::ostringstream os;
        os << "weak side attribution for root " << cxs(u.beta0)
           << ": residuals " << rp << " / " << rm;
        basis.diagnostics.push_back(os.str());
      }
    }

    for (double side : sides) {
      int minus = static_cast<int>(std::lround(gf.c * (1.0 + side) / 2.0));
      for (unsigned mask = 0; mask < (1u << gf.c); ++mask) {
        if (__builtin_popcount(mask) != minus) continue;
        SignVector x = SignVector::from_minus_mask(mask, gf.c);
        ProductForm form = beta_i(gf, u.beta0, x, opts);
        form.root_class = static_cast<int>(j);
        basis.rows.push_back({x, u.beta0, form.betas});
        push_form(basis, std::move(form), opts.dedup_tol);
      }
    }
  }

  finish_basis(basis, gf);
  if (basis.degenerate) {
    std::ostringstream os;
    os << "only " << basis.forms.size() << " distinct product forms out of "
       << basis.expected_forms << ": basis is degenerate";
    basis.diagnostics.push_back(os.str());
  }
  return basis;
}

ProductBasis build_basis_best_effort(const GeneratingFunctions& gf,
                                     const SolverOptions& opts) {
  ProductBasis basis;
  basis.best_effort = true;
  double rs = gf.rate_scale();

  // Branch-free product polynomial: the product over all sign patterns of
  // (R(z) + sum_i x_i s_i(z)) is symmetric under per-plane square-root flips,
  // hence a polynomial.  Sample it on a circle and invert the DFT.
  int Lmax = 0;
  for (const auto& g : gf.plane) Lmax = std::max(Lmax, g.L);
  int factor_deg = gf.K + Lmax;
  int deg = (1 << gf.c) * factor_deg;
  int M = deg + 1;
  const double rho = 0.875;
  const double pi = std::acos(-1.0);

  std::vector<Complex> samples(static_cast<size_t>(M));
  for (int j = 0; j < M; ++j) {
    Complex z = std::polar(rho, 2.0 * pi * j / M);
    Complex R(0, 0);
    Complex zK = std::pow(z, gf.K);
    std::vector<Complex> s(static_cast<size_t>(gf.c));
    for (int i = 0; i < gf.c; ++i) {
      const PlaneGf& g = gf.plane[static_cast<size_t>(i)];
      R += g.evalB(z) + g.evalC(z) - zK * g.S();
      s[static_cast<size_t>(i)] = std::sqrt(g.disc(z));
    }
    Complex prod(1, 0);
    for (unsigned mask = 0; mask < (1u << gf.c); ++mask) {
      Complex term = R;
      for (int i = 0; i < gf.c; ++i)
        term += (((mask >> i) & 1u) ? -1.0 : 1.0) * s[static_cast<size_t>(i)];
      prod *= term;
    }
    samples[static_cast<size_t>(j)] = prod;
  }

  poly::RVec P(static_cast<size_t>(M), 0.0);
  for (int k = 0; k < M; ++k) {
    Complex acc(0, 0);
    for (int j = 0; j < M; ++j)
      acc += samples[static_cast<size_t>(j)] * std::polar(1.0, -2.0 * pi * j * k / M);
    P[static_cast<size_t>(k)] = (acc / (static_cast<double>(M) * std::pow(rho, k))).real();
  }
  P = poly::trim(P, 1e-11);

  std::vector<Complex> zs = poly::roots(P);
  for (Complex z : zs) {
    if (std::abs(z) >= 1.0 - opts.unit_margin) continue;

    for (unsigned mask = 0; mask < (1u << gf.c); ++mask) {
      SignVector x = SignVector::from_minus_mask(mask, gf.c);
      Complex bq = branch_equation(gf, z, x);
      if (std::abs(bq) / rs > 1e-6) continue;

      // Refine on the matched unsquared branch with a secant step.
      Complex zr = z;
      for (int it = 0; it < 60; ++it) {
        Complex f0 = branch_equation(gf, zr, x);
        if (std::abs(f0) / rs < 1e-15) break;
        Complex dz = 1e-7 * (1.0 + std::abs(zr));
        Complex f1 = branch_equation(gf, zr + dz, x);
        if (f1 == f0) break;
        Complex step = f0 * dz / (f1 - f0);
        if (std::abs(step) > 0.1) step *= 0.1 / std::abs(step);
        zr -= step;
        if (std::abs(step) < 1e-16 * (1.0 + std::abs(zr))) break;
      }
      if (std::abs(zr) >= 1.0 - opts.unit_margin) continue;
      if (std::abs(branch_equation(gf, zr, x)) / rs > opts.form_tol) continue;

      ProductForm form;
      try {
        form = beta_i(gf, zr, x, opts);
      } catch (const SolverError&) {
        continue;
      }

      int cls = -1;
      for (size_t u = 0; u < basis.unique_beta0.size(); ++u) {
        if (std::abs(basis.unique_beta0[u].beta0 - zr) <= opts.dedup_tol) {
          cls = static_cast<int>(u);
          break;
        }
      }
      if (cls < 0) {
        UniqueRoot u;
        u.beta0 = zr;
        u.abs_eta = std::abs(x.eta());
        basis.unique_beta0.push_back(u);
        cls = static_cast<int>(basis.unique_beta0.size()) - 1;
      }
      form.root_class = cls;

      bool seen = false;
      for (const auto& row : basis.rows)
        if (row.signs.x == x.x && std::abs(row.beta0 - zr) <= opts.dedup_tol)
          seen = true;
      if (seen) continue;
      basis.rows.push_back({x, zr, form.betas});
      push_form(basis, std::move(form), opts.dedup_tol);
    }
  }

  finish_basis(basis, gf);
  if (basis.incomplete) {
    std::ostringstream os;
    os << "best-effort search found " << basis.forms.size() << " of "
       << basis.expected_forms << " product forms";
    basis.diagnostics.push_back(os.str());
  }
  return basis;
}

}  // namespace

ProductBasis build_basis(const ProcessSpec& spec, const GeneratingFunctions& gf,
                         const SolverOptions& opts) {
  (void)spec;
  if (gf.symmetric) return build_basis_symmetric(gf, opts);
  if (gf.K == 1) return build_basis_k1(gf, opts);
  return build_basis_best_effort(gf, opts);
}

// --- aggregation ---------------------------------------------------------------

std::vector<Complex> elementary_symmetric(const std::vector<Complex>& values) {
  std::vector<Complex> e(values.size() + 1, Complex(0, 0));
  e[0] = Complex(1, 0);
  size_t used = 0;
  for (Complex v : values) {
    ++used;
    for (size_t m = used; m >= 1; --m) e[m] += v * e[m - 1];
  }
  return e;
}

AggregatedBasis aggregate(const ProductBasis& basis, const GeneratingFunctions& gf,
                          const SolverOptions& opts) {
  if (!gf.symmetric)
    throw NotSymmetric("aggregation requires identical planes");
  if (basis.degenerate)
    throw DegenerateBasisInput("cannot aggregate a degenerate basis");
  (void)opts;

  AggregatedBasis agg;
  for (size_t j = 0; j < basis.unique_beta0.size(); ++j) {
    const ProductForm* rep = nullptr;
    for (const auto& f : basis.forms)
      if (f.root_class == static_cast<int>(j)) {
        rep = &f;
        break;
      }
    if (!rep) throw DegenerateBasisInput("root class without a representative form");
    AggregatedEntry e;
    e.beta0 = basis.unique_beta0[j].beta0;
    e.omega = elementary_symmetric(rep->betas);
    e.root_class = static_cast<int>(j);
    agg.entries.push_back(std::move(e));
  }
  return agg;
}

}  // namespace prodform
