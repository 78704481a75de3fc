#include <algorithm>
#include <cmath>
#include <complex>
#include <map>
#include <vector>

#include <doctest.h>

#include "prodform/equilibrium.hpp"
#include "prodform/spectral.hpp"

using namespace prodform;

namespace {

// Closed-form roots of the single-plane two-phase spec with arrival rate 1 and
// phase rate 3: the squared branch equation factors as (z-1)(9z^2 - 7z + 1),
// whose quadratic roots are (7 +- sqrt(13))/18.
const double kPlusRoot = 0.58919729308133273848;
const double kMinusRoot = 0.18858048469644503927;

// Independently computed roots of 16z^3 - 11z^2 - 2z + 1, the nontrivial
// factor of the |eta| = 1 class polynomial of the batch spec below.
const double kCubic1 = 0.74248160508662879573;
const double kCubic2 = 0.26394171765564383584;
const double kCubic3 = -0.31892332274227263152;

ProcessSpec batch_spec() {
  // c = 2 servers, batches of size 2 at rate 1, phase rates 6 and 2.
  return preset_hypo2_batch(2, {0.0, 1.0}, {6.0, 6.0}, {2.0, 2.0});
}

ProcessSpec single_plane_spec() {
  return preset_erlang2_hetero(1, 1.0, {3.0});
}

bool has_root(const std::vector<RootRecord>& rs, double want, double tol) {
  return std::any_of(rs.begin(), rs.end(), [&](const RootRecord& r) {
    return std::abs(r.beta0 - Complex(want, 0)) < tol;
  });
}

}  // namespace

TEST_CASE("sign vectors enumerate the branch choices") {
  SignVector s = SignVector::from_minus_mask(0b010, 3);
  REQUIRE(s.c() == 3);
  CHECK(s.x[0] == 1);
  CHECK(s.x[1] == -1);
  CHECK(s.x[2] == 1);
  CHECK(s.minus_count() == 1);
  CHECK(s.eta() == doctest::Approx(-1.0 / 3.0));

  CHECK(SignVector::from_minus_mask(0, 2).eta() == doctest::Approx(-1.0));
  CHECK(SignVector::from_minus_mask(3, 2).eta() == doctest::Approx(1.0));
  CHECK(SignVector::from_minus_mask(1, 2).eta() == doctest::Approx(0.0));
  CHECK(SignVector::from_minus_mask(3, 2).minus_count() == 2);
}

TEST_CASE("elementary symmetric polynomials") {
  auto e = elementary_symmetric({{2, 0}, {3, 0}, {4, 0}});
  REQUIRE(e.size() == 4);
  CHECK(std::abs(e[0] - Complex(1, 0)) < 1e-14);
  CHECK(std::abs(e[1] - Complex(9, 0)) < 1e-14);
  CHECK(std::abs(e[2] - Complex(26, 0)) < 1e-14);
  CHECK(std::abs(e[3] - Complex(24, 0)) < 1e-14);

  auto e0 = elementary_symmetric({});
  REQUIRE(e0.size() == 1);
  CHECK(std::abs(e0[0] - Complex(1, 0)) < 1e-15);

  // A conjugate pair plus a real value.
  auto ec = elementary_symmetric({{0.5, 0.2}, {0.5, -0.2}, {2, 0}});
  CHECK(std::abs(ec[1] - Complex(3, 0)) < 1e-14);
  CHECK(std::abs(ec[2] - Complex(2.29, 0)) < 1e-14);
  CHECK(std::abs(ec[3] - Complex(0.58, 0)) < 1e-14);
}

TEST_CASE("the scalar branch equation vanishes at its closed-form roots") {
  GeneratingFunctions gf = generating_functions(single_plane_spec());
  double rs = gf.rate_scale();

  SignVector plus = SignVector::from_minus_mask(0, 1);
  SignVector minus = SignVector::from_minus_mask(1, 1);

  CHECK(std::abs(branch_equation(gf, {kPlusRoot, 0}, plus)) < 1e-12 * rs);
  CHECK(std::abs(branch_equation(gf, {kMinusRoot, 0}, minus)) < 1e-12 * rs);

  // The roots do not satisfy the opposite branch.
  CHECK(std::abs(branch_equation(gf, {kPlusRoot, 0}, minus)) > 1e-3);
  CHECK(std::abs(branch_equation(gf, {kMinusRoot, 0}, plus)) > 1e-3);

  // z = 1 is always a root of the all-plus branch (rate conservation).
  CHECK(std::abs(branch_equation(gf, {1, 0}, plus)) < 1e-12 * rs);
}

TEST_CASE("single-positive-jump root search finds one root per branch") {
  GeneratingFunctions gf = generating_functions(single_plane_spec());

  RootRecord plus = roots_k1(gf, SignVector::from_minus_mask(0, 1));
  CHECK(std::abs(plus.beta0 - Complex(kPlusRoot, 0)) < 1e-12);
  CHECK(plus.residual_unsquared < 1e-10);
  REQUIRE(plus.signs.has_value());
  CHECK(plus.signs->x[0] == 1);

  RootRecord minus = roots_k1(gf, SignVector::from_minus_mask(1, 1));
  CHECK(std::abs(minus.beta0 - Complex(kMinusRoot, 0)) < 1e-12);

  // Guards: the search is only defined for K = 1 and matching sign length.
  GeneratingFunctions gf2 = generating_functions(batch_spec());
  CHECK_THROWS_AS(roots_k1(gf2, SignVector::from_minus_mask(0, 2)), BadParams);
  CHECK_THROWS_AS(roots_k1(gf, SignVector::from_minus_mask(0, 2)), BadParams);

  // A non-ergodic load has no root in (0,1) on the all-plus branch.
  ProcessSpec heavy = preset_erlang2_hetero(1, 10.0, {3.0});
  GeneratingFunctions gfh = generating_functions(heavy);
  REQUIRE(!check_ergodicity(gfh).ergodic);
  CHECK_THROWS_AS(roots_k1(gfh, SignVector::from_minus_mask(0, 1)), NoBracket);
}

TEST_CASE("eta-class search returns the unit-disc roots with multiplicity") {
  GeneratingFunctions gf = generating_functions(batch_spec());

  // |eta| = 1: the class polynomial factors into (z-1)(z+1/3) times a cubic
  // with three real roots; four of the five live in the unit disc.
  auto r1 = roots_symmetric(gf, 1.0);
  int total = 0;
  for (const auto& r : r1)
    if (!r.in_annulus) total += r.multiplicity;
  CHECK(total == 4);  // 2K
  CHECK(has_root(r1, kCubic1, 1e-9));
  CHECK(has_root(r1, kCubic2, 1e-9));
  CHECK(has_root(r1, kCubic3, 1e-9));
  CHECK(has_root(r1, -1.0 / 3.0, 1e-9));

  // The -1/3 root sits on a vanishing discriminant (disc = 16 z^4 (1 + 3z)).
  for (const auto& r : r1)
    if (std::abs(r.beta0 - Complex(-1.0 / 3.0, 0)) < 1e-9)
      CHECK(r.degenerate_discriminant);

  // eta = 0: the class polynomial is the unsquared Q, its roots counted twice.
  auto r0 = roots_symmetric(gf, 0.0);
  total = 0;
  for (const auto& r : r0) {
    total += r.multiplicity;
    CHECK(r.multiplicity == 2);
  }
  CHECK(total == 4);
  CHECK(has_root(r0, 1.0 / 3.0, 1e-9));
  CHECK(has_root(r0, -1.0 / 3.0, 1e-9));

  // Opposite-sign classes share the squared polynomial, hence the roots.
  auto rm = roots_symmetric(gf, -1.0);
  REQUIRE(rm.size() == r1.size());
  for (const auto& r : rm)
    CHECK(has_root(r1, r.beta0.real(), 1e-10));

  // Non-symmetric specs are rejected.
  GeneratingFunctions gfh =
      generating_functions(preset_erlang2_hetero(2, 1.0, {1.5, 2.5}));
  CHECK_THROWS_AS(roots_symmetric(gfh, 1.0), NotSymmetric);
}

TEST_CASE("deduplication merges eta classes into unique roots") {
  GeneratingFunctions gf = generating_functions(batch_spec());
  std::vector<RootRecord> all;
  for (double eta : {-1.0, 0.0, 1.0}) {
    auto rs = roots_symmetric(gf, eta);
    all.insert(all.end(), rs.begin(), rs.end());
  }

  auto uniq = dedup_roots(all, 2, 2);
  REQUIRE(uniq.size() == 6);  // K (c+1)

  // -1/3 appears once per |eta| class; +1/3 only in the eta = 0 class.
  int minus_third = 0, plus_third = 0;
  for (const auto& u : uniq) {
    if (std::abs(u.beta0 - Complex(-1.0 / 3.0, 0)) < 1e-8) {
      ++minus_third;
      CHECK(u.degenerate);
    }
    if (std::abs(u.beta0 - Complex(1.0 / 3.0, 0)) < 1e-8) {
      ++plus_third;
      CHECK(u.abs_eta == doctest::Approx(0.0));
    }
  }
  CHECK(minus_third == 2);  // |eta| = 1 and eta = 0
  CHECK(plus_third == 1);

  // Records from a single class cannot cover the expected unique count.
  auto partial = roots_symmetric(gf, 1.0);
  CHECK_THROWS_AS(dedup_roots(partial, 2, 2), UniqueCountMismatch);
}

TEST_CASE("per-plane ratios follow the quadratic closed form") {
  GeneratingFunctions gf = generating_functions(single_plane_spec());
  RootRecord rec = roots_k1(gf, SignVector::from_minus_mask(0, 1));

  ProductForm form = beta_i(gf, rec.beta0, *rec.signs);
  REQUIRE(form.betas.size() == 1);
  CHECK(form.residual < 1e-9);

  // value() is the plain product form.
  Complex want = std::pow(form.beta0, 7) * form.betas[0];
  CHECK(std::abs(form.value(WState{7, 1}) - want) < 1e-12);
  CHECK(std::abs(form.value(WState{3, 0}) - std::pow(form.beta0, 3)) < 1e-12);

  // D vanishes at the origin, so the closed form is undefined there.
  CHECK_THROWS_AS(beta_i(gf, Complex(0, 0), SignVector::from_minus_mask(0, 1)),
                  DVanishes);
  // A point that is not a root fails the residual validation.
  CHECK_THROWS_AS(beta_i(gf, Complex(0.5, 0), SignVector::from_minus_mask(0, 1)),
                  ResidualTooLarge);
}

TEST_CASE("batch-spec basis: nine rows, six distinct forms, one collapse") {
  ProcessSpec spec = batch_spec();
  GeneratingFunctions gf = generating_functions(spec);
  ProductBasis basis = build_basis(spec, gf);

  CHECK(basis.expected_forms == 8);
  CHECK(basis.forms.size() == 6);
  CHECK(basis.unique_beta0.size() == 6);
  CHECK(basis.degenerate);
  CHECK(!basis.best_effort);
  CHECK(!basis.incomplete);
  REQUIRE(!basis.offending_roots.empty());
  bool found_offender = false;
  for (auto z : basis.offending_roots)
    if (std::abs(z - Complex(-1.0 / 3.0, 0)) < 1e-6) found_offender = true;
  CHECK(found_offender);

  // The per-sign-vector table: sign pattern -> sorted decay rates.
  REQUIRE(basis.rows.size() == 9);
  std::map<unsigned, std::vector<double>> by_mask;
  for (const auto& row : basis.rows) {
    unsigned mask = 0;
    for (int i = 0; i < row.signs.c(); ++i)
      if (row.signs.x[static_cast<size_t>(i)] < 0) mask |= 1u << i;
    CHECK(std::abs(row.beta0.imag()) < 1e-12);
    by_mask[mask].push_back(row.beta0.real());
  }
  for (auto& [mask, v] : by_mask) std::sort(v.begin(), v.end());

  auto expect = [&](unsigned mask, std::vector<double> want) {
    REQUIRE(by_mask.count(mask) == 1);
    auto& got = by_mask[mask];
    std::sort(want.begin(), want.end());
    REQUIRE(got.size() == want.size());
    for (size_t i = 0; i < want.size(); ++i)
      CHECK(got[i] == doctest::Approx(want[i]).epsilon(1e-6));
  };
  expect(0b00, {kCubic1, -1.0 / 3.0});
  expect(0b01, {1.0 / 3.0, -1.0 / 3.0});
  expect(0b10, {1.0 / 3.0, -1.0 / 3.0});
  expect(0b11, {kCubic2, kCubic3, -1.0 / 3.0});

  // Every row's ratios obey beta = (1 + x sqrt(1 + 3 beta0)) / beta0, the
  // closed form for these rates (F = 4z^2, A = 6z^2, D = 2z^3).
  for (const auto& row : basis.rows) {
    double r = row.beta0.real();
    double s = std::sqrt(1.0 + 3.0 * r);
    REQUIRE(row.betas.size() == 2);
    for (int i = 0; i < 2; ++i) {
      double want = (1.0 + row.signs.x[static_cast<size_t>(i)] * s) / r;
      CHECK(std::abs(row.betas[static_cast<size_t>(i)] - Complex(want, 0)) <
            1e-6);
    }
  }
}

TEST_CASE("single-jump basis is complete and validated") {
  ProcessSpec spec = preset_erlang2_hetero(2, 1.0, {1.5, 2.5});
  GeneratingFunctions gf = generating_functions(spec);
  ProductBasis basis = build_basis(spec, gf);

  CHECK(basis.expected_forms == 4);
  REQUIRE(basis.forms.size() == 4);
  CHECK(!basis.degenerate);
  CHECK(!basis.best_effort);
  CHECK(!basis.incomplete);
  CHECK(basis.independence_condition > 0);
  CHECK(basis.independence_condition < 1e6);

  std::vector<bool> seen(4, false);
  for (const auto& f : basis.forms) {
    CHECK(f.residual < 1e-9);
    CHECK(std::abs(f.beta0.imag()) < 1e-12);
    CHECK(f.beta0.real() > 0.0);
    CHECK(f.beta0.real() < 1.0);
    unsigned mask = 0;
    for (int i = 0; i < f.signs.c(); ++i)
      if (f.signs.x[static_cast<size_t>(i)] < 0) mask |= 1u << i;
    seen[mask] = true;
  }
  CHECK(std::all_of(seen.begin(), seen.end(), [](bool b) { return b; }));
}

TEST_CASE("heterogeneous batch spec falls back to the best-effort search") {
  ProcessSpec spec = preset_hypo2_batch(2, {0.0, 0.5}, {6.0, 4.0}, {2.0, 2.0});
  GeneratingFunctions gf = generating_functions(spec);
  ProductBasis basis = build_basis(spec, gf);

  CHECK(basis.best_effort);
  CHECK(!basis.incomplete);
  CHECK(!basis.degenerate);
  CHECK(basis.expected_forms == 8);
  CHECK(basis.forms.size() == 8);
  for (const auto& f : basis.forms) CHECK(f.residual < 1e-9);
}

TEST_CASE("identical phase rates zero out F exactly") {
  ProcessSpec spec = preset_hypo2_batch(2, {0.0, 0.3}, {1.7, 1.7}, {1.7, 1.7});
  GeneratingFunctions gf = generating_functions(spec);

  // F == 0 and disc == 4 mu^2 z^{2K+1} identically.
  for (Complex z : {Complex(0.37, 0.21), Complex(-0.5, 0.1), Complex(0.9, 0)}) {
    CHECK(std::abs(gf.plane[0].F(z)) < 1e-13);
    CHECK(std::abs(gf.plane[0].disc(z) - 4.0 * 1.7 * 1.7 * std::pow(z, 5)) <
          1e-13);
  }

  // The basis is nevertheless complete: the discriminant vanishes only at 0.
  ProductBasis basis = build_basis(spec, gf);
  CHECK(basis.forms.size() == 8);
  CHECK(!basis.degenerate);
  CHECK(!basis.best_effort);
}

TEST_CASE("aggregation collapses a symmetric basis") {
  ProcessSpec spec = preset_hypo2_batch(2, {0.3, 0.3}, {2.0, 2.0}, {3.0, 3.0});
  GeneratingFunctions gf = generating_functions(spec);
  ProductBasis basis = build_basis(spec, gf);
  REQUIRE(!basis.degenerate);

  AggregatedBasis agg = aggregate(basis, gf);
  REQUIRE(agg.entries.size() == 6);  // K (c+1)

  for (const auto& entry : agg.entries) {
    REQUIRE(entry.omega.size() == 3);  // m = 0..c
    CHECK(std::abs(entry.omega[0] - Complex(1, 0)) < 1e-14);
    REQUIRE(entry.root_class >= 0);

    // omega must be the elementary symmetric polynomials of the ratios of a
    // representative form of the same class.
    const ProductForm* rep = nullptr;
    for (const auto& f : basis.forms)
      if (f.root_class == entry.root_class) {
        rep = &f;
        break;
      }
    REQUIRE(rep != nullptr);
    auto want = elementary_symmetric(rep->betas);
    for (size_t m = 0; m < want.size(); ++m)
      CHECK(std::abs(entry.omega[m] - want[m]) < 1e-9);
  }

  // Guards.
  ProcessSpec het = preset_erlang2_hetero(2, 1.0, {1.5, 2.5});
  GeneratingFunctions gfh = generating_functions(het);
  ProductBasis bh = build_basis(het, gfh);
  CHECK_THROWS_AS(aggregate(bh, gfh), NotSymmetric);

  ProcessSpec degen = batch_spec();
  GeneratingFunctions gfd = generating_functions(degen);
  ProductBasis bd = build_basis(degen, gfd);
  CHECK_THROWS_AS(aggregate(bd, gfd), DegenerateBasisInput);
}
