#include <algorithm>
#include <cmath>
#include <complex>
#include <vector>

#include <doctest.h>

#include "prodform/polynomial.hpp"

using namespace prodform::poly;
using prodform::poly::Complex;

namespace {

bool contains_root(const std::vector<Complex>& roots, Complex want,
                   double tol = 1e-10) {
  return std::any_of(roots.begin(), roots.end(),
                     [&](Complex r) { return std::abs(r - want) < tol; });
}

}  // namespace

TEST_CASE("arithmetic on coefficient vectors") {
  RVec p = {1, 2, 3};      // 1 + 2z + 3z^2
  RVec q = {0, -2, 0, 4};  // -2z + 4z^3

  RVec s = add(p, q);
  REQUIRE(s.size() == 4);
  CHECK(s[0] == 1);
  CHECK(s[1] == 0);
  CHECK(s[2] == 3);
  CHECK(s[3] == 4);

  RVec d = sub(p, q);
  CHECK(d[1] == 4);
  CHECK(d[3] == -4);

  // (1 + z)(1 - z) = 1 - z^2
  RVec m = mul({1, 1}, {1, -1});
  REQUIRE(m.size() == 3);
  CHECK(m[0] == 1);
  CHECK(m[1] == 0);
  CHECK(m[2] == -1);

  RVec sc = scale({1, 2, 3}, -2);
  CHECK(sc[2] == -6);

  CHECK(degree({0, 0, 0}) == -1);
  CHECK(degree({5}) == 0);
  CHECK(degree({0, 0, 7}) == 2);
}

TEST_CASE("trim removes negligible leading coefficients") {
  RVec p = trim({1, 2, 1e-30});
  CHECK(degree(p) == 1);
  // Relative threshold: small absolute values survive when everything is small.
  RVec q = trim({1e-20, 2e-20});
  CHECK(degree(q) == 1);
  RVec z = trim({0, 0});
  CHECK(degree(z) == -1);
}

TEST_CASE("evaluation matches Horner expansion") {
  RVec p = {2, -3, 0, 5};  // 2 - 3z + 5z^3
  Complex z(0.7, -0.2);
  Complex direct = 2.0 - 3.0 * z + 5.0 * z * z * z;
  CHECK(std::abs(eval(p, z) - direct) < 1e-14);
  Complex ddirect = -3.0 + 15.0 * z * z;
  CHECK(std::abs(eval_deriv(p, z) - ddirect) < 1e-14);

  CHECK(std::abs(eval({}, z)) == 0.0);
  CHECK(std::abs(eval_deriv({4.0}, z)) == 0.0);
}

TEST_CASE("companion-matrix roots recover known factorizations") {
  // (z-1)(z-2)(z-3) = -6 + 11z - 6z^2 + z^3
  auto r = roots({-6, 11, -6, 1});
  REQUIRE(r.size() == 3);
  CHECK(contains_root(r, {1, 0}));
  CHECK(contains_root(r, {2, 0}));
  CHECK(contains_root(r, {3, 0}));
  for (auto z : r) CHECK(std::abs(z.imag()) < 1e-12);

  // z^2 + 1: a conjugate pair, symmetrized exactly.
  auto ri = roots({1, 0, 1});
  REQUIRE(ri.size() == 2);
  CHECK(contains_root(ri, {0, 1}));
  CHECK(contains_root(ri, {0, -1}));
  CHECK(ri[0].real() == ri[1].real());
  CHECK(ri[0].imag() == -ri[1].imag());

  // Scale invariance: the roots of 7p are the roots of p.
  auto rs = roots(scale({-6, 11, -6, 1}, 7));
  REQUIRE(rs.size() == 3);
  CHECK(contains_root(rs, {2, 0}));

  // Degenerate inputs.
  CHECK(roots({}).empty());
  CHECK(roots({4.0}).empty());
  CHECK(roots({0, 0, 0}).empty());

  // Linear factor.
  auto rl = roots({-1.5, 3.0});
  REQUIRE(rl.size() == 1);
  CHECK(std::abs(rl[0] - Complex(0.5, 0)) < 1e-14);
}

TEST_CASE("roots of a clustered quintic stay accurate") {
  // (z - 0.3)^2 (z + 0.9) (z^2 + 0.25):
  RVec p = mul(mul({0.09, -0.6, 1.0}, {0.9, 1.0}), {0.25, 0.0, 1.0});
  auto r = roots(p);
  REQUIRE(r.size() == 5);
  CHECK(contains_root(r, {-0.9, 0}, 1e-9));
  CHECK(contains_root(r, {0, 0.5}, 1e-9));
  CHECK(contains_root(r, {0, -0.5}, 1e-9));
  // The double root is found twice (looser tolerance: multiplicity 2 halves
  // the attainable accuracy).
  int near_03 = 0;
  for (auto z : r)
    if (std::abs(z - Complex(0.3, 0)) < 1e-6) ++near_03;
  CHECK(near_03 == 2);
}

TEST_CASE("polish refines a perturbed root") {
  RVec p = {-6, 11, -6, 1};
  Complex z = polish(p, Complex(2.1, 0.05));
  CHECK(std::abs(z - Complex(2, 0)) < 1e-12);
  // Polishing an exact root leaves it in place.
  Complex w = polish(p, Complex(3.0, 0.0));
  CHECK(std::abs(w - Complex(3, 0)) < 1e-13);
}
