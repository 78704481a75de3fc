#pragma once

#include <complex>
#include <vector>

namespace prodform::poly {

using Complex = std::complex<double>;
using RVec = std::vector<double>;  ///< coeffs[i] multiplies z^i

RVec add(const RVec& p, const RVec& q);
RVec sub(const RVec& p, const RVec& q);
RVec mul(const RVec& p, const RVec& q);
RVec scale(RVec p, double s);

/// Drop trailing coefficients with |c| <= eps * max|c|.
RVec trim(RVec p, double rel_eps = 1e-13);

int degree(const RVec& p);  // -1 for the zero polynomial

Complex eval(const RVec& p, Complex z);
Complex eval_deriv(const RVec& p, Complex z);

/// All complex roots via the companion matrix, Newton-polished and with
/// conjugate pairs symmetrized (coefficients are real).
std::vector<Complex> roots(const RVec& p);

/// Newton-polish a single root candidate of p.
Complex polish(const RVec& p, Complex z0, int iters = 8);

}  // namespace prodform::poly
