#pragma once

#include <optional>
#include <string>
#include <vector>

#include "prodform/model.hpp"
#include "prodform/options.hpp"

namespace prodform {

/// One +/-1 branch choice per plane.
struct SignVector {
  std::vector<int> x;  // entries are +1 or -1

  int c() const { return static_cast<int>(x.size()); }
  /// eta = -(1/c) * sum_i x_i; ranges over {-1, -1+2/c, ..., 1}.
  double eta() const;
  int minus_count() const;

  /// Enumerate a sign vector from a bitmask (bit i set <=> x_i = -1).
  static SignVector from_minus_mask(unsigned mask, int c);
};

/// A candidate decay rate beta0 together with provenance and diagnostics.
struct RootRecord {
  Complex beta0;
  double eta = 0.0;                  ///< eta of the producing equation
  std::optional<SignVector> signs;   ///< set when found by the per-sign search
  double residual_unsquared = 0;     ///< |sum_i h_i(beta0)| / rate scale
  double residual_squared = 0;       ///< residual of the producing polynomial
  int multiplicity = 1;
  bool degenerate_discriminant = false;  ///< |F^2 + 4AD| ~ 0 at beta0
  bool d_vanishes = false;               ///< |D(beta0)| ~ 0
  bool in_annulus = false;  ///< |beta0| in [1 - unit_margin, 1): excluded, flagged
};

/// A deduplicated root: one entry per (beta0, |eta| class).
struct UniqueRoot {
  Complex beta0;
  double abs_eta = 0;
  int multiplicity = 1;
  bool degenerate = false;
  bool d_vanishes = false;
};

/// One product form beta0^{n0} * prod_i beta_i^{n_i}.
struct ProductForm {
  Complex beta0;
  std::vector<Complex> betas;
  std::vector<Complex> discriminants;  ///< F_i^2 + 4 A_i D_i at beta0
  SignVector signs;
  double eta = 0;
  int root_class = -1;  ///< index into ProductBasis::unique_beta0
  double residual = 0;  ///< max inner-equation residual over the checked states

  Complex value(const WState& s) const;
};

/// Per-sign-vector listing used for table output; duplicates across sign
/// vectors are kept here (but collapsed in ProductBasis::forms).
struct BasisRow {
  SignVector signs;
  Complex beta0;
  std::vector<Complex> betas;
};

struct ProductBasis {
  std::vector<ProductForm> forms;        ///< distinct validated forms
  std::vector<BasisRow> rows;            ///< per-sign-vector expansion
  std::vector<UniqueRoot> unique_beta0;  ///< distinct roots (with class info)
  int expected_forms = 0;                ///< 2^c * K
  bool degenerate = false;  ///< fewer distinct forms than expected (collapsed)
  bool best_effort = false;  ///< produced by the non-symmetric K>=2 search
  bool incomplete = false;   ///< best-effort search found fewer than expected
  std::vector<Complex> offending_roots;  ///< degenerate-discriminant roots
  std::vector<std::string> diagnostics;
  double independence_condition = 0;  ///< cond. of the sampled evaluation matrix
};

/// Aggregated view of a symmetric basis: beta0 plus the vector of elementary
/// symmetric polynomials omega(m) of the per-plane ratios, m = 0..c.
struct AggregatedEntry {
  Complex beta0;
  std::vector<Complex> omega;
  int root_class = -1;
};

struct AggregatedBasis {
  std::vector<AggregatedEntry> entries;
};

// --- operations ---------------------------------------------------------------

/// Scalar branch equation sum_i h_i(beta) with h_i = x_i sqrt(F_i^2 + 4 A_i D_i)
/// + B_i + C_i - beta^K S_i, evaluated with the principal square root.
Complex branch_equation(const GeneratingFunctions& gf, Complex beta,
                        const SignVector& signs);

/// Find the unique root in (0,1) of the branch equation for one sign vector.
/// Requires K = 1 and an ergodic spec.  Bracketing grid plus Brent refinement;
/// throws NoBracket / MultipleRoots on failure.
RootRecord roots_k1(const GeneratingFunctions& gf, const SignVector& signs,
                    const SolverOptions& opts = {});

/// All unit-disc roots of the squared branch equation for one eta class of a
/// symmetric spec.  Returns 2K roots (counted with multiplicity; the eta = 0
/// class yields K double roots).  Roots in the margin annulus are returned
/// flagged but not counted.  Throws RootCountMismatch when the count is off.
std::vector<RootRecord> roots_symmetric(const GeneratingFunctions& gf, double eta,
                                        const SolverOptions& opts = {});

/// Merge records across the +eta/-eta class pairs; idempotent.  Returns
/// exactly K(c+1) unique roots for a symmetric spec or throws
/// UniqueCountMismatch.
std::vector<UniqueRoot> dedup_roots(const std::vector<RootRecord>& records, int c,
                                    int K, const SolverOptions& opts = {});

/// Closed-form per-plane ratios beta_i for a given root and sign vector, with
/// residual validation.  Throws DVanishes or ResidualTooLarge.
ProductForm beta_i(const GeneratingFunctions& gf, Complex beta0,
                   const SignVector& signs, const SolverOptions& opts = {});

/// Full basis construction: per-sign-vector search for K = 1, eta-class search
/// plus deduplication for symmetric specs, and a best-effort product-polynomial
/// search otherwise.  Degeneracy and incompleteness are reported as flags.
ProductBasis build_basis(const ProcessSpec& spec, const GeneratingFunctions& gf,
                         const SolverOptions& opts = {});

/// Collapse a non-degenerate symmetric basis to its K(c+1) aggregated entries.
AggregatedBasis aggregate(const ProductBasis& basis,
                          const GeneratingFunctions& gf,
                          const SolverOptions& opts = {});

/// Elementary symmetric polynomials e_0..e_n of the given values, via the
/// stable one-factor-at-a-time recurrence.
std::vector<Complex> elementary_symmetric(const std::vector<Complex>& values);

}  // namespace prodform
