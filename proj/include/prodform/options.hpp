#pragma once

namespace prodform {

/// Numeric knobs shared across the pipeline.  Residuals are reported relative
/// to the total rate mass of the spec (sum of per-plane rate totals), so the
/// tolerances below are scale-free.
struct SolverOptions {
  double root_tol = 1e-12;     ///< residual tolerance for accepted roots
  double form_tol = 1e-9;      ///< inner-equation residual tolerance per form
  double dedup_tol = 1e-8;     ///< two roots/forms closer than this are one
  double degen_tol = 1e-8;     ///< |discriminant| below this is degenerate
  double unit_margin = 1e-10;  ///< roots must satisfy |z| < 1 - unit_margin
  double cond_max = 1e12;      ///< boundary-system condition number ceiling
  double imag_tol = 1e-9;      ///< largest imaginary part a probability may carry
  int bracket_grid = 1024;     ///< initial bracketing grid for the K=1 search
};

}  // namespace prodform
